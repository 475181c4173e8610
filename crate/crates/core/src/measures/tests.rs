use super::*;
use crate::group_core::{EnumerationMode, Freeness, GeneratorSet, GroupElement, Letter};
use alloc::vec;
use proptest::prelude::*;

fn sanov() -> GeneratorSet {
    GeneratorSet::new(vec![
        GroupElement::sl2q(RationalMat2::from_ints(1, 2, 0, 1)).unwrap(),
        GroupElement::sl2q(RationalMat2::from_ints(1, 0, 2, 1)).unwrap(),
    ])
    .unwrap()
    .with_freeness(Freeness::Assumed)
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Counts the letter sequences of length `m` over `2k` letters whose free
/// reduction is empty, by exhaustive enumeration.
fn identity_sequences(k: usize, m: usize) -> u64 {
    let total = (2 * k).pow(m as u32);
    let mut count = 0;
    for mut code in 0..total {
        let mut stack: Vec<u16> = Vec::new();
        for _ in 0..m {
            let l = (code % (2 * k)) as u16;
            code /= 2 * k;
            if stack.last() == Some(&(l ^ 1)) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        if stack.is_empty() {
            count += 1;
        }
    }
    count as u64
}

#[test]
fn symmetrize_examples() {
    let mu = AtomicMeasure::symmetrize(&sanov(), KeyMode::Word).unwrap();
    assert_eq!(mu.len(), 4);
    for k in mu.keys() {
        assert_eq!(mu.exact_weight(k).unwrap(), rat(1, 4));
    }
    assert!(mu.is_symmetric());
    let minus = GroupElement::su2(C64::new(-1.0, 0.0), C64::new(0.0, 0.0)).unwrap();
    let gens = GeneratorSet::new(vec![minus]).unwrap();
    let q = AtomicMeasure::symmetrize(&gens, KeyMode::Quantized { resolution: DEFAULT_RESOLUTION }).unwrap();
    assert_eq!(q.len(), 1);
    assert!((q.total_mass() - 1.0).abs() < 1e-15);
    let unknown = GeneratorSet::new(sanov().elements().to_vec()).unwrap();
    assert!(AtomicMeasure::symmetrize(&unknown, KeyMode::Word).is_err());
}

use crate::group_core::C64;

#[test]
fn square_of_free_uniform() {
    let mu = AtomicMeasure::symmetrize(&sanov(), KeyMode::Word).unwrap();
    let caps = MeasureCaps::default();
    let m2 = mu.convolve(&mu, &caps).unwrap();
    assert_eq!(m2.len(), 13);
    assert_eq!(m2.exact_weight(&m2.identity_key()).unwrap(), rat(1, 4));
    for k in m2.keys().iter().filter(|k| **k != m2.identity_key()) {
        assert_eq!(m2.exact_weight(k).unwrap(), rat(1, 16));
    }
    assert_eq!(m2.exact_total().unwrap(), rat(1, 1));
    // atoms evaluate to the product matrices
    let g = sanov();
    for i in 0..m2.len() {
        let AtomKey::Word(w) = &m2.keys()[i] else { panic!() };
        assert!(g.evaluate(w).unwrap().matrix().dist(&m2.matrices()[i]) < 1e-12);
    }
}

#[test]
fn return_probabilities_match_enumeration() {
    let mu = AtomicMeasure::symmetrize(&sanov(), KeyMode::Word).unwrap();
    let curve = mu.return_probability_curve(8, &MeasureCaps::default()).unwrap();
    for (m, v) in &curve {
        let count = identity_sequences(2, *m);
        assert_eq!(v.exact, rat(count as i64, 4i64.pow(*m as u32)), "m = {m}");
        assert!(v.value <= kesten_radius(2).powi(*m as i32) + 1e-15);
        if m % 2 == 1 {
            assert!(v.exact.is_zero());
        }
    }
    assert_eq!(curve[4].1.exact, rat(7, 64));
    // exact-matrix keys on a free pair give the same curve
    let ex = AtomicMeasure::symmetrize(&sanov(), KeyMode::ExactMatrix).unwrap();
    let c2 = ex.return_probability_curve(6, &MeasureCaps::default()).unwrap();
    for (a, b) in c2.iter().zip(&curve) {
        assert_eq!(a.1.exact, b.1.exact);
    }
    // and integer entries make quantized keys exact too
    let q = AtomicMeasure::symmetrize(&sanov(), KeyMode::Quantized { resolution: DEFAULT_RESOLUTION }).unwrap();
    let q4 = q.power(4, &MeasureCaps::default()).unwrap();
    assert!((q4.weight(&q4.identity_key()) - 7.0 / 64.0).abs() < 1e-15);
}

#[test]
fn three_generators_and_twelve_steps() {
    let gens = GeneratorSet::new(vec![
        GroupElement::sl2q(RationalMat2::from_ints(1, 3, 0, 1)).unwrap(),
        GroupElement::sl2q(RationalMat2::from_ints(1, 0, 3, 1)).unwrap(),
        GroupElement::sl2q(RationalMat2::from_ints(2, 3, 1, 2)).unwrap(),
    ])
    .unwrap()
    .with_freeness(Freeness::Assumed);
    let mu = AtomicMeasure::symmetrize(&gens, KeyMode::Word).unwrap();
    let curve = mu.return_probability_curve(6, &MeasureCaps::default()).unwrap();
    for (m, v) in &curve {
        assert_eq!(v.exact, rat(identity_sequences(3, *m) as i64, 6i64.pow(*m as u32)));
    }
    let mu2 = AtomicMeasure::symmetrize(&sanov(), KeyMode::Word).unwrap();
    let v12 = mu2.return_probability_curve(12, &MeasureCaps::default()).unwrap()[12].1.value;
    let rate = v12.powf(1.0 / 12.0);
    let kr = kesten_radius(2);
    assert!(rate >= 0.70 * kr && rate <= kr);
}

#[test]
fn squaring_matches_linear_powers() {
    let mu = AtomicMeasure::symmetrize(&sanov(), KeyMode::Word).unwrap();
    let caps = MeasureCaps::default();
    let lin = mu.powers(7, &caps).unwrap();
    for n in 0..=7 {
        let sq = mu.power_by_squaring(n, &caps).unwrap();
        assert_eq!(sq.keys(), lin[n].keys());
        for k in sq.keys() {
            assert_eq!(sq.exact_weight(k), lin[n].exact_weight(k));
        }
    }
    let tight = MeasureCaps { atoms: 10_000, pairs: 100 };
    let fallback = mu.power(6, &tight).unwrap();
    assert_eq!(fallback.keys(), lin[6].keys());
    let small = MeasureCaps { atoms: 50, pairs: 100 };
    assert!(matches!(mu.power(6, &small), Err(Error::CapExceeded { .. })));
}

#[test]
fn associativity_and_symmetry() {
    let mu = AtomicMeasure::symmetrize(&sanov(), KeyMode::Word).unwrap();
    let caps = MeasureCaps::default();
    let m2 = mu.convolve(&mu, &caps).unwrap();
    let left = m2.convolve(&mu, &caps).unwrap();
    let right = mu.convolve(&m2, &caps).unwrap();
    assert_eq!(left.keys(), right.keys());
    for k in left.keys() {
        assert_eq!(left.exact_weight(k), right.exact_weight(k));
    }
    assert!(left.is_symmetric());
    let e = AtomicMeasure::dirac_identity(GroupKind::Sl2R, KeyMode::Word).unwrap();
    let me = mu.convolve(&e, &caps).unwrap();
    assert_eq!(me.keys(), mu.keys());
    let g = sanov().evaluate(&Word::parse("ab").unwrap()).unwrap();
    let h = sanov().evaluate(&Word::parse("B").unwrap()).unwrap();
    let dg = AtomicMeasure::dirac(&g, KeyMode::Word).unwrap();
    let dh = AtomicMeasure::dirac(&h, KeyMode::Word).unwrap();
    let gh = dg.convolve(&dh, &caps).unwrap();
    assert_eq!(gh.keys(), &[AtomKey::Word(Word::parse("a").unwrap())]);
}

#[test]
fn subgroup_mass_examples() {
    let kind = GroupKind::Sl2R;
    let mode = KeyMode::Quantized { resolution: DEFAULT_RESOLUTION };
    for fam in [
        SubgroupFamily::Rotation,
        SubgroupFamily::Diagonal,
        SubgroupFamily::UpperTriangular,
        SubgroupFamily::Unipotent,
    ] {
        let e = AtomicMeasure::dirac_identity(kind, mode).unwrap();
        assert_eq!(e.mass_near_subgroup(&SubgroupSpec::new(fam), 1e-6).unwrap(), 1.0);
    }
    let d = GroupElement::sl2r(2.0, 0.0, 0.0, 0.5).unwrap();
    let dm = AtomicMeasure::dirac(&d, mode).unwrap();
    assert_eq!(dm.mass_near_subgroup(&SubgroupSpec::new(SubgroupFamily::Diagonal), 0.01).unwrap(), 1.0);
    let (s, c) = core::f64::consts::FRAC_PI_4.sin_cos();
    let r = GroupElement::sl2r(c, -s, s, c).unwrap();
    let rm = AtomicMeasure::symmetrize(&GeneratorSet::new(vec![r.clone()]).unwrap(), mode).unwrap();
    assert_eq!(rm.mass_near_subgroup(&SubgroupSpec::new(SubgroupFamily::Diagonal), 0.1).unwrap(), 0.0);
    assert!((rm.support_radius() - r.norm_to_identity()).abs() < 1e-15);
    assert_eq!(AtomicMeasure::dirac_identity(kind, mode).unwrap().support_radius(), 0.0);
}

#[test]
fn enumeration_and_power_support_agree() {
    let gens = sanov();
    let mu = AtomicMeasure::symmetrize(&gens, KeyMode::Word).unwrap();
    let m3 = mu.power(3, &MeasureCaps::default()).unwrap();
    // support of mu^3 is the reduced words of length 3 and 1
    let mut want: Vec<AtomKey> = crate::group_core::enumerate_words(&gens, 3, EnumerationMode::UpToLength, 1000)
        .unwrap()
        .filter(|w| w.len() % 2 == 1)
        .map(AtomKey::Word)
        .collect();
    want.sort();
    assert_eq!(m3.keys(), want.as_slice());
    let _ = Letter::new(0, false);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn powers_inequality_holds_exactly(n in 1usize..4, mask in proptest::collection::vec(any::<bool>(), 64)) {
        let mu = AtomicMeasure::symmetrize(&sanov(), KeyMode::Word).unwrap();
        let caps = MeasureCaps::default();
        let mn = mu.power(n, &caps).unwrap();
        let m2n = mu.power(2 * n, &caps).unwrap();
        let subset: Vec<usize> = (0..mn.len()).filter(|&i| mask[i % 64]).collect();
        prop_assume!(!subset.is_empty());
        let (lhs, rhs) = mn.powers_inequality(&m2n, &subset).unwrap();
        prop_assert!(lhs <= rhs);
    }

    #[test]
    fn convolution_preserves_mass_in_quantized_mode(t in 0.05f64..1.0, u in 0.05f64..1.0) {
        let g = GroupElement::sl2r(1.0, t, 0.0, 1.0).unwrap();
        let h = GroupElement::sl2r(1.0 + u, u, 1.0, 1.0).unwrap();
        let gens = GeneratorSet::new(vec![g, h]).unwrap();
        let mu = AtomicMeasure::symmetrize(&gens, KeyMode::Quantized { resolution: DEFAULT_RESOLUTION }).unwrap();
        let m3 = mu.power(3, &MeasureCaps::default()).unwrap();
        prop_assert!((m3.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(m3.len() <= 64);
    }
}

proptest! {
    #[test]
    fn su2_subgroup_distance_matches_grid_minimum(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, w in -1.0f64..1.0,
    ) {
        let n = (x * x + y * y + z * z + w * w).sqrt();
        prop_assume!(n > 1e-3);
        let g = GroupElement::su2(C64::new(x / n, y / n), C64::new(z / n, w / n)).unwrap();
        let grid = 20_000;
        let brute = |f: &dyn Fn(f64) -> Mat2| {
            (0..grid)
                .map(|k| g.matrix().dist(&f(core::f64::consts::TAU * k as f64 / grid as f64)))
                .fold(f64::INFINITY, f64::min)
        };
        for (fam, f) in [
            (SubgroupFamily::Diagonal, &subgroup::torus as &dyn Fn(f64) -> Mat2),
            (SubgroupFamily::Rotation, &subgroup::rotation),
        ] {
            let d = SubgroupSpec::new(fam).distance(&g).unwrap();
            let b = brute(f);
            prop_assert!(d <= b + 1e-12);
            prop_assert!(b - d < 1e-3, "{fam:?} {d} {b}");
        }
    }
}
