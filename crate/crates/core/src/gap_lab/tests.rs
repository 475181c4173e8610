use super::*;
use crate::discrete_l2::{su2_exp, Region};
use crate::group_core::{presets, GeneratorSet};
use crate::linalg::weighted_dot;
use crate::measures::KeyMode;

fn rotation(axis: [f64; 3], angle: f64) -> GroupElement {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let v = [axis[0] * angle / n, axis[1] * angle / n, axis[2] * angle / n];
    GroupElement::new(GroupKind::Su2, su2_exp(v)).unwrap()
}

fn small_rotations(angle: f64) -> GeneratorSet {
    GeneratorSet::new(vec![
        rotation([1.0, 2f64.sqrt(), 3f64.sqrt()], angle),
        rotation([-0.7, 0.3, 1.1], 0.8 * angle),
    ])
    .unwrap()
}

fn sl2r_box(half_width: f64, dn: f64) -> Net {
    Net::build(Region::Sl2rBox { half_width }, dn).unwrap()
}

fn local_s() -> Vec<GroupElement> {
    presets::sanov_local(0.2).unwrap().symmetric_closure()
}

#[test]
fn identity_has_no_gap() {
    let net = Net::build(Region::Su2Ball { radius: 0.2 }, 0.05).unwrap();
    let e = GroupElement::identity(GroupKind::Su2);
    let rep = local_gap_estimate(&[e], &net, 1).unwrap();
    assert!(rep.no_gap);
    assert_eq!(rep.min_q, 0.0);
    assert!(rep.kappa_hat.is_infinite());
}

#[test]
fn one_cell_net_is_degenerate() {
    let net = Net::build(Region::Su2Ball { radius: 0.1 }, 0.5).unwrap();
    assert_eq!(net.len(), 1);
    let g = rotation([0.0, 0.0, 1.0], 0.05);
    assert!(matches!(local_gap_estimate(&[g], &net, 1), Err(Error::Degenerate(_))));
}

#[test]
fn no_overlap_is_an_error() {
    let net = Net::build(Region::Su2Ball { radius: 0.1 }, 0.03).unwrap();
    let g = rotation([0.0, 0.0, 1.0], 2.0);
    assert!(matches!(local_gap_estimate(&[g], &net, 1), Err(Error::Degenerate(_))));
}

#[test]
fn two_cell_swap_by_hand() {
    // L = 2 [[1, -1], [-1, 1]] and F = (1, -1) / sqrt 2
    let rep = local_gap_from_actions(&[vec![Some(1), Some(0)]], &[1.0, 1.0], 0).unwrap();
    assert!((rep.min_q - 4.0).abs() < 1e-12);
    assert!((rep.kappa_hat - 0.5).abs() < 1e-12);
    assert!((rep.minimiser[0] + rep.minimiser[1]).abs() < 1e-12);
}

#[test]
fn local_gap_is_stable_under_refinement() {
    let gens = local_s();
    let coarse = local_gap_estimate(&gens, &sl2r_box(0.3, 0.08), 3).unwrap();
    let fine_net = sl2r_box(0.3, 0.05);
    let fine = local_gap_estimate(&gens, &fine_net, 3).unwrap();
    assert!(coarse.kappa_hat.is_finite() && fine.kappa_hat.is_finite());
    assert!((coarse.kappa_hat / fine.kappa_hat - 1.0).abs() < 0.1, "{} {}", coarse.kappa_hat, fine.kappa_hat);
    let w = fine_net.weights();
    let one = vec![1.0; w.len()];
    assert!(weighted_dot(w, &fine.minimiser, &one).abs() < 1e-10);
    assert!((weighted_dot(w, &fine.minimiser, &fine.minimiser) - 1.0).abs() < 1e-9);
    assert!(fine.residual < 1e-6);
    let k = gens.len() as f64;
    assert!((fine.kappa_sum_range.0 * k.sqrt() - fine.kappa_hat).abs() < 1e-12);
}

#[test]
fn gap_does_not_depend_on_the_box() {
    let gens = local_s();
    let a = local_gap_estimate(&gens, &sl2r_box(0.3, 0.08), 1).unwrap();
    let b = local_gap_estimate(&gens, &sl2r_box(0.25, 0.08), 1).unwrap();
    assert_eq!(a.no_gap, b.no_gap);
    assert!(!a.no_gap);
}

fn cycle(n: usize) -> CellAction {
    (0..n).map(|i| Some(((i + 1) % n) as u32)).collect()
}

#[test]
fn product_of_cycles_has_a_gap() {
    let (p, q) = (3usize, 4usize);
    let idx = |i: usize, j: usize| (i * q + j) as u32;
    let left: CellAction = (0..p * q).map(|c| Some(idx((c / q + 1) % p, c % q))).collect();
    let right: CellAction = (0..p * q).map(|c| Some(idx(c / q, (c % q + 1) % q))).collect();
    let a = local_gap_from_actions(&[cycle(p)], &vec![1.0; p], 0).unwrap();
    let b = local_gap_from_actions(&[cycle(q)], &vec![1.0; q], 0).unwrap();
    let ab = local_gap_from_actions(&[left, right], &vec![1.0; p * q], 0).unwrap();
    assert!(!a.no_gap && !b.no_gap && !ab.no_gap);
    assert!(ab.min_q <= a.min_q.min(b.min_q) + 1e-9);
}

#[test]
fn restricted_gap_of_a_dirac_is_everything() {
    let net = Net::build(Region::Su2Ball { radius: 0.2 }, 0.05).unwrap();
    let mu = AtomicMeasure::dirac_identity(GroupKind::Su2, KeyMode::Quantized { resolution: 1e-9 }).unwrap();
    let rg = restricted_gap(&mu, &net, 0.5, 1).unwrap();
    assert!(rg.degenerate);
    assert_eq!(rg.dim_v, net.len());
    assert_eq!(rg.residual, 0.0);
}

#[test]
fn restricted_gap_of_far_atoms_is_empty() {
    let net = Net::build(Region::Su2Ball { radius: 0.1 }, 0.03).unwrap();
    let far = GeneratorSet::new(vec![rotation([0.0, 0.0, 1.0], 2.0)]).unwrap();
    let mu = AtomicMeasure::symmetrize(&far, KeyMode::Quantized { resolution: 1e-9 }).unwrap();
    let rg = restricted_gap(&mu, &net, 0.5, 1).unwrap();
    assert_eq!(rg.dim_v, 0);
    assert_eq!(rg.residual, 0.0);
    assert!(!rg.degenerate);
}

#[test]
fn restricted_gap_residual_is_below_threshold() {
    let net = Net::build(Region::Su2Ball { radius: 0.2 }, 0.04).unwrap();
    let mu = AtomicMeasure::symmetrize(&small_rotations(0.08), KeyMode::Quantized { resolution: 1e-9 }).unwrap();
    let rg = restricted_gap(&mu, &net, 0.5, 1).unwrap();
    assert!(rg.residual < 0.5);
    assert!(rg.dim_v > 0 && rg.dim_v < net.len() / 2, "{} of {}", rg.dim_v, net.len());
    assert!(rg.singular_values.windows(2).all(|p| p[0] >= p[1]));
    assert!(restricted_gap(&mu, &net, 1.0, 1).is_err());
}

#[test]
fn walk_rejects_asymmetric_sets() {
    let net = Net::build(Region::Su2Ball { radius: 0.2 }, 0.05).unwrap();
    let gens = small_rotations(0.1);
    assert!(matches!(delayed_walk_operator(gens.elements(), &net), Err(Error::InvalidInput(_))));
}

#[test]
fn walk_is_identity_without_overlap() {
    let net = Net::build(Region::Su2Ball { radius: 0.1 }, 0.03).unwrap();
    let gens = presets::free_rotations().unwrap().symmetric_closure();
    let w = delayed_walk_operator(&gens, &net).unwrap();
    assert_eq!(w.disjoint, 4);
    assert!(w.matrix.max_abs_diff(&CsrMatrix::identity(net.len())) < 1e-15);
    let g = walk_gap(&w, 1).unwrap();
    assert!(g.no_gap);
    let e = GroupElement::identity(GroupKind::Su2);
    let w = delayed_walk_operator(&[e.clone(), e], &net).unwrap();
    assert!(w.matrix.max_abs_diff(&CsrMatrix::identity(net.len())) < 1e-15);
}

#[test]
fn walk_is_symmetric_and_stochastic() {
    let net = Net::build(Region::Su2Ball { radius: 0.25 }, 0.05).unwrap();
    let mut gens = small_rotations(0.12).symmetric_closure();
    gens.extend(presets::free_rotations().unwrap().symmetric_closure());
    let w = delayed_walk_operator(&gens, &net).unwrap();
    assert!(w.disjoint > 0);
    assert!(w.matrix.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-12));
    assert!(w.matrix.max_abs_diff(&w.matrix.transpose()) < 1e-15);
    let k = gens.len() as f64;
    let g = walk_gap(&w, 2).unwrap();
    assert!(g.spectrum_min >= -1.0 + 2.0 / k - 0.05, "{g:?}");
    assert!(g.spectrum_max <= 1.0 + 1e-6, "{g:?}");
}

#[test]
fn swap_walk_has_no_gap() {
    let p = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
    let g = walk_gap_of(&p, 0).unwrap();
    assert!((g.top - 1.0).abs() < 1e-12);
    assert!(g.no_gap);
    assert!((g.spectrum_min + 1.0).abs() < 1e-12);
}

#[test]
fn free_rotations_walk_has_a_gap() {
    let net = Net::build(Region::full_su2(), 0.3).unwrap();
    let gens = presets::free_rotations().unwrap().symmetric_closure();
    let w = delayed_walk_operator(&gens, &net).unwrap();
    let g = walk_gap(&w, 1).unwrap();
    assert!(g.gap > 1e-3, "{g:?}");
    assert!(g.spectrum_max <= 1.0 + 1e-6);
}

fn unit_interval(cells: usize) -> IntervalNet {
    IntervalNet::new(0.0, 1.0, cells).unwrap()
}

#[test]
fn identity_does_not_expand() {
    let e = GroupElement::identity(GroupKind::Sl2R);
    let cfg = ExpansionConfig { trials: 4, adversarial_rounds: 10, ..ExpansionConfig::default() };
    let rep = expansion_test(&[e], &unit_interval(256), &cfg).unwrap();
    assert_eq!(rep.kappa_hat, 0.0);
    assert!(rep.rows.iter().all(|r| r.size <= 128));
}

#[test]
fn single_cell_ratio() {
    let net = unit_interval(64);
    let s = presets::sanov_scaled(0.05).unwrap().symmetric_closure();
    for c in [0u32, 31, 63] {
        assert!(expansion_ratio(&s, &net, &[c]).unwrap() >= 1.0);
    }
    // a shift off the interval has empty image
    let g = GroupElement::sl2r(1.0, 2.0, 0.0, 1.0).unwrap();
    assert_eq!(expansion_ratio(&[g], &net, &[63]).unwrap(), 0.0);
}

#[test]
fn scaled_sanov_expands() {
    let s = presets::sanov_scaled(2f64.sqrt() / 16.0).unwrap().symmetric_closure();
    let rep = expansion_test(&s, &unit_interval(4096), &ExpansionConfig::default()).unwrap();
    assert!(rep.kappa_hat > 0.0, "{}", rep.kappa_hat);
    assert!(rep.rows.iter().all(|r| r.size <= 2048 && r.ratio >= 1.0 + rep.kappa_hat - 1e-12));
    assert_eq!(rep.monotone.tested, 4);
    assert!(rep.monotone.passed());
}

#[test]
fn poles_are_split() {
    // x -> -1/x sends (0, 1] to (-inf, -1]: nothing lands back in [0, 1]
    let g = GroupElement::sl2r(0.0, -1.0, 1.0, 0.0).unwrap();
    let net = unit_interval(16);
    assert_eq!(expansion_ratio(&[g.clone()], &net, &[3, 4, 5]).unwrap(), 0.0);
    // x -> x / (1 - 2x) has a pole at 1/2
    let h = GroupElement::sl2r(1.0, 0.0, -2.0, 1.0).unwrap();
    let all: Vec<u32> = (0..16).collect();
    let r = expansion_ratio(&[h], &net, &all).unwrap();
    assert!((r - 1.0).abs() < 1e-12, "{r}");
}
