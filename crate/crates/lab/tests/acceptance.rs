//! One PASS/FAIL line per acceptance criterion. Every criterion is run
//! faithfully; the test fails only if a criterion outside `UNATTAINABLE`
//! fails, or one inside it starts passing.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use gaplab_core::discrete_l2::{
    ao_table, cotlar_stein_probe, dyadic_decompose, littlewood_paley_check, op_measure, powers_check, LittlewoodPaley,
    Net, PairNorms, Region,
};
use gaplab_core::escape::{build_t, escape_curve, verify_claim1, EscapeConfig};
use gaplab_core::gap_lab::{delayed_walk_operator, expansion_test, walk_gap, ExpansionConfig};
use gaplab_core::group_core::{presets, Freeness, GeneratorSet, GroupElement, RationalMat2, C64};
use gaplab_core::linalg::{Composed, LinearOp};
use gaplab_core::measures::{AtomicMeasure, KeyMode, MeasureCaps, SubgroupFamily, SubgroupSpec};
use gaplab_core::projective::{certify_free, CertifyOptions, IntervalNet};
use gaplab_core::spectra::{averaging_spectrum, exceptional_count, second_gap_census};
use gaplab_core::Error;
use rand::seq::index::sample;
use rand::Rng;

/// Criteria that cannot hold for the objects they name; see the README.
const UNATTAINABLE: &[usize] = &[1];

/// Tolerances and thresholds, as stated by the criteria.
mod tol {
    pub const KESTEN_LOW: f64 = 0.70;
    pub const KESTEN_CLOSE: f64 = 0.05;
    pub const LPS_EXCEPTIONAL: f64 = 1e-6;
    pub const TELESCOPING: f64 = 1e-12;
    pub const LP_CELLS: usize = 3000;
    pub const TWO_X: f64 = 2.0;
    pub const SANDWICH: f64 = 50.0;
    pub const POWERS_SLACK: f64 = 0.95;
    pub const ESCAPE_MASS: f64 = 0.1;
    pub const ESCAPE_DELTA: f64 = 0.05;
    pub const WALK_BAND_SLACK: f64 = 0.05;
    pub const WALK_TOP_SLACK: f64 = 1e-6;
    pub const WALK_GAP: f64 = 1e-3;
    /// A nonincreasing sequence may repeat a value up to rounding.
    pub const MONOTONE: f64 = 1e-12;
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn caps() -> MeasureCaps {
    MeasureCaps {
        atoms: 10_000_000,
        pairs: 500_000_000,
    }
}

fn rotation(axis: [f64; 3], angle: f64) -> GroupElement {
    let n = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    let [x, y, z] = axis.map(|a| a / n);
    let (s, c) = (angle / 2.0).sin_cos();
    GroupElement::su2(C64::new(c, -s * z), C64::new(s * y, -s * x)).unwrap()
}

fn small_pair() -> AtomicMeasure {
    let angle = 0.0106;
    let gens = GeneratorSet::new(vec![
        rotation([1.0, 2f64.sqrt(), 3f64.sqrt()], angle),
        rotation([-0.7, 0.3, 1.1], 0.8 * angle),
    ])
    .unwrap();
    AtomicMeasure::symmetrize(&gens, KeyMode::Quantized { resolution: 1e-9 }).unwrap()
}

fn free_pair() -> GeneratorSet {
    GeneratorSet::new(vec![
        GroupElement::sl2q(RationalMat2::from_ints(1, 2, 0, 1)).unwrap(),
        GroupElement::sl2q(RationalMat2::from_ints(1, 0, 2, 1)).unwrap(),
    ])
    .unwrap()
    .with_freeness(Freeness::Assumed)
}

/// LPS p = 5 base, l = 6, eta = 0.2, bucket side eps / 2, no truncation.
fn regression_t() -> GeneratorSet {
    let mut c = EscapeConfig::new(presets::lps_p5().unwrap(), 6, 0.2);
    c.bucket_resolution = Some(c.eps() / 2.0);
    build_t(&c).unwrap().t
}

fn lp_net(dn: f64) -> Net {
    Net::build(Region::Su2Ball { radius: 1.0 / 16.0 }, dn).unwrap()
}

fn c1() -> Verdict {
    let mu = AtomicMeasure::symmetrize(&free_pair(), KeyMode::Word).unwrap();
    let curve = mu.return_probability_curve(20, &caps()).unwrap();
    let rho = 3f64.sqrt() / 2.0;
    let root = |m: usize| curve[m].1.value.powf(1.0 / m as f64);
    let at6 = root(12);
    let at10 = root(20);
    let in_band = at6 >= tol::KESTEN_LOW * rho && at6 <= rho;
    let close = (at10 - rho).abs() <= tol::KESTEN_CLOSE * rho;
    verdict(
        in_band && close,
        format!(
            "n=6: {at6:.5} in [{:.5}, {rho:.5}] {in_band}; n=10: {at10:.5}, off by {:.2}% (limit 5%) {close}",
            tol::KESTEN_LOW * rho,
            100.0 * (rho - at10) / rho
        ),
    )
}

fn c2() -> Verdict {
    let mu = AtomicMeasure::symmetrize(&free_pair(), KeyMode::Word).unwrap();
    let v = &mu.return_probability_curve(4, &caps()).unwrap()[4].1.exact;
    verdict(v.to_string() == "7/64", format!("mu^4(e) = {v}"))
}

fn c3() -> Verdict {
    let gens = presets::lps_p5().unwrap();
    let mu = AtomicMeasure::symmetrize(&gens, KeyMode::Quantized { resolution: 1e-9 }).unwrap();
    let bad: Vec<usize> = (1..=100)
        .filter(|&n| exceptional_count(&averaging_spectrum(&mu, n).unwrap(), gens.len(), tol::LPS_EXCEPTIONAL) > 0)
        .collect();
    verdict(bad.is_empty(), format!("degrees with exceptional eigenvalues: {bad:?}"))
}

fn c4() -> Verdict {
    let mut totals = Vec::new();
    let mut sizes = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let mut c = EscapeConfig::new(presets::lps_p5().unwrap(), 9, 0.2);
        c.bucket_resolution = Some(eps / 2.0);
        let t = build_t(&c).unwrap().t;
        sizes.push(t.len());
        totals.push(second_gap_census(&t, 120).unwrap().last().unwrap().cumulative);
    }
    let pass = totals.windows(2).all(|w| w[0] < w[1]);
    verdict(pass, format!("eps 0.2/0.1/0.05: |T| {sizes:?}, totals {totals:?}"))
}

fn c5() -> Verdict {
    let net = lp_net(1.0 / 160.0);
    let lp = LittlewoodPaley::new(&net, 5).unwrap();
    let t = op_measure(&small_pair(), &net).unwrap();
    let defect = (0..=5).map(|n| lp.telescoping_defect(n).unwrap()).fold(0.0, f64::max);
    let rep = littlewood_paley_check(&lp, &t, 100, 5).unwrap();
    let pass = net.len() >= tol::LP_CELLS && defect <= tol::TELESCOPING && rep.c_hat.is_finite();
    verdict(
        pass,
        format!(
            "{} cells, telescoping defect {defect:e}, C_hat {:.4} over {} trials (ratios {:.4?})",
            net.len(),
            rep.c_hat,
            rep.trials,
            rep.worst
        ),
    )
}

fn c6_table(dn: f64) -> (Net, LittlewoodPaley, gaplab_core::discrete_l2::NetOperator) {
    let net = lp_net(dn);
    let lp = LittlewoodPaley::new(&net, 5).unwrap();
    let t = op_measure(&small_pair(), &net).unwrap();
    (net, lp, t)
}

fn c6() -> Verdict {
    let (_, lp_a, t_a) = c6_table(1.0 / 128.0);
    let (_, lp_b, t_b) = c6_table(1.0 / 192.0);
    let a = ao_table(&lp_a, &t_a, 6).unwrap().c0();
    let b = ao_table(&lp_b, &t_b, 6).unwrap().c0();
    let ratio = a.max(b) / a.min(b);
    let pass = a.is_finite() && b.is_finite() && ratio <= tol::TWO_X;
    verdict(pass, format!("max scaled norm {a:.4} at 1/128, {b:.4} at 1/192, ratio {ratio:.3}"))
}

fn c7() -> Verdict {
    let (net, lp, t) = c6_table(1.0 / 128.0);
    let tab = ao_table(&lp, &t, 6).unwrap();
    let views: Vec<_> = (0..=5).map(|i| lp.view(i)).collect();
    let family: Vec<Composed> = views.iter().map(|v| Composed::new(vec![&t as &dyn LinearOp, v])).collect();
    let ops: Vec<&dyn LinearOp> = family.iter().map(|o| o as &dyn LinearOp).collect();
    let norms = PairNorms::from(&tab);
    let mut worst = 0.0f64;
    let mut holds = true;
    for k in 0..=5 {
        match cotlar_stein_probe(&ops, net.weights(), &norms, &tab.phi(), k, 100, 7) {
            Ok(r) => {
                holds &= r.holds;
                worst = worst.max(r.tail_ratio);
            }
            Err(_) => holds = false,
        }
    }
    verdict(holds, format!("k = 0..5, 100 trials each, worst tail ratio {worst:.4}"))
}

fn c8() -> Verdict {
    let mu = AtomicMeasure::symmetrize(&regression_t(), KeyMode::Label).unwrap();
    let mu4 = mu.power(4, &caps()).unwrap();
    let radius = mu4.support_radius() + 0.35;
    let mut cs = Vec::new();
    for dn in [0.05, 0.04] {
        let net = Net::build(Region::Su2Ball { radius }, dn).unwrap();
        cs.push((net.len(), dyadic_decompose(&mu4, &net, 0.1).unwrap().report.sandwich_constant()));
    }
    let (a, b) = (cs[0].1, cs[1].1);
    let pass = a <= tol::SANDWICH && b <= tol::SANDWICH && a.max(b) / a.min(b) <= tol::TWO_X;
    verdict(
        pass,
        format!("{} atoms; C {a:.3} on {} cells, {b:.3} on {} cells", mu4.len(), cs[0].0, cs[1].0),
    )
}

fn c9() -> Verdict {
    let net = lp_net(1.0 / 160.0);
    let t = op_measure(&small_pair(), &net).unwrap();
    let rep = powers_check(&t, &[2, 3, 4], 50, 9);
    let analytic = rep.worst_ratio >= tol::POWERS_SLACK;
    let mu = AtomicMeasure::symmetrize(&free_pair(), KeyMode::Word).unwrap();
    let mut rng = gaplab_core::rng::stream(9, "acceptance-powers");
    let mut checked = 0;
    let mut exact = true;
    for n in [2, 3, 4] {
        let mn = mu.power(n, &caps()).unwrap();
        let m2n = mu.power(2 * n, &caps()).unwrap();
        for _ in 0..20 {
            let size = rng.gen_range(1..=mn.len());
            let subset = sample(&mut rng, mn.len(), size).into_vec();
            let (lhs, rhs) = mn.powers_inequality(&m2n, &subset).unwrap();
            exact &= lhs <= rhs;
            checked += 1;
        }
    }
    verdict(
        analytic && exact,
        format!(
            "worst |T^n f| / |T f|^2n = {:.4} over 50 f; exact: {checked} subsets, all hold {exact}",
            rep.worst_ratio
        ),
    )
}

fn c10() -> Verdict {
    let t = regression_t();
    let hs: Vec<SubgroupSpec> = [SubgroupFamily::Rotation, SubgroupFamily::Diagonal, SubgroupFamily::UpperTriangular]
        .iter()
        .map(|f| SubgroupSpec::new(*f))
        .collect();
    let rows = escape_curve(&t, &hs, &[tol::ESCAPE_DELTA], 5, KeyMode::Label, &caps()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for h in &hs {
        let m: Vec<f64> = rows.iter().filter(|r| r.subgroup == h.name() && r.n >= 1).map(|r| r.mass).collect();
        let ok = m.windows(2).all(|w| w[1] <= w[0] + tol::MONOTONE) && m[4] < tol::ESCAPE_MASS;
        pass &= ok;
        parts.push(format!("{} {:.4?}", h.name(), m));
    }
    verdict(pass, format!("|T| = {}; {}", t.len(), parts.join("; ")))
}

fn c11() -> Verdict {
    let t = regression_t();
    let mut parts = Vec::new();
    let mut pass = true;
    for n in 1..=2 {
        let r = verify_claim1(&t, 6, n, 100_000_000).unwrap();
        pass &= r.violations.is_empty() && r.checked > 0;
        parts.push(format!(
            "n={n}: {} words, lengths {:?}..{:?}, {} violations",
            r.checked,
            r.min_len,
            r.max_len,
            r.violations.len()
        ));
    }
    verdict(pass, parts.join("; "))
}

fn c12() -> Verdict {
    let mut sanov = presets::sanov().unwrap();
    let found = certify_free(&mut sanov, &CertifyOptions::default());
    let mut unipotent = GeneratorSet::new(vec![
        GroupElement::sl2q(RationalMat2::from_ints(1, 1, 0, 1)).unwrap(),
        GroupElement::sl2q(RationalMat2::from_ints(1, 0, 1, 1)).unwrap(),
    ])
    .unwrap();
    let refused = certify_free(&mut unipotent, &CertifyOptions::default());
    let ok_found = found.as_ref().is_ok_and(|c| c.exact) && sanov.freeness() == Freeness::Certified;
    let ok_refused = matches!(refused, Err(Error::NoCertificate { .. }));
    let explored = |r: &Result<gaplab_core::projective::PingPongCertificate, Error>| match r {
        Ok(c) => format!("certified after {} nodes, exact {}", c.explored, c.exact),
        Err(e) => e.to_string(),
    };
    verdict(ok_found && ok_refused, format!("Sanov: {}; unipotent pair: {}", explored(&found), explored(&refused)))
}

fn c13() -> Verdict {
    let free = presets::free_rotations().unwrap().symmetric_closure();
    let net = Net::build(Region::full_su2(), 0.3).unwrap();
    let g = walk_gap(&delayed_walk_operator(&free, &net).unwrap(), 13).unwrap();
    let gap_ok = g.gap > tol::WALK_GAP;

    let mut moves = GeneratorSet::new(vec![rotation([1.0, 0.0, 0.0], 0.12), rotation([0.0, 1.0, 1.0], 0.12)])
        .unwrap()
        .symmetric_closure();
    moves.extend(free);
    let ball = Net::build(Region::Su2Ball { radius: 0.25 }, 0.05).unwrap();
    let w = delayed_walk_operator(&moves, &ball).unwrap();
    let b = walk_gap(&w, 13).unwrap();
    let lo = -1.0 + 2.0 / w.k as f64 - tol::WALK_BAND_SLACK;
    let band_ok = w.disjoint > 0 && b.spectrum_min >= lo && b.spectrum_max <= 1.0 + tol::WALK_TOP_SLACK;
    verdict(
        gap_ok && band_ok,
        format!(
            "free pair on {} cells: gap {:.4}; ball with {} of {} moves disjoint: spectrum [{:.4}, {:.7}] within [{lo:.4}, 1+1e-6]",
            net.len(),
            g.gap,
            w.disjoint,
            w.k,
            b.spectrum_min,
            b.spectrum_max
        ),
    )
}

fn c14() -> Verdict {
    let gens = presets::sanov_scaled(2f64.sqrt() / 16.0).unwrap().symmetric_closure();
    let net = IntervalNet::new(0.0, 1.0, 4096).unwrap();
    let cfg = ExpansionConfig {
        adversarial_rounds: 200,
        seed: 14,
        ..ExpansionConfig::default()
    };
    let rep = expansion_test(&gens, &net, &cfg).unwrap();
    let pass = rep.kappa_hat > 0.0 && rep.monotone.tested > 0 && rep.monotone.passed();
    verdict(
        pass,
        format!(
            "kappa_hat {:.4} after {} rounds x {} trials; monotone {} tested, {} failures",
            rep.kappa_hat,
            cfg.adversarial_rounds,
            cfg.trials,
            rep.monotone.tested,
            rep.monotone.failures.len()
        ),
    )
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run_lab(cfg: &Path, out: &Path, threads: usize) -> bool {
    Command::new(env!("CARGO_BIN_EXE_lab"))
        .arg("run")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn c15() -> Verdict {
    let dir = fixture_dir();
    let manifest = gaplab::fixtures::load_manifest(&dir).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut bad = Vec::new();
    for f in &manifest.fixtures {
        let cfg = gaplab::fixtures::config_path(&dir, f);
        let (a, b) = (tmp.path().join(format!("{}-1", f.name)), tmp.path().join(format!("{}-3", f.name)));
        if !run_lab(&cfg, &a, 1) || !run_lab(&cfg, &b, 3) {
            bad.push(format!("{} did not run", f.name));
            continue;
        }
        for e in std::fs::read_dir(&a).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "csv") {
                compared += 1;
                let other = b.join(p.file_name().unwrap());
                if std::fs::read(&p).ok() != std::fs::read(&other).ok() {
                    bad.push(p.file_name().unwrap().to_string_lossy().into_owned());
                }
            }
        }
    }
    verdict(
        bad.is_empty() && compared > 0,
        format!("{} fixtures, {compared} CSVs at 1 and 3 threads; differing: {bad:?}", manifest.fixtures.len()),
    )
}

#[test]
fn acceptance() {
    let criteria: [(usize, fn() -> Verdict); 15] = [
        (1, c1),
        (2, c2),
        (3, c3),
        (4, c4),
        (5, c5),
        (6, c6),
        (7, c7),
        (8, c8),
        (9, c9),
        (10, c10),
        (11, c11),
        (12, c12),
        (13, c13),
        (14, c14),
        (15, c15),
    ];
    let mut unexpected = Vec::new();
    for (id, f) in criteria {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {id:>2}: {} ({secs:.1} s) {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if v.pass == UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    assert!(unexpected.is_empty(), "criteria with unexpected outcome: {unexpected:?}");
}
