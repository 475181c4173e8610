use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::net::{embed, haar_ball_volume, op_norm, Net};
use super::ops::{l2_norm, op_measure, op_p_delta, LittlewoodPaley, NetOperator};
use crate::error::{Error, Result};
use crate::group_core::{GroupKind, Mat2};
use crate::linalg::{operator_norm, weighted_dot, Composed, LinearOp, Weighted};
use crate::measures::{AtomicMeasure, MeasureCaps};
use crate::rng;

/// `16 d` for the three-dimensional groups handled here.
pub const MIXING_EXPONENT: i32 = 48;

struct Transposed<'a>(&'a dyn LinearOp);

impl LinearOp for Transposed<'_> {
    fn rows(&self) -> usize {
        self.0.cols()
    }
    fn cols(&self) -> usize {
        self.0.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_transpose(x, y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
    }
}

/// Weighted-unit Gaussian vector on the net.
pub fn random_unit(net: &Net, seed: u64, label: &str) -> Vec<f64> {
    let mut r = rng::stream(seed, label);
    let mut f: Vec<f64> = (0..net.len()).map(|_| rng::normal(&mut r)).collect();
    let n = l2_norm(net, &f);
    f.iter_mut().for_each(|v| *v /= n);
    f
}

fn normalise(w: &[f64], f: &mut [f64]) {
    let n = weighted_dot(w, f, f).sqrt();
    if n > 0.0 {
        f.iter_mut().for_each(|v| *v /= n);
    }
}

/// `N[i][j] = |Delta_j T* T Delta_i|` and its companion
/// `M[i][j] = |T Delta_i Delta_j T*|`, weighted operator norms.
#[derive(Clone, Debug, PartialEq)]
pub struct AoTable {
    pub norms: Vec<Vec<f64>>,
    pub companion: Vec<Vec<f64>>,
}

impl AoTable {
    pub fn i_max(&self) -> usize {
        self.norms.len() - 1
    }

    /// `N[i][j] 2^|i-j|`.
    pub fn scaled(&self) -> Vec<Vec<f64>> {
        scale_table(&self.norms)
    }

    /// Largest entry of [`AoTable::scaled`].
    pub fn c0(&self) -> f64 {
        table_max(&self.scaled())
    }

    /// Largest scaled entry over both tables.
    pub fn c_hat(&self) -> f64 {
        self.c0().max(table_max(&scale_table(&self.companion)))
    }

    /// `phi(n) = C^{1/2} 2^{-|n|/2}` with `C` the larger scaled maximum.
    pub fn phi(&self) -> CotlarData {
        CotlarData::geometric(self.c_hat(), self.i_max() + 1)
    }
}

fn scale_table(t: &[Vec<f64>]) -> Vec<Vec<f64>> {
    t.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, v)| v * 2f64.powi((i as i32 - j as i32).abs()))
                .collect()
        })
        .collect()
}

fn table_max(t: &[Vec<f64>]) -> f64 {
    t.iter().flatten().fold(0.0, |a, b| a.max(*b))
}

/// `supp(mu)` must lie in `B_1(1)`.
pub fn almost_orthogonality_table(mu: &AtomicMeasure, net: &Net, i_max: usize, seed: u64) -> Result<AoTable> {
    if mu.support_radius() > 1.0 + 1e-12 {
        return Err(Error::invalid("almost orthogonality needs supp(mu) inside B_1(1)"));
    }
    let lp = LittlewoodPaley::new(net, i_max)?;
    let t = op_measure(mu, net)?;
    ao_table(&lp, &t, seed)
}

pub fn ao_table(lp: &LittlewoodPaley, t: &NetOperator, seed: u64) -> Result<AoTable> {
    let m = lp.i_max() + 1;
    let ts = t.adjoint();
    let w = t.weights();
    let views: Vec<_> = (0..m).map(|i| lp.view(i)).collect();
    let mut norms = vec![vec![0.0; m]; m];
    let mut companion = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            // both tables are symmetric since each Delta is self-adjoint
            let a = Composed::new(vec![&views[j], &ts, t, &views[i]]);
            let b = Composed::new(vec![t, &views[i], &views[j], &ts]);
            let s = seed ^ ((i * m + j) as u64) << 20;
            let na = operator_norm(&Weighted::new(&a, w, w), s)?;
            let nb = operator_norm(&Weighted::new(&b, w, w), s ^ 1)?;
            norms[i][j] = na;
            norms[j][i] = na;
            companion[i][j] = nb;
            companion[j][i] = nb;
        }
    }
    Ok(AoTable { norms, companion })
}

/// `phi : Z -> R+` tabulated on `|n| < len`, zero beyond.
#[derive(Clone, Debug, PartialEq)]
pub struct CotlarData {
    phi: Vec<f64>,
}

impl CotlarData {
    /// `phi(n) = values[|n|]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("phi must be a nonempty table of finite nonnegative values"));
        }
        Ok(CotlarData { phi: values })
    }

    pub fn geometric(c: f64, len: usize) -> Self {
        let s = c.max(0.0).sqrt();
        CotlarData {
            phi: (0..len).map(|n| s * 2f64.powf(-(n as f64) / 2.0)).collect(),
        }
    }

    pub fn phi(&self, n: i64) -> f64 {
        self.phi.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// `Phi = sum_n phi(n)`.
    pub fn total(&self) -> f64 {
        self.tail(0)
    }

    /// `Phi_k = sum_{|n| >= k} phi(n)`.
    pub fn tail(&self, k: usize) -> f64 {
        self.phi
            .iter()
            .enumerate()
            .skip(k)
            .map(|(n, v)| if n == 0 { *v } else { 2.0 * v })
            .sum()
    }
}

/// `a[i][j] = |T_j* T_i|`, `b[i][j] = |T_i T_j*|`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairNorms {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl From<&AoTable> for PairNorms {
    /// For `T_i = T_mu Delta_i`.
    fn from(t: &AoTable) -> Self {
        PairNorms {
            a: t.norms.clone(),
            b: t.companion.clone(),
        }
    }
}

/// Pairwise norms of a family, weighted by `w`.
pub fn pair_norms(ops: &[&dyn LinearOp], w: &[f64], seed: u64) -> Result<PairNorms> {
    let m = ops.len();
    let wops: Vec<Weighted<'_>> = ops.iter().map(|o| Weighted::new(*o, w, w)).collect();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let tj = Transposed(&wops[j]);
            let s = seed ^ ((i * m + j) as u64) << 20;
            a[i][j] = operator_norm(&Composed::new(vec![&tj, &wops[i]]), s)?;
            b[i][j] = operator_norm(&Composed::new(vec![&wops[i], &tj]), s ^ 1)?;
        }
    }
    Ok(PairNorms { a, b })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CotlarReport {
    pub k: usize,
    pub trials: usize,
    pub phi_total: f64,
    pub phi_tail: f64,
    /// Largest `sum_{|i-j|>=k} |<T_i xi, T_j xi>| / (Phi_k Phi)` over trials.
    pub tail_ratio: f64,
    /// Largest `sum |T_i xi|^2 / Phi^2`.
    pub square_ratio: f64,
    /// Largest `|sum T_i xi|^2 / (k sum |T_i xi|^2 + Phi_k Phi)`.
    pub sum_ratio: f64,
    pub holds: bool,
}

/// Checks the k-tail inequality and its two consequences on random unit
/// vectors, after checking that `phi` dominates the measured pair norms.
pub fn cotlar_stein_probe(
    ops: &[&dyn LinearOp],
    w: &[f64],
    norms: &PairNorms,
    phi: &CotlarData,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<CotlarReport> {
    let m = ops.len();
    if norms.a.len() != m || norms.b.len() != m {
        return Err(Error::invalid("pair norms do not match the family"));
    }
    const SLACK: f64 = 1.0 + 1e-9;
    for i in 0..m {
        for j in 0..m {
            let d = j as i64 - i as i64;
            if norms.a[i][j].sqrt() > phi.phi(d) * SLACK {
                return Err(Error::invalid(format!("phi fails to dominate |T_{j}* T_{i}|^(1/2)")));
            }
            if norms.b[i][j].sqrt() > phi.phi(-d) * SLACK {
                return Err(Error::invalid(format!("phi fails to dominate |T_{i} T_{j}*|^(1/2)")));
            }
        }
    }
    let n = w.len();
    let total = phi.total();
    let tail = phi.tail(k);
    let mut r = rng::stream(seed, "cotlar-stein");
    let (mut tail_ratio, mut square_ratio, mut sum_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let mut xi: Vec<f64> = (0..n).map(|_| rng::normal(&mut r)).collect();
        normalise(w, &mut xi);
        let images: Vec<Vec<f64>> = ops
            .iter()
            .map(|o| {
                let mut y = vec![0.0; n];
                o.apply(&xi, &mut y);
                y
            })
            .collect();
        let mut lhs = 0.0;
        for i in 0..m {
            for j in 0..m {
                if (i as i64 - j as i64).unsigned_abs() as usize >= k {
                    lhs += weighted_dot(w, &images[i], &images[j]).abs();
                }
            }
        }
        let squares: f64 = images.iter().map(|v| weighted_dot(w, v, v)).sum();
        let mut sum = vec![0.0; n];
        for v in &images {
            sum.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        let s2 = weighted_dot(w, &sum, &sum);
        let rhs = tail * total;
        tail_ratio = tail_ratio.max(if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 });
        square_ratio = square_ratio.max(squares / (total * total));
        let bound = k as f64 * squares + rhs;
        sum_ratio = sum_ratio.max(if bound > 0.0 { s2 / bound } else if s2 > 0.0 { f64::INFINITY } else { 0.0 });
    }
    let ok = |x: f64| x <= SLACK;
    Ok(CotlarReport {
        k,
        trials,
        phi_total: total,
        phi_tail: tail,
        tail_ratio,
        square_ratio,
        sum_ratio,
        holds: ok(tail_ratio) && ok(square_ratio) && ok(sum_ratio),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpReport {
    pub trials: usize,
    /// `sum |Delta_i F|^2 / |F|^2`, `|F|^2 / sum |Delta_i F|^2` and
    /// `|mu F|^2 / sum |mu Delta_i F|^2`, maximised over trials.
    pub worst: [f64; 3],
    /// One constant bounding all three ratios.
    pub c_hat: f64,
}

/// The two-sided square-function bounds and the `mu`-weighted upper bound on
/// random `F = P_finest g`, `g` white noise: finer oscillation is invisible
/// to every resolved piece.
pub fn littlewood_paley_check(lp: &LittlewoodPaley, t: &NetOperator, trials: usize, seed: u64) -> Result<LpReport> {
    let w = t.weights();
    let n = w.len();
    let finest = lp.p(lp.i_max() + 1);
    let mut r = rng::stream(seed, "lp-check");
    let mut worst = [0.0f64; 3];
    for _ in 0..trials {
        let g: Vec<f64> = (0..n).map(|_| rng::normal(&mut r)).collect();
        let mut f = finest.apply_vec(&g);
        normalise(w, &mut f);
        let mut sq = 0.0;
        let mut sq_mu = 0.0;
        for i in 0..=lp.i_max() {
            let mut d = vec![0.0; n];
            lp.view(i).apply(&f, &mut d);
            sq += weighted_dot(w, &d, &d);
            let md = t.apply_vec(&d);
            sq_mu += weighted_dot(w, &md, &md);
        }
        let mf = t.apply_vec(&f);
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 0.0 };
        worst[0] = worst[0].max(sq);
        worst[1] = worst[1].max(ratio(1.0, sq));
        worst[2] = worst[2].max(ratio(weighted_dot(w, &mf, &mf), sq_mu));
    }
    Ok(LpReport {
        trials,
        worst,
        c_hat: worst.iter().fold(0.0f64, |a, b| a.max(*b)),
    })
}

/// `x -> (mu * P_delta)(x) = sum_g mu(g) 1[|g^-1 x - 1| <= delta] / |B_delta|`
/// on the net, with the exact Haar ball volume.
pub fn smoothed_density(mu: &AtomicMeasure, net: &Net, delta: f64) -> Result<Vec<f64>> {
    if mu.kind() != net.kind() {
        return Err(Error::KindMismatch);
    }
    let kind = net.kind();
    let vol = haar_ball_volume(kind, delta);
    let pts = net.matrices();
    let mut out = vec![0.0; net.len()];
    for (g, p) in mu.matrices().iter().zip(mu.weights()) {
        let ginv = match kind {
            GroupKind::Su2 => g.conj_transpose(),
            GroupKind::Sl2R => g.adjugate(),
        };
        let reach = delta * op_norm(g).max(1.0);
        net.within(g, reach, |j, _| {
            if (ginv * pts[j]).dist(&Mat2::IDENTITY) <= delta {
                out[j] += p / vol;
            }
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatteningCurve {
    pub delta: f64,
    /// `(n, |mu^{*n} * P_delta|_2)`.
    pub rows: Vec<(usize, f64)>,
    /// Least-squares slope of `-ln |.|` against `n`.
    pub decay_rate: Option<f64>,
    /// Each step grows by at most 5%.
    pub monotone: bool,
}

pub fn flattening_curve(
    mu: &AtomicMeasure,
    net: &Net,
    delta: f64,
    n_max: usize,
    caps: &MeasureCaps,
) -> Result<FlatteningCurve> {
    net.check_resolvable(delta)?;
    let powers = mu.powers(n_max, caps)?;
    let mut rows = Vec::with_capacity(n_max + 1);
    for (n, m) in powers.iter().enumerate() {
        rows.push((n, l2_norm(net, &smoothed_density(m, net, delta)?)));
    }
    let monotone = rows.windows(2).all(|p| p[1].1 <= 1.05 * p[0].1);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.1 > 0.0)
        .map(|&(n, v)| (n as f64, -v.ln()))
        .collect();
    Ok(FlatteningCurve {
        delta,
        rows,
        decay_rate: slope(&pts),
        monotone,
    })
}

/// `max_{delta' in {delta, 2 delta, 4 delta}} |mu_{delta'}|_2 / |mu_delta|_2`.
pub fn flat_ratio(mu: &AtomicMeasure, net: &Net, delta: f64) -> Result<f64> {
    net.check_resolvable(delta)?;
    let base = l2_norm(net, &smoothed_density(mu, net, delta)?);
    if base == 0.0 {
        return Err(Error::invalid("mu_delta vanishes on the net"));
    }
    let mut worst = 1.0f64;
    for s in [2.0, 4.0] {
        worst = worst.max(l2_norm(net, &smoothed_density(mu, net, s * delta)?) / base);
    }
    Ok(worst)
}

/// The three scale conditions on one `F`, each relative to `|F|_2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelConditions {
    pub delta: f64,
    /// `|mu F|_2 / |F|_2`.
    pub gain: f64,
    /// `|P_delta F - F|_2 / |F|_2`.
    pub smoothing_defect: f64,
    /// `|P_{delta^{1/4}} F|_2 / |F|_2`.
    pub coarse_mass: f64,
    /// `delta^{1/16}`.
    pub threshold: f64,
}

/// Evaluated only; nothing is asserted.
pub fn level_conditions(t: &NetOperator, net: &Net, big_f: &[f64], delta: f64) -> Result<LevelConditions> {
    if big_f.len() != net.len() || t.len() != net.len() {
        return Err(Error::invalid("vector length does not match the net"));
    }
    let nf = l2_norm(net, big_f);
    if nf == 0.0 {
        return Err(Error::invalid("F vanishes"));
    }
    let fine = op_p_delta(net, delta)?.apply_vec(big_f);
    let diff: Vec<f64> = fine.iter().zip(big_f).map(|(a, b)| a - b).collect();
    let coarse = op_p_delta(net, delta.powf(0.25))?.apply_vec(big_f);
    Ok(LevelConditions {
        delta,
        gain: l2_norm(net, &t.apply_vec(big_f)) / nf,
        smoothing_defect: l2_norm(net, &diff) / nf,
        coarse_mass: l2_norm(net, &coarse) / nf,
        threshold: delta.powf(1.0 / 16.0),
    })
}

pub(crate) fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicReport {
    pub nonempty_levels: usize,
    /// `ceil(log2(1/|B_delta|)) + 2`.
    pub level_bound: usize,
    /// `nonempty_levels / log2(1/delta)`.
    pub log_constant: f64,
    /// Most `delta`-balls around centres containing one net point.
    pub multiplicity: usize,
    /// Largest `mu_delta / sum_i 2^i 1_{A_i}`.
    pub lower_constant: f64,
    /// Largest `sum_{i>0} 2^i 1_{A_i} / mu_{3 delta}`.
    pub upper_constant: f64,
}

impl DyadicReport {
    pub fn sandwich_constant(&self) -> f64 {
        self.lower_constant.max(self.upper_constant)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicDecomposition {
    pub delta: f64,
    /// `(i, net cells of A_i)`, nonempty levels in increasing `i`.
    pub levels: Vec<(u32, Vec<u32>)>,
    /// The maximal `delta`-separated set, as net indices.
    pub centers: Vec<u32>,
    pub report: DyadicReport,
}

fn level_of(v: f64) -> u32 {
    if v <= 1.0 {
        return 0;
    }
    let mut i = v.log2().ceil().max(1.0) as i32;
    while 2f64.powi(i) < v {
        i += 1;
    }
    while i > 1 && 2f64.powi(i - 1) >= v {
        i -= 1;
    }
    i as u32
}

/// Level sets of `mu_{2 delta}` on a greedy maximal `delta`-separated subset
/// of the net, thickened to `delta`-balls.
pub fn dyadic_decompose(mu: &AtomicMeasure, net: &Net, delta: f64) -> Result<DyadicDecomposition> {
    net.check_resolvable(delta)?;
    let kind = net.kind();
    let pts = net.matrices();
    let n = net.len();
    let mu1 = smoothed_density(mu, net, delta)?;
    let mu2 = smoothed_density(mu, net, 2.0 * delta)?;
    let mu3 = smoothed_density(mu, net, 3.0 * delta)?;
    let reach = delta * net.op_bound();
    let close = |a: &Mat2, b: &Mat2| super::ops::kernel_distance(kind, a, b) < delta;

    // greedy centres, tracked in their own bucket grid
    let mut centers: Vec<u32> = Vec::new();
    let mut grid: BTreeMap<[i32; 4], Vec<u32>> = BTreeMap::new();
    let cell = reach.max(1e-12);
    let key = |m: &Mat2| {
        let e = embed(kind, m);
        [
            (e[0] / cell).floor() as i32,
            (e[1] / cell).floor() as i32,
            (e[2] / cell).floor() as i32,
            (e[3] / cell).floor() as i32,
        ]
    };
    for i in 0..n {
        let k = key(&pts[i]);
        let mut free = true;
        'scan: for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    for d in -1..=1 {
                        if let Some(v) = grid.get(&[k[0] + a, k[1] + b, k[2] + c, k[3] + d]) {
                            if v.iter().any(|&j| close(&pts[i], &pts[j as usize])) {
                                free = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
        }
        if free {
            centers.push(i as u32);
            grid.entry(k).or_default().push(i as u32);
        }
    }

    let mut members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut in_level: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut multiplicity = 0usize;
    let mut cover = vec![0usize; n];
    for &c in &centers {
        let v = mu2[c as usize];
        let lvl = (v > 0.0).then(|| level_of(v));
        net.within(&pts[c as usize], reach, |j, _| {
            if kernel_le(kind, &pts[j], &pts[c as usize], delta) {
                cover[j] += 1;
                if let Some(l) = lvl {
                    if !in_level[j].contains(&l) {
                        in_level[j].push(l);
                        members.entry(l).or_default().push(j as u32);
                    }
                }
            }
        });
    }
    multiplicity = cover.iter().fold(multiplicity, |a, b| a.max(*b));
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    for j in 0..n {
        let s: f64 = in_level[j].iter().map(|&l| 2f64.powi(l as i32)).sum();
        let s_pos: f64 = in_level[j].iter().filter(|&&l| l > 0).map(|&l| 2f64.powi(l as i32)).sum();
        if mu1[j] > 0.0 {
            lower = lower.max(if s > 0.0 { mu1[j] / s } else { f64::INFINITY });
        }
        if s_pos > 0.0 {
            upper = upper.max(if mu3[j] > 0.0 { s_pos / mu3[j] } else { f64::INFINITY });
        }
    }
    let levels: Vec<(u32, Vec<u32>)> = members
        .into_iter()
        .map(|(l, mut v)| {
            v.sort_unstable();
            (l, v)
        })
        .collect();
    let vol = haar_ball_volume(kind, delta);
    let level_bound = (1.0 / vol).log2().ceil().max(0.0) as usize + 2;
    let report = DyadicReport {
        nonempty_levels: levels.len(),
        level_bound,
        log_constant: levels.len() as f64 / (1.0 / delta).log2().max(1e-12),
        multiplicity,
        lower_constant: lower,
        upper_constant: upper,
    };
    Ok(DyadicDecomposition {
        delta,
        levels,
        centers,
        report,
    })
}

fn kernel_le(kind: GroupKind, a: &Mat2, b: &Mat2, delta: f64) -> bool {
    super::ops::kernel_distance(kind, a, b) <= delta
}

/// `(f * F)(x_i) = sum_j w_j f_j F(x_j^-1 x_i)`, reading `F` at the nearest
/// cell and as zero off the net.
pub fn convolve_on_net(net: &Net, f: &[f64], big_f: &[f64]) -> Vec<f64> {
    let kind = net.kind();
    let pts = net.matrices();
    let w = net.weights();
    let r = net.spacing() * net.op_bound();
    let inverses: Vec<Mat2> = pts
        .iter()
        .map(|m| match kind {
            GroupKind::Su2 => m.conj_transpose(),
            GroupKind::Sl2R => m.adjugate(),
        })
        .collect();
    (0..net.len())
        .map(|i| {
            let mut s = 0.0;
            for j in 0..net.len() {
                if f[j] == 0.0 {
                    continue;
                }
                if let Some((k, _)) = net.nearest(&(inverses[j] * pts[i]), r) {
                    s += w[j] * f[j] * big_f[k];
                }
            }
            s
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingSample {
    pub delta: f64,
    /// `|f * F|_2^{16 d}`.
    pub lhs: f64,
    pub conv_norm: f64,
    pub p_norm: f64,
}

/// One evaluation of both sides of the mixing inequality; `f` and `F` are
/// normalised here.
pub fn mixing_probe(net: &Net, f: &[f64], big_f: &[f64], delta: f64) -> Result<MixingSample> {
    if f.len() != net.len() || big_f.len() != net.len() {
        return Err(Error::invalid("mixing probe vectors must live on the net"));
    }
    let w = net.weights();
    let mut f = f.to_vec();
    let mut big_f = big_f.to_vec();
    normalise(w, &mut f);
    normalise(w, &mut big_f);
    let conv = convolve_on_net(net, &f, &big_f);
    let conv_norm = l2_norm(net, &conv);
    let p = op_p_delta(net, delta)?;
    let p_norm = l2_norm(net, &p.apply_vec(&big_f));
    Ok(MixingSample {
        delta,
        lhs: conv_norm.powi(MIXING_EXPONENT),
        conv_norm,
        p_norm,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowersReport {
    pub trials: usize,
    /// Smallest `|T^n f| / |T f|^{2n}` over trials and exponents.
    pub worst_ratio: f64,
}

/// `|T^n f| >= |T f|^{2n}` on random weighted-unit `f`.
pub fn powers_check(t: &NetOperator, exponents: &[usize], trials: usize, seed: u64) -> PowersReport {
    let w = t.weights();
    let n = w.len();
    let mut r = rng::stream(seed, "powers");
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let mut f: Vec<f64> = (0..n).map(|_| rng::normal(&mut r)).collect();
        normalise(w, &mut f);
        let tf = t.apply_vec(&f);
        let base = weighted_dot(w, &tf, &tf).sqrt();
        for &e in exponents {
            let mut v = f.clone();
            for _ in 0..e {
                v = t.apply_vec(&v);
            }
            let lhs = weighted_dot(w, &v, &v).sqrt();
            let rhs = base.powi(2 * e as i32);
            worst = worst.min(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
        }
    }
    PowersReport {
        trials,
        worst_ratio: worst,
    }
}
