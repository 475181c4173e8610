//! Local and restricted spectral gaps on nets, the delayed bounded random
//! walk, and expansion of Moebius maps on an interval.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::discrete_l2::{op_measure, op_translate, Net};
use crate::error::{Error, Result};
use crate::group_core::{GroupElement, GroupKind, Mat2};
use crate::linalg::{
    dot, lanczos, symmetric_eigen, CsrMatrix, DenseMatrix, LanczosOptions, LinearOp, Weighted, Which,
};
use crate::measures::AtomicMeasure;
use crate::projective::{real_entries, IntervalNet};
use crate::rng;
use rand::Rng;

/// Operators on at most this many cells are decomposed densely.
pub const DENSE_LIMIT: usize = 400;

const INVERSE_TOL: f64 = 1e-9;

/// `(g . F)(x_i) = F(x_sigma(i))` for each generator; `None` where `g^-1 x_i`
/// leaves the region.
pub type CellAction = Vec<Option<u32>>;

pub fn cell_actions(gens: &[GroupElement], net: &Net) -> Result<Vec<CellAction>> {
    let mut out = Vec::with_capacity(gens.len());
    for g in gens {
        if g.kind() != net.kind() {
            return Err(Error::KindMismatch);
        }
        let sigma = match op_translate(g, net) {
            Ok(t) => (0..net.len())
                .map(|i| t.sparse().row(i).0.first().copied())
                .collect(),
            Err(Error::InvalidInput(_)) => vec![None; net.len()],
            Err(e) => return Err(e),
        };
        out.push(sigma);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    /// `min sum_g |g.F - F|^2_{2,B} / |F|^2_{2,B}` over weighted-mean-zero `F`.
    pub min_q: f64,
    /// `1 / sqrt(min_q)`, infinite when `min_q` vanishes.
    pub kappa_hat: f64,
    /// Range of the constant for the unsquared sum `sum_g |g.F - F|_{2,B}`:
    /// `[kappa_hat / sqrt(k), kappa_hat]`.
    pub kappa_sum_range: (f64, f64),
    pub no_gap: bool,
    /// Weighted-unit, weighted-mean-zero minimiser.
    pub minimiser: Vec<f64>,
    /// Directions removed before minimising (the constants).
    pub deflated_dimension: usize,
    /// `|M v - min_q v|` for the normalised form `M`.
    pub residual: f64,
    pub convention: &'static str,
}

pub const KAPPA_CONVENTION: &str =
    "kappa_hat = 1/sqrt(min_q) with min_q = min sum_g |gF-F|^2 / |F|^2; the unsquared-sum constant lies in [kappa_hat/sqrt(k), kappa_hat]";

/// Values of `F` off the region enter only through `g.F` on clipped rows and
/// are free, so those rows are minimised out and contribute nothing.
pub fn local_gap_estimate(gens: &[GroupElement], net: &Net, seed: u64) -> Result<GapReport> {
    if gens.is_empty() {
        return Err(Error::invalid("empty generator list"));
    }
    let actions = cell_actions(gens, net)?;
    local_gap_from_actions(&actions, net.weights(), seed)
}

pub fn local_gap_from_actions(actions: &[CellAction], w: &[f64], seed: u64) -> Result<GapReport> {
    let n = w.len();
    if n < 2 {
        return Err(Error::Degenerate("local gap needs at least two cells"));
    }
    if actions.iter().any(|a| a.len() != n) {
        return Err(Error::invalid("cell action does not match the net"));
    }
    if actions.iter().all(|a| a.iter().all(Option::is_none)) {
        return Err(Error::Degenerate("no generator overlaps the region"));
    }
    // L = sum_g sum_i w_i (e_sigma(i) - e_i)(e_sigma(i) - e_i)^T
    let mut trip: Vec<(u32, u32, f64)> = Vec::new();
    for a in actions {
        for (i, s) in a.iter().enumerate() {
            let Some(j) = *s else { continue };
            if j as usize == i {
                continue;
            }
            let i = i as u32;
            trip.push((i, i, w[i as usize]));
            trip.push((j, j, w[i as usize]));
            trip.push((i, j, -w[i as usize]));
            trip.push((j, i, -w[i as usize]));
        }
    }
    let inv_sqrt: Vec<f64> = w.iter().map(|v| 1.0 / v.sqrt()).collect();
    let m = CsrMatrix::from_triplets(n, n, trip).scale_rows_cols(&inv_sqrt, &inv_sqrt);
    let norm_w = w.iter().sum::<f64>().sqrt();
    let u: Vec<f64> = w.iter().map(|v| v.sqrt() / norm_w).collect();
    let bound = (0..n)
        .map(|i| m.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let shift = 2.0 * bound + 1.0;
    let mut v = smallest_deflated(&m, &u, shift, seed)?;
    let c = dot(&u, &v);
    v.iter_mut().zip(&u).for_each(|(x, y)| *x -= c * y);
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mv = m.matvec(&v);
    let q = dot(&v, &mv).max(0.0);
    let residual = mv.iter().zip(&v).map(|(a, b)| (a - q * b).powi(2)).sum::<f64>().sqrt();
    let k = actions.len() as f64;
    let no_gap = q <= 1e-12 * bound.max(1.0);
    let kappa_hat = if no_gap { f64::INFINITY } else { 1.0 / q.sqrt() };
    Ok(GapReport {
        min_q: if no_gap { 0.0 } else { q },
        kappa_hat,
        kappa_sum_range: (kappa_hat / k.sqrt(), kappa_hat),
        no_gap,
        minimiser: v.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect(),
        deflated_dimension: 1,
        residual,
        convention: KAPPA_CONVENTION,
    })
}

/// `A + shift u u^T`.
struct Lifted<'a> {
    a: &'a dyn LinearOp,
    u: &'a [f64],
    shift: f64,
}

impl LinearOp for Lifted<'_> {
    fn rows(&self) -> usize {
        self.a.rows()
    }
    fn cols(&self) -> usize {
        self.a.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply(x, y);
        let c = self.shift * dot(self.u, x);
        y.iter_mut().zip(self.u).for_each(|(v, u)| *v += c * u);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y);
    }
}

/// Smallest eigenpair of symmetric `a` on `u^perp`, where `a u = 0`.
fn smallest_deflated(a: &CsrMatrix, u: &[f64], shift: f64, seed: u64) -> Result<Vec<f64>> {
    let n = u.len();
    if n <= DENSE_LIMIT {
        let mut d = a.to_dense();
        for i in 0..n {
            let row = d.row_mut(i);
            for j in 0..n {
                row[j] += shift * u[i] * u[j];
            }
        }
        let eig = symmetric_eigen(&d, true)?;
        let vecs = eig.vectors.unwrap();
        return Ok(vecs.column(0));
    }
    let op = Lifted { a, u, shift };
    let res = lanczos(
        &op,
        &LanczosOptions {
            wanted: 1,
            which: Which::Smallest,
            max_iter: n.min(1500),
            tol: 1e-9,
            seed,
            want_vectors: true,
        },
    )?;
    if !res.converged {
        return Err(Error::NotConverged {
            what: "smallest deflated eigenvalue",
            residual: res.residuals[0],
        });
    }
    Ok(res.vectors.unwrap().remove(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedGap {
    pub r: f64,
    /// Right singular vectors of `T_mu` on `L^2(B)` with singular value `>= r`.
    pub dim_v: usize,
    /// Largest singular value on `V^perp`; `< r`.
    pub residual: f64,
    /// Leading singular values, descending, through the first one below `r`.
    pub singular_values: Vec<f64>,
    /// `V` is the whole space.
    pub degenerate: bool,
}

/// `B^T B` for `B = W^{1/2} T W^{-1/2}`.
struct Gram<'a>(&'a Weighted<'a>);

impl LinearOp for Gram<'_> {
    fn rows(&self) -> usize {
        self.0.cols()
    }
    fn cols(&self) -> usize {
        self.0.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; self.0.rows()];
        self.0.apply(x, &mut t);
        self.0.apply_transpose(&t, y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y);
    }
}

/// At most this many singular values are resolved iteratively.
pub const RESTRICTED_CAP: usize = 512;

pub fn restricted_gap(mu: &AtomicMeasure, net: &Net, r: f64, seed: u64) -> Result<RestrictedGap> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid("restricted gap threshold must lie in (0, 1)"));
    }
    let t = op_measure(mu, net)?;
    let w = net.weights();
    let n = net.len();
    let b = Weighted::new(&t, w, w);
    let gram = Gram(&b);
    let mut sv: Vec<f64> = if n <= DENSE_LIMIT {
        let mut d = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            gram.apply(&e, &mut col);
            for i in 0..n {
                d.row_mut(i)[j] = col[i];
            }
            e[j] = 0.0;
        }
        // symmetrise the round-off
        let d = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (d.row(i)[j] + d.row(j)[i]));
        symmetric_eigen(&d, false)?
            .values
            .iter()
            .rev()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    } else {
        let mut wanted = 16usize;
        loop {
            let res = lanczos(
                &gram,
                &LanczosOptions {
                    wanted: wanted.min(n),
                    which: Which::Largest,
                    max_iter: (8 * wanted + 400).min(n),
                    tol: 1e-7,
                    seed,
                    want_vectors: false,
                },
            )?;
            if !res.converged {
                return Err(Error::NotConverged {
                    what: "restricted singular values",
                    residual: res.residuals.iter().fold(0.0f64, |a, b| a.max(*b)),
                });
            }
            let vals: Vec<f64> = res.values.iter().map(|v| v.max(0.0).sqrt()).collect();
            if vals.last().is_some_and(|v| *v < r) || wanted >= n {
                break vals;
            }
            if wanted >= RESTRICTED_CAP {
                return Err(Error::CapExceeded {
                    what: "restricted gap singular values",
                    needed: 2 * wanted as u128,
                    cap: RESTRICTED_CAP as u128,
                });
            }
            wanted *= 2;
        }
    };
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let dim_v = sv.iter().take_while(|v| **v >= r).count();
    let residual = sv.get(dim_v).copied().unwrap_or(0.0);
    sv.truncate(dim_v + 1);
    if residual >= r {
        return Err(Error::NotConverged {
            what: "restricted gap residual",
            residual,
        });
    }
    Ok(RestrictedGap {
        r,
        dim_v,
        residual,
        singular_values: sv,
        degenerate: dim_v == n,
    })
}

/// `P_S F = (1/k) sum_i (1_{B cap g_i B} g_i.F + 1_{B \ g_i B} F)` on the net.
#[derive(Clone, Debug)]
pub struct DelayedWalk {
    /// Symmetric and row-stochastic.
    pub matrix: CsrMatrix,
    pub k: usize,
    /// Generators with `g B cap B` empty on the net.
    pub disjoint: usize,
}

fn matrix_inverse(kind: GroupKind, m: &Mat2) -> Mat2 {
    match kind {
        GroupKind::Su2 => m.conj_transpose(),
        GroupKind::Sl2R => m.adjugate(),
    }
}

/// `S` must be closed under inverses with multiplicity. A generator paired
/// with its inverse moves particles along one cell matching and its
/// inverse, so the walk is exactly symmetric and stochastic.
pub fn delayed_walk_operator(gens: &[GroupElement], net: &Net) -> Result<DelayedWalk> {
    let k = gens.len();
    if k == 0 {
        return Err(Error::invalid("empty generator list"));
    }
    let kind = net.kind();
    let mut partner: Vec<Option<usize>> = vec![None; k];
    for i in 0..k {
        if partner[i].is_some() {
            continue;
        }
        let inv = matrix_inverse(kind, gens[i].matrix());
        let found = (i..k).find(|&j| partner[j].is_none() && gens[j].matrix().dist(&inv) < INVERSE_TOL);
        match found {
            Some(j) => {
                partner[i] = Some(j);
                partner[j] = Some(i);
            }
            None => return Err(Error::invalid(alloc::format!("generator {i} has no inverse in S"))),
        }
    }
    let actions = cell_actions(gens, net)?;
    let n = net.len();
    let unit = 1.0 / k as f64;
    let mut trip: Vec<(u32, u32, f64)> = Vec::new();
    let mut disjoint = 0;
    for i in 0..k {
        let j = partner[i].unwrap();
        if j < i {
            continue;
        }
        let sigma = &actions[i];
        let moving = sigma.iter().filter(|s| s.is_some()).count();
        if moving == 0 {
            disjoint += if i == j { 1 } else { 2 };
        }
        // forward and backward along the same matching; fixed mass stays
        let mut fwd = vec![false; n];
        let mut bwd = vec![false; n];
        let mass = if i == j { 0.5 * unit } else { unit };
        for (r, s) in sigma.iter().enumerate() {
            if let Some(s) = *s {
                fwd[r] = true;
                bwd[s as usize] = true;
                trip.push((r as u32, s, mass));
                trip.push((s, r as u32, mass));
            }
        }
        for r in 0..n {
            let stay = (!fwd[r] as u8 as f64 + !bwd[r] as u8 as f64) * mass;
            if stay > 0.0 {
                trip.push((r as u32, r as u32, stay));
            }
        }
    }
    Ok(DelayedWalk {
        matrix: CsrMatrix::from_triplets(n, n, trip),
        k,
        disjoint,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkGap {
    /// Largest `|lambda|` on the complement of the constants.
    pub top: f64,
    /// `1 - top`.
    pub gap: f64,
    /// Extreme eigenvalues of the whole operator.
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    pub no_gap: bool,
}

/// `J x = x - mean(x)`, then `P`, then `J` again.
struct CenteredWalk<'a>(&'a CsrMatrix);

impl LinearOp for CenteredWalk<'_> {
    fn rows(&self) -> usize {
        self.0.rows()
    }
    fn cols(&self) -> usize {
        self.0.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let center = |v: &mut [f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|a| *a -= m);
        };
        let mut t = x.to_vec();
        center(&mut t);
        self.0.matvec_into(&t, y);
        center(y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y);
    }
}

pub fn walk_gap(walk: &DelayedWalk, seed: u64) -> Result<WalkGap> {
    walk_gap_of(&walk.matrix, seed)
}

/// For a symmetric stochastic matrix.
pub fn walk_gap_of(p: &CsrMatrix, seed: u64) -> Result<WalkGap> {
    let n = p.rows();
    if n < 2 {
        return Err(Error::Degenerate("walk gap needs at least two cells"));
    }
    let (top, lo, hi) = if n <= DENSE_LIMIT {
        let full = symmetric_eigen(&p.to_dense(), false)?.values;
        let centered = CenteredWalk(p);
        let mut d = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            centered.apply(&e, &mut col);
            for i in 0..n {
                d.row_mut(i)[j] = col[i];
            }
            e[j] = 0.0;
        }
        let d = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (d.row(i)[j] + d.row(j)[i]));
        // drop the zero eigenvalue belonging to the constants
        let mut vals = symmetric_eigen(&d, false)?.values;
        let z = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        vals.remove(z);
        let top = vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        (top, full[0], full[n - 1])
    } else {
        let centered = CenteredWalk(p);
        let run = |op: &dyn LinearOp, which: Which, s: u64| -> Result<f64> {
            let r = lanczos(
                op,
                &LanczosOptions {
                    wanted: 1,
                    which,
                    max_iter: n.min(1000),
                    tol: 1e-9,
                    seed: s,
                    want_vectors: false,
                },
            )?;
            if !r.converged {
                return Err(Error::NotConverged {
                    what: "walk spectrum",
                    residual: r.residuals[0],
                });
            }
            Ok(r.values[0])
        };
        let a = run(&centered, Which::Largest, seed)?;
        let b = run(&centered, Which::Smallest, seed ^ 1)?;
        let lo = run(p, Which::Smallest, seed ^ 2)?;
        let hi = run(p, Which::Largest, seed ^ 3)?;
        (a.abs().max(b.abs()), lo, hi)
    };
    let gap = 1.0 - top;
    Ok(WalkGap {
        top,
        gap,
        spectrum_min: lo,
        spectrum_max: hi,
        no_gap: gap <= 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionConfig {
    pub trials: usize,
    pub adversarial_rounds: usize,
    /// Candidate swaps per round.
    pub candidates: usize,
    pub seed: u64,
    /// Generators this close to the identity get the monotonicity check.
    pub monotone_radius: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            trials: 8,
            adversarial_rounds: 200,
            candidates: 24,
            seed: 0,
            monotone_radius: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpandRow {
    pub trial: usize,
    pub size: usize,
    pub image_measure: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCheck {
    /// Generators within the radius.
    pub tested: usize,
    /// Indices into `S` whose restriction fails to increase.
    pub failures: Vec<usize>,
}

impl MonotoneCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    /// `min |(U_g g A) cap B| / |A| - 1` over tested `A`.
    pub kappa_hat: f64,
    /// Cells of the minimising `A`.
    pub worst: Vec<u32>,
    /// One row per trial, at the end of its descent.
    pub rows: Vec<ExpandRow>,
    pub monotone: MonotoneCheck,
}

fn moebius(m: &[f64; 4], x: f64) -> f64 {
    (m[0] * x + m[1]) / (m[2] * x + m[3])
}

/// Lebesgue measure of `(U_g g A) cap B` for `A` a union of cells.
fn image_measure(maps: &[[f64; 4]], net: &IntervalNet, runs: &[(usize, usize)]) -> f64 {
    let (lo, hi) = (net.lo(), net.hi());
    let h = net.spacing();
    let mut iv: Vec<(f64, f64)> = Vec::new();
    let mut push = |a: f64, b: f64| {
        let (a, b) = (a.max(lo), b.min(hi));
        if b > a {
            iv.push((a, b));
        }
    };
    for m in maps {
        for &(s, e) in runs {
            let (l, u) = (lo + s as f64 * h, lo + e as f64 * h);
            let (dl, du) = (m[2] * l + m[3], m[2] * u + m[3]);
            if dl * du > 0.0 {
                push(moebius(m, l), moebius(m, u));
            } else {
                // a pole inside: increasing on both branches
                push(moebius(m, l), f64::INFINITY);
                push(f64::NEG_INFINITY, moebius(m, u));
            }
        }
    }
    iv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in iv {
        match cur {
            Some((c, d)) if a <= d => cur = Some((c, d.max(b))),
            Some((c, d)) => {
                total += d - c;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((c, d)) = cur {
        total += d - c;
    }
    total
}

/// Maximal runs `[s, e)` of set cells.
fn runs_of(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let s = i;
            while i < mask.len() && mask[i] {
                i += 1;
            }
            out.push((s, i));
        } else {
            i += 1;
        }
    }
    out
}

fn moebius_maps(gens: &[GroupElement]) -> Result<Vec<[f64; 4]>> {
    if gens.is_empty() {
        return Err(Error::invalid("empty generator list"));
    }
    gens.iter().map(real_entries).collect()
}

/// `|(U_g g A) cap B| / |A|` for `A` given by cell indices.
pub fn expansion_ratio(gens: &[GroupElement], net: &IntervalNet, cells: &[u32]) -> Result<f64> {
    let maps = moebius_maps(gens)?;
    let mut mask = vec![false; net.len()];
    for &c in cells {
        *mask.get_mut(c as usize).ok_or_else(|| Error::invalid("cell index out of range"))? = true;
    }
    let size = mask.iter().filter(|m| **m).count();
    if size == 0 {
        return Err(Error::invalid("empty cell set"));
    }
    Ok(image_measure(&maps, net, &runs_of(&mask)) / (size as f64 * net.spacing()))
}

/// Random starts followed by greedy single-swap descent; every tested `A`
/// has `|A| <= |B| / 2`.
pub fn expansion_test(gens: &[GroupElement], net: &IntervalNet, cfg: &ExpansionConfig) -> Result<ExpansionReport> {
    let maps = moebius_maps(gens)?;
    let n = net.len();
    let half = n / 2;
    if half == 0 {
        return Err(Error::Degenerate("expansion needs at least two cells"));
    }
    let h = net.spacing();
    let ratio_of = |mask: &[bool], size: usize| image_measure(&maps, net, &runs_of(mask)) / (size as f64 * h);
    let mut r = rng::stream(cfg.seed, "expansion");
    let mut best = f64::INFINITY;
    let mut worst: Vec<u32> = Vec::new();
    let mut rows = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let size = 1 + r.gen_range(0..half);
        let mut mask = vec![false; n];
        if trial % 2 == 0 {
            let start = r.gen_range(0..n - size + 1);
            mask[start..start + size].iter_mut().for_each(|m| *m = true);
        } else {
            let mut placed = 0;
            while placed < size {
                let c = r.gen_range(0..n);
                if !mask[c] {
                    mask[c] = true;
                    placed += 1;
                }
            }
        }
        let mut ratio = ratio_of(&mask, size);
        for _ in 0..cfg.adversarial_rounds {
            let inside: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            // outside cells next to A, else any outside cell
            let frontier: Vec<usize> = (0..n)
                .filter(|&i| !mask[i] && ((i > 0 && mask[i - 1]) || (i + 1 < n && mask[i + 1])))
                .collect();
            let outside: Vec<usize> = if frontier.is_empty() {
                (0..n).filter(|&i| !mask[i]).collect()
            } else {
                frontier
            };
            if inside.is_empty() || outside.is_empty() {
                break;
            }
            let mut step: Option<(f64, usize, usize)> = None;
            for _ in 0..cfg.candidates {
                let a = inside[r.gen_range(0..inside.len())];
                let b = outside[r.gen_range(0..outside.len())];
                mask[a] = false;
                mask[b] = true;
                let q = ratio_of(&mask, size);
                mask[a] = true;
                mask[b] = false;
                if q < ratio && step.is_none_or(|s| q < s.0) {
                    step = Some((q, a, b));
                }
            }
            if let Some((q, a, b)) = step {
                mask[a] = false;
                mask[b] = true;
                ratio = q;
            }
        }
        rows.push(ExpandRow {
            trial,
            size,
            image_measure: ratio * size as f64 * h,
            ratio,
        });
        if ratio - 1.0 < best {
            best = ratio - 1.0;
            worst = (0..n).filter(|&i| mask[i]).map(|i| i as u32).collect();
        }
    }
    Ok(ExpansionReport {
        kappa_hat: best,
        worst,
        rows,
        monotone: monotone_check(&maps, gens, net, cfg.monotone_radius),
    })
}

/// Finite-difference sign check of `g` on the cell centres of `B cap g^-1 B`.
fn monotone_check(maps: &[[f64; 4]], gens: &[GroupElement], net: &IntervalNet, radius: f64) -> MonotoneCheck {
    let mut tested = 0;
    let mut failures = Vec::new();
    for (idx, (m, g)) in maps.iter().zip(gens).enumerate() {
        if g.norm_to_identity() > radius {
            continue;
        }
        tested += 1;
        let mut prev: Option<f64> = None;
        let mut ok = true;
        for i in 0..net.len() {
            let x = net.center(i);
            let y = moebius(m, x);
            if !(y >= net.lo() && y <= net.hi()) {
                continue;
            }
            if let Some(p) = prev {
                if !(y > p) {
                    ok = false;
                    break;
                }
            }
            prev = Some(y);
        }
        if !ok {
            failures.push(idx);
        }
    }
    MonotoneCheck { tested, failures }
}

#[cfg(test)]
mod tests;
