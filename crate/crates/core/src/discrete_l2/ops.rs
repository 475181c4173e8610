use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::net::{haar_ball_volume, Net};
use crate::error::{Error, Result};
use crate::group_core::{GroupElement, GroupKind, Mat2};
use crate::linalg::{operator_norm, weighted_dot, CsrMatrix, LinearOp, Weighted};
use crate::measures::AtomicMeasure;

/// `A = S + c 1 w^T` on net functions, with the inner product
/// `<f, g> = sum_j w_j f_j g_j`.
#[derive(Clone, Debug)]
pub struct NetOperator {
    weights: Arc<Vec<f64>>,
    sparse: CsrMatrix,
    rank_one: f64,
    clipped: f64,
    ball: Option<f64>,
}

impl NetOperator {
    fn with(weights: Arc<Vec<f64>>, sparse: CsrMatrix, rank_one: f64) -> Self {
        NetOperator {
            weights,
            sparse,
            rank_one,
            clipped: 0.0,
            ball: None,
        }
    }

    pub fn identity(net: &Net) -> Self {
        Self::with(Arc::new(net.weights().to_vec()), CsrMatrix::identity(net.len()), 0.0)
    }

    pub fn zero(net: &Net) -> Self {
        Self::with(Arc::new(net.weights().to_vec()), CsrMatrix::from_rows(net.len(), vec![Vec::new(); net.len()]), 0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sparse(&self) -> &CsrMatrix {
        &self.sparse
    }

    /// Coefficient of the constant-kernel part `1 w^T`.
    pub fn rank_one(&self) -> f64 {
        self.rank_one
    }

    /// Fraction of net mass whose image left the region (translations).
    pub fn clipped_mass(&self) -> f64 {
        self.clipped
    }

    /// More than half the mass was clipped.
    pub fn heavily_clipped(&self) -> bool {
        self.clipped > 0.5
    }

    /// Normalising ball volume `|B_delta(1)|` of an averaging operator.
    pub fn ball_volume(&self) -> Option<f64> {
        self.ball
    }

    pub fn apply_vec(&self, f: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        self.apply(f, &mut y);
        y
    }

    /// `(i, j)` entry, constant part included.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.sparse.get(i, j) + self.rank_one * self.weights[j]
    }

    /// Adjoint in the weighted inner product, `W^-1 A^T W`.
    pub fn adjoint(&self) -> NetOperator {
        let w = &self.weights;
        let inv: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
        let sparse = self.sparse.transpose().scale_rows_cols(&inv, w);
        NetOperator {
            weights: self.weights.clone(),
            sparse,
            rank_one: self.rank_one,
            clipped: self.clipped,
            ball: self.ball,
        }
    }

    pub fn combine(terms: &[(f64, &NetOperator)]) -> Result<NetOperator> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::invalid("empty combination"));
        };
        if terms.iter().any(|(_, t)| t.len() != first.len()) {
            return Err(Error::invalid("operators live on different nets"));
        }
        let parts: Vec<(f64, &CsrMatrix)> = terms.iter().map(|(c, t)| (*c, &t.sparse)).collect();
        let sparse = CsrMatrix::linear_combination(&parts);
        let rank_one = terms.iter().map(|(c, t)| c * t.rank_one).sum();
        Ok(Self::with(first.weights.clone(), sparse, rank_one))
    }

    /// `self * other`; both must be purely sparse.
    pub fn compose(&self, other: &NetOperator) -> Result<NetOperator> {
        if self.rank_one != 0.0 || other.rank_one != 0.0 {
            return Err(Error::invalid("compose is defined for sparse operators"));
        }
        Ok(Self::with(self.weights.clone(), self.sparse.mul(&other.sparse), 0.0))
    }

    /// Weighted operator norm.
    pub fn norm(&self, seed: u64) -> Result<f64> {
        operator_norm(&Weighted::new(self, &self.weights, &self.weights), seed)
    }

    /// Weighted norm of `A - A*`.
    pub fn asymmetry(&self, seed: u64) -> Result<f64> {
        let d = Self::combine(&[(1.0, self), (-1.0, &self.adjoint())])?;
        d.norm(seed)
    }

    /// Largest entrywise difference, scanning dense rows.
    pub fn max_entry_diff(&self, other: &NetOperator) -> f64 {
        let n = self.len();
        let mut row = vec![0.0; n];
        let mut worst = 0.0f64;
        let dc = self.rank_one - other.rank_one;
        for i in 0..n {
            for (j, r) in row.iter_mut().enumerate() {
                *r = dc * self.weights[j];
            }
            let (idx, val) = self.sparse.row(i);
            for (&j, v) in idx.iter().zip(val) {
                row[j as usize] += v;
            }
            let (idx, val) = other.sparse.row(i);
            for (&j, v) in idx.iter().zip(val) {
                row[j as usize] -= v;
            }
            worst = row.iter().fold(worst, |a, b| a.max(b.abs()));
        }
        worst
    }
}

impl LinearOp for NetOperator {
    fn rows(&self) -> usize {
        self.len()
    }
    fn cols(&self) -> usize {
        self.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.sparse.matvec_into(x, y);
        if self.rank_one != 0.0 {
            let s = self.rank_one * self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            y.iter_mut().for_each(|v| *v += s);
        }
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.sparse.matvec_transpose(x));
        if self.rank_one != 0.0 {
            let s = self.rank_one * x.iter().sum::<f64>();
            y.iter_mut().zip(self.weights.iter()).for_each(|(v, w)| *v += s * w);
        }
    }
}

/// `|x_i x_j^-1 - 1|_HS`.
pub(crate) fn kernel_distance(kind: GroupKind, x: &Mat2, y: &Mat2) -> f64 {
    match kind {
        GroupKind::Su2 => x.dist(y),
        GroupKind::Sl2R => (*x * y.adjugate()).dist(&Mat2::IDENTITY),
    }
}

/// `(P_delta f)(x_i) = |B_delta|^-1 sum_{j : |x_i x_j^-1 - 1| <= delta} w_j f_j`.
/// `|B_delta|` is the mean kernel mass of rows whose ball stays inside the
/// region, or the exact Haar volume when no row does.
pub fn op_p_delta(net: &Net, delta: f64) -> Result<NetOperator> {
    net.check_resolvable(delta)?;
    let kind = net.kind();
    let n = net.len();
    let w = net.weights();
    let pts = net.matrices();
    let weights = Arc::new(w.to_vec());
    let interior: Vec<usize> = (0..n).filter(|&i| net.depth(i) >= delta * net.op_bound()).collect();
    // every pair lies in the kernel
    if kind == GroupKind::Su2 && net.region().diameter() <= delta {
        let vol = if interior.is_empty() {
            haar_ball_volume(kind, delta)
        } else {
            net.total_weight()
        };
        let mut op = NetOperator::with(weights, CsrMatrix::from_rows(n, vec![Vec::new(); n]), 1.0 / vol);
        op.ball = Some(vol);
        return Ok(op);
    }
    let reach = delta * net.op_bound();
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    let mut mass = vec![0.0; n];
    for i in 0..n {
        let mut row: Vec<(u32, f64)> = Vec::new();
        net.within(&pts[i], reach, |j, _| {
            if kernel_distance(kind, &pts[i], &pts[j]) <= delta {
                row.push((j as u32, w[j]));
            }
        });
        row.sort_unstable_by_key(|e| e.0);
        mass[i] = row.iter().map(|e| e.1).sum();
        rows.push(row);
    }
    let vol = if interior.is_empty() {
        haar_ball_volume(kind, delta)
    } else {
        interior.iter().map(|&i| mass[i]).sum::<f64>() / interior.len() as f64
    };
    for row in rows.iter_mut() {
        row.iter_mut().for_each(|e| e.1 /= vol);
    }
    let mut op = NetOperator::with(weights, CsrMatrix::from_rows(n, rows), 0.0);
    op.ball = Some(vol);
    Ok(op)
}

/// Nearest-cell assignment `i -> sigma(i)` with `x_sigma(i) ~ g^-1 x_i`,
/// injective: candidate pairs are taken greedily in order of distance.
fn assignment(g: &GroupElement, net: &Net) -> (Vec<Option<u32>>, f64) {
    const CANDIDATES: usize = 8;
    let n = net.len();
    let pts = net.matrices();
    let ginv = *g.inverse().matrix();
    let radius = 1.5 * net.spacing() * net.op_bound();
    let mut pairs: Vec<(f64, u32, u32)> = Vec::with_capacity(n * 2);
    for (i, x) in pts.iter().enumerate() {
        let y = ginv * *x;
        let mut cand: Vec<(f64, u32)> = Vec::new();
        net.within(&y, radius, |j, d| cand.push((d, j as u32)));
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for (d, j) in cand.into_iter().take(CANDIDATES) {
            pairs.push((d, i as u32, j));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut sigma: Vec<Option<u32>> = vec![None; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if sigma[i as usize].is_none() && !taken[j as usize] {
            sigma[i as usize] = Some(j);
            taken[j as usize] = true;
        }
    }
    let w = net.weights();
    let lost: f64 = sigma.iter().zip(w).filter(|(s, _)| s.is_none()).map(|(_, w)| w).sum();
    (sigma, lost / net.total_weight())
}

/// `(g . f)(x) = f(g^-1 x)` as a partial permutation of cells; rows whose
/// preimage leaves the region are zero.
pub fn op_translate(g: &GroupElement, net: &Net) -> Result<NetOperator> {
    if g.kind() != net.kind() {
        return Err(Error::KindMismatch);
    }
    let (sigma, clipped) = assignment(g, net);
    if sigma.iter().all(Option::is_none) {
        return Err(Error::invalid("translate leaves no overlap with the net"));
    }
    let rows: Vec<Vec<(u32, f64)>> = sigma
        .iter()
        .map(|s| s.map_or_else(Vec::new, |j| vec![(j, 1.0)]))
        .collect();
    let mut op = NetOperator::with(Arc::new(net.weights().to_vec()), CsrMatrix::from_rows(net.len(), rows), 0.0);
    op.clipped = clipped;
    Ok(op)
}

/// `T_mu = sum_g mu(g) (g .)`. For an atom whose inverse is also an atom,
/// the later of the two uses the weighted adjoint of the earlier one, so a
/// symmetric `mu` gives a self-adjoint operator.
pub fn op_measure(mu: &AtomicMeasure, net: &Net) -> Result<NetOperator> {
    if mu.kind() != net.kind() {
        return Err(Error::KindMismatch);
    }
    let n = net.len();
    let weights = Arc::new(net.weights().to_vec());
    let mut trip: Vec<(u32, u32, f64)> = Vec::new();
    let mut clipped = 0.0;
    let w = net.weights();
    for i in 0..mu.len() {
        let p = mu.weights()[i];
        let partner = mu.inverse_index(i);
        if matches!(partner, Some(j) if j < i) {
            continue;
        }
        let (sigma, c) = assignment(&mu.element(i), net);
        match partner {
            Some(j) if j != i => {
                let q = mu.weights()[j];
                clipped += (p + q) * c;
                for (r, s) in sigma.iter().enumerate() {
                    if let Some(s) = *s {
                        trip.push((r as u32, s, p));
                        trip.push((s, r as u32, q * w[r] / w[s as usize]));
                    }
                }
            }
            Some(_) => {
                clipped += p * c;
                for (r, s) in sigma.iter().enumerate() {
                    if let Some(s) = *s {
                        trip.push((r as u32, s, 0.5 * p));
                        trip.push((s, r as u32, 0.5 * p * w[r] / w[s as usize]));
                    }
                }
            }
            None => {
                clipped += p * c;
                for (r, s) in sigma.iter().enumerate() {
                    if let Some(s) = *s {
                        trip.push((r as u32, s, p));
                    }
                }
            }
        }
    }
    let mut op = NetOperator::with(weights, CsrMatrix::from_triplets(n, n, trip), 0.0);
    op.clipped = clipped / mu.total_mass();
    Ok(op)
}

/// The averaging operators `P_{2^-k}` for `k = 1..=levels`, from which the
/// Littlewood-Paley pieces `Delta_0 = P_{1/2}` and
/// `Delta_i = P_{2^-(i+1)} - P_{2^-i}` are formed.
#[derive(Clone, Debug)]
pub struct LittlewoodPaley {
    scales: Vec<NetOperator>,
}

impl LittlewoodPaley {
    /// Pieces `Delta_0 ..= Delta_{i_max}`.
    pub fn new(net: &Net, i_max: usize) -> Result<Self> {
        let finest = 0.5f64.powi(i_max as i32 + 1);
        net.check_resolvable(finest)?;
        let scales = (1..=i_max + 1)
            .map(|k| op_p_delta(net, 0.5f64.powi(k as i32)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LittlewoodPaley { scales })
    }

    pub fn i_max(&self) -> usize {
        self.scales.len() - 1
    }

    /// `P_{2^-k}`, `1 <= k <= i_max + 1`.
    pub fn p(&self, k: usize) -> &NetOperator {
        &self.scales[k - 1]
    }

    /// `Delta_i` as an unmaterialised difference.
    pub fn view(&self, i: usize) -> DeltaView<'_> {
        DeltaView {
            fine: &self.scales[i],
            coarse: (i > 0).then(|| &self.scales[i - 1]),
        }
    }

    /// `Delta_i` assembled.
    pub fn delta(&self, i: usize) -> Result<NetOperator> {
        if i > self.i_max() {
            return Err(Error::invalid("scale index beyond the resolved range"));
        }
        if i == 0 {
            return Ok(self.scales[0].clone());
        }
        NetOperator::combine(&[(1.0, &self.scales[i]), (-1.0, &self.scales[i - 1])])
    }

    /// Largest entry of `sum_{i <= n} Delta_i - P_{2^-(n+1)}`.
    pub fn telescoping_defect(&self, n: usize) -> Result<f64> {
        let mut acc = self.delta(0)?;
        for i in 1..=n {
            let d = self.delta(i)?;
            acc = NetOperator::combine(&[(1.0, &acc), (1.0, &d)])?;
        }
        Ok(acc.max_entry_diff(self.p(n + 1)))
    }
}

/// `Delta_i` applied as `P_fine - P_coarse` without assembling it.
#[derive(Clone, Copy)]
pub struct DeltaView<'a> {
    fine: &'a NetOperator,
    coarse: Option<&'a NetOperator>,
}

impl LinearOp for DeltaView<'_> {
    fn rows(&self) -> usize {
        self.fine.len()
    }
    fn cols(&self) -> usize {
        self.fine.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.fine.apply(x, y);
        if let Some(c) = self.coarse {
            let mut t = vec![0.0; y.len()];
            c.apply(x, &mut t);
            y.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
        }
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.fine.apply_transpose(x, y);
        if let Some(c) = self.coarse {
            let mut t = vec![0.0; y.len()];
            c.apply_transpose(x, &mut t);
            y.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
        }
    }
}

/// Weighted `L2` norm of a net function.
pub fn l2_norm(net: &Net, f: &[f64]) -> f64 {
    weighted_dot(net.weights(), f, f).sqrt()
}
