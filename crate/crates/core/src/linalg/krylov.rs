use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{axpy, dot, tridiagonal_eigen, CsrMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::rng;

/// A linear map `R^cols -> R^rows` with access to its transpose.
pub trait LinearOp {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOp for CsrMatrix {
    fn rows(&self) -> usize {
        CsrMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        CsrMatrix::cols(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec_transpose(x));
    }
}

impl LinearOp for DenseMatrix {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), y);
        }
    }
}

/// Product `ops[0] * ops[1] * ... * ops[last]`.
pub struct Composed<'a> {
    ops: Vec<&'a dyn LinearOp>,
}

impl<'a> Composed<'a> {
    pub fn new(ops: Vec<&'a dyn LinearOp>) -> Self {
        assert!(!ops.is_empty());
        for w in ops.windows(2) {
            assert_eq!(w[0].cols(), w[1].rows(), "composed shapes disagree");
        }
        Composed { ops }
    }
}

impl LinearOp for Composed<'_> {
    fn rows(&self) -> usize {
        self.ops[0].rows()
    }
    fn cols(&self) -> usize {
        self.ops[self.ops.len() - 1].cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut cur = x.to_vec();
        for op in self.ops.iter().rev() {
            let mut next = vec![0.0; op.rows()];
            op.apply(&cur, &mut next);
            cur = next;
        }
        y.copy_from_slice(&cur);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let mut cur = x.to_vec();
        for op in self.ops.iter() {
            let mut next = vec![0.0; op.cols()];
            op.apply_transpose(&cur, &mut next);
            cur = next;
        }
        y.copy_from_slice(&cur);
    }
}

/// `W_out^{1/2} A W_in^{-1/2}`: the Euclidean picture of `A` acting between
/// weighted spaces, so its 2-norm is the weighted operator norm of `A`.
pub struct Weighted<'a> {
    inner: &'a dyn LinearOp,
    sqrt_out: Vec<f64>,
    inv_sqrt_in: Vec<f64>,
}

impl<'a> Weighted<'a> {
    pub fn new(inner: &'a dyn LinearOp, w_out: &[f64], w_in: &[f64]) -> Self {
        assert_eq!(inner.rows(), w_out.len());
        assert_eq!(inner.cols(), w_in.len());
        Weighted {
            inner,
            sqrt_out: w_out.iter().map(|w| w.sqrt()).collect(),
            inv_sqrt_in: w_in.iter().map(|w| 1.0 / w.sqrt()).collect(),
        }
    }
}

impl LinearOp for Weighted<'_> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let t: Vec<f64> = x.iter().zip(&self.inv_sqrt_in).map(|(a, b)| a * b).collect();
        self.inner.apply(&t, y);
        y.iter_mut().zip(&self.sqrt_out).for_each(|(v, s)| *v *= s);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let t: Vec<f64> = x.iter().zip(&self.sqrt_out).map(|(a, b)| a * b).collect();
        self.inner.apply_transpose(&t, y);
        y.iter_mut().zip(&self.inv_sqrt_in).for_each(|(v, s)| *v *= s);
    }
}

/// `A^T A`.
struct Normal<'a>(&'a dyn LinearOp);

impl LinearOp for Normal<'_> {
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

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Largest,
    Smallest,
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub wanted: usize,
    pub which: Which,
    pub max_iter: usize,
    /// Relative residual `|A v - theta v| / max|theta|` accepted as converged.
    pub tol: f64,
    pub seed: u64,
    pub want_vectors: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            wanted: 1,
            which: Which::Largest,
            max_iter: 400,
            tol: 1e-10,
            seed: 0,
            want_vectors: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    /// Wanted Ritz values, outermost first.
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<f64>>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lanczos with full reorthogonalisation on a symmetric `op`. An exhausted
/// Krylov space is deflated by restarting from a fresh random direction
/// orthogonal to the basis so far.
pub fn lanczos(op: &dyn LinearOp, opts: &LanczosOptions) -> Result<LanczosResult> {
    let n = op.cols();
    if op.rows() != n {
        return Err(Error::invalid("lanczos needs a square operator"));
    }
    if n == 0 || opts.wanted == 0 {
        return Err(Error::invalid("lanczos needs n > 0 and wanted > 0"));
    }
    let wanted = opts.wanted.min(n);
    let m_max = opts.max_iter.min(n).max(wanted);
    let mut rng = rng::stream(opts.seed, "lanczos");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let fresh = |rng: &mut rng::LabRng, basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n).map(|_| rng::normal(rng)).collect();
            for _ in 0..2 {
                for q in basis {
                    let c = dot(q, &v);
                    axpy(-c, q, &mut v);
                }
            }
            let nv = dot(&v, &v).sqrt();
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    };

    let mut q = fresh(&mut rng, &basis).ok_or(Error::Degenerate("lanczos start"))?;
    let mut w = vec![0.0; n];
    let mut best: Option<LanczosResult> = None;
    let mut scale: f64 = 0.0;
    loop {
        op.apply(&q, &mut w);
        let a = dot(&q, &w);
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let bnorm = dot(&w, &w).sqrt();
        scale = scale.max(a.abs()).max(bnorm);
        let m = basis.len();
        let exhausted = m == n;
        let check = exhausted || m == m_max || m % 8 == 0 || m == wanted;
        let mut restart = false;
        if bnorm <= 1e-12 * scale.max(1e-300) && !exhausted {
            restart = true;
        }
        if check && m >= wanted {
            let r = ritz(&basis, &alpha, &beta, bnorm, wanted, opts, scale)?;
            let done = r.converged;
            best = Some(r);
            if done || exhausted || m == m_max {
                break;
            }
        }
        if exhausted || m == m_max {
            break;
        }
        if restart {
            match fresh(&mut rng, &basis) {
                Some(v) => {
                    beta.push(0.0);
                    q = v;
                }
                None => break,
            }
        } else {
            beta.push(bnorm);
            q = w.iter().map(|x| x / bnorm).collect();
        }
    }
    let mut res = match best {
        Some(r) => r,
        None => ritz(&basis, &alpha, &beta, 0.0, wanted.min(basis.len()), opts, scale)?,
    };
    res.iterations = basis.len();
    Ok(res)
}

fn ritz(
    basis: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    tail: f64,
    wanted: usize,
    opts: &LanczosOptions,
    scale: f64,
) -> Result<LanczosResult> {
    let m = alpha.len();
    let eig = tridiagonal_eigen(alpha, &beta[..m - 1], true)?;
    let s = eig.vectors.as_ref().unwrap();
    let order: Vec<usize> = match opts.which {
        Which::Largest => (0..m).rev().take(wanted).collect(),
        Which::Smallest => (0..m).take(wanted).collect(),
    };
    let denom = scale.max(1e-300);
    let mut values = Vec::with_capacity(wanted);
    let mut residuals = Vec::with_capacity(wanted);
    let mut converged = true;
    for &j in &order {
        values.push(eig.values[j]);
        let r = (tail * s[(m - 1, j)]).abs();
        residuals.push(r);
        if r > opts.tol * denom {
            converged = false;
        }
    }
    let vectors = opts.want_vectors.then(|| {
        order
            .iter()
            .map(|&j| {
                let mut v = vec![0.0; basis[0].len()];
                for (k, b) in basis.iter().enumerate() {
                    axpy(s[(k, j)], b, &mut v);
                }
                v
            })
            .collect()
    });
    Ok(LanczosResult {
        values,
        vectors,
        residuals,
        iterations: m,
        converged,
    })
}

/// Largest eigenvalue of a symmetric positive semi-definite `op`.
pub fn power_iteration(op: &dyn LinearOp, max_iter: usize, tol: f64, seed: u64) -> Result<(f64, Vec<f64>)> {
    let n = op.cols();
    let mut rng = rng::stream(seed, "power");
    let mut v: Vec<f64> = (0..n).map(|_| rng::normal(&mut rng)).collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        op.apply(&v, &mut w);
        let next = dot(&v, &w);
        let nw = dot(&w, &w).sqrt();
        if nw == 0.0 {
            return Ok((0.0, v));
        }
        let done = (next - lambda).abs() <= tol * next.abs().max(1e-300);
        lambda = next;
        v = w.iter().map(|x| x / nw).collect();
        if done {
            return Ok((lambda, v));
        }
    }
    Err(Error::NotConverged {
        what: "power iteration",
        residual: lambda,
    })
}

/// Largest singular value of `op` (use [`Weighted`] for weighted norms).
/// Small operators are handled densely.
pub fn operator_norm(op: &dyn LinearOp, seed: u64) -> Result<f64> {
    let normal = Normal(op);
    let n = op.cols();
    if n == 0 || op.rows() == 0 {
        return Ok(0.0);
    }
    if n <= 200 {
        let mut m = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            normal.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        let sym = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        let top = *super::symmetric_eigen(&sym, false)?.values.last().unwrap();
        return Ok(top.max(0.0).sqrt());
    }
    let opts = LanczosOptions {
        max_iter: 300,
        tol: 1e-9,
        seed,
        ..LanczosOptions::default()
    };
    let r = lanczos(&normal, &opts)?;
    if r.converged {
        return Ok(r.values[0].max(0.0).sqrt());
    }
    let (l, _) = power_iteration(&normal, 20_000, 1e-12, seed)?;
    Ok(l.max(r.values[0]).max(0.0).sqrt())
}

/// Boxed operator helper for heterogeneous pipelines.
pub type BoxedOp<'a> = Box<dyn LinearOp + 'a>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;
    use rand::{Rng, SeedableRng};

    fn random_sym(n: usize, seed: u64) -> DenseMatrix {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = r.gen_range(-1.0..1.0);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    #[test]
    fn lanczos_matches_dense() {
        let a = random_sym(120, 9);
        let dense = symmetric_eigen(&a, false).unwrap().values;
        for which in [Which::Largest, Which::Smallest] {
            let opts = LanczosOptions {
                wanted: 3,
                which,
                want_vectors: true,
                ..Default::default()
            };
            let r = lanczos(&a, &opts).unwrap();
            assert!(r.converged);
            for k in 0..3 {
                let want = match which {
                    Which::Largest => dense[119 - k],
                    Which::Smallest => dense[k],
                };
                assert!((r.values[k] - want).abs() < 1e-8, "{which:?} {k}");
                let v = &r.vectors.as_ref().unwrap()[k];
                let av = a.mul_vec(v);
                let res: f64 = av.iter().zip(v).map(|(p, q)| (p - want * q).powi(2)).sum();
                assert!(res.sqrt() < 1e-6);
            }
        }
    }

    #[test]
    fn deflation_on_degenerate_spectrum() {
        // identity plus a rank-one bump: Krylov space from any start has dim 2
        let n = 50;
        let a = DenseMatrix::from_fn(n, n, |i, j| (i == j) as u8 as f64 + if i == 0 && j == 0 { 3.0 } else { 0.0 });
        let opts = LanczosOptions {
            wanted: 2,
            ..Default::default()
        };
        let r = lanczos(&a, &opts).unwrap();
        assert!((r.values[0] - 4.0).abs() < 1e-10);
        assert!((r.values[1] - 1.0).abs() < 1e-10);
        let s = LanczosOptions {
            which: Which::Smallest,
            ..opts
        };
        assert!((lanczos(&a, &s).unwrap().values[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn weighted_norm_of_diagonal_and_shift() {
        // weighted norm of a multiplication operator is the sup of |d|
        let n = 300;
        let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let w: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        let m = CsrMatrix::diagonal(&d);
        let wop = Weighted::new(&m, &w, &w);
        let got = operator_norm(&wop, 1).unwrap();
        let want = d.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!((got - want).abs() < 1e-8);
        // cyclic shift is an isometry for uniform weights
        let t: Vec<(u32, u32, f64)> = (0..n as u32).map(|i| ((i + 1) % n as u32, i, 1.0)).collect();
        let s = CsrMatrix::from_triplets(n, n, t);
        assert!((operator_norm(&s, 2).unwrap() - 1.0).abs() < 1e-8);
        let comp = Composed::new(vec![&s, &m]);
        let small = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 5.0);
        let ata = small.transpose().mul(&small);
        let top = symmetric_eigen(&ata, false).unwrap().values[2].sqrt();
        assert!((operator_norm(&small, 0).unwrap() - top).abs() < 1e-10);
        assert!((operator_norm(&comp, 3).unwrap() - want).abs() < 1e-8);
        let (l, _) = power_iteration(&Normal(&small), 10_000, 1e-14, 4).unwrap();
        assert!((l.sqrt() - top).abs() < 1e-6);
    }
}
