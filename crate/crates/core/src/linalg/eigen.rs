//! Symmetric eigen-decomposition by Householder tridiagonalisation followed
//! by the implicit QL iteration (the EISPACK tred2/tql2 pair).

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: Option<DenseMatrix>,
}

pub fn symmetric_eigen(a: &DenseMatrix, want_vectors: bool) -> Result<SymEigen> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::invalid("eigen-decomposition needs a square matrix"));
    }
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: want_vectors.then(|| DenseMatrix::zeros(0, 0)),
        });
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, want_vectors);
    if want_vectors {
        tql2(&mut d, &mut e, Some(&mut v))?;
    } else {
        tql2(&mut d, &mut e, None)?;
    }
    Ok(SymEigen {
        values: d,
        vectors: want_vectors.then_some(v),
    })
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and sub-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<SymEigen> {
    let n = diag.len();
    let mut d = diag.to_vec();
    // tql2 expects e[i] to couple i-1 and i
    let mut e = vec![0.0; n];
    for i in 1..n {
        e[i] = off[i - 1];
    }
    if want_vectors {
        let mut v = DenseMatrix::identity(n);
        tql2(&mut d, &mut e, Some(&mut v))?;
        Ok(SymEigen {
            values: d,
            vectors: Some(v),
        })
    } else {
        tql2(&mut d, &mut e, None)?;
        Ok(SymEigen {
            values: d,
            vectors: None,
        })
    }
}

/// Eigenvalues of the Hermitian matrix `re + i im`, ascending, via the real
/// embedding `[[re, -im], [im, re]]` whose spectrum doubles each eigenvalue.
pub fn hermitian_eigenvalues(re: &DenseMatrix, im: &DenseMatrix) -> Result<Vec<f64>> {
    let n = re.rows();
    let big = DenseMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        match (bi, bj) {
            (0, 0) | (1, 1) => re[(ii, jj)],
            (0, 1) => -im[(ii, jj)],
            _ => im[(ii, jj)],
        }
    });
    let eig = symmetric_eigen(&big, false)?;
    Ok(eig.values.iter().step_by(2).copied().collect())
}

fn tred2(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    if !accumulate {
        for j in 0..n {
            d[j] = v[(j, j)];
        }
        e[0] = 0.0;
        return;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(d: &mut [f64], e: &mut [f64], mut v: Option<&mut DenseMatrix>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NotConverged {
                        what: "tridiagonal QL",
                        residual: e[l].abs(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let hk = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * hk;
                            v[(k, i)] = c * v[(k, i)] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // selection sort keeps the vector swaps simple
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(v) = v.as_deref_mut() {
                for r in 0..n {
                    let t = v[(r, i)];
                    v[(r, i)] = v[(r, k)];
                    v[(r, k)] = t;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    #[test]
    fn residuals_and_orthogonality() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (40, 4)] {
            let a = random_symmetric(n, seed);
            let eig = symmetric_eigen(&a, true).unwrap();
            let v = eig.vectors.as_ref().unwrap();
            for j in 0..n {
                let x = v.column(j);
                let ax = a.mul_vec(&x);
                for i in 0..n {
                    assert!((ax[i] - eig.values[j] * x[i]).abs() < 1e-12);
                }
            }
            let vtv = v.transpose().mul(v);
            assert!(vtv.max_abs_diff(&DenseMatrix::identity(n)) < 1e-12);
            let vals = symmetric_eigen(&a, false).unwrap().values;
            for (p, q) in vals.iter().zip(&eig.values) {
                assert!((p - q).abs() < 1e-12);
            }
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn known_spectra() {
        // path graph Laplacian: 2 - 2cos(k pi/(n+1))
        let n = 12;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let eig = tridiagonal_eigen(&diag, &off, true).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * core::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - want).abs() < 1e-12);
        }
        let diag = DenseMatrix::from_fn(3, 3, |i, j| if i == j { [3.0, -1.0, 2.0][i] } else { 0.0 });
        assert_eq!(symmetric_eigen(&diag, false).unwrap().values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn hermitian_embedding() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let re = DenseMatrix::identity(2);
        let im = DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => 1.0,
            (1, 0) => -1.0,
            _ => 0.0,
        });
        let ev = hermitian_eigenvalues(&re, &im).unwrap();
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12, "{ev:?}");
    }
}
