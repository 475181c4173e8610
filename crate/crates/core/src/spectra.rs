//! Irreducible representations of SU(2) on homogeneous polynomials and the
//! spectra of averaging operators.
//!
//! `pi_n(g)` acts on degree-`n` polynomials by `p -> p o g^-1` in the
//! orthonormal basis `z1^j z2^(n-j) / sqrt(j! (n-j)!)`. It is computed as
//! `exp(d pi_n(log g))`; the derived action is tridiagonal and is
//! diagonalised after a diagonal phase change makes it real.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::group_core::{GeneratorSet, GroupElement, GroupKind, Mat2, C64};
use crate::linalg::{hermitian_eigenvalues, tridiagonal_eigen, DenseMatrix};
use crate::measures::{kesten_radius, AtomicMeasure, KeyMode, DEFAULT_RESOLUTION};

pub const IRREP_CAP: usize = 512;

/// Dense complex square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul(&self, o: &CMatrix) -> CMatrix {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * o.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, o: &CMatrix) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |U U* - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.mul(&self.adjoint()).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `self += s * o`.
    pub fn add_scaled(&mut self, s: f64, o: &CMatrix) {
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += b * s;
        }
    }

    pub fn real_part(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| self[(i, j)].re)
    }

    pub fn imag_part(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| self[(i, j)].im)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n > IRREP_CAP {
        return Err(Error::CapExceeded {
            what: "irrep degree",
            needed: n as u128,
            cap: IRREP_CAP as u128,
        });
    }
    Ok(())
}

/// `pi_n(g)`, an `(n+1) x (n+1)` unitary matrix.
pub fn irrep_matrix(g: &GroupElement, n: usize) -> Result<CMatrix> {
    if g.kind() != GroupKind::Su2 {
        return Err(Error::KindMismatch);
    }
    check_degree(n)?;
    irrep_of_matrix(g.matrix(), n)
}

fn irrep_of_matrix(g: &Mat2, n: usize) -> Result<CMatrix> {
    let c = 0.5 * g.trace().re;
    // pi_n(-h) = (-1)^n pi_n(h); keeps the rotation angle below pi/2
    let (h, flip) = if c < 0.0 { (g.scale(C64::new(-1.0, 0.0)), n % 2 == 1) } else { (*g, false) };
    let c = c.abs();
    let traceless = h - Mat2::IDENTITY.scale(C64::new(c, 0.0));
    let s = traceless.frobenius() / 2f64.sqrt();
    let phi = s.atan2(c);
    let f = if s > 1e-300 { phi / s } else { 1.0 };
    let x = traceless.scale(C64::new(f, 0.0)).0;

    // H = i d pi_n(X), Hermitian tridiagonal
    let dim = n + 1;
    let i_unit = C64::new(0.0, 1.0);
    let mut diag = vec![0.0; dim];
    let mut off = vec![C64::new(0.0, 0.0); n];
    for j in 0..dim {
        let jf = j as f64;
        let nj = (n - j) as f64;
        diag[j] = (-(x[0][0] * jf + x[1][1] * nj) * i_unit).re;
        if j < n {
            off[j] = -i_unit * x[0][1] * ((jf + 1.0) * nj).sqrt();
        }
    }
    let mut phase = vec![C64::new(1.0, 0.0); dim];
    let mut off_abs = vec![0.0; n];
    for j in 0..n {
        let a = off[j].norm();
        off_abs[j] = a;
        phase[j + 1] = if a > 0.0 { phase[j] * off[j].conj() / a } else { phase[j] };
    }
    let eig = tridiagonal_eigen(&diag, &off_abs, true)?;
    let v = eig.vectors.expect("vectors requested");
    let rot: Vec<C64> = eig.values.iter().map(|&l| C64::new(0.0, -l).exp()).collect();
    let mut out = CMatrix::zeros(dim);
    for r in 0..dim {
        for col in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..dim {
                acc += rot[k] * (v[(r, k)] * v[(col, k)]);
            }
            out[(r, col)] = phase[r] * phase[col].conj() * acc;
        }
    }
    if flip {
        for z in out.data.iter_mut() {
            *z = -*z;
        }
    }
    Ok(out)
}

/// `pi_n(mu) = sum mu(g) pi_n(g)`.
pub fn averaging_operator(mu: &AtomicMeasure, n: usize) -> Result<CMatrix> {
    if mu.kind() != GroupKind::Su2 {
        return Err(Error::KindMismatch);
    }
    check_degree(n)?;
    let mats = mu.matrices();
    let weights = mu.weights();
    let mut paired = vec![false; mats.len()];
    let mut acc = CMatrix::zeros(n + 1);
    for i in 0..mats.len() {
        if paired[i] {
            continue;
        }
        let p = irrep_of_matrix(&mats[i], n)?;
        acc.add_scaled(weights[i], &p);
        // pi_n(g^-1) = pi_n(g)*
        let inv = mats[i].conj_transpose();
        if let Some(j) = (i + 1..mats.len()).find(|&j| !paired[j] && mats[j].dist(&inv) < 1e-12) {
            paired[j] = true;
            acc.add_scaled(weights[j], &p.adjoint());
        }
    }
    Ok(acc)
}

/// Ascending eigenvalues of `pi_n(mu)` for symmetric `mu`.
pub fn averaging_spectrum(mu: &AtomicMeasure, n: usize) -> Result<Vec<f64>> {
    let op = averaging_operator(mu, n)?;
    let defect = op.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::invalid(alloc::format!(
            "averaging operator is not Hermitian (defect {defect:e}); symmetrize the measure"
        )));
    }
    hermitian_eigenvalues(&op.real_part(), &op.imag_part())
}

/// Eigenvalues outside `±(sqrt(2k-1)/k + tol)`.
pub fn exceptional_count(spectrum: &[f64], k: usize, tol: f64) -> usize {
    let bound = kesten_radius(k) + tol;
    spectrum.iter().filter(|l| l.abs() > bound).count()
}

pub const EXCEPTIONAL_TOL: f64 = 1e-9;

/// `d_n` of the uniform measure on `T ∪ T^-1`.
pub fn exceptional_count_for(gens: &GeneratorSet, n: usize, tol: f64) -> Result<usize> {
    let mu = AtomicMeasure::symmetrize(gens, KeyMode::Quantized { resolution: DEFAULT_RESOLUTION })?;
    Ok(exceptional_count(&averaging_spectrum(&mu, n)?, gens.len(), tol))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensusRow {
    pub n: usize,
    pub count: usize,
    pub cumulative: usize,
}

/// Eigenvalues in the open interval `(1/2, 1)`; values within `1e-9` of 1
/// count as 1.
pub fn count_in_half_one(spectrum: &[f64]) -> usize {
    spectrum.iter().filter(|&&l| l > 0.5 && l < 1.0 - 1e-9).count()
}

/// Per-degree counts of eigenvalues of `pi_n(mu)` in `(1/2, 1)` for
/// `1 <= n <= n_max`, with running totals.
pub fn second_gap_census(gens: &GeneratorSet, n_max: usize) -> Result<Vec<CensusRow>> {
    check_degree(n_max)?;
    let mu = AtomicMeasure::symmetrize(gens, KeyMode::Quantized { resolution: DEFAULT_RESOLUTION })?;
    let mut rows = Vec::with_capacity(n_max);
    let mut total = 0;
    for n in 1..=n_max {
        let count = count_in_half_one(&averaging_spectrum(&mu, n)?);
        total += count;
        rows.push(CensusRow {
            n,
            count,
            cumulative: total,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_core::presets::lps_p5;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn haar(seed: u64) -> GroupElement {
        let mut r = stream(seed, "haar");
        let v: [f64; 4] = core::array::from_fn(|_| crate::rng::normal(&mut r));
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        GroupElement::su2(C64::new(v[0] / s, v[1] / s), C64::new(v[2] / s, v[3] / s)).unwrap()
    }

    fn torus(theta: f64) -> GroupElement {
        GroupElement::su2(C64::from_polar(1.0, theta), C64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn identity_and_torus() {
        let e = GroupElement::identity(GroupKind::Su2);
        for n in [0, 1, 5, 40] {
            assert!(irrep_matrix(&e, n).unwrap().max_abs_diff(&CMatrix::identity(n + 1)) < 1e-12);
        }
        let theta = 0.37;
        let m = irrep_matrix(&torus(theta), 6).unwrap();
        for j in 0..=6 {
            let want = C64::from_polar(1.0, (6.0 - 2.0 * j as f64) * theta);
            assert!((m[(j, j)] - want).norm() < 1e-12);
        }
        let m = irrep_matrix(&torus(core::f64::consts::FRAC_PI_2), 2).unwrap();
        let d: Vec<f64> = (0..3).map(|j| m[(j, j)].re).collect();
        assert!((d[0] + 1.0).abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12 && (d[2] + 1.0).abs() < 1e-12);
        assert!(matches!(
            irrep_matrix(&e, IRREP_CAP + 1),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn minus_identity_and_defining_rep() {
        let m = GroupElement::su2(C64::new(-1.0, 0.0), C64::new(0.0, 0.0)).unwrap();
        assert!(irrep_matrix(&m, 3).unwrap().max_abs_diff(&{
            let mut i = CMatrix::identity(4);
            i.add_scaled(-2.0, &CMatrix::identity(4));
            i
        }) < 1e-12);
        let g = haar(11);
        let p = irrep_matrix(&g, 1).unwrap();
        assert!((p.trace() - g.matrix().trace()).norm() < 1e-12);
    }

    #[test]
    fn lps_has_no_exceptional_eigenvalues_at_low_degree() {
        let gens = lps_p5().unwrap();
        for n in 1..=20 {
            assert_eq!(exceptional_count_for(&gens, n, 1e-6).unwrap(), 0, "n = {n}");
        }
        let e = AtomicMeasure::dirac_identity(GroupKind::Su2, KeyMode::Quantized { resolution: 1e-7 }).unwrap();
        let s = averaging_spectrum(&e, 4).unwrap();
        assert!(s.iter().all(|l| (l - 1.0).abs() < 1e-12));
        // the k = 1 bound is 1 itself
        assert_eq!(exceptional_count(&s, 1, EXCEPTIONAL_TOL), 0);
        assert_eq!(exceptional_count(&s, 2, EXCEPTIONAL_TOL), 5);
        assert_eq!(count_in_half_one(&s), 0);
        assert_eq!(averaging_spectrum(&e, 0).unwrap().len(), 1);
    }

    #[test]
    fn spectra_lie_in_unit_interval() {
        let gens = GeneratorSet::new(vec![haar(1), haar(2)]).unwrap();
        let mu = AtomicMeasure::symmetrize(&gens, KeyMode::Quantized { resolution: 1e-7 }).unwrap();
        for n in [1, 7, 30] {
            let s = averaging_spectrum(&mu, n).unwrap();
            assert_eq!(s.len(), n + 1);
            assert!(s.iter().all(|l| l.abs() <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn near_identity_spectrum_stays_near_one() {
        let eps = 0.01;
        let els: Vec<GroupElement> = (0..3)
            .map(|i| {
                let g = haar(100 + i);
                // geodesic toward g, at HS distance about eps
                let c = 0.5 * g.matrix().trace().re;
                let t = *g.matrix() - Mat2::IDENTITY.scale(C64::new(c, 0.0));
                let s = t.frobenius() / 2f64.sqrt();
                let phi = eps / 2f64.sqrt();
                let m = Mat2::IDENTITY.scale(C64::new(phi.cos(), 0.0)) + t.scale(C64::new(phi.sin() / s, 0.0));
                GroupElement::new(GroupKind::Su2, m).unwrap()
            })
            .collect();
        let gens = GeneratorSet::new(els).unwrap();
        let mu = AtomicMeasure::symmetrize(&gens, KeyMode::Quantized { resolution: 1e-7 }).unwrap();
        for n in [2, 10, 40] {
            let s = averaging_spectrum(&mu, n).unwrap();
            let c = (1.0 - s[0]) / eps;
            assert!(c <= 2.0 * n as f64, "n = {n}: c = {c}");
        }
    }

    #[test]
    fn census_counts_and_totals() {
        let gens = lps_p5().unwrap();
        let rows = second_gap_census(&gens, 12).unwrap();
        assert_eq!(rows.len(), 12);
        let mut t = 0;
        for r in &rows {
            t += r.count;
            assert_eq!(r.cumulative, t);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn homomorphism_unitarity_character(seed in 0u64..1_000_000, n in 0usize..48) {
            let g = haar(seed);
            let h = haar(seed ^ 0x9e37_79b9);
            let pg = irrep_matrix(&g, n).unwrap();
            let ph = irrep_matrix(&h, n).unwrap();
            let pgh = irrep_matrix(&g.multiply(&h).unwrap(), n).unwrap();
            prop_assert!(pg.unitarity_defect() < 1e-9);
            prop_assert!(pg.mul(&ph).max_abs_diff(&pgh) < 1e-8 * (n + 1) as f64);
            let theta = (0.5 * g.matrix().trace().re).clamp(-1.0, 1.0).acos();
            let chi = ((n + 1) as f64 * theta).sin() / theta.sin();
            prop_assert!((pg.trace() - C64::new(chi, 0.0)).norm() < 1e-7);
        }
    }
}
