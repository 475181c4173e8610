//! Dense and sparse kernels: symmetric eigen-decomposition, CSR storage and
//! Krylov estimates of extreme eigenvalues and operator norms.

mod dense;
mod eigen;
mod krylov;
mod sparse;

pub use dense::DenseMatrix;
pub use eigen::{hermitian_eigenvalues, symmetric_eigen, tridiagonal_eigen, SymEigen};
pub use krylov::{
    lanczos, operator_norm, power_iteration, BoxedOp, Composed, LanczosOptions, LanczosResult,
    LinearOp, Weighted, Which,
};
pub use sparse::CsrMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

pub fn weighted_norm(w: &[f64], a: &[f64]) -> f64 {
    use num_traits::Float;
    weighted_dot(w, a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
