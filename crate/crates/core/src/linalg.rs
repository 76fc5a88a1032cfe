//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Equality tolerance for composed matrices and evolved states.
pub const TOL: f64 = 1e-10;
/// Unitarity tolerance for matrices built from exact entries.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for gate-level comparisons against reference matrices.
pub const GATE_TOL: f64 = 1e-8;

/// Environment variable that overrides the default CLI tolerance.
pub const TOL_ENV: &str = "SQC_TOL";

pub const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// `max |(U^dagger U - I)_ij|`. For non-square `U` this measures how far
/// the columns are from orthonormal.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_error(u) < tol
}

/// Largest entrywise modulus of `a - b`. Panics on shape mismatch.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Block-diagonal sum of the given square blocks.
pub fn direct_sum(blocks: &[&CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(n, m);
    let (mut r, mut k) = (0, 0);
    for b in blocks {
        out.view_mut((r, k), b.shape()).copy_from(*b);
        r += b.nrows();
        k += b.ncols();
    }
    out
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Default tolerance, honoring the `SQC_TOL` override when it parses.
pub fn default_tolerance() -> f64 {
    std::env::var(TOL_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|t| t.is_finite() && *t > 0.0)
        .unwrap_or(GATE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = CMatrix::identity(2, 2);
        let i3 = CMatrix::identity(3, 3);
        assert_eq!(kron(&i2, &i3), CMatrix::identity(6, 6));
    }

    #[test]
    fn direct_sum_places_blocks_on_diagonal() {
        let a = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = from_real_rows(&[&[5.0]]);
        let s = direct_sum(&[&a, &b]);
        assert_eq!(s.shape(), (3, 3));
        assert_eq!(s[(1, 0)], c(3.0, 0.0));
        assert_eq!(s[(2, 2)], c(5.0, 0.0));
        assert_eq!(s[(0, 2)], c(0.0, 0.0));
    }

    #[test]
    fn non_square_isometry_has_zero_unitarity_error() {
        let v = from_real_rows(&[&[1.0], &[0.0]]);
        assert!(unitarity_error(&v) < 1e-15);
        assert!(!is_unitary(&v, 1e-12));
    }
}
