//! Small dense helpers shared by the operator layers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Split a complex matrix into its real and imaginary parts.
pub(crate) fn split(a: &DMatrix<C64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

pub(crate) fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<C64> {
    re.zip_map(im, C64::new)
}

/// Complex product routed through four real products, which use the blocked
/// f64 kernel instead of the generic scalar loop.
pub(crate) fn cmatmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(&re, &im)
}

pub(crate) fn cmatvec(a: &DMatrix<C64>, x: &DVector<C64>) -> DVector<C64> {
    a * x
}

/// Largest entrywise modulus of `a - b`.
pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Diagonal of `r * a * r^dagger` without forming the full product.
pub(crate) fn sandwich_diagonal(r: &DMatrix<C64>, a: &DMatrix<C64>) -> Vec<C64> {
    let ra = cmatmul(r, a);
    (0..r.nrows())
        .map(|m| {
            ra.row(m)
                .iter()
                .zip(r.row(m).iter())
                .map(|(x, y)| x * y.conj())
                .sum()
        })
        .collect()
}
