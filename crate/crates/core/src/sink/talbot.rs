//! Fixed-Talbot numerical inversion of Laplace transforms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Inverse Laplace transform of `f` at `t > 0` using `m` contour nodes.
///
/// Contour `s(θ) = r θ (cot θ + i)`, `r = 2m / (5t)`, trapezoidal rule in θ.
pub fn talbot_invert(f: impl Fn(Complex64) -> Complex64, t: f64, m: usize) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("t", format!("must be finite and > 0, got {t}")));
    }
    if m < 16 {
        return Err(Error::param("m", format!("at least 16 nodes required, got {m}")));
    }
    let r = 2.0 * m as f64 / (5.0 * t);
    let f0 = f(Complex64::new(r, 0.0));
    if !f0.is_finite() {
        return Err(Error::NonFinite(format!("transform at s = {r}")));
    }
    let mut acc = 0.5 * f0.re * (r * t).exp();
    for j in 1..m {
        let theta = j as f64 * PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let fs = f(s);
        if !fs.is_finite() {
            return Err(Error::NonFinite(format!("transform at s = {s}")));
        }
        acc += ((t * s).exp() * fs * Complex64::new(1.0, sigma)).re;
    }
    Ok(r / m as f64 * acc)
}
