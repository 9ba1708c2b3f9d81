//! Power-law asymptotics with log-periodic modulation.
//!
//! Every law here has the shape `y(t) ~ t^{-β} F(t)` where
//!
//! ```text
//! F(t) = P Σ_{|m|≤M} exp(2πi m ln(σ t) / ω) Γ(β - 2πi m / ω)
//! ```
//!
//! is periodic in `ln t` with period `ω`. [`AsymptoticModel`] stores
//! `(β, ω, σ, P, M)`; the constructors fill them in for a geometric series
//! (`theorem2`), the centre value of a diffusing point source (`theorem3`)
//! and the survival probability with a sink (`theorem4`).

mod fit;
mod gamma;

pub use fit::{fit_power_exponent, log_grid, log_grid_aligned, log_periodicity_deviation, PowerFit};
pub use gamma::{complex_gamma, ln_gamma, reflection_defect};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::{Bounded, Error, Result};

/// Default number of Fourier modes on each side.
pub const DEFAULT_MODES: usize = 12;

/// Limits `(θ, ξ, C, D)` of a hierarchy in the limit scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitParams {
    pub theta: f64,
    pub xi: f64,
    pub c: f64,
    pub d: f64,
}

impl LimitParams {
    /// `(θ, ξ, C, D) = (ln p, ξ, 1, 0)`.
    pub fn self_similar(p: u32, xi: f64) -> Self {
        Self {
            theta: f64::from(p).ln(),
            xi,
            c: 1.0,
            d: 0.0,
        }
    }

    /// `η e^{-αD}` with `η = (1 - e^{-θ} e^{-αξ}) / (1 - e^{-αξ})`, the limit of `λ_i e^{αξ i}`.
    pub fn lambda_scale(&self, alpha: f64) -> f64 {
        let ax = alpha * self.xi;
        let eta = (1.0 - (-self.theta).exp() * (-ax).exp()) / (1.0 - (-ax).exp());
        eta * (-alpha * self.d).exp()
    }

    fn check(&self, alpha: f64) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("xi", self.xi), ("C", self.c), ("alpha", alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param("limits", format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(Error::param("limits", format!("D must be finite and >= 0, got {}", self.d)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticModel {
    pub beta: f64,
    pub log_period: f64,
    pub scale: f64,
    pub prefactor: f64,
    pub modes: usize,
}

impl AsymptoticModel {
    pub fn new(beta: f64, log_period: f64, scale: f64, prefactor: f64, modes: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be > 0, got {beta}")));
        }
        if !(log_period > 0.0 && log_period.is_finite()) {
            return Err(Error::param("log_period", format!("must be > 0, got {log_period}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("scale", format!("must be > 0, got {scale}")));
        }
        Ok(Self {
            beta,
            log_period,
            scale,
            prefactor,
            modes,
        })
    }

    /// `κ = e^{ω}`, the multiplicative period in `t`.
    pub fn kappa(&self) -> f64 {
        self.log_period.exp()
    }

    /// The full complex partial sum (its imaginary part cancels).
    pub fn modulation_complex(&self, t: f64) -> Result<Complex64> {
        let w = 2.0 * PI / self.log_period;
        let phase = (self.scale * t).ln();
        let m = self.modes as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -m..=m {
            let jf = j as f64;
            let g = complex_gamma(Complex64::new(self.beta, -w * jf))?;
            acc += Complex64::from_polar(1.0, w * jf * phase) * g;
        }
        Ok(self.prefactor * acc)
    }

    /// `F(t)`, summed by conjugate pairs.
    pub fn modulation(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::param("t", "must be > 0"));
        }
        let w = 2.0 * PI / self.log_period;
        let phase = (self.scale * t).ln();
        let mut acc = complex_gamma(Complex64::new(self.beta, 0.0))?.re;
        for j in 1..=self.modes {
            let jf = j as f64;
            let g = complex_gamma(Complex64::new(self.beta, -w * jf))?;
            acc += 2.0 * (Complex64::from_polar(1.0, w * jf * phase) * g).re;
        }
        Ok(self.prefactor * acc)
    }

    /// `t^{-β} F(t)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        Ok(t.powf(-self.beta) * self.modulation(t)?)
    }

    /// Smallest `M` whose first omitted term `|Γ(β - 2πi(M+1)/ω)|` is below `cut`.
    pub fn modes_for(beta: f64, log_period: f64, cut: f64) -> Result<usize> {
        let w = 2.0 * PI / log_period;
        for m in 0..400 {
            if complex_gamma(Complex64::new(beta, -w * (m + 1) as f64))?.norm() < cut {
                return Ok(m);
            }
        }
        Ok(400)
    }
}

/// Geometric series `Σ a_m e^{-b_m t}` with `a_m ~ a^{-m}`, `b_m ~ b^{-m}`:
/// `t^{ln a/ln b} S(t) ~ F(t)` with prefactor `1/ln b`, period `ln b`.
pub fn theorem2(a: f64, b: f64, modes: usize) -> Result<AsymptoticModel> {
    if !(a > 1.0 && b > 1.0) {
        return Err(Error::param("a, b", format!("both must exceed 1, got {a}, {b}")));
    }
    AsymptoticModel::new(a.ln() / b.ln(), b.ln(), 1.0, 1.0 / b.ln(), modes)
}

/// [`theorem2`] with enough modes that the first omitted Gamma factor is below `1e-16`.
pub fn theorem2_auto(a: f64, b: f64) -> Result<AsymptoticModel> {
    let m = AsymptoticModel::modes_for(a.ln() / b.ln(), b.ln(), 1e-16)?;
    theorem2(a, b, m)
}

/// `f(x_0, t) ~ t^{-θ/(αξ)} g(t)` for the diffusing point source.
///
/// The prefactor is `C (1 - e^{-θ}) e^{θ} / (αξ) · (η e^{-αD})^{-β}`: the
/// coefficient limit is `N_{i-1}^{-1}(1 - N_{i-1}/N_i) e^{θ i} → C (1 - e^{-θ}) e^{θ}`.
pub fn theorem3(lim: &LimitParams, alpha: f64, modes: usize) -> Result<AsymptoticModel> {
    lim.check(alpha)?;
    let ax = alpha * lim.xi;
    let beta = lim.theta / ax;
    let l = lim.lambda_scale(alpha);
    let amp = lim.c * (1.0 - (-lim.theta).exp()) * lim.theta.exp();
    AsymptoticModel::new(beta, ax, l, amp / ax * l.powf(-beta), modes)
}

/// The printed form of [`theorem3`], whose prefactor lacks the factor `e^{θ}`.
pub fn theorem3_as_printed(lim: &LimitParams, alpha: f64, modes: usize) -> Result<AsymptoticModel> {
    let m = theorem3(lim, alpha, modes)?;
    AsymptoticModel::new(m.beta, m.log_period, m.scale, m.prefactor * (-lim.theta).exp(), modes)
}

/// `G(Δ) = Σ_{m∈Z} e^{-θ m} / (e^{-αξ m} - 1 - Δ)²`.
pub fn lattice_residue_factor(theta: f64, alpha_xi: f64, delta: f64) -> f64 {
    lattice_sum(theta, alpha_xi, delta, 2)
}

fn lattice_sum(theta: f64, ax: f64, delta: f64, power: i32) -> f64 {
    let term = |m: i32| (-theta * m as f64).exp() / ((-ax * m as f64).exp() - 1.0 - delta).powi(power);
    let mut s = term(0);
    for m in 1..2000 {
        let (up, down) = (term(m), term(-m));
        s += up + down;
        if up.abs() + down.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    s
}

/// Limit `Δ` of `ν_i/λ_i - 1`: the root in `(0, e^{αξ} - 1)` of
/// `Σ_m e^{-θ m} / (e^{-αξ m} - 1 - Δ) = 0` (the pole equation on the
/// asymptotic lattice of eigenvalues).
pub fn limiting_delta(theta: f64, alpha_xi: f64) -> Result<f64> {
    if !(alpha_xi > theta) {
        return Err(Error::HypothesisViolation { alpha_xi, theta });
    }
    let f = |d: f64| lattice_sum(theta, alpha_xi, d, 1);
    let (mut lo, mut hi) = (0.0, alpha_xi.exp() - 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `S(t) ~ t^{-(αξ-θ)/(αξ)} h(t)` with a sink of rate `k` and limiting gap `Δ`.
///
/// With `A = C (1 - e^{-θ}) e^{θ}`, `L = η e^{-αD}` and `B' = L (1 + Δ)` the
/// prefactor is `L / (k A G(Δ) (1 + Δ)) / (αξ) · B'^{-β}`.
pub fn theorem4(lim: &LimitParams, alpha: f64, k_rate: f64, delta: f64, modes: usize) -> Result<AsymptoticModel> {
    let (ax, beta, l, b) = theorem4_common(lim, alpha, k_rate, delta)?;
    let amp = lim.c * (1.0 - (-lim.theta).exp()) * lim.theta.exp();
    let g = lattice_residue_factor(lim.theta, ax, delta);
    let a_prime = l / (k_rate * amp * g * (1.0 + delta));
    AsymptoticModel::new(beta, ax, b, a_prime / ax * b.powf(-beta), modes)
}

/// The printed form of [`theorem4`] (prefactor `Δ² e^{-θ} L / (k² C (1+Δ)(1-e^{-θ}))`).
pub fn theorem4_as_printed(
    lim: &LimitParams,
    alpha: f64,
    k_rate: f64,
    delta: f64,
    modes: usize,
) -> Result<AsymptoticModel> {
    let (ax, beta, l, b) = theorem4_common(lim, alpha, k_rate, delta)?;
    let a_prime = delta * delta * (-lim.theta).exp() * l
        / (k_rate * k_rate * lim.c * (1.0 + delta) * (1.0 - (-lim.theta).exp()));
    AsymptoticModel::new(beta, ax, b, a_prime / ax * b.powf(-beta), modes)
}

fn theorem4_common(lim: &LimitParams, alpha: f64, k_rate: f64, delta: f64) -> Result<(f64, f64, f64, f64)> {
    lim.check(alpha)?;
    let ax = alpha * lim.xi;
    if !(ax > lim.theta) {
        return Err(Error::HypothesisViolation {
            alpha_xi: ax,
            theta: lim.theta,
        });
    }
    if !(k_rate > 0.0 && k_rate.is_finite()) {
        return Err(Error::param("k_rate", "must be finite and > 0"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("must be finite and > 0, got {delta}")));
    }
    let l = lim.lambda_scale(alpha);
    Ok((ax, (ax - lim.theta) / ax, l, l * (1.0 + delta)))
}

/// Decay witnesses `a_m a^m ≤ bound` and `b_m b^m ≤ bound` for [`brute_series`].
#[derive(Debug, Clone, Copy)]
pub struct DecayWitness {
    pub a: f64,
    pub b: f64,
    pub bound: f64,
}

/// Direct evaluation of `S(t) = Σ_{m≥0} a_m e^{-b_m t}` to absolute `tol`.
pub fn brute_series(
    a_seq: impl Fn(usize) -> f64,
    b_seq: impl Fn(usize) -> f64,
    witness: DecayWitness,
    t: f64,
    tol: f64,
) -> Result<Bounded<f64>> {
    if !(witness.a > 1.0 && witness.b > 1.0 && witness.bound > 0.0) {
        return Err(Error::param("witness", "needs a > 1, b > 1, bound > 0"));
    }
    if !(t >= 0.0 && tol > 0.0) {
        return Err(Error::param("t, tol", "need t >= 0 and tol > 0"));
    }
    let r = 1.0 / witness.a;
    let mut sum = 0.0;
    for m in 0..100_000usize {
        let (am, bm) = (a_seq(m), b_seq(m));
        let scale_a = am * witness.a.powi(m as i32);
        let scale_b = bm * witness.b.powi(m as i32);
        if !(am >= 0.0 && bm >= 0.0) || scale_a > witness.bound || scale_b > witness.bound {
            return Err(Error::DecayWitness { index: m });
        }
        sum += am * (-bm * t).exp();
        // Σ_{j>m} a_j ≤ bound r^{m+1} / (1 - r)
        let tail = witness.bound * r.powi(m as i32 + 1) / (1.0 - r);
        if tail <= tol {
            return Ok(Bounded::new(sum, tail));
        }
    }
    Err(Error::TailBound { bound: f64::NAN, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn theorem2_values() {
        let m0 = theorem2(2.0, 2.0, 0).unwrap();
        assert_relative_eq!(m0.modulation(1.0).unwrap(), std::f64::consts::LOG2_E, max_relative = 1e-14);
        let m = theorem2(2.0, 4.0, DEFAULT_MODES).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(m.modulation(e).unwrap(), 1.276_818_123_384_395_5, max_relative = 1e-12);
        assert_relative_eq!(m.modulation(4.0 * e).unwrap(), m.modulation(e).unwrap(), max_relative = 1e-12);
        assert!(m.modulation_complex(3.3).unwrap().im.abs() < 1e-14);
    }

    #[test]
    fn theorem3_m0() {
        let lim = LimitParams::self_similar(2, 1.0);
        let alpha = 4f64.ln();
        let g = theorem3(&lim, alpha, 0).unwrap();
        assert_relative_eq!(g.modulation(1.0).unwrap(), 1.183_712_093_989_879_5, max_relative = 1e-13);
        let p = theorem3_as_printed(&lim, alpha, 0).unwrap();
        assert_relative_eq!(p.modulation(1.0).unwrap(), 0.591_856_046_994_939_7, max_relative = 1e-13);
        assert_relative_eq!(g.beta, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn theorem4_guard_and_delta() {
        let lim = LimitParams::self_similar(2, 1.0);
        assert!(matches!(
            theorem4(&lim, 2f64.ln(), 1.0, 1.0, 12),
            Err(Error::HypothesisViolation { .. })
        ));
        let d = limiting_delta(2f64.ln(), 4f64.ln()).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let h = theorem4(&lim, 4f64.ln(), 1.0, d, 12).unwrap();
        assert_relative_eq!(h.beta, 0.5, max_relative = 1e-15);
        assert_relative_eq!(h.kappa(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn mode_truncation() {
        let m = theorem2(2.0, 4.0, 12).unwrap();
        let m4 = theorem2(2.0, 4.0, 16).unwrap();
        for t in [0.3, 7.0, 1e5] {
            assert!((m.modulation(t).unwrap() - m4.modulation(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_series_geometric() {
        let w = DecayWitness { a: 2.0, b: 2.0, bound: 1.0 };
        let v = brute_series(|m| 0.5f64.powi(m as i32), |m| 0.5f64.powi(m as i32), w, 0.0, 1e-15).unwrap();
        assert!((v.value - 2.0).abs() <= 2e-15);
        let bad = brute_series(|m| if m == 5 { 1.0 } else { 0.0 }, |_| 0.0, w, 0.0, 1e-15);
        assert!(matches!(bad, Err(Error::DecayWitness { index: 5 })));
    }
}
