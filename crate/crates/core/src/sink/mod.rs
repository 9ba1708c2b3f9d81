//! Point reaction sink at the centre.
//!
//! With `J(s) = Σ a_j / (s + λ_j)` the centre value and survival transform are
//!
//! ```text
//! f̃(x_0, s) = J(s) / (1 + k J(s)),    S̃(s) = (1 - k f̃(x_0, s)) / s.
//! ```
//!
//! The poles `-ν_i` solve `1 + k J(-ν) = 0` and interlace the spectrum,
//! `λ_1 < ν_1` and `λ_j < ν_j < λ_{j-1}`. With residues
//! `b_i = 1 / (k² |J'(-ν_i)|)` the time-domain solutions are the pole sums
//! `f(x_0, t) = Σ b_i e^{-ν_i t}` and `S(t) = k Σ (b_i/ν_i) e^{-ν_i t}`.
//!
//! On a finite space the constant mode enters as `λ_{L+1} = 0`, which adds
//! one more pole in `(0, λ_L)`.

mod talbot;

pub use talbot::talbot_invert;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::spectrum::{basis_value, Spectrum};
use crate::{Bounded, Error, Result};

/// Default number of poles.
pub const DEFAULT_POLES: usize = 40;
/// Relative distance to `-λ_j` below which `J` is not evaluated.
const POLE_PROXIMITY: f64 = 1e-13;
/// Bisection steps cap (each halves the bracket).
const MAX_BISECTIONS: usize = 400;
/// Doubling steps cap for the upper bracket of the first pole.
const MAX_DOUBLINGS: usize = 60;

/// `(λ, a)` modes of a spectrum with the tail of the coefficient sum.
#[derive(Debug, Clone)]
struct Modes {
    lambda: Vec<f64>,
    a: Vec<f64>,
    /// `Σ a_i` over the modes not held here.
    tail: f64,
}

impl Modes {
    fn new(spec: &Spectrum) -> Self {
        let (lambda, a) = spec.modes().unzip();
        Self {
            lambda,
            a,
            tail: spec.weight_tail(spec.mode_count()),
        }
    }

    fn smallest(&self) -> f64 {
        *self.lambda.last().expect("non-empty spectrum")
    }

    /// Lower bound of `|s + λ|` over the unheld modes, `λ ∈ [0, λ_last]`.
    fn tail_distance(&self, s: Complex64) -> f64 {
        let lo = -self.smallest();
        let x = s.re.clamp(lo, 0.0);
        ((s.re - x).powi(2) + s.im.powi(2)).sqrt()
    }

    fn check_proximity(&self, s: Complex64) -> Result<()> {
        for (j, &l) in self.lambda.iter().enumerate() {
            if (s + l).norm() <= POLE_PROXIMITY * l.max(s.norm()) {
                return Err(Error::PoleProximity {
                    point: format!("{s}"),
                    index: j + 1,
                });
            }
        }
        Ok(())
    }

    /// `Σ a_i / (s + λ_i)^p` for `p = 1, 2` with a bound on the unheld modes.
    fn sum(&self, s: Complex64, power: i32, tol: f64) -> Result<Bounded<Complex64>> {
        self.check_proximity(s)?;
        let bound = if self.tail == 0.0 {
            0.0
        } else {
            self.tail / self.tail_distance(s).powi(power)
        };
        if !(bound <= tol) {
            return Err(Error::TailBound { bound, tol });
        }
        let v = self
            .lambda
            .iter()
            .zip(&self.a)
            .map(|(&l, &a)| a / (s + l).powi(power))
            .sum::<Complex64>();
        Ok(Bounded::new(v, bound))
    }

    /// `1 + k J(-ν)` and the scale `1 + k Σ |terms|` used to normalise residuals.
    fn secular(&self, k: f64, nu: f64) -> (f64, f64) {
        let mut j = 0.0;
        let mut mag = 0.0;
        for (&l, &a) in self.lambda.iter().zip(&self.a) {
            let t = a / (l - nu);
            j += t;
            mag += t.abs();
        }
        (1.0 + k * j, 1.0 + k * mag)
    }
}

/// `J(s) = Σ a_j / (s + λ_j)`.
pub fn j_function(spec: &Spectrum, s: Complex64, tol: f64) -> Result<Bounded<Complex64>> {
    Modes::new(spec).sum(s, 1, tol)
}

/// `J'(s) = -Σ a_j / (s + λ_j)²`.
pub fn j_derivative(spec: &Spectrum, s: Complex64, tol: f64) -> Result<Bounded<Complex64>> {
    let v = Modes::new(spec).sum(s, 2, tol)?;
    Ok(Bounded::new(-v.value, v.bound))
}

/// Locates `ν_1..ν_n`, returning each root with its normalised residual
/// `|1 + kJ(-ν)| / (1 + k Σ|terms|)`.
pub fn find_poles(spec: &Spectrum, k_rate: f64, n: usize, tol: f64) -> Result<Vec<(f64, f64)>> {
    check_k(k_rate)?;
    let modes = Modes::new(spec);
    let available = modes.lambda.len();
    if n > available {
        return Err(Error::LevelOutOfRange {
            requested: n,
            available,
        });
    }
    (1..=n)
        .into_par_iter()
        .map(|j| locate(&modes, k_rate, j, tol))
        .collect()
}

fn locate(m: &Modes, k: f64, j: usize, tol: f64) -> Result<(f64, f64)> {
    let g = |nu: f64| m.secular(k, nu).0;
    let mut lo = m.lambda[j - 1];
    let mut hi = if j == 1 {
        let mut u = 2.0 * lo;
        let mut steps = 0;
        while g(u) <= 0.0 {
            u *= 2.0;
            steps += 1;
            if steps > MAX_DOUBLINGS {
                return Err(Error::Bracket {
                    index: 1,
                    reason: format!("no sign change up to {u:e}"),
                });
            }
        }
        u
    } else {
        m.lambda[j - 2]
    };
    // g → -∞ at lo⁺ and g → +∞ (or 1 for j = 1) at hi⁻; g is increasing in between.
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol * mid {
            break;
        }
        let v = g(mid);
        if !v.is_finite() {
            return Err(Error::Bracket {
                index: j,
                reason: format!("non-finite secular value at {mid:e}"),
            });
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    if nu <= m.lambda[j - 1] || (j > 1 && nu >= m.lambda[j - 2]) {
        return Err(Error::Bracket {
            index: j,
            reason: "bracket collapsed onto a pole".into(),
        });
    }
    let (v, scale) = m.secular(k, nu);
    Ok((nu, v.abs() / scale))
}

/// `b_i = 1 / (k² |J'(-ν_i)|)`.
pub fn residues(spec: &Spectrum, k_rate: f64, nu: &[f64], tol: f64) -> Result<Vec<f64>> {
    check_k(k_rate)?;
    let modes = Modes::new(spec);
    nu.iter()
        .map(|&v| {
            let d = modes.sum(Complex64::new(-v, 0.0), 2, tol)?;
            Ok(1.0 / (k_rate * k_rate * d.value.re.abs()))
        })
        .collect()
}

fn check_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::param("k_rate", format!("must be finite and > 0, got {k}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Pole {
    pub index: usize,
    pub lambda: f64,
    pub nu: f64,
    /// `Δ_i = ν_i / λ_i - 1`.
    pub delta: f64,
    pub b: f64,
    pub residual: f64,
}

/// Poles and residues of the sink problem at rate `k`.
#[derive(Debug, Clone)]
pub struct SinkSpectrum {
    k_rate: f64,
    poles: Vec<Pole>,
    modes: Modes,
}

impl SinkSpectrum {
    /// `n = None` takes [`DEFAULT_POLES`] (or all modes of a smaller finite
    /// space) and stops early once `b_i/ν_i < 1e-16 Σ_{j<i} b_j/ν_j`.
    pub fn new(spec: &Spectrum, k_rate: f64, n: Option<usize>, tol: f64) -> Result<Self> {
        let modes = Modes::new(spec);
        let count = n.unwrap_or_else(|| DEFAULT_POLES.min(modes.lambda.len()));
        let roots = find_poles(spec, k_rate, count, tol)?;
        let nu: Vec<f64> = roots.iter().map(|r| r.0).collect();
        let b = residues(spec, k_rate, &nu, 1e-12)?;
        let mut poles = Vec::with_capacity(count);
        let mut running = 0.0;
        for (i, ((nu, residual), b)) in roots.into_iter().zip(b).enumerate() {
            let ratio = b / nu;
            if n.is_none() && i > 0 && ratio < 1e-16 * running {
                break;
            }
            running += ratio;
            let lambda = modes.lambda[i];
            poles.push(Pole {
                index: i + 1,
                lambda,
                nu,
                delta: if lambda > 0.0 { nu / lambda - 1.0 } else { f64::INFINITY },
                b,
                residual,
            });
        }
        Ok(Self { k_rate, poles, modes })
    }

    pub fn k_rate(&self) -> f64 {
        self.k_rate
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn nu(&self) -> Vec<f64> {
        self.poles.iter().map(|p| p.nu).collect()
    }

    pub fn b(&self) -> Vec<f64> {
        self.poles.iter().map(|p| p.b).collect()
    }

    /// `k Σ b_i/ν_i` over the computed poles (1 in the limit).
    pub fn survival_mass(&self) -> f64 {
        self.k_rate * self.poles.iter().map(|p| p.b / p.nu).sum::<f64>()
    }

    /// `Σ b_i` over the computed poles (1 in the limit).
    pub fn center_mass(&self) -> f64 {
        self.poles.iter().map(|p| p.b).sum()
    }

    /// True when every pole lies strictly inside its bracket.
    pub fn interlaced(&self) -> bool {
        self.poles.iter().enumerate().all(|(i, p)| {
            p.nu > p.lambda && (i == 0 || p.nu < self.poles[i - 1].lambda)
        })
    }

    fn pole_sum(&self, t: f64, tol: f64, weight: impl Fn(&Pole) -> f64, tail: f64) -> Result<Bounded<f64>> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
        }
        // The missing poles carry total weight `tail` (from the unit-mass identities)
        // and decay at least as fast as e^{-0 t}.
        let remaining = if self.poles.len() == self.modes.lambda.len() { 0.0 } else { tail.abs() };
        let eps = 4.0 * f64::EPSILON * self.poles.len() as f64;
        if remaining > tol {
            return Err(Error::InsufficientPoles {
                available: self.poles.len(),
                achievable: remaining,
                tol,
            });
        }
        let v = self.poles.iter().map(|p| weight(p) * (-p.nu * t).exp()).sum();
        Ok(Bounded::new(v, remaining + eps))
    }

    /// `S(t) = k Σ (b_i/ν_i) e^{-ν_i t}`.
    pub fn survival(&self, t: f64, tol: f64) -> Result<Bounded<f64>> {
        let k = self.k_rate;
        self.pole_sum(t, tol, |p| k * p.b / p.nu, 1.0 - self.survival_mass())
    }

    /// `f(x_0, t) = Σ b_i e^{-ν_i t}`.
    pub fn center_value(&self, t: f64, tol: f64) -> Result<Bounded<f64>> {
        self.pole_sum(t, tol, |p| p.b, 1.0 - self.center_mass())
    }

    /// `Δ_i` with the residual of the separated-term identity
    ///
    /// `1/Δ_j = Σ_{i≠j} (a_i/a_j) / (λ_i/λ_j - 1 - Δ_j) + λ_j / (k a_j)`
    ///
    /// and a limit estimate from the last quarter of the indices.
    pub fn delta_sequence(&self) -> DeltaSequence {
        let m = &self.modes;
        let k = self.k_rate;
        let mut delta = Vec::new();
        let mut residual = Vec::new();
        for p in self.poles.iter().filter(|p| p.lambda > 0.0) {
            let j = p.index - 1;
            let (lj, aj, dj) = (m.lambda[j], m.a[j], p.delta);
            let mut rhs = lj / (k * aj);
            let mut mag = rhs.abs();
            for (i, (&li, &ai)) in m.lambda.iter().zip(&m.a).enumerate() {
                if i != j {
                    let t = (ai / aj) / (li / lj - 1.0 - dj);
                    rhs += t;
                    mag += t.abs();
                }
            }
            delta.push(dj);
            residual.push((rhs - 1.0 / dj).abs() / (mag + 1.0 / dj));
        }
        let q = (delta.len() / 4).max(1);
        let limit = delta[delta.len() - q..].iter().sum::<f64>() / q as f64;
        DeltaSequence {
            delta,
            identity_residual: residual,
            limit_estimate: limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaSequence {
    pub delta: Vec<f64>,
    pub identity_residual: Vec<f64>,
    pub limit_estimate: f64,
}

impl DeltaSequence {
    /// Successive differences `|Δ_{i+1} - Δ_i|` shrink over `from..=to` (1-based).
    pub fn cauchy_over(&self, from: usize, to: usize) -> bool {
        if from < 1 || to > self.delta.len() || to < from + 2 {
            return false;
        }
        let d = &self.delta[from - 1..to];
        let diffs: Vec<f64> = d.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        diffs.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-14)
    }
}

/// Laplace transform of the solution on `S_{k_idx}` for coefficients `c`
/// (ordered as [`Spectrum::modes`], zero-padded):
///
/// `f̃(s) = Σ_j [c_j - k C(s) w_j / (1 + k J(s))] φ_j / (s + λ_j)`,
/// with `w_j = a_j^{1/2}` and `C(s) = Σ w_j c_j / (s + λ_j)`.
pub fn laplace_value(
    spec: &Spectrum,
    k_rate: f64,
    c: &[f64],
    k_idx: usize,
    s: Complex64,
    tol: f64,
) -> Result<Complex64> {
    if !(k_rate.is_finite() && k_rate >= 0.0) {
        return Err(Error::param("k_rate", "must be finite and >= 0"));
    }
    if c.len() > spec.mode_count() {
        return Err(Error::LevelOutOfRange {
            requested: c.len(),
            available: spec.mode_count(),
        });
    }
    let m = Modes::new(spec);
    let j = m.sum(s, 1, tol)?.value;
    let h = spec.hierarchy();
    h.ball_size(k_idx)?;
    let mut cs = Complex64::new(0.0, 0.0);
    let mut direct = Complex64::new(0.0, 0.0);
    let mut sink = Complex64::new(0.0, 0.0);
    for (i, (&l, &a)) in m.lambda.iter().zip(&m.a).enumerate() {
        let w = a.sqrt();
        let ci = c.get(i).copied().unwrap_or(0.0);
        let inv = 1.0 / (s + l);
        cs += w * ci * inv;
        let phi = basis_value(h, i + 1, k_idx)?;
        direct += ci * phi * inv;
        sink += w * phi * inv;
    }
    Ok(direct - k_rate * cs / (1.0 + k_rate * j) * sink)
}

/// `f̃(x_0, s) = J / (1 + k J)` for the point source.
pub fn center_transform(spec: &Spectrum, k_rate: f64, s: Complex64, tol: f64) -> Result<Complex64> {
    let j = j_function(spec, s, tol)?.value;
    Ok(j / (1.0 + k_rate * j))
}

/// `S̃(s) = (1 - k f̃(x_0, s)) / s`.
pub fn survival_transform(spec: &Spectrum, k_rate: f64, s: Complex64, tol: f64) -> Result<Complex64> {
    let f = center_transform(spec, k_rate, s, tol)?;
    Ok((1.0 - k_rate * f) / s)
}

/// Talbot inversion of [`survival_transform`].
pub fn survival_talbot(spec: &Spectrum, k_rate: f64, t: f64, nodes: usize, tol: f64) -> Result<f64> {
    invert_transform(|s| survival_transform(spec, k_rate, s, tol), t, nodes)
}

/// Talbot inversion of [`center_transform`].
pub fn center_talbot(spec: &Spectrum, k_rate: f64, t: f64, nodes: usize, tol: f64) -> Result<f64> {
    invert_transform(|s| center_transform(spec, k_rate, s, tol), t, nodes)
}

/// Talbot inversion of a fallible transform; the first evaluation error is returned.
pub fn invert_transform(f: impl Fn(Complex64) -> Result<Complex64>, t: f64, nodes: usize) -> Result<f64> {
    let err = std::cell::RefCell::new(None);
    let v = talbot_invert(
        |s| match f(s) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                Complex64::new(f64::NAN, 0.0)
            }
        },
        t,
        nodes,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{Kernel, UltrametricHierarchy};
    use approx::assert_relative_eq;

    fn padic() -> Spectrum {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        Spectrum::with_default_tol(&h, Kernel::new(4f64.ln()).unwrap()).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn j_fixture_and_limits() {
        let s = padic();
        let v = j_function(&s, c(7.0 / 24.0), 1e-14).unwrap();
        assert_relative_eq!(v.value.re, 2.371_016_577_539_560_3, max_relative = 1e-14);
        assert!(j_function(&s, c(1e12), 1e-14).unwrap().value.norm() < 1e-11);
        assert!(matches!(j_function(&s, c(-7.0 / 24.0), 1e-14), Err(Error::PoleProximity { index: 1, .. })));
        assert!(matches!(j_function(&s, c(0.0), 1e-14), Err(Error::TailBound { .. })));
    }

    #[test]
    fn second_pole_bracket() {
        let s = padic();
        let p = find_poles(&s, 1.0, 2, 1e-16).unwrap();
        let (nu, res) = p[1];
        assert!(7.0 / 96.0 < nu && nu < 7.0 / 24.0);
        assert!(res <= 1e-12);
    }

    #[test]
    fn small_and_large_rates() {
        let s = padic();
        let small = find_poles(&s, 1e-8, 6, 1e-16).unwrap();
        for (j, (nu, _)) in small.iter().enumerate() {
            assert_relative_eq!(*nu, s.lambda()[j], max_relative = 1e-6);
        }
        // Large k pushes ν_j up towards the zero of J inside (λ_j, λ_{j-1}), not onto λ_{j-1}.
        let mid = find_poles(&s, 1.0, 6, 1e-16).unwrap();
        let large = find_poles(&s, 1e6, 6, 1e-16).unwrap();
        let huge = find_poles(&s, 1e12, 6, 1e-16).unwrap();
        for j in 1..6 {
            assert!(mid[j].0 < large[j].0 && large[j].0 <= huge[j].0);
            assert!(huge[j].0 < s.lambda()[j - 1]);
            assert_relative_eq!(large[j].0, huge[j].0, max_relative = 1e-5);
        }
        assert_relative_eq!(large[1].0 / s.lambda()[0], 0.584_614_608_678_590_9, max_relative = 1e-10);
    }

    #[test]
    fn identities() {
        let sink = SinkSpectrum::new(&padic(), 1.0, Some(40), 1e-16).unwrap();
        assert!(sink.interlaced());
        assert!((sink.survival_mass() - 1.0).abs() < 1e-8);
        assert!((sink.center_mass() - 1.0).abs() < 1e-8);
        assert!(sink.poles().iter().all(|p| p.b > 0.0));
        let ds = sink.delta_sequence();
        assert!(ds.identity_residual.iter().all(|&r| r <= 1e-8));
        assert!(ds.cauchy_over(10, 40));
    }

    #[test]
    fn survival_derivative_is_minus_k_center() {
        let sink = SinkSpectrum::new(&padic(), 1.0, None, 1e-16).unwrap();
        for t in [0.5, 3.0, 40.0] {
            let h = 1e-4 * t;
            let d = (sink.survival(t + h, 1e-8).unwrap().value - sink.survival(t - h, 1e-8).unwrap().value) / (2.0 * h);
            let f = sink.center_value(t, 1e-8).unwrap().value;
            assert_relative_eq!(d, -f, max_relative = 1e-6);
        }
        assert!((sink.survival(0.0, 1e-8).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_forms() {
        let s = padic();
        let pt = s.point_source();
        let z = Complex64::new(1.0, 0.3);
        let a = laplace_value(&s, 1.0, &pt, 0, z, 1e-14).unwrap();
        let b = center_transform(&s, 1.0, z, 1e-14).unwrap();
        assert!((a - b).norm() < 1e-12);
        let v = laplace_value(&s, 1.0, &pt, 0, c(1.0), 1e-14).unwrap();
        assert_relative_eq!(v.re, 0.464_537_509_143_304_7, max_relative = 1e-13);
        let free = laplace_value(&s, 0.0, &pt, 0, z, 1e-14).unwrap();
        assert!((free - j_function(&s, z, 1e-14).unwrap().value).norm() < 1e-13);
    }

    #[test]
    fn talbot_matches_pole_sum() {
        let s = padic();
        let sink = SinkSpectrum::new(&s, 1.0, Some(40), 1e-16).unwrap();
        let t = 10.0;
        let pole = sink.survival(t, 1e-8).unwrap().value;
        let tal = survival_talbot(&s, 1.0, t, 24, 1e-13).unwrap();
        assert_relative_eq!(pole, tal, max_relative = 1e-6);
    }
}
