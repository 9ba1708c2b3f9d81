//! Exact solution series of the sink-free problem on spheres.

use serde::Serialize;

use crate::spectrum::{basis_value, Spectrum};
use crate::{Bounded, Error, Result};

/// Terms with `λ t` above this are dropped; each contributes less than `e^{-46} a_i`.
pub const HEAD_CUTOFF: f64 = 46.0;

/// Per-point values on the spheres `S_0..S_K` at one time.
#[derive(Debug, Clone, Serialize)]
pub struct SphereProfile {
    pub t: f64,
    /// Per-point occupation on `S_k`.
    pub values: Vec<f64>,
    /// `M_k f_k`.
    pub masses: Vec<f64>,
    pub terms_used: usize,
    pub residual_bound: f64,
}

impl SphereProfile {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn mode_budget(spec: &Spectrum, tol: f64, k_max: usize) -> Result<usize> {
    let n = spec.modes_for_tol(tol).ok_or_else(|| Error::TailBound {
        bound: spec.weight_tail(spec.mode_count()),
        tol,
    })?;
    Ok(n.max(k_max + 1).min(spec.mode_count()))
}

/// `f(x_0, t) = Σ a_i e^{-λ_i t}`.
pub fn center_value(spec: &Spectrum, t: f64, tol: f64) -> Result<Bounded<f64>> {
    check_t(t)?;
    let n = mode_budget(spec, tol, 0)?;
    let mut sum = 0.0;
    let mut skipped = 0.0;
    for (l, a) in spec.modes().take(n) {
        if l * t > HEAD_CUTOFF {
            skipped += a;
        } else {
            sum += a * (-l * t).exp();
        }
    }
    Ok(Bounded::new(sum, spec.weight_tail(n) + skipped * (-HEAD_CUTOFF).exp()))
}

/// Point-source solution on `S_0..S_K`.
///
/// For `k ≥ 1`, `f_k = Σ_{i>k} a_i (e^{-λ_i t} - e^{-λ_k t})`, which is the
/// telescoped form of `f(x_0,t) - Σ_{i≤k} a_i e^{-λ_i t} - e^{-λ_k t}/N_k`
/// with every term non-negative.
pub fn solve_point_source(spec: &Spectrum, t: f64, k_max: usize, tol: f64) -> Result<SphereProfile> {
    check_t(t)?;
    let h = spec.hierarchy();
    h.ball_size(k_max)?;
    if k_max > spec.len() {
        return Err(Error::LevelOutOfRange {
            requested: k_max,
            available: spec.len(),
        });
    }
    let n = mode_budget(spec, tol, k_max)?;
    let modes: Vec<(f64, f64)> = spec.modes().take(n).collect();
    let cut = (-HEAD_CUTOFF).exp();
    let mut terms = 0usize;
    let mut values = Vec::with_capacity(k_max + 1);

    let mut f0 = 0.0;
    for &(l, a) in &modes {
        if l * t <= HEAD_CUTOFF {
            f0 += a * (-l * t).exp();
            terms += 1;
        }
    }
    values.push(f0);
    for k in 1..=k_max {
        let lk = modes[k - 1].0;
        let mut s = 0.0;
        for &(l, a) in &modes[k..] {
            if l * t > HEAD_CUTOFF {
                continue;
            }
            // e^{-λ t} - e^{-λ_k t} = -e^{-λ t} expm1(-(λ_k - λ) t)
            s += -a * (-l * t).exp() * (-(lk - l) * t).exp_m1();
        }
        values.push(s);
    }
    let masses = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * h.sphere_size(k).unwrap_or(f64::NAN))
        .collect();
    Ok(SphereProfile {
        t,
        values,
        masses,
        terms_used: terms,
        residual_bound: spec.weight_tail(n) + cut,
    })
}

/// `f(x, t) = Σ c_i e^{-λ_i t} φ_i(x)` on `S_0..S_K` for arbitrary coefficients.
///
/// `c` follows the order of [`Spectrum::modes`], so on a finite space an
/// entry at position `L + 1` multiplies the constant mode. The residual bound
/// covers only the dropped head terms; the supplied prefix is taken as exact.
pub fn solve_general(spec: &Spectrum, c: &[f64], t: f64, k_max: usize) -> Result<SphereProfile> {
    check_t(t)?;
    check_square_summable(c)?;
    if c.len() > spec.mode_count() {
        return Err(Error::LevelOutOfRange {
            requested: c.len(),
            available: spec.mode_count(),
        });
    }
    let h = spec.hierarchy();
    h.ball_size(k_max)?;
    let mut values = vec![0.0; k_max + 1];
    let mut terms = 0;
    let mut dropped = 0.0_f64;
    for (i, ((l, _), &ci)) in spec.modes().zip(c).enumerate() {
        if ci == 0.0 {
            continue;
        }
        if l * t > HEAD_CUTOFF {
            dropped += ci.abs();
            continue;
        }
        terms += 1;
        let e = ci * (-l * t).exp();
        for (k, v) in values.iter_mut().enumerate() {
            *v += e * basis_value(h, i + 1, k)?;
        }
    }
    let masses = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * h.sphere_size(k).unwrap_or(f64::NAN))
        .collect();
    Ok(SphereProfile {
        t,
        values,
        masses,
        terms_used: terms,
        residual_bound: dropped * (-HEAD_CUTOFF).exp(),
    })
}

/// Rejects a prefix whose magnitudes increase strictly over its last 8 terms.
pub fn check_square_summable(c: &[f64]) -> Result<()> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("coefficient".into()));
    }
    if c.len() >= 8 {
        let tail = &c[c.len() - 8..];
        if tail.windows(2).all(|w| w[1].abs() > w[0].abs()) {
            return Err(Error::NotSquareSummable);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{Kernel, UltrametricHierarchy};
    use crate::spectrum::point_source_coefficients;
    use approx::assert_relative_eq;

    fn padic() -> Spectrum {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        Spectrum::with_default_tol(&h, Kernel::new(4f64.ln()).unwrap()).unwrap()
    }

    #[test]
    fn center_value_fixture() {
        let s = padic();
        let v = center_value(&s, 1.0, 1e-15).unwrap();
        assert!(v.bound <= 1e-15);
        assert_relative_eq!(v.value, 0.853_345_470_738_517_8, max_relative = 1e-14);
    }

    #[test]
    fn t_zero_is_the_telescoped_partial_sum() {
        let s = padic();
        let v = center_value(&s, 0.0, 1e-12).unwrap();
        assert!((v.value - 1.0).abs() <= v.bound);
        let p = solve_point_source(&s, 0.0, 5, 1e-12).unwrap();
        assert!(p.values[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn finite_space_conserves_mass() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap().truncated(8).unwrap();
        let s = Spectrum::with_default_tol(&h, Kernel::new(4f64.ln()).unwrap()).unwrap();
        for t in [0.0, 0.1, 1.0, 10.0, 1e3, 1e6] {
            let p = solve_point_source(&s, t, 8, 1e-14).unwrap();
            assert!((p.total_mass() - 1.0).abs() < 1e-12, "t = {t}");
            assert!(p.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn general_matches_point_source() {
        let s = padic();
        let c = point_source_coefficients(s.hierarchy(), 60).unwrap();
        for t in [0.01, 1.0, 100.0] {
            let g = solve_general(&s, &c, t, 6).unwrap();
            let p = solve_point_source(&s, t, 6, 1e-16).unwrap();
            for k in 0..=6 {
                assert!((g.values[k] - p.values[k]).abs() < 1e-12, "t = {t}, k = {k}");
            }
        }
    }

    #[test]
    fn ball_indicator_stays_flat_on_the_ball() {
        let s = padic();
        let n1 = 2.0;
        let mut c = point_source_coefficients(s.hierarchy(), 60).unwrap();
        c[0] = 0.0;
        c.iter_mut().skip(1).for_each(|x| *x *= n1);
        let p = solve_general(&s, &c, 1.0, 3).unwrap();
        assert_relative_eq!(p.values[0], p.values[1], max_relative = 1e-13);
        assert_relative_eq!(p.values[0], 0.959_673_441_166_603_1, max_relative = 1e-13);
        let zero = solve_general(&s, &[0.0; 10], 1.0, 3).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn growing_coefficients_rejected() {
        let c: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        assert!(matches!(check_square_summable(&c), Err(Error::NotSquareSummable)));
    }
}
