//! Numerical certification of the summability and asymptotic-regularity conditions.

use serde::Serialize;

use super::{Kernel, UltrametricHierarchy};
use crate::{Error, Result};

/// Spread below which a window of residuals counts as converged.
const LIMIT_FLAT: f64 = 1e-9;
/// Required shrink factor of the spread between consecutive quarter windows.
const LIMIT_SHRINK: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Violated,
    Undetermined,
}

impl Verdict {
    pub fn ok(self) -> bool {
        self == Verdict::Certified
    }
}

/// `Σ_{i≥0} 1/N_i < ∞` and `Σ_{j≥1} e^{-α d_j} < ∞`.
#[derive(Debug, Clone, Serialize)]
pub struct SummabilityCheck {
    pub verdict: Verdict,
    /// Sum of `1/N_i` over the available levels.
    pub inv_ball_sum: f64,
    /// Bound on the remainder beyond the available levels.
    pub inv_ball_tail: f64,
    /// Sum of `e^{-α d_j}` over the available levels.
    pub kernel_sum: f64,
    pub kernel_tail: f64,
}

/// `A < N_i^{-1} e^{θ i} < A'` and `|d_i - ξ i| < B`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundedScenario {
    pub verdict: Verdict,
    pub theta: f64,
    pub xi: f64,
    pub a_lower: f64,
    pub a_upper: f64,
    pub b: f64,
}

/// `N_i^{-1} e^{θ i} → C` and `d_i - ξ i → D ≥ 0`.
#[derive(Debug, Clone, Serialize)]
pub struct LimitScenario {
    pub verdict: Verdict,
    pub c: f64,
    pub d: f64,
    /// `δ_i = d_i - ξ i - D` over the probe window.
    pub delta: Vec<f64>,
    /// `ε_i = C N_i e^{-θ i} - 1` over the probe window.
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub probe_depth: usize,
    pub restr: SummabilityCheck,
    pub bounded: BoundedScenario,
    pub limit: LimitScenario,
}

impl ConditionReport {
    /// True when both summability and the bounded scenario are certified,
    /// and additionally the limit scenario when `require_limit` is set.
    pub fn certified(&self, require_limit: bool) -> bool {
        self.restr.verdict.ok() && self.bounded.verdict.ok() && (!require_limit || self.limit.verdict.ok())
    }
}

pub fn validate(h: &UltrametricHierarchy, kernel: &Kernel, probe_depth: usize) -> Result<ConditionReport> {
    if probe_depth < 8 {
        return Err(Error::param("probe_depth", format!("must be >= 8, got {probe_depth}")));
    }
    let alpha = kernel.alpha();
    let n = probe_depth.min(h.max_level());
    let balls = h.balls();
    let radii = h.radii();

    let (theta, xi) = match h.asymptotics() {
        Some(a) => (a.theta, a.xi),
        None => fit_rates(&balls[1..=n], &radii[1..=n]),
    };

    let (lo, hi, b) = witnesses(&balls[1..=n], &radii[1..=n], theta, xi);
    let bounded_ok = theta > 0.0 && xi > 0.0 && lo > 0.0 && hi.is_finite() && b.is_finite();
    let bounded = BoundedScenario {
        verdict: match (h.is_generated(), bounded_ok) {
            (_, false) => Verdict::Violated,
            (true, true) => Verdict::Certified,
            (false, true) => Verdict::Undetermined,
        },
        theta,
        xi,
        a_lower: lo,
        a_upper: hi,
        b,
    };

    let restr = summability(h, alpha, theta, xi);

    let eps_scaled: Vec<f64> = (1..=n)
        .map(|i| (theta * i as f64).exp() / balls[i])
        .collect();
    let d_resid: Vec<f64> = (1..=n).map(|i| radii[i] - xi * i as f64).collect();
    let (c, c_conv) = tail_limit(&eps_scaled);
    let (d, d_conv) = tail_limit(&d_resid);
    let limit_ok = c_conv && d_conv && c > 0.0 && d >= -LIMIT_FLAT;
    let limit = LimitScenario {
        verdict: if bounded.verdict == Verdict::Violated || !limit_ok {
            Verdict::Violated
        } else if h.is_generated() {
            Verdict::Certified
        } else {
            Verdict::Undetermined
        },
        c,
        d,
        delta: d_resid.iter().map(|r| r - d).collect(),
        epsilon: eps_scaled.iter().map(|e| c / e - 1.0).collect(),
    };

    Ok(ConditionReport {
        probe_depth: n,
        restr,
        bounded,
        limit,
    })
}

fn summability(h: &UltrametricHierarchy, alpha: f64, theta: f64, xi: f64) -> SummabilityCheck {
    let balls = h.balls();
    let radii = h.radii();
    let inv_ball_sum: f64 = balls.iter().map(|n| 1.0 / n).sum();
    let kernel_sum: f64 = radii[1..].iter().map(|d| (-alpha * d).exp()).sum();
    match h.asymptotics() {
        Some(a) => {
            let last = h.max_level() as f64;
            let inv_ball_tail = a.ball_bounds.1 * (-theta * (last + 1.0)).exp() / (1.0 - (-theta).exp());
            let kernel_tail =
                (alpha * a.radius_bound).exp() * (-alpha * xi * (last + 1.0)).exp() / (1.0 - (-alpha * xi).exp());
            let ok = theta > 0.0 && alpha * xi > 0.0 && inv_ball_tail.is_finite() && kernel_tail.is_finite();
            SummabilityCheck {
                verdict: if ok { Verdict::Certified } else { Verdict::Undetermined },
                inv_ball_sum,
                inv_ball_tail,
                kernel_sum,
                kernel_tail,
            }
        }
        // A finite space: both sums are finite and exact.
        None => SummabilityCheck {
            verdict: Verdict::Certified,
            inv_ball_sum,
            inv_ball_tail: 0.0,
            kernel_sum,
            kernel_tail: 0.0,
        },
    }
}

/// Least-squares slopes of `ln N_i` and `d_i` against `i`.
fn fit_rates(balls: &[f64], radii: &[f64]) -> (f64, f64) {
    let idx: Vec<f64> = (1..=balls.len()).map(|i| i as f64).collect();
    let ln_n: Vec<f64> = balls.iter().map(|n| n.ln()).collect();
    (slope(&idx, &ln_n), slope(&idx, radii))
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        y[0] / x[0]
    } else {
        sxy / sxx
    }
}

fn witnesses(balls: &[f64], radii: &[f64], theta: f64, xi: f64) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    let mut b = 0.0_f64;
    for (k, (n, d)) in balls.iter().zip(radii).enumerate() {
        let i = (k + 1) as f64;
        let s = (theta * i).exp() / n;
        lo = lo.min(s);
        hi = hi.max(s);
        b = b.max((d - xi * i).abs());
    }
    (lo, hi, b)
}

/// Mean of the last quarter and whether the sequence looks convergent there.
fn tail_limit(seq: &[f64]) -> (f64, bool) {
    let q = (seq.len() / 4).max(2);
    let last = &seq[seq.len() - q..];
    let mean = last.iter().sum::<f64>() / q as f64;
    let spread = |w: &[f64]| {
        w.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - w.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let s_last = spread(last);
    let conv = if s_last <= LIMIT_FLAT * mean.abs().max(1.0) {
        true
    } else if seq.len() >= 2 * q {
        s_last < LIMIT_SHRINK * spread(&seq[seq.len() - 2 * q..seq.len() - q])
    } else {
        false
    };
    (mean, conv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln4() -> Kernel {
        Kernel::new(4f64.ln()).unwrap()
    }

    #[test]
    fn self_similar_is_certified() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        let r = validate(&h, &ln4(), 16).unwrap();
        assert!(r.certified(true));
        assert!((r.restr.inv_ball_sum - 2.0).abs() < 1e-14);
        assert!((r.restr.kernel_sum - 1.0 / 3.0).abs() < 1e-14);
        assert!((r.bounded.theta - 2f64.ln()).abs() < 1e-10);
        assert!((r.limit.c - 1.0).abs() < 1e-10);
        assert!(r.limit.d.abs() < 1e-10);
    }

    #[test]
    fn alternating_radii_are_bounded_only() {
        let h = UltrametricHierarchy::perturbed(
            2,
            1.0,
            |i| 0.3 * if i % 2 == 0 { 1.0 } else { -1.0 },
            |_| 0.0,
        )
        .unwrap();
        let r = validate(&h, &ln4(), 32).unwrap();
        assert!(r.certified(false));
        assert!(!r.certified(true));
        assert!((r.bounded.b - 0.3).abs() < 1e-12);
        assert_eq!(r.limit.verdict, Verdict::Violated);
    }

    #[test]
    fn decaying_radius_perturbation_has_a_limit() {
        let h = UltrametricHierarchy::perturbed(2, 1.0, |i| 0.5 / i as f64, |_| 0.0).unwrap();
        let r = validate(&h, &ln4(), 64).unwrap();
        assert!(r.certified(true));
        assert!(r.limit.d.abs() < 0.02);
    }

    #[test]
    fn tabulated_is_summable_but_undetermined() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap().truncated(10).unwrap();
        let r = validate(&h, &ln4(), 10).unwrap();
        assert_eq!(r.restr.verdict, Verdict::Certified);
        assert_eq!(r.bounded.verdict, Verdict::Undetermined);
        assert!((r.bounded.theta - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn probe_depth_floor() {
        let h = UltrametricHierarchy::self_similar(2, 1.0).unwrap();
        assert!(validate(&h, &ln4(), 7).is_err());
    }
}
