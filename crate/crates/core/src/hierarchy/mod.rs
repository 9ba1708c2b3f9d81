//! Ultrametric hierarchies around a centre point.
//!
//! A hierarchy is the pair of sequences `d_i` (radius of the sphere `S_i`,
//! `i ≥ 1`, with `d_0 = 0` for the centre) and `N_i` (population of the ball
//! `B_i`, `N_0 = 1`). Everything downstream only ever looks at these two
//! sequences plus the Arrhenius exponent of the [`Kernel`].
//!
//! Hierarchies come in two flavours. *Generated* ones (self-similar and
//! perturbed scenarios) are materialised up to the largest level whose
//! population is representable in `f64` and carry an [`Asymptotics`] record
//! with witnessed bounds. *Tabulated* ones (explicit lists, or the sequences
//! induced by a [`FiniteTree`]) end at their last level.

mod tree;
mod validate;

pub use tree::{Branching, FiniteTree, DENSE_LEAF_BUDGET};
pub use validate::{validate, BoundedScenario, ConditionReport, LimitScenario, SummabilityCheck, Verdict};

use crate::{Error, Result};

/// Largest ball population materialised for generated hierarchies.
const MAX_BALL_SIZE: f64 = 1e300;
/// Hard cap on generated levels (reached only for p close to 1 growth).
const MAX_GENERATED_LEVELS: usize = 4096;

/// Transition kernel `K(d) = e^{-α d} / N(d)`; time is measured in units of τ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    alpha: f64,
}

impl Kernel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Rate between two points at distance `d` whose smallest common ball holds `n` points.
    pub fn rate(&self, d: f64, n: f64) -> f64 {
        (-self.alpha * d).exp() / n
    }
}

/// Asymptotic parameters of a generated hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct Asymptotics {
    /// Growth exponent: `N_i ≈ C^{-1} e^{θ i}`.
    pub theta: f64,
    /// Radius slope: `d_i ≈ ξ i + D`.
    pub xi: f64,
    /// Witnessed `sup |d_i - ξ i|` over the materialised levels.
    pub radius_bound: f64,
    /// Witnessed `(inf, sup)` of `N_i^{-1} e^{θ i}` over the materialised levels.
    pub ball_bounds: (f64, f64),
    /// Limits `(C, D)` when the construction is known to realise them exactly.
    pub limits: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Generated,
    Tabulated,
}

/// The sequences `d_i`, `N_i` around a centre point.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrametricHierarchy {
    /// `d_0 = 0, d_1, …, d_L`.
    radii: Vec<f64>,
    /// `N_0 = 1, N_1, …, N_L`.
    balls: Vec<f64>,
    asym: Option<Asymptotics>,
    origin: Origin,
}

impl UltrametricHierarchy {
    /// `d_i = ξ i`, `N_i = p^i`.
    pub fn self_similar(p: u32, xi: f64) -> Result<Self> {
        if p < 2 {
            return Err(Error::param("p", format!("branching must be >= 2, got {p}")));
        }
        check_xi(xi)?;
        let pf = f64::from(p);
        let mut radii = vec![0.0];
        let mut balls = vec![1.0];
        for i in 1..=MAX_GENERATED_LEVELS {
            let n = pf.powi(i as i32);
            if n > MAX_BALL_SIZE {
                break;
            }
            radii.push(xi * i as f64);
            balls.push(n);
        }
        Ok(Self {
            radii,
            balls,
            asym: Some(Asymptotics {
                theta: pf.ln(),
                xi,
                radius_bound: 0.0,
                ball_bounds: (1.0, 1.0),
                limits: Some((1.0, 0.0)),
            }),
            origin: Origin::Generated,
        })
    }

    /// `d_i = ξ i + δ_i`, `N_i = round(p^i (1 + ε_i))` for `i ≥ 1`.
    ///
    /// A continuous value `p^i (1 + ε_i)` that does not exceed `N_{i-1}` is
    /// rejected; one that exceeds it but rounds onto it is bumped to
    /// `N_{i-1} + 1`.
    pub fn perturbed(
        p: u32,
        xi: f64,
        delta: impl Fn(usize) -> f64,
        epsilon: impl Fn(usize) -> f64,
    ) -> Result<Self> {
        if p < 2 {
            return Err(Error::param("p", format!("branching must be >= 2, got {p}")));
        }
        check_xi(xi)?;
        let pf = f64::from(p);
        let theta = pf.ln();
        let mut radii = vec![0.0];
        let mut balls = vec![1.0];
        let mut radius_bound = 0.0_f64;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for i in 1..=MAX_GENERATED_LEVELS {
            let base = pf.powi(i as i32);
            if base > MAX_BALL_SIZE {
                break;
            }
            let (di, ei) = (delta(i), epsilon(i));
            if !di.is_finite() {
                return Err(Error::param("delta", format!("non-finite value at index {i}")));
            }
            if !(ei.is_finite() && ei > -1.0) {
                return Err(Error::param("epsilon", format!("must be finite and > -1 at index {i}")));
            }
            let d = xi * i as f64 + di;
            if d <= radii[i - 1] {
                return Err(Error::NonMonotone { sequence: "d", index: i });
            }
            let raw = base * (1.0 + ei);
            let prev = balls[i - 1];
            if raw <= prev {
                return Err(Error::NonMonotone { sequence: "N", index: i });
            }
            let n = raw.round().max(prev + 1.0);
            radius_bound = radius_bound.max(di.abs());
            let scaled = (theta * i as f64).exp() / n;
            lo = lo.min(scaled);
            hi = hi.max(scaled);
            radii.push(d);
            balls.push(n);
        }
        Ok(Self {
            radii,
            balls,
            asym: Some(Asymptotics {
                theta,
                xi,
                radius_bound,
                ball_bounds: (lo, hi),
                limits: None,
            }),
            origin: Origin::Generated,
        })
    }

    /// Explicit finite sequences: `radii = [d_1, …, d_L]`, `balls = [N_0, …, N_L]`.
    pub fn tabulated(radii: &[f64], balls: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::param("radii", "at least one level is required"));
        }
        if balls.len() != radii.len() + 1 {
            return Err(Error::param(
                "balls",
                format!("expected {} entries (N_0..N_L), got {}", radii.len() + 1, balls.len()),
            ));
        }
        if balls[0] != 1.0 {
            return Err(Error::param("balls", "N_0 must be 1"));
        }
        let mut full = Vec::with_capacity(radii.len() + 1);
        full.push(0.0);
        full.extend_from_slice(radii);
        for i in 1..full.len() {
            if !(full[i].is_finite() && full[i] > full[i - 1]) {
                return Err(Error::NonMonotone { sequence: "d", index: i });
            }
            if !(balls[i].is_finite() && balls[i] >= balls[i - 1] + 1.0) {
                return Err(Error::NonMonotone { sequence: "N", index: i });
            }
        }
        Ok(Self {
            radii: full,
            balls: balls.to_vec(),
            asym: None,
            origin: Origin::Tabulated,
        })
    }

    /// Tabulated copy of the first `levels` levels (the finite-space analogue).
    pub fn truncated(&self, levels: usize) -> Result<Self> {
        self.check_level(levels)?;
        if levels == 0 {
            return Err(Error::param("levels", "must be >= 1"));
        }
        Ok(Self {
            radii: self.radii[..=levels].to_vec(),
            balls: self.balls[..=levels].to_vec(),
            asym: None,
            origin: Origin::Tabulated,
        })
    }

    /// Highest available level `L` (levels are `0..=L`).
    pub fn max_level(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn is_generated(&self) -> bool {
        self.origin == Origin::Generated
    }

    pub fn asymptotics(&self) -> Option<&Asymptotics> {
        self.asym.as_ref()
    }

    fn check_level(&self, i: usize) -> Result<()> {
        if i > self.max_level() {
            return Err(Error::LevelOutOfRange {
                requested: i,
                available: self.max_level(),
            });
        }
        Ok(())
    }

    /// `d_i` (with `d_0 = 0`).
    pub fn radius(&self, i: usize) -> Result<f64> {
        self.check_level(i)?;
        Ok(self.radii[i])
    }

    /// `N_i`.
    pub fn ball_size(&self, i: usize) -> Result<f64> {
        self.check_level(i)?;
        Ok(self.balls[i])
    }

    /// `M_i = N_i - N_{i-1}`, `M_0 = 1`.
    pub fn sphere_size(&self, i: usize) -> Result<f64> {
        self.check_level(i)?;
        Ok(if i == 0 { 1.0 } else { self.balls[i] - self.balls[i - 1] })
    }

    /// `[d_0, …, d_L]`.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// `[N_0, …, N_L]`.
    pub fn balls(&self) -> &[f64] {
        &self.balls
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::param("xi", format!("must be finite and > 0, got {xi}")));
    }
    Ok(())
}

/// Distance between any point of `S_i` and any point of `S_j`: `max(d_i, d_j)`.
///
/// For `i = j = 0` this is the distance of the centre to itself and is 0 by
/// convention. Two points of the same sphere `S_i`, `i ≥ 1`, may sit at any
/// radius up to `d_i`, so that case is an error.
pub fn pair_sphere_distance(h: &UltrametricHierarchy, i: usize, j: usize) -> Result<f64> {
    let (di, dj) = (h.radius(i)?, h.radius(j)?);
    if i == j && i > 0 {
        return Err(Error::IntraSphereDistance(i));
    }
    Ok(di.max(dj))
}
