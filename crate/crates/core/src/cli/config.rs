//! Run configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::Scenario;
use crate::{Error, Result};

/// Log-spaced time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
}

impl TGrid {
    pub const DEFAULT: TGrid = TGrid {
        t_min: 1e-2,
        t_max: 1e3,
        points_per_decade: 4,
    };

    pub fn check(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::param("t_grid", "needs 0 < t_min < t_max < inf"));
        }
        if self.points_per_decade < 4 {
            return Err(Error::param("t_grid", "points_per_decade must be >= 4"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        crate::asymptotics::log_grid(self.t_min, self.t_max, self.points_per_decade)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Target for series truncation and tail bounds.
    pub series: f64,
    /// Largest accepted analytic-vs-oracle difference.
    pub oracle: f64,
    /// Largest accepted Monte Carlo z-score.
    pub z_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            series: crate::spectrum::DEFAULT_TOL,
            oracle: 1e-8,
            z_max: 3.0,
        }
    }
}

/// Parameters `(a, b)` of the geometric series for theorem 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Overrides `scenario.alpha` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub sink_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<TGrid>,
    pub spheres: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Depth of explicit trees for `oracle-check` and `mc`.
    pub depth: usize,
    pub walkers: usize,
    pub mc_times: Vec<f64>,
    pub poles: usize,
    pub talbot_nodes: usize,
    pub modes: usize,
    pub series: SeriesParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            alpha: None,
            sink_rate: 1.0,
            t_grid: None,
            spheres: 4,
            tolerances: Tolerances::default(),
            seed: 42,
            output: None,
            depth: 8,
            walkers: 100_000,
            mc_times: vec![0.5, 5.0],
            poles: crate::sink::DEFAULT_POLES,
            talbot_nodes: 32,
            modes: crate::asymptotics::DEFAULT_MODES,
            series: SeriesParams { a: 2.0, b: 4.0 },
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text)?;
        cfg.normalise()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Folds `alpha` into the scenario and checks ranges.
    pub fn normalise(&mut self) -> Result<()> {
        if let Some(a) = self.alpha.take() {
            self.scenario.alpha = a;
        }
        if let Some(g) = &self.t_grid {
            g.check()?;
        }
        if !(self.sink_rate.is_finite() && self.sink_rate >= 0.0) {
            return Err(Error::param("sink_rate", "must be finite and >= 0"));
        }
        let t = &self.tolerances;
        if !(t.series > 0.0 && t.oracle > 0.0 && t.z_max > 0.0) {
            return Err(Error::param("tolerances", "must all be > 0"));
        }
        if self.mc_times.is_empty() {
            return Err(Error::param("mc_times", "must not be empty"));
        }
        Ok(())
    }

    /// Lower-case hex SHA-256 of the canonical JSON of the effective
    /// configuration, leaving out the output path.
    pub fn sha256(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_string(&c).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let cfg = RunConfig::from_json(r#"{"alpha": 2.0, "t_grid": {"t_min": 1, "t_max": 10, "points_per_decade": 4}}"#)
            .unwrap();
        assert_eq!(cfg.scenario.alpha, 2.0);
        assert_eq!(cfg.t_grid.unwrap().points().len(), 5);
        assert_ne!(cfg.sha256(), RunConfig::default().sha256());
    }

    #[test]
    fn rejects() {
        assert!(RunConfig::from_json(r#"{"t_grid": {"t_min": 1, "t_max": 10, "points_per_decade": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"sink_rate": -1}"#).is_err());
    }
}
