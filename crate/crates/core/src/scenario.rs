//! JSON scenario descriptions.
//!
//! ```json
//! {"type": "perturbed", "p": 2, "xi": 1.0, "alpha": 1.386,
//!  "delta": [0.3, -0.3], "epsilon": [], "extend": "cycle"}
//! ```
//!
//! `delta` and `epsilon` list `δ_1, δ_2, …`; past the end they hold their
//! last value (`"extend": "hold"`, the default) or repeat (`"cycle"`). Missing
//! lists are all zero. A `"tree"` scenario gives `branching` (see
//! [`Branching`]) and `level_distance`.

use serde::{Deserialize, Serialize};

use crate::hierarchy::{Branching, FiniteTree, Kernel, UltrametricHierarchy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SelfSimilar,
    Perturbed,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extend {
    #[default]
    Hold,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "type")]
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub extend: Extend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<Branching>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_distance: Option<Vec<f64>>,
}

impl Default for Scenario {
    /// `p = 2`, `ξ = 1`, `α = ln 4`.
    fn default() -> Self {
        Self {
            kind: ScenarioKind::SelfSimilar,
            p: Some(2),
            xi: Some(1.0),
            alpha: 4f64.ln(),
            delta: Vec::new(),
            epsilon: Vec::new(),
            extend: Extend::Hold,
            branching: None,
            level_distance: None,
        }
    }
}

fn sequence(values: &[f64], extend: Extend) -> impl Fn(usize) -> f64 + '_ {
    move |i: usize| {
        if values.is_empty() || i == 0 {
            return 0.0;
        }
        match extend {
            Extend::Hold => values[(i - 1).min(values.len() - 1)],
            Extend::Cycle => values[(i - 1) % values.len()],
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::new(self.alpha)
    }

    fn p(&self) -> Result<u32> {
        self.p
            .ok_or_else(|| Error::Scenario(format!("{:?} scenario needs \"p\"", self.kind)))
    }

    fn xi(&self) -> Result<f64> {
        self.xi
            .ok_or_else(|| Error::Scenario(format!("{:?} scenario needs \"xi\"", self.kind)))
    }

    /// Explicit tree of a `"tree"` scenario.
    pub fn tree(&self) -> Result<FiniteTree> {
        let b = self
            .branching
            .as_ref()
            .ok_or_else(|| Error::Scenario("tree scenario needs \"branching\"".into()))?;
        let d = self
            .level_distance
            .as_ref()
            .ok_or_else(|| Error::Scenario("tree scenario needs \"level_distance\"".into()))?;
        FiniteTree::new(b, d)
    }

    pub fn hierarchy(&self) -> Result<UltrametricHierarchy> {
        match self.kind {
            ScenarioKind::SelfSimilar => UltrametricHierarchy::self_similar(self.p()?, self.xi()?),
            ScenarioKind::Perturbed => UltrametricHierarchy::perturbed(
                self.p()?,
                self.xi()?,
                sequence(&self.delta, self.extend),
                sequence(&self.epsilon, self.extend),
            ),
            ScenarioKind::Tree => self.tree()?.hierarchy(),
        }
    }

    /// Finite tree realising the scenario at `depth` (tree scenarios ignore `depth`).
    pub fn finite_tree(&self, depth: usize) -> Result<FiniteTree> {
        match self.kind {
            ScenarioKind::SelfSimilar => FiniteTree::uniform(self.p()?, depth, self.xi()?),
            ScenarioKind::Tree => self.tree(),
            ScenarioKind::Perturbed => Err(Error::Scenario(
                "perturbed scenarios have no explicit finite tree; use a \"tree\" scenario".into(),
            )),
        }
    }
}
