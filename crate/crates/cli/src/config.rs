//! Experiment configuration, read from TOML.
//!
//! Every field is optional except the seed, which must come from the file
//! or from `--seed`. Unset grids and budgets take per-experiment defaults;
//! the resolved values are echoed in the report.
//!
//! Laws are given either as explicit `distributions` or as `families`
//! crossed with `grid.n`.
//!
//! ```toml
//! experiment = "verify-rotinv"
//! seed = 7
//! budget_scale = 1.0
//!
//! [[distributions]]
//! family = "uniform_sphere"
//! dimension = 8
//!
//! [grid]
//! p = [2.0, 4.0, 8.0]
//!
//! [budgets]
//! outer_samples = 2000
//! sample_budget = 100000
//!
//! [tolerances]
//! rel_tol = 0.05
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use centroidkit::{DistributionSpec, DualSolveOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Families that can be instantiated in any dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Gaussian,
    Exponential,
    Rademacher,
    Sphere,
    Cube,
    Sparse,
    /// `A X` with `X` exponential and `A` a seeded random matrix whose
    /// singular values spread over `[1, 10]`.
    RandomLinearImage,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cx: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// SAA sample size defining empirical norms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_budget: Option<usize>,
    /// Realizations for outer expectations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_samples: Option<usize>,
    /// Cloud size for nets and packings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    /// Plain Monte Carlo sample size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    /// Number of random instances.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Multiplies every default budget (explicit budgets are not scaled).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distributions: Option<Vec<DistributionSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<FamilyName>>,
    pub grid: Grid,
    pub budgets: BudgetConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualSolveOptions>,
    /// Named thresholds overriding experiment defaults.
    pub tolerances: BTreeMap<String, f64>,
    /// Constant in the moment growth condition, for `entropy-zp`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Output directory; `--out` takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<std::path::PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn scale(&self) -> f64 {
        self.budget_scale.unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(s) = self.budget_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("budget_scale must be positive, got {s}"));
            }
        }
        if let Some(ds) = &self.distributions {
            if ds.is_empty() {
                return bad("distributions is empty".into());
            }
            for d in ds {
                d.validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        if let Some(d) = &self.dual {
            d.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        let g = &self.grid;
        let positive = |name: &str, v: &Option<Vec<f64>>| -> Result<(), CliError> {
            match v {
                Some(v) if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) => {
                    Err(CliError::Config(format!("grid.{name} must be a nonempty list of positive numbers")))
                }
                _ => Ok(()),
            }
        };
        positive("p", &g.p)?;
        positive("q", &g.q)?;
        positive("eps", &g.eps)?;
        positive("cx", &g.cx)?;
        if let Some(t) = &g.t {
            if t.is_empty() || t.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return bad("grid.t must be a nonempty list of nonnegative numbers".into());
            }
        }
        if let Some(n) = &g.n {
            if n.is_empty() || n.contains(&0) {
                return bad("grid.n must be a nonempty list of positive integers".into());
            }
        }
        if let Some(k) = &g.k {
            if k.is_empty() || k.contains(&0) {
                return bad("grid.k must be a nonempty list of positive integers".into());
            }
        }
        for (name, v) in &self.tolerances {
            if !v.is_finite() {
                return bad(format!("tolerance {name} is not finite"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_example() {
        let cfg = ExperimentConfig::from_toml(
            r#"
experiment = "verify-rotinv"
seed = 7
budget_scale = 1.0
families = ["gaussian", "random_linear_image"]

[[distributions]]
family = "uniform_sphere"
dimension = 8

[grid]
p = [2.0, 4.0, 8.0]

[budgets]
outer_samples = 2000
sample_budget = 100000

[tolerances]
rel_tol = 0.05
"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.families, Some(vec![FamilyName::Gaussian, FamilyName::RandomLinearImage]));
        assert_eq!(cfg.grid.p.as_deref(), Some(&[2.0, 4.0, 8.0][..]));
        assert_eq!(cfg.budgets.outer_samples, Some(2000));
        assert_eq!(cfg.tolerances["rel_tol"], 0.05);
        let echo = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&echo).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "seed = 1\nbudget_scale = 0",
            "seed = 1\n[grid]\np = []",
            "seed = 1\n[grid]\np = [-2.0]",
            "seed = 1\n[grid]\nn = [0]",
            "seed = 1\n[grid]\nk = [0]",
            "seed = 1\n[grid]\nt = [-1.0]",
            "seed = 1\ndistributions = []",
            "seed = 1\n[tolerances]\nx = nan",
        ] {
            let cfg = ExperimentConfig::from_toml(text).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{text}");
        }
        assert!(ExperimentConfig::from_toml("seed = 1\n[grid]\nr = [1.0]").is_err());
        assert!(ExperimentConfig::from_toml("families = [\"cauchy\"]").is_err());
    }
}
