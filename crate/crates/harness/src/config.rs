//! Experiment configuration: JSON schema, overrides and default resolution.

use std::fmt;
use std::path::Path;

use cdforge::{AnsatzSpec, Pauli, PropagationConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    KzSweep,
    StatePrep,
    SolveAux,
    Resources,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::KzSweep => "kz_sweep",
            ExperimentKind::StatePrep => "state_prep",
            ExperimentKind::SolveAux => "solve_aux",
            ExperimentKind::Resources => "resources",
        })
    }
}

/// Full experiment description. Fields left out of the JSON document take
/// defaults; [`ExperimentConfig::resolve`] fills the experiment-dependent ones
/// so the echoed config is complete.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<Vec<AnsatzConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<ResourceConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Chain lengths; defaults depend on the experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default = "one")]
    pub coupling: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { sizes: None, coupling: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "two")]
    pub b0: f64,
    #[serde(default)]
    pub bf: f64,
    /// Cubic ramp duration (state preparation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { b0: 2.0, bf: 0.0, tau: None }
    }
}

/// Quench rates, either listed or log-spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateGrid {
    Values(RateList),
    Log(LogRates),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateList {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRates {
    pub log_min: f64,
    pub log_max: f64,
    pub count: usize,
}

impl RateGrid {
    pub fn list(values: Vec<f64>) -> Self {
        RateGrid::Values(RateList { values })
    }

    pub fn log(log_min: f64, log_max: f64, count: usize) -> Self {
        RateGrid::Log(LogRates { log_min, log_max, count })
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            RateGrid::Values(ref l) => l.values.clone(),
            RateGrid::Log(LogRates { log_min, log_max, count }) => {
                if count == 1 {
                    return vec![log_min];
                }
                let (a, b) = (log_min.ln(), log_max.ln());
                (0..count)
                    .map(|k| {
                        if k + 1 == count {
                            log_max
                        } else if k == 0 {
                            log_min
                        } else {
                            (a + (b - a) * k as f64 / (count - 1) as f64).exp()
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    TwoBodyYz,
    Canonical,
    Patterns,
}

/// One operator set. The range is `range` when given, else `N − 1 −
/// range_below_full`, else the full chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: AnsatzKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_body: Option<usize>,
    /// Component words such as `"yz"` (patterns mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patterns: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_below_full: Option<usize>,
}

impl AnsatzConfig {
    pub fn two_body_yz() -> Self {
        Self {
            label: None,
            kind: AnsatzKind::TwoBodyYz,
            max_body: None,
            patterns: None,
            range: None,
            range_below_full: None,
        }
    }

    pub fn canonical(max_body: usize) -> Self {
        Self {
            kind: AnsatzKind::Canonical,
            max_body: Some(max_body),
            ..Self::two_body_yz()
        }
    }

    fn default_label(&self) -> String {
        let stem = match self.kind {
            AnsatzKind::TwoBodyYz => "yz".to_string(),
            AnsatzKind::Canonical => format!("k{}", self.max_body.unwrap_or(0)),
            AnsatzKind::Patterns => self.patterns.as_deref().unwrap_or_default().join("+"),
        };
        let range = match (self.range, self.range_below_full) {
            (Some(r), _) => format!("R{r}"),
            (None, Some(d)) => format!("full-{d}"),
            (None, None) => "full".to_string(),
        };
        format!("{stem}_{range}")
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().expect("resolved ansatz has a label")
    }

    /// Concrete operator-set description on an `n_sites` chain.
    pub fn spec(&self, n_sites: usize) -> Result<AnsatzSpec> {
        let full = n_sites.saturating_sub(1);
        let range = match (self.range, self.range_below_full) {
            (Some(r), _) => r,
            (None, Some(d)) => full.checked_sub(d).ok_or_else(|| {
                HarnessError::Config(format!("range_below_full = {d} exceeds the full range {full} at N = {n_sites}"))
            })?,
            (None, None) => full,
        };
        let spec = match self.kind {
            AnsatzKind::TwoBodyYz => AnsatzSpec::two_body_yz(range),
            AnsatzKind::Canonical => {
                let k = self
                    .max_body
                    .ok_or_else(|| HarnessError::Config("canonical ansatz needs max_body".into()))?;
                AnsatzSpec::canonical(k, range)
            }
            AnsatzKind::Patterns => {
                let words = self
                    .patterns
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("patterns ansatz needs a patterns list".into()))?;
                let parsed = words
                    .iter()
                    .map(|w| {
                        w.chars()
                            .map(|ch| {
                                Pauli::from_symbol(ch)
                                    .ok_or_else(|| HarnessError::Config(format!("bad Pauli symbol {ch:?} in pattern {w:?}")))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                AnsatzSpec::patterns(parsed, range)
            }
        };
        spec.validate(n_sites)
            .map_err(|e| HarnessError::Config(format!("ansatz {}: {e}", self.default_label())))?;
        Ok(spec)
    }
}

/// Single `(B, rate)` evaluation for `solve-aux`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default = "one")]
    pub field: f64,
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default)]
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    pub sizes: Vec<u64>,
    pub bodies: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Absolute base step; `None` means `dt_fraction × duration`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_dt_fraction")]
    pub dt_fraction: f64,
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_max_refinements")]
    pub max_refinements: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_norm_tol")]
    pub norm_tol: f64,
    /// Absolute gap tolerance; `None` uses the relative default.
    #[serde(default)]
    pub gap_tol: Option<f64>,
    /// Recorded times per trajectory.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt: None,
            dt_fraction: default_dt_fraction(),
            convergence_tol: default_convergence_tol(),
            max_refinements: default_max_refinements(),
            cutoff: default_cutoff(),
            norm_tol: default_norm_tol(),
            gap_tol: None,
            grid_points: default_grid_points(),
        }
    }
}

impl NumericsConfig {
    pub fn propagation(&self, duration: f64) -> PropagationConfig<f64> {
        let mut cfg = PropagationConfig::for_duration(duration);
        cfg.dt = self.dt.unwrap_or(self.dt_fraction * duration);
        cfg.convergence_tol = self.convergence_tol;
        cfg.max_refinements = self.max_refinements;
        cfg.cutoff = self.cutoff;
        cfg.norm_tol = self.norm_tol;
        cfg.gap_tol = self.gap_tol;
        cfg
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(HarnessError::Config(format!("numerics.{name} must be positive and finite, got {x}")))
            }
        };
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        positive("dt_fraction", self.dt_fraction)?;
        positive("convergence_tol", self.convergence_tol)?;
        positive("norm_tol", self.norm_tol)?;
        if let Some(g) = self.gap_tol {
            positive("gap_tol", g)?;
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(HarnessError::Config(format!("numerics.cutoff {} outside (0, 1)", self.cutoff)));
        }
        if self.grid_points < 2 {
            return Err(HarnessError::Config("numerics.grid_points must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Write the per-ansatz amplitude-flow tables in `state-prep`.
    #[serde(default = "yes")]
    pub amplitude_flow: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), amplitude_flow: true }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn default_dt_fraction() -> f64 {
    1e-3
}
fn default_convergence_tol() -> f64 {
    1e-6
}
fn default_max_refinements() -> usize {
    4
}
fn default_cutoff() -> f64 {
    cdforge::variational::DEFAULT_CUTOFF
}
fn default_norm_tol() -> f64 {
    1e-9
}
fn default_grid_points() -> usize {
    101
}
fn default_dir() -> String {
    "results".into()
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads the file, applies `key=value` overrides and parses.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("invalid JSON in {}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    /// Fills experiment-dependent defaults and validates everything that can
    /// be checked before computing.
    pub fn resolve(mut self, kind: ExperimentKind) -> Result<Self> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(HarnessError::Config(format!("config is for {k}, subcommand runs {kind}")));
            }
        }
        self.experiment = Some(kind);
        self.numerics.validate()?;
        let c = self.model.coupling;
        if !(c.is_finite() && c != 0.0) {
            return Err(HarnessError::Config(format!("model.coupling must be finite and nonzero, got {c}")));
        }
        if kind == ExperimentKind::Resources {
            let r = self.resources.get_or_insert_with(|| ResourceConfig {
                sizes: (1..=10).collect(),
                bodies: vec![1, 2, 3],
            });
            if r.sizes.is_empty() || r.bodies.is_empty() {
                return Err(HarnessError::Config("resources.sizes and resources.bodies must be nonempty".into()));
            }
            return Ok(self);
        }
        let sizes = self.model.sizes.get_or_insert_with(|| match kind {
            ExperimentKind::KzSweep => vec![4, 6, 8],
            ExperimentKind::StatePrep => vec![8],
            _ => vec![4],
        });
        if sizes.is_empty() {
            return Err(HarnessError::Config("model.sizes must be nonempty".into()));
        }
        if let Some(&bad) = sizes.iter().find(|&&n| n == 0 || n > cdforge::pauli::DEFAULT_DENSE_CAP) {
            return Err(HarnessError::Config(format!(
                "chain length {bad} outside [1, {}]",
                cdforge::pauli::DEFAULT_DENSE_CAP
            )));
        }
        let sizes = sizes.clone();
        let ansatz = self.ansatz.get_or_insert_with(|| match kind {
            ExperimentKind::StatePrep => vec![
                AnsatzConfig::two_body_yz(),
                AnsatzConfig {
                    range_below_full: Some(4),
                    ..AnsatzConfig::canonical(3)
                },
            ],
            _ => vec![AnsatzConfig::two_body_yz()],
        });
        for a in ansatz.iter_mut() {
            if a.label.is_none() {
                a.label = Some(a.default_label());
            }
            for &n in &sizes {
                a.spec(n)?;
            }
        }
        let mut labels: Vec<&str> = ansatz.iter().map(AnsatzConfig::label).collect();
        if labels.iter().any(|l| *l == BARE_LABEL || l.is_empty() || l.contains(['/', '\\'])) {
            return Err(HarnessError::Config(format!(
                "ansatz labels must be nonempty, path-safe and differ from {BARE_LABEL:?}"
            )));
        }
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Config("ansatz labels must be unique".into()));
        }
        let p = &self.protocol;
        if !(p.b0.is_finite() && p.bf.is_finite()) {
            return Err(HarnessError::Config("protocol fields must be finite".into()));
        }
        match kind {
            ExperimentKind::KzSweep => {
                if !(p.b0 > p.bf) {
                    return Err(HarnessError::Config(format!(
                        "linear quench needs b0 > bf, got b0 = {}, bf = {}",
                        p.b0, p.bf
                    )));
                }
                if !(p.bf <= c && c <= p.b0) {
                    return Err(HarnessError::Config(format!("quench [{}, {}] never crosses B = {c}", p.bf, p.b0)));
                }
                let rates = self.rates.get_or_insert(RateGrid::log(0.05, 10.0, 9));
                if let RateGrid::Log(LogRates { log_min, log_max, count }) = *rates {
                    if count == 0 || !(log_min > 0.0 && log_max >= log_min && log_max.is_finite()) {
                        return Err(HarnessError::Config("rates: need 0 < log_min <= log_max and count >= 1".into()));
                    }
                }
                let values = rates.values();
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(HarnessError::Config("rates must be a nonempty list of positive numbers".into()));
                }
            }
            ExperimentKind::StatePrep => {
                let tau = *self.protocol.tau.get_or_insert(5.0);
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(HarnessError::Config(format!("protocol.tau must be positive, got {tau}")));
                }
                if self.protocol.b0 == self.protocol.bf {
                    return Err(HarnessError::Config("cubic ramp needs b0 != bf".into()));
                }
            }
            ExperimentKind::SolveAux => {
                let pt = self.point.get_or_insert(PointConfig {
                    field: 1.0,
                    rate: 1.0,
                    level: 0,
                });
                if !(pt.field.is_finite() && pt.rate.is_finite()) {
                    return Err(HarnessError::Config("point.field and point.rate must be finite".into()));
                }
                if let Some(&n) = sizes.iter().find(|&&n| pt.level >= 1 << n) {
                    return Err(HarnessError::Config(format!("point.level {} out of range at N = {n}", pt.level)));
                }
            }
            ExperimentKind::Resources => unreachable!(),
        }
        Ok(self)
    }

    pub fn sizes(&self) -> &[usize] {
        self.model.sizes.as_deref().expect("resolved config has sizes")
    }

    pub fn ansatz_list(&self) -> &[AnsatzConfig] {
        self.ansatz.as_deref().unwrap_or_default()
    }
}

/// Label used for runs without a control field.
pub const BARE_LABEL: &str = "none";

/// Sets a dotted path (`numerics.dt=1e-4`, `ansatz.0.range=3`) in a JSON
/// document. The value is parsed as JSON and falls back to a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override {assignment:?} is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(HarnessError::Config(format!("override path {path:?} has an empty segment")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut cur = doc;
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| HarnessError::Config(format!("override path {path:?}: {key:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| HarnessError::Config(format!("override path {path:?}: index {idx} out of {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(HarnessError::Config(format!(
                    "override path {path:?}: segment {key:?} descends into a scalar"
                )))
            }
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn override_paths() {
        let mut doc = json!({"numerics": {"dt": 0.1}, "ansatz": [{"kind": "two_body_yz"}]});
        apply_override(&mut doc, "numerics.dt=0.01").unwrap();
        apply_override(&mut doc, "ansatz.0.range=3").unwrap();
        apply_override(&mut doc, "model.sizes=[4, 6]").unwrap();
        apply_override(&mut doc, "output.dir=out/x").unwrap();
        assert_eq!(doc["numerics"]["dt"], json!(0.01));
        assert_eq!(doc["ansatz"][0]["range"], json!(3));
        assert_eq!(doc["model"]["sizes"], json!([4, 6]));
        assert_eq!(doc["output"]["dir"], json!("out/x"));
        assert!(apply_override(&mut doc, "numerics.dt.x=1").is_err());
        assert!(apply_override(&mut doc, "ansatz.5.range=1").is_err());
        assert!(apply_override(&mut doc, "novalue").is_err());
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let v = RateGrid::log(0.05, 10.0, 5).values();
        assert_eq!(v.len(), 5);
        assert_eq!((v[0], v[4]), (0.05, 10.0));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn labels_and_ranges() {
        let a = AnsatzConfig {
            range_below_full: Some(4),
            ..AnsatzConfig::canonical(3)
        };
        assert_eq!(a.default_label(), "k3_full-4");
        assert_eq!(a.spec(8).unwrap().range, 3);
        assert!(a.spec(4).is_err());
        assert_eq!(AnsatzConfig::two_body_yz().default_label(), "yz_full");
    }
}
