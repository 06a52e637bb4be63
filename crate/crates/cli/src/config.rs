//! Experiment configuration, read from JSON. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "dataset": "iris.csv",
//!   "pattern": { "kind": "random", "rates": [0.1, 0.2, 0.3, 0.4, 0.5] },
//!   "methods": [{ "method": "mean" }, { "method": "knn", "k": 5 }, { "method": "dper" }],
//!   "seed": 42,
//!   "output_dir": "out"
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use corrgap::missingness::Corner;
use corrgap::render::DiffDomain;
use corrgap::{Estimator, NormalizationMode};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    #[serde(default = "default_true")]
    pub has_header: bool,
    /// `[height, width]` for image datasets; required by the block pattern.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_shape: Option<[usize; 2]>,
    #[serde(default)]
    pub normalization: NormalizationMode,
    /// Fit normalization on the complete data instead of each masked copy.
    #[serde(default)]
    pub normalize_on_complete: bool,
    pub pattern: PatternSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Concurrent method-by-rate jobs; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default)]
    pub figures: FigureConfig,
}

fn default_true() -> bool {
    true
}

fn default_timeout() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternSpec {
    Random {
        rates: Vec<f64>,
    },
    MonotoneBlock {
        block_fractions: Vec<f64>,
        #[serde(default = "default_affected")]
        affected_row_fraction: f64,
        #[serde(default)]
        corner: Corner,
    },
}

fn default_affected() -> f64 {
    0.5
}

impl PatternSpec {
    /// The x-axis of every figure: missing rates or block fractions.
    pub fn levels(&self) -> &[f64] {
        match self {
            PatternSpec::Random { rates } => rates,
            PatternSpec::MonotoneBlock { block_fractions, .. } => block_fractions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureConfig {
    pub cell_px: usize,
    pub diff_domain: DiffDomain,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig { cell_px: 12, diff_domain: DiffDomain::PerFigure }
    }
}

/// One entry of `methods`: a built-in estimator, or precomputed imputations
/// (`"method": "external"`) with one CSV per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct MethodSpec {
    /// Overrides the display name; needed to run one method twice.
    pub label: Option<String>,
    pub kind: MethodKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodKind {
    Builtin(Estimator),
    External { files: Vec<PathBuf>, has_header: bool },
}

impl MethodSpec {
    pub fn builtin(e: Estimator) -> Self {
        MethodSpec { label: None, kind: MethodKind::Builtin(e) }
    }

    pub fn name(&self) -> String {
        match (&self.label, &self.kind) {
            (Some(l), _) => l.clone(),
            (None, MethodKind::Builtin(e)) => e.name().to_owned(),
            (None, MethodKind::External { .. }) => "external".to_owned(),
        }
    }
}

impl TryFrom<Value> for MethodSpec {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, String> {
        let Value::Object(mut map) = v else {
            return Err("method entry must be an object".into());
        };
        let label = match map.remove("label") {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err("label must be a string".into()),
        };
        if map.get("method").and_then(Value::as_str) == Some("external") {
            map.remove("method");
            let label = label.ok_or("external methods need a label")?;
            let files = map.remove("files").ok_or("external methods need files")?;
            let files: Vec<PathBuf> = serde_json::from_value(files).map_err(|e| format!("files: {e}"))?;
            let has_header = match map.remove("has_header") {
                None => true,
                Some(Value::Bool(b)) => b,
                Some(_) => return Err("has_header must be a boolean".into()),
            };
            if let Some(k) = map.keys().next() {
                return Err(format!("unknown field `{k}` for external method"));
            }
            return Ok(MethodSpec { label: Some(label), kind: MethodKind::External { files, has_header } });
        }
        let est: Estimator = serde_json::from_value(Value::Object(map)).map_err(|e| e.to_string())?;
        Ok(MethodSpec { label, kind: MethodKind::Builtin(est) })
    }
}

impl From<MethodSpec> for Value {
    fn from(m: MethodSpec) -> Value {
        let mut map = match m.kind {
            MethodKind::Builtin(e) => match serde_json::to_value(e) {
                Ok(Value::Object(map)) => map,
                _ => Map::new(),
            },
            MethodKind::External { files, has_header } => {
                let mut map = Map::new();
                map.insert("method".into(), "external".into());
                map.insert("files".into(), serde_json::to_value(files).unwrap_or_default());
                map.insert("has_header".into(), has_header.into());
                map
            }
        };
        if let Some(l) = m.label {
            map.insert("label".into(), l.into());
        }
        Value::Object(map)
    }
}

/// File-name-safe form of a method name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.trim_matches('_').to_owned()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.output_dir);
        for m in &mut self.methods {
            if let MethodKind::External { files, .. } = &mut m.kind {
                files.iter_mut().for_each(fix);
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let levels = self.pattern.levels();
        if levels.is_empty() {
            return bad("pattern needs at least one rate".into());
        }
        if let Some(r) = levels.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return bad(format!("rate {r} outside (0, 1)"));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return bad("rates must be strictly increasing".into());
        }
        if let PatternSpec::MonotoneBlock { affected_row_fraction: f, .. } = self.pattern {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("affected_row_fraction {f} outside (0, 1]"));
            }
            if self.image_shape.is_none() {
                return bad("the monotone_block pattern needs image_shape".into());
            }
        }
        if self.methods.is_empty() {
            return bad("methods list is empty".into());
        }
        let mut names = BTreeSet::new();
        let mut slugs = BTreeSet::new();
        for m in &self.methods {
            let name = m.name();
            if !names.insert(name.clone()) {
                return bad(format!("duplicate method name `{name}`; set distinct labels"));
            }
            let s = slug(&name);
            if s.is_empty() || !slugs.insert(s) {
                return bad(format!("method name `{name}` does not give a unique file name"));
            }
            if let MethodKind::External { files, .. } = &m.kind {
                if files.len() != levels.len() {
                    return bad(format!("`{name}` lists {} files for {} rates", files.len(), levels.len()));
                }
            }
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return bad("timeout_secs must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if self.figures.cell_px == 0 {
            return bad("figures.cell_px must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset": "d.csv",
        "pattern": {"kind": "random", "rates": [0.1, 0.2]},
        "methods": [{"method": "mean"}, {"method": "knn", "k": 3}],
        "output_dir": "out"
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert!(cfg.has_header);
        assert_eq!(cfg.timeout_secs, 600.0);
        assert_eq!(cfg.figures.cell_px, 12);
        assert_eq!(cfg.normalization, NormalizationMode::MinMax01);
        assert_eq!(cfg.methods[1].kind, MethodKind::Builtin(Estimator::Knn { k: 3 }));
        assert_eq!(cfg.methods[1].name(), "KNNI");
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    fn with(field: &str, value: &str) -> Result<ExperimentConfig, CliError> {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        let parsed: Value = serde_json::from_str(value).unwrap();
        v[field] = parsed;
        ExperimentConfig::from_json(&v.to_string())
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(with("methods", "[]").is_err());
        assert!(with("pattern", r#"{"kind": "random", "rates": [0.2, 0.1]}"#).is_err());
        assert!(with("pattern", r#"{"kind": "random", "rates": [0.0, 0.1]}"#).is_err());
        assert!(with("pattern", r#"{"kind": "random", "rates": [0.5, 1.0]}"#).is_err());
        assert!(with("methods", r#"[{"method": "mean"}, {"method": "mean"}]"#).is_err());
        assert!(with("methods", r#"[{"method": "knn", "neighbours": 3}]"#).is_err());
        assert!(with("surprise", "1").is_err());
        assert!(with("pattern", r#"{"kind": "monotone_block", "block_fractions": [0.5]}"#).is_err());
    }

    #[test]
    fn labels_separate_duplicates() {
        let cfg = with(
            "methods",
            r#"[{"method": "knn", "k": 1, "label": "KNN-1"}, {"method": "knn", "k": 9, "label": "KNN-9"}]"#,
        )
        .unwrap();
        assert_eq!(cfg.methods[0].name(), "KNN-1");
    }

    #[test]
    fn external_method() {
        let cfg = with("methods", r#"[{"method": "external", "label": "GAIN", "files": ["a.csv", "b.csv"]}]"#).unwrap();
        match &cfg.methods[0].kind {
            MethodKind::External { files, has_header } => {
                assert_eq!(files.len(), 2);
                assert!(*has_header);
            }
            other => panic!("{other:?}"),
        }
        assert!(with("methods", r#"[{"method": "external", "label": "GAIN", "files": ["a.csv"]}]"#).is_err());
        assert!(with("methods", r#"[{"method": "external", "files": ["a.csv", "b.csv"]}]"#).is_err());
    }

    #[test]
    fn block_pattern() {
        let mut v: Value = serde_json::from_str(MINIMAL).unwrap();
        v["pattern"] = serde_json::json!({"kind": "monotone_block", "block_fractions": [0.25, 0.5], "corner": "top-right"});
        v["image_shape"] = serde_json::json!([8, 8]);
        let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(
            cfg.pattern,
            PatternSpec::MonotoneBlock { block_fractions: vec![0.25, 0.5], affected_row_fraction: 0.5, corner: Corner::TopRight }
        );
    }

    #[test]
    fn relative_paths_resolve() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.resolve_paths(Path::new("/data/exp"));
        assert_eq!(cfg.dataset, PathBuf::from("/data/exp/d.csv"));
        assert_eq!(cfg.output_dir, PathBuf::from("/data/exp/out"));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Mean Impute"), "mean_impute");
        assert_eq!(slug("DPER"), "dper");
    }
}
