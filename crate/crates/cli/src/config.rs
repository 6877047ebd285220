//! Experiment configuration files.
//!
//! A config is a TOML document with one `[model]` table, an optional
//! `[paper_scale]` table whose keys override `[model]` under `--paper-scale`,
//! and any number of `[[experiment]]` tables. See the README for the grammar.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// A config problem tied to a field path such as `experiment[2].dt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ValidationError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: ModelConfig,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kinetic {
    Spectral,
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    KickedRotor {
        kick: f64,
        cells: usize,
    },
    Lmg {
        n_bosons: usize,
        xi: f64,
        /// Left edge of the cell grid in `q`; defaults to centering a cell on `q = π`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_origin: Option<f64>,
    },
    Iho {
        hbar: f64,
        dx: f64,
        #[serde(default = "one")]
        p_cutoff: f64,
        #[serde(default = "minus_one")]
        curvature: f64,
        #[serde(default = "spectral")]
        kinetic: Kinetic,
        #[serde(default = "minus_half")]
        q_min: f64,
        #[serde(default = "half")]
        q_max: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn minus_one() -> f64 {
    -1.0
}
fn half() -> f64 {
    0.5
}
fn minus_half() -> f64 {
    -0.5
}
fn spectral() -> Kinetic {
    Kinetic::Spectral
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ClassicalSection,
    QuantumSection,
    OtocCurve,
    SpreadMap,
    EntropyCurve,
    WidthCurve,
    Ehrenfest,
    LyapunovReport,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ClassicalSection => "classical_section",
            ExperimentKind::QuantumSection => "quantum_section",
            ExperimentKind::OtocCurve => "otoc_curve",
            ExperimentKind::SpreadMap => "spread_map",
            ExperimentKind::EntropyCurve => "entropy_curve",
            ExperimentKind::WidthCurve => "width_curve",
            ExperimentKind::Ehrenfest => "ehrenfest",
            ExperimentKind::LyapunovReport => "lyapunov_report",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetConfig {
    #[default]
    Expectation,
    MinimalImage,
}

/// One experiment. Fields that a kind does not use are rejected by validation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    /// Output file stem; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Evolved and fixed operator: `Q`, `P` (cell labels) or `q`, `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<[String; 2]>,
    /// Several pairs, for `lyapunov_report`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<[String; 2]>,
    /// Phase-space points selecting cells; kicked-rotor coordinates are in units of 2π.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Sampling interval for continuous-time models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Also emit the infinite-temperature average.
    #[serde(default)]
    pub thermal: bool,
    /// Also emit the Gibbs-weighted average at this temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Sampling rectangle `[[q_lo, p_lo], [q_hi, p_hi]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<OffsetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saddle: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<bool>,
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.kind.expect("validated")
    }

    pub fn stem(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.kind().name().to_string())
    }
}

/// Parse a config, applying the `[paper_scale]` overrides when asked.
pub fn parse(text: &str, scale: Scale) -> Result<Config, ValidationError> {
    let mut doc: toml::Table =
        toml::from_str(text).map_err(|e| ValidationError::new("config", e.message()))?;
    let overrides = doc.remove("paper_scale");
    if scale == Scale::Paper {
        let Some(toml::Value::Table(over)) = overrides else {
            return Err(ValidationError::new(
                "paper_scale",
                "--paper-scale needs a [paper_scale] table",
            ));
        };
        let Some(toml::Value::Table(model)) = doc.get_mut("model") else {
            return Err(ValidationError::new("model", "missing [model] table"));
        };
        for (k, v) in over {
            model.insert(k, v);
        }
    }
    let config: Config = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| ValidationError::new("config", e.message()))?;
    validate(&config)?;
    Ok(config)
}

pub fn load(path: &Path, scale: Scale) -> anyhow::Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(parse(&text, scale)?)
}

fn positive(field: String, v: Option<f64>) -> Result<(), ValidationError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(ValidationError::new(field, "must be positive and finite"))
        }
        _ => Ok(()),
    }
}

/// First key that is set but has no meaning for `kind`.
fn unused_key(e: &ExperimentConfig, kind: ExperimentKind) -> Option<&'static str> {
    use ExperimentKind::*;
    let set = [
        (
            "pair",
            e.pair.is_some(),
            &[QuantumSection, OtocCurve, LyapunovReport][..],
        ),
        ("pairs", !e.pairs.is_empty(), &[LyapunovReport]),
        (
            "points",
            !e.points.is_empty(),
            &[
                OtocCurve,
                SpreadMap,
                EntropyCurve,
                WidthCurve,
                Ehrenfest,
                LyapunovReport,
            ],
        ),
        (
            "n_steps",
            e.n_steps.is_some(),
            &[
                QuantumSection,
                OtocCurve,
                SpreadMap,
                EntropyCurve,
                WidthCurve,
                Ehrenfest,
                LyapunovReport,
            ],
        ),
        ("thermal", e.thermal, &[OtocCurve]),
        ("temperature", e.temperature.is_some(), &[OtocCurve]),
        ("samples", e.samples.is_some(), &[ClassicalSection]),
        ("iterations", e.iterations.is_some(), &[ClassicalSection]),
        ("region", e.region.is_some(), &[ClassicalSection]),
        ("start", e.start.is_some(), &[Ehrenfest]),
        ("offset", e.offset.is_some(), &[Ehrenfest]),
        ("threshold", e.threshold.is_some(), &[Ehrenfest]),
        ("saddle", e.saddle.is_some(), &[LyapunovReport]),
        ("window", e.window.is_some(), &[LyapunovReport]),
        (
            "heatmap",
            e.heatmap.is_some(),
            &[ClassicalSection, QuantumSection],
        ),
    ];
    set.into_iter()
        .find(|(_, present, kinds)| *present && !kinds.contains(&kind))
        .map(|(key, ..)| key)
}

/// Field-level checks that do not need the model to be built.
pub fn validate(config: &Config) -> Result<(), ValidationError> {
    let continuous = !matches!(config.model, ModelConfig::KickedRotor { .. });
    if config.experiments.is_empty() {
        return Err(ValidationError::new(
            "experiment",
            "no [[experiment]] tables",
        ));
    }
    for (i, e) in config.experiments.iter().enumerate() {
        let at = |f: &str| format!("experiment[{i}].{f}");
        let Some(kind) = e.kind else {
            return Err(ValidationError::new(at("kind"), "missing"));
        };
        if let Some(name) = &e.name {
            if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
                return Err(ValidationError::new(
                    at("name"),
                    "must be a plain file stem",
                ));
            }
        }
        if let Some(key) = unused_key(e, kind) {
            return Err(ValidationError::new(
                at(key),
                format!("not used by {}", kind.name()),
            ));
        }
        positive(at("dt"), e.dt)?;
        positive(at("temperature"), e.temperature)?;
        positive(at("threshold"), e.threshold)?;
        use ExperimentKind::*;
        let uses_time = !matches!(kind, ClassicalSection);
        if uses_time {
            if e.n_steps.is_none() {
                return Err(ValidationError::new(at("n_steps"), "required"));
            }
            if continuous && e.dt.is_none() {
                return Err(ValidationError::new(
                    at("dt"),
                    "required for continuous-time models",
                ));
            }
            if !continuous && e.dt.is_some() {
                return Err(ValidationError::new(
                    at("dt"),
                    "the kicked rotor samples once per kick",
                ));
            }
        }
        let needs_points = matches!(
            kind,
            SpreadMap | EntropyCurve | WidthCurve | Ehrenfest | LyapunovReport
        );
        if needs_points && e.points.is_empty() {
            return Err(ValidationError::new(
                at("points"),
                "at least one point required",
            ));
        }
        if kind == OtocCurve && e.points.is_empty() && !e.thermal && e.temperature.is_none() {
            return Err(ValidationError::new(
                at("points"),
                "give points, thermal = true or a temperature",
            ));
        }
        if kind == ClassicalSection {
            if e.samples == Some(0) {
                return Err(ValidationError::new(at("samples"), "must be at least 1"));
            }
            if let Some([lo, hi]) = e.region {
                if !(hi[0] > lo[0] && hi[1] > lo[1]) {
                    return Err(ValidationError::new(
                        at("region"),
                        "upper corner must exceed lower corner",
                    ));
                }
            }
        }
        if kind == LyapunovReport {
            match e.window {
                Some([a, b]) if b > a && a >= 0.0 => {}
                Some(_) => return Err(ValidationError::new(at("window"), "need 0 ≤ start < end")),
                None => return Err(ValidationError::new(at("window"), "required")),
            }
        }
        if e.temperature.is_some() && !continuous {
            return Err(ValidationError::new(
                at("temperature"),
                "Gibbs weights need a Hamiltonian; the kicked rotor has none",
            ));
        }
        for (j, pair) in e.pair.iter().chain(&e.pairs).enumerate() {
            for s in pair {
                if cellscope_core::otoc::Observable::parse(s).is_none() {
                    return Err(ValidationError::new(
                        format!("experiment[{i}].pair[{j}]"),
                        format!("unknown operator {s:?}; use Q, P, q or p"),
                    ));
                }
            }
        }
    }
    let mut stems: Vec<String> = config.experiments.iter().map(|e| e.stem()).collect();
    stems.sort();
    if let Some(w) = stems.windows(2).find(|w| w[0] == w[1]) {
        return Err(ValidationError::new(
            "experiment",
            format!(
                "two experiments write to the stem {:?}; set distinct names",
                w[0]
            ),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        kind = "kicked_rotor"
        kick = 4.7
        cells = 6

        [paper_scale]
        cells = 60

        [[experiment]]
        kind = "quantum_section"
        n_steps = 3
    "#;

    #[test]
    fn parses_and_applies_overrides() {
        let desk = parse(MINIMAL, Scale::Desk).unwrap();
        assert_eq!(
            desk.model,
            ModelConfig::KickedRotor {
                kick: 4.7,
                cells: 6
            }
        );
        let paper = parse(MINIMAL, Scale::Paper).unwrap();
        assert!(matches!(
            paper.model,
            ModelConfig::KickedRotor { cells: 60, .. }
        ));
        assert_eq!(desk.experiments[0].stem(), "quantum_section");
    }

    #[test]
    fn reports_the_offending_field() {
        let bad = MINIMAL.replace("n_steps = 3", "n_steps = 3\ndt = 0.1");
        assert_eq!(
            parse(&bad, Scale::Desk).unwrap_err().field,
            "experiment[0].dt"
        );
        let bad = MINIMAL.replace("n_steps = 3", "n_steps = 3\npair = [\"Q\", \"x\"]");
        assert_eq!(
            parse(&bad, Scale::Desk).unwrap_err().field,
            "experiment[0].pair[0]"
        );
        let bad = MINIMAL.replace("n_steps = 3", "");
        assert_eq!(
            parse(&bad, Scale::Desk).unwrap_err().field,
            "experiment[0].n_steps"
        );
        let bad = MINIMAL.replace("kick = 4.7", "kick = 4.7\nspin = 1");
        assert_eq!(parse(&bad, Scale::Desk).unwrap_err().field, "config");
        let bad = MINIMAL.replace("n_steps = 3", "n_steps = 3\nwindow = [0.1, 0.2]");
        assert_eq!(
            parse(&bad, Scale::Desk).unwrap_err().field,
            "experiment[0].window"
        );
    }

    #[test]
    fn duplicate_stems_are_rejected() {
        let twice = format!("{MINIMAL}\n[[experiment]]\nkind = \"quantum_section\"\nn_steps = 1\n");
        assert_eq!(parse(&twice, Scale::Desk).unwrap_err().field, "experiment");
    }
}
