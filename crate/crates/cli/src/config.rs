//! Versioned JSON run configuration.
//!
//! The top level mirrors `ArrayConfig` (`n_sites`, `profile`, `kappa1`,
//! `kappa2`, `gamma`, `n_bar`) plus `schema_version` and optional sections for
//! the individual commands. Every section field has a command-line flag that
//! overrides it.

use std::path::Path;

use oetransduce_core::loss::{LossParameter, LossSettings};
use oetransduce_core::optimize::OptimizerSettings;
use oetransduce_core::{ArrayConfig, FrequencyGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";

/// Array used when no config file is given.
pub const DEFAULT_SITES: usize = 10;
pub const DEFAULT_COUPLING: f64 = 0.08;

const KNOWN_KEYS: &[&str] = &[
    "schema_version",
    "n_sites",
    "profile",
    "kappa1",
    "kappa1_profile",
    "kappa2",
    "kappa2_profile",
    "gamma",
    "n_bar",
    "kappa_ref_hz",
    "grid",
    "omega_m",
    "loss",
    "loss_sweep",
    "backscatter",
    "scan",
    "optimize",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: String,
    #[serde(flatten)]
    pub array: ArrayConfig,
    /// Physical value of the reference linewidth; recorded only, every rate
    /// in the file is already in units of it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_ref_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<FrequencyGrid>,
    /// Mechanical frequency for the counter-rotating model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(default)]
    pub loss: LossSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_sweep: Option<LossSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backscatter: Option<BackscatterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSweep {
    pub parameter: LossParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackscatterSection {
    pub ratios: Vec<f64>,
    pub half_width: f64,
    pub n_points: usize,
    pub fit_alpha: bool,
}

impl Default for BackscatterSection {
    fn default() -> Self {
        Self { ratios: vec![0.02, 0.05, 0.1, 0.15, 0.2], half_width: 0.15, n_points: 3000, fit_alpha: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSection {
    pub n_min: usize,
    pub n_max: Option<usize>,
    /// Adds a column for the same couplings with `κ2 = 10·κ1`.
    pub asymmetric: bool,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { n_min: 1, n_max: None, asymmetric: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSection {
    #[serde(default)]
    pub n_sites: Option<usize>,
    #[serde(default)]
    pub gamma_total: Option<f64>,
    #[serde(default)]
    pub min_efficiency: Option<f64>,
    #[serde(default = "yes")]
    pub symmetric: bool,
    #[serde(default)]
    pub settings: OptimizerSettings,
}

fn yes() -> bool {
    true
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            n_sites: None,
            gamma_total: None,
            min_efficiency: None,
            symmetric: true,
            settings: OptimizerSettings::default(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            array: ArrayConfig::symmetric_tanh(DEFAULT_SITES, DEFAULT_COUPLING),
            kappa_ref_hz: None,
            grid: None,
            omega_m: None,
            loss: LossSettings::default(),
            loss_sweep: None,
            backscatter: None,
            scan: None,
            optimize: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let Some(map) = value.as_object() else {
            return Err(CliError::Config(format!("{origin}: top level must be a JSON object")));
        };
        match map.get("schema_version") {
            Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "{origin}: unsupported schema_version {v}, this build reads \"{SCHEMA_VERSION}\""
                )))
            }
            None => return Err(CliError::Config(format!("{origin}: missing schema_version"))),
        }
        if let Some(key) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::Config(format!("{origin}: unknown field `{key}`")));
        }
        // Parse the text again, not the value, so that type errors carry a
        // line and column.
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Loads `path`, or the built-in default array when there is none.
    pub fn load_or_default(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use oetransduce_core::{CouplingProfile, LinewidthProfile};

    #[test]
    fn reads_spec_style_names() {
        let text = r#"{
            "schema_version": "1",
            "n_sites": 3,
            "profile": {"kind": "Explicit", "explicit_values": [[0.1, 0.0], [0.1, 0.1], [0.0, 0.1]]},
            "kappa1_profile": {"start": 1.0, "end": 2.0},
            "kappa2": 1,
            "gamma": 1e-4
        }"#;
        let c = RunConfig::parse(text, "t").unwrap();
        assert_eq!(c.array.kappa1, LinewidthProfile::Linear { start: 1.0, end: 2.0 });
        assert_eq!(c.array.kappa2, LinewidthProfile::Constant(1.0));
        assert!(matches!(c.array.profile, CouplingProfile::Explicit { ref values } if values.len() == 3));
        assert_eq!(c.array.n_bar, 0.0);
    }

    #[test]
    fn tanh_defaults_beta() {
        let text = r#"{"schema_version": "1", "n_sites": 5,
            "profile": {"kind": "tanh", "g_bar1": 0.08, "g_bar2": 0.08}}"#;
        let c = RunConfig::parse(text, "t").unwrap();
        assert_eq!(c.array.profile, CouplingProfile::tanh(0.08, 0.08));
    }

    #[test]
    fn round_trips() {
        let c = RunConfig {
            optimize: Some(OptimizeSection { n_sites: Some(4), ..Default::default() }),
            grid: Some(FrequencyGrid::new(-1.0, 1.0, 11).unwrap()),
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::parse(&text, "t").unwrap(), c);
    }

    #[test]
    fn rejects_bad_documents() {
        let bad = [
            "{\"schema_version\": \"1\",\n \"n_sites\": }",
            r#"{"schema_version": "2", "n_sites": 1, "profile": {"kind": "linear", "g_bar1": 0, "g_bar2": 0}}"#,
            r#"{"n_sites": 1, "profile": {"kind": "linear", "g_bar1": 0, "g_bar2": 0}}"#,
            r#"{"schema_version": "1", "n_site": 1, "profile": {"kind": "linear", "g_bar1": 0, "g_bar2": 0}}"#,
            "[1, 2]",
        ];
        for text in bad {
            assert!(matches!(RunConfig::parse(text, "t"), Err(CliError::Config(_))), "{text}");
        }
        let Err(CliError::Config(msg)) = RunConfig::parse(bad[0], "t") else { unreachable!() };
        assert!(msg.contains("line 2"), "{msg}");
    }
}
