//! Flat JSON configurations. Values are layered defaults, then preset, then
//! file, then flags; unknown keys are rejected by name.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const RATES: [f64; 7] = [1e-3, 2e-3, 3e-3, 5e-3, 1e-2, 3e-2, 1e-1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub k: Option<u32>,
    pub n: Option<u32>,
    pub m: u32,
    pub p: Option<f64>,
    pub pe: f64,
    pub coherence: u64,
    pub timeout: u64,
    pub b: u32,
    pub warmup: u64,
    pub measure: u64,
    pub seed: u64,
    /// Also write the per-cycle counters.
    pub series: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            k: None,
            n: None,
            m: 10,
            p: None,
            pe: 1e-3,
            coherence: 1000,
            timeout: 1000,
            b: 1,
            warmup: 2000,
            measure: 10_000,
            seed: 0,
            series: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k: u32,
    pub m: u32,
    #[serde(rename = "N")]
    pub end_nodes: Vec<u64>,
    pub p: Vec<f64>,
    pub b: Vec<u32>,
    pub pe: f64,
    pub coherence: u64,
    pub timeout: u64,
    pub warmup: u64,
    pub measure: u64,
    pub min_reps: u32,
    pub max_reps: u32,
    pub ci_level: f64,
    pub ci_width: f64,
    pub threshold_level: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            k: 4,
            m: 10,
            end_nodes: vec![16, 64],
            p: RATES.to_vec(),
            b: vec![1],
            pe: 1e-3,
            coherence: 1000,
            timeout: 1000,
            warmup: 2000,
            measure: 10_000,
            min_reps: 10,
            max_reps: 1000,
            ci_level: 0.9,
            ci_width: 0.01,
            threshold_level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicConfig {
    pub k: u32,
    pub n: u32,
    pub m: u32,
    pub pe: f64,
    pub coherence: u64,
    pub timeout: u64,
    pub b: u32,
    /// `[start_cycle, p]` pairs.
    pub steps: Vec<(u64, f64)>,
    pub cycles: u64,
    pub ensemble: u32,
    pub bin: u64,
    pub seed: u64,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            k: 4,
            n: 3,
            m: 10,
            pe: 1e-3,
            coherence: 1000,
            timeout: 1000,
            b: 1,
            steps: vec![(0, 1e-3), (10_000, 1e-2), (20_000, 1e-3)],
            cycles: 30_000,
            ensemble: 512,
            bin: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadConfig {
    pub k: u32,
    pub mode: String,
    pub family: String,
    pub r: u32,
    #[serde(rename = "N_range")]
    pub n_range: String,
    pub regime: String,
    pub epsilon: f64,
    pub epsilon_th: f64,
    pub epsilon_0: f64,
    /// Fixed code distance parameter instead of the solved one.
    pub t: Option<u32>,
    pub prefactor: f64,
    pub seed: u64,
}

impl Default for OverheadConfig {
    fn default() -> Self {
        OverheadConfig {
            k: 4,
            mode: "2d".into(),
            family: "css".into(),
            r: 1,
            n_range: "4^3:4^10".into(),
            regime: "sparse".into(),
            epsilon: 1e-3,
            epsilon_th: 1e-2,
            epsilon_0: 1e-3,
            t: None,
            prefactor: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeployConfig {
    pub k: u32,
    pub n: u32,
    pub mode: String,
    pub l0: f64,
    pub seed: u64,
}

impl Default for DeployConfig {
    fn default() -> Self {
        DeployConfig { k: 7, n: 2, mode: "2d".into(), l0: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub ne: Vec<usize>,
    pub reps: u32,
    /// Grid sizes dumped for one instance at the largest `ne`.
    pub grid: Vec<usize>,
    pub seed: u64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { ne: vec![125, 250, 500, 1000, 2000], reps: 200, grid: vec![10, 50], seed: 0 }
    }
}

/// Preset overlays pinning figure parameters.
pub fn preset(subcommand: &str, name: &str) -> Result<Value, CliError> {
    let v = match (subcommand, name) {
        ("sweep", "fig3a" | "fig3b") => json!({"N": [16, 64, 256, 1024], "b": [1], "min_reps": 10, "max_reps": 1000}),
        ("sweep", "fig3c" | "fig3d") => json!({"N": [64], "b": [2, 4, 8, 16], "min_reps": 10, "max_reps": 1000}),
        ("dynamic", "fig3e") => serde_json::to_value(DynamicConfig::default()).expect("serializable"),
        ("overhead", "fig2a") => json!({"k": 4, "mode": "2d", "family": "css", "r": 1, "N_range": "4^3:4^10"}),
        ("overhead", "fig2a-surface") => json!({"k": 4, "mode": "2d", "family": "surface", "r": 1, "N_range": "4^3:4^10"}),
        ("overhead", "fig2a-sq") => json!({"k": 4, "mode": "sq", "family": "css", "r": 1, "N_range": "4^3:4^10"}),
        ("deploy", "fig4b") => json!({"k": 7, "n": 2, "mode": "2d"}),
        ("deploy", "fig4d") => json!({"k": 4, "n": 3, "mode": "sq"}),
        ("mesh", "fig5a") => json!({"ne": [2000], "reps": 1, "grid": [10]}),
        ("mesh", "fig5b") => json!({"ne": [2000], "reps": 1, "grid": [50]}),
        ("mesh", "fig5d" | "fig5e") => json!({"ne": [125, 250, 500, 1000, 2000], "reps": 1000, "grid": [10]}),
        _ => return Err(CliError::Usage(format!("unknown preset `{name}` for {subcommand}"))),
    };
    Ok(v)
}

/// Reads a config file. A run manifest is accepted too, in which case its
/// embedded configuration is used.
pub fn read_file(path: &Path, subcommand: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: not valid JSON: {e}", path.display())))?;
    let Value::Object(mut obj) = v else {
        return Err(CliError::Validation(format!("{}: expected a JSON object", path.display())));
    };
    if let (Some(Value::String(sub)), Some(Value::Object(cfg))) = (obj.get("subcommand"), obj.get("config")) {
        if sub != subcommand {
            return Err(CliError::Validation(format!("manifest is for `{sub}`, not `{subcommand}`")));
        }
        return Ok(cfg.clone());
    }
    obj.remove("$comment");
    Ok(obj)
}

/// Layers objects left to right and deserializes the result.
pub fn resolve<T: Serialize + DeserializeOwned + Default>(layers: Vec<Map<String, Value>>) -> Result<T, CliError> {
    let Value::Object(mut merged) = serde_json::to_value(T::default()).expect("serializable") else {
        unreachable!("configs are structs")
    };
    for layer in layers {
        for (k, v) in layer {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Validation(format!("config: {e}")))
}

pub fn to_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// `4^3:4^10`, `64:1024` or a single value.
pub fn parse_range(s: &str) -> Result<(u64, u64), CliError> {
    let one = |t: &str| -> Result<u64, CliError> {
        let bad = || CliError::Validation(format!("N_range `{s}`: expected INT or BASE^EXP, e.g. 4^3:4^10"));
        match t.trim().split_once('^') {
            Some((b, e)) => {
                let b: u64 = b.trim().parse().map_err(|_| bad())?;
                let e: u32 = e.trim().parse().map_err(|_| bad())?;
                b.checked_pow(e).ok_or_else(bad)
            }
            None => t.trim().parse().map_err(|_| bad()),
        }
    };
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (one(a)?, one(b)?),
        None => {
            let v = one(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(CliError::Validation(format!("N_range `{s}`: lower end above upper end")));
    }
    Ok((lo, hi))
}
