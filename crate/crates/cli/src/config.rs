//! JSON run configuration: model presets with raw-parameter overrides,
//! resolution into the core configuration types, and the echoed form
//! written back into every run manifest.
//!
//! A single document drives all subcommands; fields irrelevant to a
//! command are ignored so one file can be reused across them, but unknown
//! fields are rejected with serde's line/column diagnostics.

use entprop::{
    BulkState, EntropyBase, ModelParams, ProtocolConfig, ThermalizationConfig, Thresholds,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::CliError;

/// Top-level run configuration document.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub model: ModelSpec,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub base: Option<EntropyBase>,
    #[serde(default)]
    pub d_list: Option<Vec<usize>>,
    #[serde(default)]
    pub bulk_state: Option<BulkState>,
    #[serde(default)]
    pub thresholds: Option<ThresholdSpec>,
    /// Half-width of the microcanonical shell (thermalize only).
    #[serde(default)]
    pub delta_e: Option<f64>,
    /// Saturation fraction for the recurrence scan (thermalize only).
    #[serde(default)]
    pub delta_sat: Option<f64>,
    /// Transverse-field values for `sweep`.
    #[serde(default)]
    pub hx_list: Option<Vec<f64>>,
    /// Momentum-grid size for `dispersion` (default 512).
    #[serde(default)]
    pub k_points: Option<usize>,
}

impl ConfigDoc {
    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Model selection: a preset name ("ti", "ci", "eci"), raw parameters, or a
/// preset with individual fields overridden.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub sites: Option<usize>,
    #[serde(default)]
    pub j: Option<f64>,
    #[serde(default)]
    pub j_nnn: Option<f64>,
    #[serde(default)]
    pub h_z: Option<f64>,
    #[serde(default)]
    pub h_x: Option<f64>,
}

impl ModelSpec {
    /// Expand the preset (if any), apply raw overrides, and validate.
    /// `default_sites` is command-specific: 12 for thermalization runs,
    /// 10 for propagation runs.
    pub fn resolve(&self, default_sites: usize) -> Result<ModelParams, CliError> {
        let sites = self.sites.unwrap_or(default_sites);
        let mut p = match self.preset.as_deref() {
            Some("ti") => ModelParams::transverse_ising(1.05, sites),
            Some("ci") => ModelParams::chaotic_ising(sites),
            Some("eci") => ModelParams::extended_chaotic_ising(sites),
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown model preset {other:?}; valid presets are \"ti\", \"ci\", \"eci\""
                )))
            }
            None => {
                let missing: Vec<&str> = [
                    ("j", self.j.is_none()),
                    ("j_nnn", self.j_nnn.is_none()),
                    ("h_z", self.h_z.is_none()),
                    ("h_x", self.h_x.is_none()),
                ]
                .iter()
                .filter(|(_, m)| *m)
                .map(|(n, _)| *n)
                .collect();
                if !missing.is_empty() {
                    return Err(CliError::Usage(format!(
                        "model without a preset must give all couplings; missing: {}",
                        missing.join(", ")
                    )));
                }
                ModelParams {
                    j: self.j.unwrap(),
                    j_nnn: self.j_nnn.unwrap(),
                    hz: self.h_z.unwrap(),
                    hx: self.h_x.unwrap(),
                    sites,
                }
            }
        };
        if let Some(j) = self.j {
            p.j = j;
        }
        if let Some(j_nnn) = self.j_nnn {
            p.j_nnn = j_nnn;
        }
        if let Some(h_z) = self.h_z {
            p.hz = h_z;
        }
        if let Some(h_x) = self.h_x {
            p.hx = h_x;
        }
        p.validate().map_err(CliError::from)?;
        Ok(p)
    }
}

/// Partial threshold overrides; unset fields keep the core defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    #[serde(default)]
    pub delta_sat: Option<f64>,
    #[serde(default)]
    pub eps_split: Option<f64>,
    #[serde(default)]
    pub eps_mi: Option<f64>,
    #[serde(default)]
    pub dwell: Option<usize>,
}

impl ThresholdSpec {
    fn apply(&self, th: &mut Thresholds) {
        if let Some(v) = self.delta_sat {
            th.delta_sat = v;
        }
        if let Some(v) = self.eps_split {
            th.eps_split = v;
        }
        if let Some(v) = self.eps_mi {
            th.eps_mi = v;
        }
        if let Some(v) = self.dwell {
            th.dwell = v;
        }
    }
}

/// Command-line overrides applied after the config document.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub base: Option<EntropyBase>,
}

pub fn resolve_thermalize(
    doc: &ConfigDoc,
    ov: &Overrides,
) -> Result<ThermalizationConfig, CliError> {
    let mut cfg = ThermalizationConfig::new(doc.model.resolve(12)?);
    if let Some(dt) = ov.dt.or(doc.dt) {
        cfg.dt = dt;
    }
    if let Some(t_max) = ov.t_max.or(doc.t_max) {
        cfg.t_max = t_max;
    }
    if let Some(base) = ov.base.or(doc.base) {
        cfg.base = base;
    }
    if let Some(delta_e) = doc.delta_e {
        cfg.delta_e = delta_e;
    }
    if let Some(delta_sat) = doc.delta_sat {
        cfg.delta_sat = delta_sat;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve_propagate(doc: &ConfigDoc, ov: &Overrides) -> Result<ProtocolConfig, CliError> {
    let mut cfg = ProtocolConfig::new(doc.model.resolve(10)?);
    if let Some(dt) = ov.dt.or(doc.dt) {
        cfg.dt = dt;
    }
    if let Some(t_max) = ov.t_max.or(doc.t_max) {
        cfg.t_max = t_max;
    }
    if let Some(base) = ov.base.or(doc.base) {
        cfg.base = base;
    }
    if let Some(d_list) = &doc.d_list {
        cfg.d_list = d_list.clone();
    }
    if let Some(bulk) = doc.bulk_state {
        cfg.bulk_state = bulk;
    }
    if let Some(spec) = &doc.thresholds {
        spec.apply(&mut cfg.thresholds);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn model_echo(p: &ModelParams) -> Value {
    json!({
        "sites": p.sites,
        "j": p.j,
        "j_nnn": p.j_nnn,
        "h_z": p.hz,
        "h_x": p.hx,
    })
}

/// Echo of a resolved thermalization config; valid as a config document.
pub fn echo_thermalize(cfg: &ThermalizationConfig) -> Value {
    json!({
        "model": model_echo(&cfg.model),
        "dt": cfg.dt,
        "t_max": cfg.t_max,
        "base": cfg.base,
        "delta_e": cfg.delta_e,
        "delta_sat": cfg.delta_sat,
    })
}

/// Echo of a resolved propagation config; valid as a config document.
pub fn echo_propagate(cfg: &ProtocolConfig) -> Value {
    json!({
        "model": model_echo(&cfg.model),
        "dt": cfg.dt,
        "t_max": cfg.t_max,
        "base": cfg.base,
        "d_list": cfg.d_list,
        "bulk_state": cfg.bulk_state,
        "thresholds": {
            "delta_sat": cfg.thresholds.delta_sat,
            "eps_split": cfg.thresholds.eps_split,
            "eps_mi": cfg.thresholds.eps_mi,
            "dwell": cfg.thresholds.dwell,
        },
    })
}

pub fn echo_sweep(cfg: &ProtocolConfig, hx_list: &[f64]) -> Value {
    let mut v = echo_propagate(cfg);
    v["hx_list"] = json!(hx_list);
    v
}

pub fn echo_dispersion(p: &ModelParams, k_points: usize) -> Value {
    json!({
        "model": model_echo(p),
        "k_points": k_points,
    })
}
