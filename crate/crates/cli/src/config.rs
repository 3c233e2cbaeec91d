//! Flat JSON run configuration.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use vcoher::bistability::{OBParams, ObMode, XGrid};
use vcoher::response::{CoherenceMode, ResponseScale, Sweep, SweepVariable};
use vcoher::SystemParams;

/// Every accepted key, in dump order.
pub const KEYS: [&str; 21] = [
    "gamma2",
    "gamma3",
    "eta",
    "omega_c_mag",
    "phi_c",
    "omega_p_mag",
    "phi_p",
    "delta_c",
    "delta",
    "kappa",
    "w",
    "c_coop",
    "x_to_omega_p",
    "phase_x",
    "mode",
    "sweep_variable",
    "sweep_start",
    "sweep_stop",
    "sweep_count",
    "k_max",
    "out_path",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma2: f64,
    pub gamma3: f64,
    pub eta: f64,
    pub omega_c_mag: f64,
    pub phi_c: f64,
    pub omega_p_mag: f64,
    pub phi_p: f64,
    pub delta_c: f64,
    pub delta: f64,
    pub kappa: f64,
    pub w: f64,
    pub c_coop: f64,
    pub x_to_omega_p: f64,
    pub phase_x: f64,
    /// Spectrum mode (`floquet_r1`, `static_full`, `conventional_full`) or
    /// bistability mode (`static`, `floquet`, `r1_only`). Unset picks the
    /// command's default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub sweep_variable: String,
    pub sweep_start: f64,
    pub sweep_stop: f64,
    pub sweep_count: usize,
    pub k_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        let scale = ResponseScale::default();
        let ob = OBParams::default();
        Self {
            gamma2: p.gamma2,
            gamma3: p.gamma3,
            eta: p.eta,
            omega_c_mag: 2.0,
            phi_c: p.phi_c,
            omega_p_mag: 0.01,
            phi_p: p.phi_p,
            delta_c: p.delta_c,
            delta: p.delta,
            kappa: scale.kappa,
            w: scale.w,
            c_coop: ob.c_coop,
            x_to_omega_p: ob.x_to_omega_p,
            phase_x: ob.phase_x,
            mode: None,
            sweep_variable: "delta".into(),
            sweep_start: -10.0,
            sweep_stop: 10.0,
            sweep_count: 401,
            k_max: vcoher::solver::DEFAULT_K_MAX,
            out_path: None,
        }
    }
}

fn suggestions(key: &str) -> Vec<&'static str> {
    KEYS.iter()
        .copied()
        .filter(|k| strsim::levenshtein(key, k) <= 2)
        .collect()
}

/// Rejects keys outside [`KEYS`], with a dedicated message for the derived
/// probe detuning and near-miss suggestions otherwise.
pub fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        return Ok(());
    }
    if key == "delta_p" {
        bail!(
            "key 'delta_p' is not accepted: the probe detuning is derived as delta + delta_c; \
             set 'delta' (two-photon detuning) and 'delta_c' instead"
        );
    }
    let near = suggestions(key);
    if near.is_empty() {
        bail!("unknown key '{key}'");
    }
    let list = near.iter().map(|k| format!("'{k}'")).collect::<Vec<_>>().join(" or ");
    bail!("unknown key '{key}' (did you mean {list}?)")
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        let Value::Object(map) = value else {
            bail!("config must be a single flat JSON object");
        };
        Self::from_map(map)
    }

    pub fn from_map(map: Map<String, Value>) -> Result<Self> {
        for key in map.keys() {
            check_key(key)?;
        }
        serde_json::from_value(Value::Object(map)).map_err(|e| anyhow!("invalid config value: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json_str(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Applies `key = value` overrides; values are parsed as JSON and fall
    /// back to plain strings.
    pub fn with_overrides(self, overrides: &[(String, String)]) -> Result<Self> {
        let Value::Object(mut map) = serde_json::to_value(&self)? else {
            unreachable!("RunConfig serialises to an object");
        };
        for (key, raw) in overrides {
            check_key(key)?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            map.insert(key.clone(), value);
        }
        Self::from_map(map)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("RunConfig always serialises")
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let p = SystemParams {
            gamma2: self.gamma2,
            gamma3: self.gamma3,
            eta: self.eta,
            omega_c_mag: self.omega_c_mag,
            phi_c: self.phi_c,
            omega_p_mag: self.omega_p_mag,
            phi_p: self.phi_p,
            delta_c: self.delta_c,
            delta: self.delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn scale(&self) -> Result<ResponseScale> {
        let s = ResponseScale {
            kappa: self.kappa,
            w: self.w,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn ob_params(&self) -> Result<OBParams> {
        let ob = OBParams {
            c_coop: self.c_coop,
            x_to_omega_p: self.x_to_omega_p,
            phase_x: self.phase_x,
        };
        ob.validate()?;
        Ok(ob)
    }

    pub fn sweep(&self) -> Result<Sweep> {
        let s = Sweep {
            variable: self.sweep_variable.parse::<SweepVariable>()?,
            start: self.sweep_start,
            stop: self.sweep_stop,
            count: self.sweep_count,
        };
        s.validate()?;
        Ok(s)
    }

    /// The sweep range read as an `x` grid.
    pub fn x_grid(&self) -> Result<XGrid> {
        let g = XGrid {
            start: self.sweep_start,
            stop: self.sweep_stop,
            count: self.sweep_count,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn coherence_mode(&self) -> Result<CoherenceMode> {
        Ok(self.mode.as_deref().unwrap_or("static_full").parse::<CoherenceMode>()?)
    }

    /// Bistability mode; unset means static at Δ = 0 and floquet otherwise.
    pub fn ob_mode(&self) -> Result<ObMode> {
        match self.mode.as_deref() {
            None if self.delta == 0.0 => Ok(ObMode::Static),
            None | Some("floquet") => Ok(ObMode::Floquet { k_max: self.k_max_checked()? }),
            Some("static") => Ok(ObMode::Static),
            Some("r1_only") => Ok(ObMode::R1Only),
            Some(other) => bail!("unknown bistability mode '{other}' (expected static, floquet or r1_only)"),
        }
    }

    pub fn k_max_checked(&self) -> Result<usize> {
        if self.k_max == 0 {
            bail!("k_max must be at least 1");
        }
        Ok(self.k_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_keys() {
        let c = RunConfig::from_json_str(r#"{"eta": 0.5}"#).unwrap();
        assert_eq!(c.eta, 0.5);
        assert_eq!(c.sweep_count, 401);
        assert_eq!(c.w, 1e6);
    }

    #[test]
    fn unknown_key_suggests_neighbours() {
        let err = RunConfig::from_json_str(r#"{"deltap": 1.0}"#).unwrap_err().to_string();
        assert!(err.contains("'deltap'"), "{err}");
        assert!(err.contains("'delta'") && err.contains("'delta_c'"), "{err}");
    }

    #[test]
    fn derived_detuning_is_refused() {
        let err = RunConfig::from_json_str(r#"{"delta_p": 1.0}"#).unwrap_err().to_string();
        assert!(err.contains("delta + delta_c"), "{err}");
    }

    #[test]
    fn dump_round_trips() {
        let c = RunConfig {
            mode: Some("floquet_r1".into()),
            out_path: Some("x.csv".into()),
            phi_c: std::f64::consts::PI,
            ..Default::default()
        };
        assert_eq!(RunConfig::from_json_str(&c.to_json()).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_json_str(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn overrides_replace_file_values() {
        let c = RunConfig::default()
            .with_overrides(&[("eta".into(), "0.25".into()), ("mode".into(), "floquet_r1".into())])
            .unwrap();
        assert_eq!(c.eta, 0.25);
        assert_eq!(c.mode.as_deref(), Some("floquet_r1"));
        assert!(RunConfig::default()
            .with_overrides(&[("etaa".into(), "1".into())])
            .is_err());
        assert!(RunConfig::default()
            .with_overrides(&[("eta".into(), "abc".into())])
            .is_err());
    }

    #[test]
    fn ob_mode_defaults_by_detuning() {
        let mut c = RunConfig::default();
        assert_eq!(c.ob_mode().unwrap(), ObMode::Static);
        c.delta = 4.1;
        assert_eq!(c.ob_mode().unwrap(), ObMode::Floquet { k_max: 6 });
        c.mode = Some("bogus".into());
        assert!(c.ob_mode().is_err());
    }
}
