//! TOML configuration. Frequencies are given in Hz and converted to rad/s.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use trimode_core::model::{MeanFieldMode, SystemParams};
use trimode_core::sweep::{SweepGrid, YAxis};

use crate::error::{CliError, CliResult};

pub const DEFAULT_GRID_POINTS: usize = 201;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub omega_m_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_m_hz: Option<f64>,
    /// Mechanical quality factor, `Q_m = ω_m/(2κ_m)`.
    #[serde(default, alias = "Q_m", skip_serializing_if = "Option::is_none")]
    pub q_m: Option<f64>,
    pub kappa_f_hz: f64,
    pub kappa_s_hz: f64,
    pub g_f_hz: f64,
    pub chi_hz: f64,
    pub delta_hz: f64,
    pub t_env_k: f64,
    pub lambda_f_m: f64,
    pub p_in_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<MeanFieldMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YAxisKind {
    /// Log-spaced drive power, W.
    #[default]
    Power,
    /// Linear multiples of the configured `chi_hz`.
    Chi,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_max_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_x: Option<usize>,
    #[serde(default)]
    pub y_axis: YAxisKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_y: Option<usize>,
}

fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

impl Config {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.params()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io("cannot read config", path))?;
        Self::from_toml(&text)
    }

    /// Resolved parameters in rad/s.
    pub fn params(&self) -> CliResult<SystemParams> {
        let omega_m = hz(self.omega_m_hz);
        let kappa_m = match (self.kappa_m_hz, self.q_m) {
            (Some(k), None) => hz(k),
            (None, Some(q)) => {
                if !(q.is_finite() && q > 0.0) {
                    return Err(CliError::Config(format!("q_m must be > 0, got {q}")));
                }
                omega_m / (2.0 * q)
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give exactly one of kappa_m_hz and q_m, not both".into(),
                ))
            }
            (None, None) => return Err(CliError::Config("one of kappa_m_hz or q_m is required".into())),
        };
        let params = SystemParams {
            omega_m,
            kappa_m,
            kappa_f: hz(self.kappa_f_hz),
            kappa_s: hz(self.kappa_s_hz),
            g_f: hz(self.g_f_hz),
            chi: hz(self.chi_hz),
            delta: hz(self.delta_hz),
            t_env: self.t_env_k,
            lambda_f: self.lambda_f_m,
            p_in: self.p_in_w,
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(b) = self.detector_bandwidth_hz {
            if !(b.is_finite() && b > 0.0) {
                return Err(CliError::Config(format!("detector_bandwidth_hz must be > 0, got {b}")));
            }
        }
        Ok(params)
    }

    /// Command-line mode wins over the config file; `paper` by default.
    pub fn resolve_mode(&self, flag: Option<MeanFieldMode>) -> MeanFieldMode {
        flag.or(self.mode).unwrap_or_default()
    }

    pub fn sweep_grid(&self, mode: MeanFieldMode) -> CliResult<SweepGrid> {
        let params = self.params()?;
        let s = self.sweep.clone().unwrap_or_default();
        let y_axis = match s.y_axis {
            YAxisKind::Power => YAxis::Power {
                min_w: s.y_min.unwrap_or(1e-9),
                max_w: s.y_max.unwrap_or(1e-1),
            },
            YAxisKind::Chi => YAxis::Chi {
                min_multiple: s.y_min.unwrap_or(0.0),
                max_multiple: s.y_max.unwrap_or(5.0),
                chi0: params.chi,
            },
        };
        let grid = SweepGrid {
            delta_min: s.delta_min_hz.map_or(-2.0 * params.omega_m, hz),
            delta_max: s.delta_max_hz.map_or(2.0 * params.omega_m, hz),
            n_x: s.n_x.unwrap_or(DEFAULT_GRID_POINTS),
            y_axis,
            n_y: s.n_y.unwrap_or(DEFAULT_GRID_POINTS),
            base_params: params,
            mode,
        };
        grid.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(grid)
    }
}
