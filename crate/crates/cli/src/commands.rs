//! One function per subcommand. Each returns a serializable report; the
//! caller decides where it goes and which exit code it implies.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trimode_core::dynamics::{lyapunov_residual, stability, StabilityReport};
use trimode_core::entanglement::EntanglementReport;
use trimode_core::gaussian::{CovarianceMatrix, PHYSICALITY_TOLERANCE};
use trimode_core::inference::{
    inference_fidelity, inferred_covariance, inferred_covariance_first_order, DetectorModel,
};
use trimode_core::linalg::relative_difference;
use trimode_core::model::{
    drift_matrix_rescaled, input_amplitude, mean_field_residual, thermal_occupation, MeanFieldMode, MeanFields,
    SystemParams, MODE_LABELS,
};
use trimode_core::pipeline::evaluate_point;
use trimode_core::sweep::{classify_regions, run_sweep, SweepGrid, SweepMetadata};
use trimode_core::Error;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{boundary_csv, sweep_csv, SWEEP_HEADER};

pub const TRIPARTITE_MEASURE: &str =
    "ln(1 + 2 (N1 N2 N3)^(1/3)), N_i = (exp(E_i) - 1)/2 over the cuts F|SM, S|FM, M|FS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyReport {
    pub mode: MeanFieldMode,
    /// Resolved parameters, rad/s.
    pub parameters: SystemParams,
    pub input_amplitude: f64,
    pub thermal_occupation: f64,
    pub fields: MeanFields,
    /// Relative residual of the solved mean-field equation.
    pub residual: f64,
}

pub fn cmd_steady(config: &Config, mode: MeanFieldMode) -> CliResult<SteadyReport> {
    let params = config.params()?;
    let fields = trimode_core::model::steady_state_mean_fields(&params, mode)?;
    Ok(SteadyReport {
        mode,
        parameters: params,
        input_amplitude: input_amplitude(&params),
        thermal_occupation: thermal_occupation(&params),
        residual: mean_field_residual(&params, &fields),
        fields,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangleReport {
    pub mode: MeanFieldMode,
    pub parameters: SystemParams,
    pub stability: StabilityReport,
    /// `None` at unstable points.
    pub entanglement: Option<EntanglementReport>,
    pub giedke_class: Option<String>,
    pub tripartite_measure: String,
}

pub fn cmd_entangle(config: &Config, mode: MeanFieldMode) -> CliResult<EntangleReport> {
    let params = config.params()?;
    let eval = evaluate_point(&params, mode)?;
    Ok(EntangleReport {
        mode,
        parameters: params,
        stability: eval.stability,
        giedke_class: eval.entanglement.as_ref().map(|e| e.giedke_class.label()),
        entanglement: eval.entanglement,
        tripartite_measure: TRIPARTITE_MEASURE.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFidelity {
    pub mode: String,
    pub exact: Option<f64>,
    pub first_order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferReport {
    pub mode: MeanFieldMode,
    pub parameters: SystemParams,
    pub bandwidth_hz: f64,
    pub tau_s: f64,
    pub v: CovarianceMatrix,
    pub v_exact: CovarianceMatrix,
    pub v_first_order: CovarianceMatrix,
    pub fidelities: Vec<ModeFidelity>,
    /// `‖Ṽ(τ) − (V − τD/6)‖_F`.
    pub first_order_residual: f64,
    /// The same at `τ/2`.
    pub first_order_residual_half_tau: f64,
    /// Ratio of the two; about 4 when the expansion error is quadratic.
    pub residual_ratio: f64,
}

pub fn cmd_infer(config: &Config, mode: MeanFieldMode) -> CliResult<InferReport> {
    let params = config.params()?;
    let bandwidth = config
        .detector_bandwidth_hz
        .ok_or_else(|| CliError::Config("infer needs detector_bandwidth_hz".into()))?;
    let det = DetectorModel::from_bandwidth(bandwidth)?;
    let eval = evaluate_point(&params, mode)?;
    let v = eval.covariance.ok_or(Error::UnstableSystem {
        max_real: eval.stability.max_real_eigenvalue,
    })?;
    let (a, d) = (&eval.drift, &eval.diffusion);

    let residual_at = |det: &DetectorModel| -> CliResult<(CovarianceMatrix, CovarianceMatrix, f64)> {
        let exact = inferred_covariance(a, d, &v, det)?;
        let first = inferred_covariance_first_order(&v, d, det)?;
        let r = (exact.matrix() - first.matrix()).norm();
        Ok((exact, first, r))
    };
    let (v_exact, v_first_order, r1) = residual_at(&det)?;
    let (_, _, r2) = residual_at(&DetectorModel::from_window(det.tau / 2.0)?)?;

    let fidelities = MODE_LABELS
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let exact = inference_fidelity(&v, &v_exact, k);
            let first = inference_fidelity(&v, &v_first_order, k);
            let error = [&exact, &first]
                .iter()
                .filter_map(|r| r.as_ref().err().map(ToString::to_string))
                .collect::<Vec<_>>();
            ModeFidelity {
                mode: label.to_string(),
                exact: exact.ok(),
                first_order: first.ok(),
                error: (!error.is_empty()).then(|| error.join("; ")),
            }
        })
        .collect();

    Ok(InferReport {
        mode,
        parameters: params,
        bandwidth_hz: bandwidth,
        tau_s: det.tau,
        v,
        v_exact,
        v_first_order,
        fidelities,
        first_order_residual: r1,
        first_order_residual_half_tau: r2,
        residual_ratio: r1 / r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn bound(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
            detail: None,
        }
    }

    fn flag(name: &str, passed: bool, detail: Option<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: None,
            threshold: None,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub mode: MeanFieldMode,
    pub parameters: SystemParams,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Invariant suite at the configured point. `injected` replaces the solved
/// covariance, which lets tests confirm that a corrupted state is caught.
pub fn cmd_validate(
    config: &Config,
    mode: MeanFieldMode,
    injected: Option<CovarianceMatrix>,
) -> CliResult<ValidateReport> {
    let params = config.params()?;
    let eval = evaluate_point(&params, mode);
    let mut checks = Vec::new();
    let eval = match eval {
        Ok(e) => e,
        Err(err) => {
            checks.push(Check::flag("pipeline", false, Some(err.to_string())));
            return Ok(ValidateReport {
                mode,
                parameters: params,
                checks,
                passed: false,
            });
        }
    };
    let (a, d) = (&eval.drift, &eval.diffusion);
    let f = &eval.fields;

    checks.push(Check::bound(
        "mean_field_gauge",
        f.a_f.im.abs(),
        1e-12 * f.a_f.norm().max(1.0),
    ));
    checks.push(Check::bound(
        "mean_field_residual",
        mean_field_residual(&params, f),
        1e-9,
    ));

    match f.alpha {
        Some(alpha) if f.x_bar == 0.0 => {
            let rescaled = drift_matrix_rescaled(&params, alpha, f.beta);
            checks.push(Check::bound(
                "dual_drift_construction",
                relative_difference(a, rescaled.matrix()),
                1e-10,
            ));
        }
        _ => checks.push(Check::flag(
            "dual_drift_construction",
            true,
            Some("not applicable (χ = 0 or x̄ ≠ 0)".into()),
        )),
    }

    let row5_ok = (0..5).all(|j| a[(4, j)] == 0.0) && a[(4, 5)] == params.omega_m && a[(5, 4)] == -params.omega_m;
    checks.push(Check::flag("drift_structure", row5_ok, None));

    match stability(a) {
        Ok(r) => {
            checks.push(Check::flag("stability_verdicts_consistent", true, None));
            checks.push(Check::flag(
                "stable",
                r.stable,
                Some(format!("max Re λ = {:e} rad/s", r.max_real_eigenvalue)),
            ));
        }
        Err(e) => checks.push(Check::flag("stability_verdicts_consistent", false, Some(e.to_string()))),
    }

    if let Some(v) = injected.or(eval.covariance) {
        let m = v.matrix();
        if m.shape() == a.shape() {
            checks.push(Check::bound(
                "lyapunov_residual",
                lyapunov_residual(a, m, d),
                1e-10 * d.norm(),
            ));
        } else {
            checks.push(Check::flag(
                "lyapunov_residual",
                false,
                Some(format!("covariance is {}×{}", m.nrows(), m.ncols())),
            ));
        }
        checks.push(Check::bound(
            "covariance_symmetric",
            (m - m.transpose()).norm(),
            1e-12 * m.norm(),
        ));
        let min_nu = v
            .symplectic_eigenvalues()
            .map(|nus| nus[0])
            .unwrap_or(f64::NEG_INFINITY);
        checks.push(Check {
            name: "covariance_physical".into(),
            passed: min_nu >= 0.5 - PHYSICALITY_TOLERANCE,
            value: Some(min_nu).filter(|x| x.is_finite()),
            threshold: Some(0.5 - PHYSICALITY_TOLERANCE),
            detail: None,
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidateReport {
        mode,
        parameters: params,
        checks,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub name: String,
    pub cells: usize,
    pub polylines: usize,
    pub file: String,
}

/// JSON sidecar written next to the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub metadata: SweepMetadata,
    pub grid: SweepGrid,
    /// The configuration as given, frequencies in Hz.
    pub config: Config,
    pub workers: usize,
    pub csv_file: String,
    pub csv_columns: Vec<String>,
    pub regions: Vec<RegionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: usize,
    pub stable_cells: usize,
    pub failed_cells: usize,
    pub files: Vec<PathBuf>,
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(CliError::io("cannot write", path))
}

pub fn cmd_sweep(config: &Config, mode: MeanFieldMode, workers: usize, out_dir: &Path) -> CliResult<SweepReport> {
    let grid = config.sweep_grid(mode)?;
    if workers == 0 {
        return Err(CliError::Config("workers must be ≥ 1".into()));
    }
    let result = run_sweep(&grid, workers)?;
    let regions = classify_regions(&result);

    std::fs::create_dir_all(out_dir).map_err(CliError::io("cannot create", out_dir))?;
    let mut files = Vec::new();
    let csv_path = out_dir.join("sweep.csv");
    write(&csv_path, &sweep_csv(&result))?;
    files.push(csv_path);

    let mut summaries = Vec::new();
    for flag in &regions.flags {
        let name = format!("boundary_{}.csv", flag.name);
        let path = out_dir.join(&name);
        write(&path, &boundary_csv(flag))?;
        files.push(path);
        summaries.push(RegionSummary {
            name: flag.name.clone(),
            cells: flag.cells.iter().filter(|&&b| b).count(),
            polylines: flag.boundary.len(),
            file: name,
        });
    }

    let sidecar = SweepSidecar {
        metadata: result.metadata.clone(),
        grid: result.grid.clone(),
        config: config.clone(),
        workers,
        csv_file: "sweep.csv".into(),
        csv_columns: SWEEP_HEADER.split(',').map(String::from).collect(),
        regions: summaries,
    };
    let json_path = out_dir.join("sweep.json");
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    write(&json_path, &json)?;
    files.push(json_path);

    Ok(SweepReport {
        cells: result.cells.len(),
        stable_cells: result.cells.iter().filter(|c| c.stable == Some(true)).count(),
        failed_cells: result.cells.iter().filter(|c| c.error.is_some()).count(),
        files,
    })
}
