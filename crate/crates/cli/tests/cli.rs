use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trimode::commands::{EntangleReport, InferReport, SteadyReport, SweepSidecar, ValidateReport};
use trimode::output::format_number;

const RED_SIDEBAND: &str = r#"
omega_m_hz = 70e6
q_m = 597000
kappa_f_hz = 7e6
kappa_s_hz = 7e6
g_f_hz = 1.2e3
chi_hz = 700
delta_hz = -70e6
t_env_k = 0.8
lambda_f_m = 1554e-9
p_in_w = 0.27
detector_bandwidth_hz = 500e6
"#;

fn with(overrides: &[(&str, &str)]) -> String {
    let mut text = RED_SIDEBAND.to_string();
    for (key, value) in overrides {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("{key} =")))
            .map(str::to_string);
        match line {
            Some(l) => text = text.replace(&l, &format!("{key} = {value}")),
            None => text.push_str(&format!("{key} = {value}\n")),
        }
    }
    text
}

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, text: &str) -> PathBuf {
        let p = self.path("config.toml");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn trimode(&self, args: &[&str], config: &Path) -> Output {
        Command::new(env!("CARGO_BIN_EXE_trimode"))
            .args(args)
            .arg("--config")
            .arg(config)
            .env_remove("TRIMODE_WORKERS")
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parses and re-serializes; the two texts must agree exactly.
fn round_trip<T: serde::de::DeserializeOwned + serde::Serialize + PartialEq + std::fmt::Debug>(json: &str) -> T {
    let record: T = serde_json::from_str(json).unwrap();
    let again = serde_json::to_string_pretty(&record).unwrap();
    assert_eq!(again.trim_end(), json.trim_end());
    let reparsed: T = serde_json::from_str(&again).unwrap();
    assert_eq!(reparsed, record);
    record
}

#[test]
fn steady_empty_shg_matches_driven_cavity() {
    let run = Run::new();
    let out = run.trimode(&["steady"], &run.config(&with(&[("chi_hz", "0")])));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: SteadyReport = round_trip(&stdout(&out));
    let p = r.parameters;
    let expected = (2.0 * p.kappa_f).sqrt() * r.input_amplitude / (p.kappa_f.powi(2) + p.delta.powi(2)).sqrt();
    assert!((r.fields.a_f.norm() - expected).abs() < 1e-10 * expected);
    assert_eq!(r.fields.a_s.norm(), 0.0);
    assert_eq!(r.fields.alpha, None);
}

#[test]
fn steady_red_sideband_lists_roots_with_small_residual() {
    let run = Run::new();
    let out = run.trimode(&["steady", "--mode", "cubic"], &run.config(RED_SIDEBAND));
    assert!(out.status.success());
    let r: SteadyReport = round_trip(&stdout(&out));
    assert_eq!(r.fields.cubic_roots.len(), 3);
    assert!(r.residual < 1e-9);
    assert_eq!(r.fields.u, r.fields.cubic_roots[0]);
}

#[test]
fn steady_without_drive_is_empty() {
    let run = Run::new();
    let out = run.trimode(&["steady"], &run.config(&with(&[("p_in_w", "0")])));
    assert!(out.status.success());
    let r: SteadyReport = round_trip(&stdout(&out));
    assert_eq!(r.fields.u, 0.0);
    assert_eq!(r.fields.a_s.norm(), 0.0);
}

#[test]
fn entangle_red_sideband() {
    let run = Run::new();
    let out = run.trimode(&["entangle"], &run.config(RED_SIDEBAND));
    assert!(out.status.success());
    let r: EntangleReport = round_trip(&stdout(&out));
    let e = r.entanglement.unwrap();
    for (got, want) in e.reductions().iter().zip([0.10, 0.42, 0.01]) {
        assert!((got - want).abs() < 0.05);
    }
    for (got, want) in e.bipartitions().iter().zip([0.44, 0.15, 0.45]) {
        assert!((got - want).abs() < 0.05);
    }
    assert_eq!(r.giedke_class.as_deref(), Some("fully_inseparable"));
}

#[test]
fn entangle_uncoupled_is_zero() {
    let run = Run::new();
    let out = run.trimode(&["entangle"], &run.config(&with(&[("chi_hz", "0"), ("g_f_hz", "0")])));
    assert!(out.status.success());
    let r: EntangleReport = round_trip(&stdout(&out));
    let e = r.entanglement.unwrap();
    assert_eq!(e.reductions(), [0.0; 3]);
    assert_eq!(e.bipartitions(), [0.0; 3]);
    assert_eq!(e.e_tri, 0.0);
}

#[test]
fn mode_flag_labels_records() {
    let run = Run::new();
    let config = run.config(&with(&[("p_in_w", "1e-6")]));
    for mode in ["paper", "self_consistent"] {
        let out = run.trimode(&["entangle", "--mode", mode], &config);
        assert!(out.status.success());
        let r: EntangleReport = round_trip(&stdout(&out));
        assert_eq!(r.mode.as_str(), mode);
    }
    let bad = run.trimode(&["entangle", "--mode", "linear"], &config);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn unstable_point_exits_with_physics_code_and_still_reports() {
    let run = Run::new();
    let out = run.trimode(&["entangle"], &run.config(&with(&[("delta_hz", "70e6")])));
    assert_eq!(out.status.code(), Some(3));
    let r: EntangleReport = round_trip(&stdout(&out));
    assert!(!r.stability.stable);
    assert!(r.entanglement.is_none());
    assert!(stdout(&out).contains("\"entanglement\": null"));

    let infer = run.trimode(&["infer"], &run.config(&with(&[("delta_hz", "70e6")])));
    assert_eq!(infer.status.code(), Some(3));
}

const TRIVIAL_SWEEP: &str = "\n[sweep]\nn_x = 2\nn_y = 2\n";

#[test]
fn trivial_sweep_writes_four_rows_deterministically() {
    let run = Run::new();
    let config = run.config(&(with(&[("chi_hz", "0"), ("g_f_hz", "0")]) + TRIVIAL_SWEEP));
    let a = run.path("a");
    let b = run.path("b");
    let out = run.trimode(&["sweep", "--workers", "2", "--out", a.to_str().unwrap()], &config);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run.trimode(&["sweep", "--workers", "1", "--out", b.to_str().unwrap()], &config);
    assert!(out.status.success());

    let csv = std::fs::read_to_string(a.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], trimode::output::SWEEP_HEADER);
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 12);
        assert_eq!(fields[2], "true");
        assert!(fields[3..10].iter().all(|f| *f == "0"));
    }
    assert_eq!(csv, std::fs::read_to_string(b.join("sweep.csv")).unwrap());

    let sidecar: SweepSidecar = serde_json::from_str(&std::fs::read_to_string(a.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sidecar.grid.n_cells(), 4);
    assert_eq!(sidecar.workers, 2);
    assert_eq!(sidecar.config.chi_hz, 0.0);
    for region in &sidecar.regions {
        let text = std::fs::read_to_string(a.join(&region.file)).unwrap();
        if region.name != "stable" {
            assert_eq!(region.polylines, 0);
            assert_eq!(text.lines().count(), 1);
        }
    }
}

#[test]
fn workers_fall_back_to_environment() {
    let run = Run::new();
    let config = run.config(&(with(&[("chi_hz", "0"), ("g_f_hz", "0")]) + TRIVIAL_SWEEP));
    let dir = run.path("env");
    let out = Command::new(env!("CARGO_BIN_EXE_trimode"))
        .args(["sweep", "--out", dir.to_str().unwrap(), "--config"])
        .arg(&config)
        .env("TRIMODE_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let sidecar: SweepSidecar =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sidecar.workers, 3);
}

#[test]
fn sweep_numbers_survive_parse_and_format() {
    let run = Run::new();
    let config = run.config(&(RED_SIDEBAND.to_string() + "\n[sweep]\nn_x = 9\nn_y = 7\n"));
    let dir = run.path("s");
    let out = run.trimode(&["sweep", "--workers", "4", "--out", dir.to_str().unwrap()], &config);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut saw_empty = false;
    for row in csv.lines().skip(1) {
        for (k, field) in row.split(',').enumerate() {
            if field.is_empty() {
                saw_empty = true;
                continue;
            }
            if k == 2 {
                assert!(field == "true" || field == "false");
                continue;
            }
            let x: f64 = field.parse().unwrap();
            assert_eq!(format_number(x), field);
        }
    }
    assert!(saw_empty, "unstable cells should leave empty fields");
}

#[test]
fn infer_red_sideband() {
    let run = Run::new();
    let out = run.trimode(&["infer"], &run.config(RED_SIDEBAND));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: InferReport = round_trip(&stdout(&out));
    let m = r.fidelities.iter().find(|f| f.mode == "M").unwrap();
    assert!(m.exact.unwrap() > 0.99);
    assert!((r.tau_s - 2e-9).abs() < 1e-24);
    assert!(r.residual_ratio >= 3.5, "{}", r.residual_ratio);
}

#[test]
fn infer_at_extreme_bandwidth_is_lossless() {
    let run = Run::new();
    let out = run.trimode(&["infer"], &run.config(&with(&[("detector_bandwidth_hz", "1e18")])));
    assert!(out.status.success());
    let r: InferReport = round_trip(&stdout(&out));
    for f in &r.fidelities {
        assert!((f.exact.unwrap() - 1.0).abs() < 1e-6, "{f:?}");
    }
}

#[test]
fn infer_needs_a_bandwidth() {
    let run = Run::new();
    let text = RED_SIDEBAND.replace("detector_bandwidth_hz = 500e6", "");
    let out = run.trimode(&["infer"], &run.config(&text));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes_at_red_sideband() {
    let run = Run::new();
    let out = run.trimode(&["validate"], &run.config(RED_SIDEBAND));
    assert!(out.status.success(), "{}", stdout(&out));
    let r: ValidateReport = round_trip(&stdout(&out));
    assert!(r.passed);
    assert!(r.checks.iter().any(|c| c.name == "lyapunov_residual" && c.passed));
}

#[test]
fn validate_catches_injected_covariance() {
    let run = Run::new();
    let injected = run.path("v.json");
    std::fs::write(
        &injected,
        r#"{"n_modes":3,"labels":["F","S","M"],"entries":[
            [0.5,0,0,0,0,0],[0,0.5,0,0,0,0],[0,0,0.5,0,0,0],
            [0,0,0,0.5,0,0],[0,0,0,0,0.5,0],[0,0,0,0,0,0.5]]}"#,
    )
    .unwrap();
    let out = run.trimode(
        &["validate", "--inject-covariance", injected.to_str().unwrap()],
        &run.config(RED_SIDEBAND),
    );
    assert_eq!(out.status.code(), Some(3));
    let r: ValidateReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(!r.passed);
    let lyap = r.checks.iter().find(|c| c.name == "lyapunov_residual").unwrap();
    assert!(!lyap.passed);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let run = Run::new();
    let both = run.trimode(&["validate"], &run.config(&with(&[("kappa_m_hz", "59")])));
    assert_eq!(both.status.code(), Some(2));
    let unknown = run.trimode(&["steady"], &run.config(&with(&[("omega_hz", "1")])));
    assert_eq!(unknown.status.code(), Some(2));
    let negative = run.trimode(&["steady"], &run.config(&with(&[("t_env_k", "-1")])));
    assert_eq!(negative.status.code(), Some(2));
    let no_config = Command::new(env!("CARGO_BIN_EXE_trimode"))
        .arg("steady")
        .output()
        .unwrap();
    assert_eq!(no_config.status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_code_four() {
    let run = Run::new();
    let missing = run.trimode(&["steady"], &run.path("nope.toml"));
    assert_eq!(missing.status.code(), Some(4));
    let config = run.config(RED_SIDEBAND);
    let blocked = run.path("file");
    std::fs::write(&blocked, "").unwrap();
    let target = blocked.join("report.json");
    let out = run.trimode(&["steady", "--out", target.to_str().unwrap()], &config);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn out_flag_writes_report_file() {
    let run = Run::new();
    let target = run.path("steady.json");
    let out = run.trimode(
        &["steady", "--out", target.to_str().unwrap()],
        &run.config(RED_SIDEBAND),
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    let _: SteadyReport = round_trip(&text);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = trimode::config::Config::load(&path).unwrap();
        config.sweep_grid(config.resolve_mode(None)).unwrap();
    }
}
