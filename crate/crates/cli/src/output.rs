//! Plot-ready text formats.

use std::fmt::Write as _;

use trimode_core::sweep::{RegionFlag, SweepResult};

pub const SWEEP_HEADER: &str = "delta_rad_s,y_value,stable,e_sm,e_fm,e_fs,e_f_sm,e_s_fm,e_m_fs,e_tri,u,n_roots";
pub const BOUNDARY_HEADER: &str = "polyline,closed,delta_rad_s,y_value";

/// Shortest decimal that parses back to the same `f64`. Plain notation for
/// moderate magnitudes, exponent notation otherwise.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

/// One row per cell in grid order; missing values are empty fields.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::with_capacity(result.cells.len() * 160);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for c in &result.cells {
        let stable = c.stable.map(|s| s.to_string()).unwrap_or_default();
        let fields = [
            format_number(c.delta),
            format_number(c.y_value),
            stable,
            opt(c.e_sm),
            opt(c.e_fm),
            opt(c.e_fs),
            opt(c.e_f_sm),
            opt(c.e_s_fm),
            opt(c.e_m_fs),
            opt(c.e_tri),
            opt(c.mean_field_u),
            c.n_roots.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn boundary_csv(flag: &RegionFlag) -> String {
    let mut out = String::new();
    out.push_str(BOUNDARY_HEADER);
    out.push('\n');
    for (k, line) in flag.boundary.iter().enumerate() {
        for (x, y) in &line.points {
            let _ = writeln!(out, "{k},{},{},{}", line.closed, format_number(*x), format_number(*y));
        }
    }
    out
}
