//! Parallel evaluation of the pipeline over two-dimensional grids, region
//! flags and their marching-squares boundaries.

use std::collections::HashMap;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MeanFieldMode, SystemParams};
use crate::pipeline::evaluate_point;

/// Vertical axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YAxis {
    /// Drive power, log-spaced, W.
    Power { min_w: f64, max_w: f64 },
    /// SHG rate as linear multiples of `chi0` (rad/s).
    Chi {
        min_multiple: f64,
        max_multiple: f64,
        chi0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// Detuning range, rad/s, linear.
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_x: usize,
    pub y_axis: YAxis,
    pub n_y: usize,
    pub base_params: SystemParams,
    pub mode: MeanFieldMode,
}

impl SweepGrid {
    /// `Δ ∈ [−2ω_m, 2ω_m]` against `P_in ∈ [10⁻⁹, 10⁻¹] W`.
    pub fn detuning_power(base_params: SystemParams, n_x: usize, n_y: usize) -> Self {
        Self {
            delta_min: -2.0 * base_params.omega_m,
            delta_max: 2.0 * base_params.omega_m,
            n_x,
            y_axis: YAxis::Power {
                min_w: 1e-9,
                max_w: 1e-1,
            },
            n_y,
            base_params,
            mode: MeanFieldMode::Paper,
        }
    }

    /// `Δ ∈ [−2ω_m, 2ω_m]` against `χ ∈ [0, 5]·χ₀`, with `χ₀` the base rate.
    pub fn detuning_chi(base_params: SystemParams, n_x: usize, n_y: usize) -> Self {
        Self {
            y_axis: YAxis::Chi {
                min_multiple: 0.0,
                max_multiple: 5.0,
                chi0: base_params.chi,
            },
            ..Self::detuning_power(base_params, n_x, n_y)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 2 || self.n_y < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2×2 points, got {}×{}",
                self.n_x, self.n_y
            )));
        }
        if !(self.delta_min.is_finite() && self.delta_max.is_finite() && self.delta_min < self.delta_max) {
            return Err(Error::InvalidGrid(
                "detuning range must be finite and increasing".into(),
            ));
        }
        match self.y_axis {
            YAxis::Power { min_w, max_w } => {
                if !(min_w > 0.0 && max_w.is_finite() && min_w < max_w) {
                    return Err(Error::InvalidGrid(
                        "power range must be positive, finite and increasing".into(),
                    ));
                }
            }
            YAxis::Chi {
                min_multiple,
                max_multiple,
                chi0,
            } => {
                if !(min_multiple >= 0.0 && max_multiple.is_finite() && min_multiple < max_multiple) {
                    return Err(Error::InvalidGrid(
                        "χ range must be nonnegative, finite and increasing".into(),
                    ));
                }
                if !(chi0 > 0.0 && chi0.is_finite()) {
                    return Err(Error::InvalidGrid("χ₀ must be > 0".into()));
                }
            }
        }
        self.base_params.validate()
    }

    pub fn n_cells(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Detuning at a fractional x index; extrapolates outside `[0, n_x − 1]`.
    pub fn delta_at(&self, fx: f64) -> f64 {
        self.delta_min + (self.delta_max - self.delta_min) * fx / (self.n_x - 1) as f64
    }

    /// Axis value at a fractional y index; log-linear for power.
    pub fn y_at(&self, fy: f64) -> f64 {
        let t = fy / (self.n_y - 1) as f64;
        match self.y_axis {
            YAxis::Power { min_w, max_w } => (min_w.ln() + (max_w.ln() - min_w.ln()) * t).exp(),
            YAxis::Chi {
                min_multiple,
                max_multiple,
                ..
            } => min_multiple + (max_multiple - min_multiple) * t,
        }
    }

    pub fn delta_values(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.delta_at(i as f64)).collect()
    }

    /// Grid values of the y axis, pinned exactly to the range ends.
    pub fn y_values(&self) -> Vec<f64> {
        let (lo, hi) = match self.y_axis {
            YAxis::Power { min_w, max_w } => (min_w, max_w),
            YAxis::Chi {
                min_multiple,
                max_multiple,
                ..
            } => (min_multiple, max_multiple),
        };
        (0..self.n_y)
            .map(|j| match j {
                0 => lo,
                j if j == self.n_y - 1 => hi,
                j => self.y_at(j as f64),
            })
            .collect()
    }

    /// Parameters of cell `(ix, iy)`.
    pub fn params_at(&self, ix: usize, iy: usize) -> SystemParams {
        let delta = self.delta_values()[ix];
        let y = self.y_values()[iy];
        let mut p = SystemParams {
            delta,
            ..self.base_params
        };
        match self.y_axis {
            YAxis::Power { .. } => p.p_in = y,
            YAxis::Chi { chi0, .. } => p.chi = y * chi0,
        }
        p
    }
}

/// One grid point. Entanglement entries are `None` on unstable or failed
/// cells, never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub ix: usize,
    pub iy: usize,
    pub delta: f64,
    pub y_value: f64,
    /// `None` when the evaluation failed before a verdict.
    pub stable: Option<bool>,
    pub e_sm: Option<f64>,
    pub e_fm: Option<f64>,
    pub e_fs: Option<f64>,
    pub e_f_sm: Option<f64>,
    pub e_s_fm: Option<f64>,
    pub e_m_fs: Option<f64>,
    pub e_tri: Option<f64>,
    pub mean_field_u: Option<f64>,
    pub n_roots: usize,
    pub error: Option<String>,
}

impl SweepCell {
    fn empty(ix: usize, iy: usize, delta: f64, y_value: f64) -> Self {
        Self {
            ix,
            iy,
            delta,
            y_value,
            stable: None,
            e_sm: None,
            e_fm: None,
            e_fs: None,
            e_f_sm: None,
            e_s_fm: None,
            e_m_fs: None,
            e_tri: None,
            mean_field_u: None,
            n_roots: 0,
            error: None,
        }
    }

    /// Measure by flag name, as used in [`RegionFlag::ENTANGLEMENT`].
    pub fn measure(&self, name: &str) -> Option<f64> {
        match name {
            "e_sm" => self.e_sm,
            "e_fm" => self.e_fm,
            "e_fs" => self.e_fs,
            "e_f_sm" => self.e_f_sm,
            "e_s_fm" => self.e_s_fm,
            "e_m_fs" => self.e_m_fs,
            "e_tri" => self.e_tri,
            _ => None,
        }
    }
}

/// Evaluates one cell, folding any failure into the record.
pub fn evaluate_cell(grid: &SweepGrid, ix: usize, iy: usize) -> SweepCell {
    let params = grid.params_at(ix, iy);
    let mut cell = SweepCell::empty(ix, iy, params.delta, grid.y_values()[iy]);
    match evaluate_point(&params, grid.mode) {
        Ok(eval) => {
            cell.stable = Some(eval.stability.stable);
            cell.mean_field_u = Some(eval.fields.u);
            cell.n_roots = eval.fields.cubic_roots.len();
            if let Some(e) = eval.entanglement {
                cell.e_sm = Some(e.e_sm);
                cell.e_fm = Some(e.e_fm);
                cell.e_fs = Some(e.e_fs);
                cell.e_f_sm = Some(e.e_f_sm);
                cell.e_s_fm = Some(e.e_s_fm);
                cell.e_m_fs = Some(e.e_m_fs);
                cell.e_tri = Some(e.e_tri);
            }
        }
        Err(err) => cell.error = Some(err.to_string()),
    }
    cell
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub code_version: String,
    /// Seconds since the Unix epoch at completion.
    pub timestamp: u64,
    /// Base parameters in rad/s, s, K, m, W.
    pub parameters: SystemParams,
    pub mode: MeanFieldMode,
    pub tripartite_measure: String,
    pub stability_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    /// Row-major with `x` fastest: index `iy·n_x + ix`.
    pub cells: Vec<SweepCell>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn cell(&self, ix: usize, iy: usize) -> &SweepCell {
        &self.cells[iy * self.grid.n_x + ix]
    }
}

/// Evaluates every cell on a pool of `workers` threads. Cells are collected
/// in grid order, so the result does not depend on the worker count.
pub fn run_sweep(grid: &SweepGrid, workers: usize) -> Result<SweepResult> {
    grid.validate()?;
    if workers == 0 {
        return Err(Error::InvalidGrid("workers must be ≥ 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidGrid(format!("cannot start worker pool: {e}")))?;
    let n_x = grid.n_x;
    let cells: Vec<SweepCell> = pool.install(|| {
        (0..grid.n_cells())
            .into_par_iter()
            .map(|k| evaluate_cell(grid, k % n_x, k / n_x))
            .collect()
    });
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SweepResult {
        grid: grid.clone(),
        cells,
        metadata: SweepMetadata {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            parameters: grid.base_params,
            mode: grid.mode,
            tripartite_measure: "ln(1 + 2 (N1 N2 N3)^(1/3)), N_i = (exp(E_i) - 1)/2 over the cuts F|SM, S|FM, M|FS"
                .to_string(),
            stability_tolerance: crate::dynamics::STABILITY_TOLERANCE,
        },
    })
}

/// Closed or open polyline in physical axis units `(Δ, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFlag {
    pub name: String,
    /// Row-major like [`SweepResult::cells`].
    pub cells: Vec<bool>,
    /// Number of marching-squares segments before joining.
    pub n_segments: usize,
    pub boundary: Vec<Polyline>,
}

impl RegionFlag {
    pub const ENTANGLEMENT: [&'static str; 7] = ["e_sm", "e_fm", "e_fs", "e_f_sm", "e_s_fm", "e_m_fs", "e_tri"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub n_x: usize,
    pub n_y: usize,
    /// `stable` followed by the seven measures.
    pub flags: Vec<RegionFlag>,
}

impl RegionMap {
    pub fn flag(&self, name: &str) -> Option<&RegionFlag> {
        self.flags.iter().find(|f| f.name == name)
    }
}

/// Per-cell flags (stable; each measure > 0 on a stable cell) and their
/// boundaries.
pub fn classify_regions(result: &SweepResult) -> RegionMap {
    let grid = &result.grid;
    let mut flags = Vec::with_capacity(8);
    let stable: Vec<bool> = result.cells.iter().map(|c| c.stable == Some(true)).collect();
    flags.push(("stable".to_string(), stable));
    for name in RegionFlag::ENTANGLEMENT {
        let cells = result
            .cells
            .iter()
            .map(|c| c.stable == Some(true) && c.measure(name).is_some_and(|e| e > 0.0))
            .collect();
        flags.push((name.to_string(), cells));
    }
    let flags = flags
        .into_iter()
        .map(|(name, cells)| {
            let segments = marching_squares(&cells, grid.n_x, grid.n_y);
            let n_segments = segments.len();
            let boundary = join_segments(&segments)
                .into_iter()
                .map(|(pts, closed)| Polyline {
                    points: pts
                        .into_iter()
                        .map(|(x2, y2)| (grid.delta_at(x2 as f64 / 2.0), grid.y_at(y2 as f64 / 2.0)))
                        .collect(),
                    closed,
                })
                .collect();
            RegionFlag {
                name,
                cells,
                n_segments,
                boundary,
            }
        })
        .collect();
    RegionMap {
        n_x: grid.n_x,
        n_y: grid.n_y,
        flags,
    }
}

/// Point on the doubled index lattice: `(2·fx, 2·fy)` in grid-index units,
/// so edge midpoints are integers.
pub type LatticePoint = (i64, i64);

/// Iso-0.5 contour segments of a boolean field sampled at the grid nodes.
/// The field is padded with `false` so every contour closes.
pub fn marching_squares(field: &[bool], n_x: usize, n_y: usize) -> Vec<(LatticePoint, LatticePoint)> {
    let at = |i: i64, j: i64| -> bool {
        i >= 0 && j >= 0 && (i as usize) < n_x && (j as usize) < n_y && field[j as usize * n_x + i as usize]
    };
    let mut segments = Vec::new();
    for j in -1..n_y as i64 {
        for i in -1..n_x as i64 {
            let (bl, br, tr, tl) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            let case = (bl as u8) | (br as u8) << 1 | (tr as u8) << 2 | (tl as u8) << 3;
            // Edge midpoints of the square with lower-left corner (i, j).
            let bottom = (2 * i + 1, 2 * j);
            let right = (2 * i + 2, 2 * j + 1);
            let top = (2 * i + 1, 2 * j + 2);
            let left = (2 * i, 2 * j + 1);
            let mut push = |a, b| segments.push((a, b));
            match case {
                0 | 15 => {}
                1 | 14 => push(left, bottom),
                2 | 13 => push(bottom, right),
                3 | 12 => push(left, right),
                4 | 11 => push(right, top),
                6 | 9 => push(bottom, top),
                7 | 8 => push(left, top),
                // Saddles: the centre takes the mean value 0.5 and is
                // resolved as inside, keeping diagonal cells connected.
                5 => {
                    push(left, top);
                    push(bottom, right);
                }
                10 => {
                    push(left, bottom);
                    push(right, top);
                }
                _ => unreachable!(),
            }
        }
    }
    segments
}

/// Chains segments sharing endpoints into polylines; returns each chain and
/// whether it closes on itself.
pub fn join_segments(segments: &[(LatticePoint, LatticePoint)]) -> Vec<(Vec<LatticePoint>, bool)> {
    let mut by_point: HashMap<LatticePoint, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        by_point.entry(*a).or_default().push(k);
        by_point.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let next_from =
        |p: LatticePoint, used: &[bool]| -> Option<usize> { by_point.get(&p)?.iter().copied().find(|&k| !used[k]) };
    let other = |k: usize, p: LatticePoint| {
        let (a, b) = segments[k];
        if a == p {
            b
        } else {
            a
        }
    };
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut forward = vec![a, b];
        while let Some(k) = next_from(*forward.last().unwrap(), &used) {
            used[k] = true;
            let p = other(k, *forward.last().unwrap());
            forward.push(p);
        }
        let closed = forward.len() > 2 && forward.first() == forward.last();
        if !closed {
            // Extend backwards from the starting point.
            let mut backward = Vec::new();
            let mut p = a;
            while let Some(k) = next_from(p, &used) {
                used[k] = true;
                p = other(k, p);
                backward.push(p);
            }
            backward.reverse();
            backward.extend(forward);
            forward = backward;
        }
        let closed = forward.len() > 2 && forward.first() == forward.last();
        out.push((forward, closed));
    }
    out
}
