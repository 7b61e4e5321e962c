//! Physical parameters, classical steady state and the linearized
//! drift/diffusion matrices of the three-mode device.
//!
//! All rates are angular frequencies in rad/s. Mode order in every 6×6
//! matrix is `(x_F, p_F, x_S, p_S, x, p)`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA values (exact in the 2019 SI).
pub mod constants {
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Boltzmann constant, J/K.
    pub const K_B: f64 = 1.380_649e-23;
    /// Speed of light in vacuum, m/s.
    pub const C: f64 = 299_792_458.0;
}

use constants::{C, HBAR, K_B};

/// Mode labels in quadrature order.
pub const MODE_LABELS: [&str; 3] = ["F", "S", "M"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical angular frequency, rad/s.
    pub omega_m: f64,
    /// Mechanical amplitude decay rate, rad/s.
    pub kappa_m: f64,
    /// Fundamental-mode amplitude decay rate, rad/s.
    pub kappa_f: f64,
    /// Second-harmonic amplitude decay rate, rad/s.
    pub kappa_s: f64,
    /// Optomechanical coupling of the fundamental, rad/s. `g_S = 2 g_F`.
    pub g_f: f64,
    /// Second-harmonic generation rate, rad/s.
    pub chi: f64,
    /// Drive detuning `Δ = ω_L − ω_c`, rad/s; positive is blue.
    pub delta: f64,
    /// Environment temperature, K.
    pub t_env: f64,
    /// Fundamental wavelength, m.
    pub lambda_f: f64,
    /// Drive power, W.
    pub p_in: f64,
}

impl SystemParams {
    /// Device constants with the low mechanical quality factor `Q_m = 5970`,
    /// driven on the red mechanical sideband at 1 μW.
    pub fn reference() -> Self {
        let two_pi = 2.0 * PI;
        let omega_m = two_pi * 70e6;
        Self {
            omega_m,
            kappa_m: omega_m / (2.0 * 5970.0),
            kappa_f: two_pi * 7e6,
            kappa_s: two_pi * 7e6,
            g_f: two_pi * 1.2e3,
            chi: two_pi * 700.0,
            delta: -omega_m,
            t_env: 0.8,
            lambda_f: 1554e-9,
            p_in: 1e-6,
        }
    }

    /// The high-Q operating point `Q_m = 597000`, `Δ = −ω_m`, `P_in = 0.27 W`.
    pub fn high_q_red_sideband() -> Self {
        let base = Self::reference();
        Self {
            kappa_m: base.omega_m / (2.0 * 597_000.0),
            p_in: 0.27,
            ..base
        }
    }

    pub fn g_s(&self) -> f64 {
        2.0 * self.g_f
    }

    /// `Q_m = ω_m / (2κ_m)`.
    pub fn q_m(&self) -> f64 {
        self.omega_m / (2.0 * self.kappa_m)
    }

    pub fn with_q_m(self, q_m: f64) -> Self {
        Self {
            kappa_m: self.omega_m / (2.0 * q_m),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_m", self.omega_m),
            ("kappa_m", self.kappa_m),
            ("kappa_f", self.kappa_f),
            ("kappa_s", self.kappa_s),
            ("lambda_f", self.lambda_f),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {value}")));
            }
        }
        let nonnegative = [
            ("g_f", self.g_f),
            ("chi", self.chi),
            ("t_env", self.t_env),
            ("p_in", self.p_in),
        ];
        for (name, value) in nonnegative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be ≥ 0, got {value}")));
            }
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParams("delta must be finite".into()));
        }
        Ok(())
    }
}

/// `n_th = k_B T / (ħ ω_m)`.
pub fn thermal_occupation(params: &SystemParams) -> f64 {
    K_B * params.t_env / (HBAR * params.omega_m)
}

/// `τ_d = 1 / (κ_m n_th)`, in seconds.
pub fn decoherence_time(params: &SystemParams) -> Result<f64> {
    let n_th = thermal_occupation(params);
    if n_th <= 0.0 {
        return Err(Error::ZeroTemperature);
    }
    Ok(1.0 / (params.kappa_m * n_th))
}

/// Drive amplitude `ā_in = √(P_in / ħω_c)` in s^(−1/2), with `ω_c = 2πc/λ_F`.
pub fn input_amplitude(params: &SystemParams) -> f64 {
    let omega_c = 2.0 * PI * C / params.lambda_f;
    (params.p_in / (HBAR * omega_c)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFieldMode {
    /// Linear mean field (cubic SHG term dropped), `x̄ = p̄ = 0`.
    #[default]
    Paper,
    /// Full cubic mean-field equation, `x̄ = p̄ = 0`.
    Cubic,
    /// Full cubic plus the radiation-pressure displacement `x̄` and the
    /// detuning shifts it induces.
    SelfConsistent,
}

impl MeanFieldMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Cubic => "cubic",
            Self::SelfConsistent => "self_consistent",
        }
    }
}

impl std::str::FromStr for MeanFieldMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "cubic" => Ok(Self::Cubic),
            "self_consistent" => Ok(Self::SelfConsistent),
            other => Err(Error::InvalidParams(format!("unknown mean-field mode {other:?}"))),
        }
    }
}

/// Classical steady-state amplitudes in the gauge where `ā_F` is real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFields {
    pub mode: MeanFieldMode,
    /// `u = |ā_F|²`.
    pub u: f64,
    pub a_f: Complex<f64>,
    pub a_s: Complex<f64>,
    /// Phase of `ā_F` relative to the (real) drive, rad.
    pub phi: f64,
    pub x_bar: f64,
    pub p_bar: f64,
    /// `g_F / (√2 χ)`; `None` when `χ = 0`.
    pub alpha: Option<f64>,
    /// `χ ā_F`, rad/s.
    pub beta: f64,
    /// Effective detunings entering the drift matrix: `Δ + g_F x̄` and
    /// `2Δ + g_S x̄`.
    pub detuning_f: f64,
    pub detuning_s: f64,
    /// All positive roots `u` of the full cubic, ascending.
    pub cubic_roots: Vec<f64>,
}

/// Coefficients `[c3, c2, c1, c0]` of the real cubic in `u = |ā_F|²` obtained
/// from the squared modulus of the mean-field equation:
/// `|2χ²u/(2iΔ−κ_S) + (iΔ−κ_F)|² u = 2κ_F ā_in²`.
pub fn mean_field_cubic(params: &SystemParams) -> [f64; 4] {
    let (z, w) = cubic_terms(params);
    let a_in = input_amplitude(params);
    [
        z.norm_sqr(),
        2.0 * (z * w.conj()).re,
        w.norm_sqr(),
        -2.0 * params.kappa_f * a_in * a_in,
    ]
}

fn cubic_terms(params: &SystemParams) -> (Complex<f64>, Complex<f64>) {
    let z = Complex::new(2.0 * params.chi * params.chi, 0.0) / Complex::new(-params.kappa_s, 2.0 * params.delta);
    let w = Complex::new(-params.kappa_f, params.delta);
    (z, w)
}

/// Positive real roots of `c3 u³ + c2 u² + c1 u + c0 = 0` with `c1 > 0` and
/// `c0 < 0`, ascending. Closed form on a normalized cubic, Newton-polished,
/// with a bracketing scan as fallback.
pub fn positive_cubic_roots(coeffs: [f64; 4]) -> Vec<f64> {
    let [c3, c2, c1, c0] = coeffs;
    if c0 == 0.0 {
        return Vec::new();
    }
    // u = s·y with s = −c0/c1 gives a y³ + b y² + y − 1 = 0.
    let s = -c0 / c1;
    let a = c3 * s * s * s / -c0;
    let b = c2 * s * s / -c0;
    let p = |y: f64| ((a * y + b) * y + 1.0) * y - 1.0;
    let dp = |y: f64| (3.0 * a * y + 2.0 * b) * y + 1.0;
    let polish = |mut y: f64| {
        for _ in 0..50 {
            let d = dp(y);
            if d == 0.0 {
                break;
            }
            let step = p(y) / d;
            y -= step;
            if step.abs() <= 1e-16 * y.abs() {
                break;
            }
        }
        y
    };

    let mut roots: Vec<f64> = if a == 0.0 && b == 0.0 {
        vec![1.0]
    } else if a == 0.0 {
        quadratic_roots(b, 1.0, -1.0)
    } else {
        cubic_roots_closed_form(a, b, 1.0, -1.0)
    };
    roots = roots
        .into_iter()
        .filter(|y| y.is_finite() && *y > 0.0)
        .map(polish)
        .collect();

    let ok = |y: &f64| p(*y).abs() <= 1e-10 * (1.0 + (a * y * y * y).abs() + (b * y * y).abs() + y.abs());
    if roots.is_empty() || !roots.iter().all(ok) {
        roots = bracket_scan(&p, a, b).into_iter().map(polish).collect();
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * y.abs());
    roots.into_iter().map(|y| y * s).collect()
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut out = vec![q / a];
    if q != 0.0 {
        out.push(c / q);
    }
    out
}

fn cubic_roots_closed_form(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    // Depressed cubic t³ + p t + q with y = t − b/(3a).
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let sq = disc.sqrt();
        let t = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (theta - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .collect()
    }
}

fn bracket_scan(p: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    // Every positive root lies below the Cauchy bound.
    let bound = if a > 0.0 { 1.0 + (b.abs().max(1.0)) / a } else { 1e6 };
    let n = 20_000;
    let (lo, hi) = (1e-12f64.ln(), bound.ln());
    let grid: Vec<f64> = (0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp()).collect();
    let mut roots = Vec::new();
    for pair in grid.windows(2) {
        let (mut x0, mut x1) = (pair[0], pair[1]);
        let (mut f0, f1) = (p(x0), p(x1));
        if f0 == 0.0 {
            roots.push(x0);
            continue;
        }
        if f0.signum() == f1.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (x0 + x1);
            let fm = p(mid);
            if fm.signum() == f0.signum() {
                x0 = mid;
                f0 = fm;
            } else {
                x1 = mid;
            }
        }
        roots.push(0.5 * (x0 + x1));
    }
    roots
}

/// Classical steady state of the driven device. See [`MeanFieldMode`].
pub fn steady_state_mean_fields(params: &SystemParams, mode: MeanFieldMode) -> Result<MeanFields> {
    params.validate()?;
    let a_in = input_amplitude(params);
    let cubic_roots = if a_in > 0.0 {
        positive_cubic_roots(mean_field_cubic(params))
    } else {
        Vec::new()
    };

    let u = if a_in == 0.0 {
        0.0
    } else {
        match mode {
            MeanFieldMode::Paper => {
                2.0 * params.kappa_f * a_in * a_in / (params.delta.powi(2) + params.kappa_f.powi(2))
            }
            MeanFieldMode::Cubic | MeanFieldMode::SelfConsistent => {
                *cubic_roots.first().ok_or(Error::NoPositiveRoot)?
            }
        }
    };

    let amp = u.sqrt();
    let (z, w) = cubic_terms(params);
    let phi = if a_in > 0.0 {
        // LHS = √(2κ_F) e^{−iφ} ā_in.
        let lhs = match mode {
            MeanFieldMode::Paper => w * amp,
            _ => (z * u + w) * amp,
        };
        -lhs.arg()
    } else {
        0.0
    };

    let a_f = Complex::new(amp, 0.0);
    let a_s = Complex::new(params.chi * u, 0.0) / Complex::new(-params.kappa_s, 2.0 * params.delta);
    let x_bar = match mode {
        MeanFieldMode::SelfConsistent => (params.g_f * u + params.g_s() * a_s.norm_sqr()) / params.omega_m,
        _ => 0.0,
    };
    Ok(MeanFields {
        mode,
        u,
        a_f,
        a_s,
        phi,
        x_bar,
        p_bar: 0.0,
        alpha: (params.chi > 0.0).then(|| params.g_f / (SQRT_2 * params.chi)),
        beta: params.chi * amp,
        detuning_f: params.delta + params.g_f * x_bar,
        detuning_s: 2.0 * params.delta + params.g_s() * x_bar,
        cubic_roots,
    })
}

/// Residual `|LHS − RHS| / |RHS|` of the complex mean-field equation for the
/// equation the given mode solves (the full cubic, or its linear part in
/// `paper` mode), evaluated with the stored phase.
pub fn mean_field_residual(params: &SystemParams, fields: &MeanFields) -> f64 {
    let a_in = input_amplitude(params);
    let (z, w) = cubic_terms(params);
    let amp = fields.u.sqrt();
    let lhs = match fields.mode {
        MeanFieldMode::Paper => w * amp,
        _ => (z * fields.u + w) * amp,
    };
    let rhs = Complex::from_polar((2.0 * params.kappa_f).sqrt() * a_in, -fields.phi);
    if rhs.norm() == 0.0 {
        lhs.norm()
    } else {
        (lhs - rhs).norm() / rhs.norm()
    }
}

/// Drift matrix `A` of `Ṙ = A R + R_in`, rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix(DMatrix<f64>);

impl DriftMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Diagonal input-noise matrix `D` of the Lyapunov equation, rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix(DMatrix<f64>);

impl DiffusionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

const GAUGE_TOLERANCE: f64 = 1e-12;

/// Linearized drift matrix from the mean-field amplitudes.
pub fn drift_matrix(params: &SystemParams, fields: &MeanFields) -> Result<DriftMatrix> {
    if fields.a_f.im.abs() > GAUGE_TOLERANCE * fields.a_f.norm().max(1.0) {
        return Err(Error::GaugeViolation { imag: fields.a_f.im });
    }
    let (fr, fi) = (fields.a_f.re, fields.a_f.im);
    let (sr, si) = (fields.a_s.re, fields.a_s.im);
    let chi2 = 2.0 * params.chi;
    let gf = SQRT_2 * params.g_f;
    let gs = SQRT_2 * params.g_s();
    let (df, ds) = (fields.detuning_f, fields.detuning_s);
    let (kf, ks) = (params.kappa_f, params.kappa_s);
    let (wm, km) = (params.omega_m, params.kappa_m);
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 6, &[
        -kf + chi2 * sr, -df + chi2 * si,  chi2 * fr,  chi2 * fi, -gf * fi, 0.0,
         df + chi2 * si, -kf - chi2 * sr, -chi2 * fi,  chi2 * fr,  gf * fr, 0.0,
        -chi2 * fr,       chi2 * fi,      -ks,        -ds,        -gs * si, 0.0,
        -chi2 * fi,      -chi2 * fr,       ds,        -ks,         gs * sr, 0.0,
         0.0,             0.0,             0.0,        0.0,        0.0,     wm,
         gf * fr,         gf * fi,         gs * sr,    gs * si,   -wm,      -2.0 * km,
    ]);
    Ok(DriftMatrix(a))
}

/// The same drift matrix written through `α = g_F/(√2χ)` and `β = χā_F`
/// with `ā_S` eliminated. Only defined for `χ > 0` and `x̄ = 0`.
pub fn drift_matrix_rescaled(params: &SystemParams, alpha: f64, beta: f64) -> DriftMatrix {
    let (d, kf, ks) = (params.delta, params.kappa_f, params.kappa_s);
    let (wm, km) = (params.omega_m, params.kappa_m);
    let den = 4.0 * d * d + ks * ks;
    let b2 = beta * beta;
    let ab = alpha * beta;
    let ab2 = alpha * b2;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 6, &[
        -kf - 2.0 * ks / den * b2, -d - 4.0 * d / den * b2,  2.0 * beta, 0.0,         0.0,                     0.0,
         d - 4.0 * d / den * b2,   -kf + 2.0 * ks / den * b2, 0.0,       2.0 * beta,  2.0 * ab,                0.0,
        -2.0 * beta,                0.0,                     -ks,        -2.0 * d,     8.0 * d / den * ab2,    0.0,
         0.0,                      -2.0 * beta,               2.0 * d,   -ks,         -4.0 * ks / den * ab2,   0.0,
         0.0,                       0.0,                      0.0,        0.0,         0.0,                    wm,
         2.0 * ab,                  0.0,                     -4.0 * ks / den * ab2, -8.0 * d / den * ab2, -wm, -2.0 * km,
    ]);
    DriftMatrix(a)
}

/// `D = diag(κ_F, κ_F, κ_S, κ_S, 0, 2κ_m(2n_th + 1))`.
pub fn diffusion_matrix(params: &SystemParams) -> DiffusionMatrix {
    let n_th = thermal_occupation(params);
    let diag = DVector::from_vec(vec![
        params.kappa_f,
        params.kappa_f,
        params.kappa_s,
        params.kappa_s,
        0.0,
        2.0 * params.kappa_m * (2.0 * n_th + 1.0),
    ]);
    DiffusionMatrix(DMatrix::from_diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_difference;

    const TWO_PI: f64 = 2.0 * PI;

    #[test]
    fn thermal_occupation_examples() {
        let p = SystemParams::reference();
        assert_eq!(thermal_occupation(&SystemParams { t_env: 0.0, ..p }), 0.0);
        // k_B·0.8 / (ħ·2π·70e6), evaluated independently below.
        let expected = 1.380_649e-23 * 0.8 / (1.054_571_817e-34 * TWO_PI * 70e6);
        assert!((thermal_occupation(&p) - expected).abs() < 1e-12 * expected);
        assert!((thermal_occupation(&p) - 238.13).abs() < 0.01);
        let doubled = SystemParams {
            omega_m: 2.0 * p.omega_m,
            ..p
        };
        assert!((thermal_occupation(&doubled) - 0.5 * thermal_occupation(&p)).abs() < 1e-12);
    }

    #[test]
    fn decoherence_time_examples() {
        let p = SystemParams {
            kappa_m: TWO_PI * 5.9e3,
            ..SystemParams::reference()
        };
        let tau = decoherence_time(&p).unwrap();
        assert!((tau - 1.133e-7).abs() < 0.001e-7, "{tau}");
        let hot = SystemParams {
            t_env: 2.0 * p.t_env,
            ..p
        };
        assert!((decoherence_time(&hot).unwrap() - tau / 2.0).abs() < 1e-12 * tau);
        assert_eq!(
            decoherence_time(&SystemParams { t_env: 0.0, ..p }),
            Err(Error::ZeroTemperature)
        );
    }

    #[test]
    fn input_amplitude_examples() {
        let p = SystemParams::reference();
        assert_eq!(input_amplitude(&SystemParams { p_in: 0.0, ..p }), 0.0);
        let a = input_amplitude(&p);
        // √(1e-6 · 1554e-9 / (2π ħ c))
        let expected = (1e-6 * 1554e-9 / (TWO_PI * 1.054_571_817e-34 * 299_792_458.0f64)).sqrt();
        assert!((a - expected).abs() < 1e-9 * expected);
        assert!((a - 2.797e6).abs() < 0.001e6, "{a}");
        let quad = SystemParams {
            p_in: 4.0 * p.p_in,
            ..p
        };
        assert!((input_amplitude(&quad) - 2.0 * a).abs() < 1e-9 * a);
    }

    #[test]
    fn empty_shg_matches_driven_cavity() {
        for mode in [
            MeanFieldMode::Paper,
            MeanFieldMode::Cubic,
            MeanFieldMode::SelfConsistent,
        ] {
            let p = SystemParams {
                chi: 0.0,
                ..SystemParams::reference()
            };
            let f = steady_state_mean_fields(&p, mode).unwrap();
            let a_in = input_amplitude(&p);
            let expected = (2.0 * p.kappa_f).sqrt() * a_in / Complex::new(p.kappa_f, -p.delta).norm();
            assert!((f.a_f.norm() - expected).abs() < 1e-10 * expected);
            assert_eq!(f.a_s, Complex::new(0.0, 0.0));
            assert_eq!(f.cubic_roots.len(), 1);
            assert!(f.alpha.is_none());
        }
    }

    #[test]
    fn zero_drive_gives_zero_fields() {
        let p = SystemParams {
            p_in: 0.0,
            ..SystemParams::reference()
        };
        let f = steady_state_mean_fields(&p, MeanFieldMode::Cubic).unwrap();
        assert_eq!(f.u, 0.0);
        assert_eq!(f.a_f, Complex::new(0.0, 0.0));
        assert_eq!(f.a_s.norm(), 0.0);
        assert!(f.cubic_roots.is_empty());
    }

    fn brute_force_roots(coeffs: [f64; 4], lo: f64, hi: f64) -> Vec<f64> {
        let [c3, c2, c1, c0] = coeffs;
        let p = |u: f64| ((c3 * u + c2) * u + c1) * u + c0;
        let n = 200_000;
        let mut roots = Vec::new();
        let grid: Vec<f64> = (0..=n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / n as f64).exp())
            .collect();
        for w in grid.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            if p(a).signum() == p(b).signum() {
                continue;
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if p(m).signum() == p(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        roots
    }

    #[test]
    fn cubic_roots_match_brute_force_scan() {
        let red_sideband = SystemParams::high_q_red_sideband();
        let coeffs = mean_field_cubic(&red_sideband);
        let scanned = brute_force_roots(coeffs, 1e3, 1e13);
        let solved = positive_cubic_roots(coeffs);
        assert_eq!(solved.len(), scanned.len());
        assert_eq!(solved.len(), 3, "red-sideband drive is in the bistable regime");
        for (a, b) in solved.iter().zip(&scanned) {
            assert!((a - b).abs() < 1e-8 * b, "{a} vs {b}");
        }

        for p_in in [1e-9, 1e-6, 1e-3, 1e-1] {
            for delta_frac in [-2.0, -1.0, -0.3, 0.0, 0.5, 1.7] {
                let p = SystemParams {
                    p_in,
                    delta: delta_frac * red_sideband.omega_m,
                    ..red_sideband
                };
                let coeffs = mean_field_cubic(&p);
                let scanned = brute_force_roots(coeffs, 1e-3, 1e14);
                let solved = positive_cubic_roots(coeffs);
                assert_eq!(solved.len(), scanned.len(), "P={p_in} Δ={delta_frac}ω_m");
                for (a, b) in solved.iter().zip(&scanned) {
                    assert!((a - b).abs() < 1e-8 * b);
                }
            }
        }
    }

    #[test]
    fn second_harmonic_modulus_and_gauge() {
        let p = SystemParams::high_q_red_sideband();
        for mode in [
            MeanFieldMode::Paper,
            MeanFieldMode::Cubic,
            MeanFieldMode::SelfConsistent,
        ] {
            let f = steady_state_mean_fields(&p, mode).unwrap();
            assert_eq!(f.a_f.im, 0.0);
            let expected = p.chi * f.u / (4.0 * p.delta.powi(2) + p.kappa_s.powi(2)).sqrt();
            assert!((f.a_s.norm() - expected).abs() < 1e-12 * expected);
            assert!(mean_field_residual(&p, &f) < 1e-9, "{mode:?}");
        }
    }

    #[test]
    fn paper_mode_uses_linear_mean_field() {
        let p = SystemParams::high_q_red_sideband();
        let f = steady_state_mean_fields(&p, MeanFieldMode::Paper).unwrap();
        let a_in = input_amplitude(&p);
        let u0 = 2.0 * p.kappa_f * a_in * a_in / (p.delta.powi(2) + p.kappa_f.powi(2));
        assert_eq!(f.u, u0);
        assert_eq!(f.x_bar, 0.0);
        assert_eq!(f.detuning_f, p.delta);
        assert_eq!(f.detuning_s, 2.0 * p.delta);
        // The cubic branch closest to the linear regime lies above u₀ when
        // the SHG term pulls the resonance towards the drive.
        assert_eq!(f.cubic_roots.len(), 3);
    }

    #[test]
    fn self_consistent_mode_shifts_detunings() {
        let p = SystemParams {
            p_in: 1e-4,
            ..SystemParams::reference()
        };
        let f = steady_state_mean_fields(&p, MeanFieldMode::SelfConsistent).unwrap();
        let x_bar = (p.g_f * f.u + p.g_s() * f.a_s.norm_sqr()) / p.omega_m;
        assert!((f.x_bar - x_bar).abs() <= 1e-15 * x_bar);
        assert!(f.x_bar > 0.0);
        assert_eq!(f.detuning_f, p.delta + p.g_f * f.x_bar);
        assert_eq!(f.detuning_s, 2.0 * p.delta + p.g_s() * f.x_bar);
    }

    #[test]
    fn selected_root_is_continuous_in_power() {
        let base = SystemParams::reference();
        for mode in [MeanFieldMode::Paper, MeanFieldMode::Cubic] {
            let mut max_jump: Vec<f64> = Vec::new();
            for n in [200usize, 400, 800] {
                let mut prev: Option<f64> = None;
                let mut worst: f64 = 0.0;
                for i in 0..=n {
                    let p_in = 10f64.powf(-9.0 + 7.0 * i as f64 / n as f64);
                    let f = steady_state_mean_fields(&SystemParams { p_in, ..base }, mode).unwrap();
                    if let Some(u) = prev {
                        worst = worst.max((f.u - u).abs() / f.u);
                    }
                    prev = Some(f.u);
                }
                max_jump.push(worst);
            }
            assert!(max_jump[1] < max_jump[0] && max_jump[2] < max_jump[1], "{max_jump:?}");
        }
    }

    #[test]
    fn uncoupled_drift_is_block_diagonal() {
        let p = SystemParams {
            chi: 0.0,
            g_f: 0.0,
            ..SystemParams::reference()
        };
        let f = steady_state_mean_fields(&p, MeanFieldMode::Paper).unwrap();
        let a = drift_matrix(&p, &f).unwrap();
        let (d, kf, ks, wm, km) = (p.delta, p.kappa_f, p.kappa_s, p.omega_m, p.kappa_m);
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(6, 6, &[
            -kf, -d, 0.0, 0.0, 0.0, 0.0,
            d, -kf, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, -ks, -2.0 * d, 0.0, 0.0,
            0.0, 0.0, 2.0 * d, -ks, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, wm,
            0.0, 0.0, 0.0, 0.0, -wm, -2.0 * km,
        ]);
        assert_eq!(a.matrix(), &expected);
    }

    #[test]
    fn fifth_row_is_mechanical_position() {
        for p_in in [1e-8, 1e-3, 0.27] {
            for mode in [MeanFieldMode::Paper, MeanFieldMode::SelfConsistent] {
                let p = SystemParams {
                    p_in,
                    ..SystemParams::reference()
                };
                let a = drift_matrix(&p, &steady_state_mean_fields(&p, mode).unwrap()).unwrap();
                let row: Vec<f64> = a.matrix().row(4).iter().copied().collect();
                assert_eq!(row, vec![0.0, 0.0, 0.0, 0.0, 0.0, p.omega_m]);
                assert_eq!(a.matrix()[(5, 4)], -p.omega_m);
            }
        }
    }

    #[test]
    fn raw_and_rescaled_drift_agree() {
        for p in [SystemParams::high_q_red_sideband(), SystemParams::reference()] {
            for mode in [MeanFieldMode::Paper, MeanFieldMode::Cubic] {
                let f = steady_state_mean_fields(&p, mode).unwrap();
                let raw = drift_matrix(&p, &f).unwrap();
                let rescaled = drift_matrix_rescaled(&p, f.alpha.unwrap(), f.beta);
                assert!(relative_difference(raw.matrix(), rescaled.matrix()) < 1e-10);
                for (x, y) in raw.matrix().iter().zip(rescaled.matrix().iter()) {
                    assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300) || x == y, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn rescaled_drift_depends_only_on_coupling_ratio() {
        let p = SystemParams::high_q_red_sideband();
        let beta = 1.3e8;
        let reference = drift_matrix_rescaled(&p, p.g_f / (SQRT_2 * p.chi), beta);
        for c in [0.1, 0.5, 3.0, 17.0] {
            let scaled = SystemParams {
                g_f: c * p.g_f,
                chi: c * p.chi,
                ..p
            };
            let alpha = scaled.g_f / (SQRT_2 * scaled.chi);
            let rescaled = drift_matrix_rescaled(&scaled, alpha, beta);
            assert!(relative_difference(rescaled.matrix(), reference.matrix()) < 1e-14);

            // Raw construction with ā_F chosen so that β is unchanged.
            let u = (beta / scaled.chi).powi(2);
            let fields = MeanFields {
                u,
                a_f: Complex::new(u.sqrt(), 0.0),
                a_s: Complex::new(scaled.chi * u, 0.0) / Complex::new(-scaled.kappa_s, 2.0 * scaled.delta),
                beta,
                alpha: Some(alpha),
                ..steady_state_mean_fields(&scaled, MeanFieldMode::Paper).unwrap()
            };
            let raw = drift_matrix(&scaled, &fields).unwrap();
            assert!(relative_difference(raw.matrix(), reference.matrix()) < 1e-12);
        }
    }

    #[test]
    fn gauge_violation_is_reported() {
        let p = SystemParams::reference();
        let mut f = steady_state_mean_fields(&p, MeanFieldMode::Paper).unwrap();
        f.a_f.im = 1e-3 * f.a_f.re;
        assert!(matches!(drift_matrix(&p, &f), Err(Error::GaugeViolation { .. })));
    }

    #[test]
    fn diffusion_matrix_examples() {
        let p = SystemParams::reference();
        let cold = diffusion_matrix(&SystemParams { t_env: 0.0, ..p });
        assert_eq!(cold.matrix()[(5, 5)], 2.0 * p.kappa_m);
        let d = diffusion_matrix(&SystemParams {
            kappa_m: TWO_PI * 5.9e3,
            ..p
        });
        let expected = 2.0 * TWO_PI * 5.9e3 * (2.0 * thermal_occupation(&p) + 1.0);
        assert!((d.matrix()[(5, 5)] - expected).abs() < 1e-9 * expected);
        assert!((d.matrix()[(5, 5)] - 3.54e7).abs() < 0.01e7);
        for i in 0..4 {
            assert_eq!(cold.matrix()[(i, i)], d.matrix()[(i, i)]);
        }
        assert_eq!(d.matrix()[(4, 4)], 0.0);
        assert!(d.matrix().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn validate_rejects_nonpositive_rates() {
        let p = SystemParams::reference();
        assert!(SystemParams { kappa_f: 0.0, ..p }.validate().is_err());
        assert!(SystemParams { p_in: -1.0, ..p }.validate().is_err());
        assert!(SystemParams { delta: f64::NAN, ..p }.validate().is_err());
        assert!(SystemParams { delta: -3e9, ..p }.validate().is_ok());
        assert!((p.with_q_m(597_000.0).q_m() - 597_000.0).abs() < 1e-6);
    }
}
