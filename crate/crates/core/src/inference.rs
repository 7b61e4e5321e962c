//! Reconstruction of the intracavity state from finite-bandwidth homodyne
//! records.
//!
//! A detector with a boxcar point-spread function of width `τ` reports the
//! window average of each quadrature. Differentiating the averaged record
//! and substituting the equations of motion gives an inferred covariance
//!
//! ```text
//! Ṽ = Φ V Φᵀ + τ ∫₀¹ B(σ) D B(σ)ᵀ dσ,   B(σ) = ∫₀^σ e^{Aτρ} dρ,   Φ = B(1),
//! ```
//!
//! which equals `(Aτ)⁻¹[(e^{Aτ}−I) V (e^{Aτ}−I)ᵀ + ∫₀^τ …](Aτ)⁻ᵀ` without
//! forming the inverse. Both terms come out of one block exponential.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{gaussian_fidelity_single_mode, CovarianceMatrix, PHYSICALITY_TOLERANCE};
use crate::linalg::{expm, integrate_matrix, symmetrize};

/// Pivot ratio of `A` below which the drift is treated as singular.
const SINGULAR_DRIFT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Boxcar window length, s. Zero means infinite bandwidth.
    pub tau: f64,
    /// `1/τ`, Hz.
    pub bandwidth: f64,
}

impl DetectorModel {
    pub fn from_bandwidth(bandwidth_hz: f64) -> Result<Self> {
        if bandwidth_hz.is_nan() || bandwidth_hz <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "detector bandwidth must be > 0, got {bandwidth_hz}"
            )));
        }
        Ok(Self {
            tau: 1.0 / bandwidth_hz,
            bandwidth: bandwidth_hz,
        })
    }

    pub fn from_window(tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParams(format!("window must be ≥ 0, got {tau}")));
        }
        Ok(Self {
            tau,
            bandwidth: if tau == 0.0 { f64::INFINITY } else { 1.0 / tau },
        })
    }

    pub fn ideal() -> Self {
        Self {
            tau: 0.0,
            bandwidth: f64::INFINITY,
        }
    }
}

fn check_shapes(a: &DMatrix<f64>, d: &DMatrix<f64>, v: &CovarianceMatrix) -> Result<()> {
    let n = v.dim();
    for m in [a, d] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: m.nrows(),
            });
        }
    }
    Ok(())
}

fn check_invertible(a: &DMatrix<f64>) -> Result<()> {
    let scale = a.norm();
    if scale == 0.0 {
        return Err(Error::SingularDrift);
    }
    let lu = (a / scale).full_piv_lu();
    let diag = lu.u().diagonal().map(f64::abs);
    if diag.min() < SINGULAR_DRIFT_RATIO * diag.max() {
        return Err(Error::SingularDrift);
    }
    Ok(())
}

/// `C = [[Aτ, I], [0, 0]]`, whose exponential carries `B(σ)` in its
/// upper-right block.
fn augmented_generator(a: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    c.view_mut((0, 0), (n, n)).copy_from(&(a * tau));
    c.view_mut((0, n), (n, n)).fill_with_identity();
    c
}

/// `(Φ, W)` with `Φ = B(1)` and `W = τ∫₀¹ B D Bᵀ dσ`, from a single
/// exponential of the Van Loan block matrix built on the augmented generator.
fn propagator_and_noise(a: &DMatrix<f64>, d: &DMatrix<f64>, tau: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let c = augmented_generator(a, tau);
    let mut d_hat = DMatrix::zeros(2 * n, 2 * n);
    d_hat.view_mut((n, n), (n, n)).copy_from(&(d * tau));

    let m = 2 * n;
    let mut big = DMatrix::zeros(2 * m, 2 * m);
    big.view_mut((0, 0), (m, m)).copy_from(&(-&c));
    big.view_mut((0, m), (m, m)).copy_from(&d_hat);
    big.view_mut((m, m), (m, m)).copy_from(&c.transpose());
    let e = expm(&big);

    let f2t = e.view((m, m), (m, m)).transpose();
    let g1 = e.view((0, m), (m, m)).into_owned();
    let gram = &f2t * g1;
    let w = gram.view((0, 0), (n, n)).into_owned();
    let phi = f2t.view((0, n), (n, n)).into_owned();
    (phi, w)
}

fn assemble(v: &CovarianceMatrix, phi: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    let tilde = symmetrize(&(phi * v.matrix() * phi.transpose() + w));
    CovarianceMatrix::new(tilde)?.with_labels(v.labels().to_vec())
}

/// Exact inferred covariance for a boxcar detector of window `det.tau`.
pub fn inferred_covariance(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v: &CovarianceMatrix,
    det: &DetectorModel,
) -> Result<CovarianceMatrix> {
    check_shapes(a, d, v)?;
    if det.tau == 0.0 {
        return Ok(v.clone());
    }
    check_invertible(a)?;
    let (phi, w) = propagator_and_noise(a, d, det.tau);
    assemble(v, &phi, &w)
}

/// The same quantity with the noise integral done by adaptive Gauss–Kronrod
/// quadrature over `σ`. Slower; kept as an independent cross-check.
pub fn inferred_covariance_quadrature(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v: &CovarianceMatrix,
    det: &DetectorModel,
) -> Result<CovarianceMatrix> {
    check_shapes(a, d, v)?;
    if det.tau == 0.0 {
        return Ok(v.clone());
    }
    check_invertible(a)?;
    let n = a.nrows();
    let tau = det.tau;
    let c = augmented_generator(a, tau);
    let b = |sigma: f64| expm(&(&c * sigma)).view((0, n), (n, n)).into_owned();
    let phi = b(1.0);
    let td = d * tau;
    let scale = td.norm();
    let w = integrate_matrix(
        |sigma| {
            let bs = b(sigma);
            &bs * &td * bs.transpose()
        },
        0.0,
        1.0,
        1e-14 * scale,
        1e-12,
        2000,
    );
    assemble(v, &phi, &w)
}

/// First-order expansion `Ṽ ≈ V − τD/6`.
pub fn inferred_covariance_first_order(
    v: &CovarianceMatrix,
    d: &DMatrix<f64>,
    det: &DetectorModel,
) -> Result<CovarianceMatrix> {
    if d.shape() != (v.dim(), v.dim()) {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            actual: d.nrows(),
        });
    }
    CovarianceMatrix::new(v.matrix() - d * (det.tau / 6.0))?.with_labels(v.labels().to_vec())
}

fn clamped_reduction(v: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
    let r = v.reduce(&[mode])?;
    let det = r.determinant();
    let nu = det.max(0.0).sqrt();
    if nu >= 0.5 {
        return Ok(r);
    }
    if nu < 0.5 - PHYSICALITY_TOLERANCE || det <= 0.0 {
        return Err(Error::UnphysicalReduction { nu });
    }
    CovarianceMatrix::new(r.matrix() * (0.5 / nu))
}

/// Fidelity between the single-mode reductions of `v` and `v_inferred`.
pub fn inference_fidelity(v: &CovarianceMatrix, v_inferred: &CovarianceMatrix, mode: usize) -> Result<f64> {
    let a = clamped_reduction(v, mode)?;
    let b = clamped_reduction(v_inferred, mode)?;
    gaussian_fidelity_single_mode(&a, &b)
}

/// Input-output inversion `x = (x_out − x_in)/√(2κ)`.
pub fn intracavity_from_io(x_out: &[f64], x_in: &[f64], kappa: f64) -> Result<Vec<f64>> {
    if x_out.len() != x_in.len() {
        return Err(Error::LengthMismatch {
            left: x_out.len(),
            right: x_in.len(),
        });
    }
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::InvalidParams(format!("kappa must be > 0, got {kappa}")));
    }
    let norm = (2.0 * kappa).sqrt();
    Ok(x_out.iter().zip(x_in).map(|(o, i)| (o - i) / norm).collect())
}

/// Detector output for a uniformly sampled record: the trapezoidal mean of
/// the last `window` intervals. The first `window` samples have no full
/// window and are omitted, so the result has `len − window` entries.
pub fn boxcar_filter(series: &[f64], window: usize) -> Vec<f64> {
    if window == 0 {
        return series.to_vec();
    }
    if series.len() <= window {
        return Vec::new();
    }
    let mut sum: f64 = series[..=window].iter().sum::<f64>() - 0.5 * (series[0] + series[window]);
    let mut out = Vec::with_capacity(series.len() - window);
    out.push(sum / window as f64);
    for k in window + 1..series.len() {
        sum += 0.5 * (series[k] + series[k - 1]) - 0.5 * (series[k - window] + series[k - window - 1]);
        out.push(sum / window as f64);
    }
    out
}
