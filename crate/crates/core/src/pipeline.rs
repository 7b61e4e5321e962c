//! One parameter point through the whole chain.

use nalgebra::DMatrix;

use crate::dynamics::{stability, steady_state_covariance, StabilityReport};
use crate::entanglement::{analyze, EntanglementReport};
use crate::error::Result;
use crate::gaussian::CovarianceMatrix;
use crate::model::{diffusion_matrix, drift_matrix, steady_state_mean_fields, MeanFieldMode, MeanFields, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PointEvaluation {
    pub params: SystemParams,
    pub fields: MeanFields,
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub stability: StabilityReport,
    /// `None` when the point is unstable.
    pub covariance: Option<CovarianceMatrix>,
    /// `None` when the point is unstable.
    pub entanglement: Option<EntanglementReport>,
}

/// Mean fields, drift and diffusion, stability, and (for stable points) the
/// steady-state covariance and its entanglement report. Instability is a
/// regular outcome; only numerical failures are errors.
pub fn evaluate_point(params: &SystemParams, mode: MeanFieldMode) -> Result<PointEvaluation> {
    let fields = steady_state_mean_fields(params, mode)?;
    let drift = drift_matrix(params, &fields)?.into_matrix();
    let diffusion = diffusion_matrix(params).into_matrix();
    let report = stability(&drift)?;
    let (covariance, entanglement) = if report.stable {
        let v = steady_state_covariance(&drift, &diffusion)?;
        let e = analyze(&v, true)?;
        (Some(v), Some(e))
    } else {
        (None, None)
    };
    Ok(PointEvaluation {
        params: *params,
        fields,
        drift,
        diffusion,
        stability: report,
        covariance,
        entanglement,
    })
}
