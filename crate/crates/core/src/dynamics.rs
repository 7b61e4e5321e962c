//! Stability of the linearized dynamics and the steady-state Lyapunov
//! equation `A V + V Aᵀ + D = 0`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::linalg::{eigenvalues, kron, symmetrize};
use crate::model::MODE_LABELS;

/// Relative stability margin: a point is stable when every eigenvalue has
/// `Re λ < −STABILITY_TOLERANCE·‖A‖_F`. Small enough to resolve the
/// mechanical damping against the optical rates.
pub const STABILITY_TOLERANCE: f64 = 1e-9;

/// Pivot ratio of the vectorized Lyapunov operator below which it is
/// treated as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// Largest real part of the spectrum, rad/s.
    pub max_real_eigenvalue: f64,
    pub routh_hurwitz_pass: bool,
    /// Monic characteristic polynomial of `A/‖A‖_F`, highest power first.
    pub char_poly_coeffs: Vec<f64>,
    /// Leading principal minors `Δ_1 … Δ_n` of the Hurwitz matrix of the
    /// margin-shifted normalized polynomial.
    pub hurwitz_determinants: Vec<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    /// `STABILITY_TOLERANCE·‖A‖_F`, rad/s.
    pub tolerance: f64,
}

/// Coefficients `[1, c_1, …, c_n]` of `Π (λ − r_k)`.
pub fn poly_from_roots(roots: &[Complex<f64>]) -> Vec<f64> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck * r;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

/// Leading principal minors of the Hurwitz matrix of a polynomial with
/// coefficients `[a_0, …, a_n]`, highest power first.
pub fn hurwitz_determinants(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len().saturating_sub(1);
    let at = |k: isize| -> f64 {
        if k < 0 || k as usize > n {
            0.0
        } else {
            coeffs[k as usize]
        }
    };
    // H[i][j] = a_{2(j+1) − (i+1)} with 0-based i, j.
    let h = DMatrix::from_fn(n, n, |i, j| at(2 * (j as isize + 1) - (i as isize + 1)));
    (1..=n)
        .map(|k| h.view((0, 0), (k, k)).into_owned().determinant())
        .collect()
}

/// True when every root of the polynomial has negative real part.
pub fn routh_hurwitz(coeffs: &[f64]) -> bool {
    coeffs.first().is_some_and(|&a0| a0 > 0.0)
        && coeffs.iter().all(|&c| c > 0.0)
        && hurwitz_determinants(coeffs).iter().all(|&d| d > 0.0)
}

/// Spectral and Routh–Hurwitz stability of a drift matrix.
///
/// Both tests are applied to `A/‖A‖_F` against the same margin: the
/// Hurwitz chain is evaluated on the characteristic polynomial with roots
/// shifted right by the tolerance, so that the two verdicts answer the same
/// question. Disagreement is only tolerated when the spectral abscissa lies
/// within one tolerance of the margin; there the point is classified
/// unstable.
pub fn stability(a: &DMatrix<f64>) -> Result<StabilityReport> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams("drift matrix has non-finite entries".into()));
    }
    let scale = a.norm();
    if scale == 0.0 {
        return Ok(StabilityReport {
            stable: false,
            max_real_eigenvalue: 0.0,
            routh_hurwitz_pass: false,
            char_poly_coeffs: poly_from_roots(&vec![Complex::new(0.0, 0.0); a.nrows()]),
            hurwitz_determinants: vec![0.0; a.nrows()],
            eigenvalues: vec![Complex::new(0.0, 0.0); a.nrows()],
            tolerance: 0.0,
        });
    }

    let normalized = a / scale;
    let mu = eigenvalues(&normalized).ok_or(Error::SingularDrift)?;
    let max_re_n = mu.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let spectral_pass = max_re_n < -STABILITY_TOLERANCE;

    let char_poly_coeffs = poly_from_roots(&mu);
    let shifted: Vec<Complex<f64>> = mu.iter().map(|z| z + STABILITY_TOLERANCE).collect();
    let shifted_poly = poly_from_roots(&shifted);
    let dets = hurwitz_determinants(&shifted_poly);
    let hurwitz_pass = shifted_poly.iter().all(|&c| c > 0.0) && dets.iter().all(|&d| d > 0.0);

    let tolerance = STABILITY_TOLERANCE * scale;
    let max_real_eigenvalue = max_re_n * scale;
    if spectral_pass != hurwitz_pass && (max_re_n + STABILITY_TOLERANCE).abs() > STABILITY_TOLERANCE {
        return Err(Error::InconsistentVerdicts {
            max_real: max_real_eigenvalue,
            hurwitz: hurwitz_pass,
        });
    }

    Ok(StabilityReport {
        stable: spectral_pass && hurwitz_pass,
        max_real_eigenvalue,
        routh_hurwitz_pass: hurwitz_pass,
        char_poly_coeffs,
        hurwitz_determinants: dets,
        eigenvalues: mu.into_iter().map(|z| z * scale).collect(),
        tolerance,
    })
}

/// Solves `A V + V Aᵀ + D = 0` by vectorization, without checking stability.
/// The operator `I⊗A + A⊗I` is factorized with full pivoting after scaling
/// by `‖A‖_F`, followed by one step of iterative refinement.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || d.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if a.is_square() { d.nrows() } else { a.ncols() },
        });
    }
    let scale = a.norm();
    if scale == 0.0 {
        return Err(Error::SingularSystem);
    }
    let an = a / scale;
    let eye = DMatrix::<f64>::identity(n, n);
    let op = kron(&eye, &an) + kron(&an, &eye);
    let rhs = DVector::from_column_slice((-d / scale).as_slice());

    let lu = op.clone().full_piv_lu();
    let u = lu.u();
    let diag = u.diagonal().map(f64::abs);
    let (lo, hi) = (diag.min(), diag.max());
    if hi <= 0.0 || hi.is_nan() || lo / hi < SINGULAR_PIVOT_RATIO {
        return Err(Error::SingularSystem);
    }
    let mut x = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let residual = &rhs - &op * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    let v = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok(symmetrize(&v))
}

/// `‖A V + V Aᵀ + D‖_F`.
pub fn lyapunov_residual(a: &DMatrix<f64>, v: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    (a * v + v * a.transpose() + d).norm()
}

/// Steady-state covariance of a stable linear Langevin system.
pub fn steady_state_covariance(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    let report = stability(a)?;
    if !report.stable {
        return Err(Error::UnstableSystem {
            max_real: report.max_real_eigenvalue,
        });
    }
    let v = solve_lyapunov(a, d)?;
    let cov = CovarianceMatrix::new(v)?;
    if cov.n_modes() == MODE_LABELS.len() {
        cov.with_labels(MODE_LABELS)
    } else {
        Ok(cov)
    }
}
