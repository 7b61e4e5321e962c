//! Zero-mean Gaussian states described by their quadrature covariance matrix.
//!
//! Quadratures are ordered `(x_1, p_1, x_2, p_2, …)` with `x = (a + a†)/√2`,
//! so the vacuum covariance matrix is `I/2` and the uncertainty principle
//! reads `ν_k ≥ 1/2` for every symplectic eigenvalue `ν_k`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance for matching the `±iν` eigenvalue pairs of `ΩV`.
pub const PAIRING_TOLERANCE: f64 = 1e-9;
/// Slack allowed below 1/2 before a state is declared unphysical.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;
/// Partially transposed eigenvalues must be below `1/2 − NEGATIVITY_GUARD`
/// to contribute to the logarithmic negativity.
pub const NEGATIVITY_GUARD: f64 = 1e-12;

/// The standard symplectic form `Ω = ⊕ [[0, 1], [−1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let dim = 2 * self.n_modes;
        let mut omega = DMatrix::zeros(dim, dim);
        for k in 0..self.n_modes {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        omega
    }
}

/// Real symmetric `2n × 2n` covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CovarianceRecord", try_from = "CovarianceRecord")]
pub struct CovarianceMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CovarianceRecord {
    n_modes: usize,
    labels: Vec<String>,
    /// Row-major.
    entries: Vec<Vec<f64>>,
}

impl From<CovarianceMatrix> for CovarianceRecord {
    fn from(v: CovarianceMatrix) -> Self {
        let entries = (0..v.entries.nrows())
            .map(|i| v.entries.row(i).iter().copied().collect())
            .collect();
        Self {
            n_modes: v.n_modes,
            labels: v.labels,
            entries,
        }
    }
}

impl TryFrom<CovarianceRecord> for CovarianceMatrix {
    type Error = Error;

    fn try_from(r: CovarianceRecord) -> Result<Self> {
        let dim = r.entries.len();
        if r.entries.iter().any(|row| row.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.entries.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0),
            });
        }
        let flat: Vec<f64> = r.entries.into_iter().flatten().collect();
        let v = Self::new(DMatrix::from_row_slice(dim, dim, &flat))?;
        if v.n_modes != r.n_modes {
            return Err(Error::DimensionMismatch {
                expected: 2 * r.n_modes,
                actual: dim,
            });
        }
        v.with_labels(r.labels)
    }
}

impl CovarianceMatrix {
    /// Wraps a `2n × 2n` matrix, symmetrizing it as `(V + Vᵀ)/2`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                actual: cols,
            });
        }
        if rows == 0 || rows % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: rows + rows % 2 + if rows == 0 { 2 } else { 0 },
                actual: rows,
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("covariance matrix has non-finite entries".into()));
        }
        let n_modes = rows / 2;
        Ok(Self {
            n_modes,
            entries: linalg::symmetrize(&entries),
            labels: (0..n_modes).map(|k| k.to_string()).collect(),
        })
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                actual: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// `n`-mode vacuum, `I/2`.
    pub fn vacuum(n_modes: usize) -> Self {
        Self::new(DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5).expect("vacuum is well formed")
    }

    /// Single-mode thermal state with mean occupation `n_bar`.
    pub fn thermal(n_bar: f64) -> Result<Self> {
        Self::new(DMatrix::identity(2, 2) * (n_bar + 0.5))
    }

    /// Single-mode squeezed thermal state: `ν · R(θ) diag(e^{2r}, e^{−2r}) R(θ)ᵀ`.
    pub fn squeezed_thermal(nu: f64, r: f64, theta: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![(2.0 * r).exp(), (-2.0 * r).exp()]));
        Self::new(&rot * diag * rot.transpose() * nu)
    }

    /// Two-mode squeezed vacuum with squeezing `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let c = 0.5 * (2.0 * r).cosh();
        let s = 0.5 * (2.0 * r).sinh();
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            c, 0.0, s, 0.0,
            0.0, c, 0.0, -s,
            s, 0.0, c, 0.0,
            0.0, -s, 0.0, c,
        ]);
        Self::new(m).expect("two-mode squeezed state is well formed")
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (a, b) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        m.view_mut((a, a), (b, b)).copy_from(&other.entries);
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        Self {
            n_modes: self.n_modes + other.n_modes,
            entries: m,
            labels,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    fn check_modes(&self, modes: &[usize]) -> Result<()> {
        if modes.is_empty() {
            return Err(Error::InvalidPartition("empty mode set".into()));
        }
        for &m in modes {
            if m >= self.n_modes {
                return Err(Error::IndexOutOfRange {
                    index: m,
                    n_modes: self.n_modes,
                });
            }
        }
        Ok(())
    }

    /// Symplectic eigenvalues, ascending, from the `±iν` spectrum of `ΩV`.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let omega = SymplecticForm::new(self.n_modes).matrix();
        let product = omega * &self.entries;
        let mut spectrum = linalg::eigenvalues(&product).ok_or(Error::NonPairedSpectrum {
            mismatch: f64::INFINITY,
        })?;
        let scale = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::NonPairedSpectrum { mismatch: 0.0 });
        }
        spectrum.sort_by(|a, b| a.im.total_cmp(&b.im));
        let n = self.n_modes;
        let mut nus = Vec::with_capacity(n);
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let lower = spectrum[k];
            let upper = spectrum[2 * n - 1 - k];
            worst = worst
                .max((lower.im + upper.im).abs())
                .max(lower.re.abs())
                .max(upper.re.abs());
            nus.push(0.5 * (upper.im - lower.im));
        }
        if worst > PAIRING_TOLERANCE * scale || nus.iter().any(|&nu| nu <= 0.0) {
            return Err(Error::NonPairedSpectrum {
                mismatch: worst / scale,
            });
        }
        nus.sort_by(f64::total_cmp);
        Ok(nus)
    }

    /// Phase-space transposition of `modes`: flips the sign of their `p`.
    pub fn partial_transpose(&self, modes: &[usize]) -> Result<Self> {
        self.check_modes(modes)?;
        let mut signs = vec![1.0; self.dim()];
        for &m in modes {
            signs[2 * m + 1] = -1.0;
        }
        let entries = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            signs[i] * signs[j] * self.entries[(i, j)]
        });
        Ok(Self {
            n_modes: self.n_modes,
            entries,
            labels: self.labels.clone(),
        })
    }

    /// Marginal state on `modes`, in the order given.
    pub fn reduce(&self, modes: &[usize]) -> Result<Self> {
        self.check_modes(modes)?;
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let entries = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        Ok(Self {
            n_modes: modes.len(),
            entries,
            labels: modes.iter().map(|&m| self.labels[m].clone()).collect(),
        })
    }

    /// `V + iΩ/2 ≥ 0`, checked as `min ν_k ≥ 1/2 − 1e-9`.
    pub fn is_physical(&self) -> bool {
        self.min_symplectic_eigenvalue()
            .is_some_and(|nu| nu >= 0.5 - PHYSICALITY_TOLERANCE)
    }

    fn min_symplectic_eigenvalue(&self) -> Option<f64> {
        self.symplectic_eigenvalues().ok().map(|nus| nus[0])
    }

    /// Logarithmic negativity across `partition_a | rest`:
    /// `E_N = −Σ ln(2ν̃_k)` over partially transposed eigenvalues `ν̃_k < 1/2`.
    pub fn log_negativity(&self, partition_a: &[usize]) -> Result<f64> {
        self.check_modes(partition_a)?;
        let mut sorted = partition_a.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == self.n_modes {
            return Err(Error::InvalidPartition(
                "partition must leave a nonempty complement".into(),
            ));
        }
        let nus = self
            .symplectic_eigenvalues()
            .map_err(|_| Error::UnphysicalState { min_nu: f64::NAN })?;
        if nus[0] < 0.5 - PHYSICALITY_TOLERANCE {
            return Err(Error::UnphysicalState { min_nu: nus[0] });
        }
        let transposed = self.partial_transpose(&sorted)?.symplectic_eigenvalues()?;
        let en: f64 = transposed
            .iter()
            .filter(|&&nu| nu < 0.5 - NEGATIVITY_GUARD)
            .map(|&nu| -(2.0 * nu).ln())
            .sum();
        Ok(en.max(0.0))
    }
}

/// Uhlmann fidelity between two zero-mean single-mode Gaussian states:
/// `F = 1/(√(Δ+Λ) − √Λ)` with `Δ = det(V₁+V₂)` and
/// `Λ = 4(det V₁ − 1/4)(det V₂ − 1/4)`.
pub fn gaussian_fidelity_single_mode(v1: &CovarianceMatrix, v2: &CovarianceMatrix) -> Result<f64> {
    for v in [v1, v2] {
        if v.n_modes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: v.dim(),
            });
        }
    }
    let delta = (v1.matrix() + v2.matrix()).determinant();
    let lambda = (4.0 * (v1.determinant() - 0.25) * (v2.determinant() - 0.25)).max(0.0);
    // 1/(√(Δ+Λ) − √Λ) rewritten without the cancellation.
    let f = ((delta + lambda).sqrt() + lambda.sqrt()) / delta;
    Ok(f.clamp(0.0, 1.0))
}
