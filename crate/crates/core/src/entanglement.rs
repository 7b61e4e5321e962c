//! Entanglement structure of a three-mode Gaussian state ordered `(F, S, M)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, PHYSICALITY_TOLERANCE};

pub const F: usize = 0;
pub const S: usize = 1;
pub const M: usize = 2;

/// One of the three modes, used to name separable cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    F,
    S,
    M,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::F, Mode::S, Mode::M];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Separability class certified by the partial-transpose test on the three
/// one-versus-two cuts. NPT is necessary and sufficient for these cuts of a
/// Gaussian state, so the first three classes are exact. States that are
/// PPT across all three cuts are reported as `FullySeparableClass`: the cut
/// tests alone cannot separate them from `ThreeModeBiseparable` (bound
/// entangled) states, which are therefore never produced by [`analyze`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class", content = "separable")]
pub enum GiedkeClass {
    FullyInseparable,
    /// The named mode is separable from the other two.
    OneModeBiseparable(Mode),
    /// Both named modes are separable from their complements.
    TwoModeBiseparable([Mode; 2]),
    ThreeModeBiseparable,
    FullySeparableClass,
}

impl GiedkeClass {
    /// Class from the negativities of the cuts `F|SM`, `S|FM`, `M|FS`.
    pub fn from_cuts(cuts: [f64; 3]) -> Self {
        let separable: Vec<Mode> = Mode::ALL.into_iter().filter(|m| cuts[m.index()] <= 0.0).collect();
        match separable.as_slice() {
            [] => Self::FullyInseparable,
            [m] => Self::OneModeBiseparable(*m),
            [a, b] => Self::TwoModeBiseparable([*a, *b]),
            _ => Self::FullySeparableClass,
        }
    }

    pub fn label(&self) -> String {
        let name = |m: &Mode| format!("{m:?}");
        match self {
            Self::FullyInseparable => "fully_inseparable".into(),
            Self::OneModeBiseparable(m) => format!("one_mode_biseparable({})", name(m)),
            Self::TwoModeBiseparable([a, b]) => {
                format!("two_mode_biseparable({},{})", name(a), name(b))
            }
            Self::ThreeModeBiseparable => "three_mode_biseparable".into(),
            Self::FullySeparableClass => "fully_separable_class".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub e_sm: f64,
    pub e_fm: f64,
    pub e_fs: f64,
    pub e_f_sm: f64,
    pub e_s_fm: f64,
    pub e_m_fs: f64,
    pub e_tri: f64,
    pub giedke_class: GiedkeClass,
    pub stable: bool,
}

impl EntanglementReport {
    /// `(E_SM, E_FM, E_FS)`.
    pub fn reductions(&self) -> [f64; 3] {
        [self.e_sm, self.e_fm, self.e_fs]
    }

    /// `(E_F|SM, E_S|FM, E_M|FS)`.
    pub fn bipartitions(&self) -> [f64; 3] {
        [self.e_f_sm, self.e_s_fm, self.e_m_fs]
    }
}

fn check_three_mode_physical(v: &CovarianceMatrix) -> Result<()> {
    if v.n_modes() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            actual: v.dim(),
        });
    }
    let nus = v
        .symplectic_eigenvalues()
        .map_err(|_| Error::UnphysicalState { min_nu: f64::NAN })?;
    if nus[0] < 0.5 - PHYSICALITY_TOLERANCE {
        return Err(Error::UnphysicalState { min_nu: nus[0] });
    }
    Ok(())
}

fn cut_negativities(v: &CovarianceMatrix) -> Result<[f64; 3]> {
    Ok([
        v.log_negativity(&[F])?,
        v.log_negativity(&[S])?,
        v.log_negativity(&[M])?,
    ])
}

/// Logarithmic form of the geometric-mean tripartite negativity:
/// `ln(1 + 2·(N₁N₂N₃)^{1/3})` with `N_i = (e^{E_i} − 1)/2`.
pub fn tripartite_from_cuts(cuts: [f64; 3]) -> f64 {
    if cuts.iter().any(|&e| e <= 0.0) {
        return 0.0;
    }
    let n: f64 = cuts.iter().map(|&e| 0.5 * e.exp_m1()).product();
    (2.0 * n.cbrt()).ln_1p()
}

pub fn tripartite_log_negativity(v: &CovarianceMatrix) -> Result<f64> {
    check_three_mode_physical(v)?;
    Ok(tripartite_from_cuts(cut_negativities(v)?))
}

/// All seven measures and the separability class. `stable` is copied into
/// the report so that sweep cells carry their own stability flag.
pub fn analyze(v: &CovarianceMatrix, stable: bool) -> Result<EntanglementReport> {
    check_three_mode_physical(v)?;
    let pair = |a: usize, b: usize| v.reduce(&[a, b])?.log_negativity(&[0]);
    let cuts = cut_negativities(v)?;
    Ok(EntanglementReport {
        e_sm: pair(S, M)?,
        e_fm: pair(F, M)?,
        e_fs: pair(F, S)?,
        e_f_sm: cuts[0],
        e_s_fm: cuts[1],
        e_m_fs: cuts[2],
        e_tri: tripartite_from_cuts(cuts),
        giedke_class: GiedkeClass::from_cuts(cuts),
        stable,
    })
}
