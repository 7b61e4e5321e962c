//! Small dense linear-algebra helpers shared by the physics modules.

use nalgebra::{Complex, DMatrix, Schur};

/// Matrix exponential (scaling-and-squaring with a diagonal Padé approximant).
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.exp()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `(m + mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a real square matrix, or `None` if the Schur iteration
/// fails to converge.
pub fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Symmetric relative difference `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`.
pub fn relative_difference(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F>(f: &F, a: f64, b: f64) -> (DMatrix<f64>, f64)
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let center = f(mid);
    let mut kronrod = &center * K15_WEIGHTS[7];
    let mut gauss = &center * G7_WEIGHTS[3];
    for (i, &x) in GK_NODES[..7].iter().enumerate() {
        let lo = f(mid - half * x);
        let hi = f(mid + half * x);
        let sum = lo + hi;
        kronrod += &sum * K15_WEIGHTS[i];
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if i % 2 == 1 {
            gauss += &sum * G7_WEIGHTS[i / 2];
        }
    }
    kronrod *= half;
    gauss *= half;
    let err = (&kronrod - &gauss).norm();
    (kronrod, err)
}

/// Adaptive Gauss–Kronrod quadrature of a matrix-valued integrand over
/// `[a, b]`, refined until the Frobenius error estimate is below
/// `max(abs_tol, rel_tol·‖I‖_F)` or `max_intervals` is reached.
pub fn integrate_matrix<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_intervals: usize) -> DMatrix<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let (first, first_err) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, first, first_err)];
    loop {
        let total: DMatrix<f64> = intervals
            .iter()
            .skip(1)
            .fold(intervals[0].2.clone(), |acc, iv| acc + &iv.2);
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) || intervals.len() >= max_intervals {
            return total;
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one interval");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (left, left_err) = gk15(&f, lo, mid);
        let (right, right_err) = gk15(&f, mid, hi);
        intervals.push((lo, mid, left, left_err));
        intervals.push((mid, hi, right, right_err));
    }
}
