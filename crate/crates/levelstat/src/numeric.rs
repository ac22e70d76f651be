//! Small numerical utilities shared across the crate: compensated sums,
//! adaptive quadrature, least-squares fits, quasirandom points, and a pivoted
//! determinant that maps duplicate rows to an exact 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

/// Neumaier-compensated accumulator; error per operation is O(eps^2).
#[derive(Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Adds `a * b` together with its exact rounding error (via FMA).
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.add(e);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Rayleigh quotient `re(v^* A v) / (v^* v)` with compensated accumulation.
///
/// One such step squeezes an eigenvalue estimate down to a few ulps of the
/// true value (the quotient is stationary in v), which matters when central
/// differences divide eigenvalue changes by a small step.
pub fn refined_eigenvalue(a: &DMatrix<Complex64>, v: &[Complex64]) -> f64 {
    let n = v.len();
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for i in 0..n {
        den.add_prod(v[i].re, v[i].re);
        den.add_prod(v[i].im, v[i].im);
        for j in 0..n {
            let m = a[(i, j)];
            // re(conj(v_i) * m * v_j)
            num.add_prod(v[i].re * m.re + v[i].im * m.im, v[j].re);
            num.add_prod(v[i].re * -m.im + v[i].im * m.re, -v[j].im);
        }
    }
    num.value() / den.value()
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates over `[a, b]` split at the given interior breakpoints.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut lo = a;
    let mut total = 0.0;
    let per_piece = tol / (cuts.len() + 1) as f64;
    for &cut in &cuts {
        total += integrate(f, lo, cut, per_piece);
        lo = cut;
    }
    total + integrate(f, lo, b, per_piece)
}

/// Two-sided quantile of the standard normal for a confidence level,
/// e.g. 0.95 -> 1.959964.
pub fn z_for_confidence(level: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    normal.inverse_cdf(0.5 * (1.0 + level))
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Least-squares slope of y against x.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Chebyshev-basis least-squares fit of minimal degree.
///
/// Scales `xs` to [-1, 1] and `ys` by their max magnitude, then fits degrees
/// 0, 1, ... and returns the first whose max residual relative to max|y| is
/// at most `rel_tol`, together with the per-degree residuals. Falls back to
/// the last tried degree if none reaches the tolerance.
pub fn fit_minimal_degree(xs: &[f64], ys: &[f64], rel_tol: f64, max_degree: usize) -> (usize, Vec<f64>) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let yscale = ys.iter().fold(0.0f64, |m, &y| m.max(y.abs())).max(f64::MIN_POSITIVE);
    let ts: Vec<f64> = xs.iter().map(|&x| 2.0 * (x - xmin) / (xmax - xmin) - 1.0).collect();
    let yn: Vec<f64> = ys.iter().map(|&y| y / yscale).collect();

    let mut residuals = Vec::new();
    for degree in 0..=max_degree.min(xs.len() - 1) {
        let basis = DMatrix::from_fn(ts.len(), degree + 1, |i, j| chebyshev_t(j, ts[i]));
        let rhs = nalgebra::DVector::from_column_slice(&yn);
        let coeffs = basis
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .expect("svd solve");
        let fitted = basis * &coeffs;
        let residual = yn
            .iter()
            .zip(fitted.iter())
            .fold(0.0f64, |m, (&y, &f)| m.max((y - f).abs()));
        residuals.push(residual);
        if residual <= rel_tol {
            return (degree, residuals);
        }
    }
    (residuals.len() - 1, residuals)
}

fn chebyshev_t(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for _ in 2..=n {
                let c = 2.0 * x * b - a;
                a = b;
                b = c;
            }
            b
        }
    }
}

/// k-th point of the R_d quasirandom sequence in the unit d-cube
/// (golden-ratio lattice built on the plastic-constant generalization).
pub fn quasirandom_point(k: u64, d: usize) -> Vec<f64> {
    // phi_d is the positive root of x^(d+1) = x + 1
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d)
        .map(|i| {
            let alpha = phi.powi(-(i as i32));
            (0.5 + alpha * (k as f64 + 1.0)).fract()
        })
        .collect()
}

/// Determinant by LU with partial pivoting.
///
/// Written out so that bitwise-duplicate rows cancel to an exact 0.0: the
/// elimination multiplier between equal rows is exactly 1 and the subtraction
/// of equal entries is exact.
pub fn det_lu(mat: &DMatrix<f64>) -> f64 {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols());
    let mut a = mat.clone();
    let mut det = 1.0f64;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[(row, col)].abs() > a[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if a[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        det *= a[(col, col)];
        for row in col + 1..n {
            let m = a[(row, col)] / a[(col, col)];
            if m != 0.0 {
                for k in col..n {
                    a[(row, k)] -= m * a[(col, k)];
                }
            }
        }
    }
    det
}

/// Complex determinant via the same pivoted elimination.
pub fn det_lu_complex(mat: &DMatrix<Complex64>) -> Complex64 {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols());
    let mut a = mat.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[(row, col)].norm_sqr() > a[(pivot, col)].norm_sqr() {
                pivot = row;
            }
        }
        if a[(pivot, col)] == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        det *= a[(col, col)];
        for row in col + 1..n {
            let m = a[(row, col)] / a[(col, col)];
            for k in col..n {
                let sub = m * a[(col, k)];
                a[(row, k)] -= sub;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::default();
        c.add(1.0);
        c.add(1e-16);
        c.add(1e-16);
        c.add(-1.0);
        assert_relative_eq!(c.value(), 2e-16, max_relative = 1e-10);
    }

    #[test]
    fn simpson_integrates_a_sqrt_smoothly() {
        let v = integrate(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-10);
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-7);
    }

    #[test]
    fn z_values_match_tables() {
        assert_relative_eq!(z_for_confidence(0.95), 1.959964, epsilon = 1e-5);
        assert_relative_eq!(z_for_confidence(0.99), 2.575829, epsilon = 1e-5);
    }

    #[test]
    fn minimal_degree_finds_a_cubic() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 / 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 - x + 0.5 * x * x * x).collect();
        let (d, _) = fit_minimal_degree(&xs, &ys, 1e-10, 8);
        assert_eq!(d, 3);
    }

    #[test]
    fn duplicate_rows_give_exact_zero_determinant() {
        let m = DMatrix::from_row_slice(3, 3, &[0.1, 0.7, 0.3, 0.1, 0.7, 0.3, 0.2, 0.9, 0.5]);
        assert_eq!(det_lu(&m), 0.0);
    }

    #[test]
    fn determinant_matches_nalgebra_on_random_matrices() {
        let m = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3 + 1) as f64 * 0.37).sin());
        assert_relative_eq!(det_lu(&m), m.determinant(), max_relative = 1e-10);
    }

    #[test]
    fn quasirandom_points_fill_the_cube() {
        let p = quasirandom_point(10, 3);
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        assert_ne!(quasirandom_point(10, 3), quasirandom_point(11, 3));
    }
}
