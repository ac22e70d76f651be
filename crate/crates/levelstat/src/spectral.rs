//! Eigendecomposition and the spectral quantities built on it: occupation
//! counts, spectral-projector matrix elements, occupation determinants,
//! eigenfunction-profile determinant sums, and a first-order perturbation
//! check (the derivative of an eigenvalue in one potential entry is the
//! eigenfunction weight at that site).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::intervals::Interval;
use crate::numeric::{det_lu, refined_eigenvalue};

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (column j belongs to eigenvalue j).
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

pub fn eigendecompose(h: &Hamiltonian) -> Result<SpectralData> {
    let n = h.matrix.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(h.matrix.clone(), f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailed { n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralData {
    pub fn n_sites(&self) -> usize {
        self.eigenvalues.len()
    }

    /// |psi_j(x)|^2, the eigenfunction weight at a site.
    #[inline]
    pub fn weight(&self, j: usize, site: usize) -> f64 {
        self.eigenvectors[(site, j)].norm_sqr()
    }

    /// Number of eigenvalues in the half-open interval.
    pub fn count_in_interval(&self, interval: Interval) -> usize {
        self.eigenvalues.iter().filter(|&&e| interval.contains(e)).count()
    }

    /// Indices of the eigenvalues lying in the interval.
    pub fn indices_in_interval(&self, interval: Interval) -> Vec<usize> {
        (0..self.eigenvalues.len())
            .filter(|&j| interval.contains(self.eigenvalues[j]))
            .collect()
    }

    /// Diagonal matrix element of the spectral projector:
    /// <delta_x, P_I delta_x> = sum over E_j in I of |psi_j(x)|^2.
    pub fn projector_entry(&self, interval: Interval, site: usize) -> f64 {
        (0..self.eigenvalues.len())
            .filter(|&j| interval.contains(self.eigenvalues[j]))
            .map(|j| self.weight(j, site))
            .sum()
    }

    /// |det( <delta_{x_k}, P_{I_j} delta_{x_k}> )_{j,k}|.  Intervals index
    /// rows, sites index columns; sites must be distinct.
    pub fn occupation_determinant(&self, intervals: &[Interval], sites: &[usize]) -> Result<f64> {
        let n = intervals.len();
        if sites.len() != n {
            return Err(Error::IntervalCountMismatch {
                got: sites.len(),
                expected: n,
            });
        }
        check_sites(sites, self.n_sites())?;
        let m = DMatrix::from_fn(n, n, |j, k| self.projector_entry(intervals[j], sites[k]));
        Ok(det_lu(&m).abs())
    }

    /// det( <psi_{j_m}, 1_{B_k} psi_{j_m}> )_{m,k}: occupation weights of the
    /// chosen eigenfunctions on the site sets.
    pub fn occupation_minor(&self, eigen_indices: &[usize], sets: &[Vec<usize>]) -> Result<f64> {
        let n = eigen_indices.len();
        if sets.len() != n {
            return Err(Error::IntervalCountMismatch { got: sets.len(), expected: n });
        }
        for set in sets {
            check_sites(set, self.n_sites())?;
        }
        let m = DMatrix::from_fn(n, n, |row, k| {
            sets[k]
                .iter()
                .map(|&x| self.weight(eigen_indices[row], x))
                .sum::<f64>()
        });
        Ok(det_lu(&m))
    }

    /// Sum over site tuples (x_1, ..., x_n) in B_1 x ... x B_n of
    /// |det( |psi_{j_m}(x_k)|^2 )_{m,k}|.
    ///
    /// This dominates |occupation_minor| (expand the minor by multilinearity
    /// and apply the triangle inequality), and for B_k covering the whole
    /// graph it is at most n! (each |det| is bounded by the permanent of a
    /// doubly substochastic matrix).  Cost is prod |B_k| small determinants.
    pub fn profile_determinant_sum(&self, eigen_indices: &[usize], sets: &[Vec<usize>]) -> Result<f64> {
        let n = eigen_indices.len();
        if sets.len() != n {
            return Err(Error::IntervalCountMismatch { got: sets.len(), expected: n });
        }
        for set in sets {
            check_sites(set, self.n_sites())?;
        }
        if eigen_indices.iter().any(|&j| j >= self.n_sites()) {
            return Err(Error::InvalidInput {
                context: "profile_determinant_sum",
                reason: "eigenvalue index out of range".into(),
            });
        }
        let mut m = DMatrix::zeros(n, n);
        let mut total = 0.0;
        let mut choice = vec![0usize; n];
        loop {
            for k in 0..n {
                let x = sets[k][choice[k]];
                for (row, &j) in eigen_indices.iter().enumerate() {
                    m[(row, k)] = self.weight(j, x);
                }
            }
            total += det_lu(&m).abs();
            // odometer over the site tuples, last index fastest
            let mut k = n;
            loop {
                if k == 0 {
                    return Ok(total);
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < sets[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    /// Spectral diameter (0 for a single level).
    pub fn diameter(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

fn check_sites(sites: &[usize], n_sites: usize) -> Result<()> {
    for (i, &x) in sites.iter().enumerate() {
        if x >= n_sites {
            return Err(Error::SiteOutOfRange { x, y: x, n_sites });
        }
        if sites[i + 1..].contains(&x) {
            return Err(Error::DuplicateSite { site: x });
        }
    }
    Ok(())
}

/// Minimal consecutive gap and a degeneracy verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplicityReport {
    /// Smallest gap between consecutive eigenvalues; infinite for one level.
    pub min_gap: f64,
    pub gap_tolerance: f64,
    pub degenerate: bool,
}

/// Default tolerance scales with the spectrum: 1e-12 * (1 + diameter).
pub fn simplicity_report(spectral: &SpectralData, gap_tolerance: Option<f64>) -> SimplicityReport {
    let tol = gap_tolerance.unwrap_or_else(|| 1e-12 * (1.0 + spectral.diameter()));
    let min_gap = spectral
        .eigenvalues
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    SimplicityReport {
        min_gap,
        gap_tolerance: tol,
        degenerate: min_gap < tol,
    }
}

/// Analytic vs numeric derivative of one eigenvalue in one potential entry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub analytic: f64,
    pub numeric: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// First-order perturbation check: dE_j/dV_x = |psi_j(x)|^2.
///
/// The numeric side is a central difference of the j-th eigenvalue with the
/// potential at `site` displaced by ±h.  Each displaced eigenvalue is passed
/// through one compensated Rayleigh-quotient step, and the difference is
/// divided by the exactly-representable effective step; without both, solver
/// noise divided by 2h would swamp small weights.  Requires E_j isolated:
/// gap > 10 h ||H||.
pub fn feynman_hellmann_check(
    h_op: &Hamiltonian,
    j: usize,
    site: usize,
    h: f64,
) -> Result<DerivativeCheck> {
    let n = h_op.n_sites();
    if j >= n || site >= n {
        return Err(Error::InvalidInput {
            context: "feynman_hellmann_check",
            reason: format!("index j = {j} or site = {site} out of range for {n} sites"),
        });
    }
    let center = eigendecompose(h_op)?;
    let norm = h_op.matrix.norm();
    let gap = (0..n)
        .filter(|&m| m != j)
        .map(|m| (center.eigenvalues[m] - center.eigenvalues[j]).abs())
        .fold(f64::INFINITY, f64::min);
    let min_gap = 10.0 * h * norm;
    if gap <= min_gap {
        return Err(Error::DegenerateLevel { index: j, gap, min_gap });
    }
    let analytic = center.weight(j, site);

    let v = h_op.matrix[(site, site)].re;
    let v_plus = v + h;
    let v_minus = v - h;
    // the step actually applied, exact in floating point
    let effective = (v_plus - v) + (v - v_minus);
    let displaced = |v_new: f64| -> Result<f64> {
        let mut m = h_op.matrix.clone();
        m[(site, site)] = Complex64::new(v_new, 0.0);
        let h_disp = Hamiltonian { matrix: m };
        let spec = eigendecompose(&h_disp)?;
        let vec: Vec<Complex64> = spec.eigenvectors.column(j).iter().copied().collect();
        Ok(refined_eigenvalue(&h_disp.matrix, &vec))
    };
    let e_plus = displaced(v_plus)?;
    let e_minus = displaced(v_minus)?;
    let numeric = (e_plus - e_minus) / effective;
    let abs_error = (analytic - numeric).abs();
    Ok(DerivativeCheck {
        analytic,
        numeric,
        abs_error,
        rel_error: abs_error / analytic.abs().max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::PotentialVector;
    use crate::graph::GraphSpec;
    use crate::hamiltonian::assemble_hamiltonian;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn chain_h(n: usize, values: &[f64]) -> Hamiltonian {
        let g = GraphSpec::chain(n, Complex64::new(1.0, 0.0)).unwrap();
        assemble_hamiltonian(
            &g,
            &PotentialVector { values: values.to_vec(), sample_index: 0 },
        )
        .unwrap()
    }

    #[test]
    fn three_chain_spectrum_is_plus_minus_sqrt_two() {
        // eigenvalues of the open 3-chain are 2 cos(k pi / 4), k = 1, 2, 3
        let spec = eigendecompose(&chain_h(3, &[0.0; 3])).unwrap();
        let expected = [-std::f64::consts::SQRT_2, 0.0, std::f64::consts::SQRT_2];
        for (got, want) in spec.eigenvalues.iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_potential_shifts_the_spectrum() {
        let base = eigendecompose(&chain_h(3, &[0.0; 3])).unwrap();
        let shifted = eigendecompose(&chain_h(3, &[5.0; 3])).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(&shifted.eigenvalues) {
            assert_relative_eq!(a + 5.0, *b, epsilon = 1e-13);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_reside() {
        let h = chain_h(6, &[0.3, -0.7, 1.1, 0.0, 0.5, -0.2]);
        let spec = eigendecompose(&h).unwrap();
        let n = 6;
        for a in 0..n {
            for b in 0..n {
                let dot: Complex64 = (0..n)
                    .map(|x| spec.eigenvectors[(x, a)].conj() * spec.eigenvectors[(x, b)])
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot.norm() - want).abs() < 1e-12, "gram({a},{b}) = {dot}");
            }
            // residual ||H psi - E psi||
            let col = spec.eigenvectors.column(a);
            let res = (&h.matrix * col) - col * Complex64::new(spec.eigenvalues[a], 0.0);
            assert!(res.norm() < 1e-12 * (1.0 + h.matrix.norm()));
        }
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn projector_entries_sum_to_one_over_a_partition() {
        let spec = eigendecompose(&chain_h(5, &[0.9, 0.1, 0.4, 0.7, 0.2])).unwrap();
        let cuts = [-3.0, -1.0, 0.0, 0.5, 1.3, 4.0];
        for site in 0..5 {
            let total: f64 = cuts
                .windows(2)
                .map(|w| spec.projector_entry(Interval::new(w[0], w[1]).unwrap(), site))
                .sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
        }
        let counts: usize = cuts
            .windows(2)
            .map(|w| spec.count_in_interval(Interval::new(w[0], w[1]).unwrap()))
            .sum();
        assert_eq!(counts, 5);
    }

    #[test]
    fn identical_intervals_give_an_exactly_zero_determinant() {
        let spec = eigendecompose(&chain_h(4, &[0.2, 0.8, 0.5, 0.1])).unwrap();
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let det = spec.occupation_determinant(&[iv, iv], &[0, 3]).unwrap();
        assert_eq!(det, 0.0);
    }

    #[test]
    fn profile_sum_dominates_occupation_minor() {
        let spec = eigendecompose(&chain_h(6, &[0.3, 0.9, 0.15, 0.77, 0.41, 0.6])).unwrap();
        let sets = vec![vec![0, 1, 2], vec![3, 4, 5]];
        let idx = [1, 4];
        let minor = spec.occupation_minor(&idx, &sets).unwrap();
        let sum = spec.profile_determinant_sum(&idx, &sets).unwrap();
        assert!(sum + 1e-12 >= minor.abs(), "sum {sum} < |minor| {}", minor.abs());
    }

    #[test]
    fn full_cover_profile_sum_is_below_n_factorial() {
        let spec = eigendecompose(&chain_h(4, &[0.5, 0.2, 0.9, 0.35])).unwrap();
        let all: Vec<usize> = (0..4).collect();
        let sum = spec
            .profile_determinant_sum(&[0, 2], &[all.clone(), all])
            .unwrap();
        assert!(sum <= 2.0 + 1e-12, "sum = {sum}");
    }

    #[test]
    fn duplicate_sites_are_rejected() {
        let spec = eigendecompose(&chain_h(3, &[0.0; 3])).unwrap();
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(matches!(
            spec.occupation_determinant(&[iv, iv], &[1, 1]),
            Err(Error::DuplicateSite { site: 1 })
        ));
    }

    #[test]
    fn single_level_simplicity_report() {
        let spec = eigendecompose(&chain_h(1, &[0.4])).unwrap();
        let rep = simplicity_report(&spec, None);
        assert!(rep.min_gap.is_infinite());
        assert!(!rep.degenerate);
    }

    #[test]
    fn two_by_two_top_state_weight_is_half() {
        // H = [[0, 1], [1, 0]]: the top eigenvector is (1, 1)/sqrt(2), so the
        // derivative of the top eigenvalue in V_0 is 1/2
        let g = GraphSpec::chain(2, Complex64::new(1.0, 0.0)).unwrap();
        let h = assemble_hamiltonian(
            &g,
            &PotentialVector { values: vec![0.0, 0.0], sample_index: 0 },
        )
        .unwrap();
        let check = feynman_hellmann_check(&h, 1, 0, 1e-5).unwrap();
        assert_relative_eq!(check.analytic, 0.5, epsilon = 1e-12);
        assert!(check.rel_error < 1e-8, "rel error {}", check.rel_error);
    }

    #[test]
    fn degenerate_levels_refuse_the_derivative_check() {
        // two decoupled sites with equal potential: doubly degenerate
        let g = GraphSpec::explicit(2, vec![]).unwrap();
        let h = assemble_hamiltonian(
            &g,
            &PotentialVector { values: vec![1.0, 1.0], sample_index: 0 },
        )
        .unwrap();
        assert!(matches!(
            feynman_hellmann_check(&h, 0, 0, 1e-5),
            Err(Error::DegenerateLevel { .. })
        ));
    }
}
