//! Algebraic structure behind the level statistics: how many potentials
//! place prescribed energies into the spectrum, and the antisymmetric
//! operator whose determinant is the squared gap product.
//!
//! Fixing the potential away from n chosen sites makes each characteristic
//! polynomial value det(H(V) - E_j) a multilinear polynomial in the n free
//! site values (every V_x enters through a rank-one perturbation).  A system
//! of n such equations has at most n! isolated solutions; we find them by
//! damped Newton iteration from a deterministic low-discrepancy sweep of
//! starting points, with the Jacobian assembled analytically from a single
//! eigendecomposition per iterate.
//!
//! The gap-product side: on the antisymmetric subspace of the doubled
//! system, (H (x) 1 - 1 (x) H)^2 has eigenvalues (E_j - E_k)^2 for j < k,
//! so its determinant is the discriminant of the characteristic polynomial.
//! As a polynomial in any single site value that discriminant has degree
//! 2(|Lambda| - 1), which the degree probe measures numerically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::hamiltonian::{assemble_from_hopping, Hamiltonian};
use crate::numeric::{det_lu_complex, factorial, fit_minimal_degree, quasirandom_point};
use crate::spectral::{eigendecompose, simplicity_report, SpectralData};

/// Product form of the characteristic polynomial at energy `e`.
pub fn char_poly_eval(eigenvalues: &[f64], e: f64) -> f64 {
    eigenvalues.iter().map(|&l| l - e).product()
}

/// Place each target energy into the spectrum by adjusting the potential
/// on the free sites; everything else is frozen to the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityProblem {
    pub graph: GraphSpec,
    /// Sites whose potential values are the unknowns.
    pub free_sites: Vec<usize>,
    /// Diagonal values for every site; entries at free sites are
    /// placeholders that the unknowns overwrite.
    pub background: Vec<f64>,
    /// Energies to place, one per free site; must be distinct.
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub n_starts: usize,
    pub max_iter: usize,
    /// Newton stops when the sup-norm step falls below this, relative to
    /// the iterate scale.
    pub step_tol: f64,
    /// A converged iterate counts as a root when every target sits within
    /// this distance (relative to the spectral scale) of an eigenvalue.
    pub accept_tol: f64,
    /// Roots closer than this (relative sup distance) are the same root.
    pub dedup_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            n_starts: 160,
            max_iter: 60,
            step_tol: 1e-12,
            accept_tol: 1e-8,
            dedup_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Distinct potential assignments, each listing the free-site values in
    /// `free_sites` order; sorted lexicographically.
    pub solutions: Vec<Vec<f64>>,
    /// Worst target-to-spectrum distance per solution, same order.
    pub residuals: Vec<f64>,
    pub n_starts: usize,
    pub n_converged: usize,
    /// n!, the ceiling on the solution count.
    pub cap: u64,
}

impl MultiplicityProblem {
    pub fn n_unknowns(&self) -> usize {
        self.free_sites.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        let n_sites = self.graph.n_sites;
        if self.background.len() != n_sites {
            return Err(Error::DimensionMismatch {
                got: self.background.len(),
                expected: n_sites,
            });
        }
        let n = self.free_sites.len();
        if n == 0 || n > n_sites {
            return Err(Error::InvalidInput {
                context: "free sites",
                reason: format!("need between 1 and {n_sites} free sites, got {n}"),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &x in &self.free_sites {
            if x >= n_sites {
                return Err(Error::SiteOutOfRange { x, y: x, n_sites });
            }
            if !seen.insert(x) {
                return Err(Error::DuplicateSite { site: x });
            }
        }
        if self.targets.len() != n {
            return Err(Error::DimensionMismatch {
                got: self.targets.len(),
                expected: n,
            });
        }
        let scale = 1.0 + self.targets.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
        let tol = 1e-10 * scale;
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.targets[i] - self.targets[j]).abs() < tol {
                    return Err(Error::TargetsNotDistinct { i, j, tol });
                }
            }
        }
        self.check_frozen_spectrum()?;
        Ok(())
    }

    /// Eigenvalues of the operator restricted to the frozen sites.  A target
    /// on this spectrum makes the leading multilinear coefficient of its
    /// equation vanish: roots escape to infinity and the n! count breaks
    /// down, so such targets are rejected.
    fn frozen_spectrum(&self) -> Result<Vec<f64>> {
        let n_sites = self.graph.n_sites;
        let frozen: Vec<usize> = (0..n_sites)
            .filter(|x| !self.free_sites.contains(x))
            .collect();
        if frozen.is_empty() {
            return Ok(Vec::new());
        }
        let full = self.graph.build_hopping()?;
        let m = frozen.len();
        let mut block = DMatrix::<Complex64>::zeros(m, m);
        for (i, &x) in frozen.iter().enumerate() {
            for (j, &y) in frozen.iter().enumerate() {
                block[(i, j)] = full[(x, y)];
            }
            block[(i, i)] = Complex64::new(self.background[x], 0.0);
        }
        Ok(eigendecompose(&Hamiltonian { matrix: block })?.eigenvalues)
    }

    fn check_frozen_spectrum(&self) -> Result<()> {
        let frozen = self.frozen_spectrum()?;
        let scale = 1.0
            + self.targets.iter().fold(0.0f64, |a, &t| a.max(t.abs()))
            + frozen.iter().fold(0.0f64, |a, &m| a.max(m.abs()));
        let tol = 1e-8 * scale;
        for (index, &e) in self.targets.iter().enumerate() {
            for &mu in &frozen {
                if (e - mu).abs() < tol {
                    return Err(Error::TargetHitsFrozenSpectrum {
                        index,
                        value: e,
                        distance: (e - mu).abs(),
                    });
                }
            }
        }
        Ok(())
    }

    fn assemble(&self, hopping: &DMatrix<Complex64>, v: &[f64]) -> Result<Hamiltonian> {
        let mut diag = self.background.clone();
        for (k, &x) in self.free_sites.iter().enumerate() {
            diag[x] = v[k];
        }
        assemble_from_hopping(hopping, &diag)
    }

    /// Residual vector P_j(v) = det(H(v) - E_j), from the spectrum.
    fn residual(&self, spectral: &SpectralData) -> Vec<f64> {
        self.targets
            .iter()
            .map(|&e| char_poly_eval(&spectral.eigenvalues, e))
            .collect()
    }

    /// Analytic Jacobian d det(H - E_j) / d V_{x_k} =
    /// sum_m |psi_m(x_k)|^2 prod_{l != m} (lambda_l - E_j), assembled with
    /// prefix/suffix products from one eigendecomposition.
    fn analytic_jacobian(&self, spectral: &SpectralData) -> DMatrix<f64> {
        let n = self.n_unknowns();
        let m = spectral.eigenvalues.len();
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for (j, &e) in self.targets.iter().enumerate() {
            let diffs: Vec<f64> = spectral.eigenvalues.iter().map(|&l| l - e).collect();
            // prefix[i] = prod diffs[..i], suffix[i] = prod diffs[i+1..]
            let mut prefix = vec![1.0; m + 1];
            for i in 0..m {
                prefix[i + 1] = prefix[i] * diffs[i];
            }
            let mut suffix = vec![1.0; m + 1];
            for i in (0..m).rev() {
                suffix[i] = suffix[i + 1] * diffs[i];
            }
            for (k, &x) in self.free_sites.iter().enumerate() {
                let mut sum = 0.0;
                for l in 0..m {
                    sum += spectral.weight(l, x) * prefix[l] * suffix[l + 1];
                }
                jac[(j, k)] = sum;
            }
        }
        jac
    }

    fn fd_jacobian(&self, hopping: &DMatrix<Complex64>, v: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n_unknowns();
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let h = 1e-6 * (1.0 + v[k].abs());
            let mut vp = v.to_vec();
            vp[k] += h;
            let mut vm = v.to_vec();
            vm[k] -= h;
            let rp = self.residual(&eigendecompose(&self.assemble(hopping, &vp)?)?);
            let rm = self.residual(&eigendecompose(&self.assemble(hopping, &vm)?)?);
            for j in 0..n {
                jac[(j, k)] = (rp[j] - rm[j]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Worst distance from a target to the spectrum, relative to scale.
    fn spectrum_distance(&self, spectral: &SpectralData) -> f64 {
        self.targets
            .iter()
            .map(|&e| {
                spectral
                    .eigenvalues
                    .iter()
                    .map(|&l| (l - e).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Starting box: targets padded by the hopping row norm and the
    /// background scale, so every root's coordinates lie inside.
    fn start_box(&self, hopping: &DMatrix<Complex64>) -> (f64, f64) {
        let t_lo = self.targets.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let t_hi = self.targets.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let row_norm = (0..hopping.nrows())
            .map(|i| (0..hopping.ncols()).map(|j| hopping[(i, j)].norm()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let bg = self.background.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let pad = row_norm + bg + 1.0;
        (t_lo - pad, t_hi + pad)
    }

    /// All potential assignments placing the targets into the spectrum.
    pub fn solve(&self, options: &SolveOptions) -> Result<SolveReport> {
        self.validate()?;
        let hopping = self.graph.build_hopping()?;
        let n = self.n_unknowns();
        let cap = factorial(n);
        let (box_lo, box_hi) = self.start_box(&hopping);
        let scale = 1.0 + self.targets.iter().fold(0.0f64, |a, &t| a.max(t.abs()));

        let mut roots: Vec<Vec<f64>> = Vec::new();
        let mut residuals: Vec<f64> = Vec::new();
        let mut n_converged = 0usize;
        for start in 0..options.n_starts {
            let mut v: Vec<f64> = quasirandom_point(start as u64, n)
                .into_iter()
                .map(|u| box_lo + (box_hi - box_lo) * u)
                .collect();
            let mut spectral = eigendecompose(&self.assemble(&hopping, &v)?)?;
            let mut res = self.residual(&spectral);
            for _ in 0..options.max_iter {
                let near_degenerate = simplicity_report(&spectral, Some(1e-10 * (1.0 + spectral.diameter()))).degenerate;
                let jac = if near_degenerate {
                    self.fd_jacobian(&hopping, &v)?
                } else {
                    self.analytic_jacobian(&spectral)
                };
                let Some(step) = jac.lu().solve(&-DVector::from_column_slice(&res)) else {
                    break; // singular Jacobian: give up on this start
                };
                if !step.iter().all(|x| x.is_finite()) {
                    break;
                }
                // backtrack until the residual sup-norm decreases
                let res_norm = res.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                let mut lambda = 1.0;
                let mut accepted = None;
                for _ in 0..30 {
                    let trial: Vec<f64> = v
                        .iter()
                        .zip(step.iter())
                        .map(|(&vi, &si)| vi + lambda * si)
                        .collect();
                    let trial_spectral = eigendecompose(&self.assemble(&hopping, &trial)?)?;
                    let trial_res = self.residual(&trial_spectral);
                    let trial_norm = trial_res.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                    if trial_norm < res_norm || res_norm == 0.0 {
                        accepted = Some((trial, trial_spectral, trial_res));
                        break;
                    }
                    lambda *= 0.5;
                }
                let Some((new_v, new_spectral, new_res)) = accepted else {
                    break; // residual at its floor: the iterate is final
                };
                let step_size = new_v
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                let v_scale = 1.0 + v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                (v, spectral, res) = (new_v, new_spectral, new_res);
                if step_size <= options.step_tol * v_scale {
                    break;
                }
            }
            // acceptance is by spectral distance, not by how the iteration
            // ended: wandering starts fail this test, stagnated ones pass
            let dist = self.spectrum_distance(&spectral);
            if dist > options.accept_tol * (scale + spectral.diameter()) {
                continue;
            }
            n_converged += 1;
            let v_scale = 1.0 + v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let dup = roots.iter().position(|r| {
                r.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
                    <= options.dedup_tol * v_scale
            });
            match dup {
                Some(i) => {
                    if dist < residuals[i] {
                        roots[i] = v.clone();
                        residuals[i] = dist;
                    }
                }
                None => {
                    roots.push(v.clone());
                    residuals.push(dist);
                }
            }
            if roots.len() as u64 > cap {
                return Err(Error::CountExceedsFactorial {
                    found: roots.len(),
                    cap: cap as usize,
                });
            }
        }
        let mut order: Vec<usize> = (0..roots.len()).collect();
        order.sort_by(|&a, &b| {
            roots[a]
                .iter()
                .zip(&roots[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(SolveReport {
            solutions: order.iter().map(|&i| roots[i].clone()).collect(),
            residuals: order.iter().map(|&i| residuals[i]).collect(),
            n_starts: options.n_starts,
            n_converged,
            cap,
        })
    }

    /// Condition number of the analytic Jacobian at an assignment.
    pub fn jacobian_condition(&self, v: &[f64]) -> Result<f64> {
        self.validate()?;
        if v.len() != self.n_unknowns() {
            return Err(Error::DimensionMismatch {
                got: v.len(),
                expected: self.n_unknowns(),
            });
        }
        let hopping = self.graph.build_hopping()?;
        let spectral = eigendecompose(&self.assemble(&hopping, v)?)?;
        let jac = self.analytic_jacobian(&spectral);
        let svd = jac.svd(false, false);
        let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
        let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        Ok(if smin == 0.0 { f64::INFINITY } else { smax / smin })
    }

    /// At a root the Jacobian factors: row j collapses onto the weight
    /// profile of the eigenstate matched to target j, scaled by the gaps,
    /// so det J = det(weight minor) * prod_j prod_{l != m_j} (lambda_l - E_j).
    pub fn jacobian_factorization_check(&self, v: &[f64]) -> Result<FactorizationCheck> {
        self.validate()?;
        if v.len() != self.n_unknowns() {
            return Err(Error::DimensionMismatch {
                got: v.len(),
                expected: self.n_unknowns(),
            });
        }
        let hopping = self.graph.build_hopping()?;
        let spectral = eigendecompose(&self.assemble(&hopping, v)?)?;
        let jac = self.analytic_jacobian(&spectral);
        let jacobian_det = jac.determinant();
        // match each target to its nearest eigenvalue
        let mut matched = Vec::with_capacity(self.targets.len());
        for &e in &self.targets {
            let (m, _) = spectral
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (*a - e).abs().total_cmp(&(*b - e).abs()))
                .expect("spectrum is non-empty");
            if matched.contains(&m) {
                return Err(Error::InvalidInput {
                    context: "factorization check",
                    reason: "two targets matched the same eigenvalue; not a simple root".into(),
                });
            }
            matched.push(m);
        }
        let singletons: Vec<Vec<usize>> = self.free_sites.iter().map(|&x| vec![x]).collect();
        let minor = spectral.occupation_minor(&matched, &singletons)?;
        let mut gap_factor = 1.0;
        for (j, &e) in self.targets.iter().enumerate() {
            for (l, &lam) in spectral.eigenvalues.iter().enumerate() {
                if l != matched[j] {
                    gap_factor *= lam - e;
                }
            }
        }
        let factored = minor * gap_factor;
        let denom = jacobian_det.abs().max(factored.abs()).max(f64::MIN_POSITIVE);
        Ok(FactorizationCheck {
            jacobian_det,
            factored_form: factored,
            rel_error: (jacobian_det - factored).abs() / denom,
            matched_levels: matched,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationCheck {
    pub jacobian_det: f64,
    pub factored_form: f64,
    pub rel_error: f64,
    pub matched_levels: Vec<usize>,
}

/// On an edgeless graph the spectrum is the diagonal, so the solutions are
/// exactly the n! ways of assigning targets to free sites.
pub fn enumerate_diagonal_solutions(problem: &MultiplicityProblem) -> Result<Vec<Vec<f64>>> {
    problem.validate()?;
    if !problem.graph.edges.is_empty() {
        return Err(Error::InvalidInput {
            context: "diagonal enumeration",
            reason: "graph has hopping edges; only the edgeless case is closed-form".into(),
        });
    }
    let n = problem.n_unknowns();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(factorial(n) as usize);
    // Heap's algorithm
    let mut c = vec![0usize; n];
    out.push(perm.iter().map(|&p| problem.targets[p]).collect::<Vec<_>>());
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.iter().map(|&p| problem.targets[p]).collect());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

fn pair_index(x: usize, y: usize, n: usize) -> usize {
    // lexicographic rank of (x, y) with x < y among n sites
    debug_assert!(x < y && y < n);
    x * n - x * (x + 1) / 2 + (y - x - 1)
}

/// B* (H (x) 1 - 1 (x) H)^2 B on the antisymmetric pair basis
/// (e_x (x) e_y - e_y (x) e_x) / sqrt(2), x < y.  Hermitian, of dimension
/// n(n-1)/2, with eigenvalues (E_j - E_k)^2.
pub fn build_antisymmetric_operator(h: &Hamiltonian) -> DMatrix<Complex64> {
    let n = h.n_sites();
    let dim = n * (n - 1) / 2;
    let h2 = &h.matrix * &h.matrix;
    let hm = &h.matrix;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let term = |x: usize, y: usize, u: usize, v: usize| -> Complex64 {
        // <e_x (x) e_y, K^2 e_u (x) e_v> with K^2 = H^2(x)1 - 2 H(x)H + 1(x)H^2
        let mut t = Complex64::new(0.0, 0.0);
        if y == v {
            t += h2[(x, u)];
        }
        t -= 2.0 * hm[(x, u)] * hm[(y, v)];
        if x == u {
            t += h2[(y, v)];
        }
        t
    };
    for x in 0..n {
        for y in (x + 1)..n {
            let p = pair_index(x, y, n);
            for u in 0..n {
                for v in (u + 1)..n {
                    let q = pair_index(u, v, n);
                    m[(p, q)] = 0.5
                        * (term(x, y, u, v) - term(x, y, v, u) - term(y, x, u, v)
                            + term(y, x, v, u));
                }
            }
        }
    }
    m
}

/// det of the antisymmetric operator: the squared gap product
/// prod_{j<k} (E_j - E_k)^2, i.e. the discriminant of det(H - t).
pub fn gap_product_determinant(h: &Hamiltonian) -> f64 {
    let n = h.n_sites();
    if n < 2 {
        // empty product
        return 1.0;
    }
    det_lu_complex(&build_antisymmetric_operator(h)).re
}

/// Reference value from the spectrum.
pub fn gap_product_from_spectrum(eigenvalues: &[f64]) -> f64 {
    let mut prod = 1.0;
    for j in 0..eigenvalues.len() {
        for k in (j + 1)..eigenvalues.len() {
            let d = eigenvalues[j] - eigenvalues[k];
            prod *= d * d;
        }
    }
    prod
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProbe {
    /// Fitted polynomial degree of the gap-product determinant in one
    /// site's potential value.
    pub degree: usize,
    /// Sample values along the sweep, for inspection.
    pub values: Vec<f64>,
    pub nodes: Vec<f64>,
}

/// Sweeps one site's potential over Chebyshev nodes in [-spread, spread]
/// around its background value and fits the minimal polynomial degree of
/// the gap-product determinant.  The answer is 2(|Lambda| - 1) whenever the
/// sweep stays non-degenerate.
pub fn gap_product_degree_probe(
    graph: &GraphSpec,
    background: &[f64],
    site: usize,
    spread: f64,
) -> Result<DegreeProbe> {
    graph.validate()?;
    let n_sites = graph.n_sites;
    if background.len() != n_sites {
        return Err(Error::DimensionMismatch {
            got: background.len(),
            expected: n_sites,
        });
    }
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { x: site, y: site, n_sites });
    }
    if !(spread > 0.0) {
        return Err(Error::InvalidInput {
            context: "degree probe spread",
            reason: format!("sweep half-width must be positive, got {spread}"),
        });
    }
    let hopping = graph.build_hopping()?;
    let max_degree = 2 * n_sites; // one more than the expected 2(n-1)
    let n_nodes = (2 * max_degree + 5).max(16);
    let center = background[site];
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut values = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let theta = std::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * n_nodes as f64);
        let t = center + spread * theta.cos();
        let mut diag = background.to_vec();
        diag[site] = t;
        let h = assemble_from_hopping(&hopping, &diag)?;
        nodes.push(t);
        values.push(gap_product_determinant(&h));
    }
    let (degree, _) = fit_minimal_degree(&nodes, &values, 1e-7, max_degree);
    Ok(DegreeProbe { degree, values, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_potential, PotentialDistribution};
    use crate::hamiltonian::assemble_hamiltonian;
    use approx::assert_relative_eq;

    fn chain_problem(n_sites: usize, free: Vec<usize>, targets: Vec<f64>) -> MultiplicityProblem {
        MultiplicityProblem {
            graph: GraphSpec::chain(n_sites, Complex64::new(1.0, 0.0)).unwrap(),
            free_sites: free,
            background: vec![0.0; n_sites],
            targets,
        }
    }

    #[test]
    fn two_site_chain_has_the_golden_pair() {
        // (v1 - E1)(v2 - E1) = 1 and (v1 - E2)(v2 - E2) = 1 at targets 2, -1
        // force v1 + v2 = 1, v1 v2 = -1: the golden ratio pair, twice over
        let p = chain_problem(2, vec![0, 1], vec![2.0, -1.0]);
        let report = p.solve(&SolveOptions::default()).unwrap();
        assert_eq!(report.solutions.len(), 2);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(report.solutions[0][0], 1.0 - phi, epsilon = 1e-8);
        assert_relative_eq!(report.solutions[0][1], phi, epsilon = 1e-8);
        assert_relative_eq!(report.solutions[1][0], phi, epsilon = 1e-8);
        assert_relative_eq!(report.solutions[1][1], 1.0 - phi, epsilon = 1e-8);
        for &r in &report.residuals {
            assert!(r < 1e-9);
        }
    }

    #[test]
    fn solver_reproduces_the_diagonal_permutations() {
        let p = MultiplicityProblem {
            graph: GraphSpec::explicit(3, vec![]).unwrap(),
            free_sites: vec![0, 1, 2],
            background: vec![0.0; 3],
            targets: vec![1.0, 2.0, 3.0],
        };
        let exact = enumerate_diagonal_solutions(&p).unwrap();
        assert_eq!(exact.len(), 6);
        let report = p.solve(&SolveOptions { n_starts: 400, ..Default::default() }).unwrap();
        assert_eq!(report.solutions.len(), 6, "found {:?}", report.solutions);
        for (found, want) in report.solutions.iter().zip(&exact) {
            for (a, b) in found.iter().zip(want) {
                assert_relative_eq!(a, b, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn single_unknown_is_solved_exactly_once() {
        let p = chain_problem(4, vec![2], vec![2.5]);
        let report = p.solve(&SolveOptions::default()).unwrap();
        assert_eq!(report.solutions.len(), 1);
        assert_eq!(report.cap, 1);
        // cross-check: the target really is an eigenvalue
        let mut bg = p.background.clone();
        bg[2] = report.solutions[0][0];
        let h = assemble_from_hopping(&p.graph.build_hopping().unwrap(), &bg).unwrap();
        let spec = eigendecompose(&h).unwrap();
        let dist = spec.eigenvalues.iter().map(|&l| (l - 2.5).abs()).fold(f64::INFINITY, f64::min);
        assert!(dist < 1e-9, "distance {dist}");
    }

    #[test]
    fn count_respects_the_factorial_cap_on_a_coupled_graph() {
        // at targets +-2 the two-unknown system on the 4-chain reduces to
        // v1 + v2 = 0, v1 v2 = -5/4: the pair +-sqrt(5)/2, both orders
        let p = chain_problem(4, vec![1, 2], vec![2.0, -2.0]);
        let report = p.solve(&SolveOptions { n_starts: 300, ..Default::default() }).unwrap();
        assert_eq!(report.solutions.len(), 2, "{:?}", report.solutions);
        assert!(report.solutions.len() as u64 <= report.cap);
        let r = (1.25f64).sqrt();
        assert_relative_eq!(report.solutions[0][0], -r, epsilon = 1e-7);
        assert_relative_eq!(report.solutions[0][1], r, epsilon = 1e-7);
        for v in &report.solutions {
            let mut bg = p.background.clone();
            bg[1] = v[0];
            bg[2] = v[1];
            let h = assemble_from_hopping(&p.graph.build_hopping().unwrap(), &bg).unwrap();
            let spec = eigendecompose(&h).unwrap();
            for &e in &p.targets {
                let dist = spec.eigenvalues.iter().map(|&l| (l - e).abs()).fold(f64::INFINITY, f64::min);
                assert!(dist < 1e-8);
            }
        }
    }

    #[test]
    fn complex_roots_leave_the_real_count_at_zero() {
        // these targets force v1 + v2 real but v1 v2 past the parabola of
        // real factorizations, so every root is complex and the real count
        // is legitimately zero
        let p = chain_problem(4, vec![1, 2], vec![1.3, -0.7]);
        let report = p.solve(&SolveOptions { n_starts: 200, ..Default::default() }).unwrap();
        assert!(report.solutions.is_empty(), "{:?}", report.solutions);
    }

    #[test]
    fn validation_rejects_bad_problems() {
        let mut p = chain_problem(3, vec![0, 0], vec![1.0, 2.0]);
        assert!(matches!(p.validate(), Err(Error::DuplicateSite { .. })));
        p.free_sites = vec![0, 1];
        p.targets = vec![1.0, 1.0];
        assert!(matches!(p.validate(), Err(Error::TargetsNotDistinct { .. })));
        p.targets = vec![1.0];
        assert!(matches!(p.validate(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn frozen_spectrum_targets_are_rejected() {
        // freezing sites 1, 2 of a 3-chain leaves a 2x2 block with
        // eigenvalues +-sqrt(1.25); aiming there must fail
        let mut p = chain_problem(3, vec![0], vec![1.25f64.sqrt()]);
        p.background = vec![0.0, 0.5, -0.5];
        match p.validate() {
            Err(Error::TargetHitsFrozenSpectrum { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected frozen-spectrum rejection, got {other:?}"),
        }
        p.targets = vec![2.0];
        assert!(p.validate().is_ok());
    }

    #[test]
    fn jacobian_factorization_holds_at_roots() {
        let p = chain_problem(4, vec![0, 3], vec![1.7, -0.9]);
        let report = p.solve(&SolveOptions::default()).unwrap();
        assert!(!report.solutions.is_empty());
        for v in &report.solutions {
            let check = p.jacobian_factorization_check(v).unwrap();
            assert!(
                check.rel_error < 1e-6,
                "det {} vs factored {} (rel {})",
                check.jacobian_det,
                check.factored_form,
                check.rel_error
            );
        }
    }

    #[test]
    fn condition_number_grows_as_targets_merge() {
        // the coupled 2-site system only has real roots for gaps >= 2 and
        // its Jacobian degenerates at that threshold
        let p_far = chain_problem(2, vec![0, 1], vec![2.0, -2.0]);
        let p_near = chain_problem(2, vec![0, 1], vec![1.01, -1.01]);
        let v_far = p_far.solve(&SolveOptions::default()).unwrap().solutions[0].clone();
        let v_near = p_near.solve(&SolveOptions::default()).unwrap().solutions[0].clone();
        let c_far = p_far.jacobian_condition(&v_far).unwrap();
        let c_near = p_near.jacobian_condition(&v_near).unwrap();
        assert!(c_near > 5.0 * c_far, "near {c_near} vs far {c_far}");
    }

    #[test]
    fn antisymmetric_operator_carries_the_squared_gaps() {
        let graph = GraphSpec::chain(4, Complex64::new(1.0, 0.0)).unwrap();
        let dist = PotentialDistribution::uniform(-1.0, 1.0).unwrap();
        for sample in 0..20u64 {
            let pot = sample_potential(&dist, 77, sample, 4);
            let h = assemble_hamiltonian(&graph, &pot).unwrap();
            let spec = eigendecompose(&h).unwrap();
            let m = build_antisymmetric_operator(&h);
            // hermitian, and its spectrum is the pairwise squared gaps
            let defect = (&m - m.adjoint()).norm();
            assert!(defect < 1e-12);
            let mspec = eigendecompose(&Hamiltonian { matrix: m }).unwrap();
            let mut want: Vec<f64> = Vec::new();
            for j in 0..4 {
                for k in (j + 1)..4 {
                    let d = spec.eigenvalues[j] - spec.eigenvalues[k];
                    want.push(d * d);
                }
            }
            want.sort_by(f64::total_cmp);
            for (got, expect) in mspec.eigenvalues.iter().zip(&want) {
                assert_relative_eq!(got, expect, epsilon = 1e-10, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn determinant_matches_the_spectral_gap_product() {
        let graph = GraphSpec::torus(2, 3, Complex64::new(1.0, 0.0)).unwrap();
        let dist = PotentialDistribution::uniform(-2.0, 2.0).unwrap();
        for sample in 0..10u64 {
            let pot = sample_potential(&dist, 5, sample, 6);
            let h = assemble_hamiltonian(&graph, &pot).unwrap();
            let spec = eigendecompose(&h).unwrap();
            let det = gap_product_determinant(&h);
            let want = gap_product_from_spectrum(&spec.eigenvalues);
            assert_relative_eq!(det, want, max_relative = 1e-7);
        }
    }

    #[test]
    fn repeated_diagonal_makes_the_determinant_vanish() {
        // two equal decoupled levels: a zero gap annihilates the product
        let h = assemble_from_hopping(
            &DMatrix::<Complex64>::zeros(3, 3),
            &[0.7, 0.7, -0.2],
        )
        .unwrap();
        let det = gap_product_determinant(&h);
        assert!(det.abs() < 1e-14, "det = {det}");
    }

    #[test]
    fn degree_probe_measures_twice_sites_minus_one() {
        // diagonal 3-site case is (t - mu1)^2 (t - mu2)^2 (mu1 - mu2)^2:
        // degree 4 in t, and 2(n-1) = 4
        let graph = GraphSpec::explicit(3, vec![]).unwrap();
        let probe = gap_product_degree_probe(&graph, &[0.0, 0.3, -0.7], 0, 1.5).unwrap();
        assert_eq!(probe.degree, 4);
        // coupled 4-site chain: 2(n-1) = 6
        let chain = GraphSpec::chain(4, Complex64::new(1.0, 0.0)).unwrap();
        let probe = gap_product_degree_probe(&chain, &[0.1, -0.4, 0.8, 0.2], 1, 1.5).unwrap();
        assert_eq!(probe.degree, 6);
    }
}
