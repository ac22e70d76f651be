//! The exactly solvable 2x2 family
//!
//!     H(w) = [[a + w1, c], [conj(c), b + w2]]
//!
//! with i.i.d. diagonal disorder.  Everything about its two eigenvalues is
//! closed-form: the spectrum, the potential-to-energy Jacobian, the inverse
//! map (two branches), and the joint eigenvalue density.  The density lives
//! on gaps |E1 - E2| > 2|c| and blows up like (|E1 - E2| - 2|c|)^(-1/2) at
//! the edge, which is why level pairs cluster just above the minimal gap and
//! why a product-of-lengths bound on P{E1 in I1, E2 in I2} cannot hold with
//! both intervals shrinking: the mass of a w-by-w box straddling the edge
//! scales like w^(3/2), not w^2.
//!
//! Rectangle masses are computed by 1-D adaptive quadrature in the gap
//! variable after substituting u = sqrt(gap - 2|c|), which removes the edge
//! singularity; the inner integral over the center-of-mass variable is a
//! correlation of two piecewise-linear densities and is integrated exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dist::PotentialDistribution;
use crate::error::{Error, Result};
use crate::numeric::{integrate_piecewise, ls_slope};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoByTwoModel {
    pub a: f64,
    pub b: f64,
    pub c: Complex64,
}

impl TwoByTwoModel {
    pub fn new(a: f64, b: f64, c: Complex64) -> Self {
        Self { a, b, c }
    }

    /// Smallest attainable gap, 2|c|.
    pub fn gap_floor(&self) -> f64 {
        2.0 * self.c.norm()
    }

    /// Ordered eigenvalues (E1 >= E2) for one disorder realization.
    pub fn eigenvalues(&self, w1: f64, w2: f64) -> (f64, f64) {
        let s = w1 + w2 + self.a + self.b;
        let d = w1 - w2 + self.a - self.b;
        let r = (d * d + 4.0 * self.c.norm_sqr()).sqrt();
        (0.5 * (s + r), 0.5 * (s - r))
    }

    /// The matrix itself, for cross-checks against the dense eigensolver.
    pub fn hamiltonian(&self, w1: f64, w2: f64) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(self.a + w1, 0.0),
                self.c,
                self.c.conj(),
                Complex64::new(self.b + w2, 0.0),
            ],
        )
    }

    /// |det dE/dw| = sqrt(g^2 - 4|c|^2) / g at gap g = E1 - E2.
    /// Zero exactly at the gap floor; an error below it.
    pub fn jacobian(&self, e1: f64, e2: f64) -> Result<f64> {
        let g = e1 - e2;
        let floor = self.gap_floor();
        if g < floor {
            return Err(Error::BelowMinimalGap { gap: g, min: floor });
        }
        Ok((g * g - floor * floor).max(0.0).sqrt() / g)
    }

    /// Disorder values mapping to the ordered pair (e1, e2): two branches
    /// for gaps above the floor, one at the floor, an error below.
    pub fn invert_to_potentials(&self, e1: f64, e2: f64) -> Result<Vec<(f64, f64)>> {
        let g = e1 - e2;
        let floor = self.gap_floor();
        if g < floor {
            return Err(Error::BelowMinimalGap { gap: g, min: floor });
        }
        let y = (g * g - floor * floor).max(0.0).sqrt();
        let mut branches = vec![(
            0.5 * (e1 + e2 - 2.0 * self.a + y),
            0.5 * (e1 + e2 - 2.0 * self.b - y),
        )];
        if y > 0.0 {
            branches.push((
                0.5 * (e1 + e2 - 2.0 * self.a - y),
                0.5 * (e1 + e2 - 2.0 * self.b + y),
            ));
        }
        Ok(branches)
    }

    /// Joint density of the ordered pair: branch densities summed, divided
    /// by the Jacobian.  Supported strictly above the gap floor.
    pub fn joint_density(&self, dist: &PotentialDistribution, e1: f64, e2: f64) -> f64 {
        let g = e1 - e2;
        let floor = self.gap_floor();
        if g <= floor {
            return 0.0;
        }
        let y = (g * g - floor * floor).sqrt();
        let mut branch_sum = 0.0;
        for sigma in [1.0, -1.0] {
            let w1 = 0.5 * (e1 + e2 - 2.0 * self.a + sigma * y);
            let w2 = 0.5 * (e1 + e2 - 2.0 * self.b - sigma * y);
            branch_sum += dist.density(w1) * dist.density(w2);
        }
        g / y * branch_sum
    }

    /// Attainable range of E1 (eigenvalues are increasing in both w's).
    pub fn e1_range(&self, dist: &PotentialDistribution) -> (f64, f64) {
        let (lo, hi) = dist.support();
        (self.eigenvalues(lo, lo).0, self.eigenvalues(hi, hi).0)
    }

    /// Attainable range of E2.
    pub fn e2_range(&self, dist: &PotentialDistribution) -> (f64, f64) {
        let (lo, hi) = dist.support();
        (self.eigenvalues(lo, lo).1, self.eigenvalues(hi, hi).1)
    }

    /// P{E1 in [e1_lo, e1_hi), E2 in [e2_lo, e2_hi)} by quadrature.
    pub fn rectangle_mass(
        &self,
        dist: &PotentialDistribution,
        e1_lo: f64,
        e1_hi: f64,
        e2_lo: f64,
        e2_hi: f64,
        tol: f64,
    ) -> f64 {
        let g_lo = (e1_lo - e2_hi).max(self.gap_floor());
        let g_hi = e1_hi - e2_lo;
        self.mass_in_gap_window(dist, g_lo, g_hi, Some([e1_lo, e1_hi, e2_lo, e2_hi]), tol)
    }

    /// P{gap in [g_lo, g_hi)} with unrestricted level positions.
    pub fn gap_window_mass(&self, dist: &PotentialDistribution, g_lo: f64, g_hi: f64, tol: f64) -> f64 {
        self.mass_in_gap_window(dist, g_lo.max(self.gap_floor()), g_hi, None, tol)
    }

    /// Total mass; deviates from 1 only by quadrature error.
    pub fn normalization(&self, dist: &PotentialDistribution, tol: f64) -> f64 {
        let (_, e1_hi) = self.e1_range(dist);
        let (e2_lo, _) = self.e2_range(dist);
        self.mass_in_gap_window(dist, self.gap_floor(), e1_hi - e2_lo + 1.0, None, tol)
    }

    /// Shared quadrature core.  Integrates the density over
    /// {gap in [g_lo, g_hi)} intersected with an optional rectangle, in the
    /// variables s = E1 + E2 (inner, exact) and u = sqrt(gap - 2|c|) (outer,
    /// adaptive; the substitution absorbs the edge singularity).
    fn mass_in_gap_window(
        &self,
        dist: &PotentialDistribution,
        g_lo: f64,
        g_hi: f64,
        rect: Option<[f64; 4]>,
        tol: f64,
    ) -> f64 {
        let floor = self.gap_floor();
        let g_lo = g_lo.max(floor);
        if !(g_hi > g_lo) {
            return 0.0;
        }
        let (w_lo, w_hi) = dist.support();
        // |s| is bounded by the support; gaps are bounded by the support
        // diameter plus the hybridization
        let s_min = 2.0 * w_lo + self.a + self.b;
        let s_max = 2.0 * w_hi + self.a + self.b;
        let d_max = (w_hi - w_lo) + (self.a - self.b).abs();
        let g_max_attainable = (d_max * d_max + floor * floor).sqrt();
        let g_hi = g_hi.min(g_max_attainable);
        if !(g_hi > g_lo) {
            return 0.0;
        }

        let breakpoints = dist.breakpoints();
        let inner = |g: f64| -> f64 {
            let y = (g * g - floor * floor).max(0.0).sqrt();
            // s-window from the rectangle constraint, if any
            let (mut s_lo, mut s_hi) = (s_min, s_max);
            if let Some([e1l, e1h, e2l, e2h]) = rect {
                s_lo = s_lo.max(2.0 * e1l - g).max(2.0 * e2l + g);
                s_hi = s_hi.min(2.0 * e1h - g).min(2.0 * e2h + g);
            }
            if s_hi <= s_lo {
                return 0.0;
            }
            let mut total = 0.0;
            for sigma in [1.0, -1.0] {
                // w1 = (s - 2a + sigma y)/2, w2 = (s - 2b - sigma y)/2;
                // both linear in s, so the density product is piecewise
                // quadratic and Simpson per piece is exact
                let f = |s: f64| {
                    dist.density(0.5 * (s - 2.0 * self.a + sigma * y))
                        * dist.density(0.5 * (s - 2.0 * self.b - sigma * y))
                };
                let mut cuts: Vec<f64> = Vec::with_capacity(2 * breakpoints.len());
                for &beta in &breakpoints {
                    cuts.push(2.0 * beta + 2.0 * self.a - sigma * y);
                    cuts.push(2.0 * beta + 2.0 * self.b + sigma * y);
                }
                cuts.retain(|&x| x > s_lo && x < s_hi);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                // two-point Gauss per piece: exact for the quadratic and,
                // unlike rules with endpoint nodes, indifferent to which
                // side of a density jump the cut evaluates on
                let half_gauss = 0.5 / 3.0f64.sqrt();
                let mut lo = s_lo;
                for &cut in cuts.iter().chain(std::iter::once(&s_hi)) {
                    let mid = 0.5 * (lo + cut);
                    let off = (cut - lo) * half_gauss;
                    total += 0.5 * (cut - lo) * (f(mid - off) + f(mid + off));
                    lo = cut;
                }
                if y == 0.0 {
                    // the two branches coincide at the gap floor
                    total *= 2.0;
                    break;
                }
            }
            0.5 * total
        };

        // outer integral in u = sqrt(g - 2|c|)
        let u_lo = (g_lo - floor).max(0.0).sqrt();
        let u_hi = (g_hi - floor).max(0.0).sqrt();
        let integrand = |u: f64| {
            let g = floor + u * u;
            if g + floor == 0.0 {
                // c = 0 endpoint: the factor is 2g/sqrt(g) -> 0
                return 0.0;
            }
            2.0 * g / (g + floor).sqrt() * inner(g)
        };
        // kinks sit where the gap window crosses rectangle corners
        let mut u_cuts = Vec::new();
        if let Some([e1l, e1h, e2l, e2h]) = rect {
            for g in [e1l - e2l, e1h - e2h, e1l - e2h, e1h - e2l] {
                if g > floor {
                    u_cuts.push((g - floor).sqrt());
                }
            }
        }
        integrate_piecewise(&integrand, u_lo, u_hi, &u_cuts, tol)
    }

    /// Mass of the gap windows [2|c|, 2|c| + eps) and the log-log slope of
    /// mass against eps; the edge singularity makes the slope 1/2.
    pub fn scaling_probe(&self, dist: &PotentialDistribution, epsilons: &[f64], tol: f64) -> ScalingProbe {
        let floor = self.gap_floor();
        let rows: Vec<ScalingRow> = epsilons
            .iter()
            .map(|&eps| ScalingRow {
                epsilon: eps,
                mass: self.gap_window_mass(dist, floor, floor + eps, tol),
            })
            .collect();
        let ln_eps: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
        let ln_mass: Vec<f64> = rows.iter().map(|r| r.mass.ln()).collect();
        ScalingProbe {
            fitted_exponent: ls_slope(&ln_eps, &ln_mass),
            rows,
        }
    }

    /// Probability of a length-w interval pair straddling the gap edge:
    /// I1 = [t, t+w), I2 = [t - 2|c| - w, t - 2|c|).  Reports the ratio to
    /// the conjectured product-of-lengths bound scale w^2 (which diverges)
    /// and to the modified scale max(w, sqrt(w))^2.
    pub fn straddling_probe(
        &self,
        dist: &PotentialDistribution,
        t: f64,
        ws: &[f64],
        tol: f64,
    ) -> Vec<StraddlingRow> {
        let floor = self.gap_floor();
        ws.iter()
            .map(|&w| {
                let p = self.rectangle_mass(dist, t, t + w, t - floor - w, t - floor, tol);
                let modified = w.max(w.sqrt());
                StraddlingRow {
                    w,
                    probability: p,
                    conjectured_ratio: p / (w * w),
                    modified_ratio: p / (modified * modified),
                }
            })
            .collect()
    }

    /// Default histogram window: both energy axes share the attainable
    /// range of E1 and E2 together, padded by 25% of its length on each side.
    pub fn default_window(&self, dist: &PotentialDistribution) -> GridWindow {
        let (a1, b1) = self.e1_range(dist);
        let (a2, b2) = self.e2_range(dist);
        let lo = a1.min(a2);
        let hi = b1.max(b2);
        let pad = 0.25 * (hi - lo);
        GridWindow {
            e1_lo: lo - pad,
            e1_hi: hi + pad,
            e2_lo: lo - pad,
            e2_hi: hi + pad,
        }
    }

    /// Histogram of sampled ordered pairs next to quadrature bin masses.
    pub fn density_grid(
        &self,
        dist: &PotentialDistribution,
        window: GridWindow,
        bins: (usize, usize),
        n_samples: u64,
        seed: u64,
    ) -> Result<DensityGrid> {
        let (n1, n2) = bins;
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidInput {
                context: "density_grid",
                reason: "need at least one bin per axis".into(),
            });
        }
        if n_samples == 0 {
            return Err(Error::ZeroSamples);
        }
        if !(window.e1_lo < window.e1_hi) || !(window.e2_lo < window.e2_hi) {
            return Err(Error::InvalidInput {
                context: "density_grid",
                reason: "window must have positive extent on both axes".into(),
            });
        }
        let e1_edges: Vec<f64> = (0..=n1)
            .map(|i| window.e1_lo + (window.e1_hi - window.e1_lo) * i as f64 / n1 as f64)
            .collect();
        let e2_edges: Vec<f64> = (0..=n2)
            .map(|i| window.e2_lo + (window.e2_hi - window.e2_lo) * i as f64 / n2 as f64)
            .collect();

        let d1 = (window.e1_hi - window.e1_lo) / n1 as f64;
        let d2 = (window.e2_hi - window.e2_lo) / n2 as f64;
        let mut counts = vec![0u64; n1 * n2];
        let mut outside_count = 0u64;
        let mut gap_violations = 0u64;
        let gap_floor = self.gap_floor();
        for idx in 0..n_samples {
            let w1 = dist.quantile(rng::draw_f64(seed, idx, 0));
            let w2 = dist.quantile(rng::draw_f64(seed, idx, 1));
            let (e1, e2) = self.eigenvalues(w1, w2);
            if e1 - e2 < gap_floor - 1e-12 {
                gap_violations += 1;
            }
            let i1 = ((e1 - window.e1_lo) / d1).floor();
            let i2 = ((e2 - window.e2_lo) / d2).floor();
            if i1 < 0.0 || i2 < 0.0 || i1 >= n1 as f64 || i2 >= n2 as f64 {
                outside_count += 1;
            } else {
                counts[i1 as usize * n2 + i2 as usize] += 1;
            }
        }

        let mut analytic_mass = vec![0.0f64; n1 * n2];
        let per_bin_tol = 1e-12;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                analytic_mass[i1 * n2 + i2] = self.rectangle_mass(
                    dist,
                    e1_edges[i1],
                    e1_edges[i1 + 1],
                    e2_edges[i2],
                    e2_edges[i2 + 1],
                    per_bin_tol,
                );
            }
        }
        let inside_mass: f64 = analytic_mass.iter().sum();
        let l1 = counts
            .iter()
            .zip(&analytic_mass)
            .map(|(&cnt, &mass)| (cnt as f64 / n_samples as f64 - mass).abs())
            .sum();
        Ok(DensityGrid {
            e1_edges,
            e2_edges,
            analytic_mass,
            counts,
            n_samples,
            seed,
            outside_count,
            outside_mass: (1.0 - inside_mass).max(0.0),
            gap_violations,
            l1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridWindow {
    pub e1_lo: f64,
    pub e1_hi: f64,
    pub e2_lo: f64,
    pub e2_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingProbe {
    pub rows: Vec<ScalingRow>,
    pub fitted_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraddlingRow {
    pub w: f64,
    pub probability: f64,
    /// probability / w^2; unbounded as w shrinks.
    pub conjectured_ratio: f64,
    /// probability / max(w, sqrt(w))^2.
    pub modified_ratio: f64,
}

/// Monte Carlo histogram against quadrature masses on a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub e1_edges: Vec<f64>,
    pub e2_edges: Vec<f64>,
    /// Row-major over (e1 bin, e2 bin).
    pub analytic_mass: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_samples: u64,
    pub seed: u64,
    pub outside_count: u64,
    pub outside_mass: f64,
    /// Samples with a gap below 2|c| - 1e-12; always 0.
    pub gap_violations: u64,
    /// Sum over bins of |count/n - analytic mass|.
    pub l1: f64,
}
