//! Finite graphs and their hopping operators.
//!
//! A `GraphSpec` is a site count plus a list of weighted edges; the hopping
//! matrix T it generates is hermitian by construction, with an identically
//! zero diagonal.  Deterministic on-site terms are not part of T: they fold
//! into the potential distribution (a support shift), which keeps a single
//! source of truth for the diagonal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub x: usize,
    pub y: usize,
    /// Weight of T(x, y); T(y, x) is its conjugate.
    pub w: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Chain,
    Torus { lx: usize, ly: usize },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n_sites: usize,
    pub edges: Vec<Edge>,
    pub kind: GraphKind,
}

impl GraphSpec {
    /// Open chain 0 - 1 - ... - (n-1) with a uniform hopping weight.
    pub fn chain(n_sites: usize, hopping: Complex64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::EmptyGraph);
        }
        let edges = (1..n_sites)
            .map(|i| Edge {
                x: i - 1,
                y: i,
                w: hopping,
            })
            .collect();
        Ok(Self {
            n_sites,
            edges,
            kind: GraphKind::Chain,
        })
    }

    /// lx-by-ly torus with nearest-neighbor hopping; site (ix, iy) is
    /// ix + lx*iy.  Wrap edges that would duplicate an existing pair are
    /// emitted once, and wrap edges that close on a single site are skipped.
    pub fn torus(lx: usize, ly: usize, hopping: Complex64) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::EmptyGraph);
        }
        let n_sites = lx * ly;
        let site = |ix: usize, iy: usize| (ix % lx) + lx * (iy % ly);
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::new();
        for iy in 0..ly {
            for ix in 0..lx {
                let s = site(ix, iy);
                for t in [site(ix + 1, iy), site(ix, iy + 1)] {
                    if s == t {
                        continue; // length-1 direction: the wrap is a self-loop
                    }
                    let key = (s.min(t), s.max(t));
                    if seen.insert(key) {
                        edges.push(Edge { x: s, y: t, w: hopping });
                    }
                }
            }
        }
        Ok(Self {
            n_sites,
            edges,
            kind: GraphKind::Torus { lx, ly },
        })
    }

    /// Graph from an explicit edge list.  Each entry declares T(x, y) = w and
    /// T(y, x) = conj(w); redeclaring a pair is fine only if consistent.
    pub fn explicit(n_sites: usize, edges: Vec<Edge>) -> Result<Self> {
        let spec = Self {
            n_sites,
            edges,
            kind: GraphKind::Explicit,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut declared: std::collections::HashMap<(usize, usize), Complex64> =
            std::collections::HashMap::new();
        for e in &self.edges {
            if e.x >= self.n_sites || e.y >= self.n_sites {
                return Err(Error::SiteOutOfRange {
                    x: e.x,
                    y: e.y,
                    n_sites: self.n_sites,
                });
            }
            if e.x == e.y {
                return Err(Error::SelfLoop { site: e.x });
            }
            // canonicalize to x < y, conjugating the weight if needed
            let (key, w) = if e.x < e.y {
                ((e.x, e.y), e.w)
            } else {
                ((e.y, e.x), e.w.conj())
            };
            if let Some(prev) = declared.insert(key, w) {
                if (prev - w).norm() > 1e-14 * (1.0 + w.norm()) {
                    return Err(Error::InconsistentEdge { x: e.x, y: e.y });
                }
            }
        }
        Ok(())
    }

    /// Dense hopping matrix T.  Hermitian by construction: every edge writes
    /// an entry and its conjugate transpose, and the diagonal stays zero.
    pub fn build_hopping(&self) -> Result<DMatrix<Complex64>> {
        self.validate()?;
        let n = self.n_sites;
        let mut t = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for e in &self.edges {
            let (x, y, w) = if e.x < e.y {
                (e.x, e.y, e.w)
            } else {
                (e.y, e.x, e.w.conj())
            };
            t[(x, y)] = w;
            t[(y, x)] = w.conj();
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn chain_has_n_minus_one_edges() {
        let g = GraphSpec::chain(5, c(1.0, 0.0)).unwrap();
        assert_eq!(g.edges.len(), 4);
        let t = g.build_hopping().unwrap();
        assert_eq!(t[(0, 1)], c(1.0, 0.0));
        assert_eq!(t[(3, 2)], c(1.0, 0.0));
        assert_eq!(t[(0, 2)], c(0.0, 0.0));
    }

    #[test]
    fn single_site_chain_is_edgeless() {
        let g = GraphSpec::chain(1, c(1.0, 0.0)).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.build_hopping().unwrap().nrows(), 1);
    }

    #[test]
    fn torus_3x3_is_four_regular() {
        let g = GraphSpec::torus(3, 3, c(1.0, 0.0)).unwrap();
        let t = g.build_hopping().unwrap();
        for s in 0..9 {
            let degree = (0..9).filter(|&r| t[(s, r)] != c(0.0, 0.0)).count();
            assert_eq!(degree, 4, "site {s}");
        }
        // 9 sites * 4 neighbors / 2
        assert_eq!(g.edges.len(), 18);
    }

    #[test]
    fn degenerate_torus_widths_do_not_double_edges() {
        let g = GraphSpec::torus(2, 3, c(1.0, 0.0)).unwrap();
        let t = g.build_hopping().unwrap();
        assert_eq!(t[(0, 1)], c(1.0, 0.0));
        // and a 1-wide direction produces no self-loops
        let ring = GraphSpec::torus(1, 4, c(1.0, 0.0)).unwrap();
        assert!(ring.validate().is_ok());
    }

    #[test]
    fn hopping_is_hermitian_with_complex_weights() {
        let g = GraphSpec::explicit(3, vec![
            Edge { x: 0, y: 1, w: c(0.0, 1.0) },
            Edge { x: 2, y: 1, w: c(0.5, -0.25) },
        ])
        .unwrap();
        let t = g.build_hopping().unwrap();
        for i in 0..3 {
            assert_eq!(t[(i, i)], c(0.0, 0.0));
            for j in 0..3 {
                assert_eq!(t[(i, j)], t[(j, i)].conj(), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn bad_edge_lists_are_rejected() {
        assert!(matches!(
            GraphSpec::explicit(2, vec![Edge { x: 0, y: 0, w: c(1.0, 0.0) }]),
            Err(Error::SelfLoop { site: 0 })
        ));
        assert!(matches!(
            GraphSpec::explicit(2, vec![Edge { x: 0, y: 5, w: c(1.0, 0.0) }]),
            Err(Error::SiteOutOfRange { .. })
        ));
        // (0,1,i) and (1,0,i) declare T(0,1) as both i and -i
        assert!(matches!(
            GraphSpec::explicit(2, vec![
                Edge { x: 0, y: 1, w: c(0.0, 1.0) },
                Edge { x: 1, y: 0, w: c(0.0, 1.0) },
            ]),
            Err(Error::InconsistentEdge { .. })
        ));
        // consistent redeclaration is fine
        assert!(GraphSpec::explicit(2, vec![
            Edge { x: 0, y: 1, w: c(0.0, 1.0) },
            Edge { x: 1, y: 0, w: c(0.0, -1.0) },
        ])
        .is_ok());
    }
}
