//! Assembly of H = T + V on a finite graph: hermitian hopping plus a real
//! random diagonal.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dist::PotentialVector;
use crate::error::{Error, Result};
use crate::graph::GraphSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub matrix: DMatrix<Complex64>,
}

impl Hamiltonian {
    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest hermiticity defect; exactly 0 for assembled operators.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// H = T + diag(V).  The potential must have one entry per site.
pub fn assemble_hamiltonian(graph: &GraphSpec, potential: &PotentialVector) -> Result<Hamiltonian> {
    if potential.values.len() != graph.n_sites {
        return Err(Error::DimensionMismatch {
            got: potential.values.len(),
            expected: graph.n_sites,
        });
    }
    let mut matrix = graph.build_hopping()?;
    for (i, &v) in potential.values.iter().enumerate() {
        matrix[(i, i)] = Complex64::new(v, 0.0);
    }
    Ok(Hamiltonian { matrix })
}

/// Same assembly from an already-built hopping matrix (hot loops reuse T).
pub fn assemble_from_hopping(
    hopping: &DMatrix<Complex64>,
    values: &[f64],
) -> Result<Hamiltonian> {
    if values.len() != hopping.nrows() {
        return Err(Error::DimensionMismatch {
            got: values.len(),
            expected: hopping.nrows(),
        });
    }
    let mut matrix = hopping.clone();
    for (i, &v) in values.iter().enumerate() {
        matrix[(i, i)] = Complex64::new(v, 0.0);
    }
    Ok(Hamiltonian { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::PotentialVector;
    use num_complex::Complex64;

    fn pv(values: &[f64]) -> PotentialVector {
        PotentialVector {
            values: values.to_vec(),
            sample_index: 0,
        }
    }

    #[test]
    fn assembled_operator_is_exactly_hermitian() {
        let g = GraphSpec::explicit(
            3,
            vec![
                crate::graph::Edge { x: 0, y: 1, w: Complex64::new(0.3, 0.7) },
                crate::graph::Edge { x: 1, y: 2, w: Complex64::new(-1.0, 0.2) },
            ],
        )
        .unwrap();
        let h = assemble_hamiltonian(&g, &pv(&[0.1, -0.5, 2.0])).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
        assert_eq!(h.matrix[(1, 1)], Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = GraphSpec::chain(3, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            assemble_hamiltonian(&g, &pv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { got: 2, expected: 3 })
        ));
    }
}
