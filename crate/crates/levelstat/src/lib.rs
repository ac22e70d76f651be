//! Level statistics of random Schrodinger operators on finite graphs.
//!
//! The operators are H = T + V on l2 of a finite vertex set: a fixed
//! hermitian hopping term T with zero diagonal, plus a random diagonal
//! potential with i.i.d. entries drawn from a bounded density.  The crate
//! estimates and checks the standard ceilings on level concentration
//! (single-level, pairs, n-fold), probes a conjectured volume-linear bound
//! for joint occupancy of several intervals against the exactly solvable
//! 2x2 family that refutes it, and exposes the algebraic side: the at-most
//! n! potentials placing prescribed energies into the spectrum, and the
//! antisymmetric pair operator whose determinant is the squared gap product.
//!
//! Monte Carlo runs are deterministic functions of (seed, sample index,
//! site) through a counter RNG, chunked so results do not depend on the
//! worker count.

pub mod algebraic;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod hamiltonian;
pub mod intervals;
pub mod numeric;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod two_by_two;

pub use dist::{sample_potential, PotentialDistribution, PotentialVector};
pub use error::{Error, Result};
pub use estimators::{
    estimate_joint_intervals, estimate_minami, estimate_n_level, estimate_profile_event,
    estimate_spectral_averaging, estimate_wegner, EnsembleSpec, EstimatorReport,
    ProfileEventSpec, StatRow,
};
pub use graph::{Edge, GraphKind, GraphSpec};
pub use hamiltonian::{assemble_from_hopping, assemble_hamiltonian, Hamiltonian};
pub use intervals::{Interval, IntervalSet};
pub use spectral::{eigendecompose, simplicity_report, SimplicityReport, SpectralData};
pub use stats::{mean_interval, wilson_interval, IntervalEstimate, RunningMoments};
pub use two_by_two::{DensityGrid, GridWindow, ScalingProbe, TwoByTwoModel};
