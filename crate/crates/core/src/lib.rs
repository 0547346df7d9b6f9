//! Product-state approximations of quantum local Hamiltonians.
//!
//! The crate estimates ground-state energies and free energies over product
//! states through cut decompositions of the Pauli interaction graphs and
//! convex feasibility relaxations on a grid of guessed magnetizations, and
//! cross-checks everything against dense exact oracles at small sizes.

pub mod cut;
pub mod decomposition;
pub mod entanglement;
pub mod error;
pub mod exact;
pub mod generate;
pub mod hamiltonian;
pub mod linalg;
pub mod pauli;
pub mod relax;
pub mod rng;
pub mod sampling;
pub mod sparse;
pub mod state;
pub mod threshold;

pub use decomposition::{pauli_decompose, product_energy, Color, ColorTensor, PauliDecomposition};
pub use error::{Error, Result};
pub use exact::{exact_free_energy, exact_ground, product_free_energy};
pub use hamiltonian::{LocalHamiltonian, LocalTerm};
pub use state::{DenseState, ProductState};
pub use cut::{ham_cut_decompose, CutDecomposition, FkOptions, HamiltonianCutDecomposition, RefinementAtlas};
pub use entanglement::{eb_experiment, EbReport};
pub use relax::{check_feasible, fe_estimate, gs_direct, gs_estimate, max_entropy, ConstraintSet, EstimatorOptions, FeEstimate, GsEstimate};
pub use sampling::{subsample, vsc_experiment, Solver, SubsampleReport};
pub use sparse::{cluster_fe, cluster_gs, sparse_solve, ClusterPartition, SparseGraph, SparseReport, TreeDecomposition};
pub use threshold::{qmc_estimate, threshold_cut_decompose, threshold_rank, QmcEstimate, ThresholdProfile, WeightedGraph};
