//! Guess-grid relaxations: magnetization constraint sets, feasibility and
//! max-entropy solvers, and the ground-state and free-energy estimators.

pub mod constraints;
pub mod direct;
pub mod ellipsoid;
pub mod estimate;
pub mod maxent;
pub mod model;
pub mod search;

pub use constraints::{AffineRow, ConstraintSet};
pub use ellipsoid::{check_feasible, check_feasible_with_hint, FeasibilityResult, FeasibilityStatus};
pub use maxent::{max_entropy, MaxEntropy};
pub use direct::{expand_witness, fe_direct, gs_direct, gs_direct_pd, round_to_pure};
pub use model::{GuessModel, GuessStream, PieceSpec, DEFAULT_NODE_CAP};
pub use search::{search, search_from, Objective, SearchOptions, SearchOutcome};
pub use estimate::{fe_estimate, gs_estimate, EnergyBudget, EstimatorOptions, FeBudget, FeEstimate, GsEstimate, RunInfo};
