//! Cut norms, cut decompositions and the refinement atlas.

pub mod atlas;
pub mod fk;
pub mod hamiltonian;
pub mod norm;

pub use atlas::{estimate_atom_sizes, AtomSizes, RefinementAtlas, MAX_ATLAS_SIDES};
pub use fk::{fk_decompose, tensor_fk_decompose, CutDecomposition, CutPiece, FkOptions, ResidualStats};
pub use hamiltonian::{ham_cut_decompose, ham_cut_decompose_pd, ClassCut, HamiltonianCutDecomposition};
pub use norm::{cut_norm, cut_norm_exact, cut_norm_heuristic, inf_to_one, inf_to_one_exact, inf_to_one_heuristic, inf_to_one_upper_bound, CutValue, InfOneValue};
