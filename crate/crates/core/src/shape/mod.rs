//! Local shapes of the index sets: census with exact weights, stabilizer
//! lattices, the partition of each shape, TIP, hat-D, Ξ-structures, S-sets and
//! the weight identities.

mod analysis;
mod census;
mod identities;
mod s_sets;
mod structure;

pub use analysis::{analyze, AnalysisConfig, AnalyzedShape, IStarEntry, ShapeAnalysis};
pub use census::{census, census_xi, truncate_key, CensusKind, ShapeCensus, ShapeEntry};
pub use identities::{refinement_violation, weight_identities, weight_sweep, IdentityReport, WeightSweep};
pub use s_sets::{s_sets, s_sets_disjointness, separation_index, SeparationIndex};
pub use structure::{
    hat_d, infer_shape, partition_shape, stabilizer, symmetric_invariance, tip_check, xi_structure, HatD, Partition,
    Recenter, ShapeD, ShapeSet, TipResult, XiStructure,
};
