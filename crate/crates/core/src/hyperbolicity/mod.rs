//! Hyperbolicity of invariant sets: transversal reduction along energy
//! levels, graph transforms, linear cocycles over sampled bases, and the
//! Green-bundle and index-form deciders.

pub mod cocycle;
pub mod graph;
pub mod theorems;
pub mod transversal;

pub use cocycle::{
    exponential_fit, quasi_hyperbolicity_check, sacker_sell_dims, CocycleOptions, CocycleReport, DimsTriple, ExpFit,
    QhVerdict, SampledCocycle,
};
pub use graph::{graph_transform_fixed_point, graph_transform_splitting, FullSplitting, GraphTransform, GraphOptions};
pub use theorems::{
    classify_slopes, decide_theorem_a, decide_theorem_c, sample_invariant_set, ybd_check, BundleFit, HyperbolicSplitting,
    SlopeSample, TheoremAOptions, TheoremAReport, TheoremAVerdict, TheoremCOptions, TheoremCReport, Verdict, YbdReport,
};
pub use transversal::{transversal_basis, transversal_projection, TransversalAction};
