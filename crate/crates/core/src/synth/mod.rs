//! Sequence synthesis: genome encoding, simplex refinement and the genetic search.

pub mod genome;
pub mod search;
pub mod simplex;

pub use genome::{
    crossover, mutate, Action, Gene, Genome, GenomeSpace, MutationRates, MIN_DURATION,
};
pub use search::{
    refine_durations, run_search, search_cnot, CnotObjective, Objective, ObjectiveKind,
    SearchConfig, SearchReport, SwapObjective,
};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};
