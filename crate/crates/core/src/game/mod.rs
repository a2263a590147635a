//! Full-information Stackelberg machinery.

pub mod fixtures;
pub mod maximin;
pub mod sse;
pub mod types;
pub mod witness;

pub use maximin::{
    full_maximin_value, inducible_fullinfo, is_cover, is_proper_cover, maximin, maximin_value,
    MaximinResult,
};
pub use sse::{
    best_response_set, br_region, column_value, column_values, compute_sse, is_sse,
    is_sse_response, sse_value,
};
pub use types::{column, payoff, payoffs, Game, Matrix, MixedStrategy, StrategyProfile};
pub use witness::{construct_witness, WitnessOutcome};
