//! Brownian paths, Brownian cut balls and the Skorokhod coupling with the
//! simple random walk.

mod cutball;
mod path;
mod ruin;
mod skorokhod;

pub use cutball::{default_dt, is_cut_ball_continuous, ContinuousCutBall, ContinuousCutBallEvent, DEFAULT_RHO, RESOLUTION_FACTOR};
pub use path::{sample_bm_until_exit, BrownianPath};
pub use ruin::{ruin_formula, ruin_trial};
pub use skorokhod::{
    coupled_cutball_agreement, recording_stride, skorokhod_deviation, skorokhod_embed, skorokhod_embed_to, Agreement, CoupledPair, CoupledSummary,
    EmbedOptions,
};
#[allow(unused_imports)]
pub(crate) use skorokhod::truncate_walk;
