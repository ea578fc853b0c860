//! Monte Carlo estimators for the scaling laws of cut points.
//!
//! Every estimator takes a base [`RngStream`](crate::RngStream); trial `t`
//! draws from `rng.child(t)`, so results depend only on the base stream and
//! the parameters, never on the worker count.

mod fit;
mod moments;
mod nonintersection;
mod points;
mod ruin;
mod sampling;
mod stats;

pub use fit::{fit_exponent, fit_log_means_batched, quantile, FitResult};
pub use moments::{cut_count_moments, estimate_cut_count_moments, MomentRow, MomentTable};
pub use nonintersection::{estimate_nonintersection, nonintersection_fixed_steps, nonintersection_profile};
pub use points::{
    bulk_distance, estimate_one_point, estimate_transfer_ratio, estimate_two_point, interior_site, is_bulk, min_separation, site_images,
    point_row, two_point_profile, two_point_profile_fit, OnePointStat, PointFunctionTable, PointRow, TransferRatio, TransferStat, TwoPointBin, TwoPointProfileStat, TwoPointStat,
};
pub use ruin::{beurling_escape_estimate, gamblers_ruin_check, RuinRow};
pub use sampling::{sample_coupled_pairs, sample_exit_walks, sample_exit_walks_from, Bins, Group, PairStatistic, PathStatistic};
pub use stats::{MeanAcc, ProportionEstimate, RatioAcc};
