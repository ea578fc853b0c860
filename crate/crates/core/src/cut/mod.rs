//! Cut points, cut balls and non-intersection of path pairs.

mod ball;
mod pair;
mod points;
mod visit;

pub use ball::{is_cut_ball_discrete, CutBallEvent, CutBallGeometry, CutBallOutcome};
pub use pair::{nonintersection_occurred, separation_quality, SeparationQuality};
pub use points::{count_cut_points, cut_points_fast, cut_points_naive, CutPointSet};
pub use visit::{first_entry, last_exit, stays_inside, CutScan, VisitIndex};
