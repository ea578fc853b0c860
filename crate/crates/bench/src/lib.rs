//! Fixed inputs shared by the benchmarks.

use cutlab_core::brownian::{default_dt, sample_bm_until_exit};
use cutlab_core::walk::sample_srw_until_exit;
use cutlab_core::{BallSpec, BrownianPath, LatticePath, LatticePoint, RngStream};

pub const SEED: u64 = 7;

/// Walk from the origin stopped at radius `e^n`.
pub fn exit_walk<const D: usize>(n: f64, trial: u64) -> LatticePath<D> {
    let ball = BallSpec::<D>::centered(n).expect("valid radius");
    sample_srw_until_exit(LatticePoint::origin(), &ball, RngStream::new(SEED, trial)).expect("sampled")
}

/// Brownian path from the origin stopped at the unit sphere, resolved for
/// cut balls at scale `s`.
pub fn unit_bm<const D: usize>(s: f64, trial: u64) -> BrownianPath<D> {
    sample_bm_until_exit([0.0; D], 0.0, default_dt(s), RngStream::new(SEED, 1 << 32 | trial)).expect("sampled")
}
