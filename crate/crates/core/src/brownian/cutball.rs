use serde::Serialize;

use crate::cut::CutBallOutcome;
use crate::error::{invalid, Error, Result};
use crate::lattice::{dist2, norm, RealPoint};
use crate::serde_array;
use crate::spatial::polylines_within;

use super::path::BrownianPath;

/// Largest grid step allowed per squared inner radius.
pub const RESOLUTION_FACTOR: f64 = 0.04;
pub const DEFAULT_RHO: f64 = 0.05;

/// Default time step for detection at scale `s`.
pub fn default_dt(s: f64) -> f64 {
    (1e-4f64).min((-2.0 * s).exp() / 100.0)
}

/// Inner ball, envelope and leg margin of a Brownian cut-ball test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousCutBall<const D: usize> {
    pub center: RealPoint<D>,
    pub inner_radius: f64,
    pub envelope_radius: f64,
    pub rho: f64,
}

impl<const D: usize> ContinuousCutBall<D> {
    /// Ball of radius `e^{-s}` around `z` with envelope `e^{-2s/3}`, for a
    /// path stopped on the unit sphere.
    pub fn unit(z: &RealPoint<D>, s: f64, rho: f64) -> Result<Self> {
        Self::build(*z, (-s).exp(), (-2.0 * s / 3.0).exp(), rho, 1.0)
    }

    /// The same ball blown up by `e^n`: radius `e^{3n/4}` around `e^n z`,
    /// envelope `e^{5n/6}`, for a path stopped at radius `e^n`.
    pub fn upscaled(z: &RealPoint<D>, n: f64, rho: f64) -> Result<Self> {
        let l = n.exp();
        Self::build(std::array::from_fn(|k| z[k] * l), (0.75 * n).exp(), (5.0 * n / 6.0).exp(), rho, l)
    }

    fn build(center: RealPoint<D>, inner: f64, envelope: f64, rho: f64, domain: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 0.25) {
            return Err(invalid("rho", format!("{rho} is outside (0, 1/4)")));
        }
        let c = norm(&center);
        if !c.is_finite() || c <= inner {
            return Err(invalid("z", "inner ball must not contain the origin"));
        }
        if c + inner >= domain {
            return Err(invalid("z", "inner ball must lie inside the domain"));
        }
        Ok(Self {
            center,
            inner_radius: inner,
            envelope_radius: envelope,
            rho,
        })
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_center(mut self, center: RealPoint<D>) -> Self {
        self.center = center;
        self
    }

    pub fn check_resolution(&self, dt: f64) -> Result<()> {
        let limit = RESOLUTION_FACTOR * self.inner_radius * self.inner_radius;
        if dt > limit {
            return Err(Error::UnderResolved(format!("dt {dt} exceeds {limit} for inner radius {}", self.inner_radius)));
        }
        Ok(())
    }

    /// First-entry / last-exit decomposition on the samples; the legs must
    /// stay more than `rho * inner_radius` apart.
    pub fn evaluate(&self, samples: &[RealPoint<D>]) -> CutBallOutcome {
        let r2 = self.inner_radius * self.inner_radius;
        let inside = |p: &RealPoint<D>| dist2(p, &self.center) <= r2;
        let Some(a1) = samples.iter().position(inside) else {
            return CutBallOutcome::default();
        };
        let a2 = samples.iter().rposition(inside).expect("entry implies exit");
        let out = CutBallOutcome { occurred: false, a1: Some(a1), a2: Some(a2) };
        let e2 = self.envelope_radius * self.envelope_radius;
        if samples[a1..=a2].iter().any(|p| dist2(p, &self.center) >= e2) {
            return out;
        }
        let margin = self.rho * self.inner_radius;
        let apart = !polylines_within(&samples[..=a1], &samples[a2..], margin);
        CutBallOutcome { occurred: apart, ..out }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousCutBallEvent<const D: usize> {
    #[serde(with = "serde_array")]
    pub z: RealPoint<D>,
    pub s: f64,
    pub inner_log_radius: f64,
    pub envelope_log_radius: f64,
    pub occurred: bool,
    pub rho: f64,
    pub a1: Option<usize>,
    pub a2: Option<usize>,
}

/// Brownian cut-ball test on a path stopped at the unit sphere.
pub fn is_cut_ball_continuous<const D: usize>(path: &BrownianPath<D>, z: &RealPoint<D>, s: f64, rho: f64) -> Result<ContinuousCutBallEvent<D>> {
    let ball = ContinuousCutBall::unit(z, s, rho)?;
    ball.check_resolution(path.dt())?;
    if norm(&path.end()) < 1.0 {
        return Err(Error::Precondition("path must be stopped at the unit sphere".into()));
    }
    let o = ball.evaluate(path.samples());
    Ok(ContinuousCutBallEvent {
        z: *z,
        s,
        inner_log_radius: -s,
        envelope_log_radius: -2.0 * s / 3.0,
        occurred: o.occurred,
        rho,
        a1: o.a1,
        a2: o.a2,
    })
}
