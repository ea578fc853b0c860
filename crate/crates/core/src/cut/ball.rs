use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lattice::{norm, LatticePoint, RealPoint};
use crate::serde_array;
use crate::walk::LatticePath;

use super::visit::{first_entry, last_exit, stays_inside, CutScan};

/// Inner ball and envelope of a cut-ball test, in lattice units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutBallGeometry<const D: usize> {
    pub center: RealPoint<D>,
    pub inner_radius: f64,
    pub envelope_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CutBallOutcome {
    pub occurred: bool,
    pub a1: Option<usize>,
    pub a2: Option<usize>,
}

impl<const D: usize> CutBallGeometry<D> {
    /// Ball of log-radius `3n/4` around `floor(e^n z)`, envelope `5n/6`,
    /// for a walk started at the origin and stopped at radius `e^n`.
    pub fn discrete(z: &RealPoint<D>, n: f64) -> Result<Self> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("n", "scale must be positive and finite"));
        }
        let center = LatticePoint::floor_scaled(z, n.exp()).to_real();
        let g = Self {
            center,
            inner_radius: (0.75 * n).exp(),
            envelope_radius: (5.0 * n / 6.0).exp(),
        };
        let c = norm(&center);
        if c <= g.inner_radius {
            return Err(invalid("z", format!("inner ball around {center:?} contains the origin")));
        }
        if c + g.inner_radius >= n.exp() {
            return Err(invalid("z", format!("inner ball around {center:?} leaves the domain ball")));
        }
        Ok(g)
    }

    pub fn with_envelope(mut self, radius: f64) -> Self {
        self.envelope_radius = radius;
        self
    }

    fn decompose(&self, sites: &[LatticePoint<D>]) -> Option<(usize, usize)> {
        let a1 = first_entry(sites, &self.center, self.inner_radius)?;
        let a2 = last_exit(sites, &self.center, self.inner_radius)?;
        Some((a1, a2))
    }

    /// Leg disjointness checked by hashing the shorter leg's sites.
    pub fn evaluate(&self, path: &LatticePath<D>) -> CutBallOutcome {
        let sites = path.sites();
        let Some((a1, a2)) = self.decompose(sites) else {
            return CutBallOutcome::default();
        };
        let out = CutBallOutcome { occurred: false, a1: Some(a1), a2: Some(a2) };
        if !stays_inside(sites, a1, a2, &self.center, self.envelope_radius) {
            return out;
        }
        let (first, second) = (&sites[..=a1], &sites[a2..]);
        let (small, big) = if first.len() <= second.len() { (first, second) } else { (second, first) };
        let set: FxHashSet<_> = small.iter().copied().collect();
        CutBallOutcome { occurred: big.iter().all(|p| !set.contains(p)), ..out }
    }

    /// Same test using a prebuilt scan of the path.
    pub fn evaluate_scan(&self, scan: &CutScan<'_, D>) -> CutBallOutcome {
        let sites = scan.path().sites();
        let Some((a1, a2)) = self.decompose(sites) else {
            return CutBallOutcome::default();
        };
        let occurred = stays_inside(sites, a1, a2, &self.center, self.envelope_radius) && !scan.legs_intersect(a1, a2);
        CutBallOutcome { occurred, a1: Some(a1), a2: Some(a2) }
    }
}

/// Cut-ball record at one `(z, n)`, serialized as `{z, n, occurred, a1, a2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutBallEvent<const D: usize> {
    #[serde(with = "serde_array")]
    pub z: RealPoint<D>,
    pub n: f64,
    #[serde(skip)]
    pub inner_log_radius: f64,
    #[serde(skip)]
    pub envelope_log_radius: f64,
    pub occurred: bool,
    pub a1: Option<usize>,
    pub a2: Option<usize>,
}

pub fn is_cut_ball_discrete<const D: usize>(path: &LatticePath<D>, z: &RealPoint<D>, n: f64) -> Result<CutBallEvent<D>> {
    let g = CutBallGeometry::discrete(z, n)?;
    let o = g.evaluate(path);
    Ok(CutBallEvent {
        z: *z,
        n,
        inner_log_radius: 0.75 * n,
        envelope_log_radius: 5.0 * n / 6.0,
        occurred: o.occurred,
        a1: o.a1,
        a2: o.a2,
    })
}
