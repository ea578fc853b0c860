//! Lattice paths and simple random walks.
//!
//! A path with `L` edges is traversed in `L / d` time units: each edge takes
//! `1/d` units, so the walk and a standard Brownian motion share covariance.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{assert_dim, BallSpec, LatticePoint, RealPoint};
use crate::rng::RngStream;

/// Time along a lattice path as `(edge index, fraction of that edge)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTime {
    pub edge: usize,
    pub frac: f64,
}

impl PathTime {
    /// Converts a real time into edge coordinates for a walk in `Z^d`.
    pub fn from_time(t: f64, d: usize) -> Self {
        let x = t * d as f64;
        let edge = x.floor();
        Self {
            edge: edge as usize,
            frac: x - edge,
        }
    }

    pub fn to_time(self, d: usize) -> f64 {
        (self.edge as f64 + self.frac) / d as f64
    }
}

/// An ordered nearest-neighbor sequence of lattice sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath<const D: usize> {
    sites: Vec<LatticePoint<D>>,
}

impl<const D: usize> LatticePath<D> {
    /// Validates the nearest-neighbor invariant.
    pub fn from_sites(sites: Vec<LatticePoint<D>>) -> Result<Self> {
        const { assert_dim::<D>() };
        if sites.is_empty() {
            return Err(invalid("sites", "a path needs at least one site"));
        }
        if let Some(i) = sites.windows(2).position(|w| w[0].l1(&w[1]) != 1) {
            return Err(Error::NotNearestNeighbor { index: i + 1 });
        }
        Ok(Self { sites })
    }

    pub(crate) fn from_sites_unchecked(sites: Vec<LatticePoint<D>>) -> Self {
        debug_assert!(!sites.is_empty());
        debug_assert!(sites.windows(2).all(|w| w[0].l1(&w[1]) == 1));
        Self { sites }
    }

    /// Builds a path from a start site and direction codes `0..2D`.
    pub fn from_directions(start: LatticePoint<D>, dirs: &[u8]) -> Result<Self> {
        let mut sites = Vec::with_capacity(dirs.len() + 1);
        sites.push(start);
        let mut cur = start;
        for &d in dirs {
            if usize::from(d) >= 2 * D {
                return Err(invalid("direction", format!("{d} is not below {}", 2 * D)));
            }
            cur = cur.step(d);
            sites.push(cur);
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &[LatticePoint<D>] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<LatticePoint<D>> {
        self.sites
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.sites.len() == 1
    }

    pub fn start(&self) -> LatticePoint<D> {
        self.sites[0]
    }

    pub fn end(&self) -> LatticePoint<D> {
        *self.sites.last().expect("non-empty")
    }

    /// `len / D` time units.
    pub fn duration(&self) -> f64 {
        self.len() as f64 / D as f64
    }

    /// Direction codes of every edge.
    pub fn directions(&self) -> Vec<u8> {
        self.sites
            .windows(2)
            .map(|w| w[0].direction_to(&w[1]).expect("nearest-neighbor"))
            .collect()
    }

    /// Linear interpolation at time `t`.
    pub fn position_at(&self, t: f64) -> Result<RealPoint<D>> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(Error::TimeOutOfRange { t, duration });
        }
        Ok(self.position_at_edge(PathTime::from_time(t, D)))
    }

    pub fn position_at_edge(&self, pt: PathTime) -> RealPoint<D> {
        let PathTime { mut edge, mut frac } = pt;
        if edge >= self.len() {
            edge = self.len();
            frac = 0.0;
        }
        let a = self.sites[edge].to_real();
        if frac == 0.0 {
            return a;
        }
        let b = self.sites[edge + 1].to_real();
        let mut x = a;
        for k in 0..D {
            x[k] += frac * (b[k] - a[k]);
        }
        x
    }

    /// The path multiplied by `e^{-n}` as real points.
    pub fn rescaled(&self, n: f64) -> Vec<RealPoint<D>> {
        let s = (-n).exp();
        self.sites
            .iter()
            .map(|p| crate::lattice::scale(&p.to_real(), s))
            .collect()
    }
}

/// Hitting targets for [`hitting_time`].
pub enum Target<'a, const D: usize> {
    Sites(&'a [LatticePoint<D>]),
    Ball(&'a BallSpec<D>),
    /// Complement of an open ball (the exit set of a walk stopped at `∂B`).
    OutsideBall(&'a BallSpec<D>),
}

/// Smallest index whose site lies in the target.
pub fn hitting_time<const D: usize>(path: &LatticePath<D>, target: Target<'_, D>) -> Option<usize> {
    match target {
        Target::Sites(set) => {
            let set: rustc_hash::FxHashSet<LatticePoint<D>> = set.iter().copied().collect();
            path.sites.iter().position(|p| set.contains(p))
        }
        Target::Ball(b) => path.sites.iter().position(|p| b.contains(p)),
        Target::OutsideBall(b) => path.sites.iter().position(|p| !b.contains(p)),
    }
}

/// Uniform nearest-neighbor step directions drawn from a bit buffer.
pub struct StepSource<R> {
    rng: R,
    bits: u64,
    left: u32,
}

impl<R: RngCore> StepSource<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, bits: 0, left: 0 }
    }

    #[inline]
    fn take(&mut self, n: u32) -> u64 {
        if self.left < n {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        let v = self.bits & ((1 << n) - 1);
        self.bits >>= n;
        self.left -= n;
        v
    }

    /// Direction code uniform on `0..2d`.
    #[inline]
    pub fn next_dir(&mut self, d: usize) -> u8 {
        if d == 2 {
            self.take(2) as u8
        } else {
            loop {
                let v = self.take(3) as u8;
                if v < 6 {
                    return v;
                }
            }
        }
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

/// `|x|^2 < r^2` against a squared radius.
#[inline]
pub(crate) fn inside_r2<const D: usize>(p: &LatticePoint<D>, center: &RealPoint<D>, r2: f64) -> bool {
    p.dist2_to(center) < r2
}

/// Simple random walk from `start`, stopped at the first site outside `ball`.
pub fn sample_srw_until_exit<const D: usize>(
    start: LatticePoint<D>,
    ball: &BallSpec<D>,
    rng: RngStream,
) -> Result<LatticePath<D>> {
    let mut steps = StepSource::new(rng.rng());
    srw_until_exit_with(start, ball, &mut steps)
}

pub(crate) fn srw_until_exit_with<const D: usize, R: RngCore>(
    start: LatticePoint<D>,
    ball: &BallSpec<D>,
    steps: &mut StepSource<R>,
) -> Result<LatticePath<D>> {
    let r = ball.radius();
    if r < 1.0 {
        return Err(invalid("radius", format!("{r} is below 1")));
    }
    if !ball.contains(&start) {
        return Err(Error::Precondition(format!(
            "start {:?} is not strictly inside the ball",
            start.0
        )));
    }
    let r2 = r * r;
    let c = ball.center;
    let mut sites = Vec::with_capacity((r2 as usize).min(1 << 24) + 16);
    let mut cur = start;
    sites.push(cur);
    loop {
        cur = cur.step(steps.next_dir(D));
        sites.push(cur);
        if !inside_r2(&cur, &c, r2) {
            break;
        }
    }
    Ok(LatticePath::from_sites_unchecked(sites))
}

/// Simple random walk with exactly `steps` edges.
pub fn sample_srw_fixed_steps<const D: usize>(
    start: LatticePoint<D>,
    steps: usize,
    rng: RngStream,
) -> Result<LatticePath<D>> {
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    let mut src = StepSource::new(rng.rng());
    let mut sites = Vec::with_capacity(steps + 1);
    let mut cur = start;
    sites.push(cur);
    for _ in 0..steps {
        cur = cur.step(src.next_dir(D));
        sites.push(cur);
    }
    Ok(LatticePath::from_sites_unchecked(sites))
}
