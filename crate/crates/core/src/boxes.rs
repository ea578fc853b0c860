//! Dyadic boxes inside the unit ball.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lattice::{LatticePoint, RealPoint};

/// The dyadic cube `prod_i [k_i 2^-level, (k_i + 1) 2^-level)`, kept at
/// distance at least twice its diameter from the origin and the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NiceBox<const D: usize> {
    #[serde(with = "crate::serde_array")]
    pub k: [i64; D],
    pub level: u32,
}

impl<const D: usize> NiceBox<D> {
    pub fn new(k: [i64; D], level: u32) -> Result<Self> {
        const { crate::lattice::assert_dim::<D>() };
        if level > 40 {
            return Err(invalid("level", "dyadic level above 40"));
        }
        let b = Self { k, level };
        let diam = b.diameter();
        let (near, far) = b.distance_range();
        if near < 2.0 * diam {
            return Err(invalid("box", format!("distance {near:.4} to the origin is below twice the diameter {diam:.4}")));
        }
        if 1.0 - far < 2.0 * diam {
            return Err(invalid("box", format!("distance {:.4} to the unit sphere is below twice the diameter {diam:.4}", 1.0 - far)));
        }
        Ok(b)
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn diameter(&self) -> f64 {
        self.side() * (D as f64).sqrt()
    }

    pub fn lower(&self) -> RealPoint<D> {
        std::array::from_fn(|i| self.k[i] as f64 * self.side())
    }

    pub fn upper(&self) -> RealPoint<D> {
        std::array::from_fn(|i| (self.k[i] + 1) as f64 * self.side())
    }

    /// Smallest and largest distance from the origin to the closed box.
    pub fn distance_range(&self) -> (f64, f64) {
        let (lo, hi) = (self.lower(), self.upper());
        let mut near = 0.0;
        let mut far = 0.0;
        for i in 0..D {
            let n = if lo[i] > 0.0 {
                lo[i]
            } else if hi[i] < 0.0 {
                -hi[i]
            } else {
                0.0
            };
            let f = lo[i].abs().max(hi[i].abs());
            near += n * n;
            far += f * f;
        }
        (near.sqrt(), far.sqrt())
    }

    pub fn contains(&self, x: &RealPoint<D>) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        (0..D).all(|i| lo[i] <= x[i] && x[i] < hi[i])
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(D as i32)
    }

    /// Lattice sites `x` with `e^{-n} x` in the box, as inclusive ranges.
    pub fn lattice_ranges(&self, n: f64) -> [(i64, i64); D] {
        let l = n.exp();
        let (lo, hi) = (self.lower(), self.upper());
        std::array::from_fn(|i| ((lo[i] * l).ceil() as i64, (hi[i] * l).ceil() as i64 - 1))
    }

    pub fn contains_site(ranges: &[(i64, i64); D], p: &LatticePoint<D>) -> bool {
        (0..D).all(|i| ranges[i].0 <= p.0[i] && p.0[i] <= ranges[i].1)
    }
}
