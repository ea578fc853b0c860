use serde::Serialize;

use crate::boxes::NiceBox;
use crate::brownian::{BrownianPath, ContinuousCutBall, RESOLUTION_FACTOR};
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::lattice::{norm, RealPoint};

use super::TestFunction;

/// Cell values on the grid `h Z^d`; cell `i` covers `prod_k [i_k h, (i_k + 1) h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure<const D: usize> {
    pub h: f64,
    pub s: f64,
    /// Index of the first cell along each axis.
    pub first: [i64; D],
    pub dims: [usize; D],
    /// Row-major, last axis fastest.
    pub values: Vec<f64>,
    /// Factor applied on top of `e^{eta s}`.
    pub compensator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSidecar {
    pub h: f64,
    pub s: f64,
    pub origin: Vec<f64>,
    pub dims: Vec<usize>,
    pub compensator: f64,
    pub dtype: &'static str,
}

/// Largest dyadic spacing not above `e^{-s}/4`.
pub fn default_grid_h(s: f64) -> f64 {
    let target = (-s).exp() / 4.0;
    target.log2().floor().exp2()
}

impl<const D: usize> GridMeasure<D> {
    fn index(&self, cell: &[i64; D]) -> Option<usize> {
        let mut idx = 0usize;
        for k in 0..D {
            let off = cell[k] - self.first[k];
            if off < 0 || off as usize >= self.dims[k] {
                return None;
            }
            idx = idx * self.dims[k] + off as usize;
        }
        Some(idx)
    }

    fn cell_of(&self, flat: usize) -> [i64; D] {
        let mut rem = flat;
        let mut cell = [0i64; D];
        for k in (0..D).rev() {
            cell[k] = self.first[k] + (rem % self.dims[k]) as i64;
            rem /= self.dims[k];
        }
        cell
    }

    pub fn center(&self, cell: &[i64; D]) -> RealPoint<D> {
        std::array::from_fn(|k| (cell[k] as f64 + 0.5) * self.h)
    }

    pub fn value(&self, cell: &[i64; D]) -> f64 {
        self.index(cell).map_or(0.0, |i| self.values[i])
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(D as i32)
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Riemann sum over the cells whose center lies in the box.
    pub fn mass_in(&self, bx: &NiceBox<D>) -> f64 {
        let mut sum = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 && bx.contains(&self.center(&self.cell_of(i))) {
                sum += v;
            }
        }
        sum * self.cell_volume()
    }

    pub fn integrate(&self, g: &TestFunction<D>) -> f64 {
        let mut sum = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                sum += v * g.eval(&self.center(&self.cell_of(i)));
            }
        }
        sum * self.cell_volume()
    }

    pub fn with_compensator(mut self, c: f64) -> Self {
        let f = c / self.compensator;
        self.values.iter_mut().for_each(|v| *v *= f);
        self.compensator = c;
        self
    }

    /// Values as little-endian `f32`.
    pub fn to_f32_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect()
    }

    pub fn sidecar(&self) -> GridSidecar {
        GridSidecar {
            h: self.h,
            s: self.s,
            origin: self.first.iter().map(|&i| i as f64 * self.h).collect(),
            dims: self.dims.to_vec(),
            compensator: self.compensator,
            dtype: "f32le",
        }
    }
}

/// Cut-ball surrogate measure of a Brownian path stopped at the unit sphere,
/// on grid cells covering the unit ball.
pub fn cutball_measure<const D: usize>(bm: &BrownianPath<D>, s: f64, h: f64, rho: f64, exps: &Exponents) -> Result<GridMeasure<D>> {
    cutball_measure_in(bm, s, h, rho, exps, &[-1.0; D], &[1.0; D])
}

/// As [`cutball_measure`], restricted to the cells meeting `[lower, upper)`.
pub fn cutball_measure_in<const D: usize>(
    bm: &BrownianPath<D>,
    s: f64,
    h: f64,
    rho: f64,
    exps: &Exponents,
    lower: &RealPoint<D>,
    upper: &RealPoint<D>,
) -> Result<GridMeasure<D>> {
    let limit = (-s).exp() / 2.0;
    if !(h > 0.0 && h <= limit) {
        return Err(Error::UnderResolved(format!("grid spacing {h} exceeds {limit} at scale {s}")));
    }
    if (0..D).any(|k| !(lower[k] < upper[k])) {
        return Err(crate::error::invalid("region", "lower corner must be below the upper corner"));
    }
    if norm(&bm.end()) < 1.0 - 1e-9 {
        return Err(Error::Precondition("path must be stopped at the unit sphere".into()));
    }
    let dt_limit = RESOLUTION_FACTOR * (-2.0 * s).exp();
    if bm.dt() > dt_limit {
        return Err(Error::UnderResolved(format!("dt {} exceeds {dt_limit} at scale {s}", bm.dt())));
    }
    let first: [i64; D] = std::array::from_fn(|k| (lower[k].max(-1.0) / h).floor() as i64);
    let last: [i64; D] = std::array::from_fn(|k| (upper[k].min(1.0) / h).ceil() as i64);
    let dims: [usize; D] = std::array::from_fn(|k| (last[k] - first[k]).max(0) as usize);
    let mut g = GridMeasure {
        h,
        s,
        first,
        dims,
        values: vec![0.0; dims.iter().product()],
        compensator: 1.0,
    };
    let weight = (exps.eta() * s).exp();
    let samples = bm.samples();
    for i in 0..g.values.len() {
        let c = g.center(&g.cell_of(i));
        if norm(&c) >= 1.0 {
            continue;
        }
        let Ok(ball) = ContinuousCutBall::unit(&c, s, rho) else {
            continue;
        };
        if ball.evaluate(samples).occurred {
            g.values[i] = weight;
        }
    }
    Ok(g)
}
