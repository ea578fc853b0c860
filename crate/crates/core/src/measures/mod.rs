//! Occupation measures of cut points and their Brownian surrogates.

use std::fmt;
use std::sync::Arc;

use crate::lattice::RealPoint;

mod coupled;
mod dimension;
mod grid;
mod occupation;

pub use crate::boxes::NiceBox;
pub use coupled::{
    box_l2_row, box_masses, coupled_box_l2, coupled_box_l2_from_samples, pool_agreement, surrogate_scale, AgreementCounts, AgreementStat, BoxL2Row,
    BoxMassStat,
};
pub use dimension::{box_counts, BoxCountStat, box_dimension, box_dimension_pooled, fit_box_counts};
pub use grid::{cutball_measure, cutball_measure_in, default_grid_h, GridMeasure, GridSidecar};
pub use occupation::{atom_mass, occupation_measure, AtomicMeasure};

/// Bounded function on the closed unit ball with a declared modulus of
/// continuity (a Lipschitz bound) for reporting.
#[derive(Clone)]
pub struct TestFunction<const D: usize> {
    f: Arc<dyn Fn(&RealPoint<D>) -> f64 + Send + Sync>,
    pub lipschitz: f64,
}

impl<const D: usize> TestFunction<D> {
    pub fn new(f: impl Fn(&RealPoint<D>) -> f64 + Send + Sync + 'static, lipschitz: f64) -> Self {
        Self { f: Arc::new(f), lipschitz }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, 0.0)
    }

    pub fn eval(&self, x: &RealPoint<D>) -> f64 {
        (self.f)(x)
    }
}

impl<const D: usize> fmt::Debug for TestFunction<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("lipschitz", &self.lipschitz).finish_non_exhaustive()
    }
}

/// Measures that integrate test functions.
pub trait Integrate<const D: usize> {
    fn integrate(&self, g: &TestFunction<D>) -> f64;
}

impl<const D: usize> Integrate<D> for AtomicMeasure<D> {
    fn integrate(&self, g: &TestFunction<D>) -> f64 {
        AtomicMeasure::integrate(self, g)
    }
}

impl<const D: usize> Integrate<D> for GridMeasure<D> {
    fn integrate(&self, g: &TestFunction<D>) -> f64 {
        GridMeasure::integrate(self, g)
    }
}

pub fn integrate<const D: usize, M: Integrate<D>>(measure: &M, g: &TestFunction<D>) -> f64 {
    measure.integrate(g)
}
