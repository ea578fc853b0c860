use serde::Serialize;

use crate::brownian::{ruin_formula, ruin_trial};
use crate::error::{invalid, Result};
use crate::lattice::LatticePoint;
use crate::parallel::TrialRunner;
use crate::rng::RngStream;
use crate::walk::StepSource;

use super::stats::ProportionEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuinRow {
    pub d: usize,
    pub k: f64,
    pub l: f64,
    pub estimate: ProportionEstimate,
    pub p_formula: f64,
}

impl RuinRow {
    /// Distance of the estimate from the formula in binomial standard
    /// deviations at the formula value.
    pub fn z_score(&self) -> f64 {
        let p = self.p_formula;
        let sd = (p * (1.0 - p) / self.estimate.trials as f64).sqrt();
        (self.estimate.p_hat - p) / sd
    }
}

/// Brownian estimate of hitting radius `e^{-l}` before `e^k` from `|x| = 1`,
/// next to the closed form.
pub fn gamblers_ruin_check(k: f64, l: f64, d: usize, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<RuinRow> {
    let p_formula = ruin_formula(d, k, l)?;
    let hits = runner.run(trials, || 0u64, |acc, t| {
        let mut g = rng.child(t).rng();
        let hit = match d {
            2 => ruin_trial::<_, 2>(k, l, &mut g),
            _ => ruin_trial::<_, 3>(k, l, &mut g),
        };
        *acc += hit as u64;
        Ok(())
    })?;
    Ok(RuinRow {
        d,
        k,
        l,
        estimate: ProportionEstimate::binomial(trials, hits),
        p_formula,
    })
}

/// Probability that a planar walk from `(-x_dist, 0)` leaves radius `e^r`
/// before hitting the ray `{(i, 0) : 0 <= i < e^r}`.
pub fn beurling_escape_estimate<const D: usize>(x_dist: f64, r: f64, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<ProportionEstimate> {
    if D != 2 {
        return Err(invalid("d", "the Beurling estimate is planar; use d = 2"));
    }
    let radius = r.exp();
    if !(x_dist >= 0.0) || x_dist.round() >= radius {
        return Err(invalid("x_dist", format!("{x_dist} is not in [0, e^r)")));
    }
    if !(radius >= 1.0) {
        return Err(invalid("r", "radius must be at least 1"));
    }
    let r2 = radius * radius;
    let start = LatticePoint::<2>::new([-(x_dist.round() as i64), 0]);
    let on_ray = |p: &LatticePoint<2>| p.0[1] == 0 && p.0[0] >= 0 && (p.0[0] as f64) < radius;
    let hits = runner.run(trials, || 0u64, |acc, t| {
        if on_ray(&start) {
            return Ok(());
        }
        let mut steps = StepSource::new(rng.child(t).rng());
        let mut p = start;
        loop {
            p = p.step(steps.next_dir(2));
            if on_ray(&p) {
                return Ok(());
            }
            if p.norm2() >= r2 {
                *acc += 1;
                return Ok(());
            }
        }
    })?;
    Ok(ProportionEstimate::binomial(trials, hits))
}
