use serde::Serialize;

use crate::cut::CutScan;
use crate::error::{invalid, Result};
use crate::lattice::{BallSpec, LatticePoint};
use crate::parallel::TrialRunner;
use crate::rng::RngStream;
use crate::walk::sample_srw_until_exit;

use super::sampling::Group;
use super::stats::MeanAcc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    /// Lattice radius the walks are stopped at.
    pub radius: f64,
    pub k: u32,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    pub const SCHEMA: &'static str = "cutlab.cut_moments.v1";

    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\nradius,k,trials,estimate,stderr\n", Self::SCHEMA);
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.radius, r.k, r.trials, r.estimate, r.stderr));
        }
        out
    }

    /// `E[M^2] / E[M]^2` at each radius with both moments present.
    pub fn moment_ratios(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for a in self.rows.iter().filter(|r| r.k == 1) {
            if let Some(b) = self.rows.iter().find(|r| r.k == 2 && r.radius == a.radius) {
                out.push((a.radius, b.estimate / (a.estimate * a.estimate)));
            }
        }
        out
    }
}

/// First and second moments of the number of cut points of a walk from the
/// origin stopped on leaving lattice radius `radius`.
pub fn cut_count_moments<const D: usize>(radius: f64, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<[MomentRow; 2]> {
    if !(radius >= 1.0) || !radius.is_finite() {
        return Err(invalid("radius", format!("{radius} is below 1")));
    }
    let ball = BallSpec::<D>::with_radius([0.0; D], radius)?;
    let acc = runner.run(
        trials,
        || Group(vec![MeanAcc::default(); 2]),
        |acc, t| {
            let path = sample_srw_until_exit(LatticePoint::origin(), &ball, rng.child(t))?;
            let m = CutScan::new(&path).cut_times().count() as f64;
            acc.0[0].push(m);
            acc.0[1].push(m * m);
            Ok(())
        },
    )?;
    Ok(std::array::from_fn(|i| MomentRow {
        radius,
        k: i as u32 + 1,
        trials,
        estimate: acc.0[i].mean(),
        stderr: acc.0[i].stderr(),
    }))
}

/// The `k`-th moment row alone.
pub fn estimate_cut_count_moments<const D: usize>(radius: f64, k: u32, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<MomentRow> {
    if !(1..=2).contains(&k) {
        return Err(invalid("k", "moment order must be 1 or 2"));
    }
    Ok(cut_count_moments::<D>(radius, trials, rng, runner)?[k as usize - 1])
}
