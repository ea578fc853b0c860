use rustc_hash::FxHashSet;

use crate::cut::{CutPointSet, CutScan};
use crate::error::{invalid, Result};
use crate::estimators::{fit_exponent, Bins, FitResult, Group, MeanAcc, PathStatistic};
use crate::lattice::RealPoint;

const BOOTSTRAP_REPS: usize = 1000;

fn check_sizes(sizes: &[f64]) -> Result<()> {
    if sizes.len() < 3 {
        return Err(invalid("box_sizes", format!("need at least 3 sizes, got {}", sizes.len())));
    }
    if sizes.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(invalid("box_sizes", "sizes must be positive"));
    }
    let lo = sizes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sizes.iter().cloned().fold(0.0, f64::max);
    if (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(invalid("box_sizes", "sizes must span at least 1.5 decades"));
    }
    Ok(())
}

/// Number of grid boxes of each side length hit by the points.
pub fn box_counts<const D: usize>(points: &[RealPoint<D>], sizes: &[f64]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&e| {
            let set: FxHashSet<[i64; D]> = points.iter().map(|p| p.map(|v| (v / e).floor() as i64)).collect();
            set.len()
        })
        .collect()
}

/// Slope of `log(count)` against `log(1/size)`.
pub fn fit_box_counts(sizes: &[f64], counts: &[f64]) -> Result<FitResult> {
    check_sizes(sizes)?;
    if counts.len() != sizes.len() || counts.iter().any(|c| !(*c > 0.0)) {
        return Err(invalid("counts", "need one positive count per size"));
    }
    let pts: Vec<(f64, f64)> = sizes.iter().zip(counts).map(|(s, c)| (-s.ln(), c.ln())).collect();
    fit_exponent(&pts, BOOTSTRAP_REPS)
}

/// Box-counting dimension of a cut set rescaled by `e^{-n}`.
pub fn box_dimension<const D: usize>(cutset: &CutPointSet<D>, n: f64, sizes: &[f64]) -> Result<FitResult> {
    box_dimension_pooled(std::slice::from_ref(cutset), n, sizes)
}

/// Box-counting fit on counts averaged over several cut sets.
pub fn box_dimension_pooled<const D: usize>(cutsets: &[CutPointSet<D>], n: f64, sizes: &[f64]) -> Result<FitResult> {
    check_sizes(sizes)?;
    if cutsets.iter().all(|c| c.is_empty()) {
        return Err(invalid("cutset", "no cut points"));
    }
    let l = (-n).exp();
    let mut sums = vec![0.0; sizes.len()];
    for c in cutsets {
        let pts: Vec<RealPoint<D>> = c.entries.iter().map(|(_, p)| p.0.map(|v| v as f64 * l)).collect();
        for (s, k) in sums.iter_mut().zip(box_counts(&pts, sizes)) {
            *s += k as f64;
        }
    }
    let m = cutsets.len() as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / m).collect();
    fit_box_counts(sizes, &means)
}

/// Box counts of each walk's rescaled cut set, averaged per size.
pub struct BoxCountStat {
    pub sizes: Vec<f64>,
    pub n: f64,
}

impl BoxCountStat {
    pub fn new(sizes: &[f64], n: f64) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self { sizes: sizes.to_vec(), n })
    }

    /// Fit on the mean counts.
    pub fn fit(&self, acc: &Bins) -> Result<FitResult> {
        let means: Vec<f64> = acc.0.iter().map(|m| m.mean()).collect();
        fit_box_counts(&self.sizes, &means)
    }
}

impl<const D: usize> PathStatistic<D> for BoxCountStat {
    type Acc = Bins;
    fn init(&self) -> Bins {
        Group(vec![MeanAcc::default(); self.sizes.len()])
    }
    fn score(&self, acc: &mut Bins, scan: &CutScan<'_, D>) {
        let l = (-self.n).exp();
        let sites = scan.path().sites();
        let pts: Vec<RealPoint<D>> = scan.cut_times().map(|t| sites[t].0.map(|v| v as f64 * l)).collect();
        for (m, k) in acc.0.iter_mut().zip(box_counts(&pts, &self.sizes)) {
            m.push(k as f64);
        }
    }
}
