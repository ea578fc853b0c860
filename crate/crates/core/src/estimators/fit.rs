use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{invalid, Result};

/// Least-squares line with a percentile bootstrap interval for the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_points: usize,
    pub r_squared: f64,
}

impl FitResult {
    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

impl Serialize for FitResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("FitResult", 5)?;
        st.serialize_field("slope", &self.slope)?;
        st.serialize_field("intercept", &self.intercept)?;
        st.serialize_field("ci", &[self.ci_low, self.ci_high])?;
        st.serialize_field("r2", &self.r_squared)?;
        st.serialize_field("n_points", &self.n_points)?;
        st.end()
    }
}

const BOOTSTRAP_SEED: u64 = 0x5EED_F17;

fn ols(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-300 * n.max(1.0) || pts.iter().all(|p| p.0 == pts[0].0) {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((slope, intercept, r2))
}

/// Ordinary least squares of `y` on `x` with a case-resampling bootstrap.
///
/// Points are sorted before resampling, so the result does not depend on
/// input order. Resamples with a degenerate `x` spread are redrawn.
pub fn fit_exponent(points: &[(f64, f64)], bootstrap_reps: usize) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(invalid("points", format!("need at least 3, got {}", points.len())));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(invalid("points", "values must be finite"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (slope, intercept, r_squared) = ols(&pts).ok_or_else(|| invalid("points", "all x values are equal"))?;
    let mut slopes = Vec::with_capacity(bootstrap_reps);
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut sample = vec![(0.0, 0.0); pts.len()];
    let mut attempts = 0usize;
    while slopes.len() < bootstrap_reps && attempts < 20 * bootstrap_reps + 100 {
        attempts += 1;
        for s in sample.iter_mut() {
            *s = pts[rng.random_range(0..pts.len())];
        }
        if let Some((b, _, _)) = ols(&sample) {
            slopes.push(b);
        }
    }
    let (mut lo, mut hi) = (slope, slope);
    if !slopes.is_empty() {
        slopes.sort_by(f64::total_cmp);
        lo = quantile(&slopes, 0.025);
        hi = quantile(&slopes, 0.975);
    }
    Ok(FitResult {
        slope,
        intercept,
        ci_low: lo.min(slope),
        ci_high: hi.max(slope),
        n_points: pts.len(),
        r_squared,
    })
}

/// Least-squares slope of `ln(mean y)` on `x`, where per-point means are
/// averaged over equal-size batches of trials; the interval resamples whole
/// batches, so it reflects the Monte Carlo error of every point.
pub fn fit_log_means_batched(x: &[f64], batches: &[Vec<f64>], bootstrap_reps: usize) -> Result<FitResult> {
    if batches.len() < 2 {
        return Err(invalid("batches", "need at least 2 batches"));
    }
    if batches.iter().any(|b| b.len() != x.len()) {
        return Err(invalid("batches", "every batch needs one value per point"));
    }
    let log_means = |pick: &mut dyn FnMut() -> usize| -> Option<Vec<(f64, f64)>> {
        let mut sums = vec![0.0; x.len()];
        for _ in 0..batches.len() {
            for (s, v) in sums.iter_mut().zip(&batches[pick()]) {
                *s += v;
            }
        }
        sums.iter().zip(x).map(|(s, &xi)| (*s > 0.0).then(|| (xi, (s / batches.len() as f64).ln()))).collect()
    };
    let mut k = 0;
    let pts = log_means(&mut || {
        k += 1;
        k - 1
    })
    .ok_or_else(|| invalid("batches", "a point has zero mean"))?;
    let full = fit_exponent(&pts, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut slopes = Vec::with_capacity(bootstrap_reps);
    let mut attempts = 0;
    while slopes.len() < bootstrap_reps && attempts < 20 * bootstrap_reps + 100 {
        attempts += 1;
        if let Some(p) = log_means(&mut || rng.random_range(0..batches.len())) {
            if let Some((b, _, _)) = ols(&p) {
                slopes.push(b);
            }
        }
    }
    if slopes.is_empty() {
        return Ok(full);
    }
    slopes.sort_by(f64::total_cmp);
    Ok(FitResult {
        ci_low: quantile(&slopes, 0.025).min(full.slope),
        ci_high: quantile(&slopes, 0.975).max(full.slope),
        ..full
    })
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    let f = pos - i as f64;
    sorted[i] * (1.0 - f) + sorted[j] * f
}
