use serde::Serialize;

use crate::parallel::Accumulate;

/// Running sums of a per-trial quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanAcc {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAcc {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum / self.n as f64
    }

    /// Population variance of the pushed values.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.sum_sq / self.n as f64 - m * m).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

impl Accumulate for MeanAcc {
    fn merge(&mut self, o: Self) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }
}

/// Sums for a ratio of two per-trial means sharing the same trials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatioAcc {
    pub num: MeanAcc,
    pub den: MeanAcc,
    pub cross: f64,
}

impl RatioAcc {
    #[inline]
    pub fn push(&mut self, num: f64, den: f64) {
        self.num.push(num);
        self.den.push(den);
        self.cross += num * den;
    }

    /// `mean(num) / mean(den)` and its delta-method standard error.
    pub fn ratio(&self) -> Option<(f64, f64)> {
        let (a, b) = (self.num.mean(), self.den.mean());
        if !(a > 0.0 && b > 0.0) {
            return None;
        }
        let n = self.num.n as f64;
        let cov = self.cross / n - a * b;
        let f = a / b;
        let rel = self.num.variance() / (a * a) + self.den.variance() / (b * b) - 2.0 * cov / (a * b);
        Some((f, f * (rel.max(0.0) / n).sqrt()))
    }
}

impl Accumulate for RatioAcc {
    fn merge(&mut self, o: Self) {
        self.num.merge(o.num);
        self.den.merge(o.den);
        self.cross += o.cross;
    }
}

/// Frequency of an event over `trials` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProportionEstimate {
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    /// Absent when no hits were seen.
    pub stderr: Option<f64>,
}

impl ProportionEstimate {
    pub fn binomial(trials: u64, hits: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            trials,
            hits,
            p_hat: p,
            stderr: (hits > 0).then(|| (p * (1.0 - p) / trials as f64).sqrt()),
        }
    }

    /// Mean of per-trial hit fractions over `images` correlated copies.
    pub fn from_fractions(acc: &MeanAcc, images: usize) -> Self {
        let hits = (acc.sum * images as f64).round() as u64;
        Self {
            trials: acc.n * images as u64,
            hits,
            p_hat: acc.mean(),
            stderr: (hits > 0).then(|| acc.stderr()),
        }
    }

    pub fn is_flagged(&self) -> bool {
        self.stderr.is_none()
    }
}
