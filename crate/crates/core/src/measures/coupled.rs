use serde::Serialize;

use crate::boxes::NiceBox;
use crate::brownian::{coupled_cutball_agreement, CoupledPair, DEFAULT_RHO};
use crate::cut::CutScan;
use crate::error::{invalid, Error, Result};
use crate::estimators::{PairStatistic, RatioAcc};
use crate::exponents::Exponents;
use crate::lattice::RealPoint;
use crate::parallel::Accumulate;

use super::grid::{cutball_measure_in, default_grid_h};
use super::occupation::atom_mass;

/// Cut-ball surrogate scale paired with walk scale `n`.
pub fn surrogate_scale(n: f64) -> f64 {
    n / 4.0
}

/// `(nu_n(V), raw nu~_{n/4}(V))` of one pair, the second with compensator 1.
pub fn box_masses<const D: usize>(pair: &CoupledPair<D>, bx: &NiceBox<D>, n: f64, rho: f64, exps: &Exponents) -> Result<(f64, f64)> {
    if (pair.log_radius - n).abs() > 1e-9 {
        return Err(invalid("n", format!("pair is at scale {}, expected {n}", pair.log_radius)));
    }
    let ranges = bx.lattice_ranges(n);
    let scan = CutScan::new(&pair.walk);
    let count = scan.cut_times().filter(|&t| NiceBox::contains_site(&ranges, &pair.walk.sites()[t])).count();
    let x = count as f64 * atom_mass(n, 1.0, exps);
    let l = n.exp();
    let bm = pair
        .bm
        .stopped_at(l)
        .ok_or_else(|| Error::Precondition("recorded path never leaves the ball".into()))?
        .scaled(1.0 / l, (-2.0 * n).exp());
    let s = surrogate_scale(n);
    let g = cutball_measure_in(&bm, s, default_grid_h(s), rho, exps, &bx.lower(), &bx.upper())?;
    Ok((x, g.mass_in(bx)))
}

/// Records `box_masses` of every pair, in trial order.
pub struct BoxMassStat<const D: usize> {
    pub bx: NiceBox<D>,
    pub n: f64,
    pub rho: f64,
    pub exps: Exponents,
}

impl<const D: usize> BoxMassStat<D> {
    pub fn new(bx: NiceBox<D>, n: f64, exps: Exponents) -> Self {
        Self { bx, n, rho: DEFAULT_RHO, exps }
    }
}

impl<const D: usize> PairStatistic<D> for BoxMassStat<D> {
    type Acc = Vec<(f64, f64)>;
    fn init(&self) -> Self::Acc {
        Vec::new()
    }
    fn score(&self, acc: &mut Self::Acc, pair: &CoupledPair<D>) -> Result<()> {
        acc.push(box_masses(pair, &self.bx, self.n, self.rho, &self.exps)?);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxL2Row {
    pub n: f64,
    pub pairs: usize,
    pub mean_walk: f64,
    pub mean_surrogate_raw: f64,
    /// Compensator making the surrogate's mean match the walk's.
    pub calibration: f64,
    pub l2: f64,
    pub stderr: f64,
    /// Whether the box keeps distance `e^{-n/6}` from the origin and the sphere.
    pub bulk: bool,
}

/// Mean of `(x - c y)^2` with `c = sum x / sum y` calibrated on the same
/// samples. Sums run over the samples in sorted order, so the result does not
/// depend on their order.
pub fn coupled_box_l2_from_samples(samples: &[(f64, f64)], n: f64, bulk: bool) -> Result<BoxL2Row> {
    if samples.len() < 2 {
        return Err(invalid("pairs", "need at least 2 pairs"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let m = sorted.len() as f64;
    let sx: f64 = sorted.iter().map(|p| p.0).sum();
    let sy: f64 = sorted.iter().map(|p| p.1).sum();
    let c = if sy > 0.0 { sx / sy } else { 0.0 };
    let mut sq: Vec<f64> = sorted.iter().map(|p| (p.0 - c * p.1).powi(2)).collect();
    sq.sort_by(f64::total_cmp);
    let mean = sq.iter().sum::<f64>() / m;
    let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(BoxL2Row {
        n,
        pairs: sorted.len(),
        mean_walk: sx / m,
        mean_surrogate_raw: sy / m,
        calibration: c,
        l2: mean,
        stderr: (var / m).sqrt(),
        bulk,
    })
}

fn box_is_bulk<const D: usize>(bx: &NiceBox<D>, n: f64) -> bool {
    let (near, far) = bx.distance_range();
    near.min(1.0 - far) >= (-n / 6.0).exp()
}

/// Calibrated mean square difference of the walk measure and the cut-ball
/// surrogate of the box over coupled pairs at scale `n`.
pub fn coupled_box_l2<const D: usize>(pairs: &[CoupledPair<D>], bx: &NiceBox<D>, n: f64, exps: &Exponents) -> Result<BoxL2Row> {
    let samples = pairs.iter().map(|p| box_masses(p, bx, n, DEFAULT_RHO, exps)).collect::<Result<Vec<_>>>()?;
    coupled_box_l2_from_samples(&samples, n, box_is_bulk(bx, n))
}

/// Row for samples gathered by [`BoxMassStat`].
pub fn box_l2_row<const D: usize>(samples: &[(f64, f64)], bx: &NiceBox<D>, n: f64) -> Result<BoxL2Row> {
    coupled_box_l2_from_samples(samples, n, box_is_bulk(bx, n))
}

/// Counts of the discrete and continuous cut-ball events at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AgreementCounts {
    pub trials: u64,
    pub discrete: u64,
    pub continuous: u64,
    pub both: u64,
    #[serde(skip)]
    ratio: RatioAcc,
}

impl AgreementCounts {
    pub fn push(&mut self, discrete: bool, continuous: bool) {
        self.trials += 1;
        self.discrete += discrete as u64;
        self.continuous += continuous as u64;
        self.both += (discrete && continuous) as u64;
        self.ratio.push((discrete != continuous) as u8 as f64, (discrete || continuous) as u8 as f64);
    }

    pub fn symmetric_difference(&self) -> u64 {
        self.discrete + self.continuous - 2 * self.both
    }

    pub fn union(&self) -> u64 {
        self.discrete + self.continuous - self.both
    }

    /// `P(symmetric difference) / P(union)` with a delta-method standard error.
    pub fn mismatch_ratio(&self) -> Option<(f64, f64)> {
        if self.union() == 0 {
            return None;
        }
        if self.symmetric_difference() == 0 {
            return Some((0.0, 0.0));
        }
        self.ratio.ratio()
    }
}

impl Accumulate for AgreementCounts {
    fn merge(&mut self, o: Self) {
        self.trials += o.trials;
        self.discrete += o.discrete;
        self.continuous += o.continuous;
        self.both += o.both;
        self.ratio.merge(o.ratio);
    }
}

/// Cut-ball agreement at each of `points` on every pair.
pub struct AgreementStat<const D: usize> {
    pub points: Vec<RealPoint<D>>,
    pub n: f64,
}

impl<const D: usize> PairStatistic<D> for AgreementStat<D> {
    type Acc = Vec<AgreementCounts>;
    fn init(&self) -> Self::Acc {
        Vec::new()
    }
    fn score(&self, acc: &mut Self::Acc, pair: &CoupledPair<D>) -> Result<()> {
        if acc.is_empty() {
            acc.resize(self.points.len(), AgreementCounts::default());
        }
        for (z, c) in self.points.iter().zip(acc.iter_mut()) {
            let a = coupled_cutball_agreement(pair, z, self.n)?;
            c.push(a.discrete, a.continuous);
        }
        Ok(())
    }
}

/// Pooled counts over several points.
pub fn pool_agreement(counts: &[AgreementCounts]) -> AgreementCounts {
    let mut out = AgreementCounts::default();
    for c in counts {
        out.merge(*c);
    }
    out
}
