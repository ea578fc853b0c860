use serde::Serialize;

use crate::boxes::NiceBox;
use crate::cut::{CutBallGeometry, CutScan};
use crate::error::{invalid, Result};
use crate::exponents::Exponents;
use crate::lattice::{lattice_symmetries, norm, LatticePoint, RealPoint, Symmetry};
use crate::parallel::{Accumulate, TrialRunner};
use crate::rng::RngStream;
use crate::serde_array;

use super::fit::{fit_log_means_batched, FitResult};
use super::sampling::{sample_exit_walks, sample_exit_walks_from, Bins, Group, PathStatistic};
use super::stats::{MeanAcc, ProportionEstimate, RatioAcc};

/// `min(|z|, 1 - |z|)`.
pub fn bulk_distance<const D: usize>(z: &RealPoint<D>) -> f64 {
    let r = norm(z);
    r.min(1.0 - r)
}

/// Distance at least `e^{-n/6}` from both the origin and the unit sphere.
pub fn is_bulk<const D: usize>(z: &RealPoint<D>, n: f64) -> bool {
    bulk_distance(z) >= (-n / 6.0).exp()
}

/// `floor(e^n z)`, required to be a nonzero site strictly inside radius `e^n`.
pub fn interior_site<const D: usize>(z: &RealPoint<D>, n: f64) -> Result<LatticePoint<D>> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(invalid("n", "scale must be positive"));
    }
    if !(norm(z) < 1.0) {
        return Err(invalid("z", format!("{z:?} is not inside the unit ball")));
    }
    let p = LatticePoint::floor_scaled(z, n.exp());
    if p == LatticePoint::origin() {
        return Err(invalid("z", format!("{z:?} rounds to the origin at scale {n}")));
    }
    if p.norm2().sqrt() >= n.exp() {
        return Err(invalid("z", "site lies outside the walk's ball"));
    }
    Ok(p)
}

/// Distinct images `g(p)` under the lattice symmetries that preserve the
/// walk's law.
pub fn site_images<const D: usize>(p: &LatticePoint<D>) -> Vec<LatticePoint<D>> {
    crate::lattice::orbit(p)
}

/// Fraction of the image sites that are cut points of the walk.
pub struct OnePointStat<const D: usize> {
    pub sites: Vec<LatticePoint<D>>,
}

impl<const D: usize> PathStatistic<D> for OnePointStat<D> {
    type Acc = MeanAcc;
    fn init(&self) -> MeanAcc {
        MeanAcc::default()
    }
    fn score(&self, acc: &mut MeanAcc, scan: &CutScan<'_, D>) {
        let hits = self.sites.iter().filter(|p| scan.cut_time_of(p).is_some()).count();
        acc.push(hits as f64 / self.sites.len() as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRow<const D: usize> {
    #[serde(with = "serde_array")]
    pub z: RealPoint<D>,
    pub n: f64,
    /// Walks sampled.
    pub trials: u64,
    /// Symmetric images scored per walk.
    pub images: usize,
    pub hits: u64,
    pub p_hat: f64,
    pub stderr: Option<f64>,
    pub bulk: bool,
}

impl<const D: usize> PointRow<D> {
    /// `normalization * e^{eta n} * p_hat`.
    pub fn green_estimate(&self, exps: &Exponents, normalization: f64) -> f64 {
        normalization * (exps.eta() * self.n).exp() * self.p_hat
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PointFunctionTable<const D: usize> {
    pub rows: Vec<PointRow<D>>,
}

impl<const D: usize> PointFunctionTable<D> {
    pub const SCHEMA: &'static str = "cutlab.point_function.v1";

    pub fn to_csv(&self) -> String {
        let coords = ["z1", "z2", "z3"][..D].join(",");
        let mut out = format!("# {}\n{coords},n,trials,images,hits,p_hat,stderr,bulk\n", Self::SCHEMA);
        for r in &self.rows {
            let z: Vec<String> = r.z.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                z.join(","),
                r.n,
                r.trials,
                r.images,
                r.hits,
                r.p_hat,
                r.stderr.map_or(String::new(), |s| s.to_string()),
                r.bulk
            ));
        }
        out
    }
}

pub fn point_row<const D: usize>(z: &RealPoint<D>, n: f64, images: usize, acc: &MeanAcc) -> PointRow<D> {
    let est = ProportionEstimate::from_fractions(acc, images);
    PointRow {
        z: *z,
        n,
        trials: acc.n,
        images,
        hits: est.hits,
        p_hat: est.p_hat,
        stderr: est.stderr,
        bulk: is_bulk(z, n),
    }
}

/// Frequency with which `floor(e^n z)` is a cut point of a walk stopped at
/// radius `e^n`, averaged over the symmetric images of the site.
pub fn estimate_one_point<const D: usize>(z: &RealPoint<D>, n: f64, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<PointRow<D>> {
    let site = interior_site(z, n)?;
    let stat = OnePointStat { sites: site_images(&site) };
    let acc = sample_exit_walks(&stat, n, trials, rng, runner)?;
    Ok(point_row(z, n, stat.sites.len(), &acc))
}

/// Smallest separation accepted by the two-point estimators.
pub fn min_separation(n: f64) -> f64 {
    (-0.75 * n).exp()
}

/// Fraction of mapped pairs `(g z_n, g w_n)` that are both cut points.
pub struct TwoPointStat<const D: usize> {
    pub pairs: Vec<(LatticePoint<D>, LatticePoint<D>)>,
}

impl<const D: usize> PathStatistic<D> for TwoPointStat<D> {
    type Acc = MeanAcc;
    fn init(&self) -> MeanAcc {
        MeanAcc::default()
    }
    fn score(&self, acc: &mut MeanAcc, scan: &CutScan<'_, D>) {
        let hits = self.pairs.iter().filter(|(a, b)| scan.cut_time_of(a).is_some() && scan.cut_time_of(b).is_some()).count();
        acc.push(hits as f64 / self.pairs.len() as f64);
    }
}

fn symmetric_pairs<const D: usize>(a: &LatticePoint<D>, b: &LatticePoint<D>) -> Vec<(LatticePoint<D>, LatticePoint<D>)> {
    let mut v: Vec<_> = lattice_symmetries::<D>().iter().map(|g| (g.apply(a), g.apply(b))).collect();
    v.sort();
    v.dedup();
    v
}

/// Joint cut-point frequency of `floor(e^n z)` and `floor(e^n w)`.
pub fn estimate_two_point<const D: usize>(
    z: &RealPoint<D>,
    w: &RealPoint<D>,
    n: f64,
    trials: u64,
    rng: RngStream,
    runner: &TrialRunner,
) -> Result<ProportionEstimate> {
    let a = interior_site(z, n)?;
    let b = interior_site(w, n)?;
    let sep = norm(&std::array::from_fn::<f64, D, _>(|k| z[k] - w[k]));
    if sep < min_separation(n) || a == b {
        return Err(invalid("w", format!("separation {sep:.3e} is below {:.3e}", min_separation(n))));
    }
    let stat = TwoPointStat { pairs: symmetric_pairs(&a, &b) };
    let acc = sample_exit_walks(&stat, n, trials, rng, runner)?;
    Ok(ProportionEstimate::from_fractions(&acc, stat.pairs.len()))
}

/// Pair-correlation bin of the translation-averaged two-point profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPointBin {
    pub r_low: f64,
    pub r_high: f64,
    /// Pair-count weighted geometric mean separation.
    pub r: f64,
    /// Ordered site pairs of the box in this bin.
    pub pairs: f64,
    pub trials: u64,
    pub p_hat: f64,
    pub stderr: f64,
}

/// Two-point function averaged over all site pairs of a box (and of its
/// symmetric images), binned by separation.
pub struct TwoPointProfileStat<const D: usize> {
    ranges: [(i64, i64); D],
    inverses: Vec<Symmetry<D>>,
    edges2: Vec<f64>,
    pairs: Vec<f64>,
    log_r: Vec<f64>,
}

impl<const D: usize> TwoPointProfileStat<D> {
    /// `edges` are unit-scale separations, ascending.
    pub fn new(bx: &NiceBox<D>, n: f64, edges: &[f64]) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("edges", "need at least two ascending bin edges"));
        }
        if edges[0] < min_separation(n) {
            return Err(invalid("edges", format!("first edge is below {:.3e}", min_separation(n))));
        }
        let l = n.exp();
        let ranges = bx.lattice_ranges(n);
        let sides: [i64; D] = std::array::from_fn(|i| ranges[i].1 - ranges[i].0 + 1);
        let edges2: Vec<f64> = edges.iter().map(|e| (e * l).powi(2)).collect();
        let nb = edges.len() - 1;
        let mut pairs = vec![0.0; nb];
        let mut logs = vec![0.0; nb];
        let mut v = [0i64; D];
        for i in 0..D {
            v[i] = -(sides[i] - 1);
        }
        loop {
            let r2: f64 = v.iter().map(|&c| (c * c) as f64).sum();
            if let Some(b) = bin_of(&edges2, r2) {
                let w: f64 = (0..D).map(|i| (sides[i] - v[i].abs()) as f64).product();
                pairs[b] += w;
                logs[b] += w * 0.5 * r2.ln();
            }
            let mut k = 0;
            while k < D {
                if v[k] < sides[k] - 1 {
                    v[k] += 1;
                    break;
                }
                v[k] = -(sides[k] - 1);
                k += 1;
            }
            if k == D {
                break;
            }
        }
        if pairs.iter().any(|&p| p == 0.0) {
            return Err(invalid("edges", "a bin holds no site pairs of the box"));
        }
        let log_r = logs.iter().zip(&pairs).map(|(s, p)| s / p - l.ln()).collect();
        let mut inverses: Vec<Symmetry<D>> = lattice_symmetries::<D>().iter().map(|g| g.inverse()).collect();
        inverses.dedup();
        Ok(Self { ranges, inverses, edges2, pairs, log_r })
    }

    pub fn bins(&self, acc: &Bins, edges: &[f64]) -> Vec<TwoPointBin> {
        acc.0
            .iter()
            .enumerate()
            .map(|(b, m)| TwoPointBin {
                r_low: edges[b],
                r_high: edges[b + 1],
                r: self.log_r[b].exp(),
                pairs: self.pairs[b],
                trials: m.n,
                p_hat: m.mean(),
                stderr: m.stderr(),
            })
            .collect()
    }
}

fn bin_of(edges2: &[f64], r2: f64) -> Option<usize> {
    if r2 < edges2[0] || r2 >= edges2[edges2.len() - 1] {
        return None;
    }
    Some(edges2.partition_point(|&e| e <= r2) - 1)
}

impl<const D: usize> PathStatistic<D> for TwoPointProfileStat<D> {
    type Acc = Bins;
    fn init(&self) -> Bins {
        Group(vec![MeanAcc::default(); self.pairs.len()])
    }
    fn score(&self, acc: &mut Bins, scan: &CutScan<'_, D>) {
        let sites = scan.path().sites();
        let cuts: Vec<LatticePoint<D>> = scan.cut_times().map(|t| sites[t]).collect();
        let mut counts = vec![0.0; self.pairs.len()];
        let mut inside = Vec::new();
        for g in &self.inverses {
            inside.clear();
            inside.extend(cuts.iter().map(|c| g.apply(c)).filter(|p| NiceBox::contains_site(&self.ranges, p)));
            for i in 0..inside.len() {
                for j in i + 1..inside.len() {
                    let r2: f64 = (0..D).map(|k| ((inside[i].0[k] - inside[j].0[k]) as f64).powi(2)).sum();
                    if let Some(b) = bin_of(&self.edges2, r2) {
                        counts[b] += 2.0;
                    }
                }
            }
        }
        let norm = self.inverses.len() as f64;
        for (b, m) in acc.0.iter_mut().enumerate() {
            m.push(counts[b] / (norm * self.pairs[b]));
        }
    }
}

pub fn two_point_profile<const D: usize>(
    bx: &NiceBox<D>,
    n: f64,
    edges: &[f64],
    trials: u64,
    rng: RngStream,
    runner: &TrialRunner,
) -> Result<Vec<TwoPointBin>> {
    let stat = TwoPointProfileStat::new(bx, n, edges)?;
    let acc = sample_exit_walks(&stat, n, trials, rng, runner)?;
    Ok(stat.bins(&acc, edges))
}

/// [`two_point_profile`] plus the fitted slope of `ln p` against `ln r`, with
/// the interval from resampling `batches` equal batches of walks.
pub fn two_point_profile_fit<const D: usize>(
    bx: &NiceBox<D>,
    n: f64,
    edges: &[f64],
    trials: u64,
    batches: u64,
    rng: RngStream,
    runner: &TrialRunner,
) -> Result<(Vec<TwoPointBin>, FitResult)> {
    if batches < 2 || trials % batches != 0 {
        return Err(invalid("batches", format!("{batches} batches do not divide {trials} trials")));
    }
    let stat = TwoPointProfileStat::new(bx, n, edges)?;
    let size = trials / batches;
    let mut total = stat.init();
    let mut per_batch = Vec::with_capacity(batches as usize);
    for b in 0..batches {
        let acc = sample_exit_walks_from(&stat, n, b * size, size, rng, runner)?;
        per_batch.push(acc.0.iter().map(|m| m.mean()).collect::<Vec<f64>>());
        total.merge(acc);
    }
    let bins = stat.bins(&total, edges);
    let x: Vec<f64> = bins.iter().map(|b| b.r.ln()).collect();
    let fit = fit_log_means_batched(&x, &per_batch, 1000)?;
    Ok((bins, fit))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferRatio<const D: usize> {
    pub n: f64,
    #[serde(with = "serde_array")]
    pub z: RealPoint<D>,
    pub trials: u64,
    pub p_ball: f64,
    pub p_point: f64,
    /// Absent when either frequency is zero.
    pub f_hat: Option<f64>,
    pub stderr: Option<f64>,
}

/// Cut-ball and cut-point indicators at the images of one point, scored on
/// the same walks.
pub struct TransferStat<const D: usize> {
    pub sites: Vec<LatticePoint<D>>,
    pub balls: Vec<CutBallGeometry<D>>,
}

impl<const D: usize> TransferStat<D> {
    pub fn new(z: &RealPoint<D>, n: f64) -> Result<Self> {
        let site = interior_site(z, n)?;
        let base = CutBallGeometry::discrete(z, n)?;
        let sites = site_images(&site);
        let balls = sites.iter().map(|s| CutBallGeometry { center: s.to_real(), ..base }).collect();
        Ok(Self { sites, balls })
    }

    pub fn finish(&self, z: &RealPoint<D>, n: f64, acc: &RatioAcc) -> TransferRatio<D> {
        let r = acc.ratio();
        TransferRatio {
            n,
            z: *z,
            trials: acc.num.n,
            p_ball: acc.num.mean(),
            p_point: acc.den.mean(),
            f_hat: r.map(|x| x.0),
            stderr: r.map(|x| x.1),
        }
    }
}

impl<const D: usize> PathStatistic<D> for TransferStat<D> {
    type Acc = RatioAcc;
    fn init(&self) -> RatioAcc {
        RatioAcc::default()
    }
    fn score(&self, acc: &mut RatioAcc, scan: &CutScan<'_, D>) {
        let k = self.sites.len() as f64;
        let points = self.sites.iter().filter(|p| scan.cut_time_of(p).is_some()).count() as f64;
        let balls = self.balls.iter().filter(|b| b.evaluate_scan(scan).occurred).count() as f64;
        acc.push(balls / k, points / k);
    }
}

/// `P(cut ball) / P(cut point)` at `z`, both from the same walks.
pub fn estimate_transfer_ratio<const D: usize>(z: &RealPoint<D>, n: f64, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<TransferRatio<D>> {
    let stat = TransferStat::new(z, n)?;
    let acc = sample_exit_walks(&stat, n, trials, rng, runner)?;
    Ok(stat.finish(z, n, &acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_validation() {
        assert!(interior_site(&[1.2, 0.0], 4.0).is_err());
        assert!(interior_site(&[0.001, 0.0], 4.0).is_err());
        assert!(interior_site(&[0.5, 0.0], 4.0).is_ok());
        assert!(is_bulk(&[0.5, 0.0], 6.0));
        assert!(!is_bulk(&[0.5, 0.0], 4.0));
    }

    #[test]
    fn two_point_rejects_coincident_points() {
        let r = TrialRunner::single();
        assert!(estimate_two_point(&[0.5, 0.0], &[0.5, 0.0], 4.0, 10, RngStream::new(0, 0), &r).is_err());
    }

    #[test]
    fn profile_pair_counts_by_enumeration() {
        let bx = NiceBox::<2>::new([3, 0], 3).unwrap();
        let n: f64 = 4.0;
        let l = n.exp();
        let edges = [3.0 / l, 4.0 / l, 6.0 / l];
        let stat = TwoPointProfileStat::new(&bx, n, &edges).unwrap();
        let r = bx.lattice_ranges(n);
        let sites: Vec<LatticePoint<2>> = (r[0].0..=r[0].1).flat_map(|x| (r[1].0..=r[1].1).map(move |y| LatticePoint::new([x, y]))).collect();
        let mut brute = [0.0; 2];
        for a in &sites {
            for b in &sites {
                let d = ((a.0[0] - b.0[0]).pow(2) + (a.0[1] - b.0[1]).pow(2)) as f64;
                let d = d.sqrt();
                if (3.0..4.0).contains(&d) {
                    brute[0] += 1.0;
                } else if (4.0..6.0).contains(&d) {
                    brute[1] += 1.0;
                }
            }
        }
        assert_eq!(stat.pairs, brute.to_vec());
    }

    #[test]
    fn one_point_is_worker_invariant() {
        let a = estimate_one_point(&[0.5, 0.1], 3.0, 300, RngStream::new(4, 0), &TrialRunner::single()).unwrap();
        let b = estimate_one_point(&[0.5, 0.1], 3.0, 300, RngStream::new(4, 0), &TrialRunner::new(3).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.images, 8);
        assert!(a.hits > 0);
    }

    #[test]
    fn two_point_symmetric_in_arguments() {
        let r = TrialRunner::single();
        let z = [0.45, 0.05];
        let w = [0.55, 0.12];
        let a = estimate_two_point(&z, &w, 3.0, 400, RngStream::new(8, 1), &r).unwrap();
        let b = estimate_two_point(&w, &z, 3.0, 400, RngStream::new(8, 1), &r).unwrap();
        assert_eq!(a, b);
    }
}
