use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cut::CutBallGeometry;
use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticePoint, RealPoint};
use crate::rng::{RngStream, StreamRng};
use crate::walk::LatticePath;

use super::cutball::{ContinuousCutBall, DEFAULT_RHO};
use super::path::BrownianPath;

/// Crossing checks inside a grid step are skipped once
/// `gap_a * gap_b` exceeds this many `dt`.
const BRIDGE_CUTOFF: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    /// Keep every `record_every`-th grid sample of the Brownian path.
    pub record_every: usize,
    /// Detect crossings between grid points with the Brownian-bridge law.
    pub bridge: bool,
    /// Stop early once the running deviation exceeds this value.
    pub deviation_cap: Option<f64>,
    /// Stop once the walk has this many steps, regardless of exits.
    pub max_steps: Option<usize>,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            bridge: true,
            deviation_cap: None,
            max_steps: None,
        }
    }
}

/// A Brownian motion and the simple random walk embedded in it through
/// successive unit crossings of each coordinate.
#[derive(Debug, Clone)]
pub struct CoupledPair<const D: usize> {
    pub log_radius: f64,
    pub dt: f64,
    pub stream: RngStream,
    /// Recorded Brownian samples, stopped at the first recorded sample
    /// outside the exit ball.
    pub bm: BrownianPath<D>,
    /// Grid times of the crossings used by the walk, per coordinate.
    pub crossing_times: Vec<Vec<f64>>,
    pub z_choices: Vec<u8>,
    /// Embedded walk up to its exit step.
    pub walk: LatticePath<D>,
    /// Exit step of the walk (its time is `tau / d`).
    pub tau: usize,
    /// Exit time of the Brownian motion on the full grid.
    pub big_t: f64,
    pub max_deviation: f64,
    /// The run stopped because the deviation cap was exceeded.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledSummary {
    pub n: f64,
    pub dt: f64,
    pub seed: u64,
    pub stream_id: u64,
    pub max_deviation: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
}

impl<const D: usize> CoupledPair<D> {
    /// Summary record; `n` is the scale the pair was requested at.
    pub fn summary(&self, n: f64) -> CoupledSummary {
        CoupledSummary {
            n,
            dt: self.dt,
            seed: self.stream.seed,
            stream_id: self.stream.stream_id,
            max_deviation: self.max_deviation,
            tau: self.tau as f64 / D as f64,
            big_t: self.big_t,
        }
    }
}

struct Coordinate {
    x: f64,
    level: i64,
    /// Crossings not yet consumed by the walk: (new level, grid index).
    pending: VecDeque<(i64, u64)>,
}

struct Engine<const D: usize> {
    dt: f64,
    sd: f64,
    bridge: bool,
    coords: [Coordinate; D],
    noise: StreamRng,
    lead: u64,
    r2: f64,
    big_t: Option<u64>,
    buffer: VecDeque<RealPoint<D>>,
    record_every: u64,
    recorded: Option<Vec<RealPoint<D>>>,
    recorded_exit: bool,
}

impl<const D: usize> Engine<D> {
    fn position(&self) -> RealPoint<D> {
        std::array::from_fn(|k| self.coords[k].x)
    }

    fn advance(&mut self) -> Result<()> {
        self.lead += 1;
        for c in 0..D {
            let z: f64 = self.noise.sample(StandardNormal);
            let co = &mut self.coords[c];
            let a = co.x;
            let b = a + self.sd * z;
            co.x = b;
            let up = (co.level + 1) as f64;
            let lo = (co.level - 1) as f64;
            let step = if b >= up {
                1
            } else if b <= lo {
                -1
            } else if self.bridge {
                let gu = (up - a) * (up - b);
                let gl = (a - lo) * (b - lo);
                let g = gu.min(gl);
                if g < BRIDGE_CUTOFF * self.dt && self.noise.random::<f64>() < (-2.0 * g / self.dt).exp() {
                    if gu < gl {
                        1
                    } else {
                        -1
                    }
                } else {
                    0
                }
            } else {
                0
            };
            if step != 0 {
                if (b - co.level as f64).abs() >= 2.0 {
                    return Err(Error::UnderResolved(format!(
                        "coordinate {c} moved {} units in one grid step",
                        (b - co.level as f64).abs()
                    )));
                }
                co.level += step;
                co.pending.push_back((co.level, self.lead));
            }
        }
        let x = self.position();
        let outside = x.iter().map(|v| v * v).sum::<f64>() >= self.r2;
        if self.big_t.is_none() && outside {
            self.big_t = Some(self.lead);
        }
        self.buffer.push_back(x);
        if let Some(rec) = self.recorded.as_mut() {
            if !self.recorded_exit && self.lead % self.record_every == 0 {
                rec.push(x);
                self.recorded_exit = outside;
            }
        }
        Ok(())
    }
}

/// Recording stride for a pair run to radius `e^n` with grid step `dt`: the
/// recorded path has step about `1e-4` once rescaled to the unit ball.
pub fn recording_stride(n: f64, dt: f64) -> usize {
    ((1e-4 * (2.0 * n).exp() / dt).floor() as usize).max(1)
}

/// Embedding run until both the walk and the Brownian motion have left
/// radius `e^{n+1}`.
pub fn skorokhod_embed<const D: usize>(n: f64, dt: f64, rng: RngStream) -> Result<CoupledPair<D>> {
    if !(n >= 1.0) {
        return Err(invalid("n", "scale must be at least 1"));
    }
    skorokhod_embed_to(n + 1.0, dt, EmbedOptions::default(), rng)
}

/// Embedding run until both processes have left radius `e^{log_radius}`.
pub fn skorokhod_embed_to<const D: usize>(log_radius: f64, dt: f64, opts: EmbedOptions, rng: RngStream) -> Result<CoupledPair<D>> {
    embed(log_radius, dt, opts, true, rng)
}

/// Without `record` the returned walk and Brownian path are placeholders.
fn embed<const D: usize>(log_radius: f64, dt: f64, opts: EmbedOptions, record: bool, rng: RngStream) -> Result<CoupledPair<D>> {
    const { crate::lattice::assert_dim::<D>() };
    if !(dt > 0.0 && dt <= 0.01) {
        return Err(invalid("dt", format!("{dt} is outside (0, 0.01]")));
    }
    if !log_radius.is_finite() || log_radius < 0.0 {
        return Err(invalid("log_radius", "must be finite and nonnegative"));
    }
    if opts.record_every == 0 {
        return Err(invalid("record_every", "must be at least 1"));
    }
    let r = log_radius.exp();
    let mut e = Engine::<D> {
        dt,
        sd: dt.sqrt(),
        bridge: opts.bridge,
        coords: std::array::from_fn(|_| Coordinate { x: 0.0, level: 0, pending: VecDeque::new() }),
        noise: rng.lane(0),
        lead: 0,
        r2: r * r,
        big_t: None,
        buffer: VecDeque::from([[0.0; D]]),
        record_every: opts.record_every as u64,
        recorded: record.then(|| vec![[0.0; D]]),
        recorded_exit: false,
    };
    let mut choices = rng.lane(1);
    let mut site = [0i64; D];
    let mut steps = 0usize;
    let mut tau: Option<usize> = None;
    let mut sites = record.then(|| vec![LatticePoint::<D>::origin()]);
    let mut z_choices = Vec::new();
    let mut crossing_times: Vec<Vec<f64>> = vec![Vec::new(); D];
    let mut max_dev: f64 = 0.0;
    let mut capped = false;
    let mut g: u64 = 0;
    loop {
        let target = ((g as f64) * dt * D as f64 + 1e-9).floor() as usize;
        while steps < target {
            let j = choices.random_range(0..D);
            while e.coords[j].pending.is_empty() {
                e.advance()?;
            }
            let (level, at) = e.coords[j].pending.pop_front().expect("crossing available");
            site[j] = level;
            steps += 1;
            if tau.is_none() {
                if let Some(s) = sites.as_mut() {
                    s.push(LatticePoint(site));
                    z_choices.push(j as u8);
                    crossing_times[j].push(at as f64 * dt);
                }
                if site.iter().map(|&v| (v * v) as f64).sum::<f64>() >= e.r2 {
                    tau = Some(steps);
                }
            }
        }
        while e.lead < g {
            e.advance()?;
        }
        let w = e.buffer.pop_front().expect("buffered sample");
        let d2: f64 = (0..D).map(|k| (site[k] as f64 - w[k]).powi(2)).sum();
        max_dev = max_dev.max(d2.sqrt());
        if let Some(cap) = opts.deviation_cap {
            if max_dev > cap {
                capped = true;
                break;
            }
        }
        if opts.max_steps.is_some_and(|m| steps >= m) {
            break;
        }
        if let (Some(bt), Some(ta)) = (e.big_t, tau) {
            let tau_grid = (ta as f64 / D as f64 / dt - 1e-9).ceil() as u64;
            if g >= bt && g >= tau_grid {
                break;
            }
        }
        g += 1;
    }
    if record && !capped && opts.max_steps.is_none() {
        while !e.recorded_exit {
            e.advance()?;
        }
    }
    let recorded = e.recorded.take().unwrap_or_else(|| vec![[0.0; D]]);
    let mut bm_samples = recorded;
    if bm_samples.len() < 2 {
        bm_samples.push(e.position());
    }
    let exit = e.recorded_exit.then(|| bm_samples.len() - 1);
    let walk_sites = match sites {
        Some(s) if s.len() >= 2 => s,
        _ => vec![LatticePoint::origin(), LatticePoint::origin().step(0)],
    };
    Ok(CoupledPair {
        log_radius,
        dt,
        stream: rng,
        bm: BrownianPath::from_parts(dt * opts.record_every as f64, bm_samples, exit),
        crossing_times,
        z_choices,
        walk: LatticePath::from_sites_unchecked(walk_sites),
        tau: tau.unwrap_or(steps),
        big_t: e.big_t.map_or(f64::NAN, |t| t as f64 * dt),
        max_deviation: max_dev,
        capped,
    })
}

/// Maximum deviation `max |S_t - W_t|` of one coupled run, without
/// recording paths; stops as soon as `cap` is exceeded.
pub fn skorokhod_deviation<const D: usize>(log_radius: f64, dt: f64, cap: Option<f64>, rng: RngStream) -> Result<(f64, bool)> {
    let opts = EmbedOptions {
        deviation_cap: cap,
        ..EmbedOptions::default()
    };
    let p = embed::<D>(log_radius, dt, opts, false, rng)?;
    Ok((p.max_deviation, p.capped))
}

/// Discrete and continuous cut-ball indicators evaluated on the same pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Agreement {
    pub discrete: bool,
    pub continuous: bool,
}

/// Both cut-ball events at `z` on a pair, with the walk and the Brownian
/// path each stopped at radius `e^n`.
pub fn coupled_cutball_agreement<const D: usize>(pair: &CoupledPair<D>, z: &RealPoint<D>, n: f64) -> Result<Agreement> {
    if n > pair.log_radius + 1e-12 {
        return Err(invalid("n", "pair was not run to this scale"));
    }
    let disc = CutBallGeometry::discrete(z, n)?;
    let cont = ContinuousCutBall::upscaled(z, n, DEFAULT_RHO)?;
    cont.check_resolution(pair.bm.dt())?;
    let r = n.exp();
    let walk = truncate_walk(&pair.walk, r);
    let bm = pair.bm.stopped_at(r).ok_or_else(|| Error::Precondition("recorded path never leaves the ball".into()))?;
    Ok(Agreement {
        discrete: disc.evaluate(&walk).occurred,
        continuous: cont.evaluate(bm.samples()).occurred,
    })
}

/// Prefix up to the first site with `|x| >= r`.
pub(crate) fn truncate_walk<const D: usize>(walk: &LatticePath<D>, r: f64) -> LatticePath<D> {
    let r2 = r * r;
    match walk.sites().iter().position(|p| p.norm2() >= r2) {
        Some(i) if i + 1 < walk.sites().len() => LatticePath::from_sites_unchecked(walk.sites()[..=i.max(1)].to_vec()),
        _ => walk.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_is_nearest_neighbor_and_uses_crossing_signs() {
        let p = skorokhod_embed::<2>(1.5, 0.01, RngStream::new(3, 4)).unwrap();
        LatticePath::from_sites(p.walk.sites().to_vec()).unwrap();
        assert_eq!(p.z_choices.len(), p.walk.len());
        for (k, w) in p.walk.sites().windows(2).enumerate() {
            let j = p.z_choices[k] as usize;
            for c in 0..2 {
                let delta = w[1].0[c] - w[0].0[c];
                assert_eq!(delta.abs(), (c == j) as i64);
            }
        }
        for times in &p.crossing_times {
            assert!(times.windows(2).all(|t| t[0] <= t[1]));
        }
        assert!(p.walk.end().norm2().sqrt() >= 2.5f64.exp());
        assert!(p.max_deviation.is_finite());
    }

    #[test]
    fn crossing_levels_match_bm() {
        let dt = 0.01;
        let p = skorokhod_embed_to::<2>(2.0, dt, EmbedOptions::default(), RngStream::new(9, 9)).unwrap();
        let samples = p.bm.samples();
        let mut idx = [0usize; 2];
        for (k, &j) in p.z_choices.iter().enumerate() {
            let j = j as usize;
            let t = p.crossing_times[j][idx[j]];
            idx[j] += 1;
            let g = (t / dt).round() as usize;
            if g < samples.len() {
                let level = p.walk.sites()[k + 1].0[j] as f64;
                assert!((samples[g][j] - level).abs() < 8.0 * dt.sqrt(), "crossing {k}");
            }
        }
    }

    #[test]
    fn deterministic_and_cap_consistent() {
        let a = skorokhod_embed::<3>(1.0, 0.01, RngStream::new(1, 1)).unwrap();
        let b = skorokhod_embed::<3>(1.0, 0.01, RngStream::new(1, 1)).unwrap();
        assert_eq!(a.walk, b.walk);
        assert_eq!(a.max_deviation, b.max_deviation);
        let (full, capped) = skorokhod_deviation::<3>(2.0, 0.01, None, RngStream::new(1, 1)).unwrap();
        assert!(!capped);
        assert_eq!(full, a.max_deviation);
        let (_, hit) = skorokhod_deviation::<3>(2.0, 0.01, Some(full * 0.5), RngStream::new(1, 1)).unwrap();
        assert!(hit);
        let (_, miss) = skorokhod_deviation::<3>(2.0, 0.01, Some(full), RngStream::new(1, 1)).unwrap();
        assert!(!miss);
    }

    #[test]
    fn preconditions() {
        assert!(skorokhod_embed::<2>(0.5, 0.01, RngStream::new(0, 0)).is_err());
        assert!(skorokhod_embed::<2>(2.0, 0.02, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn agreement_is_repeatable() {
        let n = 3.0;
        let opts = EmbedOptions { record_every: 4, ..EmbedOptions::default() };
        let p = skorokhod_embed_to::<2>(n, 0.01, opts, RngStream::new(2, 7)).unwrap();
        let z = [0.5, 0.0];
        let a = coupled_cutball_agreement(&p, &z, n).unwrap();
        assert_eq!(a, coupled_cutball_agreement(&p, &z, n).unwrap());
        assert!(coupled_cutball_agreement(&p, &z, n + 1.0).is_err());
    }
}
