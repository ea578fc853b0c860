use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::lattice::{norm, RealPoint};
use crate::rng::RngStream;

/// Brownian path sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath<const D: usize> {
    dt: f64,
    samples: Vec<RealPoint<D>>,
    exit_index: Option<usize>,
}

impl<const D: usize> BrownianPath<D> {
    pub fn new(dt: f64, samples: Vec<RealPoint<D>>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", "must be positive"));
        }
        if samples.len() < 2 {
            return Err(invalid("samples", "need at least 2 samples"));
        }
        Ok(Self { dt, samples, exit_index: None })
    }

    pub(crate) fn from_parts(dt: f64, samples: Vec<RealPoint<D>>, exit_index: Option<usize>) -> Self {
        Self { dt, samples, exit_index }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[RealPoint<D>] {
        &self.samples
    }

    pub fn start(&self) -> RealPoint<D> {
        self.samples[0]
    }

    pub fn end(&self) -> RealPoint<D> {
        self.samples[self.samples.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    /// Index of the first sample outside the stopping ball, when stopped.
    pub fn exit_index(&self) -> Option<usize> {
        self.exit_index
    }

    pub fn position_at(&self, t: f64) -> Result<RealPoint<D>> {
        let dur = self.duration();
        if !(0.0..=dur).contains(&t) {
            return Err(Error::TimeOutOfRange { t, duration: dur });
        }
        let u = t / self.dt;
        let i = (u.floor() as usize).min(self.samples.len() - 2);
        let f = u - i as f64;
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        Ok(std::array::from_fn(|k| a[k] + f * (b[k] - a[k])))
    }

    /// Space scaled by `space`, time by `time`.
    pub fn scaled(&self, space: f64, time: f64) -> Self {
        Self {
            dt: self.dt * time,
            samples: self.samples.iter().map(|p| std::array::from_fn(|k| p[k] * space)).collect(),
            exit_index: self.exit_index,
        }
    }

    /// Prefix ending at the first sample with `|x| >= radius`, if any.
    pub fn stopped_at(&self, radius: f64) -> Option<Self> {
        let i = self.samples.iter().position(|p| norm(p) >= radius)?;
        let end = i.max(1);
        Some(Self {
            dt: self.dt,
            samples: self.samples[..=end].to_vec(),
            exit_index: Some(end),
        })
    }
}

/// Gaussian increments of variance `dt` per coordinate until the first sample
/// with `|x| >= e^{log_radius}`.
pub fn sample_bm_until_exit<const D: usize>(start: RealPoint<D>, log_radius: f64, dt: f64, rng: RngStream) -> Result<BrownianPath<D>> {
    const { crate::lattice::assert_dim::<D>() };
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("{dt} is not positive")));
    }
    let r = log_radius.exp();
    if !(norm(&start) < r) {
        return Err(Error::Precondition(format!("start {start:?} is not inside radius {r}")));
    }
    let sd = dt.sqrt();
    let mut g = rng.rng();
    let mut x = start;
    let mut samples = vec![x];
    let r2 = r * r;
    loop {
        for c in x.iter_mut() {
            let z: f64 = g.sample(StandardNormal);
            *c += sd * z;
        }
        samples.push(x);
        if x.iter().map(|v| v * v).sum::<f64>() >= r2 {
            break;
        }
    }
    let exit = samples.len() - 1;
    Ok(BrownianPath::from_parts(dt, samples, Some(exit)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_stopped() {
        let a = sample_bm_until_exit([0.0, 0.0], 0.0, 1e-3, RngStream::new(1, 2)).unwrap();
        let b = sample_bm_until_exit([0.0, 0.0], 0.0, 1e-3, RngStream::new(1, 2)).unwrap();
        assert_eq!(a, b);
        let n = a.samples().len();
        assert_eq!(a.exit_index(), Some(n - 1));
        assert!(norm(&a.end()) >= 1.0);
        assert!(a.samples()[..n - 1].iter().all(|p| norm(p) < 1.0));
    }

    #[test]
    fn preconditions() {
        assert!(sample_bm_until_exit([0.0, 0.0], 0.0, 0.0, RngStream::new(0, 0)).is_err());
        assert!(sample_bm_until_exit([0.0, 2.0], 0.0, 1e-3, RngStream::new(0, 0)).is_err());
        assert!(BrownianPath::<2>::new(0.1, vec![[0.0, 0.0]]).is_err());
    }

    #[test]
    fn interpolation_and_scaling() {
        let p = BrownianPath::new(0.5, vec![[0.0, 0.0], [1.0, 2.0], [3.0, 2.0]]).unwrap();
        assert_eq!(p.position_at(0.25).unwrap(), [0.5, 1.0]);
        assert_eq!(p.position_at(1.0).unwrap(), [3.0, 2.0]);
        assert!(p.position_at(1.5).is_err());
        let q = p.scaled(2.0, 4.0);
        assert_eq!(q.dt(), 2.0);
        assert_eq!(q.samples()[1], [2.0, 4.0]);
        let s = p.stopped_at(2.0).unwrap();
        assert_eq!(s.samples().len(), 2);
    }

    #[test]
    fn increments_have_variance_dt() {
        let dt = 0.01;
        let p = sample_bm_until_exit([0.0, 0.0, 0.0], 2.0, dt, RngStream::new(3, 3)).unwrap();
        let incs: Vec<f64> = p.samples().windows(2).flat_map(|w| (0..3).map(move |k| w[1][k] - w[0][k])).collect();
        let var = incs.iter().map(|v| v * v).sum::<f64>() / incs.len() as f64;
        assert!((var / dt - 1.0).abs() < 0.05, "variance ratio {}", var / dt);
    }

    #[test]
    fn exit_half_spaces_balanced() {
        let mut counts = [0usize; 4];
        let trials = 4000;
        for t in 0..trials {
            let p = sample_bm_until_exit([0.0, 0.0], 0.0, 2e-3, RngStream::new(8, t)).unwrap();
            let e = p.end();
            let k = if e[0].abs() > e[1].abs() { (e[0] < 0.0) as usize } else { 2 + (e[1] < 0.0) as usize };
            counts[k] += 1;
        }
        let expect = trials as f64 / 4.0;
        let sd = (trials as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 3.5 * sd, "{counts:?}");
        }
    }
}
