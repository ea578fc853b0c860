use rustc_hash::FxHashSet;

use crate::error::{invalid, Result};
use crate::lattice::LatticePoint;
use crate::parallel::{Accumulate, TrialRunner};
use crate::rng::{RngStream, StreamRng};
use crate::walk::StepSource;

use super::sampling::{Bins, Group};
use super::stats::{MeanAcc, ProportionEstimate};

/// Dense stamp array for small 2-d domains, hash set otherwise.
enum SiteSet<const D: usize> {
    Dense { half: i64, side: usize, stamp: Vec<u32>, cur: u32 },
    Hashed(FxHashSet<LatticePoint<D>>),
}

const DENSE_CELLS: u128 = 1 << 22;

impl<const D: usize> SiteSet<D> {
    fn for_radius(r: f64) -> Self {
        let half = r.ceil() as i64 + 2;
        let side = (2 * half + 1) as usize;
        if (side as u128).pow(D as u32) <= DENSE_CELLS {
            SiteSet::Dense { half, side, stamp: vec![0; side.pow(D as u32)], cur: 1 }
        } else {
            SiteSet::Hashed(FxHashSet::default())
        }
    }

    fn clear(&mut self) {
        match self {
            SiteSet::Dense { stamp, cur, .. } => {
                *cur = cur.wrapping_add(1);
                if *cur == 0 {
                    stamp.fill(0);
                    *cur = 1;
                }
            }
            SiteSet::Hashed(s) => s.clear(),
        }
    }

    #[inline]
    fn slot(half: i64, side: usize, p: &LatticePoint<D>) -> usize {
        let mut i = 0usize;
        for k in 0..D {
            i = i * side + (p.0[k] + half) as usize;
        }
        i
    }

    #[inline]
    fn insert(&mut self, p: LatticePoint<D>) {
        match self {
            SiteSet::Dense { half, side, stamp, cur } => {
                let i = Self::slot(*half, *side, &p);
                stamp[i] = *cur;
            }
            SiteSet::Hashed(s) => {
                s.insert(p);
            }
        }
    }

    #[inline]
    fn contains(&self, p: &LatticePoint<D>) -> bool {
        match self {
            SiteSet::Dense { half, side, stamp, cur } => stamp[Self::slot(*half, *side, p)] == *cur,
            SiteSet::Hashed(s) => s.contains(p),
        }
    }
}

struct Walker<const D: usize> {
    pos: LatticePoint<D>,
    steps: StepSource<StreamRng>,
}

/// Two walks from the origin grown together radius by radius.
struct PairWorkspace<const D: usize> {
    sets: [SiteSet<D>; 2],
}

impl<const D: usize> PairWorkspace<D> {
    fn new(r_max: f64) -> Self {
        Self { sets: [SiteSet::for_radius(r_max), SiteSet::for_radius(r_max)] }
    }

    /// Number of leading radii at which the pair is non-intersecting.
    fn survive(&mut self, radii2: &[f64], rng: RngStream) -> usize {
        let o = LatticePoint::<D>::origin();
        let mut w = [
            Walker { pos: o, steps: StepSource::new(rng.lane(0)) },
            Walker { pos: o, steps: StepSource::new(rng.lane(1)) },
        ];
        for s in self.sets.iter_mut() {
            s.clear();
            s.insert(o);
        }
        for (k, &r2) in radii2.iter().enumerate() {
            for i in 0..2 {
                let (mine, other) = if i == 0 {
                    let (a, b) = self.sets.split_at_mut(1);
                    (&mut a[0], &b[0])
                } else {
                    let (a, b) = self.sets.split_at_mut(1);
                    (&mut b[0], &a[0])
                };
                let wk = &mut w[i];
                while wk.pos.norm2() < r2 {
                    wk.pos = wk.pos.step(wk.steps.next_dir(D));
                    if wk.pos == o || other.contains(&wk.pos) {
                        return k;
                    }
                    mine.insert(wk.pos);
                }
            }
        }
        radii2.len()
    }
}

fn check_scales(ms: &[f64], trials: u64) -> Result<()> {
    if ms.is_empty() || ms.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(invalid("m", "scales must be positive and finite"));
    }
    if ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("m", "scales must be strictly ascending"));
    }
    if trials < 1000 {
        return Err(invalid("trials", format!("{trials} is below 1000")));
    }
    Ok(())
}

/// Non-intersection frequencies at every scale in `ms`, all from the same
/// pairs of walks (each pair is grown outward until it first intersects).
pub fn nonintersection_profile<const D: usize>(ms: &[f64], trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<Vec<ProportionEstimate>> {
    const { crate::lattice::assert_dim::<D>() };
    check_scales(ms, trials)?;
    let radii2: Vec<f64> = ms.iter().map(|m| (2.0 * m).exp()).collect();
    let r_max = ms[ms.len() - 1].exp();
    struct Acc<const D: usize> {
        counts: Vec<u64>,
        ws: Option<PairWorkspace<D>>,
    }
    impl<const D: usize> Accumulate for Acc<D> {
        fn merge(&mut self, o: Self) {
            for (a, b) in self.counts.iter_mut().zip(o.counts) {
                *a += b;
            }
        }
    }
    let acc = runner.run(
        trials,
        || Acc::<D> { counts: vec![0; ms.len()], ws: None },
        |acc, t| {
            let ws = acc.ws.get_or_insert_with(|| PairWorkspace::new(r_max));
            let k = ws.survive(&radii2, rng.child(t));
            for c in &mut acc.counts[..k] {
                *c += 1;
            }
            Ok(())
        },
    )?;
    Ok(acc.counts.iter().map(|&h| ProportionEstimate::binomial(trials, h)).collect())
}

/// Frequency of the event that two walks stopped on leaving radius `e^m`
/// meet only at their common start, which neither revisits.
pub fn estimate_nonintersection<const D: usize>(m: f64, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<ProportionEstimate> {
    Ok(nonintersection_profile::<D>(&[m], trials, rng, runner)?[0])
}

/// Time-indexed variant: `S1[0, k] ∩ S2(0, k] = ∅` for walks of `k` steps,
/// at every `k` in `steps`, from the same pairs.
pub fn nonintersection_fixed_steps<const D: usize>(steps: &[usize], trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<Vec<ProportionEstimate>> {
    const { crate::lattice::assert_dim::<D>() };
    if steps.is_empty() || steps[0] == 0 || steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("steps", "need strictly ascending positive step counts"));
    }
    if trials < 1000 {
        return Err(invalid("trials", format!("{trials} is below 1000")));
    }
    let kmax = steps[steps.len() - 1];
    struct Acc<const D: usize> {
        bins: Bins,
        ws: Option<[SiteSet<D>; 2]>,
    }
    impl<const D: usize> Accumulate for Acc<D> {
        fn merge(&mut self, o: Self) {
            self.bins.merge(o.bins);
        }
    }
    let acc = runner.run(
        trials,
        || Acc::<D> { bins: Group(vec![MeanAcc::default(); steps.len()]), ws: None },
        |acc, t| {
            let s = rng.child(t);
            let o = LatticePoint::<D>::origin();
            let sets = acc.ws.get_or_insert_with(|| [SiteSet::for_radius(kmax as f64), SiteSet::for_radius(kmax as f64)]);
            sets[0].clear();
            sets[1].clear();
            let mut w = [
                Walker { pos: o, steps: StepSource::new(s.lane(0)) },
                Walker { pos: o, steps: StepSource::new(s.lane(1)) },
            ];
            sets[0].insert(o);
            let mut alive = 0usize;
            let mut k = 0usize;
            'grow: for (idx, &target) in steps.iter().enumerate() {
                while k < target {
                    k += 1;
                    for i in 0..2 {
                        let p = w[i].pos.step(w[i].steps.next_dir(D));
                        w[i].pos = p;
                        if sets[1 - i].contains(&p) || (i == 1 && p == o) {
                            break 'grow;
                        }
                        sets[i].insert(p);
                    }
                }
                alive = idx + 1;
            }
            for (idx, m) in acc.bins.0.iter_mut().enumerate() {
                m.push((idx < alive) as u8 as f64);
            }
            Ok(())
        },
    )?;
    let acc = acc.bins;
    Ok(acc.0.iter().map(|m| ProportionEstimate::from_fractions(m, 1)).collect())
}
