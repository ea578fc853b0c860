use crate::brownian::{skorokhod_embed_to, CoupledPair, EmbedOptions};
use crate::cut::CutScan;
use crate::error::Result;
use crate::lattice::{BallSpec, LatticePoint};
use crate::parallel::{Accumulate, TrialRunner};
use crate::rng::RngStream;
use crate::walk::sample_srw_until_exit;

use super::stats::MeanAcc;

/// A quantity scored on each walk from the origin stopped at radius `e^n`.
pub trait PathStatistic<const D: usize>: Sync {
    type Acc: Accumulate;
    fn init(&self) -> Self::Acc;
    fn score(&self, acc: &mut Self::Acc, scan: &CutScan<'_, D>);
}

impl<const D: usize, A: PathStatistic<D>, B: PathStatistic<D>> PathStatistic<D> for (A, B) {
    type Acc = (A::Acc, B::Acc);
    fn init(&self) -> Self::Acc {
        (self.0.init(), self.1.init())
    }
    fn score(&self, acc: &mut Self::Acc, scan: &CutScan<'_, D>) {
        self.0.score(&mut acc.0, scan);
        self.1.score(&mut acc.1, scan);
    }
}

impl<const D: usize, S: PathStatistic<D>> PathStatistic<D> for Vec<S> {
    type Acc = Group<S::Acc>;
    fn init(&self) -> Self::Acc {
        Group(self.iter().map(|s| s.init()).collect())
    }
    fn score(&self, acc: &mut Self::Acc, scan: &CutScan<'_, D>) {
        for (s, a) in self.iter().zip(acc.0.iter_mut()) {
            s.score(a, scan);
        }
    }
}

/// Element-wise merged accumulators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Group<A>(pub Vec<A>);

impl<A: Accumulate> Accumulate for Group<A> {
    fn merge(&mut self, other: Self) {
        if self.0.is_empty() {
            self.0 = other.0;
            return;
        }
        for (a, b) in self.0.iter_mut().zip(other.0) {
            a.merge(b);
        }
    }
}

/// Per-bin means.
pub type Bins = Group<MeanAcc>;

/// Sample `trials` exit walks (trial `t` uses `rng.child(t)`) and score each.
pub fn sample_exit_walks<const D: usize, S: PathStatistic<D>>(stat: &S, n: f64, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<S::Acc> {
    sample_exit_walks_from(stat, n, 0, trials, rng, runner)
}

/// Trials `first .. first + trials` of [`sample_exit_walks`]; consecutive
/// batches merged in order reproduce a single run.
pub fn sample_exit_walks_from<const D: usize, S: PathStatistic<D>>(
    stat: &S,
    n: f64,
    first: u64,
    trials: u64,
    rng: RngStream,
    runner: &TrialRunner,
) -> Result<S::Acc> {
    let ball = BallSpec::<D>::centered(n)?;
    runner.run(trials, || stat.init(), |acc, t| {
        let path = sample_srw_until_exit(LatticePoint::origin(), &ball, rng.child(first + t))?;
        let scan = CutScan::new(&path);
        stat.score(acc, &scan);
        Ok(())
    })
}

/// A quantity scored on each coupled pair.
pub trait PairStatistic<const D: usize>: Sync {
    type Acc: Accumulate;
    fn init(&self) -> Self::Acc;
    fn score(&self, acc: &mut Self::Acc, pair: &CoupledPair<D>) -> Result<()>;
}

impl<const D: usize, A: PairStatistic<D>, B: PairStatistic<D>> PairStatistic<D> for (A, B) {
    type Acc = (A::Acc, B::Acc);
    fn init(&self) -> Self::Acc {
        (self.0.init(), self.1.init())
    }
    fn score(&self, acc: &mut Self::Acc, pair: &CoupledPair<D>) -> Result<()> {
        self.0.score(&mut acc.0, pair)?;
        self.1.score(&mut acc.1, pair)
    }
}

/// Generate coupled pairs run to radius `e^n` and score each; pairs are
/// dropped after scoring.
pub fn sample_coupled_pairs<const D: usize, S: PairStatistic<D>>(
    stat: &S,
    n: f64,
    dt: f64,
    opts: EmbedOptions,
    trials: u64,
    rng: RngStream,
    runner: &TrialRunner,
) -> Result<S::Acc> {
    runner.run(trials, || stat.init(), |acc, t| {
        let pair = skorokhod_embed_to::<D>(n, dt, opts, rng.child(t))?;
        stat.score(acc, &pair)
    })
}
