//! One executor per experiment kind. Each returns its output files in memory;
//! writing them is left to the caller.

use std::collections::BTreeMap;

use cutlab_core::brownian::{
    default_dt, is_cut_ball_continuous, recording_stride, sample_bm_until_exit, skorokhod_deviation, ContinuousCutBall, CoupledPair, CoupledSummary,
    EmbedOptions,
};
use cutlab_core::estimators::{
    beurling_escape_estimate, cut_count_moments, estimate_two_point, fit_exponent, gamblers_ruin_check, interior_site, nonintersection_fixed_steps,
    nonintersection_profile, point_row, sample_coupled_pairs, sample_exit_walks, site_images, two_point_profile_fit, Bins, FitResult, Group, MeanAcc,
    OnePointStat, PairStatistic, PointFunctionTable, ProportionEstimate,
};
use cutlab_core::measures::{box_l2_row, cutball_measure, default_grid_h, pool_agreement, AgreementCounts, AgreementStat, BoxCountStat, BoxMassStat};
use cutlab_core::{Exponents, MomentTable, RealPoint, Result, RngStream, TrialRunner};
use serde::Serialize;

use crate::config::{ExperimentConfig, Params};

const BOOTSTRAP_REPS: usize = 1000;
/// Coupling trials are run in blocks of this size so an early stop lands on
/// the same trial for any worker count.
pub const COUPLE_BLOCK: u64 = 100;
/// Share of coupling trials allowed to exceed the deviation threshold.
pub const COUPLE_FAILURE_SHARE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Files produced by one experiment plus row counts keyed `table/scale`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<OutputFile>,
    pub rows: BTreeMap<String, u64>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push(OutputFile {
            name: name.into(),
            bytes: bytes.into(),
        });
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) {
        let mut b = serde_json::to_vec_pretty(v).expect("serializable");
        b.push(b'\n');
        self.add(name, b);
    }

    fn count(&mut self, table: &str, scale: f64, rows: u64) {
        *self.rows.entry(format!("{table}/{scale}")).or_default() += rows;
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|f| f.name == name).map(|f| f.bytes.as_slice())
    }
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(schema: &str, header: &[&str]) -> Self {
        Self {
            text: format!("# cutlab.{schema}.v1\n{}\n", header.join(",")),
        }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn coords(v: &[f64]) -> Vec<String> {
    v.iter().map(|c| c.to_string()).collect()
}

fn coord_names(prefix: &str, d: usize) -> Vec<String> {
    ["x", "y", "z"][..d].iter().map(|c| format!("{prefix}{c}")).collect()
}

fn header<'a>(parts: &'a [Vec<String>], tail: &'a [&'a str]) -> Vec<&'a str> {
    parts.iter().flatten().map(String::as_str).chain(tail.iter().copied()).collect()
}

fn point<const D: usize>(v: &[f64]) -> RealPoint<D> {
    std::array::from_fn(|k| v[k])
}

/// A slope fit next to the value the theory predicts.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub quantity: String,
    pub fit: Option<FitResult>,
    pub expected_slope: f64,
    pub expected_in_ci: Option<bool>,
    /// Why no fit was produced.
    pub note: Option<String>,
}

impl FitReport {
    fn from(quantity: impl Into<String>, fit: Result<FitResult>, expected_slope: f64) -> Self {
        let (fit, note) = match fit {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            quantity: quantity.into(),
            expected_in_ci: fit.map(|f| f.contains(expected_slope)),
            fit,
            expected_slope,
            note,
        }
    }

    /// Fit of `ln y` on `x` over the points with `y > 0`.
    fn log_linear(quantity: impl Into<String>, pts: &[(f64, f64)], expected_slope: f64) -> Self {
        let usable: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).map(|&(x, y)| (x, y.ln())).collect();
        Self::from(quantity, fit_exponent(&usable, BOOTSTRAP_REPS), expected_slope)
    }
}

/// Base stream for scale (or item) `index` of an experiment; trial `t` draws
/// from `.child(t)`.
pub fn stream(cfg: &ExperimentConfig, index: usize) -> RngStream {
    RngStream::for_trial(cfg.seed, cfg.kind.code(), index as u16, 0)
}

/// Run the configured experiment.
pub fn execute(cfg: &ExperimentConfig, runner: &TrialRunner) -> Result<Outputs> {
    match cfg.d {
        2 => execute_dim::<2>(cfg, runner),
        3 => execute_dim::<3>(cfg, runner),
        d => unreachable!("validated dimension {d}"),
    }
}

fn execute_dim<const D: usize>(cfg: &ExperimentConfig, runner: &TrialRunner) -> Result<Outputs> {
    let mut out = Outputs::default();
    let exps = cfg.exponents();
    match &cfg.params {
        Params::Xi { scales, time_indexed } => xi::<D>(cfg, runner, &exps, scales, *time_indexed, &mut out)?,
        Params::OnePoint { scales, points } => one_point::<D>(cfg, runner, &exps, scales, points, &mut out)?,
        Params::TwoPoint {
            scales,
            z,
            w,
            bx,
            edges,
            batches,
        } => {
            if let Some(z) = z {
                two_point_pairs::<D>(cfg, runner, scales, z, w, &mut out)?;
            }
            if let Some(bx) = bx {
                two_point_profile::<D>(cfg, runner, &exps, scales, &bx.nice_box::<D>(), edges, *batches, w.len() + 1, &mut out)?;
            }
        }
        Params::Moments { scales } => moments::<D>(cfg, runner, &exps, scales, &mut out)?,
        Params::Cutball { scales, points, grid, rho } => cutball::<D>(cfg, runner, &exps, scales, points, grid, *rho, &mut out)?,
        Params::Couple {
            scales,
            dt,
            exponent,
            early_stop,
            points,
        } => {
            couple::<D>(cfg, runner, scales, *dt, *exponent, *early_stop, &mut out)?;
            if !points.is_empty() {
                agreement::<D>(cfg, runner, scales, *dt, points, &mut out)?;
            }
        }
        Params::L2box { scales, bx, dt, dump_pairs } => l2box::<D>(cfg, runner, &exps, scales, &bx.nice_box::<D>(), *dt, *dump_pairs, &mut out)?,
        Params::Dimension { scales, sizes } => dimension::<D>(cfg, runner, &exps, scales, sizes, &mut out)?,
        Params::Ruin { k, l } => ruin(cfg, runner, k, l, &mut out)?,
        Params::Beurling { r, x } => beurling(cfg, runner, *r, x, &mut out)?,
    }
    Ok(out)
}

fn proportion_cells(p: &ProportionEstimate) -> [String; 4] {
    [s(p.trials), s(p.hits), s(p.p_hat), opt(p.stderr)]
}

fn xi<const D: usize>(cfg: &ExperimentConfig, runner: &TrialRunner, exps: &Exponents, scales: &[f64], time_indexed: bool, out: &mut Outputs) -> Result<()> {
    let rng = stream(cfg, 0);
    let (col, est, x, expected) = if time_indexed {
        let steps: Vec<usize> = scales.iter().map(|&k| k as usize).collect();
        let est = nonintersection_fixed_steps::<D>(&steps, cfg.trials, rng, runner)?;
        ("steps", est, scales.iter().map(|k| k.ln()).collect::<Vec<_>>(), -exps.xi / 2.0)
    } else {
        let est = nonintersection_profile::<D>(scales, cfg.trials, rng, runner)?;
        ("m", est, scales.to_vec(), -exps.xi)
    };
    let mut csv = Csv::new("nonintersection", &[col, "trials", "hits", "p_hat", "stderr"]);
    for (m, p) in scales.iter().zip(&est) {
        let mut cells = vec![s(m)];
        cells.extend(proportion_cells(p));
        csv.row(&cells);
        out.count("nonintersection", *m, 1);
    }
    out.add("nonintersection.csv", csv.into_bytes());
    let pts: Vec<(f64, f64)> = x.iter().zip(&est).map(|(&x, p)| (x, p.p_hat)).collect();
    let q = if time_indexed { "ln P(A_k) vs ln k" } else { "ln P(A_m) vs m" };
    out.json("fit.json", &FitReport::log_linear(q, &pts, expected));
    Ok(())
}

fn one_point<const D: usize>(
    cfg: &ExperimentConfig,
    runner: &TrialRunner,
    exps: &Exponents,
    scales: &[f64],
    points: &[Vec<f64>],
    out: &mut Outputs,
) -> Result<()> {
    let zs: Vec<RealPoint<D>> = points.iter().map(|p| point::<D>(p)).collect();
    let mut table = PointFunctionTable::<D>::default();
    for (i, &n) in scales.iter().enumerate() {
        let stats = zs
            .iter()
            .map(|z| Ok(OnePointStat { sites: site_images(&interior_site(z, n)?) }))
            .collect::<Result<Vec<_>>>()?;
        let acc: Group<MeanAcc> = sample_exit_walks(&stats, n, cfg.trials, stream(cfg, i), runner)?;
        for ((z, st), a) in zs.iter().zip(&stats).zip(&acc.0) {
            table.rows.push(point_row(z, n, st.sites.len(), a));
        }
        out.count("one_point", n, zs.len() as u64);
    }
    out.add("one_point.csv", table.to_csv());
    let fits: Vec<FitReport> = zs
        .iter()
        .map(|z| {
            let pts: Vec<(f64, f64)> = table.rows.iter().filter(|r| r.z == *z).map(|r| (r.n, r.p_hat)).collect();
            FitReport::log_linear(format!("ln p vs n at {z:?}"), &pts, -exps.eta())
        })
        .collect();
    out.json("fits.json", &fits);
    Ok(())
}

fn two_point_pairs<const D: usize>(cfg: &ExperimentConfig, runner: &TrialRunner, scales: &[f64], z: &[f64], ws: &[Vec<f64>], out: &mut Outputs) -> Result<()> {
    let zp = point::<D>(z);
    let parts = [coord_names("z", D), coord_names("w", D)];
    let mut csv = Csv::new("two_point", &header(&parts, &["n", "separation", "trials", "hits", "p_hat", "stderr"]));
    for (i, &n) in scales.iter().enumerate() {
        for (j, w) in ws.iter().enumerate() {
            let wp = point::<D>(w);
            let p = estimate_two_point(&zp, &wp, n, cfg.trials, stream(cfg, i * (ws.len() + 1) + j), runner)?;
            let sep = (0..D).map(|k| (z[k] - w[k]).powi(2)).sum::<f64>().sqrt();
            let mut cells = coords(z);
            cells.extend(coords(w));
            cells.extend([s(n), s(sep)]);
            cells.extend(proportion_cells(&p));
            csv.row(&cells);
        }
        out.count("two_point", n, ws.len() as u64);
    }
    out.add("two_point.csv", csv.into_bytes());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn two_point_profile<const D: usize>(
    cfg: &ExperimentConfig,
    runner: &TrialRunner,
    exps: &Exponents,
    scales: &[f64],
    bx: &cutlab_core::measures::NiceBox<D>,
    lattice_edges: &[f64],
    batches: u64,
    stride: usize,
    out: &mut Outputs,
) -> Result<()> {
    let mut csv = Csv::new("two_point_profile", &["n", "r_low", "r_high", "r", "pairs", "trials", "p_hat", "stderr"]);
    let mut fits = Vec::new();
    for (i, &n) in scales.iter().enumerate() {
        let l = n.exp();
        let edges: Vec<f64> = lattice_edges.iter().map(|e| e / l).collect();
        let (bins, fit) = two_point_profile_fit(bx, n, &edges, cfg.trials, batches, stream(cfg, i * stride + stride - 1), runner)?;
        for b in &bins {
            csv.row(&[s(n), s(b.r_low), s(b.r_high), s(b.r), s(b.pairs), s(b.trials), s(b.p_hat), s(b.stderr)]);
        }
        out.count("two_point_profile", n, bins.len() as u64);
        fits.push(FitReport::from(format!("ln p vs ln r at n = {n}"), Ok(fit), -exps.eta()));
    }
    out.add("two_point_profile.csv", csv.into_bytes());
    out.json("profile_fits.json", &fits);
    Ok(())
}

fn moments<const D: usize>(cfg: &ExperimentConfig, runner: &TrialRunner, exps: &Exponents, radii: &[f64], out: &mut Outputs) -> Result<()> {
    let mut table = MomentTable::default();
    for (i, &r) in radii.iter().enumerate() {
        table.rows.extend(cut_count_moments::<D>(r, cfg.trials, stream(cfg, i), runner)?);
        out.count("cut_moments", r, 2);
    }
    out.add("cut_moments.csv", table.to_csv());
    let pts: Vec<(f64, f64)> = table.rows.iter().filter(|r| r.k == 1).map(|r| (r.radius.ln(), r.estimate)).collect();
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        fit: FitReport,
        second_moment_ratios: Vec<(f64, f64)>,
    }
    out.json(
        "fit.json",
        &Report {
            fit: FitReport::log_linear("ln E[M] vs ln R", &pts, exps.count_growth()),
            second_moment_ratios: table.moment_ratios(),
        },
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cutball<const D: usize>(
    cfg: &ExperimentConfig,
    runner: &TrialRunner,
    exps: &Exponents,
    scales: &[f64],
    points: &[Vec<f64>],
    grid: &[f64],
    rho: f64,
    out: &mut Outputs,
) -> Result<()> {
    let zs: Vec<RealPoint<D>> = points.iter().map(|p| point::<D>(p)).collect();
    let parts = [coord_names("z", D)];
    let mut csv = Csv::new("cutball", &header(&parts, &["s", "dt", "trials", "hits", "p_hat", "stderr", "weighted"]));
    for (i, &sc) in scales.iter().enumerate() {
        for z in &zs {
            ContinuousCutBall::unit(z, sc, rho)?;
        }
        let dt = default_dt(sc);
        let rng = stream(cfg, i);
        let acc = runner.run(
            cfg.trials,
            || Group(vec![MeanAcc::default(); zs.len()]),
            |acc: &mut Group<MeanAcc>, t| {
                let path = sample_bm_until_exit([0.0; D], 0.0, dt, rng.child(t))?;
                for (z, m) in zs.iter().zip(acc.0.iter_mut()) {
                    m.push(is_cut_ball_continuous(&path, z, sc, rho)?.occurred as u8 as f64);
                }
                Ok(())
            },
        )?;
        for (z, m) in zs.iter().zip(&acc.0) {
            let p = ProportionEstimate::from_fractions(m, 1);
            let mut cells = coords(z);
            cells.extend([s(sc), s(dt)]);
            cells.extend(proportion_cells(&p));
            cells.push(s((exps.eta() * sc).exp() * p.p_hat));
            csv.row(&cells);
        }
        out.count("cutball", sc, zs.len() as u64);
    }
    out.add("cutball.csv", csv.into_bytes());
    for (g, &sg) in grid.iter().enumerate() {
        let path = sample_bm_until_exit([0.0; D], 0.0, default_dt(sg), stream(cfg, scales.len() + g))?;
        let m = cutball_measure(&path, sg, default_grid_h(sg), rho, exps)?;
        out.add(format!("grid_{g}.f32"), m.to_f32_bytes());
        out.json(&format!("grid_{g}.json"), &m.sidecar());
        out.count("grid", sg, 1);
    }
    Ok(())
}

/// Deviation summary of one coupling scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupleRow {
    pub n: f64,
    pub threshold: f64,
    pub trials: u64,
    pub completed: u64,
    pub within: u64,
    pub stopped_early: bool,
    /// Median of the recorded deviations; runs cut at the threshold record
    /// their deviation at the cut.
    pub median_deviation: f64,
    pub max_deviation: f64,
}

impl CoupleRow {
    pub fn fraction_within(&self) -> f64 {
        self.within as f64 / self.completed as f64
    }

    pub fn meets_share(&self) -> bool {
        !self.stopped_early && self.completed == self.trials && self.trials - self.within <= allowance(self.trials)
    }
}

fn allowance(trials: u64) -> u64 {
    (COUPLE_FAILURE_SHARE * trials as f64).floor() as u64
}

/// Coupling deviations at scale `n`; with `early_stop` a run stops once more
/// trials have failed than the allowed share permits.
pub fn couple_scale<const D: usize>(n: f64, dt: f64, exponent: f64, early_stop: bool, trials: u64, rng: RngStream, runner: &TrialRunner) -> Result<CoupleRow> {
    let threshold = (exponent * n).exp();
    let cap = early_stop.then_some(threshold);
    let mut devs: Vec<f64> = Vec::new();
    let mut failures = 0;
    let mut stopped = false;
    let mut start = 0;
    while start < trials {
        let len = COUPLE_BLOCK.min(trials - start);
        let block: Vec<f64> = runner.run(len, Vec::new, |acc: &mut Vec<f64>, t| {
            acc.push(skorokhod_deviation::<D>(n, dt, cap, rng.child(start + t))?.0);
            Ok(())
        })?;
        failures += block.iter().filter(|&&v| v > threshold).count() as u64;
        devs.extend(block);
        start += len;
        if early_stop && failures > allowance(trials) && start < trials {
            stopped = true;
            break;
        }
    }
    let completed = devs.len() as u64;
    devs.sort_by(f64::total_cmp);
    Ok(CoupleRow {
        n,
        threshold,
        trials,
        completed,
        within: completed - failures,
        stopped_early: stopped,
        median_deviation: devs[devs.len() / 2],
        max_deviation: devs[devs.len() - 1],
    })
}

fn couple<const D: usize>(cfg: &ExperimentConfig, runner: &TrialRunner, scales: &[f64], dt: f64, exponent: f64, early_stop: bool, out: &mut Outputs) -> Result<()> {
    let mut csv = Csv::new(
        "coupling",
        &["n", "dt", "threshold", "trials", "completed", "within", "fraction_within", "stopped_early", "median_deviation", "max_deviation"],
    );
    for (i, &n) in scales.iter().enumerate() {
        let r = couple_scale::<D>(n, dt, exponent, early_stop, cfg.trials, stream(cfg, i), runner)?;
        csv.row(&[
            s(n),
            s(dt),
            s(r.threshold),
            s(r.trials),
            s(r.completed),
            s(r.within),
            s(r.fraction_within()),
            s(r.stopped_early),
            s(r.median_deviation),
            s(r.max_deviation),
        ]);
        out.count("coupling", n, 1);
    }
    out.add("coupling.csv", csv.into_bytes());
    Ok(())
}

/// Embedding options keeping enough of the Brownian path for cut-ball tests
/// at scale `n`.
pub fn recorded_options(n: f64, dt: f64) -> EmbedOptions {
    EmbedOptions {
        record_every: recording_stride(n, dt),
        ..EmbedOptions::default()
    }
}

fn agreement_cells(c: &AgreementCounts) -> Vec<String> {
    let m = c.mismatch_ratio();
    vec![
        s(c.trials),
        s(c.discrete),
        s(c.continuous),
        s(c.both),
        s(c.symmetric_difference()),
        s(c.union()),
        opt(m.map(|x| x.0)),
        opt(m.map(|x| x.1)),
    ]
}

fn agreement<const D: usize>(cfg: &ExperimentConfig, runner: &TrialRunner, scales: &[f64], dt: f64, points: &[Vec<f64>], out: &mut Outputs) -> Result<()> {
    let zs: Vec<RealPoint<D>> = points.iter().map(|p| point::<D>(p)).collect();
    let parts = [coord_names("z", D)];
    let tail = ["n", "trials", "discrete", "continuous", "both", "sym_diff", "union", "mismatch", "stderr"];
    let mut csv = Csv::new("cutball_agreement", &header(&parts, &tail));
    for (i, &n) in scales.iter().enumerate() {
        let stat = AgreementStat { points: zs.clone(), n };
        let counts = sample_coupled_pairs(&stat, n, dt, recorded_options(n, dt), cfg.trials, stream(cfg, scales.len() + i), runner)?;
        for (z, c) in zs.iter().zip(&counts) {
            let mut cells = coords(z);
            cells.push(s(n));
            cells.extend(agreement_cells(c));
            csv.row(&cells);
        }
        let mut cells = vec![String::from("pooled"); D];
        cells.push(s(n));
        cells.extend(agreement_cells(&pool_agreement(&counts)));
        csv.row(&cells);
        out.count("cutball_agreement", n, zs.len() as u64 + 1);
    }
    out.add("cutball_agreement.csv", csv.into_bytes());
    Ok(())
}

struct SummaryStat {
    n: f64,
}

impl<const D: usize> PairStatistic<D> for SummaryStat {
    type Acc = Vec<CoupledSummary>;
    fn init(&self) -> Self::Acc {
        Vec::new()
    }
    fn score(&self, acc: &mut Self::Acc, pair: &CoupledPair<D>) -> Result<()> {
        acc.push(pair.summary(self.n));
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn l2box<const D: usize>(
    cfg: &ExperimentConfig,
    runner: &TrialRunner,
    exps: &Exponents,
    scales: &[f64],
    bx: &cutlab_core::measures::NiceBox<D>,
    dt: f64,
    dump_pairs: u64,
    out: &mut Outputs,
) -> Result<()> {
    let mut csv = Csv::new(
        "box_l2",
        &["n", "pairs", "mean_walk", "mean_surrogate_raw", "calibration", "l2", "stderr", "bulk"],
    );
    let mut dump = String::new();
    for (i, &n) in scales.iter().enumerate() {
        let stat = (BoxMassStat::new(*bx, n, *exps), SummaryStat { n });
        let (samples, summaries) = sample_coupled_pairs(&stat, n, dt, recorded_options(n, dt), cfg.trials, stream(cfg, i), runner)?;
        let r = box_l2_row(&samples, bx, n)?;
        csv.row(&[
            s(n),
            s(r.pairs),
            s(r.mean_walk),
            s(r.mean_surrogate_raw),
            s(r.calibration),
            s(r.l2),
            s(r.stderr),
            s(r.bulk),
        ]);
        out.count("box_l2", n, 1);
        for sm in summaries.iter().take(dump_pairs as usize) {
            dump.push_str(&serde_json::to_string(sm).expect("serializable"));
            dump.push('\n');
        }
    }
    out.add("box_l2.csv", csv.into_bytes());
    if dump_pairs > 0 {
        out.add("pairs.jsonl", dump);
    }
    Ok(())
}

fn dimension<const D: usize>(cfg: &ExperimentConfig, runner: &TrialRunner, exps: &Exponents, scales: &[f64], sizes: &[f64], out: &mut Outputs) -> Result<()> {
    let mut csv = Csv::new("box_counts", &["n", "size", "trials", "mean_count", "stderr"]);
    let mut fits = Vec::new();
    for (i, &n) in scales.iter().enumerate() {
        let stat = BoxCountStat::new(sizes, n)?;
        let acc: Bins = sample_exit_walks::<D, _>(&stat, n, cfg.trials, stream(cfg, i), runner)?;
        for (e, m) in sizes.iter().zip(&acc.0) {
            csv.row(&[s(n), s(e), s(m.n), s(m.mean()), s(m.stderr())]);
        }
        out.count("box_counts", n, sizes.len() as u64);
        fits.push(FitReport::from(format!("ln N vs ln(1/size) at n = {n}"), stat.fit(&acc), exps.delta()));
    }
    out.add("box_counts.csv", csv.into_bytes());
    out.json("fits.json", &fits);
    Ok(())
}

fn ruin(cfg: &ExperimentConfig, runner: &TrialRunner, ks: &[f64], ls: &[f64], out: &mut Outputs) -> Result<()> {
    let mut csv = Csv::new("ruin", &["d", "k", "l", "trials", "hits", "p_hat", "stderr", "p_formula", "z_score"]);
    for (i, (&k, &l)) in ks.iter().zip(ls).enumerate() {
        let r = gamblers_ruin_check(k, l, cfg.d, cfg.trials, stream(cfg, i), runner)?;
        let mut cells = vec![s(cfg.d), s(k), s(l)];
        cells.extend(proportion_cells(&r.estimate));
        cells.extend([s(r.p_formula), s(r.z_score())]);
        csv.row(&cells);
        out.count("ruin", i as f64, 1);
    }
    out.add("ruin.csv", csv.into_bytes());
    Ok(())
}

fn beurling(cfg: &ExperimentConfig, runner: &TrialRunner, r: f64, xs: &[f64], out: &mut Outputs) -> Result<()> {
    let mut csv = Csv::new("beurling", &["x", "r", "trials", "hits", "p_hat", "stderr", "sqrt_ratio", "scaled"]);
    let mut pts = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let p = beurling_escape_estimate::<2>(x, r, cfg.trials, stream(cfg, i), runner)?;
        let q = (x.round() / r.exp()).sqrt();
        let mut cells = vec![s(x), s(r)];
        cells.extend(proportion_cells(&p));
        cells.extend([s(q), s(p.p_hat / q)]);
        csv.row(&cells);
        pts.push((x.round().ln(), p.p_hat));
        out.count("beurling", x, 1);
    }
    out.add("beurling.csv", csv.into_bytes());
    out.json("fit.json", &FitReport::log_linear("ln P(escape) vs ln x", &pts, 0.5));
    Ok(())
}
