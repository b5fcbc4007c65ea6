//! Parallel trial execution, checkpoint error frequencies and slope fits.
//!
//! Every trial owns a generator derived from `(master_seed, trial_index)`,
//! and chunk tallies are integers merged by addition, so results are
//! bit-identical for any worker count.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, RateResult};
use crate::dynamics::Simulator;
use crate::error::{Error, Result};
use crate::model::{ExperimentConfig, Schedule, UrnModel, WorldState};
use crate::rng::{aux_rng, trial_rng};

/// Trials per work unit.
pub const CHUNK_TRIALS: u64 = 1024;
pub const DEFAULT_COUNT_FLOOR: u64 = 50;
pub const MIN_FIT_POINTS: usize = 4;
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Build a pool with `workers` threads (0 = one per core).
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))
}

/// Distinct checkpoint error patterns with multiplicities.
pub type PatternCounts = BTreeMap<Vec<u64>, u64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSeries {
    pub checkpoints: Vec<u64>,
    pub p_t: Vec<f64>,
    pub q_t: Vec<f64>,
    pub error_counts: Vec<u64>,
    pub trials: u64,
    pub p_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub te_total: u64,
    pub te_mean: f64,
    pub te_stderr: f64,
    pub boundary_ties: u64,
    /// Per-trial error bitmasks, kept for the trial-resampling bootstrap.
    #[serde(skip)]
    pub patterns: Option<PatternCounts>,
}

impl ErrorSeries {
    /// Series from raw counts (no pattern information).
    pub fn from_counts(checkpoints: Vec<u64>, error_counts: Vec<u64>, trials: u64) -> Result<Self> {
        if checkpoints.len() != error_counts.len() {
            return Err(Error::config("error_counts", "length differs from checkpoints"));
        }
        if trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if error_counts.iter().any(|&c| c > trials) {
            return Err(Error::config("error_counts", "count exceeds trials"));
        }
        let (p_hat, stderr) = proportions(&error_counts, trials);
        Ok(Self {
            p_t: vec![f64::NAN; checkpoints.len()],
            q_t: vec![f64::NAN; checkpoints.len()],
            checkpoints,
            error_counts,
            trials,
            p_hat,
            stderr,
            te_total: 0,
            te_mean: f64::NAN,
            te_stderr: f64::NAN,
            boundary_ties: 0,
            patterns: None,
        })
    }

    /// Index of checkpoint `t`, if present.
    pub fn position(&self, t: u64) -> Option<usize> {
        self.checkpoints.binary_search(&t).ok()
    }
}

fn proportions(counts: &[u64], trials: u64) -> (Vec<f64>, Vec<f64>) {
    let n = trials as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            (p, (p * (1.0 - p) / n).sqrt())
        })
        .unzip()
}

#[derive(Default)]
struct Tally {
    counts: Vec<u64>,
    te: u64,
    te_sq: u128,
    ties: u64,
    patterns: PatternCounts,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        if self.counts.is_empty() {
            return other;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.te += other.te;
        self.te_sq += other.te_sq;
        self.ties += other.ties;
        for (k, v) in other.patterns {
            *self.patterns.entry(k).or_insert(0) += v;
        }
        self
    }
}

fn run_chunk(sim: &Simulator, seed: u64, lo: u64, hi: u64, keep_patterns: bool) -> Tally {
    let n = sim.checkpoints().len();
    let mut tally = Tally {
        counts: vec![0; n],
        ..Tally::default()
    };
    let mut mask = vec![0u64; sim.mask_words()];
    for trial in lo..hi {
        let mut rng = trial_rng(seed, trial);
        let theta = WorldState::uniform(&mut rng);
        let t = sim.run_masked(theta, &mut rng, &mut mask);
        tally.te += t.total_errors;
        tally.te_sq += (t.total_errors as u128).pow(2);
        tally.ties += t.boundary_ties;
        for (i, c) in tally.counts.iter_mut().enumerate() {
            *c += mask[i / 64] >> (i % 64) & 1;
        }
        if !keep_patterns {
            continue;
        }
        if let Some(v) = tally.patterns.get_mut(mask.as_slice()) {
            *v += 1;
        } else {
            tally.patterns.insert(mask.clone(), 1);
        }
    }
    tally
}

pub(crate) struct TrialTotals {
    pub counts: Vec<u64>,
    pub te: u64,
    pub te_sq: u128,
    pub ties: u64,
    pub patterns: PatternCounts,
}

/// Run trials of `sim` in parallel, seeding trial `i` from `(seed, i)`.
pub(crate) fn run_trials(
    sim: &Simulator,
    trials: u64,
    seed: u64,
    workers: usize,
    keep_patterns: bool,
) -> Result<TrialTotals> {
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let pool = thread_pool(workers)?;
    let tally = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| run_chunk(sim, seed, c * CHUNK_TRIALS, ((c + 1) * CHUNK_TRIALS).min(trials), keep_patterns))
            .reduce(Tally::default, Tally::merge)
    });
    let counts = if tally.counts.is_empty() {
        vec![0; sim.checkpoints().len()]
    } else {
        tally.counts
    };
    Ok(TrialTotals {
        counts,
        te: tally.te,
        te_sq: tally.te_sq,
        ties: tally.ties,
        patterns: tally.patterns,
    })
}

/// Mean and standard error from a sum and a sum of squares.
pub(crate) fn mean_stderr(sum: u64, sum_sq: u128, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = ((sum_sq as f64) - nf * mean * mean).max(0.0) / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Monte Carlo estimate of `P_e,t` at the configured checkpoints.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ErrorSeries> {
    if cfg.checkpoints.is_empty() {
        return Err(Error::config("checkpoints", "no checkpoints"));
    }
    cfg.validate()?;
    let sim = Simulator::new(cfg);
    let tot = run_trials(&sim, cfg.trials, cfg.master_seed, workers, true)?;
    let (p_hat, stderr) = proportions(&tot.counts, cfg.trials);
    let (te_mean, te_stderr) = mean_stderr(tot.te, tot.te_sq, cfg.trials);
    Ok(ErrorSeries {
        p_t: cfg.checkpoints.iter().map(|&t| cfg.truth.value_at(t)).collect(),
        q_t: cfg.checkpoints.iter().map(|&t| cfg.assumed.value_at(t)).collect(),
        checkpoints: cfg.checkpoints.clone(),
        error_counts: tot.counts,
        trials: cfg.trials,
        p_hat,
        stderr,
        te_total: tot.te,
        te_mean,
        te_stderr,
        boundary_ties: tot.ties,
        patterns: Some(tot.patterns),
    })
}

/// Inclusive range of checkpoints used in a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitWindow {
    pub t_min: u64,
    pub t_max: u64,
}

impl FitWindow {
    pub fn all() -> Self {
        Self {
            t_min: 1,
            t_max: u64::MAX,
        }
    }

    pub fn contains(&self, t: u64) -> bool {
        self.t_min <= t && t <= self.t_max
    }

    /// The last `decades` decades before the final checkpoint whose error
    /// count meets `count_floor`.
    pub fn tail(series: &ErrorSeries, count_floor: u64, decades: f64) -> Option<Self> {
        let last = series
            .checkpoints
            .iter()
            .zip(&series.error_counts)
            .rev()
            .find(|(_, &c)| c >= count_floor.max(1))
            .map(|(&t, _)| t)?;
        let t_min = ((last as f64) / 10f64.powf(decades)).ceil().max(1.0) as u64;
        Some(Self { t_min, t_max: last })
    }
}

/// How a sweep chooses each point's fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowRule {
    Fixed(FitWindow),
    /// See [`FitWindow::tail`].
    Tail { decades: f64 },
}

impl WindowRule {
    pub fn resolve(&self, series: &ErrorSeries, count_floor: u64) -> Option<FitWindow> {
        match *self {
            WindowRule::Fixed(w) => Some(w),
            WindowRule::Tail { decades } => FitWindow::tail(series, count_floor, decades),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub count_floor: u64,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            count_floor: DEFAULT_COUNT_FLOOR,
            bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: FitWindow,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Checkpoints that entered the fit.
    pub points: Vec<u64>,
}

impl SlopeFit {
    /// Empirical learning rate `-slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Weighted least squares of `ln p_hat` on `ln t` with weights
/// `count / (1 - p_hat)`, the inverse delta-method variance up to scale.
fn wls(
    checkpoints: &[u64],
    counts: &[u64],
    trials: u64,
    window: FitWindow,
    floor: u64,
) -> Result<(f64, f64, Vec<u64>)> {
    let n = trials as f64;
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let mut pts = Vec::new();
    for (&t, &c) in checkpoints.iter().zip(counts) {
        if !window.contains(t) || c < floor.max(1) {
            continue;
        }
        let p = c as f64 / n;
        let w = c as f64 / (1.0 - p).max(1.0 / n);
        let (x, y) = ((t as f64).ln(), p.ln());
        sw += w;
        sx += w * x;
        sy += w * y;
        pts.push((t, w, x, y));
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            usable: pts.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(_, w, x, y) in &pts {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData {
            usable: 1,
            needed: MIN_FIT_POINTS,
        });
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx, pts.into_iter().map(|p| p.0).collect()))
}

/// Multinomial resample of trials grouped by pattern, returned as
/// per-checkpoint counts.
fn resample_patterns(patterns: &[(&Vec<u64>, u64)], n_cp: usize, trials: u64, rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0u64; n_cp];
    let mut remaining = trials;
    let mut mass_left = trials;
    for (i, (mask, w)) in patterns.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let k = if i + 1 == patterns.len() || *w >= mass_left {
            remaining
        } else {
            let p = *w as f64 / mass_left as f64;
            Binomial::new(remaining, p).map(|b| b.sample(rng)).unwrap_or(0)
        };
        mass_left -= w;
        remaining -= k;
        if k == 0 {
            continue;
        }
        for (j, c) in counts.iter_mut().enumerate() {
            if mask[j / 64] >> (j % 64) & 1 == 1 {
                *c += k;
            }
        }
    }
    counts
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fit `ln p_hat ~ a + b ln t` over the window, with a bootstrap 95% CI.
///
/// With pattern data the bootstrap resamples whole trials; otherwise
/// checkpoint counts are redrawn independently from their binomials.
pub fn fit_rate(series: &ErrorSeries, window: FitWindow, opts: FitOptions) -> Result<SlopeFit> {
    let (slope, intercept, points) = wls(
        &series.checkpoints,
        &series.error_counts,
        series.trials,
        window,
        opts.count_floor,
    )?;
    let mut rng = aux_rng(opts.seed, 0xB007);
    let patterns: Option<Vec<(&Vec<u64>, u64)>> = series
        .patterns
        .as_ref()
        .map(|p| p.iter().map(|(k, v)| (k, *v)).collect());
    let mut slopes = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let counts = match &patterns {
            Some(p) => resample_patterns(p, series.checkpoints.len(), series.trials, &mut rng),
            None => series
                .p_hat
                .iter()
                .map(|&p| {
                    Binomial::new(series.trials, p.clamp(0.0, 1.0))
                        .map(|b| b.sample(&mut rng))
                        .unwrap_or(0)
                })
                .collect(),
        };
        if let Ok((s, _, _)) = wls(&series.checkpoints, &counts, series.trials, window, opts.count_floor) {
            slopes.push(s);
        }
    }
    slopes.sort_by(f64::total_cmp);
    Ok(SlopeFit {
        slope,
        intercept,
        window,
        ci_low: percentile(&slopes, 0.025),
        ci_high: percentile(&slopes, 0.975),
        points,
    })
}

/// Truth family for a sweep; the assumed schedule is always `rho * truth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthFamily {
    Optimal,
    Harmonic { c_p: f64 },
    PowerLaw { coefficient: f64, exponent: f64 },
}

impl TruthFamily {
    pub fn schedule(&self, gamma: f64) -> Result<Schedule> {
        match *self {
            TruthFamily::Optimal => Schedule::optimal_matched(gamma, 0.0),
            TruthFamily::Harmonic { c_p } => Schedule::harmonic(c_p),
            TruthFamily::PowerLaw { coefficient, exponent } => Schedule::power_law(coefficient, exponent),
        }
    }

    /// Predicted rate for `(gamma, rho)`.
    pub fn analytic_rate(&self, gamma: f64, rho: f64) -> Result<RateResult> {
        match *self {
            TruthFamily::Optimal => analytic::rate_optimal(gamma, rho),
            TruthFamily::Harmonic { c_p } => analytic::rate_harmonic(gamma, rho, c_p),
            TruthFamily::PowerLaw { coefficient, exponent } if exponent >= 1.0 => {
                analytic::rate_harmonic(gamma, rho, coefficient)
            }
            TruthFamily::PowerLaw { exponent, .. } => analytic::rate_power_law(gamma, exponent, rho),
        }
    }

    /// Family parameter reported in the `c_p` column.
    pub fn parameter(&self) -> f64 {
        match *self {
            TruthFamily::Optimal => f64::NAN,
            TruthFamily::Harmonic { c_p } => c_p,
            TruthFamily::PowerLaw { exponent, .. } => exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub rho: f64,
    pub parameter: f64,
    /// `None` when the count floor left too few checkpoints.
    pub fit: Option<SlopeFit>,
    pub p_hat_last: f64,
    pub te_mean: f64,
    pub analytic: RateResult,
}

impl SweepRow {
    pub fn empirical_rate(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, SlopeFit::rate)
    }
}

/// Experiment for one grid point, taking horizon, checkpoints, trials and
/// seed from `base`.
pub fn grid_config(base: &ExperimentConfig, family: &TruthFamily, gamma: f64, rho: f64) -> Result<ExperimentConfig> {
    let truth = family.schedule(gamma)?;
    let assumed = Schedule::scaled(truth.clone(), rho)?;
    let cfg = ExperimentConfig {
        urn: UrnModel::from_gamma(gamma)?,
        truth,
        assumed,
        ..base.clone()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Run and fit every `(gamma, rho)` grid point.
pub fn sweep(
    base: &ExperimentConfig,
    gammas: &[f64],
    rhos: &[f64],
    family: &TruthFamily,
    window: WindowRule,
    opts: FitOptions,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(gammas.len() * rhos.len());
    for &gamma in gammas {
        for &rho in rhos {
            let cfg = grid_config(base, family, gamma, rho)?;
            let series = run_experiment(&cfg, workers)?;
            let fit = match window.resolve(&series, opts.count_floor) {
                None => None,
                Some(w) => match fit_rate(&series, w, opts) {
                    Ok(f) => Some(f),
                    Err(Error::InsufficientData { .. }) => None,
                    Err(e) => return Err(e),
                },
            };
            rows.push(SweepRow {
                gamma,
                rho,
                parameter: family.parameter(),
                fit,
                p_hat_last: *series.p_hat.last().unwrap_or(&f64::NAN),
                te_mean: series.te_mean,
                analytic: family.analytic_rate(gamma, rho)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::kappa;
    use crate::model::Checkpoints;

    fn cfg(gamma: f64, truth: Schedule, assumed: Schedule, horizon: u64, cps: Checkpoints, trials: u64) -> ExperimentConfig {
        ExperimentConfig::new(UrnModel::from_gamma(gamma).unwrap(), truth, assumed, horizon, &cps, trials, 7).unwrap()
    }

    #[test]
    fn exact_power_law_slope() {
        let cps = vec![10, 100, 1000, 10_000, 100_000];
        let counts = vec![100_000, 10_000, 1000, 100, 10];
        let s = ErrorSeries::from_counts(cps.clone(), counts, 1_000_000).unwrap();
        let opts = FitOptions {
            count_floor: 1,
            bootstrap: 0,
            seed: 0,
        };
        let f = fit_rate(&s, FitWindow::all(), opts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12, "{}", f.slope);
        assert_eq!(f.points, cps);
    }

    #[test]
    fn tail_window_tracks_last_usable_checkpoint() {
        let s = ErrorSeries::from_counts(vec![1, 10, 100, 1000, 10_000], vec![900, 400, 80, 60, 3], 1000).unwrap();
        assert_eq!(FitWindow::tail(&s, 50, 1.0), Some(FitWindow { t_min: 100, t_max: 1000 }));
        assert_eq!(FitWindow::tail(&s, 1, 2.0), Some(FitWindow { t_min: 100, t_max: 10_000 }));
        assert_eq!(FitWindow::tail(&s, 1000, 1.0), None);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let s = ErrorSeries::from_counts(vec![1, 2, 4, 8, 16], vec![300; 5], 1000).unwrap();
        let f = fit_rate(&s, FitWindow::all(), FitOptions::default()).unwrap();
        assert_eq!(f.slope, 0.0);
        assert!(f.ci_low <= 0.0 && f.ci_high >= 0.0);
    }

    #[test]
    fn count_floor_empties_window() {
        let s = ErrorSeries::from_counts(vec![1, 2, 4, 8, 16], vec![300, 200, 49, 10, 3], 1000).unwrap();
        assert!(matches!(
            fit_rate(&s, FitWindow::all(), FitOptions::default()),
            Err(Error::InsufficientData { usable: 2, .. })
        ));
        let narrow = FitWindow { t_min: 2, t_max: 8 };
        let opts = FitOptions {
            count_floor: 1,
            ..FitOptions::default()
        };
        assert!(matches!(fit_rate(&s, narrow, opts), Err(Error::InsufficientData { usable: 3, .. })));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = cfg(
            3.0,
            Schedule::harmonic(2.0).unwrap(),
            Schedule::scaled(Schedule::harmonic(2.0).unwrap(), 1.5).unwrap(),
            500,
            Checkpoints::Geometric { count: 10 },
            5000,
        );
        let a = run_experiment(&c, 1).unwrap();
        let b = run_experiment(&c, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.patterns, b.patterns);
        let total: u64 = a.patterns.as_ref().unwrap().values().sum();
        assert_eq!(total, 5000);
    }

    #[test]
    fn all_revealers_match_signal_accuracy() {
        let g = 4.0;
        let c = cfg(
            g,
            Schedule::constant(1.0).unwrap(),
            Schedule::constant(1.0).unwrap(),
            50,
            Checkpoints::Explicit { points: vec![1, 10, 50] },
            40_000,
        );
        let s = run_experiment(&c, 1).unwrap();
        let p = 1.0 / (1.0 + g);
        for (&ph, &se) in s.p_hat.iter().zip(&s.stderr) {
            assert!((ph - p).abs() < 4.0 * se, "{ph} vs {p}");
        }
        assert!((s.te_mean - 50.0 * p).abs() < 4.0 * s.te_stderr);
    }

    #[test]
    fn classic_cascade_limit() {
        let c = cfg(
            2.0,
            Schedule::constant(0.0).unwrap(),
            Schedule::constant(0.0).unwrap(),
            1000,
            Checkpoints::Explicit { points: vec![1000] },
            40_000,
        );
        let s = run_experiment(&c, 1).unwrap();
        assert!((s.p_hat[0] - 0.2).abs() < 4.0 * s.stderr[0]);
    }

    #[test]
    fn matched_optimal_respects_lower_bound() {
        let g = 2.0;
        let opt = Schedule::optimal_matched(g, 0.0).unwrap();
        let c = cfg(g, opt.clone(), opt, 1000, Checkpoints::Explicit { points: vec![1000] }, 100_000);
        let s = run_experiment(&c, 1).unwrap();
        let bound = kappa(g).unwrap();
        let rel = s.stderr[0] / s.p_hat[0];
        assert!(1000.0 * s.p_hat[0] >= bound * (1.0 - 4.0 * rel), "{}", 1000.0 * s.p_hat[0]);
    }

    #[test]
    fn bootstrap_interval_brackets_estimate() {
        let c = cfg(
            2.0,
            Schedule::constant(1.0).unwrap(),
            Schedule::constant(1.0).unwrap(),
            64,
            Checkpoints::Geometric { count: 7 },
            20_000,
        );
        let s = run_experiment(&c, 1).unwrap();
        let f = fit_rate(&s, FitWindow::all(), FitOptions::default()).unwrap();
        assert!(f.ci_low <= f.slope && f.slope <= f.ci_high);
        assert!(f.slope.abs() < 0.05);
        let again = fit_rate(&s, FitWindow::all(), FitOptions::default()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn empty_checkpoints_rejected() {
        let mut c = cfg(
            2.0,
            Schedule::constant(0.0).unwrap(),
            Schedule::constant(0.0).unwrap(),
            10,
            Checkpoints::Explicit { points: vec![5] },
            10,
        );
        c.checkpoints.clear();
        assert!(matches!(run_experiment(&c, 1), Err(Error::Config { .. })));
    }

    #[test]
    fn sweep_attaches_analytic_rates() {
        let base = cfg(
            10.0,
            Schedule::constant(0.0).unwrap(),
            Schedule::constant(0.0).unwrap(),
            200,
            Checkpoints::Geometric { count: 8 },
            2000,
        );
        let rows = sweep(
            &base,
            &[10.0],
            &[0.1, 1.0],
            &TruthFamily::Optimal,
            WindowRule::Fixed(FitWindow::all()),
            FitOptions::default(),
            1,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].analytic.value, 0.0);
        assert!((rows[1].analytic.value - 1.0).abs() < 1e-9);
    }
}
