//! `cascade-lab`: command-line front end for `cascade-core`.
//!
//! Exit codes: 0 on success, 2 on configuration errors (the message names
//! the offending key), 1 on any other failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use cascade_core::adversarial::{worst_case_report, DecisionRule};
use cascade_core::analytic::{parse_grid, rate_curve, CurveFamily, RateResult};
use cascade_core::model::{json_config_error, Checkpoints, ConfigFile};
use cascade_core::montecarlo::{
    fit_rate, run_experiment, sweep, FitOptions, FitWindow, TruthFamily, WindowRule,
};
use cascade_core::oracle::{exact_error_series, ratio_parts, ratio_to_f64};
use cascade_core::report::{self, Summary};
use cascade_core::{Error, ExperimentConfig, Schedule, UrnModel};

pub const TOOL: &str = "cascade-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const WORKERS_ENV: &str = "CASCADE_LAB_WORKERS";

#[derive(Debug, Parser)]
#[command(name = TOOL, version, about = "Mismatched-MAP information cascade experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads: a positive integer or `auto`.
    #[arg(long, global = true, env = WORKERS_ENV, default_value = "auto")]
    workers: String,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form learning-rate curves.
    Analytic {
        /// Comma-separated gamma values.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
        /// `start:stop:step`, inclusive.
        #[arg(long, default_value = "0:3:0.01")]
        rho_grid: String,
        /// Harmonic truth coefficients; the optimal matched truth when absent.
        #[arg(long, value_delimiter = ',')]
        c_p: Vec<f64>,
    },
    /// Monte Carlo error series for one config.
    Simulate {
        /// `t_min:t_max`, or `tail` for the last usable decade.
        #[arg(long, default_value = "tail")]
        window: String,
    },
    /// Empirical and analytic rates over a grid (sweep config schema).
    Sweep,
    /// Exact error probabilities (horizon <= 20).
    Oracle,
    /// Fixed-placement report for all structured placements.
    Adversarial {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        players: u64,
        #[arg(long)]
        revealers: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// `majority`, `constant:<q>` or `harmonic:<c>`; repeatable.
        #[arg(long = "rule", default_value = "majority")]
        rules: Vec<String>,
    },
    /// Re-fit the slope of a `simulate` CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "tail")]
        window: String,
        #[arg(long, default_value_t = cascade_core::montecarlo::DEFAULT_COUNT_FLOOR)]
        count_floor: u64,
    },
}

/// Grid experiment file for `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub gammas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub family: TruthFamily,
    pub horizon: u64,
    #[serde(default)]
    pub checkpoints: Checkpoints,
    pub trials: u64,
    pub seed: u64,
    /// `[t_min, t_max]`; the last usable decade when absent.
    #[serde(default)]
    pub window: Option<[u64; 2]>,
}

#[derive(Debug)]
enum Failure {
    Config { key: String, message: String },
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { key, message } => Failure::Config { key, message },
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Failure {
    Failure::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

type CliResult<T> = Result<T, Failure>;

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(Failure::Config { key, message }) => {
            eprintln!("{TOOL}: config error at `{key}`: {message}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("{TOOL}: {msg}");
            1
        }
    }
}

fn parse_workers(s: &str) -> CliResult<usize> {
    match s.trim() {
        "auto" => Ok(0),
        n => n
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| config_err("workers", format!("expected a positive integer or `auto`, got `{n}`"))),
    }
}

fn parse_window(s: &str) -> CliResult<WindowRule> {
    if s == "tail" {
        return Ok(WindowRule::Tail { decades: 1.0 });
    }
    let bad = || config_err("window", format!("expected `t_min:t_max` or `tail`, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (t_min, t_max) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if t_min == 0 || t_min > t_max {
        return Err(bad());
    }
    Ok(WindowRule::Fixed(FitWindow { t_min, t_max }))
}

fn read_config_text(path: Option<&Path>) -> CliResult<String> {
    let path = path.ok_or_else(|| config_err("config", "this command needs --config <path>"))?;
    fs::read_to_string(path).map_err(|e| config_err("config", format!("cannot read {}: {e}", path.display())))
}

fn load_experiment(global: &GlobalOpts) -> CliResult<ExperimentConfig> {
    let text = read_config_text(global.config.as_deref())?;
    let file: ConfigFile = serde_json::from_str(&text).map_err(json_config_error)?;
    let mut cfg = file.resolve()?;
    if let Some(seed) = global.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

/// Write `content` to `out` via a temporary file and rename, or to stdout.
fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    let io = |e: std::io::Error| Failure::Runtime(format!("cannot write output: {e}"));
    match out {
        None => std::io::stdout().lock().write_all(content.as_bytes()).map_err(io),
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(content.as_bytes()).map_err(io)?;
            tmp.as_file().sync_all().map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn csv<T: Serialize + ?Sized>(resolved: &T, columns: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let digest = report::config_digest(resolved)?;
    Ok(report::render_csv(&report::header_comment(TOOL, VERSION, &digest), columns, rows))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Analytic prediction when the assumed schedule is `rho` times the truth.
fn predicted_rate(cfg: &ExperimentConfig) -> Option<RateResult> {
    let Schedule::Scaled { base, rho } = &cfg.assumed else {
        return None;
    };
    if **base != cfg.truth {
        return None;
    }
    let gamma = cfg.urn.gamma();
    let family = match cfg.truth {
        Schedule::OptimalMatched { epsilon: 0.0, .. } => TruthFamily::Optimal,
        Schedule::Harmonic { coefficient } => TruthFamily::Harmonic { c_p: coefficient },
        Schedule::PowerLaw { coefficient, exponent } => TruthFamily::PowerLaw { coefficient, exponent },
        _ => return None,
    };
    family.analytic_rate(gamma, *rho).ok()
}

fn fit_summary(
    series: &cascade_core::montecarlo::ErrorSeries,
    window: WindowRule,
    count_floor: u64,
    seed: u64,
    analytic: Option<RateResult>,
    started: Instant,
) -> CliResult<Summary> {
    let opts = FitOptions {
        count_floor,
        seed,
        ..FitOptions::default()
    };
    let fit = match window.resolve(series, count_floor) {
        None => None,
        Some(w) => match fit_rate(series, w, opts) {
            Ok(f) => Some(f),
            Err(Error::InsufficientData { .. }) => None,
            Err(e) => return Err(e.into()),
        },
    };
    Ok(Summary::new(
        fit.as_ref(),
        analytic.map(|r| (r.value, r.regime_tag.as_str())),
        started.elapsed().as_secs_f64(),
    ))
}

fn parse_rule(spec: &str) -> CliResult<DecisionRule> {
    let bad = |m: &str| config_err("rule", format!("`{spec}`: {m}"));
    if spec == "majority" {
        return Ok(DecisionRule::Majority);
    }
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| bad("expected `majority`, `constant:<q>` or `harmonic:<c>`"))?;
    let v: f64 = value.parse().map_err(|_| bad("not a number"))?;
    let assumed = match kind {
        "constant" => Schedule::constant(v),
        "harmonic" => Schedule::harmonic(v),
        _ => return Err(bad("unknown rule")),
    }
    .map_err(|e| bad(&e.to_string()))?;
    Ok(DecisionRule::MismatchedMap { assumed })
}

fn execute(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    let workers = parse_workers(&g.workers)?;
    let out = g.out.as_deref();
    let started = Instant::now();
    match &cli.command {
        Command::Analytic { gamma, rho_grid, c_p } => {
            for &x in gamma {
                UrnModel::from_gamma(x).map_err(|e| config_err("gamma", e.to_string()))?;
            }
            let rhos = parse_grid(rho_grid).map_err(|e| config_err("rho-grid", e.to_string()))?;
            let family = if c_p.is_empty() {
                CurveFamily::OptimalTruth
            } else {
                CurveFamily::Harmonic(c_p.clone())
            };
            let rows = rate_curve(gamma, &rhos, &family).map_err(|e| config_err("c-p", e.to_string()))?;
            let resolved = json!({"command": "analytic", "gamma": gamma, "rho": rhos, "c_p": c_p});
            let text = match g.format {
                Format::Csv => csv(&resolved, &report::RATE_CURVE_COLUMNS, report::rate_curve_rows(&rows))?,
                Format::Json => to_json(&rows)?,
            };
            emit(out, &text)
        }
        Command::Simulate { window } => {
            let window = parse_window(window)?;
            let cfg = load_experiment(g)?;
            let series = run_experiment(&cfg, workers)?;
            let text = match g.format {
                Format::Csv => csv(&cfg, &report::SERIES_COLUMNS, report::series_rows(&series))?,
                Format::Json => {
                    let s = fit_summary(
                        &series,
                        window,
                        cascade_core::montecarlo::DEFAULT_COUNT_FLOOR,
                        cfg.master_seed,
                        predicted_rate(&cfg),
                        started,
                    )?;
                    to_json(&s)?
                }
            };
            emit(out, &text)
        }
        Command::Sweep => {
            let text = read_config_text(g.config.as_deref())?;
            let mut file: SweepFile = serde_json::from_str(&text).map_err(json_config_error)?;
            if let Some(seed) = g.seed {
                file.seed = seed;
            }
            if file.gammas.is_empty() || file.rhos.is_empty() {
                return Err(config_err("gammas", "gammas and rhos must be non-empty"));
            }
            let first = file.gammas[0];
            let base = ExperimentConfig::new(
                UrnModel::from_gamma(first).map_err(|e| config_err("gammas", e.to_string()))?,
                Schedule::constant(0.0)?,
                Schedule::constant(0.0)?,
                file.horizon,
                &file.checkpoints,
                file.trials,
                file.seed,
            )?;
            for &x in &file.gammas {
                UrnModel::from_gamma(x).map_err(|e| config_err("gammas", e.to_string()))?;
                file.family.schedule(x).map_err(|e| config_err("family", e.to_string()))?;
            }
            let window = match file.window {
                Some([t_min, t_max]) => WindowRule::Fixed(FitWindow { t_min, t_max }),
                None => WindowRule::Tail { decades: 1.0 },
            };
            let opts = FitOptions {
                seed: file.seed,
                ..FitOptions::default()
            };
            let rows = sweep(&base, &file.gammas, &file.rhos, &file.family, window, opts, workers)?;
            let text = match g.format {
                Format::Csv => csv(&file, &report::SWEEP_COLUMNS, report::sweep_rows(&rows))?,
                Format::Json => to_json(&rows)?,
            };
            emit(out, &text)
        }
        Command::Oracle => {
            let cfg = load_experiment(g)?;
            let series = exact_error_series(&cfg, cfg.horizon)?;
            let resolved = json!({"command": "oracle", "urn": cfg.urn, "truth": cfg.truth, "assumed": cfg.assumed, "horizon": cfg.horizon});
            let text = match g.format {
                Format::Csv => csv(&resolved, &report::ORACLE_COLUMNS, report::oracle_rows(&series))?,
                Format::Json => {
                    let rows: Vec<_> = series
                        .iter()
                        .enumerate()
                        .map(|(i, x)| {
                            let (n, d) = ratio_parts(x);
                            json!({"t": i + 1, "p_e_exact_num": n, "p_e_exact_den": d, "p_e_float": ratio_to_f64(x)})
                        })
                        .collect();
                    to_json(&rows)?
                }
            };
            emit(out, &text)
        }
        Command::Adversarial {
            gamma,
            players,
            revealers,
            trials,
            rules,
        } => {
            let urn = UrnModel::from_gamma(*gamma).map_err(|e| config_err("gamma", e.to_string()))?;
            if *players == 0 {
                return Err(config_err("players", "must be >= 1"));
            }
            if revealers > players {
                return Err(config_err("revealers", "cannot exceed players"));
            }
            let rules = rules.iter().map(|r| parse_rule(r)).collect::<CliResult<Vec<_>>>()?;
            let seed = g.seed.unwrap_or(0);
            let rows = worst_case_report(*players, *revealers, &urn, &rules, *trials, seed, workers)?;
            let resolved = json!({"command": "adversarial", "urn": urn, "players": players, "revealers": revealers, "trials": trials, "rules": rules, "seed": seed});
            let text = match g.format {
                Format::Csv => csv(&resolved, &report::ADVERSARIAL_COLUMNS, report::adversarial_rows(&rows))?,
                Format::Json => to_json(&rows)?,
            };
            emit(out, &text)
        }
        Command::Fit {
            input,
            window,
            count_floor,
        } => {
            let window = parse_window(window)?;
            let text = fs::read_to_string(input)
                .map_err(|e| config_err("input", format!("cannot read {}: {e}", input.display())))?;
            let series = report::parse_series_csv(&text)?;
            let s = fit_summary(&series, window, *count_floor, g.seed.unwrap_or(0), None, started)?;
            emit(out, &to_json(&s)?)
        }
    }
}
