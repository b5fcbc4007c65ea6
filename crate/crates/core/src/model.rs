//! Urn signal model, revealing-probability schedules and experiment
//! configuration.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};

/// Urn with `alpha` majority and `beta` minority marbles. Only the ratio
/// `gamma = alpha / beta` affects any quantity in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UrnModel {
    alpha: f64,
    beta: f64,
}

impl UrnModel {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && beta > 0.0 && alpha > beta) {
            return Err(Error::domain(format!(
                "urn requires alpha > beta > 0, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::domain(format!("gamma must be > 1, got {gamma}")));
        }
        Ok(Self {
            alpha: gamma,
            beta: 1.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn log_gamma(&self) -> f64 {
        self.gamma().ln()
    }

    /// `alpha / (alpha + beta)`: probability that a private signal matches θ.
    pub fn correct_signal_prob(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// `beta / (alpha + beta)`.
    pub fn wrong_signal_prob(&self) -> f64 {
        self.beta / (self.alpha + self.beta)
    }

    /// Draw a private signal for world state `theta` from a single `u64`.
    #[inline]
    pub fn draw_signal(&self, theta: WorldState, draw: u64) -> WorldState {
        if Bernoulli64::new(self.correct_signal_prob()).sample(draw) {
            theta
        } else {
            theta.other()
        }
    }
}

/// Latent state of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WorldState {
    One,
    Two,
}

impl WorldState {
    pub fn index(self) -> u8 {
        match self {
            WorldState::One => 1,
            WorldState::Two => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            WorldState::One => WorldState::Two,
            WorldState::Two => WorldState::One,
        }
    }

    /// Uniform draw, consuming one word of the stream.
    pub fn uniform(rng: &mut impl RngCore) -> Self {
        if rng.next_u64() >> 63 == 0 {
            WorldState::One
        } else {
            WorldState::Two
        }
    }
}

/// Bernoulli trial on a raw 64-bit draw: true with probability `p`
/// (exactly, up to the 2^-64 grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bernoulli64 {
    threshold: u64,
    always: bool,
}

impl Bernoulli64 {
    pub fn new(p: f64) -> Self {
        if p >= 1.0 {
            Self {
                threshold: u64::MAX,
                always: true,
            }
        } else if p > 0.0 {
            Self {
                threshold: (p * 18_446_744_073_709_551_616.0) as u64,
                always: false,
            }
        } else {
            Self {
                threshold: 0,
                always: false,
            }
        }
    }

    #[inline]
    pub fn sample(self, draw: u64) -> bool {
        self.always || draw < self.threshold
    }
}

/// A fixed sequence of revealing probabilities `p_1, p_2, ...`.
///
/// Every family clips pointwise to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `(1 + epsilon)(1 + gamma) kappa(gamma) / t`, clipped.
    OptimalMatched { gamma: f64, epsilon: f64 },
    /// `rho * base_t`, clipped.
    Scaled { base: Box<Schedule>, rho: f64 },
    /// `C_p / t`, clipped.
    Harmonic { coefficient: f64 },
    /// `C * t^(-c)`, clipped.
    PowerLaw { coefficient: f64, exponent: f64 },
    Constant { q: f64 },
    /// Explicit values; zero past the end.
    Table { values: Vec<f64> },
}

impl Schedule {
    pub fn optimal_matched(gamma: f64, epsilon: f64) -> Result<Self> {
        analytic::kappa(gamma)?;
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::config("epsilon", "must be finite and >= 0"));
        }
        Ok(Schedule::OptimalMatched { gamma, epsilon })
    }

    pub fn scaled(base: Schedule, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::config("rho", "must be finite and >= 0"));
        }
        Ok(Schedule::Scaled {
            base: Box::new(base),
            rho,
        })
    }

    pub fn harmonic(coefficient: f64) -> Result<Self> {
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::config("c_p", "must be finite and > 0"));
        }
        Ok(Schedule::Harmonic { coefficient })
    }

    pub fn power_law(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::config("coefficient", "must be finite and > 0"));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::config("exponent", "must lie in (0, 1]"));
        }
        Ok(Schedule::PowerLaw {
            coefficient,
            exponent,
        })
    }

    pub fn constant(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::config("q", "must lie in [0, 1]"));
        }
        Ok(Schedule::Constant { q })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config(
                format!("values[{i}]"),
                "table entries must lie in [0, 1]",
            ));
        }
        Ok(Schedule::Table { values })
    }

    /// Scheduled probability for player `t` (1-based).
    pub fn value_at(&self, t: u64) -> f64 {
        debug_assert!(t >= 1, "schedules are indexed from t = 1");
        let t = t.max(1);
        let raw = match self {
            Schedule::OptimalMatched { gamma, epsilon } => {
                let kappa = analytic::kappa(*gamma).unwrap_or(f64::INFINITY);
                (1.0 + epsilon) * (1.0 + gamma) * kappa / t as f64
            }
            Schedule::Scaled { base, rho } => rho * base.value_at(t),
            Schedule::Harmonic { coefficient } => coefficient / t as f64,
            Schedule::PowerLaw {
                coefficient,
                exponent,
            } => coefficient * (t as f64).powf(-exponent),
            Schedule::Constant { q } => *q,
            Schedule::Table { values } => values.get((t - 1) as usize).copied().unwrap_or(0.0),
        };
        clip_unit(raw)
    }

    /// `sum_{i <= t} value_at(i)`, Neumaier-compensated.
    pub fn prefix_norm(&self, t: u64) -> f64 {
        let mut acc = KahanSum::default();
        for i in 1..=t {
            acc.add(self.value_at(i));
        }
        acc.total()
    }

    /// Values for `t = 1..=horizon`.
    pub fn materialize(&self, horizon: u64) -> Vec<f64> {
        (1..=horizon).map(|t| self.value_at(t)).collect()
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Schedule::OptimalMatched { .. } => "optimal",
            Schedule::Scaled { .. } => "scaled",
            Schedule::Harmonic { .. } => "harmonic",
            Schedule::PowerLaw { .. } => "power_law",
            Schedule::Constant { .. } => "constant",
            Schedule::Table { .. } => "table",
        }
    }
}

fn clip_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Where error indicators are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Checkpoints {
    Explicit { points: Vec<u64> },
    Geometric { count: usize },
}

impl Default for Checkpoints {
    fn default() -> Self {
        Checkpoints::Geometric { count: 25 }
    }
}

impl Checkpoints {
    /// Sorted, de-duplicated checkpoints within `[1, horizon]`.
    pub fn resolve(&self, horizon: u64) -> Result<Vec<u64>> {
        let mut points = match self {
            Checkpoints::Explicit { points } => {
                if let Some(bad) = points.iter().find(|&&t| t == 0 || t > horizon) {
                    return Err(Error::config(
                        "checkpoints.points",
                        format!("checkpoint {bad} outside [1, {horizon}]"),
                    ));
                }
                points.clone()
            }
            Checkpoints::Geometric { count } => geometric_grid(horizon, *count),
        };
        points.sort_unstable();
        points.dedup();
        if points.is_empty() {
            return Err(Error::config("checkpoints", "no checkpoints"));
        }
        Ok(points)
    }
}

/// `count` log-spaced integers from 1 to `horizon` (fewer after rounding
/// collisions are merged).
pub fn geometric_grid(horizon: u64, count: usize) -> Vec<u64> {
    match count {
        0 => Vec::new(),
        1 => vec![horizon],
        _ => {
            let top = (horizon as f64).ln();
            let mut out: Vec<u64> = (0..count)
                .map(|i| {
                    let x = (top * i as f64 / (count - 1) as f64).exp().round() as u64;
                    x.clamp(1, horizon)
                })
                .collect();
            out.dedup();
            out
        }
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub urn: UrnModel,
    /// True revealing probabilities P.
    pub truth: Schedule,
    /// Probabilities Q assumed by rational players.
    pub assumed: Schedule,
    pub horizon: u64,
    pub checkpoints: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(
        urn: UrnModel,
        truth: Schedule,
        assumed: Schedule,
        horizon: u64,
        checkpoints: &Checkpoints,
        trials: u64,
        master_seed: u64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        if trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        let checkpoints = checkpoints.resolve(horizon)?;
        Ok(Self {
            urn,
            truth,
            assumed,
            horizon,
            checkpoints,
            trials,
            master_seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::config("checkpoints", "no checkpoints"));
        }
        if !self.checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("checkpoints", "must be strictly increasing"));
        }
        if self.checkpoints[0] == 0 || *self.checkpoints.last().unwrap() > self.horizon {
            return Err(Error::config("checkpoints", "must lie within [1, horizon]"));
        }
        Ok(())
    }

    /// Parse the JSON experiment format (unknown keys rejected).
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(json_config_error)?;
        file.resolve()
    }
}

/// Map a serde error to a config error naming the key when possible.
pub fn json_config_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let key = extract_backticked(&msg).unwrap_or_else(|| "<document>".to_string());
    Error::config(key, msg)
}

fn extract_backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

/// On-disk experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub gamma: f64,
    pub truth: ScheduleSpec,
    pub assumed: ScheduleSpec,
    pub horizon: u64,
    #[serde(default)]
    pub checkpoints: Checkpoints,
    pub trials: u64,
    pub seed: u64,
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let urn = UrnModel::from_gamma(self.gamma).map_err(|e| Error::config("gamma", e.to_string()))?;
        let truth = self.truth.build(self.gamma, None).map_err(|e| prefix_key("truth", e))?;
        let assumed = self
            .assumed
            .build(self.gamma, Some(&truth))
            .map_err(|e| prefix_key("assumed", e))?;
        ExperimentConfig::new(
            urn,
            truth,
            assumed,
            self.horizon,
            &self.checkpoints,
            self.trials,
            self.seed,
        )
    }
}

fn prefix_key(prefix: &str, e: Error) -> Error {
    match e {
        Error::Config { key, message } => Error::config(format!("{prefix}.{key}"), message),
        other => Error::config(prefix, other.to_string()),
    }
}

/// Serialized schedule description. `gamma` for the optimal family comes
/// from the enclosing config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Optimal {
        #[serde(default)]
        epsilon: f64,
    },
    Scaled {
        of: BaseRef,
        rho: f64,
    },
    Harmonic {
        c_p: f64,
    },
    PowerLaw {
        coefficient: f64,
        exponent: f64,
    },
    Constant {
        q: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

/// Base of a scaled schedule: the literal `"truth"` or an inline schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseRef {
    Named(String),
    Inline(Box<ScheduleSpec>),
}

impl ScheduleSpec {
    pub fn build(&self, gamma: f64, truth: Option<&Schedule>) -> Result<Schedule> {
        match self {
            ScheduleSpec::Optimal { epsilon } => Schedule::optimal_matched(gamma, *epsilon),
            ScheduleSpec::Scaled { of, rho } => {
                let base = match of {
                    BaseRef::Named(name) if name == "truth" => truth
                        .cloned()
                        .ok_or_else(|| Error::config("of", "\"truth\" is only valid inside `assumed`"))?,
                    BaseRef::Named(other) => {
                        return Err(Error::config("of", format!("unknown base `{other}`")))
                    }
                    BaseRef::Inline(spec) => spec.build(gamma, truth)?,
                };
                Schedule::scaled(base, *rho)
            }
            ScheduleSpec::Harmonic { c_p } => Schedule::harmonic(*c_p),
            ScheduleSpec::PowerLaw {
                coefficient,
                exponent,
            } => Schedule::power_law(*coefficient, *exponent),
            ScheduleSpec::Constant { q } => Schedule::constant(*q),
            ScheduleSpec::Table { values } => Schedule::table(values.clone()),
        }
    }
}
