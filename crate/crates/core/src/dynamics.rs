//! One trajectory of the sequential decision process.
//!
//! Player `t` is a revealer with probability `p_t` (announces its private
//! signal); otherwise it applies the MAP rule computed under the assumed
//! schedule Q. The public state is the assumed log-likelihood ratio
//! `log R_t`, stored as `k * log(gamma) + c` so that the common exact
//! `gamma^{+-1}` factors never touch floating point.

use rand::RngCore;

use crate::analytic::log_cascade_factor;
use crate::model::{Bernoulli64, ExperimentConfig, UrnModel, WorldState};

/// Below this magnitude the float correction `c` is treated as zero.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Position of `R_{t-1}` relative to the band `[beta/alpha, alpha/beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Low,
    Mid,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CascadeState {
    /// Number of players that have acted.
    pub t: u64,
    /// Net count of exact `gamma^{+-1}` factors in `R_t`.
    pub k: i64,
    /// Accumulated log of extreme-regime correction factors.
    pub c: f64,
}

impl CascadeState {
    pub fn initial() -> Self {
        Self::default()
    }

    pub fn log_ratio(&self, log_gamma: f64) -> f64 {
        self.k as f64 * log_gamma + self.c
    }

    /// Regime plus whether a floating-point boundary coincidence was
    /// resolved into the (inclusive) middle band.
    #[inline]
    pub fn classify(&self, log_gamma: f64) -> (Regime, bool) {
        if self.c.abs() < TIE_TOLERANCE {
            let regime = if self.k < -1 {
                Regime::Low
            } else if self.k > 1 {
                Regime::High
            } else {
                Regime::Mid
            };
            return (regime, false);
        }
        let x = self.log_ratio(log_gamma);
        if (x - log_gamma).abs() <= TIE_TOLERANCE || (x + log_gamma).abs() <= TIE_TOLERANCE {
            (Regime::Mid, true)
        } else if x < -log_gamma {
            (Regime::Low, false)
        } else if x > log_gamma {
            (Regime::High, false)
        } else {
            (Regime::Mid, false)
        }
    }
}

pub fn regime_of(state: &CascadeState, urn: &UrnModel) -> Regime {
    state.classify(urn.log_gamma()).0
}

/// MAP decision of a rational player; ties in the middle band follow the
/// private signal.
#[inline]
pub fn rational_decision(regime: Regime, signal: WorldState) -> WorldState {
    match regime {
        Regime::Low => WorldState::Two,
        Regime::Mid => signal,
        Regime::High => WorldState::One,
    }
}

/// Update applied when a decision agrees with an extreme regime
/// (Low with z = 2, High with z = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Confirm {
    /// `q = 0`: both hypotheses predict the decision surely; no change.
    Frozen,
    /// `q = 1`: the factor is exactly `gamma^{-+1}`.
    Exact,
    /// `|log factor|` for `0 < q < 1`.
    Log(f64),
}

impl Confirm {
    pub(crate) fn from_q(gamma: f64, q: f64) -> Self {
        if q <= 0.0 {
            Confirm::Frozen
        } else if q >= 1.0 {
            Confirm::Exact
        } else {
            Confirm::Log(log_cascade_factor(gamma, q))
        }
    }
}

#[inline]
fn apply_update(state: &mut CascadeState, regime: Regime, z: WorldState, confirm: Confirm) {
    use WorldState::{One, Two};
    match (regime, z) {
        (Regime::Mid, One) | (Regime::Low, One) => state.k += 1,
        (Regime::Mid, Two) | (Regime::High, Two) => state.k -= 1,
        (Regime::Low, Two) => match confirm {
            Confirm::Frozen => {}
            Confirm::Exact => state.k -= 1,
            Confirm::Log(l) => state.c -= l,
        },
        (Regime::High, One) => match confirm {
            Confirm::Frozen => {}
            Confirm::Exact => state.k += 1,
            Confirm::Log(l) => state.c += l,
        },
    }
    state.t += 1;
}

/// Multiply `R` by the assumed-likelihood ratio of decision `z` under `q_t`.
pub fn assumed_update(
    state: &CascadeState,
    regime: Regime,
    z: WorldState,
    q: f64,
    urn: &UrnModel,
) -> CascadeState {
    let mut next = *state;
    apply_update(&mut next, regime, z, Confirm::from_q(urn.gamma(), q));
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub decision: WorldState,
    pub was_revealer: bool,
    pub private_signal: WorldState,
    pub correct: bool,
    /// Regime of the state the player acted on.
    pub regime: Regime,
    pub boundary_tie: bool,
}

/// Who reveals at a given step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Reveal {
    Random(Bernoulli64),
    /// Fixed placement; the draw is still consumed.
    Forced(bool),
}

impl Reveal {
    #[inline]
    fn sample(self, draw: u64) -> bool {
        match self {
            Reveal::Random(b) => b.sample(draw),
            Reveal::Forced(v) => v,
        }
    }
}

/// Draw order per step: revealer word, then signal word.
#[inline(always)]
pub(crate) fn advance(
    state: &mut CascadeState,
    theta: WorldState,
    reveal: Reveal,
    signal: Bernoulli64,
    confirm: Confirm,
    log_gamma: f64,
    rng: &mut impl RngCore,
) -> StepOutcome {
    let was_revealer = reveal.sample(rng.next_u64());
    let private_signal = if signal.sample(rng.next_u64()) {
        theta
    } else {
        theta.other()
    };
    let (regime, boundary_tie) = state.classify(log_gamma);
    let decision = if was_revealer {
        private_signal
    } else {
        rational_decision(regime, private_signal)
    };
    apply_update(state, regime, decision, confirm);
    StepOutcome {
        decision,
        was_revealer,
        private_signal,
        correct: decision == theta,
        regime,
        boundary_tie,
    }
}

/// One step with true revealing probability `p` and assumed `q`.
pub fn step(
    state: &CascadeState,
    theta: WorldState,
    p: f64,
    q: f64,
    urn: &UrnModel,
    rng: &mut impl RngCore,
) -> (CascadeState, StepOutcome) {
    let mut next = *state;
    let out = advance(
        &mut next,
        theta,
        Reveal::Random(Bernoulli64::new(p)),
        Bernoulli64::new(urn.correct_signal_prob()),
        Confirm::from_q(urn.gamma(), q),
        urn.log_gamma(),
        rng,
    );
    (next, out)
}

/// Per-trial summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryRecord {
    /// `1{Z_t != theta}` at each configured checkpoint.
    pub checkpoint_errors: Vec<bool>,
    /// `sum_t 1{Z_t != theta}` over the whole horizon.
    pub total_errors: u64,
    pub boundary_ties: u64,
}

/// Precomputed per-step parameters for repeated trials of one setup.
#[derive(Debug, Clone)]
pub struct Simulator {
    reveal: Vec<Reveal>,
    confirm: Vec<Confirm>,
    signal: Bernoulli64,
    log_gamma: f64,
    checkpoints: Vec<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialTally {
    pub total_errors: u64,
    pub boundary_ties: u64,
}

impl Simulator {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let reveal = (1..=cfg.horizon)
            .map(|t| Reveal::Random(Bernoulli64::new(cfg.truth.value_at(t))))
            .collect();
        Self::with_reveal(&cfg.urn, reveal, |t| cfg.assumed.value_at(t), cfg.checkpoints.clone())
    }

    pub(crate) fn with_reveal(
        urn: &UrnModel,
        reveal: Vec<Reveal>,
        assumed: impl Fn(u64) -> f64,
        checkpoints: Vec<u64>,
    ) -> Self {
        let gamma = urn.gamma();
        let confirm = (1..=reveal.len() as u64)
            .map(|t| Confirm::from_q(gamma, assumed(t)))
            .collect();
        Self {
            reveal,
            confirm,
            signal: Bernoulli64::new(urn.correct_signal_prob()),
            log_gamma: urn.log_gamma(),
            checkpoints,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.reveal.len() as u64
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    /// Words needed for a checkpoint bitmask.
    pub fn mask_words(&self) -> usize {
        self.checkpoints.len().div_ceil(64)
    }

    /// Run one trial, setting bit `i` of `mask` when checkpoint `i` errs.
    pub fn run_masked(&self, theta: WorldState, rng: &mut impl RngCore, mask: &mut [u64]) -> TrialTally {
        mask.iter_mut().for_each(|w| *w = 0);
        let mut state = CascadeState::initial();
        let mut tally = TrialTally::default();
        let mut next_cp = 0usize;
        for (i, (&reveal, &confirm)) in self.reveal.iter().zip(&self.confirm).enumerate() {
            let out = advance(&mut state, theta, reveal, self.signal, confirm, self.log_gamma, rng);
            tally.boundary_ties += out.boundary_tie as u64;
            let wrong = !out.correct;
            tally.total_errors += wrong as u64;
            if next_cp < self.checkpoints.len() && self.checkpoints[next_cp] == i as u64 + 1 {
                if wrong {
                    mask[next_cp / 64] |= 1 << (next_cp % 64);
                }
                next_cp += 1;
            }
        }
        tally
    }

    /// Run one trial, calling `visit(t, state_before, outcome)` at every step.
    pub fn run_visit(
        &self,
        theta: WorldState,
        rng: &mut impl RngCore,
        mut visit: impl FnMut(u64, &CascadeState, &StepOutcome),
    ) -> CascadeState {
        let mut state = CascadeState::initial();
        for (i, (&reveal, &confirm)) in self.reveal.iter().zip(&self.confirm).enumerate() {
            let before = state;
            let out = advance(&mut state, theta, reveal, self.signal, confirm, self.log_gamma, rng);
            visit(i as u64 + 1, &before, &out);
        }
        state
    }
}

/// Simulate one trial of `cfg` conditioned on `theta`.
pub fn simulate_trajectory(
    cfg: &ExperimentConfig,
    theta: WorldState,
    rng: &mut impl RngCore,
) -> TrajectoryRecord {
    let sim = Simulator::new(cfg);
    let mut mask = vec![0u64; sim.mask_words()];
    let tally = sim.run_masked(theta, rng, &mut mask);
    TrajectoryRecord {
        checkpoint_errors: (0..cfg.checkpoints.len())
            .map(|i| mask[i / 64] >> (i % 64) & 1 == 1)
            .collect(),
        total_errors: tally.total_errors,
        boundary_ties: tally.boundary_ties,
    }
}
