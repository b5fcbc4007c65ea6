//! Fixed-placement revealer experiments.
//!
//! Revealers sit at a deterministic index set instead of being drawn at
//! random. Rules do not use the number of revealers.

use serde::Serialize;

use crate::dynamics::{Reveal, Simulator};
use crate::error::{Error, Result};
use crate::model::{Schedule, UrnModel};
use crate::montecarlo::{mean_stderr, run_trials};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionRule {
    MismatchedMap { assumed: Schedule },
    /// Mismatched MAP with `q = 1` everywhere.
    Majority,
}

impl DecisionRule {
    pub fn name(&self) -> &'static str {
        match self {
            DecisionRule::MismatchedMap { .. } => "mismatched_map",
            DecisionRule::Majority => "majority",
        }
    }

    fn assumed_at(&self, t: u64) -> f64 {
        match self {
            DecisionRule::MismatchedMap { assumed } => assumed.value_at(t),
            DecisionRule::Majority => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    AllAtEnd,
    AllAtStart,
    Uniform,
}

impl Placement {
    pub const ALL: [Placement; 3] = [Placement::AllAtEnd, Placement::AllAtStart, Placement::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            Placement::AllAtEnd => "all_at_end",
            Placement::AllAtStart => "all_at_start",
            Placement::Uniform => "uniform",
        }
    }

    /// Sorted 1-based revealer indices for `v` revealers among `n` players.
    pub fn revealers(self, n: u64, v: u64) -> Result<Vec<u64>> {
        if v > n {
            return Err(Error::config("revealers", format!("{v} revealers exceed {n} players")));
        }
        Ok(match self {
            Placement::AllAtEnd => (n - v + 1..=n).collect(),
            Placement::AllAtStart => (1..=v).collect(),
            Placement::Uniform => (0..v).map(|i| ((2 * i + 1) * n) / (2 * v) + 1).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementExperiment {
    pub n_players: u64,
    pub revealer_set: Vec<u64>,
    pub urn: UrnModel,
    pub rule: DecisionRule,
}

impl PlacementExperiment {
    pub fn new(n_players: u64, mut revealer_set: Vec<u64>, urn: UrnModel, rule: DecisionRule) -> Result<Self> {
        if n_players == 0 {
            return Err(Error::config("players", "must be >= 1"));
        }
        revealer_set.sort_unstable();
        revealer_set.dedup();
        if revealer_set.first() == Some(&0) || revealer_set.last().is_some_and(|&t| t > n_players) {
            return Err(Error::config("revealers", "indices must lie in [1, players]"));
        }
        Ok(Self {
            n_players,
            revealer_set,
            urn,
            rule,
        })
    }

    pub fn revealer_count(&self) -> u64 {
        self.revealer_set.len() as u64
    }

    /// `(N - V) / (1 + gamma)^2`.
    pub fn lower_bound(&self) -> f64 {
        lower_bound(self.n_players, self.revealer_count(), &self.urn)
    }

    pub(crate) fn simulator(&self) -> Simulator {
        let mut reveal = vec![Reveal::Forced(false); self.n_players as usize];
        for &t in &self.revealer_set {
            reveal[(t - 1) as usize] = Reveal::Forced(true);
        }
        Simulator::with_reveal(
            &self.urn,
            reveal,
            |t| self.rule.assumed_at(t),
            (1..=self.n_players).collect(),
        )
    }
}

pub fn lower_bound(n: u64, v: u64, urn: &UrnModel) -> f64 {
    (n - v) as f64 / (1.0 + urn.gamma()).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialResult {
    pub n_players: u64,
    pub revealers: u64,
    pub trials: u64,
    /// Error frequency of player `t` at index `t - 1`.
    pub per_player_error: Vec<f64>,
    pub te_mean: f64,
    pub te_stderr: f64,
    pub lower_bound: f64,
}

pub fn simulate_placement(exp: &PlacementExperiment, trials: u64, seed: u64, workers: usize) -> Result<AdversarialResult> {
    if trials == 0 {
        return Err(Error::config("trials", "must be >= 1"));
    }
    let sim = exp.simulator();
    let tot = run_trials(&sim, trials, seed, workers, false)?;
    let (te_mean, te_stderr) = mean_stderr(tot.te, tot.te_sq, trials);
    Ok(AdversarialResult {
        n_players: exp.n_players,
        revealers: exp.revealer_count(),
        trials,
        per_player_error: tot.counts.iter().map(|&c| c as f64 / trials as f64).collect(),
        te_mean,
        te_stderr,
        lower_bound: exp.lower_bound(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub placement: Placement,
    pub rule: &'static str,
    pub n_players: u64,
    pub revealers: u64,
    pub te_mean: f64,
    pub te_stderr: f64,
    pub lower_bound: f64,
    /// `te_mean >= lower_bound - 4 * te_stderr`.
    pub meets_bound: bool,
}

/// Every structured placement crossed with every rule.
pub fn worst_case_report(
    n: u64,
    v: u64,
    urn: &UrnModel,
    rules: &[DecisionRule],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for placement in Placement::ALL {
        for rule in rules {
            let exp = PlacementExperiment::new(n, placement.revealers(n, v)?, *urn, rule.clone())?;
            let r = simulate_placement(&exp, trials, seed, workers)?;
            rows.push(ReportRow {
                placement,
                rule: rule.name(),
                n_players: n,
                revealers: v,
                te_mean: r.te_mean,
                te_stderr: r.te_stderr,
                lower_bound: r.lower_bound,
                meets_bound: r.te_mean >= r.lower_bound - 4.0 * r.te_stderr,
            });
        }
    }
    Ok(rows)
}
