//! Exact error probabilities for short horizons.
//!
//! Conditioned on one world state, the distribution of the assumed ratio
//! `R_t` is propagated layer by layer over every (revealer, signal) branch
//! in exact rational arithmetic. The decision rule and the update depend on
//! the history only through `R_{t-1}`, so branches that reach the same
//! ratio are merged.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dynamics::{rational_decision, Regime};
use crate::error::{Error, Result};
use crate::model::{ExperimentConfig, Schedule, UrnModel, WorldState};

/// Relative tolerance used when turning floats into rationals.
pub const RATIONALIZE_TOLERANCE: f64 = 1e-12;
/// Largest denominator accepted for a "natively rational" parameter.
pub const NATIVE_DENOMINATOR_LIMIT: i64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_horizon: u64,
    pub max_states: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_horizon: 20,
            max_states: 5_000_000,
        }
    }
}

/// Continued-fraction approximation of `x` within `tol * max(|x|, 1)`,
/// optionally with a bounded denominator.
pub fn rationalize(x: f64, tol: f64, max_den: Option<i64>) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let target = BigRational::from_float(x)?;
    let bound = tol * x.abs().max(1.0);
    let neg = x < 0.0;
    let mut rest = target.abs();
    // convergents h/k
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    for _ in 0..128 {
        let a = rest.floor().to_integer();
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        if let Some(limit) = max_den {
            if k > BigInt::from(limit) {
                return None;
            }
        }
        let approx = BigRational::new(h.clone(), k.clone());
        let err = (&approx - target.abs()).abs().to_f64().unwrap_or(f64::INFINITY);
        if err <= bound {
            return Some(if neg { -approx } else { approx });
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rest = frac.recip();
    }
    if max_den.is_none() {
        Some(if neg { -target.abs() } else { target })
    } else {
        None
    }
}

fn native(x: f64) -> Option<BigRational> {
    rationalize(x, RATIONALIZE_TOLERANCE, Some(NATIVE_DENOMINATOR_LIMIT))
}

fn approximate(x: f64) -> BigRational {
    rationalize(x, RATIONALIZE_TOLERANCE, None).expect("finite schedule value")
}

fn clip(x: BigRational) -> BigRational {
    if x > BigRational::one() {
        BigRational::one()
    } else if x.is_negative() {
        BigRational::zero()
    } else {
        x
    }
}

/// Exact `gamma`; fails when gamma is not (close to) a small-denominator
/// rational.
pub fn exact_gamma(urn: &UrnModel) -> Result<BigRational> {
    native(urn.gamma()).ok_or_else(|| {
        Error::domain(format!(
            "gamma = {} is not a rational with denominator <= {NATIVE_DENOMINATOR_LIMIT}",
            urn.gamma()
        ))
    })
}

/// Exact schedule value. Families with rational parameters are evaluated
/// exactly; others are rationalized from their float value.
pub fn exact_schedule_value(s: &Schedule, t: u64) -> BigRational {
    let exact = match s {
        Schedule::Harmonic { coefficient } => {
            native(*coefficient).map(|c| clip(c / BigRational::from_integer(t.into())))
        }
        Schedule::Constant { q } => native(*q),
        Schedule::Table { values } => match values.get((t - 1) as usize) {
            Some(v) => native(*v),
            None => Some(BigRational::zero()),
        },
        Schedule::Scaled { base, rho } => native(*rho).map(|r| clip(r * exact_schedule_value(base, t))),
        Schedule::PowerLaw { exponent, coefficient } if *exponent == 1.0 => {
            native(*coefficient).map(|c| clip(c / BigRational::from_integer(t.into())))
        }
        Schedule::OptimalMatched { .. } | Schedule::PowerLaw { .. } => None,
    };
    exact.unwrap_or_else(|| approximate(s.value_at(t)))
}

fn exact_regime(r: &BigRational, gamma: &BigRational, inv_gamma: &BigRational) -> Regime {
    if r < inv_gamma {
        Regime::Low
    } else if r > gamma {
        Regime::High
    } else {
        Regime::Mid
    }
}

/// Exact `P(Z_t != theta)` for `t = 1..=horizon`, conditioned on `theta`.
pub fn exact_error_series_given(
    cfg: &ExperimentConfig,
    horizon: u64,
    theta: WorldState,
    limits: OracleLimits,
) -> Result<Vec<BigRational>> {
    if horizon == 0 {
        return Err(Error::config("horizon", "must be >= 1"));
    }
    if horizon > limits.max_horizon {
        return Err(Error::config(
            "horizon",
            format!("oracle horizon {horizon} exceeds cap {}", limits.max_horizon),
        ));
    }
    let gamma = exact_gamma(&cfg.urn)?;
    let inv_gamma = gamma.recip();
    let one = BigRational::one();
    let p_right = &gamma / (&gamma + &one);
    let p_wrong = &one - &p_right;

    let mut layer: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    layer.insert(one.clone(), one.clone());
    let mut series = Vec::with_capacity(horizon as usize);

    for t in 1..=horizon {
        let p = exact_schedule_value(&cfg.truth, t);
        let q = exact_schedule_value(&cfg.assumed, t);
        let not_p = &one - &p;
        // Cancelled extreme-regime factor (1 + gamma - q) / (1 + gamma - gamma q).
        let confirm = (&one + &gamma - &q) / (&one + &gamma - &gamma * &q);
        let mut next: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        let mut err = BigRational::zero();

        for (r, mass) in &layer {
            let regime = exact_regime(r, &gamma, &inv_gamma);
            for (revealer, w_b) in [(true, &p), (false, &not_p)] {
                if w_b.is_zero() {
                    continue;
                }
                for (signal, w_x) in [(theta, &p_right), (theta.other(), &p_wrong)] {
                    let z = if revealer {
                        signal
                    } else {
                        rational_decision(regime, signal)
                    };
                    let w = mass * w_b * w_x;
                    if z != theta {
                        err += &w;
                    }
                    let r_next = match (regime, z) {
                        (Regime::Low, WorldState::Two) => r / &confirm,
                        (Regime::High, WorldState::One) => r * &confirm,
                        (_, WorldState::One) => r * &gamma,
                        (_, WorldState::Two) => r / &gamma,
                    };
                    *next.entry(r_next).or_insert_with(BigRational::zero) += w;
                }
            }
        }
        if next.len() > limits.max_states {
            return Err(Error::BudgetExceeded {
                states: next.len(),
                step: t,
                limit: limits.max_states,
            });
        }
        debug_assert!(next.values().fold(BigRational::zero(), |a, m| a + m).is_one());
        series.push(err);
        layer = next;
    }
    Ok(series)
}

/// Exact `P_e,t` for `t = 1..=horizon` (by symmetry, conditioned on θ = 1).
pub fn exact_error_series(cfg: &ExperimentConfig, horizon: u64) -> Result<Vec<BigRational>> {
    exact_error_series_given(cfg, horizon, WorldState::One, OracleLimits::default())
}

/// Exact `TE_horizon`.
pub fn exact_total_errors(cfg: &ExperimentConfig, horizon: u64) -> Result<BigRational> {
    Ok(exact_error_series(cfg, horizon)?
        .into_iter()
        .fold(BigRational::zero(), |acc, x| acc + x))
}

/// Numerator and denominator as decimal strings (for CSV output).
pub fn ratio_parts(x: &BigRational) -> (String, String) {
    let g = x.numer().gcd(x.denom());
    let (n, d) = if g.is_one() {
        (x.numer().clone(), x.denom().clone())
    } else {
        (x.numer() / &g, x.denom() / &g)
    };
    (n.to_string(), d.to_string())
}

pub fn ratio_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
