//! Closed-form constants, thresholds and learning rates.
//!
//! Everything here depends on the urn only through `gamma = alpha / beta`.
//! `rho` is the asymptotic ratio `|Q_t| / |P_t|` between the assumed and
//! true cumulative revealing probabilities.

use serde::Serialize;

use crate::error::{Error, Result};

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("gamma must be finite and > 1, got {gamma}")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("rho must be finite and > 0, got {rho}")))
    }
}

/// Optimal matched constant: `lim sup t * P_e,t` under the best schedule.
pub fn kappa(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let r = (gamma - 1.0) / gamma.ln();
    let bracket = 1.0 + r * (r.ln() - 1.0);
    Ok(1.0 / bracket)
}

/// Lower mismatch threshold `log(gamma) / (gamma - 1)`.
pub fn rho0(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(gamma.ln() / (gamma - 1.0))
}

/// Upper mismatch threshold `gamma * rho0`.
pub fn rho1(gamma: f64) -> Result<f64> {
    Ok(gamma * rho0(gamma)?)
}

pub fn delta(gamma: f64, rho: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_rho(rho)?;
    let lg = gamma.ln();
    let scaled = rho * (gamma - 1.0);
    let numer = gamma * lg - scaled * (1.0 + (gamma * lg / scaled).ln());
    Ok(numer / ((1.0 + gamma) * lg))
}

/// Maximiser over `lambda in [0, 1]` of `f_{1-lambda} - rho * g_{1-lambda}`.
pub fn lambda1_star(gamma: f64, rho: f64) -> Result<f64> {
    let (lo, hi) = (rho0(gamma)?, rho1(gamma)?);
    check_rho(rho)?;
    // Tolerate a few ulps at the window edges.
    let slack = 1e-12 * hi;
    if rho < lo - slack || rho > hi + slack {
        return Err(Error::domain(format!(
            "rho = {rho} outside [{lo}, {hi}] for gamma = {gamma}"
        )));
    }
    let lg = gamma.ln();
    let v = (rho * (gamma - 1.0) / lg).ln() / lg;
    Ok(v.clamp(0.0, 1.0))
}

/// `(f, g, h)` exponent terms at `lambda`, normalised by `alpha + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFamily {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

pub fn exponent_family(gamma: f64, lambda: f64) -> Result<ExponentFamily> {
    check_gamma(gamma)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let denom = 1.0 + gamma;
    Ok(ExponentFamily {
        f: (gamma - gamma.powf(1.0 - lambda)) / denom,
        g: (gamma - 1.0) * lambda / denom,
        h: (1.0 - gamma.powf(lambda)) / denom,
    })
}

/// Which branch of the rate formulas produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    NoLearning,
    /// `rho0 < rho < 1`.
    MismatchBelow,
    /// `1 < rho < rho1`.
    MismatchAbove,
    /// Revealer errors dominate (`|P_t| = omega(log t)`).
    RevealDominated,
    /// `rho == 1`.
    MatchedOptimal,
}

impl RegimeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::NoLearning => "no_learning",
            RegimeTag::MismatchBelow => "mismatch_below",
            RegimeTag::MismatchAbove => "mismatch_above",
            RegimeTag::RevealDominated => "reveal_dominated",
            RegimeTag::MatchedOptimal => "matched_optimal",
        }
    }
}

/// Polynomial learning rate `E(P, Q)` with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateResult {
    pub value: f64,
    pub regime_tag: RegimeTag,
}

impl RateResult {
    fn tagged(value: f64, tag: RegimeTag) -> Self {
        let value = value.clamp(0.0, 1.0);
        if value == 0.0 {
            Self::none()
        } else {
            Self {
                value,
                regime_tag: tag,
            }
        }
    }

    fn none() -> Self {
        Self {
            value: 0.0,
            regime_tag: RegimeTag::NoLearning,
        }
    }
}

fn branch_tag(rho: f64) -> RegimeTag {
    if rho < 1.0 {
        RegimeTag::MismatchBelow
    } else if rho > 1.0 {
        RegimeTag::MismatchAbove
    } else {
        RegimeTag::MatchedOptimal
    }
}

/// Inner bracket shared by the multiplicative-mismatch formulas; `None`
/// outside the open window `(rho0, rho1)`.
fn window_bracket(gamma: f64, rho: f64) -> Result<Option<f64>> {
    let (lo, hi) = (rho0(gamma)?, rho1(gamma)?);
    check_rho(rho)?;
    if rho <= lo || rho >= hi {
        return Ok(None);
    }
    let d = delta(gamma, rho)?;
    Ok(Some(if rho <= 1.0 {
        d - (gamma - 1.0) / (gamma + 1.0) * (1.0 - rho)
    } else {
        d
    }))
}

/// Rate when the truth is the optimal matched schedule and `|Q_t|/|P_t| -> rho`.
pub fn rate_optimal(gamma: f64, rho: f64) -> Result<RateResult> {
    let k = kappa(gamma)?;
    Ok(match window_bracket(gamma, rho)? {
        None => RateResult::none(),
        Some(b) => RateResult::tagged((1.0 + gamma) * b * k, branch_tag(rho)),
    })
}

/// Rate when `|P_t| / log t -> c_p` and `|Q_t|/|P_t| -> rho`.
pub fn rate_harmonic(gamma: f64, rho: f64, c_p: f64) -> Result<RateResult> {
    if !(c_p.is_finite() && c_p > 0.0) {
        return Err(Error::domain(format!("c_p must be finite and > 0, got {c_p}")));
    }
    Ok(match window_bracket(gamma, rho)? {
        None => RateResult::none(),
        Some(b) => RateResult::tagged((c_p * b).min(1.0), branch_tag(rho)),
    })
}

/// Rate when `p_t = Theta(t^-c)` with `c in (0, 1)`: `c` inside the open
/// window, zero outside it.
pub fn rate_power_law(gamma: f64, exponent: f64, rho: f64) -> Result<RateResult> {
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::domain(format!("exponent must lie in (0, 1), got {exponent}")));
    }
    let (lo, hi) = (rho0(gamma)?, rho1(gamma)?);
    check_rho(rho)?;
    Ok(if rho > lo && rho < hi {
        RateResult::tagged(exponent, RegimeTag::RevealDominated)
    } else {
        RateResult::none()
    })
}

/// Leading coefficients (per unit `p_i`) of the mean log-ratio increment
/// `E_1[xi_i]` while the walk sits in an extreme regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftCoefficients {
    /// Below `beta/alpha` (cascade on the wrong action):
    /// `(rho + gamma (log gamma - rho)) / (1 + gamma)`, zero at `rho1`.
    pub low_regime: f64,
    /// Above `alpha/beta` (cascade on the right action):
    /// `((gamma - 1) rho - log gamma) / (1 + gamma)`, zero at `rho0`.
    pub high_regime: f64,
}

pub fn drift(gamma: f64, rho: f64) -> Result<DriftCoefficients> {
    check_gamma(gamma)?;
    check_rho(rho)?;
    let lg = gamma.ln();
    Ok(DriftCoefficients {
        low_regime: (rho + gamma * (lg - rho)) / (1.0 + gamma),
        high_regime: ((gamma - 1.0) * rho - lg) / (1.0 + gamma),
    })
}

/// Log of the cancelled extreme-regime factor
/// `(1 - beta q/(alpha+beta)) / (1 - alpha q/(alpha+beta))`, for `q < 1`.
pub fn log_cascade_factor(gamma: f64, q: f64) -> f64 {
    let a = gamma / (1.0 + gamma);
    let b = 1.0 / (1.0 + gamma);
    (-b * q).ln_1p() - (-a * q).ln_1p()
}

/// Probability of the up-step under the drift-removing tilted measure.
pub fn nu_tilt(gamma: f64, q: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(0.0..1.0).contains(&q) {
        return Err(Error::domain(format!("q must lie in [0, 1), got {q}")));
    }
    let la = log_cascade_factor(gamma, q);
    Ok(la / (gamma.ln() + la))
}

/// Number of trailing wrong-signal revealers that suffices to push the
/// largest attainable ratio below `beta/alpha` when `|Q_t| = q_norm`.
pub fn t_star(gamma: f64, q_norm: f64) -> Result<u64> {
    check_gamma(gamma)?;
    if !(q_norm.is_finite() && q_norm >= 0.0) {
        return Err(Error::domain(format!("q_norm must be finite and >= 0, got {q_norm}")));
    }
    let v = 3.0 + (gamma - 1.0) / (gamma + 1.0) * q_norm / gamma.ln();
    Ok(v.ceil() as u64)
}

/// One row of a learning-rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub gamma: f64,
    pub rho: f64,
    pub c_p: f64,
    pub rate: f64,
    pub regime_tag: RegimeTag,
}

/// Which curve family to tabulate.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveFamily {
    /// Optimal matched truth (the `c_p` column is `(1+gamma) kappa`).
    OptimalTruth,
    /// Harmonic truth with each listed coefficient.
    Harmonic(Vec<f64>),
}

/// Rate rows ordered gamma-major, then (for harmonic) by `c_p`, then by rho.
pub fn rate_curve(gammas: &[f64], rhos: &[f64], family: &CurveFamily) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for &gamma in gammas {
        match family {
            CurveFamily::OptimalTruth => {
                let c_p = (1.0 + gamma) * kappa(gamma)?;
                for &rho in rhos {
                    let r = rate_or_zero(gamma, rho, rate_optimal)?;
                    rows.push(row(gamma, rho, c_p, r));
                }
            }
            CurveFamily::Harmonic(cs) => {
                for &c_p in cs {
                    for &rho in rhos {
                        let r = rate_or_zero(gamma, rho, |g, p| rate_harmonic(g, p, c_p))?;
                        rows.push(row(gamma, rho, c_p, r));
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn rate_or_zero(
    gamma: f64,
    rho: f64,
    f: impl Fn(f64, f64) -> Result<RateResult>,
) -> Result<RateResult> {
    // A zero assumed schedule (rho = 0) has finite norm: no learning.
    if rho == 0.0 {
        check_gamma(gamma)?;
        return Ok(RateResult::none());
    }
    f(gamma, rho)
}

fn row(gamma: f64, rho: f64, c_p: f64, r: RateResult) -> RateRow {
    RateRow {
        gamma,
        rho,
        c_p,
        rate: r.value,
        regime_tag: r.regime_tag,
    }
}

/// Parse `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::config("grid", format!("expected start:stop:step, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}
