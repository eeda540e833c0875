//! Group privacy for arbitrary CDP mechanisms.
//!
//! A `(mu, tau)`-CDP mechanism with `mu <= tau^2/2` and small `tau` protects
//! groups of `s` rows with roughly `(s^2 mu, s tau)`. The bound is built by
//! doubling: databases `2^(m+1)` rows apart are joined through a midpoint
//! `2^m` rows from each, giving
//!
//! ```text
//! tau_{m+1} = 2 tau_m + 34 tau_m^1.5
//! mu_{m+1}  = 2 mu_m + tau_m^2 + 3.5 tau_m^3 + 1.5 tau_m^4
//! ```
//!
//! Each doubling is valid while `tau_m <= 1/4`. The closed forms unroll the
//! recursion under the stronger condition `tau s log2(s)^3 34^3 <= 1/2`.
//!
//! The exact Gaussian group bound in `mechanisms::gaussian_group_cdp` is what
//! the recursion should approach for small `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{check_at_least, domain, Error, Result};
use crate::mechanisms::{gaussian_group_cdp, CdpBound, GaussianMechanismSpec};

/// `2 * 34^4.5`, the constant of the closed-form group bounds.
pub const GROUP_ALPHA: f64 = 15_584_221.862_699_98;

/// Largest per-level `tau` for which one doubling step is valid.
pub const MAX_STEP_TAU: f64 = 0.25;

/// Largest `tau_1` in the pairwise expectation bound.
pub const MAX_PAIRWISE_TAU: f64 = 1.0 / 3.0;

/// Bound on `tau s log2(s)^3 34^3` under which the closed forms hold.
pub const CLOSED_FORM_SMALLNESS: f64 = 0.5;

/// Relative slack when checking `mu <= tau^2/2`, so that a bound built as
/// `(tau^2/2, tau)` in floating point is accepted.
const INVARIANT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMethod {
    ExactGaussian,
    Recursion,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBoundResult {
    /// Group size as requested.
    pub s: u64,
    /// Group size actually bounded: `s` rounded up to a power of two for the
    /// recursion and closed forms.
    pub effective_s: u64,
    pub bound: CdpBound,
    pub method: GroupMethod,
    /// Per-level `(mu_m, tau_m)`, starting with the (possibly inflated) input.
    /// Empty unless `method` is the recursion.
    pub steps: Vec<CdpBound>,
    /// `tau` was raised to `sqrt(2 mu)` before iterating.
    pub inflated: bool,
    pub warnings: Vec<String>,
}

fn satisfies_invariant(mu: f64, tau: f64) -> bool {
    mu <= tau * tau / 2.0 * (1.0 + INVARIANT_SLACK)
}

/// One doubling step for the standard: `2 tau + 34 tau^1.5`.
pub fn group_tau_step(tau_m: f64) -> Result<f64> {
    check_at_least("tau", tau_m, 0.0)?;
    Ok(2.0 * tau_m + 34.0 * tau_m.powf(1.5))
}

/// One doubling step for the mean: `2 mu + tau^2 + 3.5 tau^3 + 1.5 tau^4`.
/// Requires `mu <= tau^2/2`.
pub fn group_mu_step(mu_m: f64, tau_m: f64) -> Result<f64> {
    check_at_least("mu", mu_m, 0.0)?;
    check_at_least("tau", tau_m, 0.0)?;
    if !satisfies_invariant(mu_m, tau_m) {
        return Err(Error::Precondition(format!(
            "mu = {mu_m} exceeds tau^2/2 = {}",
            tau_m * tau_m / 2.0
        )));
    }
    let t2 = tau_m * tau_m;
    Ok(2.0 * mu_m + t2 + 3.5 * t2 * tau_m + 1.5 * t2 * t2)
}

/// Smallest power of two `>= s`.
pub fn round_up_pow2(s: u64) -> Result<u64> {
    if s == 0 {
        return Err(domain("group size must be at least 1"));
    }
    s.checked_next_power_of_two()
        .ok_or_else(|| domain(format!("group size {s} is too large")))
}

fn check_power_of_two(s: u64) -> Result<u32> {
    if s == 0 || !s.is_power_of_two() {
        return Err(domain(format!(
            "group size must be a power of two, got {s}"
        )));
    }
    Ok(s.trailing_zeros())
}

/// `tau s log2(s)^3 34^3`, the quantity the closed forms need at most 1/2.
pub fn smallness(tau: f64, s: u64) -> f64 {
    let log_s = (s as f64).log2();
    tau * s as f64 * log_s.powi(3) * 34f64.powi(3)
}

/// Prepares `(mu, tau)` for the group bounds: checks `mu <= tau^2/2`, raising
/// `tau` to `sqrt(2 mu)` first when `inflate` is set.
fn admissible_start(bound: &CdpBound, inflate: bool) -> Result<(CdpBound, bool)> {
    if satisfies_invariant(bound.mu, bound.tau) {
        return Ok((*bound, false));
    }
    if inflate {
        return Ok((
            CdpBound {
                mu: bound.mu,
                tau: (2.0 * bound.mu).sqrt(),
            },
            true,
        ));
    }
    Err(Error::Precondition(format!(
        "mu = {} exceeds tau^2/2 = {}; pass inflate to raise tau to sqrt(2 mu)",
        bound.mu,
        bound.tau * bound.tau / 2.0
    )))
}

fn rounding_warning(s: u64, effective: u64) -> Option<String> {
    (s != effective).then(|| format!("group size {s} rounded up to the power of two {effective}"))
}

/// Iterates the doubling recursion `log2(s)` times (after rounding `s` up to a
/// power of two).
pub fn group_cdp_recursion(bound: &CdpBound, s: u64, inflate: bool) -> Result<GroupBoundResult> {
    let effective_s = round_up_pow2(s)?;
    let (start, inflated) = admissible_start(bound, inflate)?;
    let levels = effective_s.trailing_zeros();

    let mut steps = vec![start];
    let mut current = start;
    for level in 0..levels {
        if current.tau > MAX_STEP_TAU {
            return Err(Error::Precondition(format!(
                "tau_{level} = {} exceeds {MAX_STEP_TAU}; the doubling step does not apply",
                current.tau
            )));
        }
        current = CdpBound {
            mu: group_mu_step(current.mu, current.tau)?,
            tau: group_tau_step(current.tau)?,
        };
        steps.push(current);
    }

    let mut warnings: Vec<String> = rounding_warning(s, effective_s).into_iter().collect();
    if inflated {
        warnings.push(format!("tau inflated from {} to {}", bound.tau, start.tau));
    }
    Ok(GroupBoundResult {
        s,
        effective_s,
        bound: current,
        method: GroupMethod::Recursion,
        steps,
        inflated,
        warnings,
    })
}

fn check_closed_form(tau: f64, s: u64) -> Result<u32> {
    check_at_least("tau", tau, 0.0)?;
    let log_s = check_power_of_two(s)?;
    let v = smallness(tau, s);
    if v > CLOSED_FORM_SMALLNESS {
        return Err(Error::Precondition(format!(
            "tau * s * log2(s)^3 * 34^3 = {v} exceeds {CLOSED_FORM_SMALLNESS}"
        )));
    }
    Ok(log_s)
}

/// `s tau + alpha (s log2(s)^3 tau)^1.5` for `s` a power of two.
pub fn group_tau_closed_form(tau: f64, s: u64) -> Result<f64> {
    let m = f64::from(check_closed_form(tau, s)?);
    let s = s as f64;
    Ok(s * tau + GROUP_ALPHA * (s * m.powi(3) * tau).powf(1.5))
}

/// `(s tau)^2 / 2 + alpha (s tau)^2.5 log2(s)^4.5` for `s` a power of two.
pub fn group_mu_closed_form(tau: f64, s: u64) -> Result<f64> {
    let m = f64::from(check_closed_form(tau, s)?);
    let st = s as f64 * tau;
    Ok(st * st / 2.0 + GROUP_ALPHA * st.powf(2.5) * m.powf(4.5))
}

/// Group bound from the closed forms, with `s` rounded up to a power of two.
pub fn group_cdp_closed_form(bound: &CdpBound, s: u64, inflate: bool) -> Result<GroupBoundResult> {
    let effective_s = round_up_pow2(s)?;
    let (start, inflated) = admissible_start(bound, inflate)?;
    let out = CdpBound {
        mu: group_mu_closed_form(start.tau, effective_s)?,
        tau: group_tau_closed_form(start.tau, effective_s)?,
    };
    let mut warnings: Vec<String> = rounding_warning(s, effective_s).into_iter().collect();
    if inflated {
        warnings.push(format!("tau inflated from {} to {}", bound.tau, start.tau));
    }
    Ok(GroupBoundResult {
        s,
        effective_s,
        bound: out,
        method: GroupMethod::ClosedForm,
        steps: Vec::new(),
        inflated,
        warnings,
    })
}

/// Exact group bound of the Gaussian mechanism, packaged like the other methods.
pub fn group_cdp_gaussian(spec: &GaussianMechanismSpec, s: u64) -> Result<GroupBoundResult> {
    Ok(GroupBoundResult {
        s,
        effective_s: s,
        bound: gaussian_group_cdp(spec, s)?,
        method: GroupMethod::ExactGaussian,
        steps: Vec::new(),
        inflated: false,
        warnings: Vec::new(),
    })
}

/// Bound on `KL(D || D'')` given `(mu1, tau1)` for `(D, D')` and `(mu2, tau2)`
/// for `(D', D'')`:
/// `mu1 + mu2 + tau1 tau2 + 3 tau1^2 tau2 + (tau1 + 3 tau1^2) mu2`.
pub fn pairwise_kl_bound(mu1: f64, tau1: f64, mu2: f64, tau2: f64) -> Result<f64> {
    check_at_least("mu1", mu1, 0.0)?;
    check_at_least("tau1", tau1, 0.0)?;
    check_at_least("mu2", mu2, 0.0)?;
    check_at_least("tau2", tau2, 0.0)?;
    if tau1 > MAX_PAIRWISE_TAU {
        return Err(domain(format!("tau1 must be at most 1/3, got {tau1}")));
    }
    let t1sq = tau1 * tau1;
    Ok(mu1 + mu2 + tau1 * tau2 + 3.0 * t1sq * tau2 + (tau1 + 3.0 * t1sq) * mu2)
}

/// Standard of the loss between databases two steps apart when each step is
/// `tau`-subgaussian with `tau <= 1/4`: `2 tau + 34 tau^1.5`.
pub fn pairwise_tau_bound(tau: f64) -> Result<f64> {
    check_at_least("tau", tau, 0.0)?;
    if tau > MAX_STEP_TAU {
        return Err(domain(format!("tau must be at most 1/4, got {tau}")));
    }
    group_tau_step(tau)
}
