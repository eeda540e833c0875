//! Composition of CDP guarantees, the advanced composition theorem for
//! `(epsilon, delta')`-DP, and an exact convolution of loss variables used to
//! check both on independent (non-adaptive) compositions.

use serde::{Deserialize, Serialize};

use crate::distributions::{LossAtom, PrivacyLossRV};
use crate::error::{check_at_least, domain, Error, Result};
use crate::mechanisms::{CdpBound, DpBound};

/// Upper limit on the atom count of any intermediate convolution.
pub const MAX_CONVOLUTION_ATOMS: usize = 1_000_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompositionInput {
    pub bounds: Vec<CdpBound>,
}

impl From<Vec<CdpBound>> for CompositionInput {
    fn from(bounds: Vec<CdpBound>) -> Self {
        Self { bounds }
    }
}

/// Composing `(mu_i, tau_i)`-CDP mechanisms gives
/// `(sum mu_i, sqrt(sum tau_i^2))`-CDP.
///
/// Identical bounds are grouped first, so `k` copies of `(mu, tau)` yield
/// exactly `(k mu, sqrt(k) tau)`.
pub fn compose_cdp(input: &CompositionInput) -> CdpBound {
    compose_bounds(&input.bounds)
}

pub(crate) fn compose_bounds(bounds: &[CdpBound]) -> CdpBound {
    let mut groups: Vec<(CdpBound, u64)> = Vec::new();
    for b in bounds {
        match groups.iter_mut().find(|(g, _)| g == b) {
            Some((_, count)) => *count += 1,
            None => groups.push((*b, 1)),
        }
    }
    let mut mu = 0.0;
    let mut tau = 0.0f64;
    for (b, count) in groups {
        let k = count as f64;
        mu += k * b.mu;
        tau = tau.hypot(k.sqrt() * b.tau);
    }
    CdpBound { mu, tau }
}

/// `k`-fold adaptive composition of `(epsilon, delta')`-DP mechanisms is
/// `(sqrt(2k ln(1/delta)) epsilon + k epsilon (e^epsilon - 1)/2, k delta' + delta)`-DP.
pub fn advanced_composition(k: u64, epsilon: f64, delta_prime: f64, delta: f64) -> Result<DpBound> {
    if k == 0 {
        return Err(domain("k must be at least 1"));
    }
    check_at_least("epsilon", epsilon, 0.0)?;
    if !delta_prime.is_finite() || !(0.0..1.0).contains(&delta_prime) {
        return Err(domain(format!(
            "delta' must lie in [0, 1), got {delta_prime}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let k_f = k as f64;
    let eps = (2.0 * k_f * -delta.ln()).sqrt() * epsilon + k_f * epsilon * epsilon.exp_m1() / 2.0;
    let total_delta = k_f * delta_prime + delta;
    if total_delta >= 1.0 {
        return Err(domain(format!(
            "k delta' + delta = {total_delta} is not below 1"
        )));
    }
    DpBound::new(eps, total_delta)
}

/// `k`-fold composition of `epsilon`-DP is `k epsilon`-DP.
pub fn basic_composition(k: u64, epsilon: f64) -> Result<DpBound> {
    if k == 0 {
        return Err(domain("k must be at least 1"));
    }
    check_at_least("epsilon", epsilon, 0.0)?;
    DpBound::pure(k as f64 * epsilon)
}

/// Exact distribution of the sum of independent loss variables.
///
/// An empty list gives the point mass at zero.
pub fn convolve_loss_rvs(rvs: &[PrivacyLossRV]) -> Result<PrivacyLossRV> {
    let mut acc = PrivacyLossRV::constant(0.0);
    for rv in rvs {
        let size = acc.atoms().len().saturating_mul(rv.atoms().len());
        if size > MAX_CONVOLUTION_ATOMS {
            return Err(Error::TooManyAtoms(size, MAX_CONVOLUTION_ATOMS));
        }
        let mut atoms = Vec::with_capacity(size);
        for a in acc.atoms() {
            for b in rv.atoms() {
                atoms.push(LossAtom {
                    loss: a.loss + b.loss,
                    prob: a.prob * b.prob,
                });
            }
        }
        acc = PrivacyLossRV::merged(atoms);
    }
    Ok(acc)
}
