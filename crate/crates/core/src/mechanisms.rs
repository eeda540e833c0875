//! The Gaussian mechanism in closed form, noise calibration, and the small
//! discrete mechanisms used as reference pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDistribution;
use crate::error::{check_at_least, check_positive, domain, Error, Result};

/// Name of the generator behind every seeded sampler in this crate.
pub const RNG_ALGORITHM: &str = "chacha20";

/// `(mu, tau)`-CDP: the privacy loss has mean at most `mu` and its centered
/// version is `tau`-subgaussian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCdp")]
pub struct CdpBound {
    pub mu: f64,
    pub tau: f64,
}

#[derive(Deserialize)]
struct RawCdp {
    mu: f64,
    tau: f64,
}

impl TryFrom<RawCdp> for CdpBound {
    type Error = Error;
    fn try_from(raw: RawCdp) -> Result<Self> {
        CdpBound::new(raw.mu, raw.tau)
    }
}

impl CdpBound {
    pub const ZERO: CdpBound = CdpBound { mu: 0.0, tau: 0.0 };

    pub fn new(mu: f64, tau: f64) -> Result<Self> {
        check_at_least("mu", mu, 0.0)?;
        check_at_least("tau", tau, 0.0)?;
        Ok(Self { mu, tau })
    }

    /// `self` is at least as strong as `other` in both components.
    pub fn dominated_by(&self, other: &CdpBound) -> bool {
        self.mu <= other.mu && self.tau <= other.tau
    }
}

/// `(epsilon, delta)`-differential privacy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDp")]
pub struct DpBound {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Deserialize)]
struct RawDp {
    epsilon: f64,
    #[serde(default)]
    delta: f64,
}

impl TryFrom<RawDp> for DpBound {
    type Error = Error;
    fn try_from(raw: RawDp) -> Result<Self> {
        DpBound::new(raw.epsilon, raw.delta)
    }
}

impl DpBound {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        check_at_least("epsilon", epsilon, 0.0)?;
        if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
            return Err(domain(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }
}

/// A real-valued query of sensitivity `sensitivity` answered with
/// `N(0, sigma^2)` noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussian")]
pub struct GaussianMechanismSpec {
    pub sensitivity: f64,
    pub sigma: f64,
}

#[derive(Deserialize)]
struct RawGaussian {
    sensitivity: f64,
    sigma: f64,
}

impl TryFrom<RawGaussian> for GaussianMechanismSpec {
    type Error = Error;
    fn try_from(raw: RawGaussian) -> Result<Self> {
        GaussianMechanismSpec::new(raw.sensitivity, raw.sigma)
    }
}

impl GaussianMechanismSpec {
    pub fn new(sensitivity: f64, sigma: f64) -> Result<Self> {
        check_at_least("sensitivity", sensitivity, 0.0)?;
        check_positive("sigma", sigma)?;
        Ok(Self { sensitivity, sigma })
    }

    /// `sensitivity / sigma`, the subgaussian standard of the loss.
    pub fn tau(&self) -> f64 {
        self.sensitivity / self.sigma
    }
}

/// Mechanism description as read from JSON: `{"kind": "gaussian", ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MechanismSpec {
    Gaussian(GaussianMechanismSpec),
}

/// The Gaussian mechanism is `(tau^2/2, tau)`-CDP with `tau = sensitivity / sigma`.
pub fn gaussian_cdp(spec: &GaussianMechanismSpec) -> CdpBound {
    let tau = spec.tau();
    CdpBound {
        mu: tau * tau / 2.0,
        tau,
    }
}

/// Mean and standard deviation of the (exactly Gaussian) privacy loss.
pub fn gaussian_loss_params(spec: &GaussianMechanismSpec) -> (f64, f64) {
    let tau = spec.tau();
    (tau * tau / 2.0, tau)
}

/// Draws `n` privacy-loss samples of the Gaussian mechanism.
///
/// For noise `x ~ N(0, sigma^2)` the loss of the observed output is
/// `tau * (x / sigma) + tau^2 / 2`. The stream is a pure function of
/// `(spec, n, seed)`; see [`RNG_ALGORITHM`].
pub fn sample_gaussian_loss(spec: &GaussianMechanismSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    let tau = spec.tau();
    let offset = tau * tau / 2.0;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let x = spec.sigma * z;
            tau * (x / spec.sigma) + offset
        })
        .collect())
}

/// Smallest `sigma` whose Gaussian mechanism meets `target` in both components.
///
/// A zero-sensitivity query needs no noise; `1.0` is returned by convention.
pub fn calibrate_gaussian_for_cdp(sensitivity: f64, target: &CdpBound) -> Result<f64> {
    check_at_least("sensitivity", sensitivity, 0.0)?;
    if sensitivity == 0.0 {
        return Ok(1.0);
    }
    let tau = target.tau.min((2.0 * target.mu).sqrt());
    if tau <= 0.0 {
        return Err(domain(format!(
            "target ({}, {}) cannot be met by any finite sigma for sensitivity {sensitivity}",
            target.mu, target.tau
        )));
    }
    Ok(sensitivity / tau)
}

/// The classic `(epsilon, delta)` Gaussian calibration
/// `sigma = sensitivity * sqrt(2 ln(1/delta)) / epsilon`.
pub fn calibrate_gaussian_for_dp(sensitivity: f64, bound: &DpBound) -> Result<f64> {
    check_at_least("sensitivity", sensitivity, 0.0)?;
    check_positive("epsilon", bound.epsilon)?;
    if !(bound.delta > 0.0 && bound.delta < 1.0) {
        return Err(domain(format!(
            "delta must lie in (0, 1), got {}",
            bound.delta
        )));
    }
    if sensitivity == 0.0 {
        return Ok(1.0);
    }
    Ok(sensitivity * (-2.0 * bound.delta.ln()).sqrt() / bound.epsilon)
}

/// Exact CDP of the Gaussian mechanism for groups of `s` rows: the group
/// sensitivity is `s * sensitivity`, so `tau_s = s * sensitivity / sigma`.
pub fn gaussian_group_cdp(spec: &GaussianMechanismSpec, s: u64) -> Result<CdpBound> {
    if s == 0 {
        return Err(domain("group size must be at least 1"));
    }
    let tau = s as f64 * spec.sensitivity / spec.sigma;
    Ok(CdpBound {
        mu: tau * tau / 2.0,
        tau,
    })
}

/// Randomized response with parameter `epsilon`: `P` answers `"yes"` with
/// probability `e^eps / (1 + e^eps)`, `Q` is its mirror image.
pub fn randomized_response_pair(
    epsilon: f64,
) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    check_positive("epsilon", epsilon)?;
    // 1/(1+e^-eps) stays accurate for large epsilon
    let hi = 1.0 / (1.0 + (-epsilon).exp());
    let lo = 1.0 / (1.0 + epsilon.exp());
    let labels = || vec!["yes".to_string(), "no".to_string()];
    Ok((
        DiscreteDistribution::new(labels(), vec![hi, lo])?,
        DiscreteDistribution::new(labels(), vec![lo, hi])?,
    ))
}

/// Pure-DP parameter `sensitivity / b` of the Laplace mechanism with scale `b`.
pub fn laplace_epsilon(sensitivity: f64, b: f64) -> Result<f64> {
    check_at_least("sensitivity", sensitivity, 0.0)?;
    check_positive("b", b)?;
    Ok(sensitivity / b)
}
