//! Seeded property suites behind `cdp verify`.
//!
//! Each suite runs a batch of randomized checks and reports, per check, how
//! many trials failed together with the first counterexample.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::composition::{compose_cdp, convolve_loss_rvs};
use crate::distributions::{
    kl_divergence, privacy_loss_rv, symmetric_max_divergence, DiscreteDistribution,
};
use crate::error::{domain, Error, Result};
use crate::group_privacy::{
    group_cdp_recursion, group_mu_closed_form, group_tau_closed_form, CLOSED_FORM_SMALLNESS,
};
use crate::mechanisms::{
    gaussian_cdp, gaussian_group_cdp, randomized_response_pair, sample_gaussian_loss, CdpBound,
    GaussianMechanismSpec, RNG_ALGORITHM,
};
use crate::reduction::{
    antipodalize, dp_to_cdp, kl_symmetry_gap, kl_tight_bound, verify_antipodal,
};
use crate::sampling::{stream_rng, PairGenerator};
use crate::subgaussian::{default_lambda_grid, sum_standard, tail_bound, verify_certificate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Reduction,
    Composition,
    Gaussian,
    Group,
}

impl Suite {
    pub fn default_trials(self) -> usize {
        match self {
            Suite::Reduction | Suite::Composition | Suite::Group => 1000,
            Suite::Gaussian => 1_000_000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Reduction => "reduction",
            Suite::Composition => "composition",
            Suite::Gaussian => "gaussian",
            Suite::Group => "group",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reduction" => Ok(Suite::Reduction),
            "composition" => Ok(Suite::Composition),
            "gaussian" => Ok(Suite::Gaussian),
            "group" => Ok(Suite::Group),
            other => Err(domain(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub counterexample: Option<Value>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub generator: String,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

struct Checks(Vec<CheckOutcome>);

impl Checks {
    fn new() -> Self {
        Checks(Vec::new())
    }

    fn record(&mut self, name: &str, ok: bool, witness: impl FnOnce() -> Value) {
        let idx = match self.0.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.0.push(CheckOutcome {
                    name: name.to_string(),
                    trials: 0,
                    failures: 0,
                    counterexample: None,
                });
                self.0.len() - 1
            }
        };
        let c = &mut self.0[idx];
        c.trials += 1;
        if !ok {
            c.failures += 1;
            if c.counterexample.is_none() {
                c.counterexample = Some(witness());
            }
        }
    }
}

fn pair_json(d: &DiscreteDistribution, d_prime: &DiscreteDistribution) -> Value {
    json!({ "d": d, "d_prime": d_prime })
}

pub fn run_suite(suite: Suite, seed: u64, trials: usize) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(domain("trials must be at least 1"));
    }
    let checks = match suite {
        Suite::Reduction => reduction_suite(seed, trials)?,
        Suite::Composition => composition_suite(seed, trials)?,
        Suite::Gaussian => gaussian_suite(seed, trials)?,
        Suite::Group => group_suite(seed, trials)?,
    };
    Ok(SuiteReport {
        suite,
        seed,
        trials,
        generator: RNG_ALGORITHM.to_string(),
        checks: checks.0,
    })
}

fn reduction_suite(seed: u64, trials: usize) -> Result<Checks> {
    let mut checks = Checks::new();
    let grid = default_lambda_grid();
    for pair in PairGenerator::default().sample_many(seed, trials)? {
        let (d, dp, eps) = (&pair.d, &pair.d_prime, pair.epsilon);
        let kl = kl_divergence(d, dp)?;
        checks.record(
            "kl_tight_bound",
            kl <= kl_tight_bound(eps) + 1e-12,
            || json!({ "pair": pair_json(d, dp), "kl": kl, "bound": kl_tight_bound(eps) }),
        );

        let ap = antipodalize(d, dp)?;
        checks.record(
            "antipodal_invariants",
            verify_antipodal(&ap),
            || json!({ "pair": pair_json(d, dp) }),
        );
        let eps_m = symmetric_max_divergence(&ap.m, &ap.m_prime)?;
        checks.record(
            "epsilon_preserved",
            (eps_m - eps).abs() <= 1e-12,
            || json!({ "pair": pair_json(d, dp), "before": eps, "after": eps_m }),
        );
        let kl_m = kl_divergence(&ap.m, &ap.m_prime)?;
        checks.record(
            "kl_not_decreased",
            kl_m - kl >= -1e-12,
            || json!({ "pair": pair_json(d, dp), "before": kl, "after": kl_m }),
        );
        let gap = kl_symmetry_gap(&ap)?;
        checks.record(
            "kl_symmetric",
            gap <= 1e-12,
            || json!({ "pair": pair_json(d, dp), "gap": gap }),
        );

        let cert = verify_certificate(&privacy_loss_rv(d, dp)?, eps, &grid)?;
        checks.record(
            "pure_dp_subgaussian",
            cert.passes(),
            || json!({ "pair": pair_json(d, dp), "certificate": cert }),
        );

        let b = dp_to_cdp(eps)?;
        checks.record(
            "halving",
            b.mu == crate::reduction::drv_kl_bound(eps) / 2.0,
            || json!({ "epsilon": eps }),
        );
    }
    Ok(checks)
}

fn composition_suite(seed: u64, trials: usize) -> Result<Checks> {
    let mut checks = Checks::new();
    let grid = default_lambda_grid();
    for i in 0..trials {
        let mut rng = stream_rng(seed, i as u64);
        let k = rng.random_range(1..=8usize);
        let eps: f64 = rng.random_range(0.01..=1.0);
        let (p, q) = randomized_response_pair(eps)?;
        let rv = privacy_loss_rv(&p, &q)?;
        let joint = convolve_loss_rvs(&vec![rv.clone(); k])?;
        let want = k as f64 * rv.mean();
        checks.record(
            "mean_additivity",
            (joint.mean() - want).abs() <= 1e-10,
            || json!({ "k": k, "epsilon": eps, "mean": joint.mean(), "expected": want }),
        );
        let tau = sum_standard(&vec![eps; k])?;
        let cert = verify_certificate(&joint, tau, &grid)?;
        checks.record(
            "certificate_composes",
            cert.passes(),
            || json!({ "k": k, "epsilon": eps, "certificate": cert }),
        );
        let single = dp_to_cdp(eps)?;
        let composed = compose_cdp(&vec![single; k].into());
        let ok =
            composed.mu == k as f64 * single.mu && composed.tau == (k as f64).sqrt() * single.tau;
        checks.record(
            "equal_bounds_compose_exactly",
            ok,
            || json!({ "k": k, "bound": single }),
        );
        checks.record(
            "composed_mean_dominates_oracle",
            joint.mean() <= composed.mu + 1e-12,
            || json!({ "k": k, "epsilon": eps, "oracle_mean": joint.mean(), "composed": composed }),
        );

        // heterogeneous independent pairs
        let gen = PairGenerator {
            max_support: 4,
            max_epsilon: 1.0,
            ..PairGenerator::default()
        };
        let a = gen.sample(&mut rng)?;
        let b = gen.sample(&mut rng)?;
        let ra = privacy_loss_rv(&a.d, &a.d_prime)?;
        let rb = privacy_loss_rv(&b.d, &b.d_prime)?;
        let ab = convolve_loss_rvs(&[ra.clone(), rb.clone()])?;
        let tau = sum_standard(&[a.epsilon, b.epsilon])?;
        let cert = verify_certificate(&ab, tau, &grid)?;
        checks.record("certificate_composes_mixed", cert.passes(), || {
            json!({ "first": pair_json(&a.d, &a.d_prime), "second": pair_json(&b.d, &b.d_prime) })
        });
        checks.record("mean_additivity_mixed", (ab.mean() - ra.mean() - rb.mean()).abs() <= 1e-10, || {
            json!({ "first": pair_json(&a.d, &a.d_prime), "second": pair_json(&b.d, &b.d_prime) })
        });
    }
    Ok(checks)
}

fn gaussian_suite(seed: u64, trials: usize) -> Result<Checks> {
    let mut checks = Checks::new();
    let specs = [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (0.5, 3.0)];
    for (i, &(sensitivity, sigma)) in specs.iter().enumerate() {
        let spec = GaussianMechanismSpec::new(sensitivity, sigma)?;
        let bound = gaussian_cdp(&spec);
        checks.record(
            "mu_is_half_tau_squared",
            bound.mu == bound.tau * bound.tau / 2.0,
            || json!(spec),
        );
        let samples = sample_gaussian_loss(&spec, trials, seed.wrapping_add(i as u64))?;
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let tau = bound.tau;
        checks.record(
            "sample_mean",
            (mean - bound.mu).abs() <= 3.0 * tau / n.sqrt(),
            || json!({ "spec": spec, "mean": mean, "expected": bound.mu, "n": trials }),
        );
        checks.record(
            "sample_std",
            (var.sqrt() - tau).abs() <= 0.01 * tau,
            || json!({ "spec": spec, "std": var.sqrt(), "expected": tau, "n": trials }),
        );
        for t in [1.0, 2.0, 3.0] {
            let threshold = bound.mu + t * tau;
            let frac = samples.iter().filter(|&&x| x >= threshold).count() as f64 / n;
            let limit = tail_bound(tau, t)?;
            checks.record(
                "tail_bound",
                frac <= limit,
                || json!({ "spec": spec, "t": t, "empirical": frac, "bound": limit }),
            );
        }
        for s in 1..=8u64 {
            let scaled = GaussianMechanismSpec::new(s as f64 * sensitivity, sigma)?;
            let a = gaussian_group_cdp(&spec, s)?;
            let b = gaussian_cdp(&scaled);
            let ok = (a.tau - b.tau).abs() <= 1e-15 * b.tau.max(1.0)
                && (a.mu - b.mu).abs() <= 1e-15 * b.mu.max(1.0);
            checks.record(
                "group_sensitivity_identity",
                ok,
                || json!({ "spec": spec, "s": s }),
            );
        }
    }
    Ok(checks)
}

/// Two-outcome chain `z_0, ..., z_s` with `z_i = (e^(i eps), 1) / (1 + e^(i eps))`;
/// consecutive members are `eps`-close in both directions.
pub fn randomized_response_chain(eps: f64, s: usize) -> Result<Vec<DiscreteDistribution>> {
    (0..=s)
        .map(|i| {
            let x = i as f64 * eps;
            let hi = 1.0 / (1.0 + (-x).exp());
            DiscreteDistribution::from_probs(vec![hi, 1.0 / (1.0 + x.exp())])
        })
        .collect()
}

fn group_suite(seed: u64, trials: usize) -> Result<Checks> {
    let mut checks = Checks::new();
    let grid = default_lambda_grid();
    for i in 0..trials {
        let mut rng = stream_rng(seed, i as u64);

        // chain oracle
        let eps: f64 = rng.random_range(0.001..=0.025);
        let s = if rng.random_bool(0.5) { 2 } else { 4 };
        let chain = randomized_response_chain(eps, s)?;
        let step = dp_to_cdp(eps)?;
        let group = group_cdp_recursion(&step, s as u64, true)?;
        let direct = privacy_loss_rv(&chain[0], &chain[s])?;
        checks.record(
            "chain_mean",
            direct.mean() <= group.bound.mu,
            || json!({ "epsilon": eps, "s": s, "kl": direct.mean(), "bound": group.bound }),
        );
        let cert = verify_certificate(&direct, group.bound.tau, &grid)?;
        checks.record(
            "chain_certificate",
            cert.passes(),
            || json!({ "epsilon": eps, "s": s, "certificate": cert }),
        );
        checks.record(
            "steps_keep_invariant",
            group
                .steps
                .iter()
                .all(|b| b.mu <= b.tau * b.tau / 2.0 * (1.0 + 1e-9)),
            || json!({ "steps": group.steps }),
        );

        // closed forms against the recursion
        let m = rng.random_range(0..=6u32);
        let s = 1u64 << m;
        let limit = if m == 0 {
            0.25
        } else {
            CLOSED_FORM_SMALLNESS / (s as f64 * f64::from(m).powi(3) * 34f64.powi(3))
        };
        let tau = limit * rng.random_range(1e-3..=1.0f64);
        let start = CdpBound::new(tau * tau / 2.0 * rng.random_range(0.0..=1.0f64), tau)?;
        let rec = group_cdp_recursion(&start, s, false)?;
        let t_cf = group_tau_closed_form(tau, s)?;
        let m_cf = group_mu_closed_form(tau, s)?;
        checks.record("closed_form_dominates", rec.bound.tau <= t_cf * (1.0 + 1e-12) && rec.bound.mu <= m_cf * (1.0 + 1e-12), || {
            json!({ "start": start, "s": s, "recursion": rec.bound, "closed_form": { "mu": m_cf, "tau": t_cf } })
        });

        // recursion against the exact Gaussian group bound
        let spec = GaussianMechanismSpec::new(1.0, 1.0 / tau.max(f64::MIN_POSITIVE))?;
        let exact = gaussian_group_cdp(&spec, s)?;
        let rec = group_cdp_recursion(&gaussian_cdp(&spec), s, false)?;
        checks.record(
            "recursion_dominates_gaussian",
            rec.bound.tau >= exact.tau * (1.0 - 1e-12) && rec.bound.mu >= exact.mu * (1.0 - 1e-12),
            || json!({ "tau": tau, "s": s, "recursion": rec.bound, "exact": exact }),
        );
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_runs() {
        for suite in [Suite::Reduction, Suite::Composition, Suite::Group] {
            let r = run_suite(suite, 42, 50).unwrap();
            assert!(r.passed(), "{}", serde_json::to_string_pretty(&r).unwrap());
        }
        let r = run_suite(Suite::Gaussian, 42, 200_000).unwrap();
        assert!(r.passed(), "{}", serde_json::to_string_pretty(&r).unwrap());
    }

    #[test]
    fn chain_members_are_eps_close() {
        let chain = randomized_response_chain(0.05, 4).unwrap();
        for w in chain.windows(2) {
            assert!(symmetric_max_divergence(&w[0], &w[1]).unwrap() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("group".parse::<Suite>().unwrap(), Suite::Group);
        assert!("bogus".parse::<Suite>().is_err());
        assert!(run_suite(Suite::Group, 0, 0).is_err());
    }
}
