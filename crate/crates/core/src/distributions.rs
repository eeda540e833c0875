//! Finite probability distributions, the divergences between them, and the
//! privacy loss random variable of a pair.
//!
//! All log-ratios are natural logs computed as `ln p - ln q`, never as the log
//! of a quotient, so tiny probabilities do not underflow.
//!
//! Outcomes carrying zero mass under both distributions are ignored when
//! comparing supports. A pair whose supports differ otherwise is rejected with
//! [`Error::SupportMismatch`].

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, domain, Error, Result, Side};

/// Distributions must sum to one within this tolerance; nothing is renormalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Loss atoms closer than this are merged into one.
pub const LOSS_MERGE_TOLERANCE: f64 = 1e-12;

/// Largest support for which the delta-approximate max divergence is solved
/// by exhaustive subset search.
pub const EXHAUSTIVE_SUBSET_LIMIT: usize = 20;

/// `ln(f64::MAX)`: the largest exponent `exp` can represent.
pub const MAX_EXPONENT: f64 = 709.782_712_893_384;

/// A finite probability vector over uniquely labelled outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DiscreteDistribution {
    outcomes: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    outcomes: Vec<serde_json::Value>,
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for DiscreteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let outcomes = raw
            .outcomes
            .into_iter()
            .map(|v| match v {
                serde_json::Value::String(s) => Ok(s),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                other => Err(Error::InvalidDistribution(format!(
                    "outcome labels must be strings or numbers, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteDistribution::new(outcomes, raw.probs)
    }
}

impl From<DiscreteDistribution> for RawDistribution {
    fn from(d: DiscreteDistribution) -> Self {
        RawDistribution {
            outcomes: d
                .outcomes
                .into_iter()
                .map(serde_json::Value::String)
                .collect(),
            probs: d.probs,
        }
    }
}

impl DiscreteDistribution {
    pub fn new(outcomes: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        let mut seen = HashMap::with_capacity(outcomes.len());
        for (i, label) in outcomes.iter().enumerate() {
            if let Some(j) = seen.insert(label.as_str(), i) {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate outcome label {label:?} at positions {j} and {i}"
                )));
            }
        }
        for (label, &p) in outcomes.iter().zip(&probs) {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability of {label:?} is {p}, outside [0, 1]"
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { outcomes, probs })
    }

    /// Labels outcomes `"0"`, `"1"`, ...
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let outcomes = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(outcomes, probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution(
                "uniform over zero outcomes".into(),
            ));
        }
        Self::from_probs(vec![1.0 / n as f64; n])
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.outcomes
            .iter()
            .map(String::as_str)
            .zip(self.probs.iter().copied())
    }

    /// Mass on `label`; zero for labels outside the outcome list.
    pub fn prob_of(&self, label: &str) -> f64 {
        self.iter()
            .find(|(l, _)| *l == label)
            .map_or(0.0, |(_, p)| p)
    }
}

/// Outcome-aligned positive masses of a pair with equal supports.
pub(crate) fn aligned_support<'a>(
    p: &'a DiscreteDistribution,
    q: &'a DiscreteDistribution,
) -> Result<Vec<(&'a str, f64, f64)>> {
    let q_mass: HashMap<&str, f64> = q.iter().collect();
    let mut atoms = Vec::with_capacity(p.len());
    for (label, pm) in p.iter().filter(|(_, m)| *m > 0.0) {
        match q_mass.get(label) {
            Some(&qm) if qm > 0.0 => atoms.push((label, pm, qm)),
            _ => {
                return Err(Error::SupportMismatch {
                    outcome: label.to_string(),
                    zero_side: Side::Q,
                })
            }
        }
    }
    for (label, qm) in q.iter() {
        if qm > 0.0 && p.prob_of(label) <= 0.0 {
            return Err(Error::SupportMismatch {
                outcome: label.to_string(),
                zero_side: Side::P,
            });
        }
    }
    Ok(atoms)
}

/// KL divergence `D(p || q)` in nats.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    Ok(aligned_support(p, q)?
        .into_iter()
        .map(|(_, pm, qm)| pm * (pm.ln() - qm.ln()))
        .sum())
}

/// Max divergence `D_inf(p || q)`.
///
/// The maximum over events of `ln(p(S)/q(S))` is attained on a single outcome:
/// `p(S)/q(S)` is a mediant of the per-outcome ratios and so never exceeds the
/// largest of them.
pub fn max_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    Ok(aligned_support(p, q)?
        .into_iter()
        .map(|(_, pm, qm)| pm.ln() - qm.ln())
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `max(D_inf(p||q), D_inf(q||p))`, the epsilon of the tightest pure-DP
/// guarantee relating the pair.
pub fn symmetric_max_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    Ok(aligned_support(p, q)?
        .into_iter()
        .map(|(_, pm, qm)| (pm.ln() - qm.ln()).abs())
        .fold(0.0, f64::max))
}

/// Value of the delta-approximate max divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxMaxDivergence {
    pub value: f64,
    /// Set when the support was too large for exhaustive search and the
    /// ratio-greedy construction was used instead; `value` is then a lower bound.
    pub heuristic: bool,
}

/// `max ln(p(S)/q(S))` over events `S` inside the support of `p` with
/// `p(S) >= delta`.
///
/// The pair may have different supports as long as the mass `p` places
/// outside the support of `q` is at most `delta` (equality is accepted).
/// Events with `q(S) = 0` are skipped.
pub fn approx_max_divergence(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    delta: f64,
) -> Result<ApproxMaxDivergence> {
    if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
        return Err(domain(format!("delta must lie in [0, 1), got {delta}")));
    }
    let atoms: Vec<(f64, f64)> = p
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|(l, m)| (m, q.prob_of(l)))
        .collect();
    let outside: f64 = atoms
        .iter()
        .filter(|(_, qm)| *qm <= 0.0)
        .map(|(pm, _)| pm)
        .sum();
    if outside > delta {
        return Err(Error::DeltaMassExceeded {
            mass: outside,
            delta,
        });
    }

    let mut best = f64::NEG_INFINITY;
    let mut consider = |ps: f64, qs: f64| {
        if ps >= delta && qs > 0.0 {
            best = best.max(ps.ln() - qs.ln());
        }
    };

    let heuristic = atoms.len() > EXHAUSTIVE_SUBSET_LIMIT;
    if heuristic {
        let mut sorted = atoms.clone();
        // outside-support atoms first (infinite ratio), then by decreasing p/q
        sorted.sort_by(|a, b| {
            let ra = if a.1 > 0.0 {
                a.0.ln() - a.1.ln()
            } else {
                f64::INFINITY
            };
            let rb = if b.1 > 0.0 {
                b.0.ln() - b.1.ln()
            } else {
                f64::INFINITY
            };
            rb.total_cmp(&ra)
        });
        let (mut ps, mut qs) = (0.0, 0.0);
        for (pm, qm) in sorted {
            ps += pm;
            qs += qm;
            consider(ps, qs);
        }
    } else {
        let n = atoms.len();
        let mut p_sum = vec![0.0f64; 1 << n];
        let mut q_sum = vec![0.0f64; 1 << n];
        for mask in 1usize..(1 << n) {
            let low = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            p_sum[mask] = p_sum[rest] + atoms[low].0;
            q_sum[mask] = q_sum[rest] + atoms[low].1;
            consider(p_sum[mask], q_sum[mask]);
        }
    }
    Ok(ApproxMaxDivergence {
        value: best,
        heuristic,
    })
}

/// One atom of a privacy loss random variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossAtom {
    /// Privacy loss in nats.
    pub loss: f64,
    pub prob: f64,
}

/// A finite random variable over privacy-loss values.
///
/// Atoms are kept sorted by loss, with zero-probability atoms dropped and
/// atoms within [`LOSS_MERGE_TOLERANCE`] of each other merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyLossRV {
    atoms: Vec<LossAtom>,
}

impl PrivacyLossRV {
    pub fn new(atoms: Vec<LossAtom>) -> Result<Self> {
        for a in &atoms {
            if !a.loss.is_finite() {
                return Err(domain(format!("loss value {} is not finite", a.loss)));
            }
            if !a.prob.is_finite() || !(0.0..=1.0).contains(&a.prob) {
                return Err(domain(format!(
                    "atom probability {} outside [0, 1]",
                    a.prob
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(domain(format!("atom probabilities sum to {total}, not 1")));
        }
        Ok(Self::merged(atoms))
    }

    /// Point mass at `loss`.
    pub fn constant(loss: f64) -> Self {
        Self {
            atoms: vec![LossAtom { loss, prob: 1.0 }],
        }
    }

    /// Sorts, drops empty atoms and merges near-equal losses. Merged atoms
    /// take the probability-weighted mean loss so the mean is preserved.
    pub(crate) fn merged(mut atoms: Vec<LossAtom>) -> Self {
        atoms.retain(|a| a.prob > 0.0);
        atoms.sort_by(|a, b| a.loss.total_cmp(&b.loss));
        let mut out: Vec<LossAtom> = Vec::with_capacity(atoms.len());
        let mut anchor = f64::NAN;
        for a in atoms {
            match out.last_mut() {
                Some(last) if a.loss - anchor <= LOSS_MERGE_TOLERANCE => {
                    let prob = last.prob + a.prob;
                    last.loss = (last.loss * last.prob + a.loss * a.prob) / prob;
                    last.prob = prob;
                }
                _ => {
                    anchor = a.loss;
                    out.push(a);
                }
            }
        }
        Self { atoms: out }
    }

    pub fn atoms(&self) -> &[LossAtom] {
        &self.atoms
    }

    pub fn is_degenerate(&self) -> bool {
        self.atoms.len() <= 1
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.loss * a.prob).sum()
    }

    /// Raw moment `E[X^k]`.
    pub fn moment(&self, k: i32) -> f64 {
        self.atoms.iter().map(|a| a.loss.powi(k) * a.prob).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms
            .iter()
            .map(|a| (a.loss - m).powi(2) * a.prob)
            .sum()
    }

    /// The variable shifted to mean zero.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| LossAtom {
                    loss: a.loss - m,
                    prob: a.prob,
                })
                .collect(),
        }
    }

    /// `ln E[exp(lambda * X)]`, evaluated by log-sum-exp.
    pub fn log_mgf(&self, lambda: f64) -> Result<f64> {
        let mut exponents = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let z = lambda * a.loss;
            if !z.is_finite() || z.abs() > MAX_EXPONENT {
                return Err(Error::ExponentOverflow(z));
            }
            exponents.push(a.prob.ln() + z);
        }
        let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(top + exponents.iter().map(|e| (e - top).exp()).sum::<f64>().ln())
    }

    /// Writes the atoms as CSV with header `loss,prob`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for a in &self.atoms {
            w.serialize(a)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The privacy loss random variable `L(p || q)`: draw an outcome `x` from `p`
/// and report `ln(p[x]/q[x])`.
pub fn privacy_loss_rv(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<PrivacyLossRV> {
    let atoms = aligned_support(p, q)?
        .into_iter()
        .map(|(_, pm, qm)| LossAtom {
            loss: pm.ln() - qm.ln(),
            prob: pm,
        })
        .collect();
    Ok(PrivacyLossRV::merged(atoms))
}

pub(crate) fn check_lambda_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(domain("lambda grid is empty"));
    }
    for &l in grid {
        if !l.is_finite() || l == 0.0 {
            return Err(domain(format!(
                "lambda grid entries must be finite and nonzero, got {l}"
            )));
        }
    }
    Ok(())
}

/// Grid estimate of the subgaussian standard of the centered variable:
/// `max over lambda of sqrt(2 ln E[exp(lambda (X - E X))] / lambda^2)`.
///
/// This is a lower bound on the true standard and approaches it as the grid
/// is refined.
pub fn empirical_subgaussian_standard(rv: &PrivacyLossRV, lambda_grid: &[f64]) -> Result<f64> {
    check_lambda_grid(lambda_grid)?;
    let centered = rv.centered();
    let mut best = 0.0f64;
    for &lambda in lambda_grid {
        let log_mgf = centered.log_mgf(lambda)?;
        best = best.max((2.0 * log_mgf / (lambda * lambda)).max(0.0).sqrt());
    }
    Ok(best)
}

/// Discretized `N(mean, std^2)` loss on `points` equally spaced atoms over
/// `mean ± width * std`. Used to probe Gaussian loss behaviour with finite tools.
pub fn discretized_gaussian_loss(
    mean: f64,
    std: f64,
    width: f64,
    points: usize,
) -> Result<PrivacyLossRV> {
    check_positive("std", std)?;
    check_positive("width", width)?;
    if points < 2 {
        return Err(domain("need at least two points"));
    }
    let step = 2.0 * width / (points - 1) as f64;
    let weights: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let z = -width + step * i as f64;
            (mean + std * z, (-0.5 * z * z).exp())
        })
        .collect();
    let total: f64 = weights.iter().map(|w| w.1).sum();
    Ok(PrivacyLossRV::merged(
        weights
            .into_iter()
            .map(|(loss, w)| LossAtom {
                loss,
                prob: w / total,
            })
            .collect(),
    ))
}
