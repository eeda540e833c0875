//! From pure DP to CDP.
//!
//! An `epsilon`-DP mechanism has privacy loss bounded in `[-epsilon, epsilon]`,
//! hence `epsilon`-subgaussian once centered, and expected loss at most
//! `epsilon (e^epsilon - 1) / 2`. The expectation bound is proven by splitting
//! any pair of distributions into an *antipodal* pair, whose per-outcome
//! log-ratios lie in `{-epsilon, 0, epsilon}`, without changing the max
//! divergence and without decreasing KL. [`antipodalize`] carries out that
//! split.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    aligned_support, kl_divergence, symmetric_max_divergence, DiscreteDistribution,
};
use crate::error::{check_at_least, domain, Error, Result};
use crate::mechanisms::CdpBound;

/// Tolerance on antipodal log-ratios.
pub const LOG_RATIO_TOLERANCE: f64 = 1e-9;

/// Tolerance on split masses.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// How far rounding may push the split exponent past `[-1, 1]` before it is
/// treated as an error rather than clamped.
pub const ALPHA_OVERSHOOT_TOLERANCE: f64 = 1e-9;

/// `epsilon`-DP implies `(epsilon (e^epsilon - 1) / 2, epsilon)`-CDP.
pub fn dp_to_cdp(epsilon: f64) -> Result<CdpBound> {
    check_at_least("epsilon", epsilon, 0.0)?;
    CdpBound::new(kl_tight_bound(epsilon), epsilon)
}

/// The older KL bound `epsilon (e^epsilon - 1)` for `epsilon`-close distributions.
pub fn drv_kl_bound(epsilon: f64) -> f64 {
    epsilon * epsilon.exp_m1()
}

/// The tight KL bound `epsilon (e^epsilon - 1) / 2`, exactly half of [`drv_kl_bound`].
pub fn kl_tight_bound(epsilon: f64) -> f64 {
    drv_kl_bound(epsilon) / 2.0
}

/// Where the mass of one original outcome went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub outcome: String,
    /// The added outcome `s_x`; `None` when the pair was left unsplit.
    pub split_outcome: Option<String>,
    /// Original masses `D[x]` and `D'[x]`.
    pub d_mass: f64,
    pub d_prime_mass: f64,
    /// Split exponent: `D[x] = e^(alpha epsilon) D'[x]`.
    pub alpha: f64,
    /// The split outcome carries no mass on either side.
    pub empty_split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntipodalPair {
    pub m: DiscreteDistribution,
    pub m_prime: DiscreteDistribution,
    pub epsilon: f64,
    pub split_map: Vec<SplitEntry>,
}

impl AntipodalPair {
    /// Treats an existing pair as antipodal without splitting anything.
    /// The split map records every outcome as mapped to itself.
    pub fn wrap(m: DiscreteDistribution, m_prime: DiscreteDistribution) -> Result<Self> {
        let epsilon = symmetric_max_divergence(&m, &m_prime)?;
        let split_map = m
            .iter()
            .map(|(label, mass)| {
                let other = m_prime.prob_of(label);
                SplitEntry {
                    outcome: label.to_string(),
                    split_outcome: None,
                    d_mass: mass,
                    d_prime_mass: other,
                    alpha: alpha_of(mass, other, epsilon),
                    empty_split: true,
                }
            })
            .collect();
        Ok(Self {
            m,
            m_prime,
            epsilon,
            split_map,
        })
    }
}

fn alpha_of(d: f64, p: f64, epsilon: f64) -> f64 {
    if epsilon > 0.0 && d > 0.0 && p > 0.0 {
        (d.ln() - p.ln()) / epsilon
    } else {
        0.0
    }
}

fn fresh_label(base: &str, taken: &std::collections::HashSet<String>) -> String {
    let mut label = format!("s_{base}");
    while taken.contains(&label) {
        label.push('\'');
    }
    label
}

/// Splits `(d, d_prime)` into an antipodal pair `(M, M')`.
///
/// For each outcome `x`, with `p = D'[x]` and `D[x] = e^(alpha eps) p`, the
/// masses become
///
/// ```text
/// M'[x]   = p (e^(alpha eps) - 1) / (e^(sign(alpha) eps) - 1)
/// M[x]    = e^(sign(alpha) eps) M'[x]
/// M[s_x]  = M'[s_x] = p (1 - (e^(alpha eps) - 1) / (e^(sign(alpha) eps) - 1))
/// ```
///
/// where `eps` is the symmetric max divergence of the input and `sign(0) = +1`.
/// Identical inputs have nothing to split and are returned unchanged with
/// `epsilon = 0`.
pub fn antipodalize(
    d: &DiscreteDistribution,
    d_prime: &DiscreteDistribution,
) -> Result<AntipodalPair> {
    let atoms = aligned_support(d, d_prime)?;
    let epsilon = symmetric_max_divergence(d, d_prime)?;
    if epsilon == 0.0 {
        return AntipodalPair::wrap(d.clone(), d_prime.clone());
    }

    let mut taken: std::collections::HashSet<String> = d
        .outcomes()
        .iter()
        .chain(d_prime.outcomes())
        .cloned()
        .collect();
    let mut outcomes = Vec::with_capacity(2 * atoms.len());
    let mut m = Vec::with_capacity(2 * atoms.len());
    let mut m_prime = Vec::with_capacity(2 * atoms.len());
    let mut split_map = Vec::with_capacity(atoms.len());

    for (label, dx, px) in atoms {
        let mut alpha = alpha_of(dx, px, epsilon);
        if alpha.abs() > 1.0 {
            if alpha.abs() > 1.0 + ALPHA_OVERSHOOT_TOLERANCE {
                return Err(Error::Precondition(format!(
                    "split exponent {alpha} for outcome {label:?} is outside [-1, 1]"
                )));
            }
            alpha = alpha.clamp(-1.0, 1.0);
        }
        let sign = if alpha >= 0.0 { 1.0 } else { -1.0 };
        let ratio = (alpha * epsilon).exp_m1() / (sign * epsilon).exp_m1();
        let mx_prime = px * ratio;
        let mx = (sign * epsilon).exp() * mx_prime;
        let ms = px * (1.0 - ratio);

        let split_label = fresh_label(label, &taken);
        taken.insert(split_label.clone());
        outcomes.push(label.to_string());
        outcomes.push(split_label.clone());
        m.extend([mx, ms]);
        m_prime.extend([mx_prime, ms]);
        split_map.push(SplitEntry {
            outcome: label.to_string(),
            split_outcome: Some(split_label),
            d_mass: dx,
            d_prime_mass: px,
            alpha,
            empty_split: ms <= 0.0,
        });
    }

    Ok(AntipodalPair {
        m: DiscreteDistribution::new(outcomes.clone(), m)?,
        m_prime: DiscreteDistribution::new(outcomes, m_prime)?,
        epsilon,
        split_map,
    })
}

/// Checks every antipodal-pair invariant:
/// log-ratios of positive atoms lie in `{-eps, 0, eps}` (within
/// [`LOG_RATIO_TOLERANCE`]), each split outcome has equal mass on both sides,
/// and the masses of `x` and `s_x` add back up to the original masses (within
/// [`MASS_TOLERANCE`]).
pub fn verify_antipodal(pair: &AntipodalPair) -> bool {
    let Ok(atoms) = aligned_support(&pair.m, &pair.m_prime) else {
        return false;
    };
    let eps = pair.epsilon;
    let ratios_ok = atoms.iter().all(|&(_, a, b)| {
        let r = a.ln() - b.ln();
        [-eps, 0.0, eps]
            .iter()
            .any(|v| (r - v).abs() <= LOG_RATIO_TOLERANCE)
    });
    if !ratios_ok {
        return false;
    }
    pair.split_map.iter().all(|e| {
        let mx = pair.m.prob_of(&e.outcome);
        let mx_prime = pair.m_prime.prob_of(&e.outcome);
        match &e.split_outcome {
            Some(s) => {
                let ms = pair.m.prob_of(s);
                let ms_prime = pair.m_prime.prob_of(s);
                (ms - ms_prime).abs() <= MASS_TOLERANCE
                    && (mx + ms - e.d_mass).abs() <= MASS_TOLERANCE
                    && (mx_prime + ms_prime - e.d_prime_mass).abs() <= MASS_TOLERANCE
            }
            None => {
                (mx - e.d_mass).abs() <= MASS_TOLERANCE
                    && (mx_prime - e.d_prime_mass).abs() <= MASS_TOLERANCE
            }
        }
    })
}

/// `|KL(M||M') - KL(M'||M)|`, zero for antipodal pairs.
pub fn kl_symmetry_gap(pair: &AntipodalPair) -> Result<f64> {
    Ok((kl_divergence(&pair.m, &pair.m_prime)? - kl_divergence(&pair.m_prime, &pair.m)?).abs())
}

/// Outcome of the numerical search for the pair maximizing KL under a
/// max-divergence constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSearch {
    pub epsilon: f64,
    /// Best KL found and the two-outcome pair `(p, 1-p)` vs `(q, 1-q)` achieving it.
    pub best_kl: f64,
    pub p: f64,
    pub q: f64,
    pub bound: f64,
    /// `bound - best_kl`.
    pub gap: f64,
}

/// Maximizes `KL((p,1-p) || (q,1-q))` subject to symmetric max divergence at
/// most `epsilon`, by a grid over `q` with iterative refinement. For each `q`
/// the objective is convex in `p`, so only the two endpoints of the feasible
/// `p` interval need checking.
pub fn search_extremal_pair(epsilon: f64) -> Result<ExtremalSearch> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(domain(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    let e = epsilon.exp();
    let kl2 = |p: f64, q: f64| {
        let mut v = 0.0;
        if p > 0.0 {
            v += p * (p.ln() - q.ln());
        }
        if p < 1.0 {
            v += (1.0 - p) * ((1.0 - p).ln() - (1.0 - q).ln());
        }
        v
    };
    // feasible p for a given q: q e^-eps <= p <= q e^eps and the same for 1-p, 1-q
    let endpoints = |q: f64| {
        let lo = (q / e).max(1.0 - (1.0 - q) * e);
        let hi = (q * e).min(1.0 - (1.0 - q) / e);
        [lo, hi]
    };
    let mut best = (f64::NEG_INFINITY, 0.5, 0.5);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..40 {
        let steps = 200;
        for i in 1..steps {
            let q = lo + (hi - lo) * i as f64 / steps as f64;
            if q <= 0.0 || q >= 1.0 {
                continue;
            }
            for p in endpoints(q) {
                if p > 0.0 && p < 1.0 {
                    let v = kl2(p, q);
                    if v > best.0 {
                        best = (v, p, q);
                    }
                }
            }
        }
        let width = (hi - lo) / 20.0;
        lo = (best.2 - width).max(0.0);
        hi = (best.2 + width).min(1.0);
    }
    let bound = kl_tight_bound(epsilon);
    Ok(ExtremalSearch {
        epsilon,
        best_kl: best.0,
        p: best.1,
        q: best.2,
        bound,
        gap: bound - best.0,
    })
}
