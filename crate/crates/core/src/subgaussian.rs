//! Closed-form facts about subgaussian random variables, and grid
//! certificates that a finite loss variable is `tau`-subgaussian.
//!
//! A zero-mean `X` is `tau`-subgaussian when `E[exp(lambda X)] <=
//! exp(lambda^2 tau^2 / 2)` for every real `lambda`.

use serde::{Deserialize, Serialize};

use crate::distributions::{check_lambda_grid, PrivacyLossRV};
use crate::error::{check_at_least, check_positive, domain, Result};

/// A certificate passes when the largest log-MGF excess is at most this.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

/// Largest `k` accepted by [`moment_bound`].
pub const MAX_MOMENT_ORDER: u32 = 20;

/// The default certificate grid: `±2^i / 8` for `i = 0..=9`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=9)
        .map(|i| f64::from(1u32 << i) / 8.0)
        .flat_map(|l| [l, -l])
        .collect()
}

/// `exp(-t^2 / 2)`: bound on `Pr[X >= t tau]` (and on `Pr[X <= -t tau]`).
pub fn tail_bound(tau: f64, t: f64) -> Result<f64> {
    check_positive("tau", tau)?;
    check_at_least("t", t, 0.0)?;
    Ok((-0.5 * t * t).exp())
}

/// Hoeffding's lemma: a zero-mean variable supported on `[a, b]` is
/// `(b - a)/2`-subgaussian.
pub fn hoeffding_standard(a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(domain("interval endpoints must be finite"));
    }
    if a > b {
        return Err(domain(format!("empty interval [{a}, {b}]")));
    }
    Ok((b - a) / 2.0)
}

/// Upper bound `ceil(k/2)! * 2^(ceil(k/2)+1) * tau^k` on the `k`-th moment of a
/// `tau`-subgaussian variable.
pub fn moment_bound(tau: f64, k: u32) -> Result<f64> {
    check_at_least("tau", tau, 0.0)?;
    if k == 0 || k > MAX_MOMENT_ORDER {
        return Err(domain(format!(
            "moment order must be in 1..={MAX_MOMENT_ORDER}, got {k}"
        )));
    }
    let half = k.div_ceil(2);
    let factorial: u64 = (1..=u64::from(half)).product();
    let power = 1u64 << (half + 1);
    Ok((factorial * power) as f64 * tau.powi(k as i32))
}

/// Standard of a sum of (possibly dependent) subgaussians: `sqrt(sum tau_i^2)`.
pub fn sum_standard(taus: &[f64]) -> Result<f64> {
    for &t in taus {
        check_at_least("tau", t, 0.0)?;
    }
    Ok(taus.iter().map(|t| t * t).sum::<f64>().sqrt())
}

/// Bound on `E[X exp(Y)]` for `Y` centered `tau`-subgaussian with `tau <= 1/3`:
/// `E[X] + sqrt(E[X^2]) (tau + 3 tau^2)`.
pub fn product_exp_bound(mean_x: f64, second_moment_x: f64, tau: f64) -> Result<f64> {
    if !mean_x.is_finite() {
        return Err(domain("mean_x must be finite"));
    }
    check_at_least("second_moment_x", second_moment_x, 0.0)?;
    // E[X^2] >= E[X]^2, up to rounding
    if mean_x * mean_x > second_moment_x * (1.0 + 1e-12) {
        return Err(domain(format!(
            "second moment {second_moment_x} is below the squared mean {}",
            mean_x * mean_x
        )));
    }
    check_positive("tau", tau)?;
    if tau > 1.0 / 3.0 {
        return Err(domain(format!("tau must be at most 1/3, got {tau}")));
    }
    Ok(mean_x + second_moment_x.sqrt() * (tau + 3.0 * tau * tau))
}

/// Result of checking the subgaussian MGF inequality on a grid of `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgaussianCertificate {
    pub tau: f64,
    pub lambda_grid: Vec<f64>,
    /// Largest `ln E[exp(lambda (X - EX))] - lambda^2 tau^2 / 2` over the grid.
    pub max_violation: f64,
    /// The `lambda` attaining `max_violation`.
    pub worst_lambda: f64,
}

impl SubgaussianCertificate {
    pub fn passes(&self) -> bool {
        self.max_violation <= CERTIFICATE_TOLERANCE
    }
}

pub fn verify_certificate(
    rv: &PrivacyLossRV,
    tau: f64,
    grid: &[f64],
) -> Result<SubgaussianCertificate> {
    check_at_least("tau", tau, 0.0)?;
    check_lambda_grid(grid)?;
    let centered = rv.centered();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_lambda = grid[0];
    for &lambda in grid {
        let excess = centered.log_mgf(lambda)? - 0.5 * lambda * lambda * tau * tau;
        if excess > max_violation {
            max_violation = excess;
            worst_lambda = lambda;
        }
    }
    Ok(SubgaussianCertificate {
        tau,
        lambda_grid: grid.to_vec(),
        max_violation,
        worst_lambda,
    })
}
