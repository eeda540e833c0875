//! Acceptance checks, one line per criterion. Run with
//! `cargo test --test acceptance`; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cdp_accountant::composition::{advanced_composition, compose_cdp, convolve_loss_rvs};
use cdp_accountant::distributions::{
    kl_divergence, privacy_loss_rv, symmetric_max_divergence, DiscreteDistribution,
};
use cdp_accountant::group_privacy::{
    group_cdp_recursion, group_mu_closed_form, group_tau_closed_form, CLOSED_FORM_SMALLNESS,
};
use cdp_accountant::ledger::{exceedance_probability, record, to_approx_dp, Ledger};
use cdp_accountant::mechanisms::{
    gaussian_cdp, gaussian_group_cdp, randomized_response_pair, sample_gaussian_loss, CdpBound,
    GaussianMechanismSpec,
};
use cdp_accountant::reduction::{
    antipodalize, dp_to_cdp, drv_kl_bound, kl_symmetry_gap, kl_tight_bound, verify_antipodal,
};
use cdp_accountant::sampling::{stream_rng, PairGenerator, RandomPair};
use cdp_accountant::subgaussian::{default_lambda_grid, verify_certificate};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const PAIR_SEED: u64 = 20_240_601;

/// 50-digit evaluation of `sqrt(2k ln(1/delta)) eps + k eps (e^eps - 1)/2`
/// for k = 100, eps = 0.1, delta = 1e-6.
const ADVANCED_ORACLE: f64 = 5.782_376_360_135_17;

fn check(ok: bool, pass: String, fail: String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn gaussian_characterization() -> Outcome {
    let start = Instant::now();
    let spec = GaussianMechanismSpec::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let bound = gaussian_cdp(&spec);
    let samples = sample_gaussian_loss(&spec, 1_000_000, 7).map_err(|e| e.to_string())?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let tail = samples.iter().filter(|&&x| x >= 0.5 + 2.0).count() as f64 / n;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = bound == CdpBound { mu: 0.5, tau: 1.0 }
        && (mean - 0.5).abs() <= 0.005
        && (std - 1.0).abs() <= 0.01
        && tail <= 0.1354
        && elapsed < 5.0;
    let msg = format!(
        "bound=({}, {}) mean={mean:.5} std={std:.5} tail(t=2)={tail:.5} time={elapsed:.2}s",
        bound.mu, bound.tau
    );
    check(ok, msg.clone(), msg)
}

fn pairs() -> Result<Vec<RandomPair>, String> {
    PairGenerator::default()
        .sample_many(PAIR_SEED, 10_000)
        .map_err(|e| e.to_string())
}

fn tight_kl(pairs: &[RandomPair], elapsed_gen: f64) -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for p in pairs {
        let kl = kl_divergence(&p.d, &p.d_prime).map_err(|e| e.to_string())?;
        let slack = kl - kl_tight_bound(p.epsilon);
        worst = worst.max(slack);
        if slack > 1e-12 {
            violations += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64() + elapsed_gen;
    let msg = format!(
        "{} pairs, {violations} violations, max(KL - bound)={worst:.3e}, time={elapsed:.2}s",
        pairs.len()
    );
    check(violations == 0 && elapsed < 30.0, msg.clone(), msg)
}

fn antipodal_reduction(pairs: &[RandomPair]) -> Outcome {
    let mut failures = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let run = || -> cdp_accountant::Result<Option<String>> {
            let pair = antipodalize(&p.d, &p.d_prime)?;
            let eps_out = symmetric_max_divergence(&pair.m, &pair.m_prime)?;
            let kl_in = kl_divergence(&p.d, &p.d_prime)?;
            let kl_out = kl_divergence(&pair.m, &pair.m_prime)?;
            let gap = kl_symmetry_gap(&pair)?;
            if !verify_antipodal(&pair) {
                return Ok(Some("not antipodal".into()));
            }
            if (eps_out - p.epsilon).abs() > 1e-12 || (pair.epsilon - p.epsilon).abs() > 1e-12 {
                return Ok(Some(format!("epsilon {} -> {eps_out}", p.epsilon)));
            }
            if kl_out - kl_in < -1e-12 {
                return Ok(Some(format!("KL decreased {kl_in} -> {kl_out}")));
            }
            if gap > 1e-12 {
                return Ok(Some(format!("symmetry gap {gap}")));
            }
            Ok(None)
        };
        match run() {
            Ok(None) => {}
            Ok(Some(why)) => failures.push(format!("pair {i}: {why}")),
            Err(e) => failures.push(format!("pair {i}: {e}")),
        }
    }

    let golden = || -> cdp_accountant::Result<bool> {
        let d = DiscreteDistribution::from_probs(vec![0.5, 0.5])?;
        let d_prime = DiscreteDistribution::from_probs(vec![0.4, 0.6])?;
        let pair = antipodalize(&d, &d_prime)?;
        let expected_kl = 0.1 * 1.25f64.ln();
        // zero-mass split atoms are kept in the output but are not part of the golden pair
        let carried = |x: &DiscreteDistribution| -> Vec<f64> {
            x.probs().iter().copied().filter(|&m| m > 0.0).collect()
        };
        let close = |a: Vec<f64>, b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
        };
        Ok(close(carried(&pair.m), &[0.5, 0.4, 0.1])
            && close(carried(&pair.m_prime), &[0.4, 0.5, 0.1])
            && (kl_divergence(&pair.m, &pair.m_prime)? - expected_kl).abs() < 1e-12
            && (kl_divergence(&pair.m_prime, &pair.m)? - expected_kl).abs() < 1e-12)
    };
    let golden_ok = golden().map_err(|e| e.to_string())?;
    let msg = format!(
        "{} pairs, {} failures, golden case {}",
        pairs.len(),
        failures.len(),
        if golden_ok { "matches" } else { "differs" }
    );
    if failures.is_empty() && golden_ok {
        Ok(msg)
    } else {
        Err(format!(
            "{msg}; first: {}",
            failures.first().map_or("-", String::as_str)
        ))
    }
}

fn halving() -> Outcome {
    let mut mismatches = 0;
    for i in 0..1000 {
        let eps = 3.0 * i as f64 / 999.0;
        let mu = dp_to_cdp(eps).map_err(|e| e.to_string())?.mu;
        if mu.to_bits() != (drv_kl_bound(eps) / 2.0).to_bits() {
            mismatches += 1;
        }
    }
    let msg = format!("1000 grid points on [0, 3], {mismatches} mismatches");
    check(mismatches == 0, msg.clone(), msg)
}

fn composition_oracle() -> Outcome {
    let run = || -> cdp_accountant::Result<(f64, f64, bool, bool)> {
        let (p, q) = randomized_response_pair(0.3)?;
        let rv = privacy_loss_rv(&p, &q)?;
        let kl = kl_divergence(&p, &q)?;
        let conv = convolve_loss_rvs(&vec![rv; 6])?;
        let mean_err = (conv.mean() - 6.0 * kl).abs();
        let tau = 6f64.sqrt() * 0.3;
        let cert = verify_certificate(&conv.centered(), tau, &default_lambda_grid())?;
        let b = dp_to_cdp(0.3)?;
        let composed = compose_cdp(&vec![b; 6].into());
        let exact = composed
            == CdpBound {
                mu: 6.0 * b.mu,
                tau: 6f64.sqrt() * b.tau,
            };
        Ok((mean_err, cert.max_violation, cert.passes(), exact))
    };
    let (mean_err, violation, cert_ok, exact) = run().map_err(|e| e.to_string())?;
    let msg = format!(
        "|mean - 6 KL|={mean_err:.2e}, certificate max violation={violation:.3e}, compose exact={exact}"
    );
    check(mean_err <= 1e-10 && cert_ok && exact, msg.clone(), msg)
}

fn advanced_value() -> Outcome {
    let r = advanced_composition(100, 0.1, 0.0, 1e-6).map_err(|e| e.to_string())?;
    let diff = (r.epsilon - ADVANCED_ORACLE).abs();
    let msg = format!("epsilon={} delta={} |diff|={diff:.2e}", r.epsilon, r.delta);
    check(diff <= 1e-4 && r.delta == 1e-6, msg.clone(), msg)
}

fn group_near_tightness() -> Outcome {
    let run = || -> cdp_accountant::Result<(CdpBound, CdpBound, usize)> {
        let rec = group_cdp_recursion(&CdpBound::new(5e-13, 1e-6)?, 8, false)?;
        let exact = gaussian_group_cdp(&GaussianMechanismSpec::new(1.0, 1e6)?, 8)?;
        let mut violations = 0;
        for i in 0..1000u64 {
            let mut rng = stream_rng(PAIR_SEED + 7, i);
            let m = rng.random_range(1..=6u32);
            let s = 1u64 << m;
            let limit = CLOSED_FORM_SMALLNESS / (s as f64 * f64::from(m).powi(3) * 34f64.powi(3));
            let tau = limit * rng.random_range(1e-3..=1.0f64);
            let mu = tau * tau / 2.0 * rng.random_range(0.0..=1.0f64);
            let r = group_cdp_recursion(&CdpBound::new(mu, tau)?, s, false)?.bound;
            if r.tau > group_tau_closed_form(tau, s)? || r.mu > group_mu_closed_form(tau, s)? {
                violations += 1;
            }
        }
        Ok((rec.bound, exact, violations))
    };
    let (rec, exact, violations) = run().map_err(|e| e.to_string())?;
    let ok = rec.tau <= 1.1 * 8e-6
        && rec.mu <= 1.2 * (8e-6f64).powi(2) / 2.0
        && rec.tau >= exact.tau
        && rec.mu >= exact.mu;
    let msg = format!(
        "recursion=({:.6e}, {:.6e}) exact Gaussian=({:.6e}, {:.6e}), closed-form violations {violations}/1000",
        rec.mu, rec.tau, exact.mu, exact.tau
    );
    check(ok && violations == 0, msg.clone(), msg)
}

fn pure_dp_subgaussian() -> Outcome {
    let generator = PairGenerator {
        max_epsilon: 1.0,
        ..PairGenerator::default()
    };
    let pairs = generator
        .sample_many(PAIR_SEED + 1, 1000)
        .map_err(|e| e.to_string())?;
    let grid = default_lambda_grid();
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for p in &pairs {
        let rv = privacy_loss_rv(&p.d, &p.d_prime).map_err(|e| e.to_string())?;
        let cert =
            verify_certificate(&rv.centered(), p.epsilon, &grid).map_err(|e| e.to_string())?;
        worst = worst.max(cert.max_violation);
        if !cert.passes() {
            violations += 1;
        }
    }
    let msg = format!("1000 pairs, {violations} violations, max violation={worst:.3e}");
    check(violations == 0, msg.clone(), msg)
}

fn ledger_and_tail() -> Outcome {
    let run = || -> cdp_accountant::Result<(CdpBound, f64, f64)> {
        let mut ledger = Ledger::new();
        for i in 0..100 {
            ledger = record(&ledger, &format!("query-{i}"), CdpBound::new(0.005, 0.1)?);
        }
        let p = exceedance_probability(&ledger, 2.5)?;
        let eps = to_approx_dp(&ledger.total(), (-2.0f64).exp())?.epsilon;
        Ok((ledger.total(), p, eps))
    };
    let (total, p, eps) = run().map_err(|e| e.to_string())?;
    let ok = (total.mu - 0.5).abs() <= 1e-12
        && (total.tau - 1.0).abs() <= 1e-12
        && (p - (-2.0f64).exp()).abs() <= 1e-12
        && (eps - 2.5).abs() <= 1e-12;
    let msg = format!(
        "total=({}, {}) P[loss >= 2.5]={p} epsilon={eps}",
        total.mu, total.tau
    );
    check(ok, msg.clone(), msg)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let pairs = pairs();
    let gen_time = start.elapsed().as_secs_f64();

    let criteria: Vec<Criterion> = vec![
        (
            "Gaussian characterization",
            Box::new(gaussian_characterization),
        ),
        (
            "Tight KL bound",
            Box::new(|| {
                pairs
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|p| tight_kl(p, gen_time))
            }),
        ),
        (
            "Antipodal reduction",
            Box::new(|| {
                pairs
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|p| antipodal_reduction(p))
            }),
        ),
        ("Halving", Box::new(halving)),
        ("Composition oracle", Box::new(composition_oracle)),
        ("Advanced composition value", Box::new(advanced_value)),
        (
            "Group privacy near-tightness",
            Box::new(group_near_tightness),
        ),
        ("Pure-DP subgaussianity", Box::new(pure_dp_subgaussian)),
        ("Ledger and tail", Box::new(ledger_and_tail)),
    ];

    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
