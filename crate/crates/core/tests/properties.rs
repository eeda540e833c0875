use cdp_accountant::distributions::{
    approx_max_divergence, kl_divergence, max_divergence, privacy_loss_rv, DiscreteDistribution,
};
use cdp_accountant::ledger::{exceedance_probability, record, to_approx_dp, Ledger};
use cdp_accountant::mechanisms::CdpBound;
use cdp_accountant::sampling::PairGenerator;
use proptest::prelude::*;

fn distribution(n: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let total: f64 = w.iter().sum();
        let mut probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let residue = 1.0 - probs.iter().sum::<f64>();
        probs[0] += residue;
        DiscreteDistribution::from_probs(probs).unwrap()
    })
}

fn pair() -> impl Strategy<Value = (DiscreteDistribution, DiscreteDistribution)> {
    (2usize..=8).prop_flat_map(|n| (distribution(n), distribution(n)))
}

fn bound() -> impl Strategy<Value = CdpBound> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(mu, tau)| CdpBound::new(mu, tau).unwrap())
}

/// Max over every event S with P(S) > 0 of ln(P(S)/Q(S)), by enumeration.
fn brute_force_max_divergence(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..(1 << n) {
        let (mut ps, mut qs) = (0.0, 0.0);
        for i in 0..n {
            if mask & (1 << i) != 0 {
                ps += p[i];
                qs += q[i];
            }
        }
        if ps > 0.0 {
            best = best.max((ps / qs).ln());
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn loss_mean_is_kl((p, q) in pair()) {
        let rv = privacy_loss_rv(&p, &q).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!((rv.mean() - kl).abs() <= 1e-12 * (1.0 + kl.abs()));
        prop_assert!(kl >= -1e-15);
    }

    #[test]
    fn zero_delta_matches_max_divergence((p, q) in pair()) {
        let approx = approx_max_divergence(&p, &q, 0.0).unwrap();
        let max = max_divergence(&p, &q).unwrap();
        prop_assert!((approx.value - max).abs() <= 1e-12);
        prop_assert!(!approx.heuristic);
    }

    #[test]
    fn delta_divergence_is_monotone((p, q) in pair(), d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = approx_max_divergence(&p, &q, lo).unwrap().value;
        let b = approx_max_divergence(&p, &q, hi).unwrap().value;
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn pure_dp_loss_is_bounded((p, q) in pair()) {
        let eps = max_divergence(&p, &q).unwrap().max(max_divergence(&q, &p).unwrap());
        let rv = privacy_loss_rv(&p, &q).unwrap();
        for atom in rv.atoms() {
            prop_assert!(atom.loss.abs() <= eps + 1e-12);
        }
    }

    #[test]
    fn ledger_total_ignores_order(bounds in prop::collection::vec(bound(), 1..20), seed in any::<u64>()) {
        let forward = bounds.iter().fold(Ledger::new(), |l, b| record(&l, "x", *b));
        let mut shuffled = bounds.clone();
        let k = (seed % bounds.len() as u64) as usize;
        shuffled.rotate_left(k);
        shuffled.reverse();
        let backward = shuffled.iter().fold(Ledger::new(), |l, b| record(&l, "x", *b));
        let (a, b) = (forward.total(), backward.total());
        prop_assert!((a.mu - b.mu).abs() <= 1e-12 * (1.0 + a.mu));
        prop_assert!((a.tau - b.tau).abs() <= 1e-12 * (1.0 + a.tau));
    }

    #[test]
    fn exceedance_is_monotone(b in bound(), t1 in 0.0f64..10.0, t2 in 0.0f64..10.0) {
        let l = record(&Ledger::new(), "x", b);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let p_lo = exceedance_probability(&l, lo).unwrap();
        let p_hi = exceedance_probability(&l, hi).unwrap();
        prop_assert!(p_hi <= p_lo);
        prop_assert!((0.0..=1.0).contains(&p_lo));
    }

    #[test]
    fn approx_dp_round_trips(b in bound(), delta in 1e-12f64..0.5) {
        prop_assume!(b.tau > 1e-6);
        let l = record(&Ledger::new(), "x", b);
        let dp = to_approx_dp(&b, delta).unwrap();
        let p = exceedance_probability(&l, dp.epsilon).unwrap();
        prop_assert!((p - delta).abs() <= 1e-9 * delta);
    }
}

#[test]
fn atom_maximum_equals_subset_maximum() {
    let pairs = PairGenerator {
        max_epsilon: f64::INFINITY,
        ..PairGenerator::default()
    }
    .sample_many(99, 1000)
    .unwrap();
    for pair in pairs {
        let fast = max_divergence(&pair.d, &pair.d_prime).unwrap();
        let slow = brute_force_max_divergence(pair.d.probs(), pair.d_prime.probs());
        assert!(
            (fast - slow).abs() <= 1e-12,
            "{fast} vs {slow} for {pair:?}"
        );
    }
}

#[test]
fn distribution_files_accept_string_and_numeric_labels() {
    let d: DiscreteDistribution =
        serde_json::from_str(r#"{"outcomes":["a",2],"probs":[0.25,0.75]}"#).unwrap();
    assert_eq!(d.outcomes(), ["a", "2"]);
    assert!(
        serde_json::from_str::<DiscreteDistribution>(r#"{"outcomes":["a"],"probs":[0.5]}"#)
            .is_err()
    );
}
