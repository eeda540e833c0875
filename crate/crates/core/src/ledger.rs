//! Privacy-budget ledger: an append-only record of CDP charges.
//!
//! The running total is always recomputed from the entries; the on-disk form
//! carries no totals at all.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::compose_bounds;
use crate::error::{domain, Error, Result};
use crate::mechanisms::{CdpBound, DpBound};
use crate::subgaussian::tail_bound;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    #[serde(flatten)]
    pub bound: CdpBound,
    /// Free-form ISO-8601 time; informational only.
    #[serde(default)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "LedgerFile", into = "LedgerFile")]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
    running_total: CdpBound,
}

#[derive(Serialize, Deserialize)]
struct LedgerFile {
    entries: Vec<LedgerEntry>,
}

impl From<LedgerFile> for Ledger {
    fn from(file: LedgerFile) -> Self {
        let running_total = compose_bounds(&bounds_of(&file.entries));
        Ledger {
            entries: file.entries,
            running_total,
        }
    }
}

impl From<Ledger> for LedgerFile {
    fn from(ledger: Ledger) -> Self {
        LedgerFile {
            entries: ledger.entries,
        }
    }
}

fn bounds_of(entries: &[LedgerEntry]) -> Vec<CdpBound> {
    entries.iter().map(|e| e.bound).collect()
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> CdpBound {
        self.running_total
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| domain(format!("cannot read ledger {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| domain(format!("malformed ledger {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| domain(e.to_string()))?;
        fs::write(path, text + "\n")
            .map_err(|e| domain(format!("cannot write ledger {}: {e}", path.display())))
    }

    fn appended(&self, entry: LedgerEntry) -> Ledger {
        let mut entries = self.entries.clone();
        entries.push(entry);
        let running_total = compose_bounds(&bounds_of(&entries));
        Ledger {
            entries,
            running_total,
        }
    }
}

/// Returns a new ledger with `bound` charged under `label`.
pub fn record(ledger: &Ledger, label: &str, bound: CdpBound) -> Ledger {
    ledger.appended(LedgerEntry {
        label: label.to_string(),
        bound,
        timestamp: None,
    })
}

pub fn record_at(ledger: &Ledger, label: &str, bound: CdpBound, timestamp: &str) -> Ledger {
    ledger.appended(LedgerEntry {
        label: label.to_string(),
        bound,
        timestamp: Some(timestamp.to_string()),
    })
}

/// Bound on the probability that the cumulative loss reaches `loss_threshold`.
///
/// Below the mean the bound is vacuous and `1.0` is returned. With `tau = 0`
/// the loss is exactly its mean.
pub fn exceedance_probability(ledger: &Ledger, loss_threshold: f64) -> Result<f64> {
    if loss_threshold.is_nan() {
        return Err(domain("threshold is NaN"));
    }
    let CdpBound { mu, tau } = ledger.total();
    if loss_threshold <= mu {
        return Ok(1.0);
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    tail_bound(tau, (loss_threshold - mu) / tau)
}

/// Smallest `epsilon` whose exceedance bound is `delta`:
/// `mu + tau sqrt(2 ln(1/delta))`.
pub fn to_approx_dp(total: &CdpBound, delta: f64) -> Result<DpBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    DpBound::new(total.mu + total.tau * (-2.0 * delta.ln()).sqrt(), delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(mu: f64, tau: f64) -> CdpBound {
        CdpBound::new(mu, tau).unwrap()
    }

    #[test]
    fn record_examples() {
        let empty = Ledger::new();
        let one = record(&empty, "a", b(0.5, 1.0));
        assert_eq!(one.total(), b(0.5, 1.0));
        assert!(empty.entries().is_empty());
        let two = record(&one, "b", b(0.5, 1.0));
        assert_eq!(two.total(), b(1.0, std::f64::consts::SQRT_2));
        assert_eq!(one.entries().len(), 1);

        let mut l = Ledger::new();
        for i in 0..100 {
            l = record(&l, &format!("q{i}"), b(0.005, 0.1));
        }
        assert!((l.total().mu - 0.5).abs() < 1e-12);
        assert!((l.total().tau - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exceedance_examples() {
        let l = record(&Ledger::new(), "x", b(0.5, 1.0));
        assert_eq!(exceedance_probability(&l, 0.5).unwrap(), 1.0);
        assert_eq!(exceedance_probability(&l, 0.1).unwrap(), 1.0);
        assert!((exceedance_probability(&l, 2.5).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((exceedance_probability(&l, 4.5).unwrap() - (-8.0f64).exp()).abs() < 1e-18);

        let flat = record(&Ledger::new(), "x", b(0.3, 0.0));
        assert_eq!(exceedance_probability(&flat, 0.3).unwrap(), 1.0);
        assert_eq!(exceedance_probability(&flat, 0.31).unwrap(), 0.0);
        assert_eq!(exceedance_probability(&Ledger::new(), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn approx_dp_examples() {
        let r = to_approx_dp(&b(0.5, 1.0), (-2.0f64).exp()).unwrap();
        assert!((r.epsilon - 2.5).abs() < 1e-12);
        assert_eq!(
            to_approx_dp(&b(0.7, 0.0), 0.01).unwrap(),
            DpBound::new(0.7, 0.01).unwrap()
        );
        let r = to_approx_dp(&b(0.5, 1.0), 1e-6).unwrap();
        assert!((r.epsilon - 5.756_521_769_756_932).abs() < 1e-12);
        assert!(to_approx_dp(&b(0.5, 1.0), 0.0).is_err());
        assert!(to_approx_dp(&b(0.5, 1.0), 1.0).is_err());
    }

    #[test]
    fn file_format_recomputes_totals() {
        let json = r#"{"entries":[
            {"label":"a","mu":0.5,"tau":1.0,"timestamp":"2024-01-01T00:00:00Z"},
            {"label":"b","mu":0.5,"tau":1.0}
        ],"running_total":{"mu":99.0,"tau":99.0}}"#;
        let l: Ledger = serde_json::from_str(json).unwrap();
        assert_eq!(l.total(), b(1.0, std::f64::consts::SQRT_2));
        assert_eq!(
            l.entries()[0].timestamp.as_deref(),
            Some("2024-01-01T00:00:00Z")
        );
        let out = serde_json::to_value(&l).unwrap();
        assert!(out.get("running_total").is_none());
        assert_eq!(out["entries"][1]["mu"], 0.5);
        assert!(
            serde_json::from_str::<Ledger>(r#"{"entries":[{"label":"a","mu":-1,"tau":1}]}"#)
                .is_err()
        );
    }

    #[test]
    fn timestamps_do_not_affect_totals() {
        let a = record_at(&Ledger::new(), "a", b(0.1, 0.2), "2024-05-05T10:00:00Z");
        let c = record(&Ledger::new(), "a", b(0.1, 0.2));
        assert_eq!(a.total(), c.total());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.json");
        let l = record(&record(&Ledger::new(), "a", b(0.1, 0.2)), "b", b(0.3, 0.4));
        l.save(&path).unwrap();
        assert_eq!(Ledger::load(&path).unwrap(), l);
        assert!(Ledger::load(&dir.path().join("missing.json")).is_err());
    }
}
