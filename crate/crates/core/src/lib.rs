//! Accounting for concentrated differential privacy (CDP).
//!
//! A mechanism is `(mu, tau)`-CDP when its privacy loss has mean at most `mu`
//! and, once centered, is subgaussian with standard `tau`. This crate provides
//! the divergences and privacy loss variables behind that definition, the
//! Gaussian mechanism, conversion from pure DP, composition, group privacy,
//! and a budget ledger with tail bounds.

pub mod cli;
pub mod composition;
pub mod distributions;
pub mod error;
pub mod group_privacy;
pub mod ledger;
pub mod mechanisms;
pub mod reduction;
pub mod sampling;
pub mod subgaussian;
pub mod suites;

pub use composition::{advanced_composition, compose_cdp, CompositionInput};
pub use distributions::{DiscreteDistribution, PrivacyLossRV};
pub use error::{Error, Result};
pub use group_privacy::{
    group_cdp_closed_form, group_cdp_recursion, GroupBoundResult, GroupMethod,
};
pub use ledger::{exceedance_probability, record, to_approx_dp, Ledger, LedgerEntry};
pub use mechanisms::{gaussian_cdp, CdpBound, DpBound, GaussianMechanismSpec};
pub use reduction::{antipodalize, dp_to_cdp, verify_antipodal, AntipodalPair};
