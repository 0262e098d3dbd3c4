//! Secret-key rate bounds for multi-user decoy-state QKD over passive star
//! networks.
//!
//! The crate computes per-user and network-wide key rates under four
//! multiple-access schemes (TDMA, optical-orthogonal-code CDMA,
//! listen-before-send and a WDM hybrid on top of any of them), and carries a
//! seeded Monte Carlo engine that checks the binomial interference model the
//! analytical rates rely on.
//!
//! Units are fixed crate-wide: time in ns, count rates in counts/ns, optical
//! bandwidth in GHz and key rates in bits/s.

pub mod config;
pub mod decoy;
pub mod error;
pub mod mac;
pub mod mc;
pub mod network;
pub mod ooc;
pub mod report;
pub mod scenario;

pub use decoy::{DecoyBreakdown, DecoyInputs};
pub use error::{Error, Result};
pub use mac::{RateReport, SchemeKind, SchemeSpec};
pub use mc::{McConfig, McMode, McResult};
pub use network::{SystemParams, WdmParams};
pub use ooc::{OocCode, OocFamily};
