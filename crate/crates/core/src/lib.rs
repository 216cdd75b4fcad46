//! Age of Information of reactive and proactive hybrid-ARQ status-update
//! links with coding, propagation, decoding and feedback delays.
//!
//! * [`model`]: validated configuration types.
//! * [`fbl`]: finite-blocklength error probabilities.
//! * [`analytics`]: closed-form average and peak AoI.
//! * [`sim`]: Monte Carlo renewal simulator.
//! * [`optimize`]: age-optimal block assignment search.

pub mod analytics;
pub mod error;
pub mod fbl;
pub mod model;
pub mod optimize;
pub mod sim;
pub mod sum;

pub use error::{Error, Result};
pub use fbl::ChannelSpec;
pub use model::{
    validate_config, AoiResult, BlockAssignment, DelayProfile, ErrorVector, HarqConfig,
    ProtocolKind, Provenance,
};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
