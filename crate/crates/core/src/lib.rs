//! Estimation and uncertainty quantification in models `Y = theta + sigma xi`
//! whose parameter is assumed to lie near one of many linear subspaces
//! indexed by a structure family.
//!
//! The crate provides the structure families and their projections
//! ([`family`]), penalized structure selection ([`selection`]), the
//! data-dependent measure over structures ([`ddm`]), oracle diagnostics
//! ([`oracle`]), confidence balls ([`balls`]), checks of the noise conditions
//! ([`conditions`]), data ingestion helpers ([`ingest`]) and a simulation
//! harness ([`sim`]) behind the `projstruct` command line tool.

pub mod balls;
pub mod cli;
pub mod conditions;
pub mod ddm;
pub mod error;
pub mod family;
pub mod ingest;
pub mod linalg;
pub mod math;
pub mod oracle;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
pub use family::{Design, Family, SparsityMajorant, Structure};
pub use linalg::{least_squares_project, sq_norm, Mat};
