//! Unseen-species estimation for observational collections.
//!
//! Observation records are tallied into abundance or incidence data, reduced
//! to a frequency spectrum (`f_r`, the number of species seen `r` times or in
//! `r` samples) and fed to the Chao1 / Chao2 estimators:
//!
//! ```
//! use silentspecies::estimators::chao1;
//! use silentspecies::tally::{tally_abundance, ObservationRecord};
//!
//! let records = [
//!     ObservationRecord::new("m1", "a", 3),
//!     ObservationRecord::new("m1", "b", 1),
//!     ObservationRecord::new("m2", "c", 1),
//!     ObservationRecord::new("m2", "d", 2),
//! ];
//! let tally = tally_abundance(&records).unwrap();
//! let est = chao1(&tally.spectrum()).unwrap();
//! assert_eq!(est.s_obs, 4);
//! assert_eq!(est.s_hat, 6.0); // 4 + 2² / (2·1)
//! assert!(est.coverage <= 1.0);
//! ```
//!
//! Resampling, grouped reports and the synthetic generator build on the same
//! types. Replicate loops run on rayon when the `parallel` feature is enabled
//! and produce identical results either way.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod io;
pub mod par;
pub mod resampling;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod tally;

pub use error::{Error, Result};
pub use estimators::{EstimatorName, RichnessEstimate};
pub use par::Execution;
pub use tally::{AbundanceTally, FrequencySpectrum, GroupedDataset, IncidenceTally, Mode, Tally};
