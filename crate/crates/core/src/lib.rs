//! Coded caching for correlated libraries over a degraded Gaussian broadcast
//! channel.
//!
//! Files share content: every nonempty set of files `S` has a subfile `W_S`
//! common to exactly those files. The crate places packets of these subfiles
//! into user caches, builds XOR-coded superposition messages for any demand
//! vector, checks that every user decodes its file, and computes the peak
//! transmit power together with a lower bound.
//!
//! ```
//! use corrcache::{
//!     bounds::{peak_power, DemandEnumeration},
//!     model::{reference_inv_gain_sq, AlphaProfile, LibraryConfig},
//!     placement::CacheAllocation,
//! };
//!
//! let alpha = AlphaProfile::two_level(3, 3, 0.5).unwrap();
//! let config = LibraryConfig::from_alpha(3, 1.0, &alpha, reference_inv_gain_sq(3), 0.5).unwrap();
//! let alloc = CacheAllocation::new(vec![0.5, 0.0, 0.5]).unwrap();
//! let report = peak_power(&config, &alloc, &DemandEnumeration::default()).unwrap();
//! assert!(report.total_power > 0.0);
//! ```

pub mod bounds;
pub mod delivery;
pub mod error;
pub mod experiment;
pub mod model;
pub mod placement;
pub mod subset;
pub mod verifier;

pub use error::{Error, Result};
