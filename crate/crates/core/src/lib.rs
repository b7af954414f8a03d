//! Entanglement quantification from partial measurement data.
//!
//! The crate covers the whole pipeline: seeded sampling of two- and
//! three-qubit states ([`states`]), analytic entanglement labels
//! ([`measures`]), measurement-correlation features ([`features`]),
//! bin-stratified dataset construction and persistence ([`dataset`]),
//! from-scratch regressors ([`models`]), and cross-validated evaluation
//! ([`eval`]). The [`cli`] module backs the `entq` binary.
//!
//! ```
//! use entq::measures::gme_concurrence_pure;
//! use entq::states::PureState;
//!
//! let ghz = PureState::ghz();
//! let label = gme_concurrence_pure(&ghz).unwrap();
//! assert!((label.value - 1.0).abs() < 1e-12);
//! ```
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod measures;
pub mod models;
pub mod qmath;
pub mod states;

pub use error::{Error, Result};
