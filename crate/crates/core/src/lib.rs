//! Nonparametric multivariate density estimation with simplified vine copulas.
//!
//! The joint density is split into `d` univariate kernel estimates and
//! `d(d-1)/2` bivariate copula densities organised along an R-vine tree
//! sequence. Each pair-copula is a kernel estimate on normal scores
//! (transformation estimator) and its h-functions, obtained by integrating the
//! estimate, produce the pseudo-observations of the next tree.
//!
//! The crate is `no_std` (with `alloc`). File formats, the benchmark driver and
//! the command line live in the `vinekde` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bench;
pub mod classify;
mod error;
pub mod marginal;
mod matrix;
pub mod numerics;
pub mod paircop;
pub mod rng;
pub mod structure;
pub mod targets;
pub mod vinefit;

pub use error::{Error, Result};
pub use marginal::MarginalEstimate;
pub use matrix::DataMatrix;
pub use paircop::{HDirection, HForm, PairCopulaEstimate};
pub use structure::{Edge, RVineStructure, Violation};
pub use targets::{Scenario, ScenarioKind};
pub use vinefit::{fit_vine, FitMeta, FitOptions, VineDensityModel};
