//! Numerical laboratory for decoherence in systems with a mixed
//! discrete + continuous spectrum.
//!
//! States and observables are represented by their five spectral blocks
//! (bound, singular diagonal, two cross blocks, regular kernel) over a
//! discretised continuum. On top of that representation the crate provides
//! time evolution and weak limits, the final pointer basis, Wigner/Weyl
//! phase-space correspondences, the oscillator-bath model and the
//! consistent-histories calculus.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod histories;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod pointer;
pub mod quadrature;
pub mod spectral;
pub mod wigner;

pub use error::{Error, Result};
pub use spectral::{GeneralizedObservable, SpectralModel, StateFunctional};
