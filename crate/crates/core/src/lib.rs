//! Algebraic CT reconstruction under mono- and polyenergetic X-ray models,
//! and convergence analysis of the resulting fixed-point iterations.
//!
//! The attenuation map `t` is expressed at a reference energy; a
//! piecewise-linear material model ([`materials::LacModel`]) maps it to every
//! energy of a discrete [`spectra::Spectrum`]. [`reconstruction`] implements
//! ART, SART, pART and pSART; [`analysis`] builds the Jacobian of the pSART
//! map and estimates spectral radii.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod io;
pub mod materials;
pub mod par;
pub mod phantoms;
pub mod projection;
pub mod reconstruction;
pub mod spectra;

pub use error::{Error, Result};
