//! Peripheral spectra of unital completely positive maps and the product
//! structure on their peripheral eigenvectors, with a finite Stinespring
//! tower to cross-check it.

pub mod boundary;
pub mod channel;
pub mod dilation;
pub mod error;
pub mod examples;
pub mod matrix;
pub mod report;
pub mod spectral;

pub use error::{Error, Result};
