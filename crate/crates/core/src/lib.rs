//! Frequency-domain models of one-dimensional optoelectromechanical transducer
//! arrays.
//!
//! Each transducer couples a microwave cavity (field 1) and an optical cavity
//! (field 2) to a common mechanical oscillator through beam-splitter
//! interactions. Single-site scattering matrices are cascaded into array
//! transfer matrices, from which conversion spectra, bandwidths, thermal and
//! Stokes noise, and loss/backscatter degradation are computed.
//!
//! All rates and frequencies are dimensionless, expressed in units of one
//! reference linewidth `κ_ref`. Frequencies passed to the rotating-frame
//! models are Fourier frequencies relative to the cavity resonance; the
//! counter-rotating ([`transducer::scattering_bogoliubov`]) model alone takes
//! lab-frame frequencies. Time dependence is `e^{-iωt}` throughout.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, parallel
//! evaluation and the command-line driver live in the `oetransduce` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod array;
mod error;
pub mod integrate;
pub mod linalg;
pub mod loss;
mod math;
pub mod noise;
pub mod optimize;
pub mod params;
pub mod search;
pub mod transducer;

pub use error::{Error, Result};
pub use linalg::{Mat2, Mat4, ScatterMat2, ScatterMat4};
pub use params::{
    adiabaticity_margin, classical_cooperativity, materialize_sites, ArrayConfig,
    CouplingProfile, FrequencyGrid, LinewidthProfile, SiteParams,
};

/// Complex double used for all field amplitudes.
pub type C64 = num_complex::Complex<f64>;
