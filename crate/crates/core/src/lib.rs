//! Fourier-spectrum forensics for CNN-generated images.
//!
//! The crate is organised the way the pipeline runs:
//!
//! * [`spectrum`] turns an image into a 2D DFT, a centered magnitude map and
//!   finally a 1D azimuthally averaged *reduced spectrum*.
//! * [`upsample`] implements the three feature-map scaling operators
//!   (zero insertion, nearest, bilinear), "same" convolution and the
//!   `X.Y.Z` last-layer simulator used to produce surrogate synthetic images.
//! * [`detect`] fits a power law to the high band of a reduced spectrum,
//!   builds feature vectors and trains/evaluates KNN and MLP detectors.
//! * [`dataset`] loads images, builds corpus manifests, splits data and owns
//!   every CSV/JSON format the other modules produce.

pub mod dataset;
pub mod detect;
mod error;
mod image;
pub mod spectrum;
pub mod upsample;

pub use crate::error::{Error, ErrorKind, Result};
pub use crate::image::GrayImage;

/// Human-readable description of the radial binning convention.
///
/// Spectra are only comparable between builds that share this string.
pub const BINNING_CONVENTION: &str =
    "dc=(floor(W/2),floor(H/2)) bin=round(hypot) agg=mean R=floor(hypot(floor(W/2),floor(H/2)))";
