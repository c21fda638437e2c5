//! Identify the source image of a deliberately manipulated query.
//!
//! The pipeline enrolls a gallery of pre-cropped images, extracts SIFT
//! features from each, and ranks gallery entries for a query by the number of
//! ratio-test matches that survive angle-line-ratio (ALR) verification. An
//! eigenface model trained on the same gallery provides the baseline ranking.
//!
//! Modules, bottom-up:
//! - [`imaging`]: grayscale rasters, Netpbm I/O, resizing, Gaussian blur, overlays.
//! - [`sift`]: scale space, keypoint detection, orientation and 128-d descriptors.
//! - [`matching`]: ratio-test matching and ALR triple verification.
//! - [`eigenfaces`]: PCA basis via the Gram-matrix trick and cyclic Jacobi.
//! - [`gallery`]: enrollment, the binary index file, and query identification.
//! - [`evaluation`]: manipulation synthesis, identification rate, CMC, benchmark reports.
//! - [`cli`]: the `mugid` command line.

pub mod cli;
pub mod eigenfaces;
pub mod error;
pub mod evaluation;
pub mod gallery;
pub mod imaging;
pub mod matching;
pub mod sift;

pub use error::{Error, Result};
