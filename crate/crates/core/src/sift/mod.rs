//! Scale-invariant feature transform: Gaussian/DoG scale space, extremum
//! detection with sub-pixel refinement, orientation assignment and 128-d
//! gradient-histogram descriptors.

mod describe;
mod detect;
mod scale_space;

pub use describe::{compute_descriptors, orientation_peaks};
pub use detect::detect_keypoints;
pub use scale_space::{build_scale_space, Octave, ScaleSpace};

use crate::imaging::GrayImage;
use crate::{Error, Result};

pub const DESCRIPTOR_LEN: usize = 128;

/// Smallest octave side length kept by the automatic octave count.
pub const MIN_OCTAVE_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftParams {
    /// Number of octaves; `None` keeps halving while the octave stays at
    /// least [`MIN_OCTAVE_SIZE`] pixels on its short side.
    pub octaves: Option<usize>,
    pub scales_per_octave: usize,
    pub base_sigma: f64,
    pub assumed_input_blur: f64,
    /// Minimum |DoG| at the refined extremum, for intensities in `[0, 1]`.
    pub contrast_threshold: f64,
    /// Bound on the ratio of principal curvatures.
    pub edge_ratio: f64,
    pub orientation_peak_ratio: f64,
    pub descriptor_clamp: f64,
    /// Double the input resolution before building octave 0.
    pub upsample: bool,
}

impl Default for SiftParams {
    fn default() -> Self {
        SiftParams {
            octaves: None,
            scales_per_octave: 3,
            base_sigma: 1.6,
            assumed_input_blur: 0.5,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            orientation_peak_ratio: 0.8,
            descriptor_clamp: 0.2,
            upsample: true,
        }
    }
}

impl SiftParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be positive, got {v}")))
            }
        };
        if self.scales_per_octave == 0 {
            return Err(Error::param("scales_per_octave must be at least 1"));
        }
        if self.octaves == Some(0) {
            return Err(Error::param("octaves must be at least 1"));
        }
        positive("base_sigma", self.base_sigma)?;
        positive("contrast_threshold", self.contrast_threshold)?;
        positive("edge_ratio", self.edge_ratio)?;
        positive("orientation_peak_ratio", self.orientation_peak_ratio)?;
        positive("descriptor_clamp", self.descriptor_clamp)?;
        if !(self.assumed_input_blur.is_finite() && self.assumed_input_blur >= 0.0) {
            return Err(Error::param("assumed_input_blur must be non-negative"));
        }
        let seed_blur = self.assumed_input_blur * if self.upsample { 2.0 } else { 1.0 };
        if self.base_sigma <= seed_blur {
            return Err(Error::param(format!(
                "base_sigma {} must exceed the assumed blur of the seed image ({seed_blur})",
                self.base_sigma
            )));
        }
        if self.orientation_peak_ratio > 1.0 {
            return Err(Error::param("orientation_peak_ratio must be at most 1"));
        }
        // a unit vector with 128 components each <= clamp needs clamp^2 * 128 >= 1
        if self.descriptor_clamp > 1.0
            || self.descriptor_clamp * self.descriptor_clamp * 128.0 < 1.0
        {
            return Err(Error::param(format!(
                "descriptor_clamp {} must lie in [1/sqrt(128), 1]",
                self.descriptor_clamp
            )));
        }
        Ok(())
    }
}

/// A located and oriented interest point, in input-image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Absolute scale in input pixels.
    pub sigma: f32,
    /// Radians in `[0, 2π)`, measured from +x towards +y (image rows grow downwards).
    pub orientation: f32,
    /// Interpolated DoG value at the extremum.
    pub dog_response: f32,
}

/// Unit-norm 4x4x8 gradient histogram.
#[derive(Clone, Copy, PartialEq)]
#[repr(transparent)]
pub struct Descriptor(pub [f32; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn distance(&self, other: &Descriptor) -> f32 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f32>()
            .sqrt()
    }
}

impl std::fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Descriptor({:?}..)", &self.0[..4])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub id: String,
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl FeatureSet {
    pub fn new(
        id: impl Into<String>,
        keypoints: Vec<Keypoint>,
        descriptors: Vec<Descriptor>,
    ) -> Result<Self> {
        if keypoints.len() != descriptors.len() {
            return Err(Error::param(format!(
                "{} keypoints but {} descriptors",
                keypoints.len(),
                descriptors.len()
            )));
        }
        Ok(FeatureSet {
            id: id.into(),
            keypoints,
            descriptors,
        })
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    /// All descriptors copied into one row-major `len x 128` matrix.
    pub fn descriptor_matrix(&self) -> Vec<f32> {
        self.descriptors.iter().flat_map(|d| d.0).collect()
    }
}

/// Runs the full pipeline on one image. Output order is deterministic:
/// keypoints sorted by (octave, level, row, column), orientation copies
/// adjacent.
pub fn extract_features(img: &GrayImage, params: &SiftParams, id: &str) -> Result<FeatureSet> {
    let ss = build_scale_space(img, params)?;
    let candidates = detect_keypoints(&ss, params);
    let (keypoints, descriptors) = compute_descriptors(&ss, &candidates, params);
    FeatureSet::new(id, keypoints, descriptors)
}
