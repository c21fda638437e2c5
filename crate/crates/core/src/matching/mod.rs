//! Descriptor matching with the nearest/second-nearest ratio test, and
//! spatial verification of the resulting correspondences with angle-line
//! ratio (ALR) statistics over triples of matched points.

mod alr;
mod ratio;
mod verify;

pub use alr::{
    alr_attributes, triple_consistent, wrap_angle, AlrAttributes, DegenerateTriple, Point,
};
pub use ratio::{ratio_match, RatioMatches};
pub use verify::{
    verify_matches, verify_matches_with, PairConsistency, TripleMode, VerifiedMatches,
};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    /// Accept a match when nearest < ratio_threshold * second nearest.
    pub ratio_threshold: f64,
    /// Radians.
    pub angle_tolerance: f64,
    /// Relative difference allowed between length ratios.
    pub ratio_tolerance: f64,
    /// Above this many possible triples, sample this many instead.
    pub max_triples: usize,
    /// Fraction of a pair's evaluated triples that must be consistent.
    pub consistency_quorum: f64,
    pub seed: u64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            ratio_threshold: 0.8,
            angle_tolerance: 0.0873,
            ratio_tolerance: 0.10,
            max_triples: 2000,
            consistency_quorum: 0.5,
            seed: 0,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold < 1.0) {
            return Err(Error::param(format!(
                "ratio_threshold must lie in (0, 1), got {}",
                self.ratio_threshold
            )));
        }
        if !(self.angle_tolerance > 0.0 && self.ratio_tolerance > 0.0) {
            return Err(Error::param("ALR tolerances must be positive"));
        }
        if !(self.consistency_quorum > 0.0 && self.consistency_quorum <= 1.0) {
            return Err(Error::param(format!(
                "consistency_quorum must lie in (0, 1], got {}",
                self.consistency_quorum
            )));
        }
        if self.max_triples == 0 {
            return Err(Error::param("max_triples must be at least 1"));
        }
        Ok(())
    }

    /// Same parameters with the sampling seed specialized to one candidate,
    /// so results do not depend on the order candidates are processed in.
    pub fn for_candidate(&self, candidate_id: &str) -> MatchParams {
        MatchParams {
            seed: candidate_seed(self.seed, candidate_id),
            ..*self
        }
    }
}

/// Mixes a base seed with a string key (FNV-1a followed by a splitmix64 finalizer).
pub fn candidate_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A query keypoint matched to a gallery keypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub query: usize,
    pub gallery: usize,
    pub distance: f32,
}
