//! Gallery enrollment and query identification.
//!
//! A [`GalleryIndex`] holds the SIFT features of every enrolled image plus an
//! eigenface model trained on the same preprocessed pixels, so both methods
//! can rank a query against identical inputs.

mod index;

pub use index::{decode_index, encode_index, load_index, save_index, INDEX_VERSION};

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::eigenfaces::{train_eigenmodel, ComponentPolicy, EigenModel};
use crate::imaging::{load_image, resize_bilinear, GrayImage};
use crate::matching::{ratio_match, verify_matches, MatchParams};
use crate::sift::{extract_features, FeatureSet, SiftParams};
use crate::{Error, Result};

/// How colour inputs are reduced to one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrayscaleRule {
    /// `0.299 R + 0.587 G + 0.114 B`.
    Bt601,
}

impl GrayscaleRule {
    pub(crate) fn code(self) -> u8 {
        match self {
            GrayscaleRule::Bt601 => 0,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(GrayscaleRule::Bt601),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preprocessing {
    pub width: usize,
    pub height: usize,
    pub grayscale: GrayscaleRule,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing {
            width: 300,
            height: 300,
            grayscale: GrayscaleRule::Bt601,
        }
    }
}

impl Preprocessing {
    /// Resizes a decoded (already grayscale) image to the target size.
    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        resize_bilinear(img, self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryIndex {
    pub version: u16,
    pub preprocessing: Preprocessing,
    pub sift: SiftParams,
    pub entries: Vec<FeatureSet>,
    pub eigen: EigenModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnrollOptions {
    pub preprocessing: Preprocessing,
    pub sift: SiftParams,
    pub components: ComponentPolicy,
}

fn check_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<usize> {
    let mut seen = HashSet::new();
    for id in ids {
        if id.is_empty() {
            return Err(Error::param("identity ids must be non-empty"));
        }
        if !seen.insert(id) {
            return Err(Error::param(format!("duplicate identity id '{id}'")));
        }
    }
    if seen.len() < 2 {
        return Err(Error::param(format!(
            "a gallery needs at least 2 images, got {}",
            seen.len()
        )));
    }
    Ok(seen.len())
}

/// Loads, preprocesses and enrolls `(id, path)` pairs. The first unreadable
/// file aborts enrollment with an error naming its id.
pub fn enroll(items: &[(String, PathBuf)], opts: &EnrollOptions) -> Result<GalleryIndex> {
    check_ids(items.iter().map(|(id, _)| id.as_str()))?;
    let images = items
        .iter()
        .map(|(id, path)| {
            load_image(path)
                .map(|img| (id.clone(), img))
                .map_err(|e| Error::Enroll {
                    id: id.clone(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    enroll_images(images, opts)
}

/// Enrolls already decoded grayscale images.
pub fn enroll_images(
    images: Vec<(String, GrayImage)>,
    opts: &EnrollOptions,
) -> Result<GalleryIndex> {
    check_ids(images.iter().map(|(id, _)| id.as_str()))?;
    opts.sift.validate()?;
    let prepared = images
        .into_iter()
        .map(|(id, img)| {
            let img = opts.preprocessing.apply(&img).map_err(|e| Error::Enroll {
                id: id.clone(),
                source: Box::new(e),
            })?;
            Ok((id, img))
        })
        .collect::<Result<Vec<_>>>()?;
    let entries = prepared
        .par_iter()
        .map(|(id, img)| {
            extract_features(img, &opts.sift, id).map_err(|e| Error::Enroll {
                id: id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eigen = train_eigenmodel(&prepared, opts.components)?;
    Ok(GalleryIndex {
        version: INDEX_VERSION,
        preprocessing: opts.preprocessing,
        sift: opts.sift,
        entries,
        eigen,
    })
}

/// Evidence for one gallery identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub id: String,
    pub verified_count: usize,
    /// Mean descriptor distance of the verified pairs; `None` without survivors.
    pub mean_distance: Option<f64>,
    /// Pairs passing the ratio test, before verification.
    pub raw_matches: usize,
    /// Fewer than three raw matches, so nothing was geometrically checked.
    pub unverified: bool,
    /// The gallery entry had fewer than two descriptors.
    pub gallery_too_small: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    /// Best first: most verified pairs, then smallest mean distance, then id.
    pub candidates: Vec<CandidateScore>,
    pub query_keypoints: usize,
    /// The query produced no keypoints; the order is the tie-break order only.
    pub no_features: bool,
    /// Eigenface ranking `(id, distance)`, ascending, when requested.
    pub pca: Option<Vec<(String, f64)>>,
}

impl RankedResult {
    pub fn best(&self) -> Option<&CandidateScore> {
        self.candidates.first()
    }

    /// 1-based SIFT rank of `id`.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.candidates
            .iter()
            .position(|c| c.id == id)
            .map(|i| i + 1)
    }

    /// 1-based eigenface rank of `id`.
    pub fn pca_rank_of(&self, id: &str) -> Option<usize> {
        self.pca
            .as_ref()?
            .iter()
            .position(|(c, _)| c == id)
            .map(|i| i + 1)
    }
}

fn rank_order(a: &CandidateScore, b: &CandidateScore) -> std::cmp::Ordering {
    b.verified_count
        .cmp(&a.verified_count)
        .then_with(|| match (a.mean_distance, b.mean_distance) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        })
        .then_with(|| a.id.cmp(&b.id))
}

impl GalleryIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    /// Ranks every gallery entry against the query image at `path`.
    pub fn identify(
        &self,
        path: &Path,
        params: &MatchParams,
        with_pca: bool,
    ) -> Result<RankedResult> {
        let img = load_image(path)?;
        self.identify_image(&img, params, with_pca)
    }

    /// As [`identify`](Self::identify) for a decoded image; preprocessing is
    /// applied here.
    pub fn identify_image(
        &self,
        img: &GrayImage,
        params: &MatchParams,
        with_pca: bool,
    ) -> Result<RankedResult> {
        params.validate()?;
        let img = self.preprocessing.apply(img)?;
        let query = extract_features(&img, &self.sift, "query")?;
        let mut candidates: Vec<CandidateScore> = self
            .entries
            .par_iter()
            .map(|entry| score_candidate(&query, entry, params))
            .collect();
        candidates.sort_by(rank_order);
        let pca = if with_pca {
            Some(self.eigen.identify(&img)?)
        } else {
            None
        };
        Ok(RankedResult {
            candidates,
            query_keypoints: query.len(),
            no_features: query.is_empty(),
            pca,
        })
    }
}

fn score_candidate(query: &FeatureSet, entry: &FeatureSet, params: &MatchParams) -> CandidateScore {
    let p = params.for_candidate(&entry.id);
    let raw = ratio_match(query, entry, &p);
    let verified = verify_matches(&raw.pairs, &query.keypoints, &entry.keypoints, &p);
    CandidateScore {
        id: entry.id.clone(),
        verified_count: verified.verified_count,
        mean_distance: verified.mean_distance(),
        raw_matches: raw.pairs.len(),
        unverified: verified.unverified,
        gallery_too_small: raw.gallery_too_small,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(id: &str, count: usize, dist: Option<f64>) -> CandidateScore {
        CandidateScore {
            id: id.into(),
            verified_count: count,
            mean_distance: dist,
            raw_matches: count,
            unverified: false,
            gallery_too_small: false,
        }
    }

    #[test]
    fn ranking_rule() {
        let mut v = [
            score("d", 0, None),
            score("c", 3, Some(0.2)),
            score("b", 3, Some(0.1)),
            score("a", 0, None),
            score("e", 5, Some(0.9)),
            score("f", 3, Some(0.1)),
        ];
        v.sort_by(rank_order);
        let ids: Vec<_> = v.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["e", "b", "f", "c", "a", "d"]);
    }

    #[test]
    fn id_checks() {
        assert!(check_ids(["a", "b"].into_iter()).is_ok());
        let dup = check_ids(["a", "b", "a"].into_iter()).unwrap_err();
        assert!(dup.to_string().contains("'a'"));
        assert!(check_ids(["a", ""].into_iter()).is_err());
        assert!(check_ids(["a"].into_iter()).is_err());
    }

    #[test]
    fn preprocessing_resizes() {
        let img = GrayImage::filled(40, 20, 0.5).unwrap();
        let out = Preprocessing::default().apply(&img).unwrap();
        assert_eq!((out.width(), out.height()), (300, 300));
        assert!(out.data().iter().all(|&v| (v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn grayscale_codes_round_trip() {
        let r = GrayscaleRule::Bt601;
        assert_eq!(GrayscaleRule::from_code(r.code()), Some(r));
        assert_eq!(GrayscaleRule::from_code(7), None);
    }
}
