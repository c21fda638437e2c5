//! Benchmark protocol: synthesize a tampered query from every gallery image,
//! identify it with both SIFT+ALR and eigenfaces, and summarize the ranks as
//! rank-1 identification rates and CMC curves.

mod report;
mod synth;

pub use report::{render_table, REPORT_VERSION};
pub use synth::{displacement_field, synthesize_manipulation, ManipulationSpec, MAX_SEVERITY};

use std::path::PathBuf;

use crate::gallery::{enroll_images, EnrollOptions, GalleryIndex};
use crate::imaging::{load_image, GrayImage};
use crate::matching::{candidate_seed, MatchParams};
use crate::{Error, Result};

/// Percentage of queries ranked first. `ranks` are 1-based.
pub fn identification_rate(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::param("identification rate of zero queries"));
    }
    let hits = ranks.iter().filter(|&&r| r == 1).count();
    Ok(100.0 * hits as f64 / ranks.len() as f64)
}

/// Entry `k - 1` is the percentage of queries ranked at `k` or better.
pub fn cmc_curve(ranks: &[usize], max_rank: usize) -> Result<Vec<f64>> {
    if max_rank == 0 {
        return Err(Error::param("max_rank must be at least 1"));
    }
    if ranks.is_empty() {
        return Err(Error::param("CMC curve of zero queries"));
    }
    let mut counts = vec![0usize; max_rank];
    for &r in ranks {
        if (1..=max_rank).contains(&r) {
            counts[r - 1] += 1;
        }
    }
    let mut acc = 0;
    Ok(counts
        .into_iter()
        .map(|c| {
            acc += c;
            100.0 * acc as f64 / ranks.len() as f64
        })
        .collect())
}

/// Outcome for one synthesized query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    /// Index into [`BenchmarkReport::specs`].
    pub spec: usize,
    pub query_id: String,
    pub true_id: String,
    pub sift_rank: usize,
    pub pca_rank: usize,
    /// Verified pairs against the true identity.
    pub verified_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub rate: f64,
    pub cmc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecSummary {
    pub spec: ManipulationSpec,
    pub sift: MethodSummary,
    pub pca: MethodSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BenchmarkParams {
    pub enroll: EnrollOptions,
    pub matching: MatchParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub params: BenchmarkParams,
    pub gallery_size: usize,
    /// Eigenface components kept by the trained model.
    pub pca_components: usize,
    pub specs: Vec<SpecSummary>,
    /// Sorted by (spec, query id).
    pub records: Vec<QueryRecord>,
    /// Over all specs.
    pub sift: MethodSummary,
    pub pca: MethodSummary,
}

/// Ranks of one method, restricted to one spec when given.
fn collect_ranks(records: &[QueryRecord], spec: Option<usize>, sift: bool) -> Vec<usize> {
    records
        .iter()
        .filter(|r| spec.is_none_or(|s| r.spec == s))
        .map(|r| if sift { r.sift_rank } else { r.pca_rank })
        .collect()
}

impl BenchmarkReport {
    /// Recomputes every rate and curve from the per-query records.
    pub fn is_consistent(&self) -> bool {
        let summary = |spec, sift| {
            summarize(&collect_ranks(&self.records, spec, sift), self.gallery_size).ok()
        };
        let mut ok = summary(None, true).as_ref() == Some(&self.sift)
            && summary(None, false).as_ref() == Some(&self.pca);
        for (i, s) in self.specs.iter().enumerate() {
            ok &= summary(Some(i), true).as_ref() == Some(&s.sift);
            ok &= summary(Some(i), false).as_ref() == Some(&s.pca);
        }
        ok
    }

    /// Rank-1 SIFT rate for each spec, in spec order.
    pub fn sift_rates(&self) -> Vec<f64> {
        self.specs.iter().map(|s| s.sift.rate).collect()
    }

    pub fn pca_rates(&self) -> Vec<f64> {
        self.specs.iter().map(|s| s.pca.rate).collect()
    }

    /// Versioned `key=value` text; byte-identical for identical inputs.
    pub fn to_text(&self) -> String {
        report::to_text(self)
    }
}

fn summarize(ranks: &[usize], gallery_size: usize) -> Result<MethodSummary> {
    Ok(MethodSummary {
        rate: identification_rate(ranks)?,
        cmc: cmc_curve(ranks, gallery_size)?,
    })
}

/// Loads the gallery from disk and runs [`run_benchmark_images`].
pub fn run_benchmark(
    gallery: &[(String, PathBuf)],
    specs: &[ManipulationSpec],
    params: &BenchmarkParams,
) -> Result<BenchmarkReport> {
    let images = gallery
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
    run_benchmark_images(images, specs, params)
}

/// Enrolls `images` once, then for every spec and image synthesizes one query
/// (seeded by the spec seed and the image id) and ranks it with both methods.
pub fn run_benchmark_images(
    images: Vec<(String, GrayImage)>,
    specs: &[ManipulationSpec],
    params: &BenchmarkParams,
) -> Result<BenchmarkReport> {
    if specs.is_empty() {
        return Err(Error::param(
            "benchmark needs at least one manipulation spec",
        ));
    }
    for s in specs {
        s.validate()?;
    }
    params.matching.validate()?;
    let index = enroll_images(images.clone(), &params.enroll)?;
    let mut records = Vec::with_capacity(specs.len() * images.len());
    for (si, spec) in specs.iter().enumerate() {
        for (id, img) in &images {
            records.push(run_query(&index, si, spec, id, img, &params.matching)?);
        }
    }
    records.sort_by(|a, b| (a.spec, &a.query_id).cmp(&(b.spec, &b.query_id)));

    let g = index.len();
    let specs = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            Ok(SpecSummary {
                spec: *spec,
                sift: summarize(&collect_ranks(&records, Some(i), true), g)?,
                pca: summarize(&collect_ranks(&records, Some(i), false), g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport {
        params: *params,
        gallery_size: g,
        pca_components: index.eigen.k(),
        specs,
        sift: summarize(&collect_ranks(&records, None, true), g)?,
        pca: summarize(&collect_ranks(&records, None, false), g)?,
        records,
    })
}

fn run_query(
    index: &GalleryIndex,
    spec_index: usize,
    spec: &ManipulationSpec,
    id: &str,
    img: &GrayImage,
    params: &MatchParams,
) -> Result<QueryRecord> {
    let query_spec = ManipulationSpec {
        seed: candidate_seed(spec.seed, id),
        ..*spec
    };
    let query = synthesize_manipulation(img, &query_spec)?;
    let result = index.identify_image(&query, params, true)?;
    let missing = || Error::param(format!("identity '{id}' missing from ranking"));
    let true_score = result
        .candidates
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(missing)?;
    Ok(QueryRecord {
        spec: spec_index,
        query_id: id.to_string(),
        true_id: id.to_string(),
        sift_rank: result.rank_of(id).ok_or_else(missing)?,
        pca_rank: result.pca_rank_of(id).ok_or_else(missing)?,
        verified_count: true_score.verified_count,
    })
}

/// Copies of `base` with consecutive seeds.
pub fn seed_sweep(base: &ManipulationSpec, seeds: usize) -> Vec<ManipulationSpec> {
    (0..seeds as u64)
        .map(|i| ManipulationSpec {
            seed: base.seed.wrapping_add(i),
            ..*base
        })
        .collect()
}
