//! Report serialization. The text form is one `key=value` per line, with
//! arrays comma-separated and records as `record=spec,query,true,sift_rank,pca_rank,verified`.

use std::fmt::Write;

use super::{BenchmarkReport, MethodSummary};
use crate::eigenfaces::ComponentPolicy;

pub const REPORT_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn method(out: &mut String, prefix: &str, m: &MethodSummary) {
    let _ = writeln!(out, "{prefix}.rate={}", m.rate);
    let _ = writeln!(out, "{prefix}.cmc={}", join(&m.cmc));
}

pub(super) fn to_text(r: &BenchmarkReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("format", &format!("mugid-benchmark/{REPORT_VERSION}"));
    kv("gallery_size", &r.gallery_size);
    kv("pca.components", &r.pca_components);

    let e = &r.params.enroll;
    kv("preprocess.width", &e.preprocessing.width);
    kv("preprocess.height", &e.preprocessing.height);
    kv(
        "preprocess.grayscale",
        &format!("{:?}", e.preprocessing.grayscale).to_lowercase(),
    );
    match e.components {
        ComponentPolicy::Fixed(k) => kv("pca.policy", &format!("fixed:{k}")),
        ComponentPolicy::VarianceFraction(f) => kv("pca.policy", &format!("variance:{f}")),
    }
    let s = &e.sift;
    kv(
        "sift.octaves",
        &s.octaves
            .map_or_else(|| "auto".to_string(), |o| o.to_string()),
    );
    kv("sift.scales_per_octave", &s.scales_per_octave);
    kv("sift.base_sigma", &s.base_sigma);
    kv("sift.assumed_input_blur", &s.assumed_input_blur);
    kv("sift.contrast_threshold", &s.contrast_threshold);
    kv("sift.edge_ratio", &s.edge_ratio);
    kv("sift.orientation_peak_ratio", &s.orientation_peak_ratio);
    kv("sift.descriptor_clamp", &s.descriptor_clamp);
    kv("sift.upsample", &s.upsample);
    let m = &r.params.matching;
    kv("match.ratio_threshold", &m.ratio_threshold);
    kv("match.angle_tolerance", &m.angle_tolerance);
    kv("match.ratio_tolerance", &m.ratio_tolerance);
    kv("match.max_triples", &m.max_triples);
    kv("match.consistency_quorum", &m.consistency_quorum);
    kv("match.seed", &m.seed);

    kv("specs", &r.specs.len());
    for (i, sp) in r.specs.iter().enumerate() {
        let p = format!("spec.{i}");
        kv(&format!("{p}.severity"), &sp.spec.severity);
        kv(&format!("{p}.grid"), &sp.spec.grid);
        kv(&format!("{p}.gamma"), &sp.spec.gamma);
        kv(
            &format!("{p}.smooth_sigma"),
            &sp.spec
                .smooth_sigma
                .map_or_else(|| "none".to_string(), |v| v.to_string()),
        );
        kv(&format!("{p}.seed"), &sp.spec.seed);
    }
    for (i, sp) in r.specs.iter().enumerate() {
        method(&mut out, &format!("spec.{i}.sift"), &sp.sift);
        method(&mut out, &format!("spec.{i}.pca"), &sp.pca);
    }
    method(&mut out, "overall.sift", &r.sift);
    method(&mut out, "overall.pca", &r.pca);
    let _ = writeln!(out, "records={}", r.records.len());
    for rec in &r.records {
        let _ = writeln!(
            out,
            "record={},{},{},{},{},{}",
            rec.spec, rec.query_id, rec.true_id, rec.sift_rank, rec.pca_rank, rec.verified_count
        );
    }
    out
}

/// Fixed-width summary for terminals.
pub fn render_table(r: &BenchmarkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:>8}  {:>5}  {:>6}  {:>6}  {:>6}  {:>8}  {:>8}",
        "spec", "severity", "grid", "gamma", "smooth", "seed", "SIFT %", "PCA %"
    );
    for (i, sp) in r.specs.iter().enumerate() {
        let s = &sp.spec;
        let smooth = s
            .smooth_sigma
            .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            out,
            "{i:>4}  {:>8.3}  {:>5}  {:>6.2}  {smooth:>6}  {:>6}  {:>8.1}  {:>8.1}",
            s.severity, s.grid, s.gamma, s.seed, sp.sift.rate, sp.pca.rate
        );
    }
    let _ = writeln!(
        out,
        "{:>4}  {:>8}  {:>5}  {:>6}  {:>6}  {:>6}  {:>8.1}  {:>8.1}",
        "all", "", "", "", "", "", r.sift.rate, r.pca.rate
    );
    let _ = writeln!(
        out,
        "gallery {} images, {} queries, {} eigenfaces",
        r.gallery_size,
        r.records.len(),
        r.pca_components
    );
    out
}
