mod common;

use mugid::evaluation::{
    cmc_curve, displacement_field, identification_rate, run_benchmark, run_benchmark_images,
    seed_sweep, synthesize_manipulation, BenchmarkParams, ManipulationSpec,
};
use mugid::imaging::GrayImage;
use proptest::prelude::*;

fn spec(severity: f64, seed: u64) -> ManipulationSpec {
    ManipulationSpec {
        severity,
        seed,
        ..Default::default()
    }
}

#[test]
fn displacement_stays_within_severity_bound() {
    // severity 0.05 on a 300-pixel-wide image: at most 15 px per axis
    for seed in 0..20 {
        let s = spec(0.05, seed);
        let (fx, fy) = displacement_field(300, 300, &s).unwrap();
        let max = fx.iter().chain(&fy).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= 15.0 + 1e-9, "seed {seed}: {max}");
        assert!(max > 1.0, "seed {seed}: field is suspiciously flat");
        // the image border is pinned
        for i in 0..300 {
            for idx in [i, 299 * 300 + i, i * 300, i * 300 + 299] {
                assert_eq!((fx[idx], fy[idx]), (0.0, 0.0));
            }
        }
    }
}

#[test]
fn synthesis_is_seeded() {
    let img = &common::corpus()[7].1;
    let a = synthesize_manipulation(img, &spec(0.03, 4)).unwrap();
    let b = synthesize_manipulation(img, &spec(0.03, 4)).unwrap();
    let c = synthesize_manipulation(img, &spec(0.03, 5)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn zero_severity_without_tone_change_is_identity() {
    let img = &common::corpus()[3].1;
    let out = synthesize_manipulation(img, &spec(0.0, 9)).unwrap();
    assert_eq!(&out, img);
}

#[test]
fn gamma_is_applied_pointwise() {
    let img = GrayImage::from_fn(10, 10, |x, y| (x + 10 * y) as f32 / 99.0).unwrap();
    let s = ManipulationSpec {
        severity: 0.0,
        gamma: 1.5,
        ..Default::default()
    };
    let out = synthesize_manipulation(&img, &s).unwrap();
    for (a, b) in img.data().iter().zip(out.data()) {
        assert!(((*a as f64).powf(1.5) - *b as f64).abs() < 1e-6);
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let img = GrayImage::filled(20, 20, 0.5).unwrap();
    for bad in [
        spec(-0.1, 0),
        spec(0.3, 0),
        ManipulationSpec {
            grid: 1,
            ..Default::default()
        },
        ManipulationSpec {
            gamma: 2.5,
            ..Default::default()
        },
        ManipulationSpec {
            smooth_sigma: Some(0.0),
            ..Default::default()
        },
    ] {
        assert!(synthesize_manipulation(&img, &bad).is_err(), "{bad:?}");
    }
}

#[test]
fn rate_examples() {
    let mut ranks = vec![1; 92];
    ranks.extend([2; 8]);
    assert_eq!(identification_rate(&ranks).unwrap(), 92.0);
    let mut ranks = vec![1; 58];
    ranks.extend([5; 42]);
    assert_eq!(identification_rate(&ranks).unwrap(), 58.0);
    assert!(identification_rate(&[]).is_err());
}

#[test]
fn benchmark_report_is_deterministic_and_consistent() {
    let paths: Vec<_> = common::corpus_paths().into_iter().step_by(9).collect();
    let specs = seed_sweep(&spec(0.03, 0), 2);
    let p = BenchmarkParams::default();
    let a = run_benchmark(&paths, &specs, &p).unwrap();
    let b = run_benchmark(&paths, &specs, &p).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert!(a.is_consistent());
    assert_eq!(a.records.len(), 2 * paths.len());
    assert_eq!(a.gallery_size, paths.len());
    assert!(a.to_text().starts_with("format=mugid-benchmark/1\n"));

    // tampering with a record breaks consistency
    let mut bad = a.clone();
    bad.records[0].sift_rank = bad.gallery_size;
    if a.records[0].sift_rank != bad.gallery_size {
        assert!(!bad.is_consistent());
    }
}

#[test]
fn unmodified_queries_are_always_identified() {
    let imgs = common::corpus_subset(10);
    let r = run_benchmark_images(imgs, &[spec(0.0, 0)], &BenchmarkParams::default()).unwrap();
    assert_eq!(r.sift.rate, 100.0);
    assert_eq!(r.pca.rate, 100.0);
}

#[test]
fn stronger_tampering_does_not_help_sift() {
    let imgs = common::corpus_subset(12);
    let p = BenchmarkParams::default();
    let mean = |severity: f64| {
        let r = run_benchmark_images(imgs.clone(), &seed_sweep(&spec(severity, 0), 5), &p).unwrap();
        r.sift_rates().iter().sum::<f64>() / 5.0
    };
    let (mild, strong) = (mean(0.02), mean(0.08));
    assert!(strong <= mild, "0.08: {strong}, 0.02: {mild}");
}

proptest! {
    #[test]
    fn cmc_is_monotone_and_ends_at_100(ranks in proptest::collection::vec(1usize..20, 1..60)) {
        let cmc = cmc_curve(&ranks, 19).unwrap();
        prop_assert!(cmc.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*cmc.last().unwrap(), 100.0);
        prop_assert_eq!(cmc[0], identification_rate(&ranks).unwrap());
        // oracle: direct count per rank
        for (k, &v) in cmc.iter().enumerate() {
            let hits = ranks.iter().filter(|&&r| r <= k + 1).count();
            prop_assert!((v - 100.0 * hits as f64 / ranks.len() as f64).abs() < 1e-9);
        }
    }
}
