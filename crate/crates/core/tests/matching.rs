mod common;

use std::f64::consts::{PI, TAU};

use common::gen::{descriptor_sets, keypoint, pair_instance};
use common::oracle;
use mugid::matching::{
    alr_attributes, ratio_match, triple_consistent, verify_matches, verify_matches_with, MatchPair,
    MatchParams, Point, TripleMode,
};
use proptest::prelude::*;

fn similarity(p: Point, theta: f64, s: f64, tx: f64, ty: f64) -> Point {
    Point::new(
        s * (theta.cos() * p.x - theta.sin() * p.y) + tx,
        s * (theta.sin() * p.x + theta.cos() * p.y) + ty,
    )
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[test]
fn ratio_matching_agrees_with_brute_force() {
    let p = MatchParams::default();
    for seed in 0..40 {
        // 200 gallery descriptors crosses the blocked-kernel tile boundaries
        let (nq, ng) = if seed % 4 == 0 { (150, 200) } else { (20, 30) };
        let (q, g) = descriptor_sets(nq, ng, seed);
        let got = ratio_match(&q, &g, &p);
        let want = oracle::ratio_match(&q, &g, p.ratio_threshold);
        assert!(!want.is_empty(), "seed {seed}: instance has no matches");
        assert_eq!(got.pairs, want, "seed {seed}");
    }
}

#[test]
fn ratio_matching_needs_two_gallery_descriptors() {
    let (q, g) = descriptor_sets(10, 1, 3);
    let r = ratio_match(&q, &g, &MatchParams::default());
    assert!(r.pairs.is_empty());
    assert!(r.gallery_too_small);
}

#[test]
fn mirroring_negates_angle_and_keeps_ratio() {
    let (a, b, c) = (
        Point::new(3.0, 1.0),
        Point::new(10.0, 4.0),
        Point::new(-2.0, 7.5),
    );
    let m = |p: Point| Point::new(-p.x, p.y);
    let orig = alr_attributes(a, b, c).unwrap();
    let mir = alr_attributes(m(a), m(b), m(c)).unwrap();
    assert!((orig.angle + mir.angle).abs() < 1e-12);
    assert!((orig.length_ratio - mir.length_ratio).abs() < 1e-12);
    assert!(orig.angle.abs() > 0.1);
}

#[test]
fn collinear_and_coincident_triples() {
    let z = Point::new(0.0, 0.0);
    let straight = alr_attributes(z, Point::new(1.0, 0.0), Point::new(-2.0, 0.0)).unwrap();
    assert!((straight.angle - PI).abs() < 1e-12);
    assert!(alr_attributes(z, z, Point::new(1.0, 1.0)).is_err());
    assert!(alr_attributes(z, Point::new(1.0, 1.0), z).is_err());
}

#[test]
fn outliers_are_rejected_inliers_survive() {
    // five points under a 30-degree rotation, scale 1.2 and a shift, plus
    // one pair whose gallery point is far off the transform
    let theta = 30f64.to_radians();
    let src = [
        (10.0, 10.0),
        (80.0, 20.0),
        (40.0, 90.0),
        (120.0, 70.0),
        (60.0, 140.0),
        (100.0, 120.0),
    ];
    let query: Vec<_> = src.iter().map(|&(x, y)| keypoint(x, y)).collect();
    let mut gallery: Vec<_> = src
        .iter()
        .map(|&(x, y)| {
            let p = similarity(Point::new(x, y), theta, 1.2, 15.0, -5.0);
            keypoint(p.x, p.y)
        })
        .collect();
    gallery[5] = keypoint(5.0, 200.0);
    let pairs: Vec<MatchPair> = (0..6)
        .map(|i| MatchPair {
            query: i,
            gallery: i,
            distance: 0.1,
        })
        .collect();
    let v = verify_matches(&pairs, &query, &gallery, &MatchParams::default());
    let kept: Vec<usize> = v.pairs.iter().map(|m| m.query).collect();
    assert_eq!(kept, [0, 1, 2, 3, 4]);
    assert_eq!(v.triples_evaluated, 20);
    assert_eq!(v.tallies[5].consistent, 0);
    assert_eq!(v.tallies[5].evaluated, 10);
}

#[test]
fn mirrored_gallery_loses_its_matches() {
    let src = [
        (10.0, 10.0),
        (80.0, 25.0),
        (35.0, 95.0),
        (120.0, 65.0),
        (60.0, 140.0),
        (150.0, 130.0),
    ];
    let query: Vec<_> = src.iter().map(|&(x, y)| keypoint(x, y)).collect();
    let mirrored: Vec<_> = src.iter().map(|&(x, y)| keypoint(300.0 - x, y)).collect();
    let pairs: Vec<MatchPair> = (0..src.len())
        .map(|i| MatchPair {
            query: i,
            gallery: i,
            distance: 0.1,
        })
        .collect();
    let p = MatchParams::default();
    assert_eq!(verify_matches(&pairs, &query, &query, &p).verified_count, 6);
    let v = verify_matches(&pairs, &query, &mirrored, &p);
    // only triples whose apex angle is within half the tolerance of 0 or π agree
    assert!(v.verified_count <= 1, "{v:?}");
}

#[test]
fn fewer_than_three_pairs_are_unverified() {
    let q = [keypoint(0.0, 0.0), keypoint(5.0, 5.0)];
    let pairs = [
        MatchPair {
            query: 0,
            gallery: 0,
            distance: 0.3,
        },
        MatchPair {
            query: 1,
            gallery: 1,
            distance: 0.2,
        },
    ];
    let v = verify_matches(&pairs, &q, &q, &MatchParams::default());
    assert!(v.unverified);
    assert_eq!(v.verified_count, 2);
    assert_eq!(v.triples_evaluated, 0);
}

#[test]
fn sampled_verification_is_seed_deterministic() {
    let inst = pair_instance(40, 11);
    let p = MatchParams {
        max_triples: 300,
        seed: 5,
        ..Default::default()
    };
    let a = verify_matches(&inst.pairs, &inst.query, &inst.gallery, &p);
    let b = verify_matches(&inst.pairs, &inst.query, &inst.gallery, &p);
    assert_eq!(a, b);
    assert!(a.triples_evaluated <= 300);
    let total: u32 = a.tallies.iter().map(|t| t.evaluated).sum();
    assert_eq!(total as usize, 3 * a.triples_evaluated);
}

fn check_against_oracle(
    n: usize,
    seed: u64,
    p: &MatchParams,
    mode: TripleMode,
) -> Result<(), TestCaseError> {
    let inst = pair_instance(n, seed);
    let got = verify_matches_with(&inst.pairs, &inst.query, &inst.gallery, p, mode);
    let want = oracle::verify_exhaustive(&inst.pairs, &inst.query, &inst.gallery, p);
    prop_assert_eq!(&got.pairs, &want.pairs);
    prop_assert_eq!(got.verified_count, want.pairs.len());
    let tallies: Vec<(u32, u32)> = got
        .tallies
        .iter()
        .map(|t| (t.consistent, t.evaluated))
        .collect();
    prop_assert_eq!(tallies, want.tallies);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ratio_matching_oracle_small(nq in 0usize..25, ng in 0usize..35, seed in any::<u64>()) {
        let p = MatchParams::default();
        let (q, g) = descriptor_sets(nq, ng, seed);
        let got: Vec<(usize, usize)> = ratio_match(&q, &g, &p).pairs.iter().map(|m| (m.query, m.gallery)).collect();
        let want: Vec<(usize, usize)> =
            oracle::ratio_match(&q, &g, p.ratio_threshold).iter().map(|m| (m.query, m.gallery)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn alr_is_similarity_invariant(
        pts in proptest::array::uniform6(-200.0f64..200.0),
        theta in -PI..PI,
        s in 0.1f64..10.0,
        tx in -500.0f64..500.0,
        ty in -500.0f64..500.0,
    ) {
        let (a, b, c) = (Point::new(pts[0], pts[1]), Point::new(pts[2], pts[3]), Point::new(pts[4], pts[5]));
        let Ok(orig) = alr_attributes(a, b, c) else { return Ok(()) };
        prop_assume!((b.x - a.x).hypot(b.y - a.y) > 1e-3 && (c.x - a.x).hypot(c.y - a.y) > 1e-3);
        let t = |p| similarity(p, theta, s, tx, ty);
        let moved = alr_attributes(t(a), t(b), t(c)).unwrap();
        prop_assert!(angle_gap(orig.angle, moved.angle) <= 1e-6);
        prop_assert!((orig.length_ratio - moved.length_ratio).abs() <= 1e-6 * orig.length_ratio.max(1.0));
        prop_assert!(orig.angle > -PI && orig.angle <= PI);
        prop_assert!(triple_consistent(&orig, &moved, &MatchParams::default()));
    }

    #[test]
    fn exhaustive_verification_matches_oracle(n in 0usize..12, seed in any::<u64>()) {
        check_against_oracle(n, seed, &MatchParams::default(), TripleMode::Exhaustive)?;
    }

    #[test]
    fn sampling_every_triple_equals_exhaustive(n in 3usize..=8, seed in any::<u64>(), rng_seed in any::<u64>()) {
        // T >= C(n, 3) for n <= 8, so sampling must draw every triple
        let p = MatchParams { max_triples: 56, seed: rng_seed, ..Default::default() };
        check_against_oracle(n, seed, &p, TripleMode::Sampled)?;
        let inst = pair_instance(n, seed);
        let s = verify_matches_with(&inst.pairs, &inst.query, &inst.gallery, &p, TripleMode::Sampled);
        prop_assert_eq!(s.triples_evaluated, verify_matches_with(&inst.pairs, &inst.query, &inst.gallery, &p, TripleMode::Exhaustive).triples_evaluated);
    }

    #[test]
    fn verification_ignores_pair_order(n in 0usize..14, seed in any::<u64>(), shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let inst = pair_instance(n, seed);
        let mut shuffled = inst.pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
        let p = MatchParams { max_triples: 100, ..Default::default() };
        let a = verify_matches(&inst.pairs, &inst.query, &inst.gallery, &p);
        let b = verify_matches(&shuffled, &inst.query, &inst.gallery, &p);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn looser_tolerances_never_lose_pairs(n in 3usize..12, seed in any::<u64>(), extra in 0.0f64..0.3) {
        // each triple test is monotone in the tolerances, so tallies can only grow
        let inst = pair_instance(n, seed);
        let tight = MatchParams { consistency_quorum: 1.0, ..Default::default() };
        let loose = MatchParams {
            angle_tolerance: tight.angle_tolerance + extra,
            ratio_tolerance: tight.ratio_tolerance + extra,
            ..tight
        };
        let a = verify_matches_with(&inst.pairs, &inst.query, &inst.gallery, &tight, TripleMode::Exhaustive);
        let b = verify_matches_with(&inst.pairs, &inst.query, &inst.gallery, &loose, TripleMode::Exhaustive);
        for (ta, tb) in a.tallies.iter().zip(&b.tallies) {
            prop_assert!(tb.consistent >= ta.consistent);
            prop_assert_eq!(ta.evaluated, tb.evaluated);
        }
    }
}
