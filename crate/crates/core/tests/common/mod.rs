#![allow(dead_code)]

use std::path::PathBuf;

use std::f64::consts::{FRAC_PI_2, TAU};

use mugid::imaging::{load_image, GrayImage};
use mugid::sift::{extract_features, Descriptor, FeatureSet, Keypoint, SiftParams};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus")
}

/// Corpus images as `(file stem, image)`, sorted by name.
pub fn corpus() -> Vec<(String, GrayImage)> {
    corpus_paths()
        .into_iter()
        .map(|(id, p)| {
            let img = load_image(&p).unwrap();
            (id, img)
        })
        .collect()
}

pub fn corpus_paths() -> Vec<(String, PathBuf)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), p))
        .collect()
}

/// Every `step`-th corpus image, for tests that need variety but not volume.
pub fn corpus_subset(count: usize) -> Vec<(String, GrayImage)> {
    let all = corpus();
    let step = (all.len() / count).max(1);
    all.into_iter().step_by(step).take(count).collect()
}

pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

pub fn dist(k: &Keypoint, x: f32, y: f32) -> f32 {
    ((k.x - x).powi(2) + (k.y - y).powi(2)).sqrt()
}

/// Index of the descriptor in `set` nearest to `d` (brute force).
pub fn nearest(set: &FeatureSet, d: &Descriptor) -> usize {
    (0..set.len())
        .min_by(|&a, &b| {
            d.distance(&set.descriptors[a])
                .total_cmp(&d.distance(&set.descriptors[b]))
        })
        .unwrap()
}

pub struct RotationStats {
    pub keypoints: usize,
    pub covered: usize,
    pub nn_correct: usize,
    pub orientation_ok: usize,
}

/// Matches keypoints of `img` against those of its 90-degree rotation.
pub fn rotation_stats(img: &GrayImage, p: &SiftParams) -> RotationStats {
    let a = extract_features(img, p, "a").unwrap();
    let b = extract_features(&img.rotate90(), p, "b").unwrap();
    let w = img.width() as f32;
    let mut s = RotationStats {
        keypoints: a.len(),
        covered: 0,
        nn_correct: 0,
        orientation_ok: 0,
    };
    for (i, k) in a.keypoints.iter().enumerate() {
        // pixel (x, y) lands on (y, W - 1 - x); directions turn by -90 degrees
        let (mx, my) = (k.y, w - 1.0 - k.x);
        let near: Vec<usize> = (0..b.len())
            .filter(|&j| dist(&b.keypoints[j], mx, my) <= 1.5)
            .collect();
        if near.is_empty() {
            continue;
        }
        s.covered += 1;
        if near.contains(&nearest(&b, &a.descriptors[i])) {
            s.nn_correct += 1;
        }
        let want = k.orientation as f64 - FRAC_PI_2;
        if near
            .iter()
            .any(|&j| angle_gap(b.keypoints[j].orientation as f64, want) <= 0.1)
        {
            s.orientation_ok += 1;
        }
    }
    s
}

pub mod oracle {
    //! Independent brute-force references for the matching stage.

    use mugid::matching::{MatchPair, MatchParams};
    use mugid::sift::{FeatureSet, Keypoint};

    fn euclid(a: &[f32], b: &[f32]) -> f32 {
        let mut s = 0f32;
        for i in 0..a.len() {
            s += (a[i] - b[i]) * (a[i] - b[i]);
        }
        s.sqrt()
    }

    /// Nearest and second-nearest by full scan; ties go to the lower index.
    pub fn ratio_match(q: &FeatureSet, g: &FeatureSet, ratio: f64) -> Vec<MatchPair> {
        let mut out = Vec::new();
        if g.len() < 2 {
            return out;
        }
        for (qi, qd) in q.descriptors.iter().enumerate() {
            let mut best = (f32::INFINITY, usize::MAX);
            let mut second = f32::INFINITY;
            for (gi, gd) in g.descriptors.iter().enumerate() {
                let d = euclid(&qd.0, &gd.0);
                if d < best.0 {
                    second = best.0;
                    best = (d, gi);
                } else if d < second {
                    second = d;
                }
            }
            if (best.0 as f64) < ratio * second as f64 {
                out.push(MatchPair {
                    query: qi,
                    gallery: best.1,
                    distance: best.0,
                });
            }
        }
        out
    }

    fn attrs(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<(f64, f64)> {
        let (ux, uy) = (a[0] - p[0], a[1] - p[1]);
        let (vx, vy) = (b[0] - p[0], b[1] - p[1]);
        let (lu, lv) = (ux.hypot(uy), vx.hypot(vy));
        if lu <= 1e-9 || lv <= 1e-9 {
            return None;
        }
        let mut angle = vy.atan2(vx) - uy.atan2(ux);
        while angle <= -std::f64::consts::PI {
            angle += std::f64::consts::TAU;
        }
        while angle > std::f64::consts::PI {
            angle -= std::f64::consts::TAU;
        }
        Some((angle, lu / lv))
    }

    pub struct Verified {
        /// Survivors in (query, gallery) order.
        pub pairs: Vec<MatchPair>,
        /// `(consistent, evaluated)` per input pair in (query, gallery) order.
        pub tallies: Vec<(u32, u32)>,
    }

    /// Every triple of distinct pairs, apex = first in (query, gallery) order.
    pub fn verify_exhaustive(
        pairs: &[MatchPair],
        qk: &[Keypoint],
        gk: &[Keypoint],
        p: &MatchParams,
    ) -> Verified {
        let mut s = pairs.to_vec();
        s.sort_by_key(|m| (m.query, m.gallery));
        let n = s.len();
        let pos = |k: &Keypoint| [k.x as f64, k.y as f64];
        let mut tallies = vec![(0u32, 0u32); n];
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let q = attrs(
                        pos(&qk[s[i].query]),
                        pos(&qk[s[j].query]),
                        pos(&qk[s[k].query]),
                    );
                    let g = attrs(
                        pos(&gk[s[i].gallery]),
                        pos(&gk[s[j].gallery]),
                        pos(&gk[s[k].gallery]),
                    );
                    let (Some(q), Some(g)) = (q, g) else { continue };
                    let mut da = (q.0 - g.0).abs();
                    if da > std::f64::consts::PI {
                        da = std::f64::consts::TAU - da;
                    }
                    let ok = da <= p.angle_tolerance
                        && (q.1 - g.1).abs() / q.1.max(g.1) <= p.ratio_tolerance;
                    for m in [i, j, k] {
                        tallies[m].1 += 1;
                        tallies[m].0 += ok as u32;
                    }
                }
            }
        }
        let mut kept: Vec<MatchPair> = if n < 3 {
            s.clone()
        } else {
            (0..n)
                .filter(|&m| {
                    let (c, e) = tallies[m];
                    e > 0 && c as f64 / e as f64 >= p.consistency_quorum
                })
                .map(|m| s[m])
                .collect()
        };
        // one survivor per gallery keypoint: smallest distance, then query index
        let mut best: Vec<MatchPair> = Vec::new();
        for m in &kept {
            match best.iter_mut().find(|b| b.gallery == m.gallery) {
                Some(b) => {
                    if (m.distance, m.query) < (b.distance, b.query) {
                        *b = *m;
                    }
                }
                None => best.push(*m),
            }
        }
        kept.retain(|m| best.contains(m));
        Verified {
            pairs: kept,
            tallies,
        }
    }
}

pub mod gen {
    //! Seeded random inputs for the matching stage.

    use mugid::matching::MatchPair;
    use mugid::sift::{Descriptor, FeatureSet, Keypoint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn keypoint(x: f64, y: f64) -> Keypoint {
        Keypoint {
            x: x as f32,
            y: y as f32,
            sigma: 2.0,
            orientation: 0.0,
            dog_response: 0.05,
        }
    }

    fn unit(v: &mut [f32]) {
        let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    }

    fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
        let mut d = [0f32; 128];
        d.iter_mut().for_each(|v| *v = rng.gen_range(0.0..1.0));
        unit(&mut d);
        Descriptor(d)
    }

    /// A query/gallery pair of descriptor sets; about half of the query
    /// descriptors are noisy copies of gallery ones so the ratio test fires.
    pub fn descriptor_sets(nq: usize, ng: usize, seed: u64) -> (FeatureSet, FeatureSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gd: Vec<Descriptor> = (0..ng).map(|_| random_descriptor(&mut rng)).collect();
        let qd: Vec<Descriptor> = (0..nq)
            .map(|_| {
                if ng > 0 && rng.gen_bool(0.5) {
                    let mut d = gd[rng.gen_range(0..ng)].0;
                    let noise = rng.gen_range(0.0..0.08f32);
                    d.iter_mut()
                        .for_each(|v| *v = (*v + rng.gen_range(-noise..=noise)).max(0.0));
                    unit(&mut d);
                    Descriptor(d)
                } else {
                    random_descriptor(&mut rng)
                }
            })
            .collect();
        let kps = |n: usize| (0..n).map(|i| keypoint(i as f64, 0.0)).collect::<Vec<_>>();
        (
            FeatureSet::new("q", kps(nq), qd).unwrap(),
            FeatureSet::new("g", kps(ng), gd).unwrap(),
        )
    }

    pub struct PairInstance {
        pub pairs: Vec<MatchPair>,
        pub query: Vec<Keypoint>,
        pub gallery: Vec<Keypoint>,
    }

    /// `n` candidate pairs: inliers follow a random similarity (plus a little
    /// jitter), the rest are outliers; some gallery keypoints are hit twice.
    pub fn pair_instance(n: usize, seed: u64) -> PairInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = rng.gen_range(-3.1..3.1f64);
        let s = rng.gen_range(0.6..1.6f64);
        let (tx, ty) = (rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0));
        let mut query = Vec::new();
        let mut gallery = Vec::new();
        let mut pairs = Vec::new();
        for i in 0..n {
            let (x, y) = (rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0));
            query.push(keypoint(x, y));
            let gi = if i > 0 && rng.gen_bool(0.15) {
                rng.gen_range(0..gallery.len())
            } else {
                let (gx, gy) = if rng.gen_bool(0.7) {
                    let j = rng.gen_range(0.0..0.8);
                    (
                        s * (theta.cos() * x - theta.sin() * y) + tx + rng.gen_range(-j..=j),
                        s * (theta.sin() * x + theta.cos() * y) + ty + rng.gen_range(-j..=j),
                    )
                } else {
                    (rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0))
                };
                gallery.push(keypoint(gx, gy));
                gallery.len() - 1
            };
            pairs.push(MatchPair {
                query: i,
                gallery: gi,
                distance: rng.gen_range(0.05..0.6),
            });
        }
        PairInstance {
            pairs,
            query,
            gallery,
        }
    }
}
