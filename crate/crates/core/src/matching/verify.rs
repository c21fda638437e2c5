use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{alr_attributes, triple_consistent, MatchPair, MatchParams, Point};
use crate::sift::Keypoint;

/// Triple tallies for one input pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConsistency {
    pub pair: MatchPair,
    pub consistent: u32,
    pub evaluated: u32,
}

impl PairConsistency {
    /// Zero when the pair took part in no evaluated triple.
    pub fn fraction(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.consistent as f64 / self.evaluated as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifiedMatches {
    /// Surviving pairs, ordered by (query, gallery) keypoint index.
    pub pairs: Vec<MatchPair>,
    /// Consistency fraction of each surviving pair.
    pub consistency: Vec<f64>,
    pub verified_count: usize,
    /// Tallies for every input pair, in the same canonical order.
    pub tallies: Vec<PairConsistency>,
    /// Fewer than three pairs: nothing could be checked.
    pub unverified: bool,
    pub triples_evaluated: usize,
}

impl VerifiedMatches {
    /// Mean descriptor distance of the surviving pairs.
    pub fn mean_distance(&self) -> Option<f64> {
        if self.pairs.is_empty() {
            return None;
        }
        Some(self.pairs.iter().map(|p| p.distance as f64).sum::<f64>() / self.pairs.len() as f64)
    }
}

fn choose3(n: usize) -> u128 {
    let n = n as u128;
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

fn choose2(n: usize) -> u128 {
    let n = n as u128;
    if n < 2 {
        0
    } else {
        n * (n - 1) / 2
    }
}

/// Largest `m < limit` with `f(m) <= target`; `f` non-decreasing.
fn largest_below(limit: usize, target: u128, f: impl Fn(usize) -> u128) -> usize {
    let (mut lo, mut hi) = (0usize, limit);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Maps a rank in `0..C(n, 3)` to the triple `i < j < k` (colexicographic order).
pub(crate) fn unrank_triple(n: usize, rank: u128) -> (usize, usize, usize) {
    let k = largest_below(n, rank, choose3);
    let rest = rank - choose3(k);
    let j = largest_below(k, rest, choose2);
    let i = (rest - choose2(j)) as usize;
    (i, j, k)
}

fn dedupe_gallery_hits(pairs: &mut Vec<(MatchPair, f64)>) {
    // smaller distance wins; ties go to the smaller query index
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&pairs[a].0, &pairs[b].0);
        pa.gallery
            .cmp(&pb.gallery)
            .then(pa.distance.total_cmp(&pb.distance))
            .then(pa.query.cmp(&pb.query))
    });
    let mut keep = vec![false; pairs.len()];
    let mut last_gallery = None;
    for i in order {
        let g = pairs[i].0.gallery;
        if last_gallery != Some(g) {
            keep[i] = true;
            last_gallery = Some(g);
        }
    }
    let mut flags = keep.into_iter();
    pairs.retain(|_| flags.next().unwrap_or(false));
}

/// How triples of pairs are chosen for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TripleMode {
    /// Exhaustive when `C(n, 3) <= max_triples`, sampled otherwise.
    #[default]
    Auto,
    Exhaustive,
    /// Draw `min(max_triples, C(n, 3))` distinct triples with the seeded RNG.
    Sampled,
}

/// Keeps the pairs whose relative spatial arrangement agrees with the other
/// matches. For every evaluated triple of pairs, the ALR attributes of the
/// three query points (apex = the member first in (query, gallery) order) are
/// compared with those of the three gallery points; a pair survives when at
/// least `consistency_quorum` of its evaluated triples are consistent. All
/// `C(n, 3)` triples are evaluated when that is at most `max_triples`,
/// otherwise `max_triples` distinct triples are drawn with the seeded RNG.
pub fn verify_matches(
    pairs: &[MatchPair],
    query_kps: &[Keypoint],
    gallery_kps: &[Keypoint],
    p: &MatchParams,
) -> VerifiedMatches {
    verify_matches_with(pairs, query_kps, gallery_kps, p, TripleMode::Auto)
}

/// [`verify_matches`] with an explicit triple enumeration strategy.
pub fn verify_matches_with(
    pairs: &[MatchPair],
    query_kps: &[Keypoint],
    gallery_kps: &[Keypoint],
    p: &MatchParams,
    mode: TripleMode,
) -> VerifiedMatches {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| {
        (a.query, a.gallery)
            .cmp(&(b.query, b.gallery))
            .then(a.distance.total_cmp(&b.distance))
    });
    let n = sorted.len();

    if n < 3 {
        let mut kept: Vec<(MatchPair, f64)> = sorted.iter().map(|&m| (m, 1.0)).collect();
        dedupe_gallery_hits(&mut kept);
        return VerifiedMatches {
            verified_count: kept.len(),
            consistency: kept.iter().map(|k| k.1).collect(),
            pairs: kept.into_iter().map(|k| k.0).collect(),
            tallies: sorted
                .iter()
                .map(|&pair| PairConsistency {
                    pair,
                    consistent: 0,
                    evaluated: 0,
                })
                .collect(),
            unverified: true,
            triples_evaluated: 0,
        };
    }

    let point = |kp: &Keypoint| Point::new(kp.x as f64, kp.y as f64);
    let qpts: Vec<Point> = sorted.iter().map(|m| point(&query_kps[m.query])).collect();
    let gpts: Vec<Point> = sorted
        .iter()
        .map(|m| point(&gallery_kps[m.gallery]))
        .collect();

    let mut consistent = vec![0u32; n];
    let mut evaluated = vec![0u32; n];
    let mut triples_evaluated = 0usize;
    let mut evaluate = |i: usize, j: usize, k: usize| {
        let (Ok(qa), Ok(ga)) = (
            alr_attributes(qpts[i], qpts[j], qpts[k]),
            alr_attributes(gpts[i], gpts[j], gpts[k]),
        ) else {
            return;
        };
        triples_evaluated += 1;
        let ok = triple_consistent(&qa, &ga, p) as u32;
        for m in [i, j, k] {
            evaluated[m] += 1;
            consistent[m] += ok;
        }
    };

    let total = choose3(n);
    let exhaustive = match mode {
        TripleMode::Auto => total <= p.max_triples as u128,
        TripleMode::Exhaustive => true,
        TripleMode::Sampled => false,
    };
    if exhaustive {
        for k in 2..n {
            for j in 1..k {
                for i in 0..j {
                    evaluate(i, j, k);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let amount = total.min(p.max_triples as u128) as usize;
        let mut ranks = sample_ranks(&mut rng, total, amount);
        ranks.sort_unstable();
        for r in ranks {
            let (i, j, k) = unrank_triple(n, r);
            evaluate(i, j, k);
        }
    }

    let tallies: Vec<PairConsistency> = sorted
        .iter()
        .enumerate()
        .map(|(m, &pair)| PairConsistency {
            pair,
            consistent: consistent[m],
            evaluated: evaluated[m],
        })
        .collect();
    let mut kept: Vec<(MatchPair, f64)> = tallies
        .iter()
        .filter(|t| t.evaluated > 0 && t.fraction() >= p.consistency_quorum)
        .map(|t| (t.pair, t.fraction()))
        .collect();
    dedupe_gallery_hits(&mut kept);

    VerifiedMatches {
        verified_count: kept.len(),
        consistency: kept.iter().map(|k| k.1).collect(),
        pairs: kept.into_iter().map(|k| k.0).collect(),
        tallies,
        unverified: false,
        triples_evaluated,
    }
}

/// `amount` distinct values drawn uniformly from `0..total` (Floyd's algorithm).
fn sample_ranks(rng: &mut ChaCha8Rng, total: u128, amount: usize) -> Vec<u128> {
    use rand::Rng;
    use std::collections::HashSet;
    let amount = amount as u128;
    debug_assert!(amount <= total);
    let mut chosen: HashSet<u128> = HashSet::with_capacity(amount as usize);
    let mut out = Vec::with_capacity(amount as usize);
    for j in total - amount..total {
        let t = rng.gen_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out
}
