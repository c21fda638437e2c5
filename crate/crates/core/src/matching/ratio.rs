use super::{MatchPair, MatchParams};
use crate::sift::{FeatureSet, DESCRIPTOR_LEN};

/// Query rows per block of the distance matrix.
const BLOCK_ROWS: usize = 128;
/// Candidates kept per query row from the fast squared-distance pass; the
/// final two neighbours are re-ranked among these by exact distance.
const SHORTLIST: usize = 4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RatioMatches {
    pub pairs: Vec<MatchPair>,
    /// Gallery had fewer than two descriptors, so no second neighbour exists.
    pub gallery_too_small: bool,
}

fn exact_distance(a: &[f32], b: &[f32]) -> f32 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f32>()
        .sqrt()
}

/// Sorted insertion into a short candidate list ordered by (distance, index).
fn push_candidate(list: &mut Vec<(f32, usize)>, cand: (f32, usize), cap: usize) {
    let pos = list
        .iter()
        .position(|&(d, i)| cand.0 < d || (cand.0 == d && cand.1 < i))
        .unwrap_or(list.len());
    if pos < cap {
        list.insert(pos, cand);
        list.truncate(cap);
    }
}

/// Exhaustive nearest/second-nearest search with the ratio test. At most one
/// pair per query keypoint; gallery keypoints may be hit repeatedly.
pub fn ratio_match(query: &FeatureSet, gallery: &FeatureSet, p: &MatchParams) -> RatioMatches {
    let ng = gallery.len();
    if ng < 2 {
        return RatioMatches {
            pairs: Vec::new(),
            gallery_too_small: true,
        };
    }
    let nq = query.len();
    let qm = query.descriptor_matrix();
    let gm = gallery.descriptor_matrix();
    let sq_norm = |row: &[f32]| row.iter().map(|v| v * v).sum::<f32>();
    let g_norms: Vec<f32> = gm.chunks_exact(DESCRIPTOR_LEN).map(sq_norm).collect();

    let mut pairs = Vec::new();
    let mut dots = vec![0f32; BLOCK_ROWS * ng];
    let mut shortlist: Vec<(f32, usize)> = Vec::with_capacity(SHORTLIST + 1);
    let mut exact: Vec<(f32, usize)> = Vec::with_capacity(SHORTLIST);
    for start in (0..nq).step_by(BLOCK_ROWS) {
        let rows = BLOCK_ROWS.min(nq - start);
        let block = &qm[start * DESCRIPTOR_LEN..(start + rows) * DESCRIPTOR_LEN];
        // dots[r][j] = <query r, gallery j>
        unsafe {
            matrixmultiply::sgemm(
                rows,
                DESCRIPTOR_LEN,
                ng,
                1.0,
                block.as_ptr(),
                DESCRIPTOR_LEN as isize,
                1,
                gm.as_ptr(),
                1,
                DESCRIPTOR_LEN as isize,
                0.0,
                dots.as_mut_ptr(),
                ng as isize,
                1,
            );
        }
        for r in 0..rows {
            let q_row = &block[r * DESCRIPTOR_LEN..(r + 1) * DESCRIPTOR_LEN];
            let qn = sq_norm(q_row);
            shortlist.clear();
            for (j, (&dot, &gn)) in dots[r * ng..(r + 1) * ng].iter().zip(&g_norms).enumerate() {
                let d2 = qn + gn - 2.0 * dot;
                if shortlist.len() < SHORTLIST || d2 <= shortlist[shortlist.len() - 1].0 {
                    push_candidate(&mut shortlist, (d2, j), SHORTLIST);
                }
            }
            exact.clear();
            for &(_, j) in &shortlist {
                let d = exact_distance(q_row, &gm[j * DESCRIPTOR_LEN..(j + 1) * DESCRIPTOR_LEN]);
                push_candidate(&mut exact, (d, j), 2);
            }
            let (d1, best) = exact[0];
            let d2 = exact[1].0;
            if (d1 as f64) < p.ratio_threshold * d2 as f64 {
                pairs.push(MatchPair {
                    query: start + r,
                    gallery: best,
                    distance: d1,
                });
            }
        }
    }
    RatioMatches {
        pairs,
        gallery_too_small: false,
    }
}
