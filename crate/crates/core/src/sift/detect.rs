use super::{Keypoint, ScaleSpace, SiftParams};
use crate::imaging::Plane;

const MAX_REFINE_STEPS: usize = 5;

/// Keypoint candidate on the octave grid, before orientation assignment.
#[derive(Debug, Clone, Copy)]
struct Extremum {
    octave: usize,
    level: usize,
    x: usize,
    y: usize,
    offset: [f64; 3],
    response: f64,
}

fn is_strict_extremum(dogs: &[Plane], level: usize, x: usize, y: usize) -> bool {
    let v = dogs[level].at(x, y);
    let cur = &dogs[level];
    // cheap same-level test first
    let mut greater = true;
    let mut less = true;
    for dy in 0..3 {
        for dx in 0..3 {
            if dx == 1 && dy == 1 {
                continue;
            }
            let n = cur.at(x + dx - 1, y + dy - 1);
            greater &= v > n;
            less &= v < n;
        }
    }
    if !greater && !less {
        return false;
    }
    for plane in [&dogs[level - 1], &dogs[level + 1]] {
        for dy in 0..3 {
            for dx in 0..3 {
                let n = plane.at(x + dx - 1, y + dy - 1);
                greater &= v > n;
                less &= v < n;
            }
        }
    }
    greater || less
}

struct Derivatives {
    gradient: [f64; 3],
    hessian: [[f64; 3]; 3],
}

fn derivatives(dogs: &[Plane], level: usize, x: usize, y: usize) -> Derivatives {
    let d = |l: usize, dx: isize, dy: isize| -> f64 {
        dogs[l].at((x as isize + dx) as usize, (y as isize + dy) as usize) as f64
    };
    let v = d(level, 0, 0);
    let dx = 0.5 * (d(level, 1, 0) - d(level, -1, 0));
    let dy = 0.5 * (d(level, 0, 1) - d(level, 0, -1));
    let ds = 0.5 * (d(level + 1, 0, 0) - d(level - 1, 0, 0));
    let dxx = d(level, 1, 0) + d(level, -1, 0) - 2.0 * v;
    let dyy = d(level, 0, 1) + d(level, 0, -1) - 2.0 * v;
    let dss = d(level + 1, 0, 0) + d(level - 1, 0, 0) - 2.0 * v;
    let dxy = 0.25 * (d(level, 1, 1) - d(level, -1, 1) - d(level, 1, -1) + d(level, -1, -1));
    let dxs = 0.25
        * (d(level + 1, 1, 0) - d(level + 1, -1, 0) - d(level - 1, 1, 0) + d(level - 1, -1, 0));
    let dys = 0.25
        * (d(level + 1, 0, 1) - d(level + 1, 0, -1) - d(level - 1, 0, 1) + d(level - 1, 0, -1));
    Derivatives {
        gradient: [dx, dy, ds],
        hessian: [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]],
    }
}

/// Solves `h * x = b` for a symmetric 3x3 system; `None` when singular.
fn solve3(h: &[[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(h);
    if d.abs() < 1e-15 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut m = *h;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *o = det(&m) / d;
    }
    Some(out)
}

fn refine(
    dogs: &[Plane],
    s: usize,
    octave: usize,
    level: usize,
    x: usize,
    y: usize,
    params: &SiftParams,
) -> Option<Extremum> {
    let (w, h) = (dogs[0].width, dogs[0].height);
    let (mut x, mut y, mut level) = (x, y, level);
    for _ in 0..MAX_REFINE_STEPS {
        let der = derivatives(dogs, level, x, y);
        let g = der.gradient;
        let offset = solve3(&der.hessian, [-g[0], -g[1], -g[2]])?;
        if offset.iter().all(|o| o.abs() <= 0.5) {
            let response = dogs[level].at(x, y) as f64
                + 0.5 * (g[0] * offset[0] + g[1] * offset[1] + g[2] * offset[2]);
            if response.abs() < params.contrast_threshold {
                return None;
            }
            let [[dxx, dxy, _], [_, dyy, _], _] = der.hessian;
            let trace = dxx + dyy;
            let det = dxx * dyy - dxy * dxy;
            let r = params.edge_ratio;
            if det <= 0.0 || trace * trace / det >= (r + 1.0) * (r + 1.0) / r {
                return None;
            }
            return Some(Extremum {
                octave,
                level,
                x,
                y,
                offset,
                response,
            });
        }
        if offset.iter().any(|o| !o.is_finite() || o.abs() > 1e6) {
            return None;
        }
        let nx = x as i64 + offset[0].round() as i64;
        let ny = y as i64 + offset[1].round() as i64;
        let nl = level as i64 + offset[2].round() as i64;
        if nx < 1 || ny < 1 || nx > w as i64 - 2 || ny > h as i64 - 2 || nl < 1 || nl > s as i64 {
            return None;
        }
        (x, y, level) = (nx as usize, ny as usize, nl as usize);
    }
    None
}

/// Finds strict 3x3x3 DoG extrema, refines them to sub-pixel accuracy and
/// discards low-contrast and edge-like responses. Orientations are left at 0.
pub fn detect_keypoints(ss: &ScaleSpace, params: &SiftParams) -> Vec<Keypoint> {
    let s = ss.scales_per_octave;
    let mut found: Vec<Extremum> = Vec::new();
    for (o, oct) in ss.octaves.iter().enumerate() {
        let dogs = &oct.dogs;
        let (w, h) = (dogs[0].width, dogs[0].height);
        if w < 3 || h < 3 {
            continue;
        }
        for level in 1..=s {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    if is_strict_extremum(dogs, level, x, y) {
                        if let Some(e) = refine(dogs, s, o, level, x, y, params) {
                            found.push(e);
                        }
                    }
                }
            }
        }
    }
    // Several candidates can converge onto the same sample; keep one.
    found.sort_by_key(|e| (e.octave, e.level, e.y, e.x));
    found.dedup_by_key(|e| (e.octave, e.level, e.y, e.x));

    let (max_x, max_y) = ((ss.input_width - 1) as f64, (ss.input_height - 1) as f64);
    found
        .iter()
        .map(|e| {
            let oct = &ss.octaves[e.octave];
            let scale = e.level as f64 + e.offset[2];
            let sigma = ss.base_sigma * 2f64.powf(scale / s as f64) * oct.pixel_size;
            Keypoint {
                x: ss
                    .to_input(e.octave, e.x as f64 + e.offset[0])
                    .clamp(0.0, max_x) as f32,
                y: ss
                    .to_input(e.octave, e.y as f64 + e.offset[1])
                    .clamp(0.0, max_y) as f32,
                sigma: sigma as f32,
                orientation: 0.0,
                dog_response: e.response as f32,
            }
        })
        .collect()
}
