use std::f64::consts::TAU;

use super::{Descriptor, Keypoint, ScaleSpace, SiftParams, DESCRIPTOR_LEN};
use crate::imaging::Plane;

const ORI_BINS: usize = 36;
/// Gaussian window of the orientation histogram, in units of keypoint scale.
const ORI_SIGMA_FACTOR: f64 = 1.5;
const ORI_RADIUS_FACTOR: f64 = 3.0 * ORI_SIGMA_FACTOR;

const GRID: usize = 4;
const ANGLE_BINS: usize = 8;
const SAMPLES: usize = 16;
/// Width of one spatial histogram cell, in units of keypoint scale.
const CELL_WIDTH_FACTOR: f64 = 3.0;

/// Where a keypoint lives in the scale space.
struct Placement<'a> {
    image: &'a Plane,
    x: f64,
    y: f64,
    sigma: f64,
}

fn place<'a>(ss: &'a ScaleSpace, kp: &Keypoint) -> Placement<'a> {
    let s = ss.scales_per_octave as f64;
    let base_pixel = ss.octaves[0].pixel_size;
    // continuous scale index counted from octave 0 level 0
    let t = s * (kp.sigma as f64 / (ss.base_sigma * base_pixel)).log2();
    let last = ss.octaves.len() - 1;
    let octave = (((t - 0.5) / s).floor().max(0.0) as usize).min(last);
    let level = (t - octave as f64 * s).round().clamp(0.0, s + 2.0) as usize;
    let oct = &ss.octaves[octave];
    Placement {
        image: &oct.gaussians[level],
        x: ss.to_octave(octave, kp.x as f64),
        y: ss.to_octave(octave, kp.y as f64),
        sigma: kp.sigma as f64 / oct.pixel_size,
    }
}

#[inline]
fn pixel_gradient(img: &Plane, x: usize, y: usize) -> (f64, f64) {
    let gx = img.at(x + 1, y) as f64 - img.at(x - 1, y) as f64;
    let gy = img.at(x, y + 1) as f64 - img.at(x, y - 1) as f64;
    (gx, gy)
}

fn orientation_histogram(p: &Placement) -> [f64; ORI_BINS] {
    let mut hist = [0.0; ORI_BINS];
    let img = p.image;
    let radius = (ORI_RADIUS_FACTOR * p.sigma).round() as i64;
    let weight_sigma = ORI_SIGMA_FACTOR * p.sigma;
    let denom = 2.0 * weight_sigma * weight_sigma;
    let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
    for py in cy - radius..=cy + radius {
        if py < 1 || py > img.height as i64 - 2 {
            continue;
        }
        for px in cx - radius..=cx + radius {
            if px < 1 || px > img.width as i64 - 2 {
                continue;
            }
            let (dx, dy) = (px as f64 - p.x, py as f64 - p.y);
            let r2 = dx * dx + dy * dy;
            if r2 > (radius * radius) as f64 {
                continue;
            }
            let (gx, gy) = pixel_gradient(img, px as usize, py as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx).rem_euclid(TAU);
            let bin = ((angle / TAU * ORI_BINS as f64).round() as usize) % ORI_BINS;
            hist[bin] += mag * (-r2 / denom).exp();
        }
    }
    hist
}

fn smooth_circular(hist: &[f64; ORI_BINS]) -> [f64; ORI_BINS] {
    let n = ORI_BINS;
    let mut out = [0.0; ORI_BINS];
    for (i, o) in out.iter_mut().enumerate() {
        let at = |d: isize| hist[((i as isize + d).rem_euclid(n as isize)) as usize];
        *o = (at(-2) + at(2)) * (1.0 / 16.0)
            + (at(-1) + at(1)) * (4.0 / 16.0)
            + at(0) * (6.0 / 16.0);
    }
    out
}

/// Angles (radians in `[0, 2π)`) of every local histogram maximum reaching
/// `peak_ratio` of the global maximum, refined by a parabola through the
/// peak bin and its neighbors. Bin `i` is centered on `2π i / n`.
pub fn orientation_peaks(hist: &[f64], peak_ratio: f64) -> Vec<f64> {
    let n = hist.len();
    let max = hist.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for i in 0..n {
        let c = hist[i];
        let l = hist[(i + n - 1) % n];
        let r = hist[(i + 1) % n];
        if c > l && c > r && c >= peak_ratio * max {
            let offset = 0.5 * (l - r) / (l - 2.0 * c + r);
            let bin = i as f64 + offset;
            peaks.push((bin / n as f64 * TAU).rem_euclid(TAU));
        }
    }
    peaks
}

fn descriptor(p: &Placement, orientation: f64, clamp: f64) -> Option<Descriptor> {
    let img = p.image;
    let (sin, cos) = orientation.sin_cos();
    let spacing = CELL_WIDTH_FACTOR * p.sigma * GRID as f64 / SAMPLES as f64;
    let half = (SAMPLES as f64 - 1.0) / 2.0;
    let window_sigma = SAMPLES as f64 / 2.0;
    let mut hist = [0.0f64; DESCRIPTOR_LEN];
    for b in 0..SAMPLES {
        let v = b as f64 - half;
        for a in 0..SAMPLES {
            let u = a as f64 - half;
            let sx = p.x + spacing * (u * cos - v * sin);
            let sy = p.y + spacing * (u * sin + v * cos);
            let gx = img.sample(sx + 1.0, sy) as f64 - img.sample(sx - 1.0, sy) as f64;
            let gy = img.sample(sx, sy + 1.0) as f64 - img.sample(sx, sy - 1.0) as f64;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let weight = (-(u * u + v * v) / (2.0 * window_sigma * window_sigma)).exp();
            let angle = (gy.atan2(gx) - orientation).rem_euclid(TAU);

            // trilinear spread over (row cell, column cell, angle bin)
            let rb = (b as f64 + 0.5) / (SAMPLES / GRID) as f64 - 0.5;
            let cb = (a as f64 + 0.5) / (SAMPLES / GRID) as f64 - 0.5;
            let ob = angle / TAU * ANGLE_BINS as f64;
            let (r0, c0, o0) = (rb.floor(), cb.floor(), ob.floor());
            let (dr, dc, dob) = (rb - r0, cb - c0, ob - o0);
            let value = mag * weight;
            for (ri, wr) in [(r0 as i64, 1.0 - dr), (r0 as i64 + 1, dr)] {
                if !(0..GRID as i64).contains(&ri) {
                    continue;
                }
                for (ci, wc) in [(c0 as i64, 1.0 - dc), (c0 as i64 + 1, dc)] {
                    if !(0..GRID as i64).contains(&ci) {
                        continue;
                    }
                    for (oi, wo) in [(o0 as i64, 1.0 - dob), (o0 as i64 + 1, dob)] {
                        let oi = oi.rem_euclid(ANGLE_BINS as i64) as usize;
                        let idx = (ri as usize * GRID + ci as usize) * ANGLE_BINS + oi;
                        hist[idx] += value * wr * wc * wo;
                    }
                }
            }
        }
    }
    let unit = clamped_unit(&hist, clamp)?;
    let mut out = [0f32; DESCRIPTOR_LEN];
    for (o, v) in out.iter_mut().zip(unit) {
        *o = v as f32;
    }
    Some(Descriptor(out))
}

/// Unit vector closest in direction to `v` whose components do not exceed
/// `clamp`: the fixed point of repeated normalize-then-clamp. `None` when
/// `v` has too few non-zero components for such a vector to exist.
pub(crate) fn clamped_unit(v: &[f64; DESCRIPTOR_LEN], clamp: f64) -> Option<[f64; DESCRIPTOR_LEN]> {
    let mut order: Vec<usize> = (0..DESCRIPTOR_LEN).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    // suffix sums of squares over the sorted order
    let mut tail = vec![0.0; DESCRIPTOR_LEN + 1];
    for i in (0..DESCRIPTOR_LEN).rev() {
        tail[i] = tail[i + 1] + v[order[i]] * v[order[i]];
    }
    for saturated in 0..DESCRIPTOR_LEN {
        let remaining = 1.0 - saturated as f64 * clamp * clamp;
        if remaining <= 0.0 || tail[saturated] <= 0.0 {
            return None;
        }
        let scale = (remaining / tail[saturated]).sqrt();
        if scale * v[order[saturated]] <= clamp {
            let mut out = [0.0; DESCRIPTOR_LEN];
            for (rank, &i) in order.iter().enumerate() {
                out[i] = if rank < saturated {
                    clamp
                } else {
                    scale * v[i]
                };
            }
            return Some(out);
        }
    }
    None
}

/// Assigns orientations (one keypoint per dominant histogram peak) and
/// computes descriptors. Gradients come from the Gaussian level nearest each
/// keypoint's scale.
pub fn compute_descriptors(
    ss: &ScaleSpace,
    keypoints: &[Keypoint],
    params: &SiftParams,
) -> (Vec<Keypoint>, Vec<Descriptor>) {
    let mut kps = Vec::with_capacity(keypoints.len());
    let mut descs = Vec::with_capacity(keypoints.len());
    for kp in keypoints {
        let placement = place(ss, kp);
        let hist = smooth_circular(&orientation_histogram(&placement));
        for angle in orientation_peaks(&hist, params.orientation_peak_ratio) {
            if let Some(d) = descriptor(&placement, angle, params.descriptor_clamp) {
                kps.push(Keypoint {
                    orientation: (angle as f32).rem_euclid(std::f32::consts::TAU),
                    ..*kp
                });
                descs.push(d);
            }
        }
    }
    (kps, descs)
}
