use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::{gaussian_blur, GrayImage};
use crate::{Error, Result};

/// Largest allowed severity: node displacement up to a quarter of the width.
pub const MAX_SEVERITY: f64 = 0.25;

/// A seeded geometric + photometric tampering of an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulationSpec {
    /// Bound on control-node displacement, as a fraction of image width.
    pub severity: f64,
    /// Control nodes per side, corners included.
    pub grid: usize,
    /// Output intensity is `v^gamma`.
    pub gamma: f64,
    pub smooth_sigma: Option<f64>,
    pub seed: u64,
}

impl Default for ManipulationSpec {
    fn default() -> Self {
        ManipulationSpec {
            severity: 0.03,
            grid: 6,
            gamma: 1.0,
            smooth_sigma: None,
            seed: 0,
        }
    }
}

impl ManipulationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_SEVERITY).contains(&self.severity) {
            return Err(Error::param(format!(
                "severity must lie in [0, {MAX_SEVERITY}], got {}",
                self.severity
            )));
        }
        if self.grid < 2 {
            return Err(Error::param(format!(
                "grid must be at least 2, got {}",
                self.grid
            )));
        }
        if !(0.5..=2.0).contains(&self.gamma) {
            return Err(Error::param(format!(
                "gamma must lie in [0.5, 2], got {}",
                self.gamma
            )));
        }
        if let Some(s) = self.smooth_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param(format!(
                    "smooth_sigma must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Dense backward displacement `(dx, dy)` per output pixel, row-major.
///
/// A `grid x grid` lattice spans the image corner to corner; border nodes stay
/// fixed and interior nodes move by independent uniform offsets in
/// `[-d, d]^2`, `d = severity * width`. The field is the bilinear
/// interpolation of the node offsets, so it never exceeds `d` per axis.
pub fn displacement_field(
    width: usize,
    height: usize,
    spec: &ManipulationSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let g = spec.grid;
    let d = spec.severity * width as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut nodes = vec![(0.0f64, 0.0f64); g * g];
    for j in 1..g - 1 {
        for i in 1..g - 1 {
            if d > 0.0 {
                nodes[j * g + i] = (rng.gen_range(-d..=d), rng.gen_range(-d..=d));
            }
        }
    }
    // lattice coordinate of pixel p along an axis of n pixels
    let cell = |p: usize, n: usize| -> (usize, f64) {
        if n < 2 {
            return (0, 0.0);
        }
        let t = p as f64 * (g - 1) as f64 / (n - 1) as f64;
        let i = (t.floor() as usize).min(g - 2);
        (i, t - i as f64)
    };
    let mut fx = vec![0.0; width * height];
    let mut fy = vec![0.0; width * height];
    for y in 0..height {
        let (j, ty) = cell(y, height);
        for x in 0..width {
            let (i, tx) = cell(x, width);
            let n00 = nodes[j * g + i];
            let n10 = nodes[j * g + i + 1];
            let n01 = nodes[(j + 1) * g + i];
            let n11 = nodes[(j + 1) * g + i + 1];
            let lerp = |a: f64, b: f64, c: f64, e: f64| {
                (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (c * (1.0 - tx) + e * tx) * ty
            };
            fx[y * width + x] = lerp(n00.0, n10.0, n01.0, n11.0);
            fy[y * width + x] = lerp(n00.1, n10.1, n01.1, n11.1);
        }
    }
    Ok((fx, fy))
}

/// Warps, re-tones and optionally blurs `img`. Deterministic in `(img, spec)`.
pub fn synthesize_manipulation(img: &GrayImage, spec: &ManipulationSpec) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    let (fx, fy) = displacement_field(w, h, spec)?;
    let plane = img.to_plane();
    let mut out = GrayImage::from_fn(w, h, |x, y| {
        let i = y * w + x;
        plane
            .sample(x as f64 + fx[i], y as f64 + fy[i])
            .clamp(0.0, 1.0)
    })?;
    if spec.gamma != 1.0 {
        out = GrayImage::from_fn(w, h, |x, y| out.get(x, y).powf(spec.gamma as f32))?;
    }
    if let Some(sigma) = spec.smooth_sigma {
        out = gaussian_blur(&out, sigma)?;
    }
    Ok(out)
}
