use super::{SiftParams, MIN_OCTAVE_SIZE};
use crate::imaging::{blur_plane, resize_plane, GrayImage, Plane};
use crate::{Error, Result};

/// One octave: `s + 3` Gaussian levels and the `s + 2` differences between
/// consecutive levels.
#[derive(Debug, Clone)]
pub struct Octave {
    pub gaussians: Vec<Plane>,
    pub dogs: Vec<Plane>,
    /// Absolute blur of each Gaussian level, in input-image pixels.
    pub sigmas: Vec<f64>,
    /// Size of one octave pixel in input-image pixels.
    pub pixel_size: f64,
}

#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    pub scales_per_octave: usize,
    pub base_sigma: f64,
    /// Input-image coordinate of octave pixel 0 (non-zero when upsampled,
    /// because the upsampling is center-aligned).
    pub origin: f64,
    pub input_width: usize,
    pub input_height: usize,
}

impl ScaleSpace {
    /// Maps an octave pixel coordinate to input-image coordinates.
    pub fn to_input(&self, octave: usize, v: f64) -> f64 {
        v * self.octaves[octave].pixel_size + self.origin
    }

    pub fn to_octave(&self, octave: usize, v: f64) -> f64 {
        (v - self.origin) / self.octaves[octave].pixel_size
    }
}

fn octave_count(seed_w: usize, seed_h: usize, requested: Option<usize>) -> usize {
    let mut side = seed_w.min(seed_h);
    let mut n = 1;
    while side.div_ceil(2) >= MIN_OCTAVE_SIZE {
        side = side.div_ceil(2);
        n += 1;
    }
    requested.map_or(n, |r| r.min(n))
}

pub fn build_scale_space(img: &GrayImage, params: &SiftParams) -> Result<ScaleSpace> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    if w.min(h) < MIN_OCTAVE_SIZE {
        return Err(Error::param(format!(
            "image {w}x{h} is smaller than the minimum side of {MIN_OCTAVE_SIZE}"
        )));
    }
    let s = params.scales_per_octave;
    let base_scale = if params.upsample { 0.5 } else { 1.0 };
    let seed = if params.upsample {
        resize_plane(&img.to_plane(), 2 * w, 2 * h)
    } else {
        img.to_plane()
    };
    let seed_blur = params.assumed_input_blur / base_scale;
    let first = if params.base_sigma > seed_blur {
        let extra = (params.base_sigma.powi(2) - seed_blur.powi(2)).sqrt();
        blur_plane(&seed, extra)?
    } else {
        seed
    };

    // blur of each level relative to its own octave's pixel grid
    let rel: Vec<f64> = (0..s + 3)
        .map(|i| params.base_sigma * 2f64.powf(i as f64 / s as f64))
        .collect();
    let n_octaves = octave_count(first.width, first.height, params.octaves);

    let mut octaves: Vec<Octave> = Vec::with_capacity(n_octaves);
    let mut base = first;
    for o in 0..n_octaves {
        let mut gaussians = Vec::with_capacity(s + 3);
        gaussians.push(base);
        for i in 1..s + 3 {
            let inc = (rel[i].powi(2) - rel[i - 1].powi(2)).sqrt();
            let next = blur_plane(&gaussians[i - 1], inc)?;
            gaussians.push(next);
        }
        let dogs = gaussians
            .windows(2)
            .map(|pair| pair[1].difference(&pair[0]))
            .collect();
        let pixel_size = base_scale * (1u64 << o) as f64;
        base = gaussians[s].decimate();
        octaves.push(Octave {
            sigmas: rel.iter().map(|r| r * pixel_size).collect(),
            gaussians,
            dogs,
            pixel_size,
        });
    }

    Ok(ScaleSpace {
        octaves,
        scales_per_octave: s,
        base_sigma: params.base_sigma,
        origin: (base_scale - 1.0) / 2.0,
        input_width: w,
        input_height: h,
    })
}
