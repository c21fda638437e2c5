//! Grayscale rasters and the pixel operations every other module builds on.

mod netpbm;
mod overlay;

pub use netpbm::{decode_netpbm, encode_pgm, encode_ppm, load_image, save_pgm};
pub use overlay::{render_overlays, save_visualization, Overlay, OverlayKind};

use crate::{Error, Result};

/// Single-channel image with intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::param(format!(
                "pixel buffer holds {} values, expected {}",
                data.len(),
                width * height
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage::new(width, height, data)
    }

    /// Clamps every value into `[0, 1]`; used after arithmetic that can
    /// overshoot by a rounding error.
    pub(crate) fn from_plane_clamped(plane: Plane) -> Self {
        let Plane {
            width,
            height,
            mut data,
        } = plane;
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }

    /// Rotates the raster by 90 degrees so that pixel `(x, y)` lands on
    /// `(y, W - 1 - x)`. Lossless for any size.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        // output is h wide and w tall
        let mut data = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = (y, w - 1 - x);
                data[ny * h + nx] = self.data[y * w + x];
            }
        }
        GrayImage {
            width: h,
            height: w,
            data,
        }
    }
}

/// Real-valued raster without a range constraint (difference-of-Gaussian
/// levels are signed).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Bilinear sample at a real position, clamping to the border.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f32 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = (xc - x0 as f64) as f32;
        let fy = (yc - y0 as f64) as f32;
        let top = lerp(self.at(x0, y0), self.at(x1, y0), fx);
        let bottom = lerp(self.at(x0, y1), self.at(x1, y1), fx);
        lerp(top, bottom, fy)
    }

    /// Keeps every second pixel in each direction, starting at `(0, 0)`.
    pub fn decimate(&self) -> Plane {
        let width = self.width.div_ceil(2);
        let height = self.height.div_ceil(2);
        let mut data = Vec::with_capacity(width * height);
        for y in (0..self.height).step_by(2) {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            data.extend(row.iter().step_by(2));
        }
        Plane {
            width,
            height,
            data,
        }
    }

    /// Elementwise `self - other`.
    pub fn difference(&self, other: &Plane) -> Plane {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

/// Bilinear resize with pixel-center alignment; source coordinates are
/// clamped to the border.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::param(format!(
            "target dimensions must be positive, got {out_w}x{out_h}"
        )));
    }
    let plane = resize_plane(&img.to_plane(), out_w, out_h);
    Ok(GrayImage::from_plane_clamped(plane))
}

pub(crate) fn resize_plane(src: &Plane, out_w: usize, out_h: usize) -> Plane {
    if (src.width, src.height) == (out_w, out_h) {
        return src.clone();
    }
    let taps = |n_out: usize, n_in: usize| -> Vec<(usize, usize, f32)> {
        let scale = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, (s - i0 as f64) as f32)
            })
            .collect()
    };
    let xt = taps(out_w, src.width);
    let yt = taps(out_h, src.height);
    let mut data = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &yt {
        let r0 = &src.data[y0 * src.width..(y0 + 1) * src.width];
        let r1 = &src.data[y1 * src.width..(y1 + 1) * src.width];
        for &(x0, x1, fx) in &xt {
            let top = lerp(r0[x0], r0[x1], fx);
            let bottom = lerp(r1[x0], r1[x1], fx);
            data.push(lerp(top, bottom, fy));
        }
    }
    Plane {
        width: out_w,
        height: out_h,
        data,
    }
}

/// Sampled Gaussian of radius `ceil(4 sigma)`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as i64;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let plane = blur_plane(&img.to_plane(), sigma)?;
    Ok(GrayImage::from_plane_clamped(plane))
}

pub(crate) fn blur_plane(src: &Plane, sigma: f64) -> Result<Plane> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    let kernel = gaussian_kernel(sigma);
    let horizontal = convolve_rows(src, &kernel);
    Ok(convolve_columns(&horizontal, &kernel))
}

// Both passes accumulate in f64 so that constant regions come back bit-exact.
fn convolve_rows(src: &Plane, kernel: &[f64]) -> Plane {
    let (w, h) = (src.width, src.height);
    let r = kernel.len() / 2;
    let mut out = vec![0.0f32; w * h];
    let mut padded = vec![0.0f64; w + 2 * r];
    for y in 0..h {
        let row = &src.data[y * w..(y + 1) * w];
        padded[..r].fill(row[0] as f64);
        for (p, &v) in padded[r..r + w].iter_mut().zip(row) {
            *p = v as f64;
        }
        padded[r + w..].fill(row[w - 1] as f64);
        let dst = &mut out[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            let window = &padded[x..x + kernel.len()];
            *d = window.iter().zip(kernel).map(|(a, b)| a * b).sum::<f64>() as f32;
        }
    }
    Plane {
        width: w,
        height: h,
        data: out,
    }
}

fn convolve_columns(src: &Plane, kernel: &[f64]) -> Plane {
    let (w, h) = (src.width, src.height);
    let r = kernel.len() as isize / 2;
    let mut out = Vec::with_capacity(w * h);
    let mut acc = vec![0.0f64; w];
    for y in 0..h {
        acc.fill(0.0);
        for (k, &kv) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let row = &src.data[sy * w..(sy + 1) * w];
            for (a, &s) in acc.iter_mut().zip(row) {
                *a += kv * s as f64;
            }
        }
        out.extend(acc.iter().map(|&a| a as f32));
    }
    Plane {
        width: w,
        height: h,
        data: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 17) as f32 / 16.0).unwrap()
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = GrayImage::filled(7, 5, 0.3).unwrap();
        let out = resize_bilinear(&img, 13, 2).unwrap();
        assert_eq!((out.width(), out.height()), (13, 2));
        assert!(out.data().iter().all(|&v| (v - 0.3).abs() < 1e-7));
    }

    #[test]
    fn resize_identity_is_exact() {
        let img = ramp(9, 6);
        assert_eq!(resize_bilinear(&img, 9, 6).unwrap(), img);
    }

    #[test]
    fn resize_two_pixels_to_four() {
        let img = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        let out = resize_bilinear(&img, 4, 1).unwrap();
        assert_eq!(out.data(), &[0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn resize_rejects_zero_target() {
        assert!(resize_bilinear(&ramp(3, 3), 0, 4).is_err());
    }

    #[test]
    fn blur_rejects_nonpositive_sigma() {
        assert!(gaussian_blur(&ramp(4, 4), 0.0).is_err());
        assert!(gaussian_blur(&ramp(4, 4), -1.0).is_err());
    }

    #[test]
    fn blur_preserves_constants() {
        let img = GrayImage::filled(20, 11, 0.42).unwrap();
        let out = gaussian_blur(&img, 2.3).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.42).abs() < 1e-6));
    }

    #[test]
    fn kernel_radius_and_mass() {
        let k = gaussian_kernel(1.6);
        assert_eq!(k.len(), 2 * 7 + 1);
        let total: f64 = k.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rotate90_maps_coordinates() {
        let img = ramp(5, 3);
        let rot = img.rotate90();
        assert_eq!((rot.width(), rot.height()), (3, 5));
        for y in 0..3 {
            for x in 0..5 {
                assert_eq!(rot.get(y, 5 - 1 - x), img.get(x, y));
            }
        }
    }

    #[test]
    fn decimate_takes_even_pixels() {
        let p = Plane {
            width: 5,
            height: 3,
            data: (0..15).map(|v| v as f32).collect(),
        };
        let d = p.decimate();
        assert_eq!((d.width, d.height), (3, 2));
        assert_eq!(d.data, vec![0.0, 2.0, 4.0, 10.0, 12.0, 14.0]);
    }
}
