use std::fs;
use std::path::Path;

use super::netpbm::{encode_pgm, encode_ppm};
use super::GrayImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlayKind {
    Point { x: f64, y: f64 },
    Line { x0: f64, y0: f64, x1: f64, y1: f64 },
}

/// A mark drawn over an image. `tag` in `[0, 1]` picks the color along a
/// red-to-green ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlay {
    pub kind: OverlayKind,
    pub tag: f32,
}

impl Overlay {
    pub fn point(x: f64, y: f64, tag: f32) -> Self {
        Overlay {
            kind: OverlayKind::Point { x, y },
            tag,
        }
    }

    pub fn line(x0: f64, y0: f64, x1: f64, y1: f64, tag: f32) -> Self {
        Overlay {
            kind: OverlayKind::Line { x0, y0, x1, y1 },
            tag,
        }
    }

    fn color(&self) -> [u8; 3] {
        let t = self.tag.clamp(0.0, 1.0);
        [
            (255.0 * (1.0 - t)).round() as u8,
            (255.0 * t).round() as u8,
            0,
        ]
    }
}

fn clamp_to(v: f64, n: usize) -> usize {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, (n - 1) as f64) as usize
}

/// Rasterizes overlays onto an 8-bit RGB copy of `img`.
pub fn render_overlays(img: &GrayImage, overlays: &[Overlay]) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut rgb: Vec<u8> = img
        .data()
        .iter()
        .flat_map(|&v| {
            let q = (v * 255.0).round() as u8;
            [q, q, q]
        })
        .collect();
    let mut put = |x: usize, y: usize, c: [u8; 3]| {
        let i = 3 * (y * w + x);
        rgb[i..i + 3].copy_from_slice(&c);
    };
    for ov in overlays {
        let c = ov.color();
        match ov.kind {
            OverlayKind::Point { x, y } => {
                let (cx, cy) = (clamp_to(x, w), clamp_to(y, h));
                for py in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                    for px in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                        put(px, py, c);
                    }
                }
            }
            OverlayKind::Line { x0, y0, x1, y1 } => {
                let (ax, ay) = (clamp_to(x0, w) as f64, clamp_to(y0, h) as f64);
                let (bx, by) = (clamp_to(x1, w) as f64, clamp_to(y1, h) as f64);
                let steps = (bx - ax).abs().max((by - ay).abs()).max(1.0) as usize;
                for s in 0..=steps {
                    let t = s as f64 / steps as f64;
                    put(
                        clamp_to(ax + (bx - ax) * t, w),
                        clamp_to(ay + (by - ay) * t, h),
                        c,
                    );
                }
            }
        }
    }
    rgb
}

/// Writes `img` with overlays: P5 when there are none, P6 otherwise.
pub fn save_visualization(
    img: &GrayImage,
    overlays: &[Overlay],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = if overlays.is_empty() {
        encode_pgm(img, 255)
    } else {
        encode_ppm(img.width(), img.height(), &render_overlays(img, overlays))
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
