//! Eigenface baseline: PCA over the gallery images, projection into the
//! reduced space, and nearest-neighbour identification by Euclidean distance.

use crate::imaging::GrayImage;
use crate::{Error, Result};

const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentPolicy {
    Fixed(usize),
    /// Smallest k whose eigenvalues cover this fraction of the total variance.
    VarianceFraction(f64),
}

impl Default for ComponentPolicy {
    fn default() -> Self {
        ComponentPolicy::VarianceFraction(0.95)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenModel {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<f64>,
    /// `k` orthonormal eigenfaces, each `width * height` long.
    pub basis: Vec<Vec<f64>>,
    /// Descending, one per basis vector.
    pub eigenvalues: Vec<f64>,
    pub identities: Vec<String>,
    /// Coefficients of each training image, parallel to `identities`.
    pub projections: Vec<Vec<f64>>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (unsorted) and eigenvectors as columns of a
/// row-major `n x n` matrix.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) < JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains on one image per identity. Eigenvectors come from the `N x N`
/// Gram matrix of the centered images (covariance divisor `N`), lifted back
/// to pixel space; each is signed so its largest-magnitude entry is positive.
pub fn train_eigenmodel(
    gallery: &[(String, GrayImage)],
    policy: ComponentPolicy,
) -> Result<EigenModel> {
    let Some((_, first)) = gallery.first() else {
        return Err(Error::param("PCA needs at least 2 images, got 0"));
    };
    let (width, height) = (first.width(), first.height());
    if let Some((id, img)) = gallery
        .iter()
        .find(|(_, img)| (img.width(), img.height()) != (width, height))
    {
        return Err(Error::param(format!(
            "image '{id}' is {}x{}, expected {width}x{height}",
            img.width(),
            img.height()
        )));
    }
    let samples: Vec<(String, Vec<f64>)> = gallery
        .iter()
        .map(|(id, img)| (id.clone(), img.data().iter().map(|&v| v as f64).collect()))
        .collect();
    train_on_vectors(&samples, width, height, policy)
}

/// Same as [`train_eigenmodel`] on raw row-major pixel vectors, which need
/// not lie in `[0, 1]`.
pub fn train_on_vectors(
    samples: &[(String, Vec<f64>)],
    width: usize,
    height: usize,
    policy: ComponentPolicy,
) -> Result<EigenModel> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::param(format!(
            "PCA needs at least 2 images, got {n}"
        )));
    }
    let dim = width * height;
    if let Some((id, v)) = samples.iter().find(|(_, v)| v.len() != dim) {
        return Err(Error::param(format!(
            "sample '{id}' has {} values, expected {dim}",
            v.len()
        )));
    }
    match policy {
        ComponentPolicy::VarianceFraction(f) if !(f > 0.0 && f <= 1.0) => {
            return Err(Error::param(format!(
                "variance fraction must lie in (0, 1], got {f}"
            )));
        }
        _ => {}
    }

    let mut mean = vec![0.0; dim];
    for (_, v) in samples {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = samples
        .iter()
        .map(|(_, v)| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let g = dot(&centered[i], &centered[j]) / n as f64;
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }
    let (values, vectors) = jacobi_eigen(&gram, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    // numerically zero components cannot be lifted to pixel space
    let floor = (total * 1e-12).max(1e-300);
    let rank = order
        .iter()
        .take(n - 1)
        .take_while(|&&i| values[i] > floor)
        .count();
    let k = match policy {
        ComponentPolicy::Fixed(k) => k.min(rank),
        ComponentPolicy::VarianceFraction(f) => {
            let mut acc = 0.0;
            let mut k = 0;
            while k < rank && acc < f * total {
                acc += values[order[k]];
                k += 1;
            }
            k
        }
    };

    let mut basis = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &col in order.iter().take(k) {
        let mut face = vec![0.0; dim];
        for (i, c) in centered.iter().enumerate() {
            let w = vectors[i * n + col];
            for (f, &x) in face.iter_mut().zip(c) {
                *f += w * x;
            }
        }
        let norm = dot(&face, &face).sqrt();
        for f in &mut face {
            *f /= norm;
        }
        let pivot = face.iter().enumerate().fold((0, 0.0f64), |best, (i, &x)| {
            if x.abs() > best.1.abs() {
                (i, x)
            } else {
                best
            }
        });
        if pivot.1 < 0.0 {
            for f in &mut face {
                *f = -*f;
            }
        }
        basis.push(face);
        eigenvalues.push(values[col].max(0.0));
    }

    let projections = centered
        .iter()
        .map(|c| basis.iter().map(|b| dot(b, c)).collect())
        .collect();
    Ok(EigenModel {
        width,
        height,
        mean,
        basis,
        eigenvalues,
        identities: samples.iter().map(|(id, _)| id.clone()).collect(),
        projections,
    })
}

impl EigenModel {
    pub fn k(&self) -> usize {
        self.basis.len()
    }

    /// Coefficients `basis^T (image - mean)`.
    pub fn project(&self, img: &GrayImage) -> Result<Vec<f64>> {
        if (img.width(), img.height()) != (self.width, self.height) {
            return Err(Error::param(format!(
                "image is {}x{}, model expects {}x{}",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        let v: Vec<f64> = img.data().iter().map(|&x| x as f64).collect();
        self.project_vector(&v)
    }

    pub fn project_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::param(format!(
                "vector has {} values, model expects {}",
                v.len(),
                self.mean.len()
            )));
        }
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok(self.basis.iter().map(|b| dot(b, &centered)).collect())
    }

    /// All gallery identities ranked by ascending coefficient-space distance
    /// to the query, ties broken by identity.
    pub fn identify(&self, query: &GrayImage) -> Result<Vec<(String, f64)>> {
        if self.projections.is_empty() {
            return Err(Error::param("eigen model has no gallery projections"));
        }
        let q = self.project(query)?;
        let mut ranked: Vec<(String, f64)> = self
            .identities
            .iter()
            .zip(&self.projections)
            .map(|(id, p)| {
                let d = p
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (id.clone(), d)
            })
            .collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(ranked)
    }
}

pub fn project(model: &EigenModel, img: &GrayImage) -> Result<Vec<f64>> {
    model.project(img)
}

pub fn pca_identify(model: &EigenModel, query: &GrayImage) -> Result<Vec<(String, f64)>> {
    model.identify(query)
}
