//! Binary index format. All integers and reals are little-endian:
//!
//! ```text
//! "MGID" u16 version u8 flags(bit0 = upsample)
//! u32 width u32 height u8 grayscale-rule
//! u32 octaves(0 = auto) u32 scales, f64 x6 SIFT reals
//! u32 entries, each: u16 id-len, id, u32 n, n x 5 f32 keypoint, n x 128 f32 descriptor
//! u32 width u32 height u32 k u32 n, f64 mean, basis, eigenvalues, projections
//! u32 CRC-32 of everything above
//! ```

use std::path::Path;

use super::{GalleryIndex, GrayscaleRule, Preprocessing};
use crate::eigenfaces::EigenModel;
use crate::sift::{Descriptor, FeatureSet, Keypoint, SiftParams, DESCRIPTOR_LEN};
use crate::{Error, Result};

pub const INDEX_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"MGID";
const FLAG_UPSAMPLE: u8 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize, what: &str) -> Result<()> {
        let n = u32::try_from(n).map_err(|_| Error::param(format!("too many {what} to store")))?;
        self.u32(n);
        Ok(())
    }
}

pub fn encode_index(index: &GalleryIndex) -> Result<Vec<u8>> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u16(index.version);
    w.u8(if index.sift.upsample {
        FLAG_UPSAMPLE
    } else {
        0
    });

    let pre = &index.preprocessing;
    w.len(pre.width, "columns")?;
    w.len(pre.height, "rows")?;
    w.u8(pre.grayscale.code());

    let s = &index.sift;
    w.len(s.octaves.unwrap_or(0), "octaves")?;
    w.len(s.scales_per_octave, "scales")?;
    for v in [
        s.base_sigma,
        s.assumed_input_blur,
        s.contrast_threshold,
        s.edge_ratio,
        s.orientation_peak_ratio,
        s.descriptor_clamp,
    ] {
        w.f64(v);
    }

    w.len(index.entries.len(), "entries")?;
    for e in &index.entries {
        let id = e.id.as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::param(format!("identity id '{}' is too long", e.id)))?;
        w.u16(id_len);
        w.0.extend_from_slice(id);
        w.len(e.keypoints.len(), "keypoints")?;
        for k in &e.keypoints {
            for v in [k.x, k.y, k.sigma, k.orientation, k.dog_response] {
                w.f32(v);
            }
        }
        for d in &e.descriptors {
            for &v in d.as_slice() {
                w.f32(v);
            }
        }
    }

    let m = &index.eigen;
    if m.identities
        .iter()
        .map(String::as_str)
        .ne(index.entries.iter().map(|e| e.id.as_str()))
    {
        return Err(Error::param(
            "eigen model identities differ from gallery entries",
        ));
    }
    w.len(m.width, "columns")?;
    w.len(m.height, "rows")?;
    w.len(m.basis.len(), "components")?;
    w.len(m.projections.len(), "projections")?;
    let reals = m
        .mean
        .iter()
        .chain(m.basis.iter().flatten())
        .chain(&m.eigenvalues)
        .chain(m.projections.iter().flatten());
    for &v in reals {
        w.f64(v);
    }

    let crc = crc32fast::hash(&w.0);
    w.u32(crc);
    Ok(w.0)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(self.pos, "unexpected end of index"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        self.array().map(u16::from_le_bytes)
    }
    fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }
    fn usize(&mut self) -> Result<usize> {
        self.u32().map(|v| v as usize)
    }
    fn f32(&mut self) -> Result<f32> {
        self.array().map(f32::from_le_bytes)
    }
    fn f64(&mut self) -> Result<f64> {
        self.array().map(f64::from_le_bytes)
    }
    /// Fails before allocating when `count` items of `size` bytes cannot fit.
    fn expect(&self, count: usize, size: usize) -> Result<()> {
        match count.checked_mul(size) {
            Some(n) if n <= self.bytes.len() - self.pos => Ok(()),
            _ => Err(Error::format(
                self.pos,
                format!("declared {count} items exceed the remaining data"),
            )),
        }
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        self.expect(n, 8)?;
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode_index(bytes: &[u8]) -> Result<GalleryIndex> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(Error::format(0, "not a gallery index (bad magic)"));
    }
    if bytes.len() < 10 {
        return Err(Error::format(bytes.len(), "unexpected end of index"));
    }
    let (body, stored) = bytes.split_at(bytes.len() - 4);
    let mut r = Reader {
        bytes: body,
        pos: 4,
    };
    let version = r.u16()?;
    if version != INDEX_VERSION {
        return Err(Error::format(
            4,
            format!("unsupported index version {version}"),
        ));
    }
    let flags_at = r.pos;
    let flags = r.u8()?;
    if flags & !FLAG_UPSAMPLE != 0 {
        return Err(Error::format(
            flags_at,
            format!("unknown flags {flags:#04x}"),
        ));
    }

    let width = r.usize()?;
    let height = r.usize()?;
    let rule_at = r.pos;
    let grayscale = GrayscaleRule::from_code(r.u8()?)
        .ok_or_else(|| Error::format(rule_at, "unknown grayscale rule"))?;
    let preprocessing = Preprocessing {
        width,
        height,
        grayscale,
    };

    let octaves = r.usize()?;
    let sift = SiftParams {
        octaves: (octaves != 0).then_some(octaves),
        scales_per_octave: r.usize()?,
        base_sigma: r.f64()?,
        assumed_input_blur: r.f64()?,
        contrast_threshold: r.f64()?,
        edge_ratio: r.f64()?,
        orientation_peak_ratio: r.f64()?,
        descriptor_clamp: r.f64()?,
        upsample: flags & FLAG_UPSAMPLE != 0,
    };

    let n_entries = r.usize()?;
    r.expect(n_entries, 6)?;
    let mut entries = Vec::with_capacity(n_entries);
    for _ in 0..n_entries {
        let id_len = r.u16()? as usize;
        let id_at = r.pos;
        let id = std::str::from_utf8(r.take(id_len)?)
            .map_err(|_| Error::format(id_at, "identity id is not UTF-8"))?
            .to_string();
        let n = r.usize()?;
        r.expect(n, 4 * (5 + DESCRIPTOR_LEN))?;
        let mut keypoints = Vec::with_capacity(n);
        for _ in 0..n {
            keypoints.push(Keypoint {
                x: r.f32()?,
                y: r.f32()?,
                sigma: r.f32()?,
                orientation: r.f32()?,
                dog_response: r.f32()?,
            });
        }
        let mut descriptors = Vec::with_capacity(n);
        for _ in 0..n {
            let mut d = [0f32; DESCRIPTOR_LEN];
            for v in &mut d {
                *v = r.f32()?;
            }
            descriptors.push(Descriptor(d));
        }
        entries.push(FeatureSet {
            id,
            keypoints,
            descriptors,
        });
    }

    let dims_at = r.pos;
    let mw = r.usize()?;
    let mh = r.usize()?;
    let k = r.usize()?;
    let n = r.usize()?;
    if n != entries.len() {
        return Err(Error::format(
            dims_at,
            format!(
                "eigen model covers {n} images but the gallery has {}",
                entries.len()
            ),
        ));
    }
    let dim = mw
        .checked_mul(mh)
        .ok_or_else(|| Error::format(dims_at, "eigen model dimensions overflow"))?;
    let mean = r.f64s(dim)?;
    r.expect(k, dim.saturating_mul(8))?;
    let basis = (0..k).map(|_| r.f64s(dim)).collect::<Result<Vec<_>>>()?;
    let eigenvalues = r.f64s(k)?;
    let projections = (0..n).map(|_| r.f64s(k)).collect::<Result<Vec<_>>>()?;
    if r.pos != body.len() {
        return Err(Error::format(r.pos, "trailing bytes after eigen model"));
    }

    let stored = u32::from_le_bytes(stored.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Corrupt { stored, computed });
    }

    let eigen = EigenModel {
        width: mw,
        height: mh,
        mean,
        basis,
        eigenvalues,
        identities: entries.iter().map(|e| e.id.clone()).collect(),
        projections,
    };
    Ok(GalleryIndex {
        version,
        preprocessing,
        sift,
        entries,
        eigen,
    })
}

pub fn save_index(index: &GalleryIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_index(index)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<GalleryIndex> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_index(&bytes)
}
