//! Portable float map reading and writing.
//!
//! Masks (coverage of environment maps, saturation of images, silhouettes of
//! normal maps) travel in a single-channel sidecar next to the main file:
//! `foo.pfm` pairs with `foo.mask.pfm`, holding 1.0 for set and 0.0 for unset.

use std::fs;
use std::path::{Path, PathBuf};

use crate::envmap::KernelParamMap;
use crate::equirect::MapSize;
use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3};
use crate::image::{EnvironmentMap, Image};
use crate::probe::Probe;

/// Raw float raster, rows stored top-down in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::domain(format!("PFM holds 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::domain("PFM payload size does not match its dimensions"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            self.pos = start;
            return self.fail("unexpected end of header");
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).or_else(|_| {
            Err(Error::Parse {
                offset: start,
                message: "header is not ASCII".into(),
            })
        })
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        self.skip_space();
        let start = self.pos;
        let tok = self.token()?.to_owned();
        tok.parse().or_else(|_| {
            Err(Error::Parse {
                offset: start,
                message: format!("invalid {what} {tok:?}"),
            })
        })
    }
}

pub fn decode_pfm(bytes: &[u8]) -> Result<PfmImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    let channels = match cur.token()? {
        "PF" => 3,
        "Pf" => 1,
        other => {
            let other = other.to_owned();
            cur.pos = 0;
            return cur.fail(format!("expected PF or Pf, found {other:?}"));
        }
    };
    let width: usize = cur.number("width")?;
    let height: usize = cur.number("height")?;
    let scale: f64 = cur.number("scale")?;
    if width == 0 || height == 0 {
        return cur.fail("dimensions must be positive");
    }
    if scale == 0.0 || !scale.is_finite() {
        return cur.fail("scale must be a finite non-zero number");
    }
    // Exactly one whitespace byte separates the header from the payload.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return cur.fail("missing newline after scale");
    }
    cur.pos += 1;
    let little = scale < 0.0;
    let n = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::Parse {
            offset: cur.pos,
            message: "dimensions overflow".into(),
        })?;
    let payload = &bytes[cur.pos..];
    if payload.len() < n * 4 {
        cur.pos = bytes.len();
        return cur.fail(format!("truncated payload: expected {} bytes, found {}", n * 4, payload.len()));
    }
    if payload.len() > n * 4 {
        cur.pos += n * 4;
        return cur.fail("trailing bytes after payload");
    }
    let row = width * channels;
    let mut data = vec![0f32; n];
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, col) = (k / row, k % row);
        data[(height - 1 - file_row) * row + col] = v;
    }
    PfmImage::new(width, height, channels, data)
}

/// Little-endian encoding with scale `-1.0`.
pub fn encode_pfm(img: &PfmImage) -> Vec<u8> {
    let tag = if img.channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    out.reserve(img.data.len() * 4);
    let row = img.width * img.channels;
    for y in (0..img.height).rev() {
        for v in &img.data[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn write_pfm(path: &Path, img: &PfmImage) -> Result<()> {
    fs::write(path, encode_pfm(img)).map_err(|e| Error::io(path, e))
}

/// `foo.pfm` → `foo.mask.pfm`; other names get the suffix appended.
pub fn mask_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.strip_suffix(".pfm").unwrap_or(&name);
    path.with_file_name(format!("{stem}.mask.pfm"))
}

fn write_mask(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    let data = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    write_pfm(&mask_path(path), &PfmImage::new(width, height, 1, data)?)
}

/// Sidecar mask if present; `None` when there is no sidecar file.
fn read_mask(path: &Path, width: usize, height: usize) -> Result<Option<Vec<bool>>> {
    let mp = mask_path(path);
    if !mp.exists() {
        return Ok(None);
    }
    let m = read_pfm(&mp)?;
    if (m.width, m.height, m.channels) != (width, height, 1) {
        return Err(Error::DimensionMismatch {
            expected: (width, height),
            found: (m.width, m.height),
        });
    }
    Ok(Some(m.data.iter().map(|&v| v > 0.5).collect()))
}

pub fn image_to_pfm(img: &Image) -> PfmImage {
    PfmImage {
        width: img.width,
        height: img.height,
        channels: img.channels,
        data: img.pixels.iter().map(|&v| v as f32).collect(),
    }
}

pub fn pfm_to_image(pfm: &PfmImage) -> Result<Image> {
    Image::from_pixels(pfm.width, pfm.height, pfm.channels, pfm.data.iter().map(|&v| v as f64).collect())
}

/// Writes the image and, if any sample is flagged, a per-pixel saturation
/// sidecar.
pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    write_pfm(path, &image_to_pfm(img))?;
    if img.saturation_mask.iter().any(|&s| s) {
        let per_pixel: Vec<bool> = (0..img.pixel_count()).map(|k| img.is_saturated(k)).collect();
        write_mask(path, img.width, img.height, &per_pixel)?;
    }
    Ok(())
}

/// Reads an image; a saturation sidecar, if present, flags every channel of
/// the marked pixels.
pub fn read_image(path: &Path) -> Result<Image> {
    let mut img = pfm_to_image(&read_pfm(path)?)?;
    if let Some(mask) = read_mask(path, img.width, img.height)? {
        for (k, &m) in mask.iter().enumerate() {
            for c in 0..img.channels {
                img.saturation_mask[k * img.channels + c] = m;
            }
        }
    }
    Ok(img)
}

/// Writes the map and its coverage sidecar.
pub fn write_env_map(path: &Path, env: &EnvironmentMap) -> Result<()> {
    write_pfm(path, &image_to_pfm(&env.to_image()))?;
    write_mask(path, env.width(), env.height(), &env.coverage)
}

/// Reads a map; without a sidecar the map is fully covered.
pub fn read_env_map(path: &Path) -> Result<EnvironmentMap> {
    let img = pfm_to_image(&read_pfm(path)?)?;
    if img.channels != 3 {
        return Err(Error::domain("environment maps are 3-channel"));
    }
    let mut env = EnvironmentMap::from_image(&img)?;
    if let Some(mask) = read_mask(path, img.width, img.height)? {
        env.coverage = mask;
    }
    Ok(env)
}

/// Kernel parameters as a 3-channel map `(alpha, ks, region)`; uncovered
/// pixels hold region `-1`.
pub fn write_kernel_params(path: &Path, params: &KernelParamMap) -> Result<()> {
    let size = params.size();
    let mut data = Vec::with_capacity(size.len() * 3);
    for k in 0..size.len() {
        data.push(params.alpha[k] as f32);
        data.push(params.ks[k] as f32);
        data.push(params.region[k].map_or(-1.0, |r| r as f32));
    }
    write_pfm(path, &PfmImage::new(size.width, size.height, 3, data)?)
}

pub fn read_kernel_params(path: &Path) -> Result<KernelParamMap> {
    let pfm = read_pfm(path)?;
    if pfm.channels != 3 {
        return Err(Error::domain("kernel parameter maps are 3-channel"));
    }
    let mut out = KernelParamMap::empty(MapSize::new(pfm.width, pfm.height)?);
    for (k, px) in pfm.data.chunks_exact(3).enumerate() {
        if px[2] >= 0.0 {
            out.alpha[k] = px[0] as f64;
            out.ks[k] = px[1] as f64;
            out.region[k] = Some(px[2] as u16);
        }
    }
    Ok(out)
}

/// Normal map of a probe; pixels outside the silhouette are zero vectors.
pub fn normals_to_pfm(probe: &Probe) -> PfmImage {
    let data = probe
        .normals
        .iter()
        .flat_map(|n| n.map_or([0.0; 3], |d| d.vec().to_array()))
        .map(|v| v as f32)
        .collect();
    PfmImage {
        width: probe.width,
        height: probe.height,
        channels: 3,
        data,
    }
}

/// Builds a normal-map probe. Zero vectors mark pixels outside the
/// silhouette; other vectors are normalized.
pub fn probe_from_normals(pfm: &PfmImage, regions: Option<&PfmImage>, position: Vec3) -> Result<Probe> {
    if pfm.channels != 3 {
        return Err(Error::domain("normal maps are 3-channel"));
    }
    let normals = pfm
        .data
        .chunks_exact(3)
        .map(|p| {
            let v = Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64);
            if v == Vec3::ZERO {
                Ok(None)
            } else {
                Direction::new(v).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let regions = match regions {
        Some(r) => {
            if (r.width, r.height, r.channels) != (pfm.width, pfm.height, 1) {
                return Err(Error::DimensionMismatch {
                    expected: (pfm.width, pfm.height),
                    found: (r.width, r.height),
                });
            }
            let ids = r
                .data
                .iter()
                .map(|&v| {
                    if v >= 0.0 && v <= u16::MAX as f32 && v.fract() == 0.0 {
                        Ok(v as u16)
                    } else {
                        Err(Error::domain(format!("invalid region id {v}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Some(ids)
        }
        None => None,
    };
    Probe::from_normal_map(pfm.width, pfm.height, normals, regions, position)
}
