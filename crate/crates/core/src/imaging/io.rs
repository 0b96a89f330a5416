//! Netpbm (binary P5/P6) and raw cube files.
//!
//! Images load as `nx = rows`, `ny = columns`, `nz = channels`. A cube is a
//! little-endian band-sequential payload next to a `<path>.json` sidecar
//! holding `{"nx", "ny", "nz", "dtype"}`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tensor::Image3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm,
    Ppm,
    Cube,
}

impl ImageFormat {
    /// `.pgm` and `.ppm` by extension, anything else is a cube.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("pgm") => ImageFormat::Pgm,
            Some("ppm") => ImageFormat::Ppm,
            _ => ImageFormat::Cube,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleType {
    U8,
    U16,
    F32,
}

impl SampleType {
    fn bytes(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 => 2,
            SampleType::F32 => 4,
        }
    }

    /// Largest representable value for integer types.
    pub fn bound(self) -> Option<u32> {
        match self {
            SampleType::U8 => Some(255),
            SampleType::U16 => Some(65535),
            SampleType::F32 => None,
        }
    }
}

/// How an image is stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub format: ImageFormat,
    pub sample: SampleType,
    /// Netpbm maxval; the type bound for integer cubes.
    pub maxval: Option<u32>,
}

impl Encoding {
    pub fn netpbm(channels: usize, maxval: u32) -> Result<Self> {
        let format = match channels {
            1 => ImageFormat::Pgm,
            3 => ImageFormat::Ppm,
            c => return invalid(format!("netpbm holds 1 or 3 channels, not {c}")),
        };
        if maxval == 0 || maxval > 65535 {
            return invalid(format!("netpbm maxval must be in 1..=65535, got {maxval}"));
        }
        let sample = if maxval < 256 {
            SampleType::U8
        } else {
            SampleType::U16
        };
        Ok(Self {
            format,
            sample,
            maxval: Some(maxval),
        })
    }

    pub fn cube(sample: SampleType) -> Self {
        Self {
            format: ImageFormat::Cube,
            sample,
            maxval: sample.bound(),
        }
    }

    /// The values `img` holds after a save and load with this encoding.
    pub fn quantize(&self, img: &Image3<f64>) -> Image3<f64> {
        let mut out = img.clone();
        for v in out.as_mut_slice() {
            *v = match (self.sample, self.maxval) {
                (SampleType::F32, _) => *v as f32 as f64,
                (_, Some(m)) => quantize(*v, m) as f64,
                (s, None) => quantize(*v, s.bound().unwrap_or(u32::MAX)) as f64,
            };
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub image: Image3<f64>,
    pub encoding: Encoding,
}

impl LoadedImage {
    /// Peak intensity for PSNR: the maxval or type bound, or the largest
    /// sample of a float cube.
    pub fn imax(&self) -> f64 {
        match self.encoding.maxval {
            Some(m) => m as f64,
            None => self.image.as_slice().iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    nx: usize,
    ny: usize,
    nz: usize,
    dtype: SampleType,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<LoadedImage> {
    let path = path.as_ref();
    match ImageFormat::from_path(path) {
        ImageFormat::Pgm | ImageFormat::Ppm => decode_netpbm(&fs::read(path)?),
        ImageFormat::Cube => load_cube(path),
    }
}

/// Writes `img` with the given encoding. Integer samples are rounded and
/// clamped to `0..=maxval`.
pub fn save_image(path: impl AsRef<Path>, img: &Image3<f64>, enc: &Encoding) -> Result<()> {
    let path = path.as_ref();
    match enc.format {
        ImageFormat::Pgm | ImageFormat::Ppm => {
            let bytes = encode_netpbm(img, enc)?;
            fs::write(path, bytes)?;
        }
        ImageFormat::Cube => save_cube(path, img, enc.sample)?,
    }
    Ok(())
}

fn quantize(v: f64, maxval: u32) -> u32 {
    v.round().clamp(0.0, maxval as f64) as u32
}

pub fn encode_netpbm(img: &Image3<f64>, enc: &Encoding) -> Result<Vec<u8>> {
    let [nx, ny, nz] = img.dims();
    let checked = Encoding::netpbm(nz, enc.maxval.unwrap_or(255))?;
    if checked.format != enc.format {
        return invalid(format!(
            "{nz}-channel image cannot be written as {:?}",
            enc.format
        ));
    }
    let maxval = checked.maxval.unwrap_or(255);
    let magic = if nz == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{ny} {nx}\n{maxval}\n").into_bytes();
    let wide = maxval > 255;
    out.reserve(img.len() * if wide { 2 } else { 1 });
    for i in 0..nx {
        for j in 0..ny {
            for s in 0..nz {
                let q = quantize(img.get(i, j, s), maxval);
                if wide {
                    out.extend_from_slice(&(q as u16).to_be_bytes());
                } else {
                    out.push(q as u8);
                }
            }
        }
    }
    Ok(out)
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Format(format!("malformed netpbm: {}", msg.into()))
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(malformed("header ends early"));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
}

pub fn decode_netpbm(bytes: &[u8]) -> Result<LoadedImage> {
    let mut pos = 0;
    let nz = match header_token(bytes, &mut pos)? {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(malformed(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed("zero extent"));
    }
    let maxval = u32::try_from(maxval).map_err(|_| malformed("maxval too large"))?;
    let encoding = Encoding::netpbm(nz, maxval).map_err(|e| malformed(e.to_string()))?;
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed("missing raster"));
    }
    pos += 1;

    let wide = maxval > 255;
    let width_bytes = if wide { 2 } else { 1 };
    let need = width * height * nz * width_bytes;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "truncated netpbm raster: {} of {need} bytes",
            raster.len()
        )));
    }
    let (nx, ny) = (height, width);
    let mut img = Image3::zeros(nx, ny, nz);
    let mut at = 0;
    for i in 0..nx {
        for j in 0..ny {
            for s in 0..nz {
                let v = if wide {
                    u16::from_be_bytes([raster[at], raster[at + 1]]) as u32
                } else {
                    raster[at] as u32
                };
                at += width_bytes;
                if v > maxval {
                    return Err(malformed(format!("sample {v} exceeds maxval {maxval}")));
                }
                img.set(i, j, s, v as f64);
            }
        }
    }
    Ok(LoadedImage {
        image: img,
        encoding,
    })
}

fn load_cube(path: &Path) -> Result<LoadedImage> {
    let side_path = sidecar_path(path);
    let side: Sidecar = serde_json::from_slice(&fs::read(&side_path)?)
        .map_err(|e| Error::Format(format!("bad cube sidecar {}: {e}", side_path.display())))?;
    let payload = fs::read(path)?;
    let count = side.nx * side.ny * side.nz;
    if count == 0 {
        return Err(Error::Format("cube sidecar declares a zero extent".into()));
    }
    let need = count * side.dtype.bytes();
    if payload.len() != need {
        return Err(Error::Format(format!(
            "cube payload has {} bytes, sidecar declares {need} ({count} x {:?})",
            payload.len(),
            side.dtype
        )));
    }
    let data: Vec<f64> = match side.dtype {
        SampleType::U8 => payload.iter().map(|&b| b as f64).collect(),
        SampleType::U16 => payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        SampleType::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
    };
    Ok(LoadedImage {
        image: Image3::new(side.nx, side.ny, side.nz, data)?,
        encoding: Encoding::cube(side.dtype),
    })
}

fn save_cube(path: &Path, img: &Image3<f64>, sample: SampleType) -> Result<()> {
    let [nx, ny, nz] = img.dims();
    let mut payload = Vec::with_capacity(img.len() * sample.bytes());
    for &v in img.as_slice() {
        match sample {
            SampleType::U8 => payload.push(quantize(v, 255) as u8),
            SampleType::U16 => {
                payload.extend_from_slice(&(quantize(v, 65535) as u16).to_le_bytes())
            }
            SampleType::F32 => payload.extend_from_slice(&(v as f32).to_le_bytes()),
        }
    }
    let side = Sidecar {
        nx,
        ny,
        nz,
        dtype: sample,
    };
    fs::File::create(path)?.write_all(&payload)?;
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&side)?)?;
    Ok(())
}
