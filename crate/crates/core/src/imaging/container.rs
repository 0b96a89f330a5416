//! Decomposition file: everything needed to rebuild an approximated image
//! given the same dictionary.
//!
//! ```text
//! [u8; 8]   magic "SPMP3DDF"
//! u32       format version
//! [u8; 32]  dictionary fingerprint
//! u32 + ..  dictionary label (length-prefixed UTF-8)
//! u32 x 9   source extents, padded extents, block extents
//! u8        domain (0 pd, 1 wd)
//! u8        wavelet levels (0 in pd)
//! u8        engine (0 spmp3d, 1 mp3d, 2 omp2d)
//! u8        source format (0 pgm, 1 ppm, 2 cube)
//! u8        sample type (0 u8, 1 u16, 2 f32)
//! u32       maxval (0 when absent)
//! f64       imax
//! u32       block count
//! blocks    see pursuit::write_block
//! [u8; 32]  SHA-256 of all preceding bytes
//! ```
//!
//! Integers are little-endian.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dictionary::{Domain, SeparableDictionary3};
use crate::error::{Error, Result};
use crate::pursuit::{read_block, write_block, AtomicDecomposition};
use crate::tensor::Image3;
use crate::wavelet::WaveletSpec;

use super::io::{Encoding, ImageFormat, SampleType};
use super::partition::{Layout, PartitionSpec};
use super::pipeline::{reconstruct_image, Engine};

pub const MAGIC: &[u8; 8] = b"SPMP3DDF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionFile {
    pub fingerprint: [u8; 32],
    /// Human-readable dictionary name, for error messages.
    pub dictionary: String,
    pub layout: Layout,
    pub domain: Domain,
    pub wavelet_levels: usize,
    pub engine: Engine,
    pub encoding: Encoding,
    pub imax: f64,
    pub blocks: Vec<AtomicDecomposition<f64>>,
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(format!("decomposition file: {}", msg.into()))
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| fmt_err(format!("{v} does not fit in 32 bits")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn take<const N: usize>(r: &mut Cursor<&[u8]>) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|_| fmt_err("truncated header"))?;
    Ok(b)
}

fn take_u32(r: &mut Cursor<&[u8]>) -> Result<usize> {
    Ok(u32::from_le_bytes(take(r)?) as usize)
}

fn code<T: Copy + PartialEq>(table: &[T], v: T) -> u8 {
    table
        .iter()
        .position(|t| *t == v)
        .expect("value is in its code table") as u8
}

fn decode<T: Copy>(table: &[T], c: u8, what: &str) -> Result<T> {
    table
        .get(c as usize)
        .copied()
        .ok_or_else(|| fmt_err(format!("unknown {what} code {c}")))
}

const DOMAINS: [Domain; 2] = [Domain::Pd, Domain::Wd];
const ENGINES: [Engine; 3] = [Engine::Spmp3d, Engine::Mp3d, Engine::Omp2d];
const FORMATS: [ImageFormat; 3] = [ImageFormat::Pgm, ImageFormat::Ppm, ImageFormat::Cube];
const SAMPLES: [SampleType; 3] = [SampleType::U8, SampleType::U16, SampleType::F32];

impl DecompositionFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.fingerprint);
        put_u32(&mut out, self.dictionary.len())?;
        out.extend_from_slice(self.dictionary.as_bytes());
        let l = &self.layout;
        for v in l.extents.iter().chain(&l.padded).chain(&l.block) {
            put_u32(&mut out, *v)?;
        }
        let levels =
            u8::try_from(self.wavelet_levels).map_err(|_| fmt_err("too many wavelet levels"))?;
        out.extend_from_slice(&[
            code(&DOMAINS, self.domain),
            levels,
            code(&ENGINES, self.engine),
            code(&FORMATS, self.encoding.format),
            code(&SAMPLES, self.encoding.sample),
        ]);
        put_u32(&mut out, self.encoding.maxval.unwrap_or(0) as usize)?;
        out.extend_from_slice(&self.imax.to_le_bytes());
        put_u32(&mut out, self.blocks.len())?;
        for b in &self.blocks {
            write_block(&mut out, b)?;
        }
        let digest: [u8; 32] = Sha256::digest(&out).into();
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 32 {
            return Err(fmt_err("file too short"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 32);
        if &body[..MAGIC.len()] != MAGIC {
            return Err(fmt_err("bad magic"));
        }
        let digest: [u8; 32] = Sha256::digest(body).into();
        if digest[..] != trailer[..] {
            return Err(Error::Checksum(
                "decomposition file is corrupt or was modified".into(),
            ));
        }

        let mut r = Cursor::new(body);
        r.set_position(MAGIC.len() as u64);
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(fmt_err(format!("unsupported version {version}")));
        }
        let fingerprint = take::<32>(&mut r)?;
        let name_len = take_u32(&mut r)?;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)
            .map_err(|_| fmt_err("truncated dictionary label"))?;
        let dictionary =
            String::from_utf8(name).map_err(|_| fmt_err("dictionary label is not UTF-8"))?;

        let mut geom = [0usize; 9];
        for g in &mut geom {
            *g = take_u32(&mut r)?;
        }
        let extents = [geom[0], geom[1], geom[2]];
        let block = [geom[6], geom[7], geom[8]];
        let layout = PartitionSpec::new(block[0], block[1], block[2])
            .map_err(|e| fmt_err(e.to_string()))?
            .layout(extents);
        if layout.padded[..] != geom[3..6] {
            return Err(fmt_err("padded extents disagree with the block grid"));
        }

        let [dom, levels, eng, fmt, sample] = take::<5>(&mut r)?;
        let maxval = take_u32(&mut r)? as u32;
        let imax = f64::from_le_bytes(take(&mut r)?);
        let count = take_u32(&mut r)?;
        let domain = decode(&DOMAINS, dom, "domain")?;
        if (domain == Domain::Wd) != (levels > 0) {
            return Err(fmt_err("wavelet levels do not match the domain"));
        }
        let mut blocks = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            blocks.push(read_block(&mut r)?);
        }
        if r.position() as usize != body.len() {
            return Err(fmt_err("trailing bytes after the last block"));
        }
        Ok(Self {
            fingerprint,
            dictionary,
            layout,
            domain,
            wavelet_levels: levels as usize,
            engine: decode(&ENGINES, eng, "engine")?,
            encoding: Encoding {
                format: decode(&FORMATS, fmt, "format")?,
                sample: decode(&SAMPLES, sample, "sample type")?,
                maxval: (maxval > 0).then_some(maxval),
            },
            imax,
            blocks,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn total_atoms(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn wavelet(&self) -> Option<WaveletSpec> {
        (self.domain == Domain::Wd).then(|| WaveletSpec::new(self.wavelet_levels))
    }

    /// Rebuilds the approximated image, refusing a dictionary other than the
    /// one used at encode time.
    pub fn reconstruct(&self, d: &SeparableDictionary3<f64>) -> Result<Image3<f64>> {
        if d.fingerprint() != self.fingerprint {
            return Err(Error::DictionaryMismatch(format!(
                "file was encoded with dictionary {:?} ({}); the supplied dictionary has fingerprint {}",
                self.dictionary,
                hex(&self.fingerprint),
                hex(&d.fingerprint()),
            )));
        }
        reconstruct_image(&self.layout, &self.blocks, d, self.wavelet().as_ref())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
