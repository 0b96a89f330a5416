use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Domain, SeparableDictionary3};
use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::pursuit::{
    mp3d, rho_for_psnr, rho_for_snr, spmp3d, AtomicDecomposition, PursuitConfig, StopReason,
};
use crate::tensor::{Block3, Image3};
use crate::wavelet::{forward_channels, inverse_channels, WaveletSpec, DEFAULT_LEVELS};

use super::metrics::{mse, psnr, snr, sparsity_ratio};
use super::partition::{assemble_padded, crop, pad_edge, partition, Layout, PartitionSpec};

/// Version of the [`ApproximationReport`] JSON layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Spmp3d,
    Mp3d,
    /// Channel-by-channel 2D baseline: every channel is partitioned on its
    /// own into `bx x by x 1` blocks and approximated with SPMP3D, which is
    /// OMP-equivalent.
    Omp2d,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spmp3d" => Ok(Engine::Spmp3d),
            "mp3d" => Ok(Engine::Mp3d),
            "omp2d" => Ok(Engine::Omp2d),
            other => invalid(format!(
                "unknown engine {other:?}, expected spmp3d, mp3d or omp2d"
            )),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Spmp3d => "spmp3d",
            Engine::Mp3d => "mp3d",
            Engine::Omp2d => "omp2d",
        })
    }
}

/// Global quality goal, turned into one per-block `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityTarget {
    PsnrDb(f64),
    SnrDb(f64),
    Rho(f64),
}

impl QualityTarget {
    pub fn rho<T: Real>(&self, img: &Image3<T>, spec: &PartitionSpec, imax: f64) -> f64 {
        let points = spec.block_points();
        match *self {
            QualityTarget::PsnrDb(db) => rho_for_psnr(points, imax, db),
            QualityTarget::SnrDb(db) => rho_for_snr(points, img.len(), img.norm_sqr().as_f64(), db),
            QualityTarget::Rho(r) => r,
        }
    }
}

/// Serializes non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod sentinel {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!(
                    "unexpected metric {other:?}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub schema_version: u32,
    pub engine: Engine,
    pub domain: Domain,
    pub partition: PartitionSpec,
    pub layout: Layout,
    /// Present in the wavelet domain.
    pub wavelet_levels: Option<usize>,
    pub rho: f64,
    pub imax: f64,
    /// `k_q` per block, in partition order.
    pub block_atoms: Vec<usize>,
    /// `K`.
    pub total_atoms: usize,
    /// `N`, counted on the unpadded image.
    pub total_points: usize,
    #[serde(with = "sentinel")]
    pub sr: f64,
    pub mse: f64,
    #[serde(with = "sentinel")]
    pub psnr: f64,
    /// Absent for an all-zero image.
    pub snr: Option<SnrDb>,
    /// Blocks that stopped before reaching `rho`.
    pub blocks_unreached: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnrDb(#[serde(with = "sentinel")] pub f64);

impl ApproximationReport {
    pub fn kq_grid(&self) -> KqGrid {
        KqGrid::from_counts(&self.layout, &self.block_atoms)
    }

    pub fn snr_db(&self) -> Option<f64> {
        self.snr.map(|s| s.0)
    }

    /// Recomputes MSE, PSNR and SNR of `approx` against `reference`, e.g.
    /// after quantizing the approximation for storage.
    pub fn remeasure<T: Real>(&mut self, reference: &Image3<T>, approx: &Image3<T>) -> Result<()> {
        self.mse = mse(reference, approx)?;
        self.psnr = psnr(reference, approx, self.imax)?;
        self.snr = snr(reference, approx).ok().map(SnrDb);
        Ok(())
    }
}

/// Atom counts on the `Qx x Qy` block grid, summed over the z-blocks (or
/// over channels in 2D mode).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KqGrid {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub values: Vec<usize>,
}

impl KqGrid {
    pub fn from_counts(layout: &Layout, counts: &[usize]) -> Self {
        let [gx, gy, _] = layout.grid;
        let mut values = vec![0; gx * gy];
        for (q, &k) in counts.iter().enumerate() {
            values[q % (gx * gy)] += k;
        }
        Self {
            rows: gx,
            cols: gy,
            values,
        }
    }

    pub fn from_decompositions<T: Real>(
        layout: &Layout,
        decomps: &[AtomicDecomposition<T>],
    ) -> Result<Self> {
        let mut counts = vec![0; layout.block_count()];
        for d in decomps {
            let q = layout.block_index(d.origin).ok_or_else(|| {
                Error::InvalidArgument(format!("block origin {:?} is off the grid", d.origin))
            })?;
            counts[q] += d.len();
        }
        Ok(Self::from_counts(layout, &counts))
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.values[row * self.cols + col]
    }

    /// One CSV line per grid row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Approximation<T> {
    pub image: Image3<T>,
    pub report: ApproximationReport,
    /// One entry per block, in partition order.
    pub decompositions: Vec<AtomicDecomposition<T>>,
}

/// Inverse of the approximation pipeline: assemble the blocks, undo the
/// wavelet transform if any and crop the padding.
pub fn reconstruct_image<T: Real>(
    layout: &Layout,
    decomps: &[AtomicDecomposition<T>],
    d: &SeparableDictionary3<T>,
    wavelet: Option<&WaveletSpec>,
) -> Result<Image3<T>> {
    let mut full = assemble_padded(layout, decomps, d)?;
    if let Some(w) = wavelet {
        full = inverse_channels(&full, w)?;
    }
    crop(&full, layout.extents)
}

/// Wavelet depth used for an image padded to `layout.padded`.
pub fn wavelet_for(layout: &Layout) -> WaveletSpec {
    WaveletSpec::fitting(layout.padded[0], layout.padded[1], DEFAULT_LEVELS)
}

struct Pursued<T> {
    decomps: Vec<AtomicDecomposition<T>>,
    unreached: usize,
}

fn pursue_stack<T: Real>(
    img: &Image3<T>,
    d: &SeparableDictionary3<T>,
    spec: &PartitionSpec,
    cfg: &PursuitConfig,
    wavelet: Option<&WaveletSpec>,
    engine: Engine,
) -> Result<Pursued<T>> {
    let layout = spec.layout(img.dims());
    let mut work = pad_edge(img, layout.padded)?;
    if let Some(w) = wavelet {
        work = forward_channels(&work, w)?;
    }
    let (_, blocks) = partition(&work, spec)?;
    let run = |b: &Block3<T>| match engine {
        Engine::Mp3d => mp3d(b, d, cfg),
        Engine::Spmp3d | Engine::Omp2d => spmp3d(b, d, cfg),
    };
    let outcomes = blocks.par_iter().map(run).collect::<Result<Vec<_>>>()?;
    let unreached = outcomes
        .iter()
        .filter(|o| o.stop != StopReason::Tolerance)
        .count();
    Ok(Pursued {
        decomps: outcomes.into_iter().map(|o| o.decomposition).collect(),
        unreached,
    })
}

/// Approximates `img` block by block.
///
/// In the wavelet domain every channel is padded, transformed, approximated
/// and transformed back; metrics always compare pixels on the unpadded
/// region. `cfg.rho` applies to every block.
pub fn approximate_image<T: Real>(
    img: &Image3<T>,
    d: &SeparableDictionary3<T>,
    spec: &PartitionSpec,
    cfg: &PursuitConfig,
    domain: Domain,
    engine: Engine,
    imax: f64,
) -> Result<Approximation<T>> {
    let start = Instant::now();
    cfg.validate()?;
    if d.extents() != spec.block() {
        return Err(Error::ShapeMismatch {
            left: d.extents().to_vec(),
            right: spec.block().to_vec(),
        });
    }
    let layout = spec.layout(img.dims());
    let wavelet = (domain == Domain::Wd).then(|| wavelet_for(&layout));

    let pursued = if engine == Engine::Omp2d {
        if spec.bz != 1 {
            return invalid(format!("omp2d works on 2D blocks; got bz = {}", spec.bz));
        }
        let [nx, ny, nz] = img.dims();
        let mut all = Pursued {
            decomps: Vec::with_capacity(layout.block_count()),
            unreached: 0,
        };
        for l in 0..nz {
            let channel = Image3::new(nx, ny, 1, img.plane(l).to_vec())?;
            let p = pursue_stack(&channel, d, spec, cfg, wavelet.as_ref(), engine)?;
            all.unreached += p.unreached;
            all.decomps.extend(p.decomps.into_iter().map(|mut dec| {
                dec.origin[2] = l;
                dec
            }));
        }
        all
    } else {
        pursue_stack(img, d, spec, cfg, wavelet.as_ref(), engine)?
    };

    let image = reconstruct_image(&layout, &pursued.decomps, d, wavelet.as_ref())?;
    let block_atoms: Vec<usize> = pursued.decomps.iter().map(|d| d.len()).collect();
    let total_atoms = block_atoms.iter().sum();
    let total_points = img.len();
    let report = ApproximationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        engine,
        domain,
        partition: *spec,
        layout,
        wavelet_levels: wavelet.map(|w| w.levels),
        rho: cfg.rho,
        imax,
        block_atoms,
        total_atoms,
        total_points,
        sr: sparsity_ratio(total_points, total_atoms).unwrap_or(f64::INFINITY),
        mse: mse(img, &image)?,
        psnr: psnr(img, &image, imax)?,
        snr: snr(img, &image).ok().map(SnrDb),
        blocks_unreached: pursued.unreached,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(Approximation {
        image,
        report,
        decompositions: pursued.decomps,
    })
}

/// Searches the nominal PSNR target whose achieved PSNR lands within
/// `tolerance_db` of `target_db`. Per-block stopping overshoots the nominal
/// figure, so matching two engines at equal quality needs this.
///
/// Returns the run closest to the target and the nominal value used.
#[allow(clippy::too_many_arguments)]
pub fn approximate_at_psnr<T: Real>(
    img: &Image3<T>,
    d: &SeparableDictionary3<T>,
    spec: &PartitionSpec,
    cfg: &PursuitConfig,
    domain: Domain,
    engine: Engine,
    imax: f64,
    target_db: f64,
    tolerance_db: f64,
) -> Result<(Approximation<T>, f64)> {
    let run = |nominal: f64| {
        let c = PursuitConfig {
            rho: rho_for_psnr(spec.block_points(), imax, nominal),
            ..*cfg
        };
        approximate_image(img, d, spec, &c, domain, engine, imax)
    };
    let mut best: Option<(Approximation<T>, f64)> = None;
    let mut consider = |a: Approximation<T>, nominal: f64| -> f64 {
        let achieved = a.report.psnr;
        if best
            .as_ref()
            .is_none_or(|(b, _)| (achieved - target_db).abs() < (b.report.psnr - target_db).abs())
        {
            best = Some((a, nominal));
        }
        achieved
    };
    let hit = |achieved: f64| (achieved - target_db).abs() <= tolerance_db;

    let achieved = consider(run(target_db)?, target_db);
    if !hit(achieved) {
        // bracket the target, then bisect on the nominal value
        let step = if achieved > target_db { -3.0 } else { 3.0 };
        let (mut lo, mut hi) = (target_db, target_db);
        let mut edge = target_db;
        let mut found = false;
        for _ in 0..8 {
            edge += step;
            let a = consider(run(edge)?, edge);
            if hit(a) {
                found = true;
                break;
            }
            if (a > target_db) != (achieved > target_db) {
                if step < 0.0 {
                    lo = edge;
                } else {
                    hi = edge;
                }
                break;
            }
            if step < 0.0 {
                hi = edge;
            } else {
                lo = edge;
            }
        }
        if !found && lo < hi {
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                let a = consider(run(mid)?, mid);
                if hit(a) {
                    break;
                }
                if a > target_db {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
    }
    Ok(best.expect("at least one run"))
}
