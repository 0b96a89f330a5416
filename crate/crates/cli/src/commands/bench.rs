//! Parameter sweeps over a set of images.
//!
//! Suite file keys (all lists are comma-separated):
//!
//! ```text
//! images     = kodim01.ppm, kodim02.ppm   paths relative to the suite file
//! synthetic  = 11, 23, 37                 generated 64x64x3 fixtures
//! engines    = spmp3d, omp2d
//! domains    = pd, wd
//! blocks     = 8x8x3, 16x16x3             omp2d uses the same bx x by with bz = 1
//! psnr       = 45, 41
//! snr        = 30
//! dict       = auto                       or thin3d, mixed-pd, mixed-wd, dirac
//! match-psnr = true                       calibrate to the achieved PSNR
//! tolerance  = 0.5                        dB window for match-psnr
//! epsilon, max-j, threads, imax
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use spmp3d_core::fixtures::piecewise_smooth;
use spmp3d_core::imaging::{
    approximate_at_psnr, approximate_image, sentinel, Encoding, Engine, LoadedImage, PartitionSpec,
    QualityTarget,
};
use spmp3d_core::{Domain, PursuitConfig, Tolerance};

use crate::config::{BlockSize, KeyValues};
use crate::dict::{DictChoice, DictSpec};
use crate::error::{CliError, CliResult};

use super::with_threads;

const KEYS: &[&str] = &[
    "images",
    "synthetic",
    "engines",
    "domains",
    "blocks",
    "psnr",
    "snr",
    "dict",
    "match-psnr",
    "tolerance",
    "epsilon",
    "max-j",
    "threads",
    "imax",
];

/// Column order of the per-run CSV.
pub const CSV_HEADER: [&str; 13] = [
    "image",
    "engine",
    "domain",
    "block",
    "target",
    "nominal",
    "sr",
    "psnr",
    "snr",
    "mse",
    "total_atoms",
    "total_points",
    "time_s",
];

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Suite description (`key = value`).
    #[arg(long)]
    pub suite: PathBuf,
    /// Per-run CSV output.
    #[arg(long)]
    pub csv: PathBuf,
    /// Aggregate JSON output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub images: Vec<PathBuf>,
    pub synthetic: Vec<u64>,
    pub engines: Vec<Engine>,
    pub domains: Vec<Domain>,
    pub blocks: Vec<[usize; 3]>,
    pub targets: Vec<QualityTarget>,
    pub dict: Option<DictChoice>,
    pub match_psnr: bool,
    pub tolerance: f64,
    pub epsilon: f64,
    pub max_j: usize,
    pub threads: Option<usize>,
    pub imax: Option<f64>,
}

impl Suite {
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let kv = KeyValues::parse(text, KEYS)?;
        let dict = match kv.raw("dict") {
            None | Some("auto") => None,
            Some(c) => Some(c.parse::<DictChoice>().map_err(CliError::Usage)?),
        };
        let mut targets: Vec<QualityTarget> = kv
            .list("psnr")?
            .into_iter()
            .map(QualityTarget::PsnrDb)
            .collect();
        targets.extend(kv.list("snr")?.into_iter().map(QualityTarget::SnrDb));
        if targets.is_empty() {
            targets.push(QualityTarget::PsnrDb(45.0));
        }
        Ok(Self {
            images: kv
                .list::<PathBuf>("images")?
                .into_iter()
                .map(|p| base.join(p))
                .collect(),
            synthetic: kv.list("synthetic")?,
            engines: or(kv.list("engines")?, vec![Engine::Spmp3d, Engine::Omp2d]),
            domains: or(kv.list("domains")?, vec![Domain::Pd, Domain::Wd]),
            blocks: or(
                kv.list::<BlockSize>("blocks")?
                    .into_iter()
                    .map(|b| b.0)
                    .collect(),
                vec![[8, 8, 3]],
            ),
            targets,
            dict,
            match_psnr: kv.get("match-psnr")?.unwrap_or(true),
            tolerance: kv.get("tolerance")?.unwrap_or(0.5),
            epsilon: kv.get("epsilon")?.unwrap_or(1e-8),
            max_j: kv.get("max-j")?.unwrap_or(1000),
            threads: kv.get("threads")?,
            imax: kv.get("imax")?,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read suite {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub image: String,
    pub engine: Engine,
    pub domain: Domain,
    pub block: String,
    pub target: String,
    /// Nominal target handed to the pursuit (after calibration).
    pub nominal: f64,
    #[serde(with = "sentinel")]
    pub sr: f64,
    #[serde(with = "sentinel")]
    pub psnr: f64,
    pub snr: Option<f64>,
    pub mse: f64,
    pub total_atoms: usize,
    pub total_points: usize,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub engine: Engine,
    pub domain: Domain,
    pub block: String,
    pub target: String,
    pub images: usize,
    pub mean_sr: f64,
    /// Sample standard deviation; 0 for a single image.
    pub std_sr: f64,
    pub mean_psnr: f64,
    pub mean_time_s: f64,
}

/// 3D SPMP3D against the 2D baseline on the same image and settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub image: String,
    pub domain: Domain,
    pub target: String,
    pub block_3d: String,
    pub block_2d: String,
    pub sr_3d: f64,
    pub sr_2d: f64,
    pub sr_3d_greater: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub schema_version: u32,
    pub rows: Vec<BenchRow>,
    pub summary: Vec<BenchSummary>,
    pub comparisons: Vec<Comparison>,
    pub missing: Vec<String>,
}

fn or<T>(v: Vec<T>, default: Vec<T>) -> Vec<T> {
    if v.is_empty() {
        default
    } else {
        v
    }
}

fn block_name(b: [usize; 3]) -> String {
    BlockSize(b).to_string()
}

fn target_name(t: &QualityTarget) -> String {
    match t {
        QualityTarget::PsnrDb(v) => format!("psnr:{v}"),
        QualityTarget::SnrDb(v) => format!("snr:{v}"),
        QualityTarget::Rho(v) => format!("rho:{v}"),
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn run_one(
    name: &str,
    loaded: &LoadedImage,
    suite: &Suite,
    engine: Engine,
    domain: Domain,
    block: [usize; 3],
    target: &QualityTarget,
) -> CliResult<BenchRow> {
    let img = &loaded.image;
    let spec = PartitionSpec::new(block[0], block[1], block[2])?;
    let choice = suite.dict.unwrap_or(match engine {
        Engine::Omp2d => DictChoice::mixed(domain),
        _ => DictChoice::Thin3d,
    });
    let dict = DictSpec::uniform(choice).for_block(block).build(block)?;
    let imax = suite.imax.unwrap_or_else(|| loaded.imax());
    let base = PursuitConfig {
        rho: 0.0,
        epsilon: Tolerance::Relative(suite.epsilon),
        max_atoms: None,
        max_j: suite.max_j,
        projection_period: 1,
    };
    let start = Instant::now();
    let (approx, nominal) = match *target {
        QualityTarget::PsnrDb(db) if suite.match_psnr => approximate_at_psnr(
            img,
            &dict,
            &spec,
            &base,
            domain,
            engine,
            imax,
            db,
            suite.tolerance,
        )?,
        t => {
            let cfg = PursuitConfig {
                rho: t.rho(img, &spec, imax),
                ..base
            };
            let nominal = match t {
                QualityTarget::PsnrDb(v) | QualityTarget::SnrDb(v) | QualityTarget::Rho(v) => v,
            };
            (
                approximate_image(img, &dict, &spec, &cfg, domain, engine, imax)?,
                nominal,
            )
        }
    };
    let r = &approx.report;
    Ok(BenchRow {
        image: name.to_string(),
        engine,
        domain,
        block: block_name(block),
        target: target_name(target),
        nominal,
        sr: r.sr,
        psnr: r.psnr,
        snr: r.snr_db(),
        mse: r.mse,
        total_atoms: r.total_atoms,
        total_points: r.total_points,
        time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs the sweep and writes the CSV (and JSON). Missing images are listed
/// and skipped.
pub fn cmd_bench(args: &BenchArgs) -> CliResult<BenchOutput> {
    let suite = Suite::load(&args.suite)?;
    let mut inputs: Vec<(String, LoadedImage)> = Vec::new();
    let mut missing = Vec::new();
    for p in &suite.images {
        match spmp3d_core::imaging::load_image(p) {
            Ok(img) => inputs.push((p.display().to_string(), img)),
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", p.display());
                missing.push(p.display().to_string());
            }
        }
    }
    for &seed in &suite.synthetic {
        inputs.push((
            format!("synthetic:{seed}"),
            LoadedImage {
                image: piecewise_smooth(64, 64, 3, seed),
                encoding: Encoding::netpbm(3, 255)?,
            },
        ));
    }

    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (name, loaded) in &inputs {
        for &b in &suite.blocks {
            for &engine in &suite.engines {
                let block = if engine == Engine::Omp2d {
                    [b[0], b[1], 1]
                } else {
                    b
                };
                for &domain in &suite.domains {
                    for target in &suite.targets {
                        let key = (
                            name.clone(),
                            engine.to_string(),
                            domain.to_string(),
                            block,
                            target_name(target),
                        );
                        if !seen.insert(key) {
                            continue;
                        }
                        let row = with_threads(suite.threads, || {
                            run_one(name, loaded, &suite, engine, domain, block, target)
                        })??;
                        rows.push(row);
                    }
                }
            }
        }
    }

    let mut groups: BTreeMap<(String, String, String, String), Vec<&BenchRow>> = BTreeMap::new();
    for r in &rows {
        groups
            .entry((
                r.engine.to_string(),
                r.domain.to_string(),
                r.block.clone(),
                r.target.clone(),
            ))
            .or_default()
            .push(r);
    }
    let summary = groups
        .values()
        .map(|g| {
            let (mean_sr, std_sr) = mean_std(&g.iter().map(|r| r.sr).collect::<Vec<_>>());
            BenchSummary {
                engine: g[0].engine,
                domain: g[0].domain,
                block: g[0].block.clone(),
                target: g[0].target.clone(),
                images: g.len(),
                mean_sr,
                std_sr,
                mean_psnr: mean_std(&g.iter().map(|r| r.psnr).collect::<Vec<_>>()).0,
                mean_time_s: mean_std(&g.iter().map(|r| r.time_s).collect::<Vec<_>>()).0,
            }
        })
        .collect();

    let mut comparisons = Vec::new();
    for r3 in rows.iter().filter(|r| r.engine == Engine::Spmp3d) {
        let xy = r3
            .block
            .rsplit_once('x')
            .map(|(xy, _)| xy)
            .unwrap_or(&r3.block);
        let b2 = format!("{xy}x1");
        if let Some(r2) = rows.iter().find(|r| {
            r.engine == Engine::Omp2d
                && r.image == r3.image
                && r.domain == r3.domain
                && r.target == r3.target
                && r.block == b2
        }) {
            comparisons.push(Comparison {
                image: r3.image.clone(),
                domain: r3.domain,
                target: r3.target.clone(),
                block_3d: r3.block.clone(),
                block_2d: r2.block.clone(),
                sr_3d: r3.sr,
                sr_2d: r2.sr,
                sr_3d_greater: r3.sr > r2.sr,
            });
        }
    }

    let mut w = csv::Writer::from_path(&args.csv)?;
    w.write_record(CSV_HEADER)?;
    for r in &rows {
        let fmt = |v: f64| {
            if v.is_finite() {
                v.to_string()
            } else {
                "inf".to_string()
            }
        };
        w.write_record([
            r.image.clone(),
            r.engine.to_string(),
            r.domain.to_string(),
            r.block.clone(),
            r.target.clone(),
            r.nominal.to_string(),
            fmt(r.sr),
            fmt(r.psnr),
            r.snr.map(fmt).unwrap_or_default(),
            r.mse.to_string(),
            r.total_atoms.to_string(),
            r.total_points.to_string(),
            format!("{:.6}", r.time_s),
        ])?;
    }
    w.flush()?;

    let out = BenchOutput {
        schema_version: spmp3d_core::imaging::REPORT_SCHEMA_VERSION,
        rows,
        summary,
        comparisons,
        missing,
    };
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&out)?)?;
    }
    Ok(out)
}
