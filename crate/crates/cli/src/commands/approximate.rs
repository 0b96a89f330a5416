use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use spmp3d_core::fixtures::{piecewise_smooth, FIXTURE_SEEDS};
use spmp3d_core::imaging::{
    approximate_image, load_image, save_image, ApproximationReport, DecompositionFile, Encoding,
    Engine, ImageFormat, LoadedImage, PartitionSpec, QualityTarget,
};
use spmp3d_core::{Domain, PursuitConfig, Tolerance};

use crate::config::{pick, BlockSize, KeyValues};
use crate::dict::{DictChoice, DictSpec};
use crate::error::{CliError, CliResult};

use super::with_threads;

const KEYS: &[&str] = &[
    "in",
    "out",
    "engine",
    "domain",
    "block",
    "dict",
    "dict-x",
    "dict-y",
    "dict-z",
    "psnr",
    "snr",
    "rho",
    "epsilon",
    "max-j",
    "max-atoms",
    "threads",
    "imax",
    "seed",
    "warn-unreached",
];

#[derive(Debug, Clone, Default, Args)]
pub struct ApproximateArgs {
    /// Input image (.pgm, .ppm or cube), or `synthetic` for a generated fixture.
    #[arg(long = "in")]
    pub input: Option<String>,
    /// Output prefix; defaults to the input path without its extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file with any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub engine: Option<Engine>,
    #[arg(long)]
    pub domain: Option<Domain>,
    /// Block extents, e.g. 8x8x3.
    #[arg(long)]
    pub block: Option<BlockSize>,
    /// Dictionary for all axes: thin3d, mixed-pd, mixed-wd or dirac.
    #[arg(long)]
    pub dict: Option<DictChoice>,
    #[arg(long)]
    pub dict_x: Option<DictChoice>,
    #[arg(long)]
    pub dict_y: Option<DictChoice>,
    #[arg(long)]
    pub dict_z: Option<DictChoice>,
    /// Target PSNR in dB.
    #[arg(long)]
    pub psnr: Option<f64>,
    /// Target SNR in dB.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Per-block residual norm target.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Projection tolerance relative to each block's norm.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_j: Option<usize>,
    #[arg(long)]
    pub max_atoms: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Peak intensity for PSNR; defaults to the sample type's maximum.
    #[arg(long)]
    pub imax: Option<f64>,
    /// Seed of the synthetic input.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only warn when a block misses its target instead of exiting with 3.
    #[arg(long)]
    pub warn_unreached: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    File(PathBuf),
    Synthetic { seed: u64 },
}

impl Input {
    pub fn load(&self) -> CliResult<LoadedImage> {
        match self {
            Input::File(p) => {
                load_image(p).map_err(|e| CliError::Io(format!("cannot load {}: {e}", p.display())))
            }
            Input::Synthetic { seed } => Ok(LoadedImage {
                image: piecewise_smooth(64, 64, 3, *seed),
                encoding: Encoding::netpbm(3, 255)?,
            }),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Input::File(p) => p.display().to_string(),
            Input::Synthetic { seed } => format!("synthetic:{seed}"),
        }
    }
}

/// Fully resolved settings of one `approximate` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Input,
    pub out: PathBuf,
    pub engine: Engine,
    pub domain: Domain,
    /// `None` picks `8 x 8 x min(8, Nz)`, or `bz = 1` for omp2d.
    pub block: Option<[usize; 3]>,
    /// `None` picks thin3d, or the domain's mixed dictionary for omp2d.
    pub dict: Option<DictSpec>,
    pub target: QualityTarget,
    pub epsilon: f64,
    pub max_j: usize,
    pub max_atoms: Option<usize>,
    pub threads: Option<usize>,
    pub imax: Option<f64>,
    pub strict: bool,
}

impl RunConfig {
    pub fn resolve(args: &ApproximateArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => KeyValues::load(p, KEYS)?,
            None => KeyValues::default(),
        };
        let input: String = pick(args.input.clone(), &file, "in")?
            .ok_or_else(|| CliError::usage("no input given; use --in"))?;
        let seed = pick(args.seed, &file, "seed")?.unwrap_or(FIXTURE_SEEDS[0]);
        let input = if input == "synthetic" {
            Input::Synthetic { seed }
        } else {
            Input::File(PathBuf::from(input))
        };
        let out = match pick(args.out.clone(), &file, "out")? {
            Some(o) => o,
            None => match &input {
                Input::File(p) => p.with_extension(""),
                Input::Synthetic { seed } => PathBuf::from(format!("synthetic-{seed}")),
            },
        };
        let engine = pick(args.engine, &file, "engine")?.unwrap_or(Engine::Spmp3d);
        let domain = pick(args.domain, &file, "domain")?.unwrap_or(Domain::Wd);
        let block = pick(args.block, &file, "block")?.map(|b| b.0);

        let all = pick(args.dict, &file, "dict")?;
        let axes = [
            pick(args.dict_x, &file, "dict-x")?,
            pick(args.dict_y, &file, "dict-y")?,
            pick(args.dict_z, &file, "dict-z")?,
        ];
        let dict = if all.is_none() && axes.iter().all(Option::is_none) {
            None
        } else {
            let base = all.unwrap_or(DictChoice::Thin3d);
            Some(DictSpec {
                x: axes[0].unwrap_or(base),
                y: axes[1].unwrap_or(base),
                z: axes[2].unwrap_or(base),
            })
        };

        // flags replace the file's target as a whole
        let from_flags = [
            args.psnr.map(QualityTarget::PsnrDb),
            args.snr.map(QualityTarget::SnrDb),
            args.rho.map(QualityTarget::Rho),
        ];
        let targets: Vec<QualityTarget> = if from_flags.iter().any(Option::is_some) {
            from_flags.into_iter().flatten().collect()
        } else {
            [
                file.get("psnr")?.map(QualityTarget::PsnrDb),
                file.get("snr")?.map(QualityTarget::SnrDb),
                file.get("rho")?.map(QualityTarget::Rho),
            ]
            .into_iter()
            .flatten()
            .collect()
        };
        let target = match targets.as_slice() {
            [t] => *t,
            [] => return Err(CliError::usage("set exactly one of --psnr, --snr or --rho")),
            _ => {
                return Err(CliError::usage(
                    "--psnr, --snr and --rho are mutually exclusive",
                ))
            }
        };
        let value = match target {
            QualityTarget::PsnrDb(v) | QualityTarget::SnrDb(v) | QualityTarget::Rho(v) => v,
        };
        if !value.is_finite() || matches!(target, QualityTarget::Rho(r) if r < 0.0) {
            return Err(CliError::usage(format!("bad quality target {value}")));
        }

        let imax = pick(args.imax, &file, "imax")?;
        if imax.is_some_and(|m| !(m > 0.0 && m.is_finite())) {
            return Err(CliError::usage("imax must be positive"));
        }
        let warn = args.warn_unreached || file.get::<bool>("warn-unreached")?.unwrap_or(false);
        Ok(Self {
            input,
            out,
            engine,
            domain,
            block,
            dict,
            target,
            epsilon: pick(args.epsilon, &file, "epsilon")?.unwrap_or(1e-8),
            max_j: pick(args.max_j, &file, "max-j")?.unwrap_or(1000),
            max_atoms: pick(args.max_atoms, &file, "max-atoms")?,
            threads: pick(args.threads, &file, "threads")?,
            imax,
            strict: !warn,
        })
    }

    pub fn block_for(&self, channels: usize) -> [usize; 3] {
        self.block.unwrap_or(match self.engine {
            Engine::Omp2d => [8, 8, 1],
            _ => [8, 8, channels.min(8)],
        })
    }

    pub fn dict_for(&self, block: [usize; 3]) -> DictSpec {
        let spec = self.dict.unwrap_or(match self.engine {
            Engine::Omp2d => DictSpec::uniform(DictChoice::mixed(self.domain)),
            _ => DictSpec::uniform(DictChoice::Thin3d),
        });
        spec.for_block(block)
    }

    pub fn pursuit(&self, rho: f64) -> PursuitConfig {
        PursuitConfig {
            rho,
            epsilon: Tolerance::Relative(self.epsilon),
            max_atoms: self.max_atoms,
            max_j: self.max_j,
            projection_period: 1,
        }
    }
}

/// JSON written next to the decomposition. Metrics describe the stored
/// (quantized) image, so evaluating the written files reproduces them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub report: ApproximationReport,
    pub input: String,
    pub dictionary: String,
    pub target: QualityTarget,
    pub epsilon: f64,
    pub max_j: usize,
}

#[derive(Debug, Clone)]
pub struct ApproximateOutput {
    pub report: RunReport,
    pub decomposition_path: PathBuf,
    pub image_path: PathBuf,
    pub report_path: PathBuf,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn image_extension(format: ImageFormat) -> &'static str {
    match format {
        ImageFormat::Pgm => "pgm",
        ImageFormat::Ppm => "ppm",
        ImageFormat::Cube => "cube",
    }
}

pub fn cmd_approximate(cfg: &RunConfig) -> CliResult<ApproximateOutput> {
    let loaded = cfg.input.load()?;
    let img = &loaded.image;
    let block = cfg.block_for(img.nz());
    let spec = PartitionSpec::new(block[0], block[1], block[2])?;
    let dict_spec = cfg.dict_for(block);
    let dict = dict_spec.build(block)?;
    let imax = cfg.imax.unwrap_or_else(|| loaded.imax());
    if imax.is_nan() || imax <= 0.0 {
        return Err(CliError::usage(
            "cannot infer imax from an all-zero image; pass --imax",
        ));
    }
    let pursuit = cfg.pursuit(cfg.target.rho(img, &spec, imax));
    let approx = with_threads(cfg.threads, || {
        approximate_image(img, &dict, &spec, &pursuit, cfg.domain, cfg.engine, imax)
    })??;

    let stored = loaded.encoding.quantize(&approx.image);
    let mut report = approx.report;
    report.remeasure(img, &stored)?;

    let file = DecompositionFile {
        fingerprint: dict.fingerprint(),
        dictionary: dict_spec.label(),
        layout: report.layout,
        domain: cfg.domain,
        wavelet_levels: report.wavelet_levels.unwrap_or(0),
        engine: cfg.engine,
        encoding: loaded.encoding,
        imax,
        blocks: approx.decompositions,
    };
    let run = RunReport {
        report,
        input: cfg.input.describe(),
        dictionary: dict_spec.label(),
        target: cfg.target,
        epsilon: cfg.epsilon,
        max_j: cfg.max_j,
    };

    let decomposition_path = with_suffix(&cfg.out, ".spd");
    let image_path = with_suffix(
        &cfg.out,
        &format!(".approx.{}", image_extension(loaded.encoding.format)),
    );
    let report_path = with_suffix(&cfg.out, ".report.json");
    file.save(&decomposition_path)?;
    save_image(&image_path, &approx.image, &loaded.encoding)?;
    std::fs::write(&report_path, serde_json::to_string_pretty(&run)?)?;

    let out = ApproximateOutput {
        report: run,
        decomposition_path,
        image_path,
        report_path,
    };
    let unreached = out.report.report.blocks_unreached;
    if unreached > 0 {
        let msg = format!(
            "{unreached} of {} blocks stopped before reaching rho = {:.6}",
            out.report.report.block_atoms.len(),
            out.report.report.rho
        );
        if cfg.strict {
            return Err(CliError::QualityUnreached(msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(out)
}
