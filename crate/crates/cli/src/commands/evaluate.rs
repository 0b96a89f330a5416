use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use spmp3d_core::imaging::{
    load_image, mse, psnr, sentinel, snr, DecompositionFile, KqGrid, SnrDb, REPORT_SCHEMA_VERSION,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Reference image.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Approximated image.
    #[arg(long)]
    pub approx: PathBuf,
    /// Peak intensity; defaults to the reference's sample type.
    #[arg(long)]
    pub imax: Option<f64>,
    /// Decomposition file, for SR and the k_q map.
    #[arg(long)]
    pub decomp: Option<PathBuf>,
    /// Where to write the k_q grid as CSV (needs --decomp).
    #[arg(long)]
    pub kq_out: Option<PathBuf>,
    /// Where to write the metrics JSON besides stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub schema_version: u32,
    pub extents: [usize; 3],
    pub imax: f64,
    pub mse: f64,
    #[serde(with = "sentinel")]
    pub psnr: f64,
    pub snr: Option<SnrDb>,
    pub total_points: usize,
    pub total_atoms: Option<usize>,
    pub sr: Option<Ratio>,
    pub kq_grid: Option<GridShape>,
    #[serde(skip)]
    pub grid: Option<KqGrid>,
}

/// Sparsity ratio, `"inf"` for an empty decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ratio(#[serde(with = "sentinel")] pub f64);

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<EvaluateReport> {
    let load = |p: &PathBuf| {
        load_image(p).map_err(|e| CliError::Io(format!("cannot load {}: {e}", p.display())))
    };
    let reference = load(&args.reference)?;
    let approx = load(&args.approx)?;
    let (r, a) = (&reference.image, &approx.image);
    if r.dims() != a.dims() {
        return Err(CliError::usage(format!(
            "images differ in shape: {:?} vs {:?}",
            r.dims(),
            a.dims()
        )));
    }
    let imax = args.imax.unwrap_or_else(|| reference.imax());

    let mut report = EvaluateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        extents: r.dims(),
        imax,
        mse: mse(r, a)?,
        psnr: psnr(r, a, imax)?,
        snr: snr(r, a).ok().map(SnrDb),
        total_points: r.len(),
        total_atoms: None,
        sr: None,
        kq_grid: None,
        grid: None,
    };
    match &args.decomp {
        Some(path) => {
            let file = DecompositionFile::load(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            if file.layout.extents != r.dims() {
                return Err(CliError::usage(format!(
                    "decomposition covers {:?}, images are {:?}",
                    file.layout.extents,
                    r.dims()
                )));
            }
            let k = file.total_atoms();
            let grid = KqGrid::from_decompositions(&file.layout, &file.blocks)?;
            report.total_atoms = Some(k);
            report.sr = Some(Ratio(if k == 0 {
                f64::INFINITY
            } else {
                r.len() as f64 / k as f64
            }));
            report.kq_grid = Some(GridShape {
                rows: grid.rows,
                cols: grid.cols,
            });
            if let Some(out) = &args.kq_out {
                std::fs::write(out, grid.to_csv())?;
            }
            report.grid = Some(grid);
        }
        None if args.kq_out.is_some() => return Err(CliError::usage("--kq-out needs --decomp")),
        None => {}
    }
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}
