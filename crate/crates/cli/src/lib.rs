//! Command-line front end. Each subcommand is a plain function returning a
//! typed result so it can be driven from tests; [`run`] adds the printing.

pub mod commands;
pub mod config;
pub mod dict;
pub mod error;

use std::io::Write;

use clap::{Parser, Subcommand};

// stdout may be a closed pipe (`| head`); output is best effort
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! out_raw {
    ($($t:tt)*) => {{
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

pub use commands::*;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "spmp3d",
    version,
    about = "Sparse block-wise approximation of 3D images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate an image; writes a decomposition, the approximated image and a JSON report.
    Approximate(ApproximateArgs),
    /// Rebuild an image from a decomposition file.
    Reconstruct(ReconstructArgs),
    /// Compare two images; with a decomposition also report SR and the k_q map.
    Evaluate(EvaluateArgs),
    /// Sweep engines, domains, block sizes and targets over a set of images.
    Bench(BenchArgs),
    /// Itemized per-block memory of SPMP3D against a shared-memory budget.
    Memory(MemoryArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Approximate(args) => {
            let out = cmd_approximate(&RunConfig::resolve(args)?)?;
            let r = &out.report.report;
            out!(
                "K = {}  N = {}  SR = {:.4}  PSNR = {}  blocks = {}  time = {:.3} s",
                r.total_atoms,
                r.total_points,
                r.sr,
                db(r.psnr),
                r.block_atoms.len(),
                r.wall_time_s
            );
            for p in [&out.decomposition_path, &out.image_path, &out.report_path] {
                out!("wrote {}", p.display());
            }
        }
        Command::Reconstruct(args) => {
            let p = cmd_reconstruct(args)?;
            out!("wrote {}", p.display());
        }
        Command::Evaluate(args) => {
            let r = cmd_evaluate(args)?;
            out!("{}", serde_json::to_string_pretty(&r)?);
        }
        Command::Bench(args) => {
            let out = cmd_bench(args)?;
            for s in &out.summary {
                out!(
                    "{:<7} {} {:<8} {:<9} n={:<3} SR {:>8.3} +- {:<7.3} PSNR {:.2}",
                    s.engine,
                    s.domain,
                    s.block,
                    s.target,
                    s.images,
                    s.mean_sr,
                    s.std_sr,
                    s.mean_psnr
                );
            }
            for c in out.comparisons.iter().filter(|c| !c.sr_3d_greater) {
                out!(
                    "note: {} {} {}: SR 3D {:.3} <= 2D {:.3}",
                    c.image,
                    c.domain,
                    c.target,
                    c.sr_3d,
                    c.sr_2d
                );
            }
            if !out.missing.is_empty() {
                out!("missing: {}", out.missing.join(", "));
            }
        }
        Command::Memory(args) => {
            let r = cmd_memory(args);
            if args.json {
                out!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                out_raw!("{}", r.table());
            }
        }
    }
    Ok(())
}

fn db(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4} dB")
    } else {
        "inf".into()
    }
}
