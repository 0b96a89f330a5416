use clap::Args;
use serde::Serialize;

use spmp3d_core::pursuit::{memory_footprint, MemoryFootprint, SHARED_MEMORY_BUDGET};

#[derive(Debug, Clone, Args)]
pub struct MemoryArgs {
    /// Block edge `nb` of an `nb^3` block.
    #[arg(long, default_value_t = 8)]
    pub block: usize,
    /// Per-axis dictionary redundancy `r`.
    #[arg(long, default_value_t = 5)]
    pub redundancy: usize,
    /// Number of atoms `k`.
    #[arg(long, default_value_t = 512)]
    pub atoms: usize,
    #[arg(long, default_value_t = 4)]
    pub index_bytes: usize,
    #[arg(long, default_value_t = 8)]
    pub real_bytes: usize,
    #[arg(long, default_value_t = SHARED_MEMORY_BUDGET)]
    pub budget: usize,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryReport {
    #[serde(flatten)]
    pub footprint: MemoryFootprint,
    pub budget: usize,
    pub pass: bool,
}

impl MemoryReport {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn table(&self) -> String {
        let f = &self.footprint;
        let rows = [
            ("block + residual", f.block_arrays),
            ("dictionaries", f.dictionaries),
            ("selection matrix", f.selection_scratch),
            ("coefficients", f.coefficients),
            ("real subtotal", f.real_subtotal),
            ("atom indices", f.indices),
            ("total", f.total),
        ];
        let mut out = String::new();
        for (name, bytes) in rows {
            out.push_str(&format!("{name:<18}{bytes:>10} B\n"));
        }
        out.push_str(&format!("budget {} B: {}\n", self.budget, self.verdict()));
        out
    }
}

pub fn cmd_memory(args: &MemoryArgs) -> MemoryReport {
    let footprint = memory_footprint(
        args.block,
        args.redundancy,
        args.atoms,
        args.index_bytes,
        args.real_bytes,
    );
    MemoryReport {
        footprint,
        budget: args.budget,
        pass: footprint.fits(args.budget),
    }
}
