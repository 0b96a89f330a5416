mod approximate;
mod bench;
mod evaluate;
mod memory;
mod reconstruct;

pub use approximate::{
    cmd_approximate, ApproximateArgs, ApproximateOutput, Input, RunConfig, RunReport,
};
pub use bench::{cmd_bench, BenchArgs, BenchOutput, BenchRow, BenchSummary, Suite, CSV_HEADER};
pub use evaluate::{cmd_evaluate, EvaluateArgs, EvaluateReport};
pub use memory::{cmd_memory, MemoryArgs, MemoryReport};
pub use reconstruct::{cmd_reconstruct, ReconstructArgs};

use crate::error::{CliError, CliResult};

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub(crate) fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::usage("threads must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
