use serde::Serialize;

/// Fast on-chip shared memory per block on current CUDA devices, in bytes.
pub const SHARED_MEMORY_BUDGET: usize = 48 * 1024;

/// Itemized SPMP3D storage for one `nb^3` block with three `nb x r nb`
/// dictionaries and `k` atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryFootprint {
    /// Block and residual, `2 nb^3` reals.
    pub block_arrays: usize,
    /// Three `nb x r nb` dictionaries.
    pub dictionaries: usize,
    /// The `r^2 nb^2` selection matrix.
    pub selection_scratch: usize,
    /// `k` coefficients.
    pub coefficients: usize,
    /// `3k` atom indices.
    pub indices: usize,
    /// Everything stored as reals.
    pub real_subtotal: usize,
    pub total: usize,
}

impl MemoryFootprint {
    pub fn fits(&self, budget: usize) -> bool {
        self.total <= budget
    }
}

pub fn memory_footprint(
    nb: usize,
    r: usize,
    k: usize,
    index_bytes: usize,
    real_bytes: usize,
) -> MemoryFootprint {
    let block_arrays = 2 * nb.pow(3) * real_bytes;
    let dictionaries = 3 * nb * (r * nb) * real_bytes;
    let selection_scratch = r * r * nb * nb * real_bytes;
    let coefficients = k * real_bytes;
    let indices = 3 * k * index_bytes;
    let real_subtotal = block_arrays + dictionaries + selection_scratch + coefficients;
    MemoryFootprint {
        block_arrays,
        dictionaries,
        selection_scratch,
        coefficients,
        indices,
        real_subtotal,
        total: real_subtotal + indices,
    }
}
