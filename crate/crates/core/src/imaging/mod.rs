//! Image files, block partitioning, the pixel/wavelet-domain pipeline and
//! quality metrics.

mod container;
mod io;
mod metrics;
mod partition;
mod pipeline;

pub use container::{hex, DecompositionFile, FORMAT_VERSION, MAGIC};
pub use io::{
    decode_netpbm, encode_netpbm, load_image, save_image, sidecar_path, Encoding, ImageFormat,
    LoadedImage, SampleType,
};
pub use metrics::{mse, psnr, snr, sparsity_ratio};
pub use partition::{
    assemble, assemble_padded, crop, pad_edge, partition, Layout, Padding, PartitionSpec,
};
pub use pipeline::{
    approximate_at_psnr, approximate_image, reconstruct_image, sentinel, wavelet_for,
    Approximation, ApproximationReport, Engine, KqGrid, QualityTarget, SnrDb,
    REPORT_SCHEMA_VERSION,
};
