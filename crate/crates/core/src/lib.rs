//! Sparse approximation of 3D images (multi-channel and hyper-spectral) with
//! greedy pursuit over separable tensor-product dictionaries.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the file formats and the CLI use.
//!
//! ```
//! use spmp3d_core::{build_thin_3d, spmp3d, Block, Image, PursuitConfig, Separable};
//!
//! let t = build_thin_3d::<f64>(4).unwrap();
//! let dict = Separable::assemble(t.clone(), t.clone(), t);
//! let img = Image::from_fn(4, 4, 4, |i, j, s| (i + j + s) as f64);
//! let out = spmp3d(&Block::standalone(img), &dict, &PursuitConfig::with_rho(0.5)).unwrap();
//! assert!(out.residual_norm() < 0.5);
//! ```

pub mod dictionary;
pub mod error;
pub mod fixtures;
pub mod imaging;
pub mod num;
pub mod pursuit;
pub mod tensor;
pub mod wavelet;

pub use dictionary::{
    build_cosine, build_dirac, build_mixed_1d, build_sine, build_spline_prototypes, build_thin_3d,
    build_wavelet_prototypes, translate_prototype, Dictionary1D, Domain, SeparableDictionary3,
};
pub use error::{Error, Result};
pub use num::Real;
pub use pursuit::{
    mp3d, omp3d, rho_for_psnr, rho_for_snr, sel_trip, select_atom, self_project, spmp3d, AtomIndex,
    AtomicDecomposition, PursuitConfig, PursuitOutcome, StopReason, Tolerance,
};
pub use tensor::{inner_product_3d, rank1_update, separable_inner_product, Block3, Image3};

pub type Image = Image3<f64>;
pub type Block = Block3<f64>;
pub type Dictionary = Dictionary1D<f64>;
pub type Separable = SeparableDictionary3<f64>;
pub type Decomposition = AtomicDecomposition<f64>;
pub type Outcome = PursuitOutcome<f64>;

pub type ImageF32 = Image3<f32>;
pub type SeparableF32 = SeparableDictionary3<f32>;
