//! Greedy pursuit over separable 3D dictionaries.
//!
//! * [`select_atom`] scans the full `Mx x My x Mz` dictionary one z-atom at a
//!   time with a single `Mx x My` scratch matrix.
//! * [`mp3d`] is plain matching pursuit.
//! * [`spmp3d`] adds the self-projection loop ([`self_project`]) after each
//!   selection, which drives the residual orthogonal to the span of the
//!   selected atoms without storing any dense 3D atoms.
//! * [`omp3d`] is the biorthogonal-set reference used to check SPMP3D.

mod codec;
mod memory;
mod mp;
mod omp;
mod select;
mod spmp;

pub use codec::{read_block, write_block, AtomRecord, BlockRecord};
pub use memory::{memory_footprint, MemoryFootprint, SHARED_MEMORY_BUDGET};
pub use mp::mp3d;
pub use omp::{omp3d, Biorthogonal, DEPENDENT_ATOM_TOL};
pub use select::{sel_trip, select_atom, select_atom_excluding, Selection};
pub use spmp::{self_project, spmp3d, spmp3d_observed, Snapshot};

use serde::{Deserialize, Serialize};

use crate::dictionary::SeparableDictionary3;
use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::tensor::{rank1_update_unchecked, Block3, Image3};

/// Zero-based atom indices into `dx`, `dy`, `dz`. File formats store them
/// one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomIndex {
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
}

impl AtomIndex {
    pub const fn new(lx: usize, ly: usize, lz: usize) -> Self {
        Self { lx, ly, lz }
    }

    pub fn check(&self, d: &SeparableDictionary3<impl Real>) -> Result<()> {
        let [mx, my, mz] = d.counts();
        if self.lx >= mx || self.ly >= my || self.lz >= mz {
            return invalid(format!(
                "atom index {self:?} outside dictionary {mx}x{my}x{mz}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub coefficient: T,
    pub index: AtomIndex,
}

/// The `k`-term atomic decomposition of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicDecomposition<T> {
    pub origin: [usize; 3],
    pub extents: [usize; 3],
    pub atoms: Vec<Atom<T>>,
}

impl<T: Real> AtomicDecomposition<T> {
    pub fn empty(origin: [usize; 3], extents: [usize; 3]) -> Self {
        Self {
            origin,
            extents,
            atoms: Vec::new(),
        }
    }

    /// Number of atoms `k`.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn indices(&self) -> Vec<AtomIndex> {
        self.atoms.iter().map(|a| a.index).collect()
    }

    pub fn coefficients(&self) -> Vec<T> {
        self.atoms.iter().map(|a| a.coefficient).collect()
    }

    pub fn position(&self, index: AtomIndex) -> Option<usize> {
        self.atoms.iter().position(|a| a.index == index)
    }

    /// Adds `coefficient` to an existing entry for `index`, or appends one.
    /// Returns the entry's position.
    pub fn merge(&mut self, coefficient: T, index: AtomIndex) -> usize {
        match self.position(index) {
            Some(p) => {
                self.atoms[p].coefficient = self.atoms[p].coefficient + coefficient;
                p
            }
            None => {
                self.atoms.push(Atom { coefficient, index });
                self.atoms.len() - 1
            }
        }
    }

    /// `sum_n c(n) dx (x) dy (x) dz` as a dense block.
    pub fn reconstruct(&self, d: &SeparableDictionary3<T>) -> Result<Image3<T>> {
        if d.extents() != self.extents {
            return Err(Error::ShapeMismatch {
                left: d.extents().to_vec(),
                right: self.extents.to_vec(),
            });
        }
        let [nx, ny, nz] = self.extents;
        let mut out = Image3::zeros(nx, ny, nz);
        for atom in &self.atoms {
            atom.index.check(d)?;
            let AtomIndex { lx, ly, lz } = atom.index;
            rank1_update_unchecked(
                &mut out,
                d.dx.atom(lx),
                d.dy.atom(ly),
                d.dz.atom(lz),
                -atom.coefficient,
            );
        }
        Ok(out)
    }
}

/// Tolerance that is either absolute or relative to the block norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
}

impl Tolerance {
    pub fn resolve(self, block_norm: f64) -> f64 {
        match self {
            Tolerance::Absolute(v) => v,
            Tolerance::Relative(v) => v * block_norm,
        }
    }

    fn value(self) -> f64 {
        match self {
            Tolerance::Absolute(v) | Tolerance::Relative(v) => v,
        }
    }
}

/// Stopping and tolerance parameters shared by all engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PursuitConfig {
    /// Stop once `||R^k|| < rho`.
    pub rho: f64,
    /// Self-projection stops once every `|<atom_n, R>| < epsilon`.
    pub epsilon: Tolerance,
    /// Cap on outer iterations per block; `None` means the block size `N`.
    pub max_atoms: Option<usize>,
    /// Cap on projection sweeps per outer iteration.
    pub max_j: usize,
    /// Run the self-projection after every `projection_period` atoms.
    pub projection_period: usize,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        Self {
            rho: 0.0,
            epsilon: Tolerance::Relative(1e-8),
            max_atoms: None,
            max_j: 1000,
            projection_period: 1,
        }
    }
}

impl PursuitConfig {
    pub fn with_rho(rho: f64) -> Self {
        Self {
            rho,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return invalid(format!("rho must be finite and >= 0, got {}", self.rho));
        }
        let eps = self.epsilon.value();
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("epsilon must be finite and > 0, got {eps}"));
        }
        if self.max_atoms == Some(0) {
            return invalid("max_atoms must be >= 1");
        }
        if self.max_j == 0 {
            return invalid("max_j must be >= 1");
        }
        if self.projection_period == 0 {
            return invalid("projection_period must be >= 1");
        }
        Ok(())
    }

    pub(crate) fn atom_cap(&self, block_len: usize) -> usize {
        self.max_atoms.unwrap_or(block_len)
    }
}

/// Per-block `rho` that makes every block meet the mean squared error of a
/// global PSNR target: `rho^2 = points * imax^2 / 10^(psnr/10)`.
pub fn rho_for_psnr(block_points: usize, imax: f64, psnr_db: f64) -> f64 {
    (block_points as f64 * imax * imax / 10f64.powf(psnr_db / 10.0)).sqrt()
}

/// Per-block `rho` for a global SNR target on an image of `total_points`
/// entries and energy `signal_energy = ||I||^2`.
pub fn rho_for_snr(
    block_points: usize,
    total_points: usize,
    signal_energy: f64,
    snr_db: f64,
) -> f64 {
    (block_points as f64 / total_points as f64 * signal_energy / 10f64.powf(snr_db / 10.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `||R|| < rho` (or the residual vanished).
    Tolerance,
    /// The atom cap was hit first.
    MaxAtoms,
    /// No atom correlates with the residual, or every candidate was rejected.
    NoCorrelation,
}

/// Result of one self-projection call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionStats {
    /// Sweep count `J`: number of correlation scans performed.
    pub sweeps: usize,
    /// Whether the tolerance test stopped the loop (rather than `max_j`).
    pub converged: bool,
    /// `max_n |<atom_n, R>|` at the last scan.
    pub max_correlation: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct PursuitOutcome<T> {
    pub decomposition: AtomicDecomposition<T>,
    pub residual: Image3<T>,
    /// `||R||` after the initial check and after every outer iteration.
    pub residual_history: Vec<T>,
    /// One entry per self-projection (SPMP3D only).
    pub projections: Vec<ProjectionStats>,
    pub stop: StopReason,
    /// Atoms OMP3D refused as linearly dependent.
    pub rejected: usize,
}

impl<T: Real> PursuitOutcome<T> {
    pub fn residual_norm(&self) -> T {
        *self
            .residual_history
            .last()
            .expect("history starts with the block norm")
    }

    pub fn reached_tolerance(&self) -> bool {
        self.stop == StopReason::Tolerance
    }

    fn start(block: &Block3<T>) -> Self {
        Self {
            decomposition: AtomicDecomposition::empty(block.origin, block.dims()),
            residual: block.image.clone(),
            residual_history: vec![block.norm()],
            projections: Vec::new(),
            stop: StopReason::Tolerance,
            rejected: 0,
        }
    }
}

pub(crate) fn check_conforming<T: Real>(r: &Image3<T>, d: &SeparableDictionary3<T>) -> Result<()> {
    if r.dims() != d.extents() {
        return Err(Error::ShapeMismatch {
            left: r.dims().to_vec(),
            right: d.extents().to_vec(),
        });
    }
    Ok(())
}

/// `true` when the pursuit should stop before another selection.
#[inline]
pub(crate) fn below_rho<T: Real>(norm: T, rho: f64) -> bool {
    norm.is_zero() || norm.as_f64() < rho
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_for_psnr_recovers_target() {
        // every block exactly at rho gives MSE = imax^2 / 10^(psnr/10)
        let rho = rho_for_psnr(192, 255.0, 45.0);
        let mse = rho * rho / 192.0;
        let psnr = 10.0 * (255.0f64 * 255.0 / mse).log10();
        assert!((psnr - 45.0).abs() < 1e-12);
    }

    #[test]
    fn rho_for_snr_recovers_target() {
        let rho = rho_for_snr(64, 4096, 1e6, 30.0);
        let err = rho * rho * 64.0;
        assert!((10.0 * (1e6f64 / err).log10() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(PursuitConfig::default().validate().is_ok());
        assert!(PursuitConfig {
            rho: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PursuitConfig {
            epsilon: Tolerance::Absolute(0.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PursuitConfig {
            max_atoms: Some(0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PursuitConfig {
            max_j: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn merge_accumulates_existing_triples() {
        let mut d = AtomicDecomposition::<f64>::empty([0; 3], [2, 2, 2]);
        assert_eq!(d.merge(1.0, AtomIndex::new(0, 1, 0)), 0);
        assert_eq!(d.merge(2.0, AtomIndex::new(1, 1, 0)), 1);
        assert_eq!(d.merge(0.5, AtomIndex::new(0, 1, 0)), 0);
        assert_eq!(d.len(), 2);
        assert_eq!(d.atoms[0].coefficient, 1.5);
    }
}
