use crate::dictionary::SeparableDictionary3;
use crate::error::Result;
use crate::num::Real;
use crate::tensor::{rank1_update_unchecked, Block3, Image3};

use super::select::sel_trip_unchecked;
use super::{
    below_rho, check_conforming, select_atom, AtomicDecomposition, ProjectionStats, PursuitConfig,
    PursuitOutcome, StopReason,
};

/// Runs matching pursuit restricted to the atoms already in `decomp` until no
/// selected atom correlates with the residual by `epsilon` or more, or
/// `max_j` scans have been made.
///
/// `r` must equal the block minus the reconstruction of `decomp`; both are
/// updated in place and kept consistent.
pub fn self_project<T: Real>(
    r: &mut Image3<T>,
    decomp: &mut AtomicDecomposition<T>,
    d: &SeparableDictionary3<T>,
    epsilon: f64,
    max_j: usize,
) -> Result<ProjectionStats> {
    check_conforming(r, d)?;
    for atom in &decomp.atoms {
        atom.index.check(d)?;
    }
    Ok(self_project_unchecked(r, decomp, d, epsilon, max_j))
}

fn self_project_unchecked<T: Real>(
    r: &mut Image3<T>,
    decomp: &mut AtomicDecomposition<T>,
    d: &SeparableDictionary3<T>,
    epsilon: f64,
    max_j: usize,
) -> ProjectionStats {
    let mut stats = ProjectionStats {
        sweeps: 0,
        converged: true,
        max_correlation: 0.0,
        epsilon,
    };
    if decomp.is_empty() {
        return stats;
    }
    let eps = T::lit(epsilon);
    stats.converged = false;
    for j in 1..=max_j {
        let (alpha, k) = sel_trip_unchecked(r, d, decomp.atoms.iter().map(|a| a.index));
        stats.sweeps = j;
        stats.max_correlation = alpha.abs().as_f64();
        if alpha.abs() < eps {
            stats.converged = true;
            break;
        }
        let atom = &mut decomp.atoms[k];
        atom.coefficient = atom.coefficient + alpha;
        let idx = atom.index;
        rank1_update_unchecked(
            r,
            d.dx.atom(idx.lx),
            d.dy.atom(idx.ly),
            d.dz.atom(idx.lz),
            alpha,
        );
    }
    stats
}

/// State handed to an observer after every outer SPMP3D iteration.
#[derive(Debug)]
pub struct Snapshot<'a, T> {
    /// Outer iterations completed so far.
    pub iteration: usize,
    pub residual: &'a Image3<T>,
    pub decomposition: &'a AtomicDecomposition<T>,
    /// Present when a self-projection ran in this iteration.
    pub projection: Option<ProjectionStats>,
    pub residual_norm: T,
}

/// Self-projected matching pursuit. See [`spmp3d_observed`].
pub fn spmp3d<T: Real>(
    block: &Block3<T>,
    d: &SeparableDictionary3<T>,
    cfg: &PursuitConfig,
) -> Result<PursuitOutcome<T>> {
    spmp3d_observed(block, d, cfg, |_| {})
}

/// Self-projected matching pursuit with a per-iteration callback.
///
/// Each outer iteration selects one atom over the full dictionary, subtracts
/// its correlation from the residual (merging into an existing entry when the
/// triple was picked before), then calls [`self_project`]. The loop ends when
/// `||R|| < rho` or after `max_atoms` iterations.
pub fn spmp3d_observed<T: Real>(
    block: &Block3<T>,
    d: &SeparableDictionary3<T>,
    cfg: &PursuitConfig,
    mut observer: impl FnMut(Snapshot<'_, T>),
) -> Result<PursuitOutcome<T>> {
    cfg.validate()?;
    check_conforming(block, d)?;
    let mut out = PursuitOutcome::start(block);
    let cap = cfg.atom_cap(block.len());
    let mut norm = block.norm();
    let epsilon = cfg.epsilon.resolve(norm.as_f64());

    for k in 0.. {
        if below_rho(norm, cfg.rho) {
            out.stop = StopReason::Tolerance;
            break;
        }
        if k == cap {
            out.stop = StopReason::MaxAtoms;
            break;
        }
        let sel = select_atom(&out.residual, d)?;
        if sel.alpha.is_zero() {
            out.stop = StopReason::NoCorrelation;
            break;
        }
        let idx = sel.index;
        out.decomposition.merge(sel.alpha, idx);
        rank1_update_unchecked(
            &mut out.residual,
            d.dx.atom(idx.lx),
            d.dy.atom(idx.ly),
            d.dz.atom(idx.lz),
            sel.alpha,
        );

        let done = k + 1;
        let project = done % cfg.projection_period == 0
            || done == cap
            || below_rho(out.residual.norm(), cfg.rho);
        let stats = project.then(|| {
            self_project_unchecked(
                &mut out.residual,
                &mut out.decomposition,
                d,
                epsilon,
                cfg.max_j,
            )
        });
        if let Some(s) = stats {
            out.projections.push(s);
        }
        norm = out.residual.norm();
        out.residual_history.push(norm);
        observer(Snapshot {
            iteration: done,
            residual: &out.residual,
            decomposition: &out.decomposition,
            projection: stats,
            residual_norm: norm,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{build_dirac, build_thin_3d};
    use crate::pursuit::{AtomIndex, Tolerance};
    use crate::tensor::{inner_product_3d, outer};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn thin3(n: usize) -> SeparableDictionary3<f64> {
        let t = build_thin_3d::<f64>(n).unwrap();
        SeparableDictionary3::assemble(t.clone(), t.clone(), t)
    }

    fn dense_atom(d: &SeparableDictionary3<f64>, i: AtomIndex) -> Image3<f64> {
        outer(d.dx.atom(i.lx), d.dy.atom(i.ly), d.dz.atom(i.lz))
    }

    /// Least squares on the vectorized atoms via the normal equations.
    fn least_squares(
        block: &Image3<f64>,
        d: &SeparableDictionary3<f64>,
        support: &[AtomIndex],
    ) -> Vec<f64> {
        let cols: Vec<Image3<f64>> = support.iter().map(|&i| dense_atom(d, i)).collect();
        let k = cols.len();
        let g = DMatrix::from_fn(k, k, |a, b| inner_product_3d(&cols[a], &cols[b]).unwrap());
        let rhs = DVector::from_fn(k, |a, _| inner_product_3d(&cols[a], block).unwrap());
        g.lu().solve(&rhs).unwrap().iter().copied().collect()
    }

    #[test]
    fn orthogonal_residual_needs_one_scan() {
        let d = thin3(4);
        let mut decomp = AtomicDecomposition::empty([0; 3], [4, 4, 4]);
        // Dirac x Dirac x Dirac at (0, 0, 0)
        decomp.merge(1.0, AtomIndex::new(16, 16, 16));
        let mut r = Image3::zeros(4, 4, 4);
        r.set(3, 3, 3, 1.0);
        let stats = self_project(&mut r, &mut decomp, &d, 1e-10, 100).unwrap();
        assert_eq!(stats.sweeps, 1);
        assert!(stats.converged);
        assert_eq!(decomp.atoms[0].coefficient, 1.0);
    }

    #[test]
    fn single_atom_projection_is_exact_in_one_step() {
        let d = thin3(4);
        let idx = AtomIndex::new(2, 5, 1);
        let mut decomp = AtomicDecomposition::empty([0; 3], [4, 4, 4]);
        decomp.merge(1.0, idx);
        // component 0.5 along the atom plus something orthogonal to it
        let atom = dense_atom(&d, idx);
        let mut other = Image3::from_fn(4, 4, 4, |i, j, s| ((i + 2 * j + 3 * s) % 5) as f64 - 2.0);
        let proj = inner_product_3d(&other, &atom).unwrap();
        other = other.sub(&atom.scaled(proj)).unwrap();
        let mut r = atom.scaled(0.5);
        for (v, o) in r.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *v += o;
        }
        let stats = self_project(&mut r, &mut decomp, &d, 1e-10, 100).unwrap();
        assert_eq!(stats.sweeps, 2);
        assert!((decomp.atoms[0].coefficient - 1.5).abs() < 1e-12);
    }

    #[test]
    fn three_atoms_match_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = thin3(4);
        let support = [
            AtomIndex::new(0, 1, 2),
            AtomIndex::new(3, 3, 0),
            AtomIndex::new(7, 17, 5),
        ];
        let block = Image3::from_fn(4, 4, 4, |_, _, _| rng.random_range(-1.0..1.0));
        let mut decomp = AtomicDecomposition::empty([0; 3], [4, 4, 4]);
        for &i in &support {
            decomp.merge(0.0, i);
        }
        let mut r = block.clone();
        let eps = 1e-12;
        let stats = self_project(&mut r, &mut decomp, &d, eps, 100_000).unwrap();
        assert!(stats.converged);
        let ls = least_squares(&block, &d, &support);
        for (a, b) in decomp.coefficients().iter().zip(&ls) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn recovers_three_dirac_atoms() {
        let dirac = build_dirac::<f64>(4).unwrap();
        let d = SeparableDictionary3::assemble(dirac.clone(), dirac.clone(), dirac);
        let mut img = Image3::zeros(4, 4, 4);
        img.set(0, 1, 2, 1.0);
        img.set(3, 0, 1, -2.0);
        img.set(2, 2, 2, 0.5);
        let out = spmp3d(&Block3::standalone(img), &d, &PursuitConfig::with_rho(1e-9)).unwrap();
        let mut got: Vec<(AtomIndex, f64)> = out
            .decomposition
            .atoms
            .iter()
            .map(|a| (a.index, a.coefficient))
            .collect();
        got.sort_by_key(|g| g.0);
        assert_eq!(
            got,
            vec![
                (AtomIndex::new(0, 1, 2), 1.0),
                (AtomIndex::new(2, 2, 2), 0.5),
                (AtomIndex::new(3, 0, 1), -2.0)
            ]
        );
    }

    #[test]
    fn complete_basis_reconstructs_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dirac = build_dirac::<f64>(3).unwrap();
        let d = SeparableDictionary3::assemble(dirac.clone(), dirac.clone(), dirac);
        let img = Image3::from_fn(3, 3, 3, |_, _, _| rng.random_range(1.0..2.0));
        let cfg = PursuitConfig {
            max_atoms: Some(27),
            ..PursuitConfig::with_rho(0.0)
        };
        let out = spmp3d(&Block3::standalone(img.clone()), &d, &cfg).unwrap();
        assert_eq!(out.decomposition.len(), 27);
        let rec = out.decomposition.reconstruct(&d).unwrap();
        assert!(rec.sub(&img).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn observer_sees_orthogonal_residual_every_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = thin3(4);
        let block = Block3::standalone(Image3::from_fn(4, 4, 4, |_, _, _| {
            rng.random_range(-1.0..1.0)
        }));
        let cfg = PursuitConfig {
            epsilon: Tolerance::Relative(1e-10),
            max_atoms: Some(12),
            max_j: 10_000,
            ..PursuitConfig::default()
        };
        let eps = 1e-10 * block.norm();
        let mut calls = 0;
        let mut prev = block.norm();
        let out = spmp3d_observed(&block, &d, &cfg, |snap| {
            calls += 1;
            let p = snap.projection.unwrap();
            assert!(p.converged);
            for a in &snap.decomposition.atoms {
                let c = inner_product_3d(&dense_atom(&d, a.index), snap.residual).unwrap();
                assert!(c.abs() < eps * (1.0 + 1e-9), "{c} >= {eps}");
            }
            assert!(snap.residual_norm <= prev);
            prev = snap.residual_norm;
        })
        .unwrap();
        assert_eq!(calls, 12);
        assert_eq!(out.stop, StopReason::MaxAtoms);
    }

    #[test]
    fn sparse_projection_period_still_projects_at_the_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = thin3(4);
        let block = Block3::standalone(Image3::from_fn(4, 4, 4, |_, _, _| {
            rng.random_range(-1.0..1.0)
        }));
        let cfg = PursuitConfig {
            max_atoms: Some(7),
            projection_period: 3,
            ..PursuitConfig::default()
        };
        let out = spmp3d(&block, &d, &cfg).unwrap();
        // after atoms 3, 6 and the final 7th
        assert_eq!(out.projections.len(), 3);
    }

    #[test]
    fn zero_block_is_empty() {
        let d = thin3(2);
        let out = spmp3d(
            &Block3::standalone(Image3::zeros(2, 2, 2)),
            &d,
            &PursuitConfig::default(),
        )
        .unwrap();
        assert!(out.decomposition.is_empty());
        assert!(out.reached_tolerance());
    }
}
