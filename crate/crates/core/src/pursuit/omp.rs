use std::collections::HashSet;

use crate::dictionary::SeparableDictionary3;
use crate::error::Result;
use crate::num::Real;
use crate::tensor::{inner_product_3d, outer, Block3, Image3};

use super::{
    below_rho, check_conforming, select_atom_excluding, Atom, AtomIndex, PursuitConfig,
    PursuitOutcome, StopReason,
};

/// Atoms whose Gram-Schmidt remainder `||W_(k+1)||` falls below this are
/// treated as linearly dependent on the current selection.
pub const DEPENDENT_ATOM_TOL: f64 = 1e-12;

/// Dense biorthogonal set `B_n^k` for a growing list of atoms `A_n`,
/// maintained with the adaptive recursion and a re-orthogonalized
/// Gram-Schmidt sequence `W_n`.
///
/// Stores `3k` dense arrays (atoms, `W` and `B`), so it is only meant for
/// small blocks.
#[derive(Debug, Clone, Default)]
pub struct Biorthogonal<T> {
    atoms: Vec<Image3<T>>,
    w: Vec<Image3<T>>,
    w_norm_sqr: Vec<T>,
    b: Vec<Image3<T>>,
}

impl<T: Real> Biorthogonal<T> {
    pub fn new() -> Self {
        Self {
            atoms: Vec::new(),
            w: Vec::new(),
            w_norm_sqr: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn remove_w_components(&self, v: &mut Image3<T>, against: &Image3<T>) {
        for (wn, &nn) in self.w.iter().zip(&self.w_norm_sqr) {
            let f = dot(wn, against) / nn;
            axpy(v, -f, wn);
        }
    }

    /// Adds `atom` to the set. Returns `false`, leaving the set unchanged,
    /// when the atom is numerically dependent on the current ones.
    pub fn push(&mut self, atom: Image3<T>) -> bool {
        let mut w = atom.clone();
        self.remove_w_components(&mut w, &atom);
        // re-orthogonalization pass
        let snapshot = w.clone();
        self.remove_w_components(&mut w, &snapshot);
        let nn = w.norm_sqr();
        if nn.sqrt().as_f64() < DEPENDENT_ATOM_TOL {
            return false;
        }
        let b_new = w.scaled(T::one() / nn);
        for bn in &mut self.b {
            let f = dot(&atom, bn);
            axpy(bn, -f, &b_new);
        }
        self.atoms.push(atom);
        self.w.push(w);
        self.w_norm_sqr.push(nn);
        self.b.push(b_new);
        true
    }

    /// `c(n) = <B_n^k, signal>`: coefficients of the orthogonal projection.
    pub fn coefficients(&self, signal: &Image3<T>) -> Vec<T> {
        self.b.iter().map(|bn| dot(bn, signal)).collect()
    }

    /// `signal - sum_n c(n) A_n`.
    pub fn residual(&self, signal: &Image3<T>, coefficients: &[T]) -> Image3<T> {
        let mut r = signal.clone();
        for (a, &c) in self.atoms.iter().zip(coefficients) {
            axpy(&mut r, -c, a);
        }
        r
    }

    pub fn duals(&self) -> &[Image3<T>] {
        &self.b
    }
}

fn dot<T: Real>(a: &Image3<T>, b: &Image3<T>) -> T {
    inner_product_3d(a, b).expect("equal shapes")
}

fn axpy<T: Real>(y: &mut Image3<T>, a: T, x: &Image3<T>) {
    for (yv, &xv) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yv = *yv + a * xv;
    }
}

/// Orthogonal matching pursuit with dense biorthogonal duals. Reference
/// implementation for checking [`super::spmp3d`]; memory grows as `3k N`.
pub fn omp3d<T: Real>(
    block: &Block3<T>,
    d: &SeparableDictionary3<T>,
    cfg: &PursuitConfig,
) -> Result<PursuitOutcome<T>> {
    cfg.validate()?;
    check_conforming(block, d)?;
    let mut out = PursuitOutcome::start(block);
    let cap = cfg.atom_cap(block.len());
    let mut bio = Biorthogonal::new();
    let mut selected: Vec<AtomIndex> = Vec::new();
    let mut taken: HashSet<AtomIndex> = HashSet::new();
    let mut norm = block.norm();

    loop {
        if below_rho(norm, cfg.rho) {
            out.stop = StopReason::Tolerance;
            break;
        }
        if selected.len() == cap {
            out.stop = StopReason::MaxAtoms;
            break;
        }
        if out.rejected > cap {
            out.stop = StopReason::NoCorrelation;
            break;
        }
        let sel = select_atom_excluding(&out.residual, d, |i| taken.contains(&i))?;
        let Some(sel) = sel.filter(|s| !s.alpha.is_zero()) else {
            out.stop = StopReason::NoCorrelation;
            break;
        };
        let idx = sel.index;
        taken.insert(idx);
        if !bio.push(outer(
            d.dx.atom(idx.lx),
            d.dy.atom(idx.ly),
            d.dz.atom(idx.lz),
        )) {
            out.rejected += 1;
            continue;
        }
        selected.push(idx);
        let coeffs = bio.coefficients(block);
        out.residual = bio.residual(block, &coeffs);
        out.decomposition.atoms = selected
            .iter()
            .zip(&coeffs)
            .map(|(&index, &coefficient)| Atom { coefficient, index })
            .collect();
        norm = out.residual.norm();
        out.residual_history.push(norm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{build_dirac, build_thin_3d};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn thin3(n: usize) -> SeparableDictionary3<f64> {
        let t = build_thin_3d::<f64>(n).unwrap();
        SeparableDictionary3::assemble(t.clone(), t.clone(), t)
    }

    #[test]
    fn orthonormal_atoms_are_their_own_duals() {
        let dirac = build_dirac::<f64>(2).unwrap();
        let mut bio = Biorthogonal::new();
        for k in 0..3 {
            assert!(bio.push(outer(dirac.atom(k % 2), dirac.atom(k / 2), dirac.atom(0))));
        }
        let mut img = Image3::zeros(2, 2, 2);
        img.set(0, 0, 0, 3.0);
        img.set(1, 0, 0, -1.0);
        img.set(1, 1, 1, 7.0);
        assert_eq!(bio.coefficients(&img), vec![3.0, -1.0, 0.0]);
    }

    #[test]
    fn dependent_atom_is_rejected() {
        let t = thin3(2);
        let a = outer(t.dx.atom(0), t.dy.atom(0), t.dz.atom(0));
        let mut bio = Biorthogonal::new();
        assert!(bio.push(a.clone()));
        assert!(!bio.push(a));
        assert_eq!(bio.len(), 1);
    }

    #[test]
    fn residual_is_orthogonal_to_two_coherent_atoms() {
        let d = thin3(4);
        let a1 = outer(d.dx.atom(1), d.dy.atom(0), d.dz.atom(0));
        let a2 = outer(d.dx.atom(9), d.dy.atom(0), d.dz.atom(0));
        assert!(dot(&a1, &a2).abs() > 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = Image3::from_fn(4, 4, 4, |_, _, _| rng.random_range(-1.0..1.0));
        let mut bio = Biorthogonal::new();
        bio.push(a1.clone());
        bio.push(a2.clone());
        let c = bio.coefficients(&img);
        let r = bio.residual(&img, &c);
        assert!(dot(&r, &a1).abs() < 1e-12);
        assert!(dot(&r, &a2).abs() < 1e-12);
    }

    #[test]
    fn coefficients_equal_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = thin3(4);
        let block = Block3::standalone(Image3::from_fn(4, 4, 4, |_, _, _| {
            rng.random_range(-1.0..1.0)
        }));
        let cfg = PursuitConfig {
            max_atoms: Some(10),
            ..PursuitConfig::default()
        };
        let out = omp3d(&block, &d, &cfg).unwrap();
        assert_eq!(out.decomposition.len(), 10);
        let cols: Vec<Image3<f64>> = out
            .decomposition
            .indices()
            .iter()
            .map(|i| outer(d.dx.atom(i.lx), d.dy.atom(i.ly), d.dz.atom(i.lz)))
            .collect();
        let g = DMatrix::from_fn(10, 10, |a, b| dot(&cols[a], &cols[b]));
        let rhs = DVector::from_fn(10, |a, _| dot(&cols[a], &block));
        let ls = g.lu().solve(&rhs).unwrap();
        for (c, l) in out.decomposition.coefficients().iter().zip(ls.iter()) {
            assert!((c - l).abs() < 1e-10);
        }
        for w in out.residual_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
