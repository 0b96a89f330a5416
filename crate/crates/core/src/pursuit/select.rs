use crate::dictionary::SeparableDictionary3;
use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::tensor::{separable_inner_product_unchecked, Image3};

use super::{check_conforming, AtomIndex};

/// Signed correlation of the chosen atom with the residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection<T> {
    pub alpha: T,
    pub index: AtomIndex,
}

/// Picks the triple maximizing `|<dx_a (x) dy_b (x) dz_m, r>|` over the whole
/// separable dictionary.
///
/// For every z-atom `m` the matrix `q = sum_s dz_m(s) Dx^T R(:,:,s) Dy` is
/// accumulated plane by plane in one `Mx x My` buffer and scanned for its
/// largest entry. Ties go to the smallest `lz`, then `lx`, then `ly`.
pub fn select_atom<T: Real>(r: &Image3<T>, d: &SeparableDictionary3<T>) -> Result<Selection<T>> {
    select_atom_excluding(r, d, |_| false)?.ok_or_else(no_atoms)
}

fn no_atoms() -> Error {
    Error::InvalidArgument("dictionary has no atoms".into())
}

/// [`select_atom`] skipping every triple for which `excluded` returns true.
/// Returns `None` when all triples are excluded.
pub fn select_atom_excluding<T: Real>(
    r: &Image3<T>,
    d: &SeparableDictionary3<T>,
    excluded: impl Fn(AtomIndex) -> bool,
) -> Result<Option<Selection<T>>> {
    check_conforming(r, d)?;
    let ny = r.ny();
    let [mx, my, mz] = d.counts();

    let mut q = vec![T::zero(); mx * my];
    let mut row = vec![T::zero(); ny];
    let mut best: Option<(T, Selection<T>)> = None;

    for m in 0..mz {
        q.fill(T::zero());
        let dzm = d.dz.atom(m);
        for (s, &wz) in dzm.iter().enumerate() {
            if wz.is_zero() {
                continue;
            }
            let plane = r.plane(s);
            for a in 0..mx {
                // row = dx_a^T R(:,:,s)
                row.fill(T::zero());
                for (i, &wx) in d.dx.atom(a).iter().enumerate() {
                    if wx.is_zero() {
                        continue;
                    }
                    for (acc, &v) in row.iter_mut().zip(&plane[i * ny..(i + 1) * ny]) {
                        *acc = *acc + wx * v;
                    }
                }
                let qa = &mut q[a * my..(a + 1) * my];
                for (b, qab) in qa.iter_mut().enumerate() {
                    let dot: T = row.iter().zip(d.dy.atom(b)).map(|(&u, &w)| u * w).sum();
                    *qab = *qab + dot * wz;
                }
            }
        }
        for a in 0..mx {
            for b in 0..my {
                let v = q[a * my + b];
                let abs = v.abs();
                if best.as_ref().is_some_and(|(b_abs, _)| abs <= *b_abs) {
                    continue;
                }
                let index = AtomIndex::new(a, b, m);
                if excluded(index) {
                    continue;
                }
                best = Some((abs, Selection { alpha: v, index }));
            }
        }
    }
    Ok(best.map(|(_, s)| s))
}

/// Among already selected triples, finds the one most correlated with `r`.
/// Returns the signed correlation and its position in `selected`; ties go to
/// the earliest position.
pub fn sel_trip<T: Real>(
    r: &Image3<T>,
    d: &SeparableDictionary3<T>,
    selected: &[AtomIndex],
) -> Result<(T, usize)> {
    if selected.is_empty() {
        return invalid("sel_trip needs at least one selected atom");
    }
    check_conforming(r, d)?;
    for idx in selected {
        idx.check(d)?;
    }
    Ok(sel_trip_unchecked(r, d, selected.iter().copied()))
}

pub(crate) fn sel_trip_unchecked<T: Real>(
    r: &Image3<T>,
    d: &SeparableDictionary3<T>,
    selected: impl Iterator<Item = AtomIndex>,
) -> (T, usize) {
    let mut alpha_star = T::zero();
    let mut k_star = 0;
    for (n, AtomIndex { lx, ly, lz }) in selected.enumerate() {
        let p = separable_inner_product_unchecked(d.dx.atom(lx), d.dy.atom(ly), d.dz.atom(lz), r);
        if n == 0 || p.abs() > alpha_star.abs() {
            alpha_star = p;
            k_star = n;
        }
    }
    (alpha_star, k_star)
}
