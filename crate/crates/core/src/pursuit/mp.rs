use crate::dictionary::SeparableDictionary3;
use crate::error::Result;
use crate::num::Real;
use crate::tensor::{rank1_update_unchecked, Block3};

use super::{below_rho, check_conforming, select_atom, PursuitConfig, PursuitOutcome, StopReason};

/// Matching pursuit: each coefficient is the raw correlation at selection
/// time. Re-selected triples accumulate into their existing entry.
pub fn mp3d<T: Real>(
    block: &Block3<T>,
    d: &SeparableDictionary3<T>,
    cfg: &PursuitConfig,
) -> Result<PursuitOutcome<T>> {
    cfg.validate()?;
    check_conforming(block, d)?;
    let mut out = PursuitOutcome::start(block);
    let cap = cfg.atom_cap(block.len());
    let mut norm = block.norm();

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
        norm = out.residual.norm();
        out.residual_history.push(norm);
    }
    Ok(out)
}
