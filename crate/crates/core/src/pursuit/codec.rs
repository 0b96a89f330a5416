//! Wire format for one block's decomposition.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! u32 ox, oy, oz        block origin in the (padded) image
//! u32 bx, by, bz        block extents
//! u32 k                 number of atoms
//! k x { u32 lx, u32 ly, u32 lz, f64 coefficient }
//! ```
//!
//! Atom indices are one-based on the wire. [`BlockRecord`] is the equivalent
//! JSON form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

use super::{Atom, AtomIndex, AtomicDecomposition};

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in 32 bits")))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated decomposition record".into())
    } else {
        Error::Io(e)
    }
}

pub fn write_block<T: Real>(w: &mut impl Write, decomp: &AtomicDecomposition<T>) -> Result<()> {
    for v in decomp.origin.iter().chain(&decomp.extents) {
        w.write_all(&to_u32(*v, "block geometry")?.to_le_bytes())?;
    }
    w.write_all(&to_u32(decomp.len(), "atom count")?.to_le_bytes())?;
    for atom in &decomp.atoms {
        let AtomIndex { lx, ly, lz } = atom.index;
        for l in [lx, ly, lz] {
            w.write_all(&to_u32(l + 1, "atom index")?.to_le_bytes())?;
        }
        w.write_all(&atom.coefficient.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_block<T: Real>(r: &mut impl Read) -> Result<AtomicDecomposition<T>> {
    let mut geom = [0usize; 6];
    for g in &mut geom {
        *g = read_u32(r)? as usize;
    }
    let k = read_u32(r)? as usize;
    let mut atoms = Vec::with_capacity(k.min(1 << 16));
    for _ in 0..k {
        let mut l = [0usize; 3];
        for v in &mut l {
            let raw = read_u32(r)?;
            if raw == 0 {
                return Err(Error::Format("atom indices are one-based; found 0".into()));
            }
            *v = raw as usize - 1;
        }
        let c = read_f64(r)?;
        if !c.is_finite() {
            return Err(Error::Format("non-finite coefficient".into()));
        }
        atoms.push(Atom {
            coefficient: T::lit(c),
            index: AtomIndex::new(l[0], l[1], l[2]),
        });
    }
    Ok(AtomicDecomposition {
        origin: [geom[0], geom[1], geom[2]],
        extents: [geom[3], geom[4], geom[5]],
        atoms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
    pub coefficient: f64,
}

/// JSON form of one block, with one-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub origin: [usize; 3],
    pub extents: [usize; 3],
    pub k: usize,
    pub atoms: Vec<AtomRecord>,
}

impl<T: Real> From<&AtomicDecomposition<T>> for BlockRecord {
    fn from(d: &AtomicDecomposition<T>) -> Self {
        Self {
            origin: d.origin,
            extents: d.extents,
            k: d.len(),
            atoms: d
                .atoms
                .iter()
                .map(|a| AtomRecord {
                    lx: a.index.lx + 1,
                    ly: a.index.ly + 1,
                    lz: a.index.lz + 1,
                    coefficient: a.coefficient.as_f64(),
                })
                .collect(),
        }
    }
}

impl BlockRecord {
    pub fn to_decomposition<T: Real>(&self) -> Result<AtomicDecomposition<T>> {
        if self.k != self.atoms.len() {
            return Err(Error::Format(format!(
                "k = {} but {} atoms listed",
                self.k,
                self.atoms.len()
            )));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                if a.lx == 0 || a.ly == 0 || a.lz == 0 {
                    return Err(Error::Format("atom indices are one-based; found 0".into()));
                }
                Ok(Atom {
                    coefficient: T::lit(a.coefficient),
                    index: AtomIndex::new(a.lx - 1, a.ly - 1, a.lz - 1),
                })
            })
            .collect::<Result<_>>()?;
        Ok(AtomicDecomposition {
            origin: self.origin,
            extents: self.extents,
            atoms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> AtomicDecomposition<f64> {
        let mut d = AtomicDecomposition::empty([8, 16, 0], [8, 8, 3]);
        d.merge(-1.25, AtomIndex::new(0, 39, 14));
        d.merge(3.0e-7, AtomIndex::new(5, 2, 0));
        d
    }

    #[test]
    fn binary_layout_is_little_endian_and_one_based() {
        let mut buf = Vec::new();
        write_block(&mut buf, &sample()).unwrap();
        assert_eq!(buf.len(), 7 * 4 + 2 * 20);
        assert_eq!(&buf[0..4], &8u32.to_le_bytes());
        assert_eq!(&buf[24..28], &2u32.to_le_bytes());
        assert_eq!(&buf[28..32], &1u32.to_le_bytes());
        assert_eq!(&buf[32..36], &40u32.to_le_bytes());
        assert_eq!(&buf[40..48], &(-1.25f64).to_le_bytes());
    }

    #[test]
    fn truncated_input_is_an_error() {
        let mut buf = Vec::new();
        write_block(&mut buf, &sample()).unwrap();
        buf.pop();
        assert!(matches!(
            read_block::<f64>(&mut buf.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn json_form_matches_binary() {
        let d = sample();
        let rec = BlockRecord::from(&d);
        assert_eq!(rec.atoms[0].ly, 40);
        let text = serde_json::to_string(&rec).unwrap();
        let back: BlockRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_decomposition::<f64>().unwrap(), d);
    }

    proptest! {
        #[test]
        fn binary_round_trip(
            origin in prop::array::uniform3(0usize..1000),
            atoms in prop::collection::vec((0usize..500, 0usize..500, 0usize..500, -1e6f64..1e6), 0..20),
        ) {
            let mut d = AtomicDecomposition::empty(origin, [8, 8, 3]);
            for (a, b, c, v) in atoms {
                d.atoms.push(Atom { coefficient: v, index: AtomIndex::new(a, b, c) });
            }
            let mut buf = Vec::new();
            write_block(&mut buf, &d).unwrap();
            let back: AtomicDecomposition<f64> = read_block(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
