use serde::{Deserialize, Serialize};

use crate::dictionary::SeparableDictionary3;
use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::pursuit::AtomicDecomposition;
use crate::tensor::{Block3, Image3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Extend each axis to a block multiple by repeating the last sample.
    EdgeReplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub bx: usize,
    pub by: usize,
    pub bz: usize,
    pub padding: Padding,
}

impl PartitionSpec {
    pub fn new(bx: usize, by: usize, bz: usize) -> Result<Self> {
        if bx == 0 || by == 0 || bz == 0 {
            return invalid(format!(
                "block extents must be positive, got {bx}x{by}x{bz}"
            ));
        }
        Ok(Self {
            bx,
            by,
            bz,
            padding: Padding::EdgeReplicate,
        })
    }

    pub fn block(&self) -> [usize; 3] {
        [self.bx, self.by, self.bz]
    }

    pub fn block_points(&self) -> usize {
        self.bx * self.by * self.bz
    }

    pub fn layout(&self, extents: [usize; 3]) -> Layout {
        let block = self.block();
        let grid = [0, 1, 2].map(|a| extents[a].div_ceil(block[a]));
        Layout {
            extents,
            padded: [0, 1, 2].map(|a| grid[a] * block[a]),
            block,
            grid,
        }
    }
}

/// Geometry of a tiling: source extents, padded extents and block grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub extents: [usize; 3],
    pub padded: [usize; 3],
    pub block: [usize; 3],
    /// Blocks per axis `(Qx, Qy, Qz)`.
    pub grid: [usize; 3],
}

impl Layout {
    /// `Q`.
    pub fn block_count(&self) -> usize {
        self.grid.iter().product()
    }

    pub fn is_padded(&self) -> bool {
        self.padded != self.extents
    }

    /// Origin of block `q` in z-major, then row-major order.
    pub fn origin(&self, q: usize) -> [usize; 3] {
        let [gx, gy, _] = self.grid;
        let ky = q % gy;
        let kx = (q / gy) % gx;
        let kz = q / (gx * gy);
        [kx * self.block[0], ky * self.block[1], kz * self.block[2]]
    }

    /// Inverse of [`Layout::origin`].
    pub fn block_index(&self, origin: [usize; 3]) -> Option<usize> {
        let mut k = [0; 3];
        for a in 0..3 {
            if !origin[a].is_multiple_of(self.block[a]) {
                return None;
            }
            k[a] = origin[a] / self.block[a];
            if k[a] >= self.grid[a] {
                return None;
            }
        }
        Some((k[2] * self.grid[0] + k[0]) * self.grid[1] + k[1])
    }

    /// Whether any sample of block `q` lies in the padding.
    pub fn touches_padding(&self, q: usize) -> bool {
        let o = self.origin(q);
        (0..3).any(|a| o[a] + self.block[a] > self.extents[a])
    }
}

/// Edge-replicates `img` up to `padded` extents.
pub fn pad_edge<T: Real>(img: &Image3<T>, padded: [usize; 3]) -> Result<Image3<T>> {
    let [nx, ny, nz] = img.dims();
    if padded[0] < nx || padded[1] < ny || padded[2] < nz {
        return invalid(format!("cannot pad {:?} down to {padded:?}", img.dims()));
    }
    if padded == img.dims() {
        return Ok(img.clone());
    }
    Ok(Image3::from_fn(
        padded[0],
        padded[1],
        padded[2],
        |i, j, s| img.get(i.min(nx - 1), j.min(ny - 1), s.min(nz - 1)),
    ))
}

/// The `extents` corner of `img` starting at the origin.
pub fn crop<T: Real>(img: &Image3<T>, extents: [usize; 3]) -> Result<Image3<T>> {
    if img.dims() == extents {
        return Ok(img.clone());
    }
    extract(img, [0; 3], extents)
}

fn extract<T: Real>(img: &Image3<T>, origin: [usize; 3], extents: [usize; 3]) -> Result<Image3<T>> {
    let d = img.dims();
    if (0..3).any(|a| origin[a] + extents[a] > d[a]) {
        return invalid(format!("region {origin:?}+{extents:?} exceeds {d:?}"));
    }
    Ok(Image3::from_fn(
        extents[0],
        extents[1],
        extents[2],
        |i, j, s| img.get(origin[0] + i, origin[1] + j, origin[2] + s),
    ))
}

/// Tiles `img` (padded first if needed) into non-overlapping blocks.
pub fn partition<T: Real>(
    img: &Image3<T>,
    spec: &PartitionSpec,
) -> Result<(Layout, Vec<Block3<T>>)> {
    let layout = spec.layout(img.dims());
    let padded = pad_edge(img, layout.padded)?;
    let blocks = (0..layout.block_count())
        .map(|q| {
            let origin = layout.origin(q);
            Block3::new(
                extract(&padded, origin, layout.block)?,
                origin,
                layout.padded,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((layout, blocks))
}

/// Writes every block reconstruction into a zero image of the padded extents.
/// Every grid cell must be covered exactly once.
pub fn assemble_padded<T: Real>(
    layout: &Layout,
    decomps: &[AtomicDecomposition<T>],
    d: &SeparableDictionary3<T>,
) -> Result<Image3<T>> {
    if d.extents() != layout.block {
        return Err(Error::ShapeMismatch {
            left: d.extents().to_vec(),
            right: layout.block.to_vec(),
        });
    }
    let mut seen = vec![false; layout.block_count()];
    for dec in decomps {
        if dec.extents != layout.block {
            return invalid(format!(
                "block at {:?} has extents {:?}, expected {:?}",
                dec.origin, dec.extents, layout.block
            ));
        }
        let q = layout.block_index(dec.origin).ok_or_else(|| {
            Error::InvalidArgument(format!("block origin {:?} is off the grid", dec.origin))
        })?;
        if std::mem::replace(&mut seen[q], true) {
            return invalid(format!("block at {:?} appears twice", dec.origin));
        }
    }
    if let Some(q) = seen.iter().position(|s| !s) {
        return invalid(format!(
            "no decomposition for block at {:?}",
            layout.origin(q)
        ));
    }

    let [_, py, _] = layout.padded;
    let [bx, by, bz] = layout.block;
    let mut out = Image3::zeros(layout.padded[0], layout.padded[1], layout.padded[2]);
    for dec in decomps {
        let tile = dec.reconstruct(d)?;
        let [ox, oy, oz] = dec.origin;
        for s in 0..bz {
            let src = tile.plane(s);
            let dst = out.plane_mut(oz + s);
            for i in 0..bx {
                let at = (ox + i) * py + oy;
                dst[at..at + by].copy_from_slice(&src[i * by..(i + 1) * by]);
            }
        }
    }
    Ok(out)
}

/// [`assemble_padded`] followed by cropping to the source extents.
pub fn assemble<T: Real>(
    layout: &Layout,
    decomps: &[AtomicDecomposition<T>],
    d: &SeparableDictionary3<T>,
) -> Result<Image3<T>> {
    crop(&assemble_padded(layout, decomps, d)?, layout.extents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::build_dirac;
    use crate::pursuit::{Atom, AtomIndex};

    fn ramp(nx: usize, ny: usize, nz: usize) -> Image3<f64> {
        Image3::from_fn(nx, ny, nz, |i, j, s| (100 * s + 10 * i + j) as f64)
    }

    /// Exact Dirac decomposition of a block.
    fn dirac_decomposition(b: &Block3<f64>) -> AtomicDecomposition<f64> {
        let [nx, ny, nz] = b.dims();
        let mut d = AtomicDecomposition::empty(b.origin, b.dims());
        for s in 0..nz {
            for i in 0..nx {
                for j in 0..ny {
                    d.atoms.push(Atom {
                        coefficient: b.get(i, j, s),
                        index: AtomIndex::new(i, j, s),
                    });
                }
            }
        }
        d
    }

    fn dirac3(e: [usize; 3]) -> SeparableDictionary3<f64> {
        SeparableDictionary3::assemble(
            build_dirac(e[0]).unwrap(),
            build_dirac(e[1]).unwrap(),
            build_dirac(e[2]).unwrap(),
        )
    }

    #[test]
    fn block_counts() {
        let spec = PartitionSpec::new(8, 8, 3).unwrap();
        assert_eq!(spec.layout([16, 16, 3]).block_count(), 4);
        assert_eq!(spec.layout([768, 512, 3]).block_count(), 6144);
        let l = spec.layout([10, 10, 3]);
        assert_eq!(l.padded, [16, 16, 3]);
        assert_eq!(l.block_count(), 4);
        assert!(l.is_padded());
        assert!(!l.touches_padding(0));
        assert!((1..4).all(|q| l.touches_padding(q)));
        assert!(PartitionSpec::new(8, 0, 3).is_err());
    }

    #[test]
    fn order_is_z_major_then_row_major() {
        let l = PartitionSpec::new(2, 2, 1).unwrap().layout([4, 6, 2]);
        let origins: Vec<_> = (0..l.block_count()).map(|q| l.origin(q)).collect();
        assert_eq!(origins[0], [0, 0, 0]);
        assert_eq!(origins[1], [0, 2, 0]);
        assert_eq!(origins[3], [2, 0, 0]);
        assert_eq!(origins[6], [0, 0, 1]);
        for (q, o) in origins.iter().enumerate() {
            assert_eq!(l.block_index(*o), Some(q));
        }
        assert_eq!(l.block_index([1, 0, 0]), None);
    }

    #[test]
    fn padding_replicates_the_edge() {
        let img = ramp(3, 2, 1);
        let (l, blocks) = partition(&img, &PartitionSpec::new(2, 2, 1).unwrap()).unwrap();
        assert_eq!(l.padded, [4, 2, 1]);
        assert_eq!(blocks[1].origin, [2, 0, 0]);
        assert_eq!(blocks[1].get(1, 1, 0), img.get(2, 1, 0));
    }

    #[test]
    fn untouched_blocks_reassemble_to_the_image() {
        for dims in [[16, 16, 3], [10, 13, 5], [8, 8, 3]] {
            let img = ramp(dims[0], dims[1], dims[2]);
            let spec = PartitionSpec::new(4, 4, 3).unwrap();
            let (l, blocks) = partition(&img, &spec).unwrap();
            let decs: Vec<_> = blocks.iter().map(dirac_decomposition).collect();
            assert_eq!(assemble(&l, &decs, &dirac3(spec.block())).unwrap(), img);
        }
    }

    #[test]
    fn empty_decompositions_give_zeros() {
        let spec = PartitionSpec::new(2, 2, 1).unwrap();
        let l = spec.layout([4, 4, 1]);
        let decs: Vec<_> = (0..4)
            .map(|q| AtomicDecomposition::<f64>::empty(l.origin(q), l.block))
            .collect();
        assert!(assemble(&l, &decs, &dirac3(l.block)).unwrap().is_zero());
    }

    #[test]
    fn overlap_and_gaps_are_errors() {
        let spec = PartitionSpec::new(2, 2, 1).unwrap();
        let l = spec.layout([4, 4, 1]);
        let d = dirac3(l.block);
        let mut decs: Vec<_> = (0..4)
            .map(|q| AtomicDecomposition::<f64>::empty(l.origin(q), l.block))
            .collect();
        let last = decs.pop().unwrap();
        assert!(assemble(&l, &decs, &d).is_err());
        decs.push(decs[0].clone());
        assert!(assemble(&l, &decs, &d).is_err());
        decs.pop();
        decs.push(AtomicDecomposition::empty([1, 1, 0], l.block));
        assert!(assemble(&l, &decs, &d).is_err());
        decs.pop();
        decs.push(last);
        assert!(assemble(&l, &decs, &d).is_ok());
    }
}
