//! Dense 3D arrays and the separable inner-product kernels.
//!
//! Storage is row-major inside each plane with the plane index `s` as the
//! slowest axis: entry `(i, j, s)` lives at `s * nx * ny + i * ny + j`. Every
//! kernel below walks one `nx x ny` plane at a time.

use std::ops::{Deref, DerefMut};

use crate::error::{invalid, Error, Result};
use crate::num::Real;

/// Dense `nx x ny x nz` array of real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Image3<T> {
    nx: usize,
    ny: usize,
    nz: usize,
    data: Vec<T>,
}

impl<T: Real> Image3<T> {
    /// Wraps `data` after checking its length and that every value is finite.
    pub fn new(nx: usize, ny: usize, nz: usize, data: Vec<T>) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return invalid(format!("extents must be positive, got {nx}x{ny}x{nz}"));
        }
        if data.len() != nx * ny * nz {
            return invalid(format!(
                "data length {} does not match {nx}x{ny}x{nz}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { nx, ny, nz, data })
    }

    pub fn zeros(nx: usize, ny: usize, nz: usize) -> Self {
        assert!(nx > 0 && ny > 0 && nz > 0, "extents must be positive");
        Self {
            nx,
            ny,
            nz,
            data: vec![T::zero(); nx * ny * nz],
        }
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut img = Self::zeros(nx, ny, nz);
        for s in 0..nz {
            for i in 0..nx {
                for j in 0..ny {
                    img.data[(s * nx + i) * ny + j] = f(i, j, s);
                }
            }
        }
        img
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Total number of entries `N = nx * ny * nz`.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, s: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny && s < self.nz);
        (s * self.nx + i) * self.ny + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, s: usize) -> T {
        self.data[self.offset(i, j, s)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, s: usize, v: T) {
        let o = self.offset(i, j, s);
        self.data[o] = v;
    }

    /// Plane `s` as a row-major `nx x ny` slice.
    #[inline]
    pub fn plane(&self, s: usize) -> &[T] {
        let n = self.nx * self.ny;
        &self.data[s * n..(s + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, s: usize) -> &mut [T] {
        let n = self.nx * self.ny;
        &mut self.data[s * n..(s + 1) * n]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Squared Frobenius norm, `<t, t>`.
    pub fn norm_sqr(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    /// `sqrt(<t, t>)`, the 3D norm used by every stopping rule.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Entry-wise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_dims(self, other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(self.with_data(data))
    }

    pub fn scaled(&self, factor: T) -> Self {
        self.with_data(self.data.iter().map(|&v| v * factor).collect())
    }

    fn with_data(&self, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            nx: self.nx,
            ny: self.ny,
            nz: self.nz,
            data,
        }
    }
}

fn check_same_dims<T: Real>(a: &Image3<T>, b: &Image3<T>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch {
            left: a.dims().to_vec(),
            right: b.dims().to_vec(),
        });
    }
    Ok(())
}

fn check_vectors<T: Real>(gx: &[T], gy: &[T], gz: &[T], t: &Image3<T>) -> Result<()> {
    if [gx.len(), gy.len(), gz.len()] != t.dims() {
        return Err(Error::ShapeMismatch {
            left: vec![gx.len(), gy.len(), gz.len()],
            right: t.dims().to_vec(),
        });
    }
    Ok(())
}

/// A sub-array of a parent image together with its offset into that parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Block3<T> {
    pub image: Image3<T>,
    pub origin: [usize; 3],
}

impl<T: Real> Block3<T> {
    /// Builds a block and checks that it fits inside `parent` extents.
    pub fn new(image: Image3<T>, origin: [usize; 3], parent: [usize; 3]) -> Result<Self> {
        let dims = image.dims();
        for axis in 0..3 {
            if origin[axis] + dims[axis] > parent[axis] {
                return invalid(format!(
                    "block at {origin:?} with extents {dims:?} exceeds parent {parent:?}"
                ));
            }
        }
        Ok(Self { image, origin })
    }

    /// A block that is its own parent, with origin zero.
    pub fn standalone(image: Image3<T>) -> Self {
        Self {
            image,
            origin: [0; 3],
        }
    }
}

impl<T> Deref for Block3<T> {
    type Target = Image3<T>;

    fn deref(&self) -> &Image3<T> {
        &self.image
    }
}

impl<T> DerefMut for Block3<T> {
    fn deref_mut(&mut self) -> &mut Image3<T> {
        &mut self.image
    }
}

/// Plain entry-wise inner product of two equally shaped arrays.
pub fn inner_product_3d<T: Real>(a: &Image3<T>, b: &Image3<T>) -> Result<T> {
    check_same_dims(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(&x, &y)| x * y).sum())
}

/// `<gx (x) gy (x) gz, t>` evaluated as `sum_s gz(s) <gx, T_s gy>`, one plane
/// at a time, without forming the rank-1 atom.
pub fn separable_inner_product<T: Real>(gx: &[T], gy: &[T], gz: &[T], t: &Image3<T>) -> Result<T> {
    check_vectors(gx, gy, gz, t)?;
    Ok(separable_inner_product_unchecked(gx, gy, gz, t))
}

#[inline]
pub(crate) fn separable_inner_product_unchecked<T: Real>(
    gx: &[T],
    gy: &[T],
    gz: &[T],
    t: &Image3<T>,
) -> T {
    let ny = t.ny;
    let mut acc = T::zero();
    for (s, &wz) in gz.iter().enumerate() {
        if wz.is_zero() {
            continue;
        }
        let plane = t.plane(s);
        let mut p = T::zero();
        for (i, &wx) in gx.iter().enumerate() {
            if wx.is_zero() {
                continue;
            }
            let row = &plane[i * ny..(i + 1) * ny];
            let r: T = row.iter().zip(gy).map(|(&v, &w)| v * w).sum();
            p = p + wx * r;
        }
        acc = acc + p * wz;
    }
    acc
}

/// In-place `t <- t - alpha * gx (x) gy (x) gz`, plane by plane.
pub fn rank1_update<T: Real>(
    t: &mut Image3<T>,
    gx: &[T],
    gy: &[T],
    gz: &[T],
    alpha: T,
) -> Result<()> {
    check_vectors(gx, gy, gz, t)?;
    rank1_update_unchecked(t, gx, gy, gz, alpha);
    Ok(())
}

#[inline]
pub(crate) fn rank1_update_unchecked<T: Real>(
    t: &mut Image3<T>,
    gx: &[T],
    gy: &[T],
    gz: &[T],
    alpha: T,
) {
    let ny = t.ny;
    for (s, &wz) in gz.iter().enumerate() {
        let cz = alpha * wz;
        if cz.is_zero() {
            continue;
        }
        let plane = t.plane_mut(s);
        for (i, &wx) in gx.iter().enumerate() {
            let cx = cz * wx;
            if cx.is_zero() {
                continue;
            }
            for (v, &wy) in plane[i * ny..(i + 1) * ny].iter_mut().zip(gy) {
                *v = *v - cx * wy;
            }
        }
    }
}

/// Dense rank-1 array `gx (x) gy (x) gz`. Only the reference OMP3D and the
/// test oracles materialize atoms this way.
pub fn outer<T: Real>(gx: &[T], gy: &[T], gz: &[T]) -> Image3<T> {
    Image3::from_fn(gx.len(), gy.len(), gz.len(), |i, j, s| {
        gx[i] * gy[j] * gz[s]
    })
}
