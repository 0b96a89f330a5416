//! CDF 9/7 biorthogonal wavelet transform (lifting scheme) on 2D channels.
//!
//! Each level lifts every row and then every column of the current low-pass
//! quadrant, with whole-point symmetric extension at the borders, and stores
//! the result in Mallat layout (approximation in the top-left corner).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::num::Real;
use crate::tensor::Image3;

const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
const ZETA: f64 = 1.149_604_398_860_241;

/// Depth used when the extents allow it.
pub const DEFAULT_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Whole-point mirror: `x[-1] = x[1]`, `x[n] = x[n-2]`.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub levels: usize,
    pub boundary: Boundary,
}

impl WaveletSpec {
    pub fn new(levels: usize) -> Self {
        Self {
            levels,
            boundary: Boundary::Symmetric,
        }
    }

    /// Deepest decomposition up to `max_levels` that divides both extents.
    /// At least one level; extents must then be even.
    pub fn fitting(rows: usize, cols: usize, max_levels: usize) -> Self {
        let tz = rows.trailing_zeros().min(cols.trailing_zeros()) as usize;
        Self::new(tz.min(max_levels).max(1))
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if self.levels == 0 {
            return invalid("wavelet levels must be >= 1");
        }
        let unit = 1usize << self.levels;
        if rows == 0 || cols == 0 || !rows.is_multiple_of(unit) || !cols.is_multiple_of(unit) {
            return invalid(format!(
                "channel {rows}x{cols} is not divisible by 2^{} = {unit}; pad it to a multiple of {unit}",
                self.levels
            ));
        }
        Ok(())
    }
}

/// Row-major 2D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Plane<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "{} values do not form a {rows}x{cols} plane",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }
}

fn lift_forward<T: Real>(x: &mut [T], out: &mut [T]) {
    let n = x.len();
    debug_assert!(n >= 2 && n.is_multiple_of(2));
    let step = |x: &mut [T], start: usize, c: T| {
        for i in (start..n).step_by(2) {
            let left = if i > 0 { x[i - 1] } else { x[i + 1] };
            let right = if i + 1 < n { x[i + 1] } else { x[i - 1] };
            x[i] = x[i] + c * (left + right);
        }
    };
    step(x, 1, T::lit(ALPHA));
    step(x, 0, T::lit(BETA));
    step(x, 1, T::lit(GAMMA));
    step(x, 0, T::lit(DELTA));
    let zeta = T::lit(ZETA);
    let half = n / 2;
    for k in 0..half {
        out[k] = x[2 * k] * zeta;
        out[half + k] = x[2 * k + 1] / zeta;
    }
}

fn lift_inverse<T: Real>(y: &[T], x: &mut [T]) {
    let n = y.len();
    debug_assert!(n >= 2 && n.is_multiple_of(2));
    let zeta = T::lit(ZETA);
    let half = n / 2;
    for k in 0..half {
        x[2 * k] = y[k] / zeta;
        x[2 * k + 1] = y[half + k] * zeta;
    }
    let step = |x: &mut [T], start: usize, c: T| {
        for i in (start..n).step_by(2) {
            let left = if i > 0 { x[i - 1] } else { x[i + 1] };
            let right = if i + 1 < n { x[i + 1] } else { x[i - 1] };
            x[i] = x[i] - c * (left + right);
        }
    };
    step(x, 0, T::lit(DELTA));
    step(x, 1, T::lit(GAMMA));
    step(x, 0, T::lit(BETA));
    step(x, 1, T::lit(ALPHA));
}

/// Applies `f` to every row (`along_rows`) or column of the top-left
/// `rows x cols` region of `data` (row stride `stride`).
fn for_each_line<T: Real>(
    data: &mut [T],
    stride: usize,
    rows: usize,
    cols: usize,
    along_rows: bool,
    f: impl Fn(&mut [T], &mut [T]),
) {
    let (lines, len) = if along_rows {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let mut a = vec![T::zero(); len];
    let mut b = vec![T::zero(); len];
    for line in 0..lines {
        let at = |k: usize| {
            if along_rows {
                line * stride + k
            } else {
                k * stride + line
            }
        };
        for k in 0..len {
            a[k] = data[at(k)];
        }
        f(&mut a, &mut b);
        for k in 0..len {
            data[at(k)] = b[k];
        }
    }
}

pub fn cdf97_forward<T: Real>(channel: &Plane<T>, spec: &WaveletSpec) -> Result<Plane<T>> {
    spec.check(channel.rows, channel.cols)?;
    let mut out = channel.clone();
    let stride = channel.cols;
    for level in 0..spec.levels {
        let (r, c) = (channel.rows >> level, channel.cols >> level);
        for_each_line(&mut out.data, stride, r, c, true, |a, b| lift_forward(a, b));
        for_each_line(&mut out.data, stride, r, c, false, |a, b| {
            lift_forward(a, b)
        });
    }
    Ok(out)
}

pub fn cdf97_inverse<T: Real>(coeffs: &Plane<T>, spec: &WaveletSpec) -> Result<Plane<T>> {
    spec.check(coeffs.rows, coeffs.cols)?;
    let mut out = coeffs.clone();
    let stride = coeffs.cols;
    for level in (0..spec.levels).rev() {
        let (r, c) = (coeffs.rows >> level, coeffs.cols >> level);
        for_each_line(&mut out.data, stride, r, c, false, |a, b| {
            lift_inverse(a, b)
        });
        for_each_line(&mut out.data, stride, r, c, true, |a, b| lift_inverse(a, b));
    }
    Ok(out)
}

fn map_channels<T: Real>(
    img: &Image3<T>,
    spec: &WaveletSpec,
    f: fn(&Plane<T>, &WaveletSpec) -> Result<Plane<T>>,
) -> Result<Image3<T>> {
    let [nx, ny, nz] = img.dims();
    let mut out = Image3::zeros(nx, ny, nz);
    for s in 0..nz {
        let plane = Plane::new(nx, ny, img.plane(s).to_vec())?;
        out.plane_mut(s).copy_from_slice(&f(&plane, spec)?.data);
    }
    Ok(out)
}

/// Forward transform of every `nx x ny` channel of `img`.
pub fn forward_channels<T: Real>(img: &Image3<T>, spec: &WaveletSpec) -> Result<Image3<T>> {
    map_channels(img, spec, cdf97_forward)
}

pub fn inverse_channels<T: Real>(img: &Image3<T>, spec: &WaveletSpec) -> Result<Image3<T>> {
    map_channels(img, spec, cdf97_inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Plane<f64> {
        Plane::from_fn(rows, cols, |_, _| rng.random_range(-100.0..100.0))
    }

    fn max_abs_diff(a: &Plane<f64>, b: &Plane<f64>) -> f64 {
        a.data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_has_no_detail() {
        let spec = WaveletSpec::new(3);
        let c = Plane::<f64>::from_fn(32, 16, |_, _| 7.5);
        let w = cdf97_forward(&c, &spec).unwrap();
        for i in 0..32 {
            for j in 0..16 {
                if i >= 4 || j >= 2 {
                    assert!(w.get(i, j).abs() < 1e-12, "({i},{j}) = {}", w.get(i, j));
                }
            }
        }
    }

    #[test]
    fn ramp_has_no_interior_detail() {
        // one level; the mirrored border breaks linearity only near the edges
        let spec = WaveletSpec::new(1);
        let (rows, cols) = (32, 32);
        let ramp = Plane::from_fn(rows, cols, |i, j| 3.0 * i as f64 - 2.0 * j as f64 + 1.0);
        let w = cdf97_forward(&ramp, &spec).unwrap();
        let half = rows / 2;
        for i in 0..rows {
            for j in 0..cols {
                let detail = i >= half || j >= half;
                let (ii, jj) = (i % half, j % half);
                let interior = (2..half - 2).contains(&ii) && (2..half - 2).contains(&jj);
                if detail && interior {
                    assert!(w.get(i, j).abs() < 1e-10, "({i},{j}) = {}", w.get(i, j));
                }
            }
        }
    }

    #[test]
    fn perfect_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for levels in 1..=5 {
            let spec = WaveletSpec::new(levels);
            let x = random_plane(&mut rng, 64, 64);
            let back = cdf97_inverse(&cdf97_forward(&x, &spec).unwrap(), &spec).unwrap();
            let scale = x.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max_abs_diff(&x, &back) <= 1e-9 * scale);
        }
    }

    #[test]
    fn zeros_stay_zero() {
        let spec = WaveletSpec::new(2);
        let z = Plane::from_fn(8, 8, |_, _| 0.0);
        assert!(cdf97_inverse(&z, &spec)
            .unwrap()
            .data
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = WaveletSpec::new(3);
        let x = random_plane(&mut rng, 16, 32);
        let y = random_plane(&mut rng, 16, 32);
        let (a, b) = (1.5, -0.25);
        let mix = Plane::from_fn(16, 32, |i, j| a * x.get(i, j) + b * y.get(i, j));
        let fx = cdf97_forward(&x, &spec).unwrap();
        let fy = cdf97_forward(&y, &spec).unwrap();
        let fm = cdf97_forward(&mix, &spec).unwrap();
        for k in 0..fm.data.len() {
            assert!((fm.data[k] - (a * fx.data[k] + b * fy.data[k])).abs() < 1e-10);
        }
    }

    #[test]
    fn dc_gain_is_near_orthonormal() {
        let spec = WaveletSpec::new(1);
        let c = Plane::<f64>::from_fn(8, 8, |_, _| 1.0);
        let w = cdf97_forward(&c, &spec).unwrap();
        assert!((w.get(0, 0) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn indivisible_extents_are_rejected() {
        let spec = WaveletSpec::new(3);
        let err = cdf97_forward(&Plane::from_fn(12, 16, |_, _| 0.0), &spec).unwrap_err();
        assert!(err.to_string().contains("pad"));
        assert_eq!(WaveletSpec::fitting(512, 768, 5).levels, 5);
        assert_eq!(WaveletSpec::fitting(24, 64, 5).levels, 3);
    }

    #[test]
    fn channel_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let img = Image3::from_fn(16, 16, 3, |_, _, _| rng.random_range(0.0..255.0));
        let spec = WaveletSpec::new(4);
        let back = inverse_channels(&forward_channels(&img, &spec).unwrap(), &spec).unwrap();
        assert!(back.sub(&img).unwrap().max_abs() < 1e-9 * 255.0);
    }
}
