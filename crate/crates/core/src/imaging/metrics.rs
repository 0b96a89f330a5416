//! Quality and sparsity measures. Infinite values stand for an exact match.

use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::tensor::Image3;

fn squared_error<T: Real>(reference: &Image3<T>, approx: &Image3<T>) -> Result<f64> {
    if reference.dims() != approx.dims() {
        return Err(Error::ShapeMismatch {
            left: reference.dims().to_vec(),
            right: approx.dims().to_vec(),
        });
    }
    Ok(reference
        .as_slice()
        .iter()
        .zip(approx.as_slice())
        .map(|(&a, &b)| {
            let e = a.as_f64() - b.as_f64();
            e * e
        })
        .sum())
}

/// `||I - I^K||^2 / N`.
pub fn mse<T: Real>(reference: &Image3<T>, approx: &Image3<T>) -> Result<f64> {
    Ok(squared_error(reference, approx)? / reference.len() as f64)
}

/// `10 log10(imax^2 / MSE)`, `+inf` when the images agree.
pub fn psnr<T: Real>(reference: &Image3<T>, approx: &Image3<T>, imax: f64) -> Result<f64> {
    if !(imax > 0.0 && imax.is_finite()) {
        return invalid(format!("imax must be positive, got {imax}"));
    }
    let m = mse(reference, approx)?;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (imax * imax / m).log10()
    })
}

/// `10 log10(||I||^2 / ||I - I^K||^2)`, `+inf` on zero error.
pub fn snr<T: Real>(reference: &Image3<T>, approx: &Image3<T>) -> Result<f64> {
    let err = squared_error(reference, approx)?;
    let energy: f64 = reference
        .as_slice()
        .iter()
        .map(|v| v.as_f64() * v.as_f64())
        .sum();
    if energy == 0.0 {
        return invalid("SNR is undefined for an all-zero reference");
    }
    Ok(if err == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (energy / err).log10()
    })
}

/// `N / K`.
pub fn sparsity_ratio(points: usize, atoms: usize) -> Result<f64> {
    if atoms == 0 {
        return invalid("sparsity ratio needs at least one atom");
    }
    Ok(points as f64 / atoms as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant(v: f64) -> Image3<f64> {
        Image3::from_fn(4, 4, 3, |_, _, _| v)
    }

    #[test]
    fn identical_images_are_infinite() {
        let a = Image3::from_fn(4, 4, 3, |i, j, s| (i + j + s) as f64);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        assert_eq!(snr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn unit_error_at_255() {
        let p = psnr(&constant(10.0), &constant(11.0), 255.0).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((p - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn doubling_error_costs_6_0206_db() {
        let a = constant(10.0);
        let p1 = psnr(&a, &constant(11.0), 255.0).unwrap();
        let p2 = psnr(&a, &constant(12.0), 255.0).unwrap();
        assert!((p1 - p2 - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((p1 - p2 - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn snr_cases() {
        let a = Image3::from_fn(3, 3, 2, |i, j, s| 1.0 + (i * j + s) as f64);
        let half = a.scaled(0.5);
        assert!((snr(&a, &half).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert!(snr(&a, &Image3::zeros(3, 3, 2)).unwrap().abs() < 1e-12);
        assert!(snr(&Image3::zeros(3, 3, 2), &a).is_err());
    }

    #[test]
    fn sparsity_ratio_cases() {
        assert_eq!(sparsity_ratio(512, 8).unwrap(), 64.0);
        assert_eq!(sparsity_ratio(77, 77).unwrap(), 1.0);
        assert!(sparsity_ratio(10, 0).is_err());
    }

    #[test]
    fn shape_mismatch() {
        assert!(psnr(&constant(1.0), &Image3::zeros(4, 4, 2), 1.0).is_err());
        assert!(psnr(&constant(1.0), &constant(1.0), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn snr_minus_psnr_is_fixed_by_the_reference(
            data in proptest::collection::vec(1.0f64..100.0, 12),
            e1 in proptest::collection::vec(-5.0f64..5.0, 12),
            e2 in proptest::collection::vec(-5.0f64..5.0, 12),
        ) {
            let r = Image3::new(2, 3, 2, data).unwrap();
            let add = |e: &[f64]| Image3::from_fn(2, 3, 2, |i, j, s| r.get(i, j, s) + e[(s * 2 + i) * 3 + j]);
            let (a1, a2) = (add(&e1), add(&e2));
            prop_assume!(mse(&r, &a1).unwrap() > 0.0 && mse(&r, &a2).unwrap() > 0.0);
            let g1 = snr(&r, &a1).unwrap() - psnr(&r, &a1, 255.0).unwrap();
            let g2 = snr(&r, &a2).unwrap() - psnr(&r, &a2, 255.0).unwrap();
            prop_assert!((g1 - g2).abs() < 1e-9);
        }
    }
}
