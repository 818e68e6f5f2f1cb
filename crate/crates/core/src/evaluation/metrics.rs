use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::core::{cosine_similarity, Image};
use crate::error::{Error, Result};
use crate::inversion::Embedder;

/// Covariance eigenvalues may dip this far below zero
/// (relative to the largest eigenvalue) before FID reports a numerical error.
const SQRT_NEG_TOLERANCE: f64 = 1e-6;

/// Semantic distance `1 - cos(e(x), e(x̂))`, in `[0, 2]`.
pub fn d_clip(x: &Image, xhat: &Image, embedder: &dyn Embedder) -> Result<f64> {
    d_clip_embeddings(&embedder.encode_image(x)?, &embedder.encode_image(xhat)?)
}

/// [`d_clip`] on precomputed embeddings.
pub fn d_clip_embeddings(a: &[f32], b: &[f32]) -> Result<f64> {
    Ok((1.0 - cosine_similarity(a, b)?).clamp(0.0, 2.0))
}

/// Peak signal-to-noise ratio over all RGB samples, peak 1. Infinite for
/// identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Shape(format!(
            "images are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / a.data().len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

fn to_matrix(set: &[Vec<f32>], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(set.len(), dim, |i, j| set[i][j] as f64)
}

fn check_sets(a: &[Vec<f32>], b: &[Vec<f32>]) -> Result<usize> {
    for set in [a, b] {
        if set.len() < 2 {
            return Err(Error::SampleSize {
                needed: 2,
                found: set.len(),
            });
        }
    }
    let dim = a[0].len();
    if dim == 0 {
        return Err(Error::Shape("zero-dimensional features".into()));
    }
    if let Some(v) = a.iter().chain(b).find(|v| v.len() != dim) {
        return Err(Error::Shape(format!(
            "feature dimensions {dim} and {} are mixed",
            v.len()
        )));
    }
    Ok(dim)
}

/// Mean and unbiased (n - 1) covariance.
fn moments(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let mean = x.row_mean().transpose();
    let mut centred = x.clone();
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centred.transpose() * &centred / (n - 1.0);
    (mean, cov)
}

fn eigen(m: DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
}

/// Checks eigenvalues against the tolerance and clips them at zero.
fn clipped(values: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let top = values.iter().copied().fold(0.0f64, f64::max).max(1.0);
    if let Some(&v) = values
        .iter()
        .find(|&&v| v < -SQRT_NEG_TOLERANCE * top || !v.is_finite())
    {
        return Err(Error::Numerical {
            step: 0,
            what: format!("{what} has eigenvalue {v:e}"),
        });
    }
    Ok(values.map(|v| v.max(0.0)))
}

fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = eigen(m.clone());
    let vals = clipped(&e.eigenvalues, "covariance")?.map(f64::sqrt);
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&vals) * e.eigenvectors.transpose())
}

/// Fréchet distance between Gaussians fitted to two feature sets.
///
/// `Tr((Σa Σb)^½)` equals the nuclear norm of `Σa^½ Σb^½`, taken from its
/// singular values so near-null directions are not squared and re-rooted.
pub fn fid(features_a: &[Vec<f32>], features_b: &[Vec<f32>]) -> Result<f64> {
    let dim = check_sets(features_a, features_b)?;
    let (mu_a, cov_a) = moments(&to_matrix(features_a, dim));
    let (mu_b, cov_b) = moments(&to_matrix(features_b, dim));

    let sqrt_a = psd_sqrt(&cov_a)?;
    let sqrt_b = psd_sqrt(&cov_b)?;
    let cross = (sqrt_a * sqrt_b).singular_values().sum();

    let mean_term = (&mu_a - &mu_b).norm_squared();
    let value = mean_term + cov_a.trace() + cov_b.trace() - 2.0 * cross;
    Ok(value.max(0.0))
}

fn kernel(x: &[f32], y: &[f32]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(&a, &b)| a as f64 * b as f64).sum();
    (dot / x.len() as f64 + 1.0).powi(3)
}

/// Unbiased squared MMD with the cubic polynomial kernel `(x·y/d + 1)³`.
///
/// Equal-size sets use the paired U-statistic, which leaves out `i == j` in
/// all three kernel sums and is exactly zero for identical sets. Unequal sizes
/// use the full cross term. The value may be negative.
pub fn kid(features_a: &[Vec<f32>], features_b: &[Vec<f32>]) -> Result<f64> {
    check_sets(features_a, features_b)?;
    let (m, n) = (features_a.len(), features_b.len());
    // all three sums share one loop order so identical sets cancel exactly
    let within = |set: &[Vec<f32>]| -> f64 {
        let mut s = 0.0;
        for (i, x) in set.iter().enumerate() {
            for (j, y) in set.iter().enumerate() {
                if i != j {
                    s += kernel(x, y);
                }
            }
        }
        s / (set.len() * (set.len() - 1)) as f64
    };
    let mut cross = 0.0;
    for (i, a) in features_a.iter().enumerate() {
        for (j, b) in features_b.iter().enumerate() {
            if m != n || i != j {
                cross += kernel(a, b);
            }
        }
    }
    let pairs = if m == n { m * (m - 1) } else { m * n };
    Ok(within(features_a) + within(features_b) - 2.0 * cross / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn pts(v: &[f32]) -> Vec<Vec<f32>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    /// Direct transcription of the estimator as a triple of kernel sums.
    fn kid_oracle(a: &[Vec<f32>], b: &[Vec<f32>]) -> f64 {
        let k = |x: &[f32], y: &[f32]| {
            let d = x.len() as f64;
            let dot: f64 = x.iter().zip(y).map(|(p, q)| *p as f64 * *q as f64).sum();
            (dot / d + 1.0) * (dot / d + 1.0) * (dot / d + 1.0)
        };
        let (m, n) = (a.len(), b.len());
        let (mut saa, mut sbb, mut sab, mut cab) = (0.0, 0.0, 0.0, 0usize);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    saa += k(&a[i], &a[j]);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sbb += k(&b[i], &b[j]);
                }
            }
        }
        for i in 0..m {
            for j in 0..n {
                if m != n || i != j {
                    sab += k(&a[i], &b[j]);
                    cab += 1;
                }
            }
        }
        saa / (m * (m - 1)) as f64 + sbb / (n * (n - 1)) as f64 - 2.0 * sab / cab as f64
    }

    fn gaussian_set(n: usize, d: usize, shift: f32, seed: u64) -> Vec<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| rng.sample::<f32, _>(StandardNormal) + shift)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn d_clip_examples() {
        assert_eq!(d_clip_embeddings(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(d_clip_embeddings(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(d_clip_embeddings(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(
            d_clip_embeddings(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fid_examples() {
        assert!((fid(&pts(&[0.0, 2.0]), &pts(&[1.0, 3.0])).unwrap() - 1.0).abs() < 1e-9);
        let a = gaussian_set(20, 5, 0.0, 1);
        assert!(fid(&a, &a).unwrap().abs() < 1e-9);
        let low_rank = gaussian_set(4, 64, 0.0, 5);
        assert!(fid(&low_rank, &low_rank).unwrap().abs() < 1e-9);
        let doubled: Vec<_> = a.iter().chain(&a).cloned().collect();
        // same mean; covariance differs only by the (n-1) normalization
        let scale = (2.0 * 19.0) / 39.0;
        let (_, cov) = moments(&to_matrix(&a, 5));
        let s = scale as f64;
        let expected = cov.trace() * (1.0 + s - 2.0 * s.sqrt());
        assert!((fid(&a, &doubled).unwrap() - expected).abs() < 1e-9);
        assert!(matches!(
            fid(&pts(&[1.0]), &pts(&[1.0, 2.0])),
            Err(Error::SampleSize {
                needed: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn kid_examples() {
        assert!((kid(&pts(&[2.0, 0.0]), &pts(&[1.0, 1.0])).unwrap() + 19.0).abs() < 1e-9);
        assert!((kid_oracle(&pts(&[2.0, 0.0]), &pts(&[1.0, 1.0])) + 19.0).abs() < 1e-9);
        let a = pts(&[0.3, -1.2]);
        assert_eq!(kid(&a, &a).unwrap(), 0.0);
        assert!(matches!(
            kid(&pts(&[1.0]), &a),
            Err(Error::SampleSize { .. })
        ));
    }

    #[test]
    fn kid_is_near_zero_for_one_distribution() {
        let a = gaussian_set(1000, 16, 0.0, 2);
        let b = gaussian_set(1000, 16, 0.0, 3);
        let v = kid(&a, &b).unwrap();
        assert!(v.abs() < 0.01, "{v}");
        let c = gaussian_set(1000, 16, 0.5, 4);
        assert!(kid(&a, &c).unwrap() > 0.01);
    }

    #[test]
    fn psnr_examples() {
        let a = Image::from_fn(8, 8, |_, _| [0.5; 3]).unwrap();
        let b = Image::from_fn(8, 8, |_, _| [0.6; 3]).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn kid_matches_oracle_and_is_symmetric(
            seed in any::<u64>(), m in 2usize..7, n in 2usize..7, d in 1usize..4,
        ) {
            let a = gaussian_set(m, d, 0.0, seed);
            let b = gaussian_set(n, d, 0.3, seed ^ 1);
            let v = kid(&a, &b).unwrap();
            prop_assert!((v - kid_oracle(&a, &b)).abs() < 1e-9 * v.abs().max(1.0));
            prop_assert!((v - kid(&b, &a).unwrap()).abs() < 1e-9 * v.abs().max(1.0));
            prop_assert_eq!(kid(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn kid_is_invariant_to_joint_permutation(seed in any::<u64>(), n in 2usize..7) {
            let a = gaussian_set(n, 3, 0.0, seed);
            let b = gaussian_set(n, 3, 0.2, seed ^ 7);
            let rot = seed as usize % n;
            let mut ar = a.clone();
            let mut br = b.clone();
            ar.rotate_left(rot);
            br.rotate_left(rot);
            prop_assert!((kid(&a, &b).unwrap() - kid(&ar, &br).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn fid_is_symmetric_and_permutation_invariant(seed in any::<u64>(), n in 6usize..14) {
            let a = gaussian_set(n, 3, 0.0, seed);
            let b = gaussian_set(n + 2, 3, 0.4, seed ^ 3);
            let v = fid(&a, &b).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!((v - fid(&b, &a).unwrap()).abs() < 1e-6 * v.max(1.0));
            let mut ar = a.clone();
            ar.reverse();
            prop_assert!((v - fid(&ar, &b).unwrap()).abs() < 1e-6 * v.max(1.0));
            prop_assert!(fid(&a, &a).unwrap().abs() < 1e-9);
        }

        #[test]
        fn d_clip_is_bounded_and_symmetric(
            u in proptest::collection::vec(-10.0f32..10.0, 4),
            v in proptest::collection::vec(-10.0f32..10.0, 4),
        ) {
            prop_assume!(u.iter().any(|&x| x != 0.0) && v.iter().any(|&x| x != 0.0));
            let d = d_clip_embeddings(&u, &v).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert_eq!(d, d_clip_embeddings(&v, &u).unwrap());
            prop_assert!(d_clip_embeddings(&u, &u).unwrap() < 1e-12);
        }
    }
}
