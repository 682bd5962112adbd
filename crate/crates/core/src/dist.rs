//! Random variate generators used by the samplers and the simulator.
//!
//! All generators are pure functions of their parameters and the state of
//! the supplied RNG, so replaying a stream reproduces draws bit for bit.

use alloc::vec::Vec;
use rand_core::RngCore;

use crate::linalg::{cholesky_strict, spd_inverse, symmetrize, Mat, Vector};
use crate::math::{exp, log, normal_cdf, normal_quantile, pow, sqrt};
use crate::{Error, Result};

/// Uniform on the open interval `(0, 1)`.
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn bernoulli<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> bool {
    uniform(rng) < p
}

/// Standard normal by Marsaglia's polar method (the second deviate is
/// discarded so the generator stays stateless).
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * uniform(rng) - 1.0;
        let v = 2.0 * uniform(rng) - 1.0;
        let s = u * u + v * v;
        if s < 1.0 && s > 0.0 {
            return u * sqrt(-2.0 * log(s) / s);
        }
    }
}

pub fn normal<R: RngCore + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    mean + sd * standard_normal(rng)
}

/// Multivariate normal draw via the Cholesky factor of `cov`.
pub fn sample_mvn<R: RngCore + ?Sized>(mean: &Vector, cov: &Mat, rng: &mut R) -> Result<Vector> {
    if cov.nrows() != mean.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "mean has length {} but covariance is {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = cholesky_strict(cov)?;
    let z = Vector::from_fn(mean.len(), |_, _| standard_normal(rng));
    Ok(mean + chol.l() * z)
}

/// Which half-line a truncated normal is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `(0, ∞)`
    Positive,
    /// `(-∞, 0]`
    Negative,
    None,
}

/// Standard normal truncated to `(lower, ∞)`.
///
/// Plain rejection when `lower` is below 0.25, otherwise Robert's
/// exponential-proposal rejection, which stays efficient arbitrarily far in
/// the tail.
pub fn standard_normal_above<R: RngCore + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower < 0.25 {
        loop {
            let z = standard_normal(rng);
            if z > lower {
                return z;
            }
        }
    }
    let rate = 0.5 * (lower + sqrt(lower * lower + 4.0));
    loop {
        let z = lower - log(uniform(rng)) / rate;
        let d = z - rate;
        if uniform(rng) <= exp(-0.5 * d * d) {
            return z;
        }
    }
}

/// `N(mu, sigma²)` restricted to the half line given by `side`.
pub fn sample_truncated_normal<R: RngCore + ?Sized>(
    mu: f64,
    sigma: f64,
    side: Side,
    rng: &mut R,
) -> f64 {
    debug_assert!(sigma > 0.0);
    match side {
        Side::None => normal(mu, sigma, rng),
        Side::Positive => {
            let x = mu + sigma * standard_normal_above(-mu / sigma, rng);
            // Guard against rounding to exactly zero when mu is far negative.
            if x > 0.0 {
                x
            } else {
                f64::MIN_POSITIVE
            }
        }
        Side::Negative => {
            let x = mu - sigma * standard_normal_above(mu / sigma, rng);
            x.min(0.0)
        }
    }
}

/// `N(mu, sigma²)` truncated to `[lower, upper]` by inverse CDF; used only
/// for bounded intervals in tests and simulation.
pub fn sample_interval_normal<R: RngCore + ?Sized>(
    mu: f64,
    sigma: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> f64 {
    let a = normal_cdf((lower - mu) / sigma);
    let b = normal_cdf((upper - mu) / sigma);
    let u = a + (b - a) * uniform(rng);
    (mu + sigma * normal_quantile(u)).clamp(lower, upper)
}

/// Gamma with the given shape and rate (Marsaglia–Tsang).
pub fn sample_gamma<R: RngCore + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0);
    if shape < 1.0 {
        let g = sample_gamma(shape + 1.0, 1.0, rng);
        return g * pow(uniform(rng), 1.0 / shape) / rate;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / sqrt(9.0 * d);
    loop {
        let mut x;
        let mut v;
        loop {
            x = standard_normal(rng);
            v = 1.0 + c * x;
            if v > 0.0 {
                break;
            }
        }
        v = v * v * v;
        let u = uniform(rng);
        if u < 1.0 - 0.0331 * x * x * x * x || log(u) < 0.5 * x * x + d * (1.0 - v + log(v)) {
            return d * v / rate;
        }
    }
}

/// Inverse gamma: the reciprocal of a `Gamma(shape, rate)` draw.
pub fn sample_inv_gamma<R: RngCore + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    1.0 / sample_gamma(shape, rate, rng)
}

pub fn sample_chi_squared<R: RngCore + ?Sized>(df: f64, rng: &mut R) -> f64 {
    sample_gamma(0.5 * df, 0.5, rng)
}

pub fn sample_beta<R: RngCore + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let x = sample_gamma(a, 1.0, rng);
    let y = sample_gamma(b, 1.0, rng);
    let s = x + y;
    if s > 0.0 {
        (x / s).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
    } else {
        // Both gammas underflowed (tiny shapes): fall back to a coin flip
        // weighted by the prior mean.
        if uniform(rng) < a / (a + b) {
            1.0 - f64::EPSILON
        } else {
            f64::MIN_POSITIVE
        }
    }
}

/// Inverse Wishart with density `∝ |Σ|^{-(df+p+1)/2} exp(-tr(scale Σ⁻¹)/2)`,
/// drawn by inverting a Bartlett-decomposed Wishart(df, scale⁻¹).
pub fn sample_inv_wishart<R: RngCore + ?Sized>(df: f64, scale: &Mat, rng: &mut R) -> Result<Mat> {
    let p = scale.nrows();
    if df <= p as f64 - 1.0 {
        return Err(Error::DfTooSmall { df, dim: p });
    }
    let scale_inv = spd_inverse(scale)?;
    let l = cholesky_strict(&scale_inv)?.unpack();
    let mut a = Mat::zeros(p, p);
    for i in 0..p {
        a[(i, i)] = sqrt(sample_chi_squared(df - i as f64, rng));
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let la = l * a;
    let wishart = &la * la.transpose();
    let mut sigma = spd_inverse(&wishart)?;
    symmetrize(&mut sigma);
    Ok(sigma)
}

/// Index drawn with probability proportional to `weights`.
pub fn sample_categorical<R: RngCore + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = uniform(rng) * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Convenience: `n` iid standard normals.
pub fn standard_normals<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;
    use alloc::vec;

    const N: usize = 100_000;

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    fn rng(seed: u64) -> crate::ChainRng {
        RngHandle::raw(seed, 17).rng()
    }

    #[test]
    fn mvn_moments_and_errors() {
        let mut r = rng(1);
        let m = Vector::zeros(2);
        let cov = Mat::identity(2, 2);
        let mut acc = [0.0; 2];
        for _ in 0..N {
            let x = sample_mvn(&m, &cov, &mut r).unwrap();
            acc[0] += x[0];
            acc[1] += x[1];
        }
        assert!((acc[0] / N as f64).abs() < 0.02);
        assert!((acc[1] / N as f64).abs() < 0.02);
        assert_eq!(
            sample_mvn(&m, &Mat::zeros(2, 2), &mut r).err(),
            Some(Error::NotPositiveDefinite)
        );
        let a = sample_mvn(&m, &cov, &mut rng(9)).unwrap();
        let b = sample_mvn(&m, &cov, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_normal_mean() {
        let mut r = rng(2);
        let xs: Vec<f64> = (0..N)
            .map(|_| sample_truncated_normal(0.0, 1.0, Side::Positive, &mut r))
            .collect();
        let expect = sqrt(2.0 / core::f64::consts::PI);
        assert!((mean(&xs) - expect).abs() < 0.01);
        assert!(xs.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn truncated_normal_far_tails() {
        let mut r = rng(3);
        for &mu in &[-10.0, -40.0, -1e3] {
            for _ in 0..2000 {
                let x = sample_truncated_normal(mu, 1.0, Side::Positive, &mut r);
                assert!(x > 0.0 && x.is_finite());
                let y = sample_truncated_normal(-mu, 1.0, Side::Negative, &mut r);
                assert!(y <= 0.0 && y.is_finite());
            }
        }
        // Tail mean of TN+(-10, 1) is about 1/10.
        let xs: Vec<f64> = (0..N)
            .map(|_| sample_truncated_normal(-10.0, 1.0, Side::Positive, &mut r))
            .collect();
        assert!((mean(&xs) - 0.098_04).abs() < 0.002);
    }

    #[test]
    fn untruncated_side_is_plain_normal() {
        let mut a = rng(4);
        let mut b = rng(4);
        assert_eq!(
            sample_truncated_normal(1.5, 2.0, Side::None, &mut a),
            normal(1.5, 2.0, &mut b)
        );
    }

    #[test]
    fn inverse_gamma_mean_and_support() {
        let mut r = rng(5);
        let xs: Vec<f64> = (0..N).map(|_| sample_inv_gamma(3.0, 2.0, &mut r)).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        assert!((mean(&xs) - 1.0).abs() < 0.02);
        let a = sample_inv_gamma(0.1, 0.1, &mut rng(6));
        let b = sample_inv_gamma(0.1, 0.1, &mut rng(6));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn inverse_wishart_scalar_mean() {
        let mut r = rng(7);
        let scale = Mat::from_element(1, 1, 3.0);
        let mut s = 0.0;
        for _ in 0..N {
            let w = sample_inv_wishart(5.0, &scale, &mut r).unwrap();
            assert!(w[(0, 0)] > 0.0);
            s += w[(0, 0)];
        }
        assert!((s / N as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn inverse_wishart_matrix_mean_and_pd() {
        let mut r = rng(8);
        let scale = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let df = 8.0;
        let mut acc = Mat::zeros(2, 2);
        let n = 50_000;
        for _ in 0..n {
            let w = sample_inv_wishart(df, &scale, &mut r).unwrap();
            assert!(crate::linalg::is_spd(&w));
            acc += w;
        }
        let expect = &scale / (df - 3.0);
        assert!(((acc / n as f64) - expect).amax() < 0.02);
    }

    #[test]
    fn inverse_wishart_df_precondition() {
        let mut r = rng(9);
        let err = sample_inv_wishart(1.0, &Mat::identity(2, 2), &mut r).err();
        assert_eq!(err, Some(Error::DfTooSmall { df: 1.0, dim: 2 }));
    }

    #[test]
    fn beta_means() {
        let mut r = rng(10);
        let xs: Vec<f64> = (0..N).map(|_| sample_beta(1.0, 1.0, &mut r)).collect();
        assert!((mean(&xs) - 0.5).abs() < 0.005);
        let ys: Vec<f64> = (0..N).map(|_| sample_beta(0.25, 1.0, &mut r)).collect();
        assert!((mean(&ys) - 0.2).abs() < 0.005);
        assert!(xs.iter().chain(ys.iter()).all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn categorical_frequencies() {
        let mut r = rng(11);
        let w = vec![0.3, 0.4, 0.2, 0.07, 0.03];
        let mut counts = [0usize; 5];
        for _ in 0..N {
            counts[sample_categorical(&w, &mut r)] += 1;
        }
        for k in 0..5 {
            assert!((counts[k] as f64 / N as f64 - w[k]).abs() < 0.01);
        }
    }

    #[test]
    fn interval_normal_stays_inside() {
        let mut r = rng(12);
        for _ in 0..1000 {
            let x = sample_interval_normal(0.3, 1.2, -0.5, 0.1, &mut r);
            assert!((-0.5..=0.1).contains(&x));
        }
    }
}
