//! Scalar special functions.
//!
//! Everything goes through `libm` so that results are bit-identical across
//! platforms, which the reproducibility contract of the samplers relies on.

pub use libm::{exp, fabs as abs, lgamma, log, log1p, pow, sqrt};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x - 0.5 * LN_2PI)
}

/// `ln Φ(x)`, accurate in the far lower tail where `Φ` underflows.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > -20.0 {
        return log(normal_cdf(x));
    }
    // Asymptotic expansion of the Mills ratio.
    let z2 = 1.0 / (x * x);
    let series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2 + 105.0 * z2 * z2 * z2 * z2;
    -0.5 * x * x - log(-x) - 0.5 * LN_2PI + log(series)
}

/// Log density of `N(mean, var)` at `x`.
pub fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (LN_2PI + log(var) + r * r / var)
}

/// Inverse of the standard normal distribution function.
///
/// Acklam's rational approximation followed by one Halley step, giving
/// close to full double precision on `(0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.024_25;
    let x = if p < p_low {
        let q = sqrt(-2.0 * log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * sqrt(2.0 * core::f64::consts::PI) * exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Log density of Student's t with `df` degrees of freedom (unit scale).
pub fn student_t_ln_pdf(x: f64, df: f64) -> f64 {
    lgamma(0.5 * (df + 1.0))
        - lgamma(0.5 * df)
        - 0.5 * log(df * core::f64::consts::PI)
        - 0.5 * (df + 1.0) * log1p(x * x / df)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integral of the normal density from -40 to x.
    fn phi_by_quadrature(x: f64) -> f64 {
        let lo = -40.0;
        let n = 200_000;
        let h = (x - lo) / n as f64;
        let mut s = normal_pdf(lo) + normal_pdf(x);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(lo + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        let q = phi_by_quadrature(1.959_964);
        assert!((q - 0.975).abs() < 1e-6);
        assert!((normal_cdf(1.959_964) - q).abs() < 1e-12);
        for &x in &[-3.3, -1.0, 0.25, 2.7] {
            assert!((normal_cdf(x) - phi_by_quadrature(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cdf_symmetry() {
        for k in 0..200 {
            let x = -8.0 + 0.08 * k as f64;
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn log_cdf_is_continuous_at_switch() {
        let a = log_normal_cdf(-20.0 + 1e-9);
        let b = log_normal_cdf(-20.0 - 1e-9);
        assert!((a - b).abs() < 1e-6);
        assert!(log_normal_cdf(-60.0).is_finite());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.02, 0.3, 0.5, 0.77, 0.975, 0.9999] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14 + 1e-12 * p, "p = {p}");
        }
    }
}
