//! Conjugate Gaussian regression blocks shared by the sweeps.

use alloc::vec::Vec;
use rand_core::RngCore;

use crate::dist::{sample_inv_gamma, sample_truncated_normal, uniform, Side};
use crate::linalg::{cholesky_jittered, draw_from_precision, Mat, Vector};
use crate::math::{normal_cdf, sqrt};
use crate::Result;

/// Sufficient statistics of `y = D θ + e`, `e ~ N(0, s)` with a diagonal
/// Gaussian prior on `θ`.
#[derive(Debug, Clone)]
pub(crate) struct Regression {
    pub precision: Mat,
    pub canonical: Vector,
    /// `Σ y² / s`
    pub yy: f64,
    pub n: usize,
}

impl Regression {
    pub fn new(prior_precision: &[f64]) -> Self {
        let k = prior_precision.len();
        let mut precision = Mat::zeros(k, k);
        for (i, &p) in prior_precision.iter().enumerate() {
            precision[(i, i)] = p;
        }
        Self {
            precision,
            canonical: Vector::zeros(k),
            yy: 0.0,
            n: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: &[f64], y: f64, inv_s: f64) {
        let k = x.len();
        for a in 0..k {
            let xa = x[a] * inv_s;
            if xa == 0.0 {
                continue;
            }
            self.canonical[a] += xa * y;
            for b in a..k {
                self.precision[(a, b)] += xa * x[b];
            }
        }
        self.yy += y * y * inv_s;
        self.n += 1;
    }

    /// Mirrors the upper triangle accumulated by [`add`](Self::add).
    pub fn finish(mut self) -> Self {
        let k = self.precision.nrows();
        for a in 0..k {
            for b in (a + 1)..k {
                self.precision[(b, a)] = self.precision[(a, b)];
            }
        }
        self
    }
}

/// Draws `θ ~ N(P⁻¹b, scale·P⁻¹)` restricted to `θ[trunc] > 0` when
/// `trunc` is set. The restricted coordinate is drawn from its marginal
/// half-line normal, then the rest from their Gaussian conditional.
pub(crate) fn draw_block<R: RngCore + ?Sized>(
    precision: &Mat,
    canonical: &Vector,
    scale: f64,
    trunc: Option<usize>,
    rng: &mut R,
    block: &'static str,
) -> Result<Vector> {
    let sd = sqrt(scale);
    let Some(l) = trunc else {
        return Ok(draw_from_precision(precision.clone(), canonical, sd, rng, block)?.0);
    };
    let k = precision.nrows();
    let chol = cholesky_jittered(precision.clone(), block)?;
    let mean = chol.solve(canonical);
    let mut e = Vector::zeros(k);
    e[l] = 1.0;
    let var_l = chol.solve(&e)[l] * scale;
    let lam = sample_truncated_normal(mean[l], sqrt(var_l), Side::Positive, rng);
    let mut out = Vector::zeros(k);
    out[l] = lam;
    if k == 1 {
        return Ok(out);
    }
    let rest: Vec<usize> = (0..k).filter(|&i| i != l).collect();
    let sub = Mat::from_fn(k - 1, k - 1, |a, b| precision[(rest[a], rest[b])]);
    let rhs = Vector::from_fn(k - 1, |a, _| canonical[rest[a]] - precision[(rest[a], l)] * lam);
    let (draw, _) = draw_from_precision(sub, &rhs, sd, rng, block)?;
    for (a, &i) in rest.iter().enumerate() {
        out[i] = draw[a];
    }
    Ok(out)
}

pub(crate) struct GammaDraw {
    pub gamma2: f64,
    pub theta_tilde: Vector,
}

/// Working-parameter update of the probit marginal augmentation.
///
/// With `ỹ* = γ_old·ỹ` and prior `θ̃ | γ² ~ N(0, γ²A)` (coordinate `trunc`
/// restricted to be positive), draws `γ²` from `p(γ² | ỹ*)` by rejection
/// against `IG(ν/2 + n/2, ν/2 + R/2)` with acceptance probability
/// `Φ(θ̂_trunc / (γ·sqrt(V_trunc)))`. After `max_tries` rejections it falls
/// back to `γ² | θ̃_current, ỹ*`.
pub(crate) fn draw_working_scale<R: RngCore + ?Sized>(
    reg: &Regression,
    working_df: f64,
    trunc: Option<usize>,
    theta_current: &Vector,
    max_tries: usize,
    rng: &mut R,
    block: &'static str,
) -> Result<GammaDraw> {
    let chol = cholesky_jittered(reg.precision.clone(), block)?;
    let mean = chol.solve(&reg.canonical);
    let resid = (reg.yy - mean.dot(&reg.canonical)).max(0.0);
    let shape = 0.5 * (working_df + reg.n as f64);
    let rate = 0.5 * (working_df + resid);
    let accept_scale = trunc.map(|l| {
        let mut e = Vector::zeros(mean.len());
        e[l] = 1.0;
        (mean[l], sqrt(chol.solve(&e)[l]))
    });
    let mut gamma2 = None;
    for _ in 0..max_tries {
        let g2 = sample_inv_gamma(shape, rate, rng);
        match accept_scale {
            None => {
                gamma2 = Some(g2);
                break;
            }
            Some((m, v)) => {
                if uniform(rng) < normal_cdf(m / (sqrt(g2) * v)) {
                    gamma2 = Some(g2);
                    break;
                }
            }
        }
    }
    let gamma2 = match gamma2 {
        Some(g) => g,
        None => {
            // γ² | θ̃, ỹ*: the quadratic form of the current coefficients.
            let t = theta_current;
            let pt = &reg.precision * t;
            let q = (reg.yy - 2.0 * t.dot(&reg.canonical) + t.dot(&pt)).max(0.0);
            sample_inv_gamma(
                0.5 * (working_df + (reg.n + t.len()) as f64),
                0.5 * (working_df + q),
                rng,
            )
        }
    };
    let theta_tilde = draw_block(&reg.precision, &reg.canonical, gamma2, trunc, rng, block)?;
    Ok(GammaDraw {
        gamma2,
        theta_tilde,
    })
}
