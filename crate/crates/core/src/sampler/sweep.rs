//! Conditional updates shared by the expanded schemes, and the PX-HC /
//! AC-PX-HC / PX²-HC sweep.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand_core::RngCore;

use super::block::{draw_block, draw_working_scale, Regression};
use super::state::{side_of, ExpandedState, LatentState};
use super::{Fixed, SamplerConfig, Scheme};
use crate::dist::{
    bernoulli, normal, sample_beta, sample_inv_gamma, sample_inv_wishart, sample_truncated_normal,
    Side,
};
use crate::linalg::{draw_from_precision, spd_inverse, Mat, Vector};
use crate::math::{exp, log, log_normal_cdf, sqrt};
use crate::model::{ModelData, PriorConfig};
use crate::{Error, Result};

/// Rejection attempts for the working-scale draw before falling back.
const GAMMA_TRIES: usize = 100;

/// Read-only inputs of a sweep.
#[derive(Debug)]
pub(crate) struct Ctx<'a> {
    pub data: &'a ModelData,
    pub priors: &'a PriorConfig,
    pub fixed: &'a Fixed,
    pub scheme: Scheme,
    pub loading_scale: Vec<f64>,
    pub alpha_scale: Vec<f64>,
}

impl<'a> Ctx<'a> {
    pub fn new(data: &'a ModelData, priors: &'a PriorConfig, cfg: &'a SamplerConfig) -> Result<Self> {
        let d = data.dims;
        let fill = |v: &Vec<f64>, n: usize, what: &str| -> Result<Vec<f64>> {
            if v.is_empty() {
                Ok(vec![1.0; n])
            } else if v.len() == n {
                Ok(v.clone())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "{what} has length {}, expected {n}",
                    v.len()
                )))
            }
        };
        Ok(Self {
            data,
            priors,
            fixed: &cfg.fixed,
            scheme: cfg.scheme,
            loading_scale: fill(&cfg.loading_scale, d.j, "loading_scale")?,
            alpha_scale: fill(&cfg.alpha_scale, d.p2, "alpha_scale")?,
        })
    }

    #[inline]
    fn nb(&self) -> usize {
        self.data.dims.j - self.data.dims.j1
    }

    /// Response of phenotype `j` at row `r`: `y` or the probit latent `ỹ`.
    #[inline]
    pub fn v(&self, l: &LatentState, r: usize, j: usize) -> f64 {
        let j1 = self.data.dims.j1;
        if j < j1 {
            self.data.y(r, j)
        } else {
            l.y_tilde[r * self.nb() + j - j1]
        }
    }

    #[inline]
    pub fn noise(&self, s: &ExpandedState, j: usize) -> f64 {
        if j < self.data.dims.j1 {
            s.sigma2[j]
        } else {
            1.0
        }
    }

    /// Effective loading `g_j · lambda*_j`.
    #[inline]
    pub fn coef(&self, s: &ExpandedState, j: usize) -> f64 {
        self.loading_scale[j] * s.lambda_star[j]
    }

    #[inline]
    fn wb(&self, s: &ExpandedState, r: usize, j: usize) -> f64 {
        dot(self.data.w_row(r), &s.beta[j])
    }

    /// Mean of phenotype `j` at row `r` without the loading term.
    #[inline]
    pub fn mean_wo_loading(&self, s: &ExpandedState, l: &LatentState, r: usize, j: usize) -> f64 {
        let i = self.data.row_ind[r];
        let b = l.b_star[i * self.data.dims.j + j];
        let base = self.wb(s, r, j) + s.xi[j] * b;
        if l.centered {
            base
        } else {
            base + s.beta0_star[j]
        }
    }

    #[inline]
    pub fn mean(&self, s: &ExpandedState, l: &LatentState, r: usize, j: usize) -> f64 {
        self.mean_wo_loading(s, l, r, j) + self.coef(s, j) * l.u_star[r]
    }

    /// `X̃'alpha*` with the path multipliers applied.
    #[inline]
    pub fn x_alpha(&self, s: &ExpandedState, r: usize) -> f64 {
        self.data
            .x_row(r)
            .iter()
            .zip(&s.alpha_star)
            .zip(&self.alpha_scale)
            .map(|((x, a), g)| x * a * g)
            .sum()
    }

    /// `Z'a* + Q'd*` at row `r`.
    #[inline]
    pub fn random_part(&self, l: &LatentState, r: usize) -> f64 {
        let d = self.data.dims;
        let c = self.data.row_fam[r];
        let i = self.data.row_ind[r];
        dot(self.data.z_row(r), &l.a_star[c * d.q1..(c + 1) * d.q1])
            + dot(self.data.q_row(r), &l.d_star[i * d.q2..(i + 1) * d.q2])
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One PX-HC / AC-PX-HC / PX²-HC iteration.
pub(crate) fn sweep<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &mut ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) -> Result<()> {
    let dims = ctx.data.dims;
    update_y_tilde(ctx, s, l, rng);
    for j in 0..dims.j {
        if ctx.priors.slab(j).is_some() && ctx.fixed.lambda_star(j).is_none() {
            update_spike_slab(ctx, j, s, l, rng);
        }
        update_coefficients_hc(ctx, j, s, l, rng)?;
        if j < dims.j1 {
            update_sigma2(ctx, j, s, l, rng);
        }
        update_beta0_star(ctx, j, s, l, rng);
        update_eta2(ctx, j, s, l, rng);
    }
    update_alpha_psi(ctx, s, l, rng)?;
    update_covariances(ctx, s, l, rng)?;
    update_u(ctx, s, l, rng);
    update_b(ctx, s, l, rng);
    update_family_blocks(ctx, s, l, rng)?;
    Ok(())
}

/// Albert–Chib step: `ỹ ~ TN±(mean, 1)` on the side of the observed value.
pub(crate) fn update_y_tilde<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) {
    let dims = ctx.data.dims;
    let nb = ctx.nb();
    for r in 0..ctx.data.n_rows {
        for j in dims.j1..dims.j {
            let mu = ctx.mean(s, l, r, j);
            l.y_tilde[r * nb + j - dims.j1] =
                sample_truncated_normal(mu, 1.0, side_of(ctx.data.y(r, j)), rng);
        }
    }
}

/// Log of the slab-to-spike marginal likelihood ratio `m1/m0` for a loading
/// with prior `TN+(0, 1)`, given `Σx²/s` and `Σxr/s`.
pub fn log_slab_ratio(sxx: f64, sxr: f64) -> f64 {
    let prec = sxx + 1.0;
    let v = 1.0 / prec;
    let m = v * sxr;
    core::f64::consts::LN_2 + 0.5 * log(v) + 0.5 * m * m / v + log_normal_cdf(m / sqrt(v))
}

/// Collapsed update of `(omega_j, lambda*_j)` followed by `pi_j`.
pub(crate) fn update_spike_slab<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    j: usize,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) {
    let Some(prior) = ctx.priors.slab(j) else {
        return;
    };
    let g = ctx.loading_scale[j];
    let inv_s = 1.0 / ctx.noise(s, j);
    let (mut sxx, mut sxr) = (0.0, 0.0);
    for r in 0..ctx.data.n_rows {
        let x = g * l.u_star[r];
        let res = ctx.v(l, r, j) - ctx.mean_wo_loading(s, l, r, j);
        sxx += x * x;
        sxr += x * res;
    }
    sxx *= inv_s;
    sxr *= inv_s;
    let pi = s.pi[j];
    let log_odds = log(pi) - log(1.0 - pi) + log_slab_ratio(sxx, sxr);
    let p1 = if log_odds > 0.0 {
        1.0 / (1.0 + exp(-log_odds))
    } else {
        let e = exp(log_odds);
        e / (1.0 + e)
    };
    s.omega[j] = bernoulli(p1, rng);
    if s.omega[j] {
        let prec = sxx + 1.0;
        s.lambda_star[j] = sample_truncated_normal(sxr / prec, sqrt(1.0 / prec), Side::Positive, rng);
    } else {
        s.lambda_star[j] = 0.0;
    }
    let w = if s.omega[j] { 1.0 } else { 0.0 };
    s.pi[j] = sample_beta(prior.a + w, prior.b + 1.0 - w, rng);
}

/// Joint update of `(beta_j, lambda*_j, xi_j)`, with the working-scale
/// step for binary phenotypes under PX²-HC.
fn update_coefficients_hc<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    j: usize,
    s: &mut ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) -> Result<()> {
    let dims = ctx.data.dims;
    let p1 = dims.p1;
    let beta_free = ctx.fixed.beta(j).is_none();
    let lam_free = ctx.fixed.lambda_star(j).is_none() && s.omega[j];
    let xi_free = ctx.fixed.xi(j).is_none();
    let nw = if beta_free { p1 } else { 0 };
    let k = nw + lam_free as usize + xi_free as usize;
    if k == 0 {
        return Ok(());
    }
    let lam_idx = if lam_free { Some(nw) } else { None };
    let xi_idx = if xi_free { Some(nw + lam_free as usize) } else { None };

    let mut prior = vec![1.0 / ctx.priors.fixed_effect_var; nw];
    if lam_free {
        prior.push(1.0);
    }
    if xi_free {
        prior.push(1.0);
    }
    let g = ctx.loading_scale[j];
    let inv_s = 1.0 / ctx.noise(s, j);
    let mut reg = Regression::new(&prior);
    let mut x = vec![0.0; k];
    let mut fixed_nonzero = false;
    if !beta_free && s.beta[j].iter().any(|&b| b != 0.0) {
        fixed_nonzero = true;
    }
    if !lam_free && s.lambda_star[j] != 0.0 {
        fixed_nonzero = true;
    }
    if !xi_free && s.xi[j] != 0.0 {
        fixed_nonzero = true;
    }
    for r in 0..ctx.data.n_rows {
        let i = ctx.data.row_ind[r];
        let b = l.b_star[i * dims.j + j];
        let mut offset = 0.0;
        if beta_free {
            x[..p1].copy_from_slice(ctx.data.w_row(r));
        } else {
            offset += ctx.wb(s, r, j);
        }
        match lam_idx {
            Some(li) => x[li] = g * l.u_star[r],
            None => offset += g * s.lambda_star[j] * l.u_star[r],
        }
        match xi_idx {
            Some(xi) => x[xi] = b,
            None => offset += s.xi[j] * b,
        }
        reg.add(&x, ctx.v(l, r, j) - offset, inv_s);
    }
    let mut reg = reg.finish();

    let binary = j >= dims.j1;
    let theta = if binary && ctx.scheme == Scheme::Px2Hc && !fixed_nonzero {
        let nb = ctx.nb();
        let jb = j - dims.j1;
        let gamma_old = sqrt(sample_inv_gamma(
            0.5 * ctx.priors.working_df,
            0.5 * ctx.priors.working_df,
            rng,
        ));
        reg.canonical *= gamma_old;
        reg.yy *= gamma_old * gamma_old;
        let mut current = Vector::zeros(k);
        if beta_free {
            for (a, &b) in s.beta[j].iter().enumerate() {
                current[a] = b;
            }
        }
        if let Some(li) = lam_idx {
            current[li] = s.lambda_star[j];
        }
        if let Some(xi) = xi_idx {
            current[xi] = s.xi[j];
        }
        current *= gamma_old;
        let draw = draw_working_scale(&reg, ctx.priors.working_df, lam_idx, &current, GAMMA_TRIES, rng, "coefficients")?;
        let gamma_new = sqrt(draw.gamma2);
        s.gamma2[jb] = draw.gamma2;
        let ratio = gamma_old / gamma_new;
        for r in 0..ctx.data.n_rows {
            l.y_tilde[r * nb + jb] *= ratio;
        }
        draw.theta_tilde / gamma_new
    } else {
        draw_block(&reg.precision, &reg.canonical, 1.0, lam_idx, rng, "coefficients")?
    };
    if beta_free {
        for a in 0..p1 {
            s.beta[j][a] = theta[a];
        }
    }
    if let Some(li) = lam_idx {
        s.lambda_star[j] = theta[li];
    }
    if let Some(xi) = xi_idx {
        s.xi[j] = theta[xi];
    }
    Ok(())
}

pub(crate) fn update_sigma2<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    j: usize,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) {
    if ctx.fixed.sigma2(j).is_some() {
        return;
    }
    let mut ssr = 0.0;
    for r in 0..ctx.data.n_rows {
        let e = ctx.v(l, r, j) - ctx.mean(s, l, r, j);
        ssr += e * e;
    }
    s.sigma2[j] = sample_inv_gamma(
        ctx.priors.sigma2_shape + 0.5 * ctx.data.n_rows as f64,
        ctx.priors.sigma2_rate + 0.5 * ssr,
        rng,
    );
}

/// Mean of the centred random effects `b*_{·j} ~ N(beta0*_j, eta²_j)`.
fn update_beta0_star<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    j: usize,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) {
    if ctx.fixed.beta0_star(j).is_some() {
        return;
    }
    let jj = ctx.data.dims.j;
    let n = ctx.data.n_ind();
    let sum: f64 = (0..n).map(|i| l.b_star[i * jj + j]).sum();
    let prec = 1.0 / ctx.priors.fixed_effect_var + n as f64 / s.eta2[j];
    let mean = sum / s.eta2[j] / prec;
    s.beta0_star[j] = normal(mean, sqrt(1.0 / prec), rng);
}

pub(crate) fn update_eta2<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    j: usize,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) {
    if ctx.fixed.eta2(j).is_some() {
        return;
    }
    let jj = ctx.data.dims.j;
    let n = ctx.data.n_ind();
    let centre = if l.centered { s.beta0_star[j] } else { 0.0 };
    let ss: f64 = (0..n)
        .map(|i| {
            let e = l.b_star[i * jj + j] - centre;
            e * e
        })
        .sum();
    let half = 0.5 * ctx.priors.v2;
    s.eta2[j] = sample_inv_gamma(half + 0.5 * n as f64, half + 0.5 * ss, rng);
}

/// Joint normal–inverse-gamma update of `(alpha*, psi²)` given `U*`, with
/// `alpha* | psi² ~ N(0, psi²·alpha_var·I)`.
pub(crate) fn update_alpha_psi<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) -> Result<()> {
    let p2 = ctx.data.dims.p2;
    let alpha_free = ctx.fixed.alpha_star.is_none() && p2 > 0;
    let psi_free = ctx.fixed.psi2.is_none() && ctx.scheme != Scheme::Sg;
    if !alpha_free && !psi_free {
        return Ok(());
    }
    let n = ctx.data.n_rows;
    let half = 0.5 * ctx.priors.v1;
    if !alpha_free {
        let mut ss = 0.0;
        for r in 0..n {
            let e = l.u_star[r] - ctx.x_alpha(s, r) - ctx.random_part(l, r);
            ss += e * e;
        }
        let aa: f64 = s.alpha_star.iter().map(|a| a * a).sum::<f64>() / ctx.priors.alpha_var;
        s.psi2 = sample_inv_gamma(half + 0.5 * (n + p2) as f64, half + 0.5 * (ss + aa), rng);
        return Ok(());
    }
    let mut reg = Regression::new(&vec![1.0 / ctx.priors.alpha_var; p2]);
    let mut x = vec![0.0; p2];
    for r in 0..n {
        for (k, (xv, g)) in ctx.data.x_row(r).iter().zip(&ctx.alpha_scale).enumerate() {
            x[k] = xv * g;
        }
        reg.add(&x, l.u_star[r] - ctx.random_part(l, r), 1.0);
    }
    let reg = reg.finish();
    if psi_free {
        let chol = crate::linalg::cholesky_jittered(reg.precision.clone(), "alpha")?;
        let mean = chol.solve(&reg.canonical);
        let resid = (reg.yy - mean.dot(&reg.canonical)).max(0.0);
        s.psi2 = sample_inv_gamma(half + 0.5 * n as f64, half + 0.5 * resid, rng);
    }
    let (draw, _) = draw_from_precision(reg.precision, &reg.canonical, sqrt(s.psi2), rng, "alpha")?;
    s.alpha_star = draw.iter().copied().collect();
    Ok(())
}

/// Inverse-Wishart updates of `Sigma*_a` and `Sigma*_d`.
pub(crate) fn update_covariances<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) -> Result<()> {
    let d = ctx.data.dims;
    let pr = ctx.priors;
    if d.q1 > 0 && ctx.fixed.sigma_a_star.is_none() {
        let scale = scatter(&l.a_star, d.q1, pr.wishart_scale_a);
        let df = pr.df_a(d.q1) + ctx.data.n_fam() as f64;
        s.sigma_a_star = sample_inv_wishart(df, &scale, rng).map_err(|e| breakdown("SigmaA", e))?;
    }
    if d.q2 > 0 && ctx.fixed.sigma_d_star.is_none() {
        let scale = scatter(&l.d_star, d.q2, pr.wishart_scale_d);
        let df = pr.df_d(d.q2) + ctx.data.n_ind() as f64;
        s.sigma_d_star = sample_inv_wishart(df, &scale, rng).map_err(|e| breakdown("SigmaD", e))?;
    }
    Ok(())
}

fn breakdown(block: &'static str, e: Error) -> Error {
    Error::NumericalBreakdown {
        block,
        detail: format!("{e}"),
    }
}

/// `c·I + Σ v v'` over the consecutive `q`-vectors in `vals`.
fn scatter(vals: &[f64], q: usize, c: f64) -> Mat {
    let mut m = Mat::identity(q, q) * c;
    for v in vals.chunks_exact(q) {
        for a in 0..q {
            for b in 0..q {
                m[(a, b)] += v[a] * v[b];
            }
        }
    }
    m
}

/// Latent score `U*` at each row given everything else.
pub(crate) fn update_u<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) {
    let d = ctx.data.dims;
    let coefs: Vec<f64> = (0..d.j).map(|j| ctx.coef(s, j)).collect();
    let inv_noise: Vec<f64> = (0..d.j).map(|j| 1.0 / ctx.noise(s, j)).collect();
    let base_prec = 1.0 / s.psi2;
    for r in 0..ctx.data.n_rows {
        let prior_mean = ctx.x_alpha(s, r) + ctx.random_part(l, r);
        let mut prec = base_prec;
        let mut canon = prior_mean * base_prec;
        for j in 0..d.j {
            let c = coefs[j];
            if c == 0.0 {
                continue;
            }
            let res = ctx.v(l, r, j) - ctx.mean_wo_loading(s, l, r, j);
            prec += c * c * inv_noise[j];
            canon += c * res * inv_noise[j];
        }
        l.u_star[r] = normal(canon / prec, sqrt(1.0 / prec), rng);
    }
}

/// Subject random effects `b*_{ij}` given everything else.
pub(crate) fn update_b<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) {
    let d = ctx.data.dims;
    for (i, &(start, end)) in ctx.data.ind_rows.iter().enumerate() {
        for j in 0..d.j {
            let xi = s.xi[j];
            let inv_s = 1.0 / ctx.noise(s, j);
            let c = ctx.coef(s, j);
            let centre = if l.centered { s.beta0_star[j] } else { 0.0 };
            let mut sum = 0.0;
            for r in start..end {
                let mut res = ctx.v(l, r, j) - ctx.wb(s, r, j) - c * l.u_star[r];
                if !l.centered {
                    res -= s.beta0_star[j];
                }
                sum += res;
            }
            let prec = 1.0 / s.eta2[j] + (end - start) as f64 * xi * xi * inv_s;
            let canon = centre / s.eta2[j] + xi * sum * inv_s;
            l.b_star[i * d.j + j] = normal(canon / prec, sqrt(1.0 / prec), rng);
        }
    }
}

/// Joint draw of `(a*_c, d*_{c1}, …, d*_{cN})` for every family.
fn update_family_blocks<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) -> Result<()> {
    let d = ctx.data.dims;
    let (q1, q2) = (d.q1, d.q2);
    if q1 == 0 && q2 == 0 {
        return Ok(());
    }
    let inv_a = if q1 > 0 {
        spd_inverse(&s.sigma_a_star).map_err(|e| breakdown("SigmaA", e))?
    } else {
        Mat::zeros(0, 0)
    };
    let inv_d = if q2 > 0 {
        spd_inverse(&s.sigma_d_star).map_err(|e| breakdown("SigmaD", e))?
    } else {
        Mat::zeros(0, 0)
    };
    let inv_psi = 1.0 / s.psi2;
    for (c, &(i0, i1)) in ctx.data.fam_inds.iter().enumerate() {
        let n = i1 - i0;
        let k = q1 + n * q2;
        let mut prec = Mat::zeros(k, k);
        let mut canon = Vector::zeros(k);
        for a in 0..q1 {
            for b in 0..q1 {
                prec[(a, b)] = inv_a[(a, b)];
            }
        }
        for m in 0..n {
            let o = q1 + m * q2;
            for a in 0..q2 {
                for b in 0..q2 {
                    prec[(o + a, o + b)] = inv_d[(a, b)];
                }
            }
        }
        let (r0, r1) = ctx.data.fam_rows[c];
        for r in r0..r1 {
            let m = ctx.data.row_ind[r] - i0;
            let o = q1 + m * q2;
            let y = (l.u_star[r] - ctx.x_alpha(s, r)) * inv_psi;
            let z = ctx.data.z_row(r);
            let q = ctx.data.q_row(r);
            for a in 0..q1 {
                canon[a] += z[a] * y;
                for b in 0..q1 {
                    prec[(a, b)] += z[a] * z[b] * inv_psi;
                }
                for b in 0..q2 {
                    let v = z[a] * q[b] * inv_psi;
                    prec[(a, o + b)] += v;
                    prec[(o + b, a)] += v;
                }
            }
            for a in 0..q2 {
                canon[o + a] += q[a] * y;
                for b in 0..q2 {
                    prec[(o + a, o + b)] += q[a] * q[b] * inv_psi;
                }
            }
        }
        let (draw, _) = draw_from_precision(prec, &canon, 1.0, rng, "family effects")?;
        l.a_star[c * q1..(c + 1) * q1].copy_from_slice(&draw.as_slice()[..q1]);
        for m in 0..n {
            let i = i0 + m;
            let o = q1 + m * q2;
            l.d_star[i * q2..(i + 1) * q2].copy_from_slice(&draw.as_slice()[o..o + q2]);
        }
    }
    Ok(())
}
