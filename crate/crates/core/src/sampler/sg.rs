//! Standard Gibbs sampler on the original, non-centred model.
//!
//! The state container is shared with the expanded schemes: `psi² = 1`,
//! `xi = 1`, `beta0_star` is the intercept and `b*` has mean zero. Each
//! parameter is drawn from its own full conditional; the family and
//! subject random effects are drawn one level at a time.

use alloc::vec;
use rand_core::RngCore;

use super::block::{draw_block, Regression};
use super::state::{ExpandedState, LatentState};
use super::sweep::{
    dot, update_alpha_psi, update_b, update_covariances, update_eta2, update_sigma2,
    update_spike_slab, update_u, update_y_tilde, Ctx,
};
use crate::dist::{sample_truncated_normal, Side};
use crate::linalg::{draw_from_precision, spd_inverse, Mat, Vector};
use crate::math::sqrt;
use crate::{Error, Result};

pub(crate) fn sweep<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &mut ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) -> Result<()> {
    let dims = ctx.data.dims;
    update_y_tilde(ctx, s, l, rng);
    for j in 0..dims.j {
        update_fixed_effects(ctx, j, s, l, rng)?;
        if ctx.priors.slab(j).is_some() {
            if ctx.fixed.lambda_star(j).is_none() {
                update_spike_slab(ctx, j, s, l, rng);
            }
        } else {
            update_loading(ctx, j, s, l, rng);
        }
        if j < dims.j1 {
            update_sigma2(ctx, j, s, l, rng);
        }
        update_eta2(ctx, j, s, l, rng);
    }
    update_alpha_psi(ctx, s, l, rng)?;
    update_covariances(ctx, s, l, rng)?;
    update_u(ctx, s, l, rng);
    update_b(ctx, s, l, rng);
    update_family_effects(ctx, s, l, rng)?;
    update_subject_effects(ctx, s, l, rng)?;
    Ok(())
}

/// `(beta0_j, beta_j)` given the loading term and random effects.
fn update_fixed_effects<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    j: usize,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) -> Result<()> {
    let d = ctx.data.dims;
    let b0_free = ctx.fixed.beta0_star(j).is_none();
    let beta_free = ctx.fixed.beta(j).is_none();
    let k = b0_free as usize + if beta_free { d.p1 } else { 0 };
    if k == 0 {
        return Ok(());
    }
    let inv_s = 1.0 / ctx.noise(s, j);
    let c = ctx.coef(s, j);
    let mut reg = Regression::new(&vec![1.0 / ctx.priors.fixed_effect_var; k]);
    let mut x = vec![0.0; k];
    for r in 0..ctx.data.n_rows {
        let i = ctx.data.row_ind[r];
        let mut y = ctx.v(l, r, j) - c * l.u_star[r] - l.b_star[i * d.j + j];
        let mut o = 0;
        if b0_free {
            x[0] = 1.0;
            o = 1;
        } else {
            y -= s.beta0_star[j];
        }
        if beta_free {
            x[o..].copy_from_slice(ctx.data.w_row(r));
        } else {
            y -= dot(ctx.data.w_row(r), &s.beta[j]);
        }
        reg.add(&x, y, inv_s);
    }
    let reg = reg.finish();
    let theta = draw_block(&reg.precision, &reg.canonical, 1.0, None, rng, "fixed effects")?;
    let mut o = 0;
    if b0_free {
        s.beta0_star[j] = theta[0];
        o = 1;
    }
    if beta_free {
        for a in 0..d.p1 {
            s.beta[j][a] = theta[o + a];
        }
    }
    Ok(())
}

/// `lambda_j ~ TN+` given everything else, under the `TN+(0, 1)` prior.
fn update_loading<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    j: usize,
    s: &mut ExpandedState,
    l: &LatentState,
    rng: &mut R,
) {
    if ctx.fixed.lambda_star(j).is_some() {
        return;
    }
    let g = ctx.loading_scale[j];
    let inv_s = 1.0 / ctx.noise(s, j);
    let (mut sxx, mut sxr) = (0.0, 0.0);
    for r in 0..ctx.data.n_rows {
        let x = g * l.u_star[r];
        sxx += x * x;
        sxr += x * (ctx.v(l, r, j) - ctx.mean_wo_loading(s, l, r, j));
    }
    let prec = sxx * inv_s + 1.0;
    s.lambda_star[j] =
        sample_truncated_normal(sxr * inv_s / prec, sqrt(1.0 / prec), Side::Positive, rng);
}

/// `a_c` given the subject effects.
fn update_family_effects<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) -> Result<()> {
    let d = ctx.data.dims;
    let q1 = d.q1;
    if q1 == 0 {
        return Ok(());
    }
    let inv = spd_inverse(&s.sigma_a_star).map_err(|e| breakdown("SigmaA", e))?;
    for (c, &(r0, r1)) in ctx.data.fam_rows.iter().enumerate() {
        let mut prec = inv.clone();
        let mut canon = Vector::zeros(q1);
        for r in r0..r1 {
            let i = ctx.data.row_ind[r];
            let y = l.u_star[r]
                - ctx.x_alpha(s, r)
                - dot(ctx.data.q_row(r), &l.d_star[i * d.q2..(i + 1) * d.q2]);
            let z = ctx.data.z_row(r);
            for a in 0..q1 {
                canon[a] += z[a] * y;
                for b in 0..q1 {
                    prec[(a, b)] += z[a] * z[b];
                }
            }
        }
        let (draw, _) = draw_from_precision(prec, &canon, 1.0, rng, "family effects")?;
        l.a_star[c * q1..(c + 1) * q1].copy_from_slice(draw.as_slice());
    }
    Ok(())
}

/// `d_ci` given the family effects.
fn update_subject_effects<R: RngCore + ?Sized>(
    ctx: &Ctx<'_>,
    s: &ExpandedState,
    l: &mut LatentState,
    rng: &mut R,
) -> Result<()> {
    let d = ctx.data.dims;
    let q2 = d.q2;
    if q2 == 0 {
        return Ok(());
    }
    let inv = spd_inverse(&s.sigma_d_star).map_err(|e| breakdown("SigmaD", e))?;
    for (i, &(r0, r1)) in ctx.data.ind_rows.iter().enumerate() {
        let c = ctx.data.ind_fam[i];
        let mut prec: Mat = inv.clone();
        let mut canon = Vector::zeros(q2);
        for r in r0..r1 {
            let y = l.u_star[r]
                - ctx.x_alpha(s, r)
                - dot(ctx.data.z_row(r), &l.a_star[c * d.q1..(c + 1) * d.q1]);
            let q = ctx.data.q_row(r);
            for a in 0..q2 {
                canon[a] += q[a] * y;
                for b in 0..q2 {
                    prec[(a, b)] += q[a] * q[b];
                }
            }
        }
        let (draw, _) = draw_from_precision(prec, &canon, 1.0, rng, "subject effects")?;
        l.d_star[i * q2..(i + 1) * q2].copy_from_slice(draw.as_slice());
    }
    Ok(())
}

fn breakdown(block: &'static str, e: Error) -> Error {
    Error::NumericalBreakdown {
        block,
        detail: alloc::format!("{e}"),
    }
}

