//! Phenotype and covariate selection.
//!
//! Spike-and-slab inclusion probabilities are read off the `omega_j`
//! columns of a chain. Bayes factors are estimated by path sampling: the
//! tested loading (or block of latent-model coefficients) is multiplied by
//! `g ∈ [0, 1]`, a chain is run at every grid value, and the posterior mean
//! of `∂ log L_g / ∂g` is integrated over the grid with the trapezoid rule.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::mean_sd;
use crate::math::sqrt;
use crate::model::{ModelData, ParameterSet, PriorConfig};
use crate::rng::{RngHandle, StreamId};
use crate::sampler::{run_chain_observed, Init, OriginalLatent, SamplerConfig};
use crate::{Error, Result};

/// Fraction of retained iterations with `omega_j = 1` (`j` zero-based).
pub fn posterior_inclusion_probability(chain: &crate::ChainOutput, j: usize) -> Result<f64> {
    let col = chain
        .column(&format!("omega_{}", j + 1))
        .ok_or(Error::IndicatorAbsent(j))?;
    Ok(inclusion_probability(&col))
}

/// Fraction of draws of an indicator column that equal 1.
pub fn inclusion_probability(omega: &[f64]) -> f64 {
    if omega.is_empty() {
        return 0.0;
    }
    omega.iter().filter(|&&w| w > 0.5).count() as f64 / omega.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    /// Include `j` when its probability is at least `phi`.
    Threshold(f64),
    /// Largest set, taken in decreasing probability, whose average
    /// `1 − prob` (the Bayesian false discovery rate) is at most `q`.
    Fdr(f64),
}

/// Indices (zero-based, ascending) of the selected phenotypes.
pub fn select_phenotypes(probs: &[f64], rule: SelectionRule) -> Vec<usize> {
    match rule {
        SelectionRule::Threshold(phi) => (0..probs.len()).filter(|&j| probs[j] >= phi).collect(),
        SelectionRule::Fdr(q) => {
            let mut order: Vec<usize> = (0..probs.len()).collect();
            order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
            let mut best = 0;
            let mut acc = 0.0;
            for (k, &j) in order.iter().enumerate() {
                acc += 1.0 - probs[j];
                if acc / (k + 1) as f64 <= q + 1e-12 {
                    best = k + 1;
                }
            }
            let mut out: Vec<usize> = order[..best].to_vec();
            out.sort_unstable();
            out
        }
    }
}

/// Uneven path grid: `n_low` points spanning `[0, 0.1]`, `n_mid` interior
/// points of `(0.1, 0.9)` and `n_high` points spanning `[0.9, 1]`.
pub fn build_grid(n_low: usize, n_high: usize, n_mid: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n_low + n_mid + n_high);
    let span = |n: usize, a: f64, b: f64, out: &mut Vec<f64>| {
        if n == 1 {
            out.push(a);
        } else {
            for k in 0..n {
                out.push(a + (b - a) * k as f64 / (n - 1) as f64);
            }
        }
    };
    span(n_low, 0.0, 0.1, &mut g);
    for k in 1..=n_mid {
        g.push(0.1 + 0.8 * k as f64 / (n_mid + 1) as f64);
    }
    span(n_high, 0.9, 1.0, &mut g);
    g.push(0.0);
    g.push(1.0);
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    g
}

pub const DEFAULT_GRID: (usize, usize, usize) = (15, 15, 20);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathTarget {
    /// Loading of phenotype `j0` (zero-based).
    Loading(usize),
    /// Block of indirect-effect coefficients (zero-based columns of `X`).
    Covariates(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    pub grid: Vec<f64>,
    pub target: PathTarget,
    /// Chain settings used at every grid point.
    pub chain: SamplerConfig,
    /// Start each grid point from the final state of the previous one
    /// (walking down from `g = 1`), with `warm_burn_in` burn-in sweeps.
    pub warm_start: bool,
    pub warm_burn_in: usize,
    /// Batches used for the per-grid Monte Carlo standard error.
    pub batches: usize,
}

impl PathPlan {
    pub fn new(target: PathTarget, chain: SamplerConfig) -> Self {
        let (lo, hi, mid) = DEFAULT_GRID;
        Self {
            grid: build_grid(lo, hi, mid),
            target,
            chain,
            warm_start: true,
            warm_burn_in: 0,
            batches: 20,
        }
    }

    pub fn validate(&self, data: &ModelData) -> Result<()> {
        let g = &self.grid;
        if g.len() < 2 || g[0] != 0.0 || *g.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument(
                "path grid must start at 0 and end at 1".into(),
            ));
        }
        if g.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "path grid must be strictly increasing".into(),
            ));
        }
        match &self.target {
            PathTarget::Loading(j) if *j >= data.dims.j => Err(Error::InvalidArgument(format!(
                "loading index {j} out of range"
            ))),
            PathTarget::Covariates(cols) if cols.iter().any(|&k| k >= data.dims.p2) => {
                Err(Error::InvalidArgument("covariate index out of range".into()))
            }
            _ => {
                if self.batches == 0 {
                    return Err(Error::InvalidArgument("batches must be positive".into()));
                }
                self.chain.validate()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfResult {
    pub log_bf: f64,
    pub grid: Vec<f64>,
    /// Posterior mean of the path derivative at each grid point.
    pub u_bar: Vec<f64>,
    /// Batch-means standard error of each `u_bar`.
    pub u_se: Vec<f64>,
    /// Standard error of `log_bf` propagated through the trapezoid weights.
    pub se: f64,
    /// Degrees of freedom of the folded-t prior on the loadings.
    pub df: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// `log BF > 1`
    SupportsAlternative,
    /// `log BF < 0`
    SupportsNull,
    Inconclusive,
}

impl BfResult {
    pub fn decision(&self) -> Decision {
        if self.log_bf > 1.0 {
            Decision::SupportsAlternative
        } else if self.log_bf < 0.0 {
            Decision::SupportsNull
        } else {
            Decision::Inconclusive
        }
    }
}

/// Trapezoid weights of a grid: `Σ w_s f_s = ½ Σ (g_{s+1} − g_s)(f_{s+1} + f_s)`.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; grid.len()];
    for s in 0..grid.len().saturating_sub(1) {
        let h = 0.5 * (grid[s + 1] - grid[s]);
        w[s] += h;
        w[s + 1] += h;
    }
    w
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    trapezoid_weights(grid)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Path derivative for a loading:
/// `(1/σ²) Σ [V − (β0 + W'β + g·λU + b)]·λU`, with `V = ỹ` and `σ² = 1`
/// for a binary phenotype.
pub fn u_loading(
    theta: &ParameterSet,
    latent: &OriginalLatent,
    data: &ModelData,
    j0: usize,
    g: f64,
) -> f64 {
    let d = data.dims;
    let lam = theta.lambda[j0];
    if lam == 0.0 {
        return 0.0;
    }
    let (s2, nb) = if j0 < d.j1 {
        (theta.sigma2[j0], d.j - d.j1)
    } else {
        (1.0, d.j - d.j1)
    };
    let mut acc = 0.0;
    for r in 0..data.n_rows {
        let i = data.row_ind[r];
        let v = if j0 < d.j1 {
            data.y(r, j0)
        } else {
            latent.y_tilde[r * nb + j0 - d.j1]
        };
        let lu = lam * latent.u[r];
        let mean = theta.beta0[j0] + dot(data.w_row(r), &theta.beta[j0]) + g * lu + latent.b[i * d.j + j0];
        acc += (v - mean) * lu;
    }
    acc / s2
}

/// Path derivative for a block of latent-model coefficients:
/// `Σ (U − X₁'α₁ − g·X₂'α₂ − Z'a − Q'd)·X₂'α₂`.
pub fn u_covariate(
    theta: &ParameterSet,
    latent: &OriginalLatent,
    data: &ModelData,
    block: &[usize],
    g: f64,
) -> f64 {
    let d = data.dims;
    let mut in_block = vec![false; d.p2];
    for &k in block {
        in_block[k] = true;
    }
    let mut acc = 0.0;
    for r in 0..data.n_rows {
        let x = data.x_row(r);
        let (mut kept, mut tested) = (0.0, 0.0);
        for k in 0..d.p2 {
            if in_block[k] {
                tested += x[k] * theta.alpha[k];
            } else {
                kept += x[k] * theta.alpha[k];
            }
        }
        if tested == 0.0 {
            continue;
        }
        let c = data.row_fam[r];
        let i = data.row_ind[r];
        let re = dot(data.z_row(r), &latent.a[c * d.q1..(c + 1) * d.q1])
            + dot(data.q_row(r), &latent.d[i * d.q2..(i + 1) * d.q2]);
        acc += (latent.u[r] - kept - g * tested - re) * tested;
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Batch-means standard error of the mean of `xs`.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let b = batches.min(xs.len());
    if b < 2 {
        return 0.0;
    }
    let size = xs.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|k| xs[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let (_, sd) = mean_sd(&means);
    sd / sqrt(b as f64)
}

/// Path-sampling estimate of `log BF(M1 : M0)` for the plan's target.
///
/// Grid point `s` draws from stream `stream.grid(s)`. With warm starts the
/// grid is walked from `g = 1` downwards.
pub fn log_bayes_factor(
    plan: &PathPlan,
    data: &ModelData,
    priors: &PriorConfig,
    seed: u64,
    stream: StreamId,
) -> Result<BfResult> {
    plan.validate(data)?;
    let n = plan.grid.len();
    let mut u_bar = vec![0.0; n];
    let mut u_se = vec![0.0; n];
    let mut warm: Option<Init> = None;
    for s in (0..n).rev() {
        let g = plan.grid[s];
        let mut cfg = plan.chain.clone();
        match &plan.target {
            PathTarget::Loading(j0) => {
                let mut scale = vec![1.0; data.dims.j];
                scale[*j0] = g;
                cfg.loading_scale = scale;
            }
            PathTarget::Covariates(cols) => {
                let mut scale = vec![1.0; data.dims.p2];
                for &k in cols {
                    scale[k] = g;
                }
                cfg.alpha_scale = scale;
            }
        }
        if plan.warm_start {
            if let Some(init) = warm.take() {
                cfg.init = init;
                let kept = cfg.iterations - cfg.burn_in;
                cfg.burn_in = plan.warm_burn_in;
                cfg.iterations = plan.warm_burn_in + kept;
            }
        }
        let mut us = Vec::with_capacity(cfg.retained());
        let handle = RngHandle::new(seed, stream.grid(s as u16));
        let out = run_chain_observed(data, priors, &cfg, handle, |chain| {
            let theta = chain.original();
            let lat = chain.original_latent();
            let u = match &plan.target {
                PathTarget::Loading(j0) => u_loading(&theta, &lat, chain.data(), *j0, g),
                PathTarget::Covariates(cols) => u_covariate(&theta, &lat, chain.data(), cols, g),
            };
            us.push(u);
        })
        .map_err(|e| Error::AtGridPoint {
            index: s,
            source: alloc::boxed::Box::new(e),
        })?;
        u_bar[s] = us.iter().sum::<f64>() / us.len().max(1) as f64;
        u_se[s] = batch_means_se(&us, plan.batches);
        if plan.warm_start {
            warm = out.final_state.map(Init::State);
        }
    }
    let w = trapezoid_weights(&plan.grid);
    let se = sqrt(w.iter().zip(&u_se).map(|(w, e)| w * w * e * e).sum());
    Ok(BfResult {
        log_bf: trapezoid(&plan.grid, &u_bar),
        grid: plan.grid.clone(),
        u_bar,
        u_se,
        se,
        df: priors.v1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfSensitivity {
    pub results: Vec<BfResult>,
    /// Every df leads to the same decision.
    pub unanimous: bool,
}

/// Repeats [`log_bayes_factor`] with the loading prior df set to each of
/// `dfs`, on the same random streams.
pub fn df_sensitivity(
    plan: &PathPlan,
    data: &ModelData,
    priors: &PriorConfig,
    dfs: &[f64],
    seed: u64,
    stream: StreamId,
) -> Result<DfSensitivity> {
    if dfs.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument("df values must be positive".into()));
    }
    let mut results = Vec::with_capacity(dfs.len());
    for &df in dfs {
        let mut p = priors.clone();
        p.v1 = df;
        results.push(log_bayes_factor(plan, data, &p, seed, stream)?);
    }
    let unanimous = results.windows(2).all(|w| w[0].decision() == w[1].decision());
    Ok(DfSensitivity { results, unanimous })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_and_fdr() {
        assert_eq!(select_phenotypes(&[0.9, 0.4], SelectionRule::Threshold(0.5)), vec![0]);
        assert_eq!(select_phenotypes(&[1.0, 1.0], SelectionRule::Threshold(0.99)), vec![0, 1]);
        assert_eq!(
            select_phenotypes(&[0.98, 0.96, 0.60], SelectionRule::Fdr(0.05)),
            vec![0, 1]
        );
        assert_eq!(select_phenotypes(&[0.2, 0.98], SelectionRule::Fdr(0.05)), vec![1]);
    }

    #[test]
    fn grid_construction() {
        let g = build_grid(15, 15, 20);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(build_grid(2, 2, 0), vec![0.0, 0.1, 0.9, 1.0]);
        let low = g[1] - g[0];
        let mid = g.iter().zip(&g[1..]).find(|(a, _)| **a > 0.1 + 1e-9 && **a < 0.8).map(|(a, b)| b - a).unwrap();
        assert!(low <= mid);
    }

    #[test]
    fn trapezoid_of_constant() {
        let g = build_grid(15, 15, 20);
        let v = vec![3.25; g.len()];
        assert!((trapezoid(&g, &v) - 3.25).abs() < 1e-12);
        let w = trapezoid_weights(&g);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn batch_means_of_constant_is_zero() {
        assert_eq!(batch_means_se(&[1.0; 100], 20), 0.0);
        let xs: Vec<f64> = (0..200).map(|i| (i % 2) as f64).collect();
        assert_eq!(batch_means_se(&xs, 20), 0.0);
    }
}
