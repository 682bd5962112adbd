//! Gibbs samplers for the two-part latent variable model.
//!
//! Four schemes share one state layout ([`ExpandedState`], [`LatentState`]):
//!
//! * [`Scheme::Sg`]: standard Gibbs on the original, non-centred model
//!   (continuous phenotypes only).
//! * [`Scheme::PxHc`]: parameter expansion with hierarchical centring
//!   (continuous phenotypes only).
//! * [`Scheme::AcPxHc`]: PX-HC with plain Albert–Chib augmentation for the
//!   binary phenotypes.
//! * [`Scheme::Px2Hc`]: AC-PX-HC plus a marginal-augmentation working
//!   parameter `γ_j` per binary phenotype.
//!
//! A [`Chain`] owns one state and one random stream. [`run_chain`] drives a
//! chain through burn-in and records every retained iteration on the
//! original scale.

mod block;
mod likelihood;
mod sg;
mod state;
mod sweep;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use likelihood::log_complete_likelihood;
pub use state::{ExpandedState, LatentState, OriginalLatent};
pub(crate) use sweep::Ctx;

use crate::linalg::Mat;
use crate::model::{ModelData, ParamLayout, ParameterSet, PriorConfig};
use crate::rng::{ChainRng, RngHandle};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Sg,
    PxHc,
    AcPxHc,
    Px2Hc,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sg => "SG",
            Scheme::PxHc => "PX_HC",
            Scheme::AcPxHc => "AC_PX_HC",
            Scheme::Px2Hc => "PX2_HC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_uppercase())
            .collect();
        match norm.as_str() {
            "SG" => Some(Scheme::Sg),
            "PXHC" => Some(Scheme::PxHc),
            "ACPXHC" => Some(Scheme::AcPxHc),
            "PX2HC" => Some(Scheme::Px2Hc),
            _ => None,
        }
    }

    /// Schemes that handle binary phenotypes.
    pub fn supports_binary(self) -> bool {
        matches!(self, Scheme::AcPxHc | Scheme::Px2Hc)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Starting point of a chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    #[default]
    Default,
    /// Start at these original-scale parameters with unit auxiliaries.
    Truth(ParameterSet),
    /// Resume from a stored state (warm start).
    State(Box<(ExpandedState, LatentState)>),
}

/// Parameters held at given values on the expanded scale. Per-phenotype
/// vectors may be empty (nothing clamped) or have length `J`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fixed {
    pub psi2: Option<f64>,
    pub xi: Vec<Option<f64>>,
    pub eta2: Vec<Option<f64>>,
    pub beta0_star: Vec<Option<f64>>,
    pub beta: Vec<Option<Vec<f64>>>,
    pub lambda_star: Vec<Option<f64>>,
    pub sigma2: Vec<Option<f64>>,
    pub alpha_star: Option<Vec<f64>>,
    pub sigma_a_star: Option<Mat>,
    pub sigma_d_star: Option<Mat>,
}

fn pick<T: Clone>(v: &[Option<T>], j: usize) -> Option<T> {
    v.get(j).cloned().flatten()
}

impl Fixed {
    /// Clamps every parameter at `truth` with `psi² = 1` and `xi = 1`.
    pub fn from_truth(truth: &ParameterSet) -> Self {
        let j = truth.lambda.len();
        Self {
            psi2: Some(1.0),
            xi: vec![Some(1.0); j],
            eta2: truth.tau2.iter().map(|&v| Some(v)).collect(),
            beta0_star: truth.beta0.iter().map(|&v| Some(v)).collect(),
            beta: truth.beta.iter().map(|b| Some(b.clone())).collect(),
            lambda_star: truth.lambda.iter().map(|&v| Some(v)).collect(),
            sigma2: truth.sigma2.iter().map(|&v| Some(v)).collect(),
            alpha_star: Some(truth.alpha.clone()),
            sigma_a_star: Some(truth.sigma_a.clone()),
            sigma_d_star: Some(truth.sigma_d.clone()),
        }
    }

    pub fn xi(&self, j: usize) -> Option<f64> {
        pick(&self.xi, j)
    }
    pub fn eta2(&self, j: usize) -> Option<f64> {
        pick(&self.eta2, j)
    }
    pub fn beta0_star(&self, j: usize) -> Option<f64> {
        pick(&self.beta0_star, j)
    }
    pub fn beta(&self, j: usize) -> Option<Vec<f64>> {
        pick(&self.beta, j)
    }
    pub fn lambda_star(&self, j: usize) -> Option<f64> {
        pick(&self.lambda_star, j)
    }
    pub fn sigma2(&self, j: usize) -> Option<f64> {
        pick(&self.sigma2, j)
    }

    /// Overwrites the clamped entries of `s`.
    pub fn apply(&self, s: &mut ExpandedState) {
        if let Some(v) = self.psi2 {
            s.psi2 = v;
        }
        for j in 0..s.lambda_star.len() {
            if let Some(v) = self.xi(j) {
                s.xi[j] = v;
            }
            if let Some(v) = self.eta2(j) {
                s.eta2[j] = v;
            }
            if let Some(v) = self.beta0_star(j) {
                s.beta0_star[j] = v;
            }
            if let Some(v) = self.beta(j) {
                s.beta[j] = v;
            }
            if let Some(v) = self.lambda_star(j) {
                s.lambda_star[j] = v;
            }
            if j < s.sigma2.len() {
                if let Some(v) = self.sigma2(j) {
                    s.sigma2[j] = v;
                }
            }
        }
        if let Some(a) = &self.alpha_star {
            s.alpha_star = a.clone();
        }
        if let Some(m) = &self.sigma_a_star {
            if m.nrows() == s.sigma_a_star.nrows() {
                s.sigma_a_star = m.clone();
            }
        }
        if let Some(m) = &self.sigma_d_star {
            s.sigma_d_star = m.clone();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub scheme: Scheme,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Drop the family random effect `a_c` (and `Sigma_A`) from the model.
    pub independence_mode: bool,
    pub init: Init,
    pub fixed: Fixed,
    /// Multiplier `g` on each loading (empty means all ones); used by the
    /// path sampler.
    pub loading_scale: Vec<f64>,
    /// Multiplier on each indirect-effect coefficient (empty means all ones).
    pub alpha_scale: Vec<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Px2Hc,
            iterations: 25_000,
            burn_in: 5_000,
            thin: 1,
            independence_mode: false,
            init: Init::Default,
            fixed: Fixed::default(),
            loading_scale: Vec::new(),
            alpha_scale: Vec::new(),
        }
    }
}

impl SamplerConfig {
    pub fn new(scheme: Scheme, iterations: usize, burn_in: usize) -> Self {
        Self {
            scheme,
            iterations,
            burn_in,
            ..Self::default()
        }
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidArgument(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// Posterior draws on the original parameter scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub layout: ParamLayout,
    pub names: Vec<String>,
    /// Row-major, `n_draws × names.len()`.
    pub values: Vec<f64>,
    pub n_draws: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub stream: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// State after the last iteration, for warm starts.
    pub final_state: Option<Box<(ExpandedState, LatentState)>>,
}

impl ChainOutput {
    pub fn n_columns(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.names.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column_index(name)?;
        Some(self.column_at(c))
    }

    pub fn column_at(&self, c: usize) -> Vec<f64> {
        let k = self.names.len();
        (0..self.n_draws).map(|i| self.values[i * k + c]).collect()
    }

    pub fn posterior_mean(&self, name: &str) -> Option<f64> {
        let col = self.column(name)?;
        Some(col.iter().sum::<f64>() / col.len() as f64)
    }
}

/// One chain: data view, configuration, current state and random stream.
#[derive(Debug)]
pub struct Chain<'a> {
    ctx: Ctx<'a>,
    pub state: ExpandedState,
    pub latent: LatentState,
    rng: ChainRng,
    iteration: usize,
}

impl<'a> Chain<'a> {
    /// Sets up a chain. `data` must already reflect the independence mode
    /// (see [`ModelData::without_family_effects`]); [`run_chain`] does that.
    pub fn new(
        data: &'a ModelData,
        priors: &'a PriorConfig,
        cfg: &'a SamplerConfig,
        handle: RngHandle,
    ) -> Result<Self> {
        priors.validate()?;
        let dims = data.dims;
        if matches!(cfg.scheme, Scheme::Sg | Scheme::PxHc) && dims.j1 != dims.j {
            return Err(Error::InvalidArgument(format!(
                "scheme {} requires all phenotypes to be continuous",
                cfg.scheme
            )));
        }
        let ctx = Ctx::new(data, priors, cfg)?;
        let mut rng = handle.rng();
        let centered = cfg.scheme != Scheme::Sg;
        let (mut state, latent) = match &cfg.init {
            Init::State(b) => (b.0.clone(), b.1.clone()),
            Init::Default => (
                ExpandedState::initial(data),
                LatentState::initial(data, centered, &mut rng),
            ),
            Init::Truth(p) => {
                let mut p = p.clone();
                if dims.q1 == 0 {
                    p.sigma_a = Mat::zeros(0, 0);
                }
                p.validate(&dims)?;
                (
                    ExpandedState::from_original(&p, data),
                    LatentState::initial(data, centered, &mut rng),
                )
            }
        };
        if state.lambda_star.len() != dims.j
            || latent.u_star.len() != data.n_rows
            || latent.a_star.len() != data.n_fam() * dims.q1
        {
            return Err(Error::DimensionMismatch(
                "initial state does not match the data".into(),
            ));
        }
        if cfg.scheme == Scheme::Sg {
            state.psi2 = 1.0;
            state.xi.iter_mut().for_each(|x| *x = 1.0);
        }
        cfg.fixed.apply(&mut state);
        for j in 0..dims.j {
            if priors.slab(j).is_some() {
                state.omega[j] = state.lambda_star[j] > 0.0;
            }
        }
        Ok(Self {
            ctx,
            state,
            latent,
            rng,
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// One full sweep of the configured scheme.
    pub fn step(&mut self) -> Result<()> {
        self.iteration += 1;
        let res = match self.ctx.scheme {
            Scheme::Sg => sg::sweep(&self.ctx, &mut self.state, &mut self.latent, &mut self.rng),
            _ => sweep::sweep(&self.ctx, &mut self.state, &mut self.latent, &mut self.rng),
        };
        res.map_err(|e| e.at_iteration(self.iteration))
    }

    pub fn original(&self) -> ParameterSet {
        self.state.to_original()
    }

    pub fn original_latent(&self) -> OriginalLatent {
        self.latent.to_original(&self.state, self.ctx.data)
    }

    pub fn data(&self) -> &ModelData {
        self.ctx.data
    }
}

/// Output columns of a chain: parameters, then an `omega_j` column for
/// every phenotype with a spike-and-slab prior.
pub fn output_layout(data: &ModelData, priors: &PriorConfig) -> ParamLayout {
    let mut layout = ParamLayout::new(data.dims);
    layout.omega = (0..data.dims.j).filter(|&j| priors.slab(j).is_some()).collect();
    layout
}

/// Runs a chain and calls `observe` after every retained iteration.
pub fn run_chain_observed<F>(
    data: &ModelData,
    priors: &PriorConfig,
    cfg: &SamplerConfig,
    handle: RngHandle,
    mut observe: F,
) -> Result<ChainOutput>
where
    F: FnMut(&Chain<'_>),
{
    cfg.validate()?;
    let reduced;
    let data = if cfg.independence_mode {
        reduced = data.without_family_effects();
        &reduced
    } else {
        data
    };
    let mut chain = Chain::new(data, priors, cfg, handle)?;
    let layout = output_layout(data, priors);
    let names = layout.names();
    let n_draws = cfg.retained();
    let mut values = Vec::with_capacity(n_draws * names.len());
    for it in 1..=cfg.iterations {
        chain.step()?;
        if it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
            let p = chain.original();
            values.extend(p.to_values(&layout));
            values.extend(
                layout
                    .omega
                    .iter()
                    .map(|&j| if chain.state.omega[j] { 1.0 } else { 0.0 }),
            );
            observe(&chain);
        }
    }
    Ok(ChainOutput {
        layout,
        names,
        values,
        n_draws,
        scheme: cfg.scheme,
        seed: handle.seed,
        stream: handle.stream,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        final_state: Some(Box::new((chain.state, chain.latent))),
    })
}

/// Runs `cfg.iterations` sweeps and returns the retained draws.
pub fn run_chain(
    data: &ModelData,
    priors: &PriorConfig,
    cfg: &SamplerConfig,
    handle: RngHandle,
) -> Result<ChainOutput> {
    run_chain_observed(data, priors, cfg, handle, |_| {})
}

/// [`run_chain`] for a configuration with `independence_mode` set: the
/// family random effect is left out, so the output has no `SigmaA` columns.
pub fn run_chain_independence(
    data: &ModelData,
    priors: &PriorConfig,
    cfg: &SamplerConfig,
    handle: RngHandle,
) -> Result<ChainOutput> {
    if !cfg.independence_mode {
        return Err(Error::InvalidArgument(
            "run_chain_independence needs independence_mode = true".into(),
        ));
    }
    run_chain(data, priors, cfg, handle)
}
