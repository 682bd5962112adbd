//! Deterministic posterior moments for two-parameter instances.
//!
//! Latent quantities are integrated out analytically (Gaussian phenotypes)
//! or by one-dimensional quadrature (probit phenotypes). The remaining two
//! free parameters are integrated on an adaptive 2-D grid.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pleiolv_core::model::{LongitudinalFamilyDataset, ParameterSet};
use pleiolv_core::rng::{Purpose, RngHandle, StreamId};
use pleiolv_core::sampler::{run_chain, Fixed};
use pleiolv_core::selection::batch_means_se;
use pleiolv_core::simgen::{simulate, CovariateKind, SimDesign};
use pleiolv_core::{ChainOutput, ModelData, PhenotypeKind, PriorConfig, SamplerConfig, Scheme};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean: [f64; 2],
    pub sd: [f64; 2],
}

/// Moments of `exp(logp)` over a box, refined once around the mass.
pub fn grid_moments(logp: impl Fn(f64, f64) -> f64, x: (f64, f64), y: (f64, f64)) -> Moments {
    let pass = |x: (f64, f64), y: (f64, f64), n: usize| {
        let hx = (x.1 - x.0) / n as f64;
        let hy = (y.1 - y.0) / n as f64;
        let mut vals = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let px = x.0 + (a as f64 + 0.5) * hx;
                let py = y.0 + (b as f64 + 0.5) * hy;
                vals.push((px, py, logp(px, py)));
            }
        }
        (vals, hx, hy)
    };
    let (coarse, hx, hy) = pass(x, y, 50);
    let top = coarse.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
    let live: Vec<_> = coarse.iter().filter(|v| v.2 > top - 30.0).collect();
    let lo_x = live.iter().map(|v| v.0).fold(f64::INFINITY, f64::min) - 2.0 * hx;
    let hi_x = live.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max) + 2.0 * hx;
    let lo_y = live.iter().map(|v| v.1).fold(f64::INFINITY, f64::min) - 2.0 * hy;
    let hi_y = live.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max) + 2.0 * hy;
    let (fine, _, _) = pass((lo_x.max(x.0), hi_x.min(x.1)), (lo_y.max(y.0), hi_y.min(y.1)), 100);
    let top = fine.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
    let (mut w, mut m, mut s) = (0.0, [0.0; 2], [0.0; 2]);
    for &(px, py, l) in &fine {
        let p = (l - top).exp();
        w += p;
        m[0] += p * px;
        m[1] += p * py;
        s[0] += p * px * px;
        s[1] += p * py * py;
    }
    let mean = [m[0] / w, m[1] / w];
    let sd = [
        (s[0] / w - mean[0] * mean[0]).max(0.0).sqrt(),
        (s[1] / w - mean[1] * mean[1]).max(0.0).sqrt(),
    ];
    Moments { mean, sd }
}

fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// One continuous phenotype; free `(lambda, beta0)`, everything else at
/// the truth.
pub struct ContinuousInstance {
    pub data: LongitudinalFamilyDataset,
    pub truth: ParameterSet,
}

pub fn continuous_instance(seed: u64) -> ContinuousInstance {
    let mut d = SimDesign::scenario(pleiolv_core::simgen::Scenario::S5_1).with_families(30);
    d.kinds = vec![PhenotypeKind::Continuous];
    d.n_times = 3;
    d.x = vec![CovariateKind::Correlated];
    d.truth = ParameterSet {
        beta0: vec![0.4],
        beta: vec![vec![1.0]],
        alpha: vec![1.0],
        lambda: vec![0.8],
        tau2: vec![0.3],
        sigma2: vec![0.5],
        sigma_a: DMatrix::from_element(1, 1, 0.5),
        sigma_d: DMatrix::from_element(1, 1, 0.3),
    };
    let mut rng = RngHandle::new(seed, StreamId::new(Purpose::Simulate)).rng();
    ContinuousInstance {
        data: simulate(&d, &mut rng).unwrap(),
        truth: d.truth,
    }
}

impl ContinuousInstance {
    pub fn log_posterior(&self, lambda: f64, beta0: f64) -> f64 {
        if lambda <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let t = &self.truth;
        let (sa, sd) = (t.sigma_a[(0, 0)], t.sigma_d[(0, 0)]);
        let mut ll = 0.0;
        for fam in &self.data.families {
            let rows: Vec<(usize, &pleiolv_core::model::TimeRecord)> = fam
                .individuals
                .iter()
                .enumerate()
                .flat_map(|(i, ind)| ind.records.iter().map(move |r| (i, r)))
                .collect();
            let n = rows.len();
            let mut cov = DMatrix::zeros(n, n);
            let mut resid = DVector::zeros(n);
            for (a, (ia, ra)) in rows.iter().enumerate() {
                resid[a] = ra.y[0].unwrap() - beta0 - ra.w[0] * t.beta[0][0] - lambda * ra.x[0] * t.alpha[0];
                for (b, (ib, _)) in rows.iter().enumerate() {
                    let mut c = lambda * lambda * sa;
                    if ia == ib {
                        c += lambda * lambda * sd + t.tau2[0];
                    }
                    if a == b {
                        c += lambda * lambda + t.sigma2[0];
                    }
                    cov[(a, b)] = c;
                }
            }
            let chol = cov.cholesky().unwrap();
            let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
            let sol = chol.solve(&resid);
            ll += -0.5 * (n as f64 * LN_2PI + log_det + resid.dot(&sol));
        }
        ll - 0.5 * lambda * lambda - beta0 * beta0 / 2000.0
    }

    pub fn moments(&self) -> Moments {
        grid_moments(|l, b| self.log_posterior(l, b), (0.0, 4.0), (-4.0, 4.0))
    }

    pub fn fixed(&self) -> Fixed {
        let t = &self.truth;
        Fixed {
            psi2: Some(1.0),
            xi: vec![Some(1.0)],
            eta2: vec![Some(t.tau2[0])],
            beta: vec![Some(t.beta[0].clone())],
            sigma2: vec![Some(t.sigma2[0])],
            alpha_star: Some(t.alpha.clone()),
            sigma_a_star: Some(t.sigma_a.clone()),
            sigma_d_star: Some(t.sigma_d.clone()),
            ..Fixed::default()
        }
    }
}

/// One binary phenotype, one individual per family, no direct-effect
/// covariates; free `(lambda, tau2)`.
pub struct BinaryInstance {
    pub data: LongitudinalFamilyDataset,
    pub truth: ParameterSet,
    pub v2: f64,
}

pub fn binary_instance(seed: u64) -> BinaryInstance {
    let mut d = SimDesign::scenario(pleiolv_core::simgen::Scenario::S5_1).with_families(150);
    d.kinds = vec![PhenotypeKind::Binary];
    d.size_probs = vec![1.0, 0.0, 0.0, 0.0, 0.0];
    d.n_times = 4;
    d.w = vec![];
    d.x = vec![CovariateKind::Correlated];
    d.truth = ParameterSet {
        beta0: vec![0.0],
        beta: vec![vec![]],
        alpha: vec![1.0],
        lambda: vec![0.7],
        tau2: vec![0.5],
        sigma2: vec![],
        sigma_a: DMatrix::from_element(1, 1, 0.3),
        sigma_d: DMatrix::from_element(1, 1, 0.2),
    };
    let mut rng = RngHandle::new(seed, StreamId::new(Purpose::Simulate)).rng();
    BinaryInstance {
        data: simulate(&d, &mut rng).unwrap(),
        truth: d.truth,
        v2: PriorConfig::default().v2,
    }
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

impl BinaryInstance {
    pub fn log_posterior(&self, lambda: f64, tau2: f64) -> f64 {
        if lambda <= 0.0 || tau2 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let t = &self.truth;
        let a = lambda * lambda * (t.sigma_a[(0, 0)] + t.sigma_d[(0, 0)]) + tau2;
        let b = (lambda * lambda + 1.0).sqrt();
        let sa = a.sqrt();
        let nz = 61;
        let h = 14.0 / (nz - 1) as f64;
        let mut ll = 0.0;
        for fam in &self.data.families {
            let recs = &fam.individuals[0].records;
            let mut p = 0.0;
            for k in 0..nz {
                let z = -7.0 + k as f64 * h;
                let mut f = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                for r in recs {
                    let m = lambda * r.x[0] * t.alpha[0] + sa * z;
                    let s = if r.y[0].unwrap() > 0.5 { 1.0 } else { -1.0 };
                    f *= phi_cdf(s * m / b);
                }
                let wt = if k == 0 || k == nz - 1 { 0.5 } else { 1.0 };
                p += wt * f * h;
            }
            ll += p.ln();
        }
        // lambda ~ half-N(0, 1); tau = |t_v2| so tau2 has density t(√s)/√s.
        let v = self.v2;
        let st = tau2.sqrt();
        let log_t = ln_gamma((v + 1.0) / 2.0)
            - ln_gamma(v / 2.0)
            - 0.5 * (v * std::f64::consts::PI).ln()
            - (v + 1.0) / 2.0 * (1.0 + st * st / v).ln();
        ll - 0.5 * lambda * lambda + log_t - st.ln()
    }

    pub fn moments(&self) -> Moments {
        grid_moments(|l, s| self.log_posterior(l, s), (0.0, 4.0), (0.0, 6.0))
    }

    pub fn fixed(&self) -> Fixed {
        let t = &self.truth;
        Fixed {
            psi2: Some(1.0),
            beta0_star: vec![Some(0.0)],
            beta: vec![Some(vec![])],
            alpha_star: Some(t.alpha.clone()),
            sigma_a_star: Some(t.sigma_a.clone()),
            sigma_d_star: Some(t.sigma_d.clone()),
            ..Fixed::default()
        }
    }
}

/// Chain mean/SD of a column with batch-means Monte Carlo standard errors.
pub struct ChainMoments {
    pub mean: f64,
    pub sd: f64,
    pub se_mean: f64,
    pub se_sd: f64,
}

pub fn chain_moments(out: &ChainOutput, name: &str) -> ChainMoments {
    let col = out.column(name).unwrap();
    let (mean, sd) = pleiolv_core::diagnostics::mean_sd(&col);
    // Delta method on the square-deviation series for the SD error.
    let sq: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
    ChainMoments {
        mean,
        sd,
        se_mean: batch_means_se(&col, 50),
        se_sd: batch_means_se(&sq, 50) / (2.0 * sd),
    }
}

pub fn run_oracle_chain(
    data: &LongitudinalFamilyDataset,
    fixed: Fixed,
    scheme: Scheme,
    iterations: usize,
    seed: u64,
) -> ChainOutput {
    let md = ModelData::new(data).unwrap();
    let mut cfg = SamplerConfig::new(scheme, iterations, iterations / 10);
    cfg.fixed = fixed;
    run_chain(&md, &PriorConfig::default(), &cfg, RngHandle::new(seed, StreamId::new(Purpose::Fit))).unwrap()
}

/// Largest discrepancy, in Monte Carlo standard errors, between the chain
/// and the oracle over both parameters' means and SDs.
pub fn z_scores(out: &ChainOutput, names: [&str; 2], oracle: &Moments) -> [f64; 4] {
    let a = chain_moments(out, names[0]);
    let b = chain_moments(out, names[1]);
    [
        (a.mean - oracle.mean[0]) / a.se_mean,
        (a.sd - oracle.sd[0]) / a.se_sd,
        (b.mean - oracle.mean[1]) / b.se_mean,
        (b.sd - oracle.sd[1]) / b.se_sd,
    ]
}
