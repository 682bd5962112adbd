//! Synthetic longitudinal family data.
//!
//! Families of 1 to 5 siblings are observed at `T` time points. Continuous
//! covariates are N(0, 1) with a shared family factor at baseline and an
//! AR(1) trajectory over time; genotype covariates are additive minor-allele
//! counts drawn by Mendelian segregation from Hardy-Weinberg parents.
//! Phenotypes are drawn forward from the latent-variable model.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dist::{bernoulli, sample_categorical, sample_mvn, standard_normal};
use crate::linalg::{Mat, Vector};
use crate::math::sqrt;
use crate::model::{
    BetaPrior, Covariate, Family, Individual, LongitudinalFamilyDataset, ParameterSet, Phenotype,
    PhenotypeKind, PriorConfig, TimeRecord,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Three continuous and two binary phenotypes, scalar family and
    /// subject effects.
    S5_1,
    /// Three continuous phenotypes with a random family slope.
    S5_2,
    /// Seven phenotypes with strong, weak and null loadings.
    S5_3a,
    /// Five covariates on the latent score, some null.
    S5_3b,
    /// One observation per individual, continuous phenotypes, family
    /// intercept only.
    NoRepeat,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::S5_1,
        Scenario::S5_2,
        Scenario::S5_3a,
        Scenario::S5_3b,
        Scenario::NoRepeat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::S5_1 => "S5_1",
            Scenario::S5_2 => "S5_2",
            Scenario::S5_3a => "S5_3a",
            Scenario::S5_3b => "S5_3b",
            Scenario::NoRepeat => "no_repeat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovariateKind {
    /// Constant 1.
    Intercept,
    /// N(0, 1) with family correlation at baseline and AR(1) over time.
    Correlated,
    /// Minor-allele count 0/1/2, constant over time.
    Genotype,
    /// Time index standardized over `1..=T`.
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub scenario: Option<Scenario>,
    pub n_families: usize,
    /// Probabilities of sibship sizes 1, 2, ...
    pub size_probs: Vec<f64>,
    pub n_times: usize,
    pub maf: f64,
    pub familial_corr: f64,
    pub ar_corr: f64,
    pub kinds: Vec<PhenotypeKind>,
    pub w: Vec<CovariateKind>,
    pub x: Vec<CovariateKind>,
    pub z: Vec<CovariateKind>,
    pub q: Vec<CovariateKind>,
    pub truth: ParameterSet,
    /// Spike-and-slab prior the scenario is analysed with, if any.
    pub spike_slab: Option<BetaPrior>,
    /// Prior variance of `alpha` the scenario is analysed with.
    pub alpha_var: f64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.size_probs.iter().sum();
        if self.size_probs.is_empty()
            || self.size_probs.iter().any(|&p| !(p >= 0.0))
            || (total - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(
                "sibship size probabilities must sum to 1".into(),
            ));
        }
        if !(self.maf > 0.0 && self.maf <= 0.5) {
            return Err(Error::InvalidArgument("maf must lie in (0, 0.5]".into()));
        }
        for (name, r) in [("familial_corr", self.familial_corr), ("ar_corr", self.ar_corr)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.n_families == 0 || self.n_times == 0 {
            return Err(Error::InvalidArgument(
                "need at least one family and one time point".into(),
            ));
        }
        if self.kinds.windows(2).any(|k| k[0] == PhenotypeKind::Binary && k[1] == PhenotypeKind::Continuous) {
            return Err(Error::InvalidArgument(
                "continuous phenotypes must come before binary ones".into(),
            ));
        }
        self.truth.validate(&self.dims())
    }

    pub fn dims(&self) -> crate::model::Dims {
        crate::model::Dims {
            j: self.kinds.len(),
            j1: self
                .kinds
                .iter()
                .filter(|&&k| k == PhenotypeKind::Continuous)
                .count(),
            p1: self.w.len(),
            p2: self.x.len(),
            q1: self.z.len(),
            q2: self.q.len(),
        }
    }

    /// Priors the scenario is analysed with.
    pub fn priors(&self) -> PriorConfig {
        let mut p = PriorConfig {
            alpha_var: self.alpha_var,
            ..PriorConfig::default()
        };
        if let Some(s) = self.spike_slab {
            p = p.with_spike_slab(self.kinds.len(), s.a, s.b);
        }
        p
    }

    pub fn with_families(mut self, n: usize) -> Self {
        self.n_families = n;
        self
    }

    /// Scenario builder with its true parameter values.
    pub fn scenario(sc: Scenario) -> Self {
        use CovariateKind::*;
        use PhenotypeKind::{Binary as B, Continuous as C};
        let base = |kinds: Vec<PhenotypeKind>, lambda: Vec<f64>| {
            let j = kinds.len();
            let j1 = kinds.iter().filter(|&&k| k == C).count();
            SimDesign {
                scenario: Some(sc),
                n_families: 500,
                size_probs: vec![0.3, 0.4, 0.2, 0.07, 0.03],
                n_times: 5,
                maf: 0.1,
                familial_corr: 0.3,
                ar_corr: 0.3,
                kinds,
                w: vec![Correlated],
                x: vec![Correlated, Genotype],
                z: vec![Intercept],
                q: vec![Intercept],
                truth: ParameterSet {
                    beta0: vec![0.0; j],
                    beta: vec![vec![1.0]; j],
                    alpha: vec![1.0, 1.0],
                    lambda,
                    tau2: vec![0.2; j],
                    sigma2: vec![0.1; j1],
                    sigma_a: Mat::from_element(1, 1, 0.5),
                    sigma_d: Mat::from_element(1, 1, 0.3),
                },
                spike_slab: None,
                alpha_var: 1000.0,
            }
        };
        match sc {
            Scenario::S5_1 => base(vec![C, C, C, B, B], vec![1.0; 5]),
            Scenario::S5_2 => {
                let mut d = base(vec![C, C, C], vec![1.0; 3]);
                d.z = vec![Intercept, Correlated];
                d.q = vec![Intercept, Time];
                d.truth.sigma_a = Mat::identity(2, 2);
                d.truth.sigma_d = Mat::identity(2, 2) * 0.1;
                d
            }
            Scenario::S5_3a => {
                let mut d = base(
                    vec![C, C, C, C, B, B, B],
                    vec![0.5, 0.05, 0.02, 0.0, 0.2, 0.01, 0.0],
                );
                d.spike_slab = Some(BetaPrior { a: 0.25, b: 1.0 });
                d
            }
            Scenario::S5_3b => {
                let mut d = base(vec![C, C, C, B, B], vec![1.0; 5]);
                d.w = vec![Correlated, Correlated];
                d.x = vec![Correlated, Correlated, Genotype, Correlated, Correlated];
                d.truth.beta = vec![vec![0.5, 0.3]; 5];
                d.truth.alpha = vec![1.0, -0.5, 0.2, 0.0, 0.0];
                d.alpha_var = 1.0;
                d
            }
            Scenario::NoRepeat => {
                let mut d = base(vec![C, C, C], vec![1.0; 3]);
                d.n_times = 1;
                d.x = vec![Correlated];
                d.truth.alpha = vec![1.0];
                d.q = Vec::new();
                d.truth.sigma_d = Mat::zeros(0, 0);
                d
            }
        }
    }
}

/// Sibship size of each family.
pub fn simulate_pedigree<R: RngCore + ?Sized>(design: &SimDesign, rng: &mut R) -> Vec<usize> {
    (0..design.n_families)
        .map(|_| sample_categorical(&design.size_probs, rng) + 1)
        .collect()
}

/// Hardy-Weinberg minor-allele count for a founder.
pub fn founder_genotype<R: RngCore + ?Sized>(maf: f64, rng: &mut R) -> u8 {
    bernoulli(maf, rng) as u8 + bernoulli(maf, rng) as u8
}

/// Child genotype: one allele transmitted at random from each parent.
pub fn child_genotype<R: RngCore + ?Sized>(mother: u8, father: u8, rng: &mut R) -> u8 {
    let pass = |g: u8, rng: &mut R| match g {
        0 => 0,
        2 => 1,
        _ => bernoulli(0.5, rng) as u8,
    };
    pass(mother, rng) + pass(father, rng)
}

/// One genotype per individual (family-major order) for every genotype
/// column of `X`; `out[i][k]` is the `k`-th genotype column.
pub fn simulate_genotypes<R: RngCore + ?Sized>(
    design: &SimDesign,
    sizes: &[usize],
    rng: &mut R,
) -> Vec<Vec<u8>> {
    let n_geno = design.x.iter().filter(|&&k| k == CovariateKind::Genotype).count();
    let mut out: Vec<Vec<u8>> = sizes.iter().flat_map(|&n| (0..n).map(|_| Vec::new())).collect();
    let mut i0 = 0;
    for &n in sizes {
        for _ in 0..n_geno {
            let m = founder_genotype(design.maf, rng);
            let f = founder_genotype(design.maf, rng);
            for row in &mut out[i0..i0 + n] {
                row.push(child_genotype(m, f, rng));
            }
        }
        i0 += n;
    }
    out
}

/// Covariate values indexed `[individual][time][column]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateValues {
    pub w: Vec<Vec<Vec<f64>>>,
    pub x: Vec<Vec<Vec<f64>>>,
    pub z: Vec<Vec<Vec<f64>>>,
    pub q: Vec<Vec<Vec<f64>>>,
}

/// Non-genotype covariates. Genotype columns of `X` are left at zero and
/// filled in by [`simulate_phenotypes`].
pub fn simulate_covariates<R: RngCore + ?Sized>(
    design: &SimDesign,
    sizes: &[usize],
    rng: &mut R,
) -> CovariateValues {
    let n_ind: usize = sizes.iter().sum();
    let t_n = design.n_times;
    let mean_t = (t_n as f64 + 1.0) / 2.0;
    let sd_t = sqrt(((t_n * t_n) as f64 - 1.0) / 12.0);
    let rf = sqrt(design.familial_corr);
    let re = sqrt(1.0 - design.familial_corr);
    let innov = sqrt(1.0 - design.ar_corr * design.ar_corr);
    let block = |kinds: &[CovariateKind], rng: &mut R| {
        let mut out = vec![vec![vec![0.0; kinds.len()]; t_n]; n_ind];
        for (k, &kind) in kinds.iter().enumerate() {
            let mut i = 0;
            for &n in sizes {
                let fam = standard_normal(rng);
                for _ in 0..n {
                    let mut prev = 0.0;
                    for t in 0..t_n {
                        out[i][t][k] = match kind {
                            CovariateKind::Intercept => 1.0,
                            CovariateKind::Genotype => 0.0,
                            CovariateKind::Time if sd_t > 0.0 => ((t + 1) as f64 - mean_t) / sd_t,
                            CovariateKind::Time => 0.0,
                            CovariateKind::Correlated => {
                                prev = if t == 0 {
                                    rf * fam + re * standard_normal(rng)
                                } else {
                                    design.ar_corr * prev + innov * standard_normal(rng)
                                };
                                prev
                            }
                        };
                    }
                    i += 1;
                }
            }
        }
        out
    };
    let w = block(&design.w, rng);
    let x = block(&design.x, rng);
    let z = block(&design.z, rng);
    let q = block(&design.q, rng);
    CovariateValues { w, x, z, q }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_effect<R: RngCore + ?Sized>(cov: &Mat, rng: &mut R) -> Result<Vec<f64>> {
    if cov.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(sample_mvn(&Vector::zeros(cov.nrows()), cov, rng)?.as_slice().to_vec())
}

fn names(prefix: &str, kinds: &[CovariateKind], first: usize) -> Vec<Covariate> {
    kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let name = format!("{prefix}{}", k + first);
            if kind == CovariateKind::Genotype {
                Covariate::genotype(name)
            } else {
                Covariate::new(name)
            }
        })
        .collect()
}

/// Draws random effects, latent scores and phenotypes given covariates and
/// genotypes, and assembles the dataset.
pub fn simulate_phenotypes<R: RngCore + ?Sized>(
    design: &SimDesign,
    sizes: &[usize],
    mut cov: CovariateValues,
    genotypes: &[Vec<u8>],
    rng: &mut R,
) -> Result<LongitudinalFamilyDataset> {
    let dims = design.dims();
    let n_ind: usize = sizes.iter().sum();
    let n_geno = design.x.iter().filter(|&&k| k == CovariateKind::Genotype).count();
    if cov.x.len() != n_ind || genotypes.len() != n_ind || genotypes.iter().any(|g| g.len() != n_geno) {
        return Err(Error::DimensionMismatch(
            "covariates or genotypes do not match the pedigree".into(),
        ));
    }
    design.truth.validate(&dims)?;
    let th = &design.truth;
    for (i, g) in genotypes.iter().enumerate() {
        let mut gk = 0;
        for (k, &kind) in design.x.iter().enumerate() {
            if kind == CovariateKind::Genotype {
                for rec in cov.x[i].iter_mut() {
                    rec[k] = g[gk] as f64;
                }
                gk += 1;
            }
        }
    }
    let mut families = Vec::with_capacity(sizes.len());
    let mut i = 0;
    for (c, &n) in sizes.iter().enumerate() {
        let a = random_effect(&th.sigma_a, rng)?;
        let mut individuals = Vec::with_capacity(n);
        for s in 0..n {
            let d = random_effect(&th.sigma_d, rng)?;
            let b: Vec<f64> = (0..dims.j)
                .map(|j| sqrt(th.tau2[j]) * standard_normal(rng))
                .collect();
            let mut records = Vec::with_capacity(design.n_times);
            for t in 0..design.n_times {
                let (w, x, z, q) = (&cov.w[i][t], &cov.x[i][t], &cov.z[i][t], &cov.q[i][t]);
                let u = dot(x, &th.alpha) + dot(z, &a) + dot(q, &d) + standard_normal(rng);
                let y = (0..dims.j)
                    .map(|j| {
                        let eta = th.beta0[j] + dot(w, &th.beta[j]) + th.lambda[j] * u + b[j];
                        Some(match design.kinds[j] {
                            PhenotypeKind::Continuous => eta + sqrt(th.sigma2[j]) * standard_normal(rng),
                            PhenotypeKind::Binary => (eta + standard_normal(rng) > 0.0) as u8 as f64,
                        })
                    })
                    .collect();
                records.push(TimeRecord {
                    time: t as u32 + 1,
                    y,
                    imputed: vec![false; dims.j],
                    w: w.clone(),
                    x: x.clone(),
                    z: z.clone(),
                    q: q.clone(),
                });
            }
            individuals.push(Individual {
                id: format!("{}-{}", c + 1, s + 1),
                records,
            });
            i += 1;
        }
        families.push(Family {
            id: format!("{}", c + 1),
            individuals,
        });
    }
    let phenotypes = design
        .kinds
        .iter()
        .enumerate()
        .map(|(j, &kind)| Phenotype {
            name: String::from(format!("y{}", j + 1)),
            kind,
        })
        .collect();
    Ok(LongitudinalFamilyDataset {
        phenotypes,
        w: names("w", &design.w, 1),
        x: names("x", &design.x, 1),
        z: names("z", &design.z, 0),
        q: names("q", &design.q, 0),
        families,
    })
}

/// Full forward simulation of one dataset.
pub fn simulate<R: RngCore + ?Sized>(design: &SimDesign, rng: &mut R) -> Result<LongitudinalFamilyDataset> {
    design.validate()?;
    let sizes = simulate_pedigree(design, rng);
    let genotypes = simulate_genotypes(design, &sizes, rng);
    let cov = simulate_covariates(design, &sizes, rng);
    simulate_phenotypes(design, &sizes, cov, &genotypes, rng)
}
