//! Bayesian latent variable modelling of multiple longitudinal phenotypes
//! measured on family-clustered individuals.
//!
//! The model has two parts. Each phenotype `j` loads on a latent severity
//! score `U` through a linear (continuous) or probit (binary) mixed model
//! with a subject-level random effect, and `U` itself follows a linear mixed
//! model in the indirect covariates `X` with family (`Z`) and subject (`Q`)
//! random effects. This crate provides
//!
//! * the data model and its identifiability checks ([`model`]),
//! * seeded variate generators ([`dist`], [`rng`]),
//! * standard Gibbs, PX-HC, AC-PX-HC and PX²-HC samplers ([`sampler`]),
//! * spike-and-slab phenotype selection and path-sampling Bayes factors
//!   ([`selection`]),
//! * a forward simulator for the family/genotype designs ([`simgen`]),
//! * chain and replicate diagnostics ([`diagnostics`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the companion `pleiolv` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod diagnostics;
pub mod dist;
mod error;
pub mod linalg;
pub mod math;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod selection;
pub mod simgen;

pub use error::{Error, Result};
pub use model::{
    LongitudinalFamilyDataset, ModelData, ParamLayout, ParameterSet, PhenotypeKind, PriorConfig,
};
pub use rng::{ChainRng, RngHandle, StreamId};
pub use sampler::{ChainOutput, Scheme, SamplerConfig};
