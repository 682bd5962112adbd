//! `[section]` / `key = value` run configuration.
//!
//! Any key may be overridden from the environment as
//! `PLEIOLV_<SECTION>_<KEY>` (upper case). Unknown sections and keys are
//! rejected so typos surface as config errors.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use pleiolv_core::linalg::Mat;
use pleiolv_core::model::{BetaPrior, ParameterSet};
use pleiolv_core::sampler::Scheme;
use pleiolv_core::selection::{build_grid, PathPlan, PathTarget, SelectionRule, DEFAULT_GRID};
use pleiolv_core::simgen::{Scenario, SimDesign};
use pleiolv_core::{PriorConfig, SamplerConfig};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "PLEIOLV_";

const KNOWN: &[(&str, &[&str])] = &[
    ("run", &["seed", "workers"]),
    (
        "simulate",
        &["scenario", "families", "times", "maf", "familial_corr", "ar_corr"],
    ),
    (
        "sampler",
        &["scheme", "iterations", "burn_in", "thin", "independence_mode"],
    ),
    (
        "priors",
        &[
            "v1",
            "v2",
            "sigma2_shape",
            "sigma2_rate",
            "wishart_df_a",
            "wishart_scale_a",
            "wishart_df_d",
            "wishart_scale_d",
            "fixed_effect_var",
            "alpha_var",
            "working_df",
            "spike_slab",
            "spike_a",
            "spike_b",
        ],
    ),
    ("select", &["threshold", "fdr"]),
    (
        "bf",
        &[
            "target",
            "df",
            "grid",
            "grid_low",
            "grid_mid",
            "grid_high",
            "iterations",
            "burn_in",
            "warm_start",
            "warm_burn_in",
            "batches",
        ],
    ),
    (
        "replicate",
        &["count", "independence", "bf_targets", "keep_draws"],
    ),
    ("diag", &["max_lag"]),
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut cfg = Config::default();
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                let Some(section) = section else {
                    return Err(CliError::Config(format!(
                        "key `{k}` appears before any [section]"
                    )));
                };
                cfg.set(section, k, v)?;
            }
        }
        Ok(cfg)
    }

    /// Reads `path` (if any) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)?
            }
            None => Config::default(),
        };
        cfg.apply_env(std::env::vars())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let rest = rest.to_ascii_lowercase();
            let Some((section, key)) = rest.split_once('_') else {
                return Err(CliError::Config(format!("malformed override {name}")));
            };
            self.set(section, key, &value)?;
        }
        Ok(())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let section = section.trim().to_ascii_lowercase();
        let key = key.trim().to_ascii_lowercase();
        let Some((_, keys)) = KNOWN.iter().find(|(s, _)| *s == section) else {
            return Err(CliError::Config(format!("unknown section [{section}]")));
        };
        if !keys.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown key `{key}` in [{section}]")));
        }
        self.sections
            .entry(section)
            .or_default()
            .insert(key, value.trim().to_string());
        Ok(())
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("[{section}] {key} = `{v}` is not a valid value"))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn get_bool(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => parse_bool(v).ok_or_else(|| {
                CliError::Config(format!("[{section}] {key} = `{v}` is not a boolean"))
            }),
        }
    }

    /// Sorted `[section]` / `key = value` text; the digest input.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (s, props) in &self.sections {
            out.push_str(&format!("[{s}]\n"));
            for (k, v) in props {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn digest(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.get_or("run", "seed", 1)
    }

    pub fn workers(&self) -> Result<usize> {
        let w = self.get_or("run", "workers", 1usize)?;
        if w == 0 {
            return Err(CliError::Config("[run] workers must be at least 1".into()));
        }
        Ok(w)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let name = self
            .raw("simulate", "scenario")
            .ok_or_else(|| CliError::Config("[simulate] scenario is required".into()))?;
        Scenario::parse(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown scenario `{name}` (expected one of S5_1, S5_2, S5_3a, S5_3b, no_repeat)"
            ))
        })
    }

    pub fn design(&self) -> Result<SimDesign> {
        let mut d = SimDesign::scenario(self.scenario()?);
        d.n_families = self.get_or("simulate", "families", d.n_families)?;
        d.n_times = self.get_or("simulate", "times", d.n_times)?;
        d.maf = self.get_or("simulate", "maf", d.maf)?;
        d.familial_corr = self.get_or("simulate", "familial_corr", d.familial_corr)?;
        d.ar_corr = self.get_or("simulate", "ar_corr", d.ar_corr)?;
        d.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(d)
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        let mut c = SamplerConfig::default();
        if let Some(s) = self.raw("sampler", "scheme") {
            c.scheme = Scheme::parse(s).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown scheme `{s}` (expected SG, PX_HC, AC_PX_HC or PX2_HC)"
                ))
            })?;
        }
        c.iterations = self.get_or("sampler", "iterations", c.iterations)?;
        c.burn_in = self.get_or("sampler", "burn_in", c.burn_in)?;
        c.thin = self.get_or("sampler", "thin", c.thin)?;
        c.independence_mode = self.get_bool("sampler", "independence_mode", false)?;
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    /// Priors for `j` phenotypes, starting from `base`.
    pub fn priors(&self, base: PriorConfig, j: usize) -> Result<PriorConfig> {
        let mut p = base;
        p.v1 = self.get_or("priors", "v1", p.v1)?;
        p.v2 = self.get_or("priors", "v2", p.v2)?;
        p.sigma2_shape = self.get_or("priors", "sigma2_shape", p.sigma2_shape)?;
        p.sigma2_rate = self.get_or("priors", "sigma2_rate", p.sigma2_rate)?;
        p.wishart_scale_a = self.get_or("priors", "wishart_scale_a", p.wishart_scale_a)?;
        p.wishart_scale_d = self.get_or("priors", "wishart_scale_d", p.wishart_scale_d)?;
        if let Some(v) = self.get("priors", "wishart_df_a")? {
            p.wishart_df_a = Some(v);
        }
        if let Some(v) = self.get("priors", "wishart_df_d")? {
            p.wishart_df_d = Some(v);
        }
        p.fixed_effect_var = self.get_or("priors", "fixed_effect_var", p.fixed_effect_var)?;
        p.alpha_var = self.get_or("priors", "alpha_var", p.alpha_var)?;
        p.working_df = self.get_or("priors", "working_df", p.working_df)?;
        let current = p.slab(0).unwrap_or(BetaPrior { a: 1.0, b: 1.0 });
        let a = self.get_or("priors", "spike_a", current.a)?;
        let b = self.get_or("priors", "spike_b", current.b)?;
        match self.raw("priors", "spike_slab") {
            Some(v) => match parse_bool(v) {
                Some(true) => p = p.with_spike_slab(j, a, b),
                Some(false) => p.spike_slab.clear(),
                None => {
                    return Err(CliError::Config(format!(
                        "[priors] spike_slab = `{v}` is not a boolean"
                    )))
                }
            },
            None if !p.spike_slab.is_empty() => p = p.with_spike_slab(j, a, b),
            None => {}
        }
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn selection_rule(&self) -> Result<SelectionRule> {
        if let Some(q) = self.get::<f64>("select", "fdr")? {
            if !(q > 0.0 && q < 1.0) {
                return Err(CliError::Config("[select] fdr must lie in (0, 1)".into()));
            }
            return Ok(SelectionRule::Fdr(q));
        }
        let phi = self.get_or("select", "threshold", 0.5)?;
        if !(0.0..=1.0).contains(&phi) {
            return Err(CliError::Config("[select] threshold must lie in [0, 1]".into()));
        }
        Ok(SelectionRule::Threshold(phi))
    }

    /// Degrees of freedom for the Bayes factor; more than one value asks
    /// for a sensitivity sweep.
    pub fn bf_dfs(&self, default: f64) -> Result<Vec<f64>> {
        match self.raw("bf", "df") {
            None => Ok(vec![default]),
            Some(v) => parse_list(v).map_err(|_| {
                CliError::Config(format!("[bf] df = `{v}` is not a list of numbers"))
            }),
        }
    }

    /// Path plan for `target`, with per-grid chain settings taken from
    /// `[bf]` and falling back to `[sampler]`.
    pub fn path_plan(&self, target: PathTarget) -> Result<PathPlan> {
        let mut chain = self.sampler()?;
        chain.iterations = self.get_or("bf", "iterations", chain.iterations)?;
        chain.burn_in = self.get_or("bf", "burn_in", chain.burn_in)?;
        chain.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let mut plan = PathPlan::new(target, chain);
        if let Some(g) = self.raw("bf", "grid") {
            plan.grid = parse_list(g)
                .map_err(|_| CliError::Config(format!("[bf] grid = `{g}` is not a list of numbers")))?;
        } else {
            let (lo, hi, mid) = DEFAULT_GRID;
            plan.grid = build_grid(
                self.get_or("bf", "grid_low", lo)?,
                self.get_or("bf", "grid_high", hi)?,
                self.get_or("bf", "grid_mid", mid)?,
            );
        }
        plan.warm_start = self.get_bool("bf", "warm_start", true)?;
        plan.warm_burn_in = self.get_or("bf", "warm_burn_in", plan.chain.burn_in / 10)?;
        plan.batches = self.get_or("bf", "batches", plan.batches)?;
        let g = &plan.grid;
        if g.first() != Some(&0.0) || g.last() != Some(&1.0) || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "[bf] grid must increase strictly from 0 to 1".into(),
            ));
        }
        Ok(plan)
    }
}

pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

/// `lambda:J` (1-based phenotype) or `x:K[,K...]` (1-based X columns).
pub fn parse_target(s: &str) -> Result<PathTarget> {
    let bad = || CliError::Config(format!("bad Bayes factor target `{s}` (use lambda:J or x:K[,K])"));
    let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
    let idx: Vec<usize> = rest
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    if idx.is_empty() || idx.contains(&0) {
        return Err(bad());
    }
    match kind.trim() {
        "lambda" if idx.len() == 1 => Ok(PathTarget::Loading(idx[0] - 1)),
        "x" | "alpha" => Ok(PathTarget::Covariates(idx.iter().map(|k| k - 1).collect())),
        _ => Err(bad()),
    }
}

pub fn target_label(t: &PathTarget) -> String {
    match t {
        PathTarget::Loading(j) => format!("lambda:{}", j + 1),
        PathTarget::Covariates(ks) => format!(
            "x:{}",
            ks.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(",")
        ),
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Truth with `Sigma_A` dropped, for comparison with independence fits.
pub fn without_sigma_a(truth: &ParameterSet) -> ParameterSet {
    ParameterSet {
        sigma_a: Mat::zeros(0, 0),
        ..truth.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = Config::parse("[sampler]\nscheme = SG\niterations = 100\nburn_in = 10\n").unwrap();
        c.apply_env([
            ("PLEIOLV_SAMPLER_ITERATIONS".to_string(), "200".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ])
        .unwrap();
        let s = c.sampler().unwrap();
        assert_eq!(s.scheme, Scheme::Sg);
        assert_eq!(s.iterations, 200);
        assert_eq!(s.burn_in, 10);
    }

    #[test]
    fn unknown_keys_and_values_are_config_errors() {
        assert!(matches!(Config::parse("[sampler]\nitertions = 5\n"), Err(CliError::Config(_))));
        assert!(matches!(Config::parse("[nope]\na = 1\n"), Err(CliError::Config(_))));
        let c = Config::parse("[simulate]\nscenario = S9\n").unwrap();
        assert!(matches!(c.scenario(), Err(CliError::Config(_))));
        let c = Config::parse("[sampler]\niterations = many\n").unwrap();
        assert!(matches!(c.sampler(), Err(CliError::Config(_))));
    }

    #[test]
    fn digest_tracks_every_field() {
        let a = Config::parse("[run]\nseed = 1\n[sampler]\nthin = 1\n").unwrap();
        let b = Config::parse("[sampler]\nthin = 1\n[run]\nseed = 1\n").unwrap();
        let c = Config::parse("[run]\nseed = 2\n[sampler]\nthin = 1\n").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn targets() {
        assert_eq!(parse_target("lambda:2").unwrap(), PathTarget::Loading(1));
        assert_eq!(parse_target("x:4,5").unwrap(), PathTarget::Covariates(vec![3, 4]));
        assert!(parse_target("lambda:0").is_err());
        assert!(parse_target("beta:1").is_err());
        assert_eq!(target_label(&PathTarget::Covariates(vec![3, 4])), "x:4,5");
    }

    #[test]
    fn grid_without_endpoint_is_rejected() {
        let c = Config::parse("[bf]\ngrid = 0, 0.5, 0.9\n").unwrap();
        assert!(matches!(c.path_plan(PathTarget::Loading(0)), Err(CliError::Config(_))));
        let c = Config::parse("[bf]\ngrid = 0, 0.5, 1\n").unwrap();
        assert_eq!(c.path_plan(PathTarget::Loading(0)).unwrap().grid, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn spike_slab_switch() {
        let c = Config::parse("[priors]\nspike_slab = true\nspike_a = 0.25\n").unwrap();
        let p = c.priors(PriorConfig::default(), 3).unwrap();
        assert_eq!(p.slab(2), Some(BetaPrior { a: 0.25, b: 1.0 }));
        let c = Config::parse("[priors]\nspike_slab = false\n").unwrap();
        let base = PriorConfig::default().with_spike_slab(3, 0.25, 1.0);
        assert!(c.priors(base, 3).unwrap().spike_slab.is_empty());
    }
}
