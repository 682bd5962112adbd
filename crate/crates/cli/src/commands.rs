//! Subcommand implementations. Each writes its outputs under `out` and
//! finishes with a `manifest.json`.

use std::path::{Path, PathBuf};

use pleiolv_core::diagnostics::{
    acf, ess, iact, mean_sd, summarize_chain, summarize_replicates, ReplicateSummary,
};
use pleiolv_core::model::{LongitudinalFamilyDataset, ParamLayout};
use pleiolv_core::rng::{Purpose, RngHandle, StreamId};
use pleiolv_core::sampler::run_chain;
use pleiolv_core::selection::{
    df_sensitivity, inclusion_probability, log_bayes_factor, select_phenotypes, BfResult, Decision,
    PathTarget,
};
use pleiolv_core::simgen::{simulate, SimDesign};
use pleiolv_core::{ChainOutput, ModelData, PriorConfig};
use rayon::prelude::*;

use crate::config::{parse_target, target_label, Config};
use crate::error::{CliError, Result};
use crate::io::{
    draws_to_bytes, read_dataset, read_draws, real, summary_rows, write_atomic, write_csv,
    write_dataset, write_truth, RunManifest,
};

fn strings<const N: usize>(xs: [&str; N]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn decision_label(d: Decision) -> &'static str {
    match d {
        Decision::SupportsAlternative => "alternative",
        Decision::SupportsNull => "null",
        Decision::Inconclusive => "inconclusive",
    }
}

/// Loads a dataset and imputes missing phenotype cells.
pub fn load_model_data(path: &Path) -> Result<(LongitudinalFamilyDataset, ModelData)> {
    let mut ds = read_dataset(path)?;
    let report = ds.validate();
    if !report.passed() {
        return Err(CliError::Validation(format!("{}: {report}", path.display())));
    }
    if ds.has_missing() {
        ds = ds.impute_missing()?;
    }
    let data = ModelData::new(&ds)?;
    Ok((ds, data))
}

pub fn cmd_simulate(cfg: &Config, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("simulate", cfg.digest(), cfg.seed()?);
    let design = cfg.design()?;
    let mut rng = RngHandle::new(cfg.seed()?, StreamId::new(Purpose::Simulate)).rng();
    let ds = simulate(&design, &mut rng)?;
    let data_path = out.join("dataset.csv");
    write_dataset(&data_path, &ds)?;
    manifest.record(out, &data_path)?;
    let truth_path = out.join("truth.csv");
    write_truth(&truth_path, &design.truth, &ParamLayout::new(design.dims()))?;
    manifest.record(out, &truth_path)?;
    manifest.write(out, true)
}

fn write_chain(out: &Path, stem: &str, chain: &ChainOutput, manifest: &mut RunManifest) -> Result<()> {
    let draws = out.join(format!("draws{stem}.csv"));
    write_atomic(&draws, &draws_to_bytes(&chain.names, &chain.values)?)?;
    manifest.record(out, &draws)?;
    write_summary(out, stem, chain, manifest)
}

fn write_summary(out: &Path, stem: &str, chain: &ChainOutput, manifest: &mut RunManifest) -> Result<()> {
    let path = out.join(format!("summary{stem}.csv"));
    let (h, rows) = summary_rows(&summarize_chain(chain));
    write_csv(&path, &h, rows)?;
    manifest.record(out, &path)
}

pub fn cmd_fit(cfg: &Config, data_path: &Path, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("fit", cfg.digest(), cfg.seed()?);
    let (_, data) = load_model_data(data_path)?;
    let sampler = cfg.sampler()?;
    let priors = cfg.priors(PriorConfig::default(), data.dims.j)?;
    let handle = RngHandle::new(cfg.seed()?, StreamId::new(Purpose::Fit));
    let chain = run_chain(&data, &priors, &sampler, handle)?;
    write_chain(out, "", &chain, &mut manifest)?;
    manifest.write(out, true)
}

pub fn cmd_select(cfg: &Config, draws_path: &Path, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("select", cfg.digest(), cfg.seed()?);
    let draws = read_draws(draws_path)?;
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    for (c, name) in draws.names.iter().enumerate() {
        if let Some(j) = name.strip_prefix("omega_") {
            labels.push(j.to_string());
            probs.push(inclusion_probability(&draws.column_at(c)));
        }
    }
    if probs.is_empty() {
        return Err(pleiolv_core::Error::IndicatorAbsent(0).into());
    }
    let rule = cfg.selection_rule()?;
    let chosen = select_phenotypes(&probs, rule);
    let rows = labels.iter().zip(&probs).enumerate().map(|(k, (j, p))| {
        vec![j.clone(), real(*p), (chosen.contains(&k) as u8).to_string()]
    });
    let path = out.join("selection.csv");
    write_csv(&path, &strings(["phenotype", "probability", "selected"]), rows)?;
    manifest.record(out, &path)?;
    manifest.write(out, true)
}

fn bf_priors(cfg: &Config, j: usize, base: PriorConfig) -> Result<PriorConfig> {
    // Bayes factors compare the folded-t loading prior with its point null;
    // the spike-and-slab mixture is not part of either model.
    let mut p = cfg.priors(base, j)?;
    p.spike_slab.clear();
    Ok(p)
}

fn write_bf(out: &Path, stem: &str, results: &[BfResult], manifest: &mut RunManifest) -> Result<()> {
    let path = out.join(format!("bf{stem}.csv"));
    let rows = results.iter().map(|r| {
        vec![
            real(r.df),
            real(r.log_bf),
            real(r.se),
            decision_label(r.decision()).to_string(),
        ]
    });
    write_csv(&path, &strings(["df", "log_bf", "se", "decision"]), rows)?;
    manifest.record(out, &path)?;
    let path = out.join(format!("bf_grid{stem}.csv"));
    let rows = results.iter().flat_map(|r| {
        r.grid
            .iter()
            .zip(r.u_bar.iter().zip(&r.u_se))
            .map(move |(g, (u, s))| vec![real(r.df), real(*g), real(*u), real(*s)])
    });
    write_csv(&path, &strings(["df", "g", "u_bar", "u_se"]), rows)?;
    manifest.record(out, &path)
}

pub fn cmd_bf(cfg: &Config, data_path: &Path, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("bf", cfg.digest(), cfg.seed()?);
    let target = parse_target(
        cfg.raw("bf", "target")
            .ok_or_else(|| CliError::Config("[bf] target is required".into()))?,
    )?;
    let plan = cfg.path_plan(target)?;
    let (_, data) = load_model_data(data_path)?;
    let priors = bf_priors(cfg, data.dims.j, PriorConfig::default())?;
    let dfs = cfg.bf_dfs(priors.v1)?;
    let stream = StreamId::new(Purpose::Path);
    let results = if dfs.len() == 1 {
        let mut p = priors;
        p.v1 = dfs[0];
        vec![log_bayes_factor(&plan, &data, &p, cfg.seed()?, stream)?]
    } else {
        df_sensitivity(&plan, &data, &priors, &dfs, cfg.seed()?, stream)?.results
    };
    write_bf(out, "", &results, &mut manifest)?;
    manifest.write(out, true)
}

pub fn cmd_diag(cfg: &Config, draws_path: &Path, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("diag", cfg.digest(), cfg.seed()?);
    let draws = read_draws(draws_path)?;
    let n = draws.n_draws();
    let max_lag: usize = cfg.get_or("diag", "max_lag", 50)?;
    let max_lag = max_lag.min(n.saturating_sub(2));
    let na = || "NA".to_string();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (c, name) in draws.names.iter().enumerate() {
        let col = draws.column_at(c);
        let (m, sd) = mean_sd(&col);
        let (e, t) = match (ess(&col), iact(&col)) {
            (Ok(e), Ok(t)) => (real(e), real(t)),
            _ => (na(), na()),
        };
        let per_k = ess(&col).map(|e| real(e * 1000.0 / n as f64)).unwrap_or_else(|_| na());
        rows.push(vec![name.clone(), real(m), real(sd), e, t, per_k]);
        curves.push(acf(&col, max_lag).ok());
    }
    let path = out.join("diag.csv");
    write_csv(
        &path,
        &strings(["name", "mean", "sd", "ess", "iact", "ess_per_1000"]),
        rows,
    )?;
    manifest.record(out, &path)?;
    let mut header = vec!["lag".to_string()];
    header.extend(draws.names.iter().cloned());
    let acf_rows = (0..=max_lag).map(|k| {
        let mut row = vec![k.to_string()];
        row.extend(curves.iter().map(|c| c.as_ref().map(|v| real(v[k])).unwrap_or_else(na)));
        row
    });
    let path = out.join("acf.csv");
    write_csv(&path, &header, acf_rows)?;
    manifest.record(out, &path)?;
    manifest.write(out, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndependenceRuns {
    /// Full model only.
    Off,
    /// Independence model only.
    Only,
    /// Both, on the same datasets.
    Paired,
}

impl IndependenceRuns {
    fn from_config(cfg: &Config) -> Result<Self> {
        match cfg.raw("replicate", "independence").map(str::to_ascii_lowercase).as_deref() {
            None | Some("false") | Some("off") | Some("no") => Ok(Self::Off),
            Some("true") | Some("only") => Ok(Self::Only),
            Some("both") | Some("paired") => Ok(Self::Paired),
            Some(v) => Err(CliError::Config(format!(
                "[replicate] independence = `{v}` (expected false, only or both)"
            ))),
        }
    }
}

/// One simulated dataset and its analyses.
#[derive(Debug, Clone)]
pub struct ReplicateResult {
    pub index: usize,
    pub full: Option<ChainOutput>,
    pub independence: Option<ChainOutput>,
    /// Inclusion probability per phenotype (spike-and-slab runs only).
    pub pips: Vec<f64>,
    pub selected: Vec<usize>,
    pub bf: Vec<BfResult>,
}

#[derive(Debug, Clone)]
pub struct ReplicateReport {
    pub design: SimDesign,
    pub replicates: Vec<ReplicateResult>,
    pub full: Option<ReplicateSummary>,
    pub independence: Option<ReplicateSummary>,
    pub bf_targets: Vec<PathTarget>,
}

impl ReplicateReport {
    /// Log Bayes factors of target `t` across replicates.
    pub fn log_bfs(&self, t: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| r.bf[t].log_bf).collect()
    }

    /// Fraction of replicates selecting phenotype `j`.
    pub fn selection_frequency(&self, j: usize) -> f64 {
        let hits = self.replicates.iter().filter(|r| r.selected.contains(&j)).count();
        hits as f64 / self.replicates.len() as f64
    }
}

fn run_one(
    cfg: &Config,
    design: &SimDesign,
    priors: &PriorConfig,
    targets: &[PathTarget],
    mode: IndependenceRuns,
    index: usize,
    out: &Path,
) -> Result<ReplicateResult> {
    let seed = cfg.seed()?;
    let r = index as u32;
    let mut rng = RngHandle::new(seed, StreamId::new(Purpose::Simulate).replicate(r)).rng();
    let ds = simulate(design, &mut rng)?;
    let data = ModelData::new(&ds)?;
    let dir = out.join(format!("rep_{:04}", index + 1));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let keep_draws = cfg.get_bool("replicate", "keep_draws", false)?;
    let mut manifest = RunManifest::new("replicate", cfg.digest(), seed);
    let sampler = cfg.sampler()?;
    let mut result = ReplicateResult {
        index,
        full: None,
        independence: None,
        pips: Vec::new(),
        selected: Vec::new(),
        bf: Vec::new(),
    };
    if mode != IndependenceRuns::Only {
        let handle = RngHandle::new(seed, StreamId::new(Purpose::Fit).replicate(r).chain(0));
        let chain = run_chain(&data, priors, &sampler, handle)?;
        if keep_draws {
            write_chain(&dir, "", &chain, &mut manifest)?;
        } else {
            write_summary(&dir, "", &chain, &mut manifest)?;
        }
        if !chain.layout.omega.is_empty() {
            for &j in &chain.layout.omega {
                result.pips.push(pleiolv_core::selection::posterior_inclusion_probability(&chain, j)?);
            }
            result.selected = select_phenotypes(&result.pips, cfg.selection_rule()?)
                .into_iter()
                .map(|k| chain.layout.omega[k])
                .collect();
            let rows = chain.layout.omega.iter().zip(&result.pips).map(|(j, p)| {
                vec![
                    (j + 1).to_string(),
                    real(*p),
                    (result.selected.contains(j) as u8).to_string(),
                ]
            });
            let path = dir.join("selection.csv");
            write_csv(&path, &strings(["phenotype", "probability", "selected"]), rows)?;
            manifest.record(&dir, &path)?;
        }
        result.full = Some(chain);
    }
    if mode != IndependenceRuns::Off {
        let mut s = sampler.clone();
        s.independence_mode = true;
        let handle = RngHandle::new(seed, StreamId::new(Purpose::Fit).replicate(r).chain(1));
        let chain = run_chain(&data, priors, &s, handle)?;
        if keep_draws {
            write_chain(&dir, "_independence", &chain, &mut manifest)?;
        } else {
            write_summary(&dir, "_independence", &chain, &mut manifest)?;
        }
        result.independence = Some(chain);
    }
    if !targets.is_empty() {
        let bf_p = bf_priors(cfg, data.dims.j, design.priors())?;
        for (t, target) in targets.iter().enumerate() {
            let plan = cfg.path_plan(target.clone())?;
            let stream = StreamId::new(Purpose::Path).replicate(r).chain(t as u16);
            result.bf.push(log_bayes_factor(&plan, &data, &bf_p, seed, stream)?);
        }
        let path = dir.join("bf.csv");
        let rows = targets.iter().zip(&result.bf).map(|(t, b)| {
            vec![
                target_label(t),
                real(b.df),
                real(b.log_bf),
                real(b.se),
                decision_label(b.decision()).to_string(),
            ]
        });
        write_csv(&path, &strings(["target", "df", "log_bf", "se", "decision"]), rows)?;
        manifest.record(&dir, &path)?;
    }
    manifest.write(&dir, true)?;
    Ok(result)
}

fn summary_table(s: &ReplicateSummary) -> (Vec<String>, Vec<Vec<String>>) {
    let header = strings(["name", "truth", "mean", "bias", "sd", "rmse", "posterior_sd", "coverage"]);
    let rows = s
        .params
        .iter()
        .map(|p| {
            vec![
                p.name.clone(),
                real(p.truth),
                real(p.mean),
                real(p.bias),
                real(p.sd),
                real(p.rmse),
                real(p.mean_posterior_sd),
                real(p.coverage),
            ]
        })
        .collect();
    (header, rows)
}

/// Simulates and analyses `[replicate] count` datasets on independent
/// streams, then aggregates them. Replicates run on `[run] workers`
/// threads; outputs do not depend on the worker count.
pub fn run_replicates(cfg: &Config, out: &Path) -> Result<ReplicateReport> {
    let design = cfg.design()?;
    let count: usize = cfg
        .get("replicate", "count")?
        .ok_or_else(|| CliError::Config("[replicate] count is required".into()))?;
    if count < 2 {
        return Err(CliError::Config("[replicate] count must be at least 2".into()));
    }
    let mode = IndependenceRuns::from_config(cfg)?;
    let targets = match cfg.raw("replicate", "bf_targets") {
        None => Vec::new(),
        Some(s) => s
            .split(';')
            .filter(|t| !t.trim().is_empty())
            .map(parse_target)
            .collect::<Result<Vec<_>>>()?,
    };
    let priors = cfg.priors(design.priors(), design.kinds.len())?;
    cfg.sampler()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut manifest = RunManifest::new("replicate", cfg.digest(), cfg.seed()?);
    manifest.replicates_done = Some(0);
    manifest.write(out, false)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers()?)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<ReplicateResult>> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                run_one(cfg, &design, &priors, &targets, mode, i, out).map_err(|e| CliError::Replicate {
                    index: i + 1,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let done = results.iter().filter(|r| r.is_ok()).count();
    if let Some(err) = results.iter().find_map(|r| r.as_ref().err()) {
        manifest.replicates_done = Some(done);
        manifest.error = Some(err.to_string());
        manifest.write(out, false)?;
    }
    let replicates = results.into_iter().collect::<Result<Vec<_>>>()?;

    let aggregate = |pick: fn(&ReplicateResult) -> Option<&ChainOutput>| -> Result<Option<ReplicateSummary>> {
        let chains: Vec<ChainOutput> = replicates.iter().filter_map(|r| pick(r).cloned()).collect();
        if chains.is_empty() {
            return Ok(None);
        }
        Ok(Some(summarize_replicates(&chains, &design.truth)?))
    };
    let full = aggregate(|r| r.full.as_ref())?;
    let independence = aggregate(|r| r.independence.as_ref())?;
    for (stem, s) in [("", &full), ("_independence", &independence)] {
        if let Some(s) = s {
            let path = out.join(format!("replicates{stem}.csv"));
            let (h, rows) = summary_table(s);
            write_csv(&path, &h, rows)?;
            manifest.record(out, &path)?;
        }
    }
    let report = ReplicateReport {
        design,
        replicates,
        full,
        independence,
        bf_targets: targets,
    };
    if let Some(first) = report.replicates.first().and_then(|r| r.full.as_ref()) {
        if !first.layout.omega.is_empty() {
            let rows = first.layout.omega.iter().enumerate().map(|(k, &j)| {
                let pips: Vec<f64> = report.replicates.iter().map(|r| r.pips[k]).collect();
                vec![
                    (j + 1).to_string(),
                    real(report.design.truth.lambda[j]),
                    real(mean_sd(&pips).0),
                    real(report.selection_frequency(j)),
                ]
            });
            let path = out.join("selection_frequency.csv");
            write_csv(&path, &strings(["phenotype", "truth", "mean_probability", "frequency"]), rows)?;
            manifest.record(out, &path)?;
        }
    }
    if !report.bf_targets.is_empty() {
        let rows = report.bf_targets.iter().enumerate().map(|(t, target)| {
            let v = report.log_bfs(t);
            let (m, sd) = mean_sd(&v);
            let alt = report
                .replicates
                .iter()
                .filter(|r| r.bf[t].decision() == Decision::SupportsAlternative)
                .count();
            vec![
                target_label(target),
                real(m),
                real(sd),
                real(alt as f64 / report.replicates.len() as f64),
            ]
        });
        let path = out.join("bf_summary.csv");
        write_csv(&path, &strings(["target", "mean_log_bf", "sd_log_bf", "frequency_alternative"]), rows)?;
        manifest.record(out, &path)?;
    }
    manifest.replicates_done = Some(report.replicates.len());
    manifest.write(out, true)?;
    Ok(report)
}

pub fn cmd_replicate(cfg: &Config, out: &Path) -> Result<()> {
    run_replicates(cfg, out).map(|_| ())
}

/// Where a subcommand's outputs go.
pub fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("."))
}
