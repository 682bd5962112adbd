//! File formats and atomic writes.
//!
//! Reals are written as `{:.16e}` (17 significant digits), which makes
//! parse-then-serialize byte-identical. Binary phenotypes and the `omega`
//! indicator columns are written as `0`/`1`, missing cells as `NA`.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use pleiolv_core::diagnostics::PosteriorSummary;
use pleiolv_core::model::{
    Covariate, Family, Individual, LongitudinalFamilyDataset, ParamLayout, ParameterSet,
    Phenotype, PhenotypeKind, TimeRecord,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::{CliError, Result};

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(&r).map_err(to_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv encoding: {e}")))
}

pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => CliError::io(path, std::io::Error::other(e.to_string())),
            _ => CliError::parse(path, e.to_string()),
        })?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::parse(path, e.to_string()))?;
    Ok((header, rows))
}

enum Column {
    Y(usize),
    W(usize),
    X(usize),
    Z(usize),
    Q(usize),
}

pub fn dataset_header(d: &LongitudinalFamilyDataset) -> Vec<String> {
    let mut h = vec!["family_id".to_string(), "individual_id".into(), "time".into()];
    for p in &d.phenotypes {
        let kind = match p.kind {
            PhenotypeKind::Continuous => "cont",
            PhenotypeKind::Binary => "bin",
        };
        h.push(format!("y:{}:{kind}", p.name));
    }
    h.extend(d.w.iter().map(|c| format!("w:{}", c.name)));
    h.extend(d.x.iter().map(|c| {
        if c.genotype {
            format!("x:{}:geno", c.name)
        } else {
            format!("x:{}", c.name)
        }
    }));
    h.extend(d.z.iter().map(|c| format!("z:{}", c.name)));
    h.extend(d.q.iter().map(|c| format!("q:{}", c.name)));
    h
}

pub fn dataset_to_bytes(d: &LongitudinalFamilyDataset) -> Result<Vec<u8>> {
    let mut rows = Vec::with_capacity(d.n_records());
    for fam in &d.families {
        for ind in &fam.individuals {
            for rec in &ind.records {
                let mut row = vec![fam.id.clone(), ind.id.clone(), rec.time.to_string()];
                for (p, y) in d.phenotypes.iter().zip(&rec.y) {
                    row.push(match (y, p.kind) {
                        (None, _) => "NA".to_string(),
                        (Some(v), PhenotypeKind::Binary) if *v == 0.0 || *v == 1.0 => {
                            format!("{}", *v as u8)
                        }
                        (Some(v), _) => real(*v),
                    });
                }
                for block in [&rec.w, &rec.x, &rec.z, &rec.q] {
                    row.extend(block.iter().map(|v| real(*v)));
                }
                rows.push(row);
            }
        }
    }
    csv_bytes(&dataset_header(d), rows)
}

pub fn write_dataset(path: &Path, d: &LongitudinalFamilyDataset) -> Result<()> {
    write_atomic(path, &dataset_to_bytes(d)?)
}

pub fn read_dataset(path: &Path) -> Result<LongitudinalFamilyDataset> {
    let (header, rows) = read_csv(path)?;
    if header.len() < 3 || header[0] != "family_id" || header[1] != "individual_id" || header[2] != "time" {
        return Err(CliError::parse(
            path,
            "header must start with family_id,individual_id,time",
        ));
    }
    let mut d = LongitudinalFamilyDataset {
        phenotypes: Vec::new(),
        w: Vec::new(),
        x: Vec::new(),
        z: Vec::new(),
        q: Vec::new(),
        families: Vec::new(),
    };
    let mut cols = Vec::with_capacity(header.len() - 3);
    for h in &header[3..] {
        let parts: Vec<&str> = h.split(':').collect();
        let col = match parts.as_slice() {
            ["y", name, "cont"] | ["y", name, "bin"] => {
                let kind = if parts[2] == "cont" {
                    PhenotypeKind::Continuous
                } else {
                    PhenotypeKind::Binary
                };
                d.phenotypes.push(Phenotype {
                    name: name.to_string(),
                    kind,
                });
                Column::Y(d.phenotypes.len() - 1)
            }
            ["w", name] => {
                d.w.push(Covariate::new(*name));
                Column::W(d.w.len() - 1)
            }
            ["x", name] => {
                d.x.push(Covariate::new(*name));
                Column::X(d.x.len() - 1)
            }
            ["x", name, "geno"] => {
                d.x.push(Covariate::genotype(*name));
                Column::X(d.x.len() - 1)
            }
            ["z", name] => {
                d.z.push(Covariate::new(*name));
                Column::Z(d.z.len() - 1)
            }
            ["q", name] => {
                d.q.push(Covariate::new(*name));
                Column::Q(d.q.len() - 1)
            }
            _ => return Err(CliError::parse(path, format!("unrecognised column `{h}`"))),
        };
        cols.push(col);
    }
    let mut fam_index: HashMap<String, usize> = HashMap::new();
    let mut ind_index: HashMap<(usize, String), usize> = HashMap::new();
    for (line, row) in rows.iter().enumerate() {
        let at = |detail: String| CliError::parse(path, format!("row {}: {detail}", line + 2));
        if row.len() != header.len() {
            return Err(at(format!("expected {} fields, found {}", header.len(), row.len())));
        }
        let time: u32 = row[2]
            .trim()
            .parse()
            .map_err(|_| at(format!("time `{}` is not a non-negative integer", &row[2])))?;
        let mut rec = TimeRecord {
            time,
            y: vec![None; d.phenotypes.len()],
            imputed: vec![false; d.phenotypes.len()],
            w: vec![0.0; d.w.len()],
            x: vec![0.0; d.x.len()],
            z: vec![0.0; d.z.len()],
            q: vec![0.0; d.q.len()],
        };
        for (col, cell) in cols.iter().zip(row.iter().skip(3)) {
            let cell = cell.trim();
            let value = if cell == "NA" {
                None
            } else {
                Some(
                    cell.parse::<f64>()
                        .map_err(|_| at(format!("`{cell}` is not a number")))?,
                )
            };
            match (col, value) {
                (Column::Y(j), v) => rec.y[*j] = v,
                (_, None) => return Err(at("covariates cannot be NA".into())),
                (Column::W(k), Some(v)) => rec.w[*k] = v,
                (Column::X(k), Some(v)) => rec.x[*k] = v,
                (Column::Z(k), Some(v)) => rec.z[*k] = v,
                (Column::Q(k), Some(v)) => rec.q[*k] = v,
            }
        }
        let fam_id = row[0].to_string();
        let c = *fam_index.entry(fam_id.clone()).or_insert_with(|| {
            d.families.push(Family {
                id: fam_id.clone(),
                individuals: Vec::new(),
            });
            d.families.len() - 1
        });
        let ind_id = row[1].to_string();
        let i = *ind_index.entry((c, ind_id.clone())).or_insert_with(|| {
            d.families[c].individuals.push(Individual {
                id: ind_id,
                records: Vec::new(),
            });
            d.families[c].individuals.len() - 1
        });
        d.families[c].individuals[i].records.push(rec);
    }
    Ok(d)
}

/// Draws as read back from a draws file.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub names: Vec<String>,
    /// Row-major, one row per retained iteration.
    pub values: Vec<f64>,
}

impl Draws {
    pub fn n_draws(&self) -> usize {
        if self.names.is_empty() {
            0
        } else {
            self.values.len() / self.names.len()
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.names.iter().position(|n| n == name)?;
        Some(self.column_at(c))
    }

    pub fn column_at(&self, c: usize) -> Vec<f64> {
        let k = self.names.len();
        self.values.iter().skip(c).step_by(k).copied().collect()
    }
}

pub fn draws_to_bytes(names: &[String], values: &[f64]) -> Result<Vec<u8>> {
    let k = names.len().max(1);
    let indicator: Vec<bool> = names.iter().map(|n| n.starts_with("omega_")).collect();
    let rows = values.chunks(k).map(|row| {
        row.iter()
            .zip(&indicator)
            .map(|(v, &ind)| if ind { format!("{}", (*v > 0.5) as u8) } else { real(*v) })
            .collect::<Vec<_>>()
    });
    csv_bytes(names, rows)
}

pub fn read_draws(path: &Path) -> Result<Draws> {
    let (names, rows) = read_csv(path)?;
    if names.is_empty() {
        return Err(CliError::parse(path, "draws file has no columns"));
    }
    let mut values = Vec::with_capacity(rows.len() * names.len());
    for (line, row) in rows.iter().enumerate() {
        if row.len() != names.len() {
            return Err(CliError::parse(path, format!("row {}: wrong field count", line + 2)));
        }
        for cell in row.iter() {
            values.push(cell.trim().parse::<f64>().map_err(|_| {
                CliError::parse(path, format!("row {}: `{cell}` is not a number", line + 2))
            })?);
        }
    }
    Ok(Draws { names, values })
}

pub fn summary_rows(s: &[PosteriorSummary]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["name", "mean", "sd", "hpd_lower", "hpd_upper"]
        .map(String::from)
        .to_vec();
    let rows = s
        .iter()
        .map(|p| {
            vec![
                p.name.clone(),
                real(p.mean),
                real(p.sd),
                real(p.hpd_lower),
                real(p.hpd_upper),
            ]
        })
        .collect();
    (header, rows)
}

pub fn write_truth(path: &Path, truth: &ParameterSet, layout: &ParamLayout) -> Result<()> {
    let rows = layout
        .names()
        .into_iter()
        .zip(truth.to_values(layout))
        .map(|(n, v)| vec![n, real(v)]);
    write_csv(path, &["name".to_string(), "value".to_string()], rows)
}

pub fn read_truth(path: &Path, layout: &ParamLayout) -> Result<ParameterSet> {
    let (header, rows) = read_csv(path)?;
    if header != ["name", "value"] {
        return Err(CliError::parse(path, "truth file header must be name,value"));
    }
    let mut map = HashMap::new();
    for row in &rows {
        let v: f64 = row[1]
            .trim()
            .parse()
            .map_err(|_| CliError::parse(path, format!("`{}` is not a number", &row[1])))?;
        map.insert(row[0].to_string(), v);
    }
    let values = layout
        .names()
        .iter()
        .map(|n| {
            map.get(n)
                .copied()
                .ok_or_else(|| CliError::parse(path, format!("missing value for {n}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParameterSet::from_values(layout, &values)?)
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub status: String,
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates_done: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<OutputEntry>,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, config_digest: String, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            status: "incomplete".into(),
            config_digest,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            replicates_done: None,
            error: None,
            outputs: Vec::new(),
        }
    }

    /// Records `path` (relative to `root`) with its digest.
    pub fn record(&mut self, root: &Path, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let rel = path.strip_prefix(root).unwrap_or(path);
        self.outputs.retain(|o| Path::new(&o.path) != rel);
        self.outputs.push(OutputEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: hex(&Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    pub fn write(&mut self, root: &Path, complete: bool) -> Result<()> {
        self.status = if complete { "complete" } else { "incomplete" }.into();
        self.finished_unix = unix_now();
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("manifest encoding: {e}")))?;
        text.push('\n');
        write_atomic(&root.join("manifest.json"), text.as_bytes())
    }
}
