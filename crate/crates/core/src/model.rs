//! Dataset and parameter data model.
//!
//! A dataset is a list of families, each a list of individuals, each a
//! time-ordered list of records. Every record carries the phenotype vector
//! (continuous phenotypes first, then binary) and the four covariate blocks:
//! direct effects `W`, indirect effects `X` on the latent score, and the
//! family (`Z`) and subject (`Q`) random-effect designs.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{is_spd, Mat};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhenotypeKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phenotype {
    pub name: String,
    pub kind: PhenotypeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Covariate {
    pub name: String,
    /// Additive 0/1/2 minor-allele count column.
    pub genotype: bool,
}

impl Covariate {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            genotype: false,
        }
    }

    pub fn genotype(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            genotype: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeRecord {
    pub time: u32,
    /// `None` marks a missing phenotype cell.
    pub y: Vec<Option<f64>>,
    /// Cells filled in by [`LongitudinalFamilyDataset::impute_missing`].
    pub imputed: Vec<bool>,
    pub w: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: String,
    pub records: Vec<TimeRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub id: String,
    pub individuals: Vec<Individual>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalFamilyDataset {
    pub phenotypes: Vec<Phenotype>,
    pub w: Vec<Covariate>,
    pub x: Vec<Covariate>,
    pub z: Vec<Covariate>,
    pub q: Vec<Covariate>,
    pub families: Vec<Family>,
}

/// Block sizes of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    /// Number of phenotypes.
    pub j: usize,
    /// Number of continuous phenotypes; they come first.
    pub j1: usize,
    pub p1: usize,
    pub p2: usize,
    pub q1: usize,
    pub q2: usize,
}

impl Dims {
    pub fn n_binary(&self) -> usize {
        self.j - self.j1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OverlappingCovariates { name: String },
    InterceptInX { name: String },
    BinaryRange { cell: String, value: f64 },
    RaggedSeries { cell: String, expected: usize, found: usize },
    PhenotypeOrder { name: String },
    RecordWidth { cell: String, block: &'static str, expected: usize, found: usize },
    NonFinite { cell: String, block: &'static str },
    DuplicateTime { cell: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OverlappingCovariates { name } => {
                write!(f, "covariate {name} appears in both W and X")
            }
            Violation::InterceptInX { name } => {
                write!(f, "intercept in X: column {name} is constant")
            }
            Violation::BinaryRange { cell, value } => {
                write!(f, "binary range: {cell} has value {value}")
            }
            Violation::RaggedSeries {
                cell,
                expected,
                found,
            } => write!(f, "ragged series: {cell} has {found} time points, expected {expected}"),
            Violation::PhenotypeOrder { name } => {
                write!(f, "continuous phenotype {name} listed after a binary phenotype")
            }
            Violation::RecordWidth {
                cell,
                block,
                expected,
                found,
            } => write!(f, "{cell}: block {block} has {found} values, expected {expected}"),
            Violation::NonFinite { cell, block } => write!(f, "{cell}: non-finite value in {block}"),
            Violation::DuplicateTime { cell } => write!(f, "{cell}: duplicate time point"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Validation(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("pass");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// One phenotype cell in canonical `(c, i, t, j)` order (all zero-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<'a> {
    pub c: usize,
    pub i: usize,
    pub t: usize,
    pub j: usize,
    pub value: Option<f64>,
    pub imputed: bool,
    pub record: &'a TimeRecord,
}

impl LongitudinalFamilyDataset {
    pub fn dims(&self) -> Dims {
        Dims {
            j: self.phenotypes.len(),
            j1: self
                .phenotypes
                .iter()
                .take_while(|p| p.kind == PhenotypeKind::Continuous)
                .count(),
            p1: self.w.len(),
            p2: self.x.len(),
            q1: self.z.len(),
            q2: self.q.len(),
        }
    }

    pub fn n_individuals(&self) -> usize {
        self.families.iter().map(|f| f.individuals.len()).sum()
    }

    pub fn n_records(&self) -> usize {
        self.records().count()
    }

    pub fn records(&self) -> impl Iterator<Item = &TimeRecord> {
        self.families
            .iter()
            .flat_map(|f| f.individuals.iter())
            .flat_map(|i| i.records.iter())
    }

    pub fn has_missing(&self) -> bool {
        self.records().any(|r| r.y.iter().any(Option::is_none))
    }

    /// Checks the identifiability restrictions and structural invariants.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let w_names: BTreeSet<&str> = self.w.iter().map(|c| c.name.as_str()).collect();
        for c in &self.x {
            if w_names.contains(c.name.as_str()) {
                out.push(Violation::OverlappingCovariates {
                    name: c.name.clone(),
                });
            }
        }
        let mut seen_binary = false;
        for p in &self.phenotypes {
            match p.kind {
                PhenotypeKind::Binary => seen_binary = true,
                PhenotypeKind::Continuous if seen_binary => out.push(Violation::PhenotypeOrder {
                    name: p.name.clone(),
                }),
                PhenotypeKind::Continuous => {}
            }
        }
        let dims = self.dims();
        let mut expected_t: Option<usize> = None;
        for fam in &self.families {
            for ind in &fam.individuals {
                let tag = format!("family {} individual {}", fam.id, ind.id);
                let t = ind.records.len();
                match expected_t {
                    None => expected_t = Some(t),
                    Some(e) if e != t => out.push(Violation::RaggedSeries {
                        cell: tag.clone(),
                        expected: e,
                        found: t,
                    }),
                    Some(_) => {}
                }
                for pair in ind.records.windows(2) {
                    if pair[0].time >= pair[1].time {
                        out.push(Violation::DuplicateTime { cell: tag.clone() });
                    }
                }
                for rec in &ind.records {
                    let cell = format!("{tag} time {}", rec.time);
                    let widths = [
                        ("y", self.phenotypes.len(), rec.y.len()),
                        ("W", dims.p1, rec.w.len()),
                        ("X", dims.p2, rec.x.len()),
                        ("Z", dims.q1, rec.z.len()),
                        ("Q", dims.q2, rec.q.len()),
                    ];
                    let mut ok = true;
                    for (block, expected, found) in widths {
                        if expected != found {
                            ok = false;
                            out.push(Violation::RecordWidth {
                                cell: cell.clone(),
                                block,
                                expected,
                                found,
                            });
                        }
                    }
                    if !ok {
                        continue;
                    }
                    for (block, vals) in [("W", &rec.w), ("X", &rec.x), ("Z", &rec.z), ("Q", &rec.q)]
                    {
                        if vals.iter().any(|v| !v.is_finite()) {
                            out.push(Violation::NonFinite {
                                cell: cell.clone(),
                                block,
                            });
                        }
                    }
                    for (j, v) in rec.y.iter().enumerate() {
                        let Some(v) = *v else { continue };
                        if !v.is_finite() {
                            out.push(Violation::NonFinite {
                                cell: cell.clone(),
                                block: "y",
                            });
                        } else if self.phenotypes[j].kind == PhenotypeKind::Binary
                            && v != 0.0
                            && v != 1.0
                        {
                            out.push(Violation::BinaryRange {
                                cell: format!("{cell} phenotype {}", self.phenotypes[j].name),
                                value: v,
                            });
                        }
                    }
                }
            }
        }
        // A constant column in X plays the role of an intercept.
        for (k, c) in self.x.iter().enumerate() {
            let mut vals = self.records().filter(|r| r.x.len() == dims.p2).map(|r| r.x[k]);
            if let Some(first) = vals.next() {
                if first != 0.0 && vals.all(|v| v == first) {
                    out.push(Violation::InterceptInX {
                        name: c.name.clone(),
                    });
                }
            }
        }
        ValidationReport { violations: out }
    }

    /// Replaces each missing cell by the mean of that individual's observed
    /// values for the phenotype; binary cells take the rounded mean with ties
    /// going to 0.
    pub fn impute_missing(&self) -> Result<Self> {
        let mut out = self.clone();
        for fam in &mut out.families {
            for ind in &mut fam.individuals {
                for (j, pheno) in self.phenotypes.iter().enumerate() {
                    let observed: Vec<f64> = ind.records.iter().filter_map(|r| r.y[j]).collect();
                    if observed.len() == ind.records.len() {
                        continue;
                    }
                    if observed.is_empty() {
                        return Err(Error::AllMissingSeries {
                            family: fam.id.clone(),
                            individual: ind.id.clone(),
                            phenotype: pheno.name.clone(),
                        });
                    }
                    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                    let fill = match pheno.kind {
                        PhenotypeKind::Continuous => mean,
                        PhenotypeKind::Binary => {
                            if mean > 0.5 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                    for rec in &mut ind.records {
                        if rec.y[j].is_none() {
                            rec.y[j] = Some(fill);
                            rec.imputed[j] = true;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Every phenotype cell in `(c, i, t, j)` lexicographic order.
    pub fn flatten_index(&self) -> Vec<Cell<'_>> {
        let mut cells = Vec::with_capacity(self.n_records() * self.phenotypes.len());
        for (c, fam) in self.families.iter().enumerate() {
            for (i, ind) in fam.individuals.iter().enumerate() {
                for (t, rec) in ind.records.iter().enumerate() {
                    for j in 0..self.phenotypes.len() {
                        cells.push(Cell {
                            c,
                            i,
                            t,
                            j,
                            value: rec.y[j],
                            imputed: rec.imputed[j],
                            record: rec,
                        });
                    }
                }
            }
        }
        cells
    }

    /// Rebuilds a dataset from flattened cells, taking names and ids from
    /// `self`. Inverse of [`flatten_index`](Self::flatten_index).
    pub fn from_cells(&self, cells: &[Cell<'_>]) -> Self {
        let mut out = LongitudinalFamilyDataset {
            phenotypes: self.phenotypes.clone(),
            w: self.w.clone(),
            x: self.x.clone(),
            z: self.z.clone(),
            q: self.q.clone(),
            families: self
                .families
                .iter()
                .map(|f| Family {
                    id: f.id.clone(),
                    individuals: f
                        .individuals
                        .iter()
                        .map(|i| Individual {
                            id: i.id.clone(),
                            records: Vec::new(),
                        })
                        .collect(),
                })
                .collect(),
        };
        for cell in cells {
            let recs = &mut out.families[cell.c].individuals[cell.i].records;
            if recs.len() == cell.t {
                let mut rec = cell.record.clone();
                rec.y = vec![None; self.phenotypes.len()];
                rec.imputed = vec![false; self.phenotypes.len()];
                recs.push(rec);
            }
            let rec = &mut recs[cell.t];
            rec.y[cell.j] = cell.value;
            rec.imputed[cell.j] = cell.imputed;
        }
        out
    }

    /// Keeps only the listed phenotypes, in the given order.
    pub fn select_phenotypes(&self, keep: &[usize]) -> Self {
        let mut out = self.clone();
        out.phenotypes = keep.iter().map(|&j| self.phenotypes[j].clone()).collect();
        for fam in &mut out.families {
            for ind in &mut fam.individuals {
                for rec in &mut ind.records {
                    rec.y = keep.iter().map(|&j| rec.y[j]).collect();
                    rec.imputed = keep.iter().map(|&j| rec.imputed[j]).collect();
                }
            }
        }
        out
    }
}

/// Flattened, index-addressable view of a complete dataset used by the
/// samplers. Rows are `(c, i, t)` triples in canonical order, so each
/// individual's and each family's rows are contiguous.
#[derive(Debug, Clone)]
pub struct ModelData {
    pub dims: Dims,
    pub kinds: Vec<PhenotypeKind>,
    pub n_rows: usize,
    /// `n_rows × J`, row-major.
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
    pub row_ind: Vec<usize>,
    pub row_fam: Vec<usize>,
    /// Row range `[start, end)` of each individual.
    pub ind_rows: Vec<(usize, usize)>,
    pub ind_fam: Vec<usize>,
    pub fam_rows: Vec<(usize, usize)>,
    /// Individual range `[start, end)` of each family.
    pub fam_inds: Vec<(usize, usize)>,
}

impl ModelData {
    /// Builds the sampler view. The dataset must validate and have no
    /// missing cells (run [`LongitudinalFamilyDataset::impute_missing`]).
    pub fn new(d: &LongitudinalFamilyDataset) -> Result<Self> {
        d.validate().into_result()?;
        if d.has_missing() {
            return Err(Error::Validation(
                "dataset has missing phenotype cells; impute first".to_string(),
            ));
        }
        let dims = d.dims();
        let n_rows = d.n_records();
        let mut m = ModelData {
            dims,
            kinds: d.phenotypes.iter().map(|p| p.kind).collect(),
            n_rows,
            y: Vec::with_capacity(n_rows * dims.j),
            w: Vec::with_capacity(n_rows * dims.p1),
            x: Vec::with_capacity(n_rows * dims.p2),
            z: Vec::with_capacity(n_rows * dims.q1),
            q: Vec::with_capacity(n_rows * dims.q2),
            row_ind: Vec::with_capacity(n_rows),
            row_fam: Vec::with_capacity(n_rows),
            ind_rows: Vec::new(),
            ind_fam: Vec::new(),
            fam_rows: Vec::new(),
            fam_inds: Vec::new(),
        };
        for (c, fam) in d.families.iter().enumerate() {
            let fam_row_start = m.row_ind.len();
            let fam_ind_start = m.ind_rows.len();
            for ind in &fam.individuals {
                let idx = m.ind_rows.len();
                let start = m.row_ind.len();
                for rec in &ind.records {
                    m.y.extend(rec.y.iter().map(|v| v.unwrap_or(f64::NAN)));
                    m.w.extend_from_slice(&rec.w);
                    m.x.extend_from_slice(&rec.x);
                    m.z.extend_from_slice(&rec.z);
                    m.q.extend_from_slice(&rec.q);
                    m.row_ind.push(idx);
                    m.row_fam.push(c);
                }
                m.ind_rows.push((start, m.row_ind.len()));
                m.ind_fam.push(c);
            }
            m.fam_rows.push((fam_row_start, m.row_ind.len()));
            m.fam_inds.push((fam_ind_start, m.ind_rows.len()));
        }
        Ok(m)
    }

    /// The same data with the family random-effect design removed.
    pub fn without_family_effects(&self) -> Self {
        let mut out = self.clone();
        out.dims.q1 = 0;
        out.z.clear();
        out
    }

    pub fn n_ind(&self) -> usize {
        self.ind_rows.len()
    }

    pub fn n_fam(&self) -> usize {
        self.fam_rows.len()
    }

    pub fn is_binary(&self, j: usize) -> bool {
        self.kinds[j] == PhenotypeKind::Binary
    }

    #[inline]
    pub fn y(&self, r: usize, j: usize) -> f64 {
        self.y[r * self.dims.j + j]
    }

    #[inline]
    pub fn w_row(&self, r: usize) -> &[f64] {
        let p = self.dims.p1;
        &self.w[r * p..(r + 1) * p]
    }

    #[inline]
    pub fn x_row(&self, r: usize) -> &[f64] {
        let p = self.dims.p2;
        &self.x[r * p..(r + 1) * p]
    }

    #[inline]
    pub fn z_row(&self, r: usize) -> &[f64] {
        let p = self.dims.q1;
        &self.z[r * p..(r + 1) * p]
    }

    #[inline]
    pub fn q_row(&self, r: usize) -> &[f64] {
        let p = self.dims.q2;
        &self.q[r * p..(r + 1) * p]
    }
}

/// Model parameters on the original (identified) scale. The latent residual
/// variance is fixed at one and is not a field.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub beta0: Vec<f64>,
    /// `J` rows of `p1` direct-effect coefficients.
    pub beta: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub tau2: Vec<f64>,
    /// Residual variances of the continuous phenotypes (length `J1`).
    pub sigma2: Vec<f64>,
    pub sigma_a: Mat,
    pub sigma_d: Mat,
}

impl ParameterSet {
    /// Checks the sign and positivity restrictions.
    pub fn validate(&self, dims: &Dims) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if self.beta0.len() != dims.j
            || self.lambda.len() != dims.j
            || self.tau2.len() != dims.j
            || self.beta.len() != dims.j
            || self.beta.iter().any(|b| b.len() != dims.p1)
            || self.alpha.len() != dims.p2
            || self.sigma2.len() != dims.j1
        {
            return Err(Error::DimensionMismatch(
                "parameter set does not match dataset dimensions".to_string(),
            ));
        }
        if self.lambda.iter().any(|&l| !(l >= 0.0)) {
            return bad("loadings must be non-negative".to_string());
        }
        if self.tau2.iter().chain(self.sigma2.iter()).any(|&v| !(v > 0.0)) {
            return bad("variances must be positive".to_string());
        }
        if self.sigma_a.nrows() != dims.q1 || self.sigma_d.nrows() != dims.q2 {
            return Err(Error::DimensionMismatch(
                "random-effect covariance size".to_string(),
            ));
        }
        if dims.q1 > 0 && !is_spd(&self.sigma_a) {
            return bad("Sigma_A must be symmetric positive definite".to_string());
        }
        if dims.q2 > 0 && !is_spd(&self.sigma_d) {
            return bad("Sigma_D must be symmetric positive definite".to_string());
        }
        Ok(())
    }

    /// Values in the column order of `layout.names()` (indicator columns,
    /// if any, are left out).
    pub fn to_values(&self, layout: &ParamLayout) -> Vec<f64> {
        let mut v = Vec::with_capacity(layout.n_params());
        v.extend_from_slice(&self.beta0);
        for b in &self.beta {
            v.extend_from_slice(b);
        }
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.lambda);
        v.extend_from_slice(&self.tau2);
        v.extend_from_slice(&self.sigma2);
        if layout.include_sigma_a {
            push_upper(&mut v, &self.sigma_a);
        }
        push_upper(&mut v, &self.sigma_d);
        v
    }

    /// Inverse of [`to_values`](Self::to_values).
    pub fn from_values(layout: &ParamLayout, values: &[f64]) -> Result<Self> {
        if values.len() < layout.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} parameter values, got {}",
                layout.n_params(),
                values.len()
            )));
        }
        let d = layout.dims;
        let mut it = values.iter().copied();
        let mut take = |n: usize| -> Vec<f64> { (&mut it).take(n).collect() };
        let beta0 = take(d.j);
        let beta = (0..d.j).map(|_| take(d.p1)).collect();
        let alpha = take(d.p2);
        let lambda = take(d.j);
        let tau2 = take(d.j);
        let sigma2 = take(d.j1);
        let sigma_a = if layout.include_sigma_a {
            pull_upper(&take(d.q1 * (d.q1 + 1) / 2), d.q1)
        } else {
            Mat::zeros(0, 0)
        };
        let sigma_d = pull_upper(&take(d.q2 * (d.q2 + 1) / 2), d.q2);
        Ok(ParameterSet {
            beta0,
            beta,
            alpha,
            lambda,
            tau2,
            sigma2,
            sigma_a,
            sigma_d,
        })
    }
}

fn push_upper(v: &mut Vec<f64>, m: &Mat) {
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            v.push(m[(r, c)]);
        }
    }
}

fn pull_upper(vals: &[f64], n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    let mut k = 0;
    for r in 0..n {
        for c in r..n {
            m[(r, c)] = vals[k];
            m[(c, r)] = vals[k];
            k += 1;
        }
    }
    m
}

/// Column naming for draws, summaries and truth files.
///
/// Names are one-based: `beta0_j`, `beta_j_k`, `alpha_k`, `lambda_j`,
/// `tau2_j`, `sigma2_j`, `SigmaA_r_c` and `SigmaD_r_c` (upper triangle),
/// then `omega_j` for phenotypes with a spike-and-slab prior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub dims: Dims,
    pub include_sigma_a: bool,
    pub omega: Vec<usize>,
}

impl ParamLayout {
    pub fn new(dims: Dims) -> Self {
        Self {
            dims,
            include_sigma_a: dims.q1 > 0,
            omega: Vec::new(),
        }
    }

    pub fn n_params(&self) -> usize {
        let d = self.dims;
        let qa = if self.include_sigma_a {
            d.q1 * (d.q1 + 1) / 2
        } else {
            0
        };
        d.j * (3 + d.p1) + d.p2 + d.j1 + qa + d.q2 * (d.q2 + 1) / 2
    }

    pub fn n_columns(&self) -> usize {
        self.n_params() + self.omega.len()
    }

    pub fn names(&self) -> Vec<String> {
        let d = self.dims;
        let mut n = Vec::with_capacity(self.n_columns());
        n.extend((1..=d.j).map(|j| format!("beta0_{j}")));
        for j in 1..=d.j {
            n.extend((1..=d.p1).map(|k| format!("beta_{j}_{k}")));
        }
        n.extend((1..=d.p2).map(|k| format!("alpha_{k}")));
        n.extend((1..=d.j).map(|j| format!("lambda_{j}")));
        n.extend((1..=d.j).map(|j| format!("tau2_{j}")));
        n.extend((1..=d.j1).map(|j| format!("sigma2_{j}")));
        if self.include_sigma_a {
            upper_names(&mut n, "SigmaA", d.q1);
        }
        upper_names(&mut n, "SigmaD", d.q2);
        n.extend(self.omega.iter().map(|j| format!("omega_{}", j + 1)));
        n
    }

    /// Column index of a named parameter.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| n == name)
    }
}

fn upper_names(out: &mut Vec<String>, prefix: &str, q: usize) {
    for r in 1..=q {
        for c in r..=q {
            out.push(format!("{prefix}_{r}_{c}"));
        }
    }
}

/// Beta hyperparameters of a spike-and-slab inclusion probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

/// Prior hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Degrees of freedom of the folded-t prior induced on each loading.
    pub v1: f64,
    /// Degrees of freedom of the folded-t prior induced on each `tau`.
    pub v2: f64,
    /// Per-phenotype spike-and-slab prior; `None` gives the half-normal slab
    /// alone. Shorter than `J` means "disabled" for the remainder.
    pub spike_slab: Vec<Option<BetaPrior>>,
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
    /// Inverse-Wishart df for the family covariance; `None` means `q1 + 1`.
    pub wishart_df_a: Option<f64>,
    /// Multiple of the identity used as the inverse-Wishart scale.
    pub wishart_scale_a: f64,
    pub wishart_df_d: Option<f64>,
    pub wishart_scale_d: f64,
    /// Prior variance of `beta0*` and of each direct-effect coefficient.
    pub fixed_effect_var: f64,
    /// Prior variance of each indirect-effect coefficient `alpha`.
    pub alpha_var: f64,
    /// Working prior `IG(df/2, df/2)` of the probit scale parameter.
    pub working_df: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            v1: 10.0,
            v2: 10.0,
            spike_slab: Vec::new(),
            sigma2_shape: 0.1,
            sigma2_rate: 0.1,
            wishart_df_a: None,
            wishart_scale_a: 10.0,
            wishart_df_d: None,
            wishart_scale_d: 10.0,
            fixed_effect_var: 1000.0,
            alpha_var: 1000.0,
            working_df: 1.0,
        }
    }
}

impl PriorConfig {
    /// Spike-and-slab with `Beta(a, b)` on every phenotype.
    pub fn with_spike_slab(mut self, j: usize, a: f64, b: f64) -> Self {
        self.spike_slab = vec![Some(BetaPrior { a, b }); j];
        self
    }

    pub fn slab(&self, j: usize) -> Option<BetaPrior> {
        self.spike_slab.get(j).copied().flatten()
    }

    pub fn df_a(&self, q1: usize) -> f64 {
        self.wishart_df_a.unwrap_or(q1 as f64 + 1.0)
    }

    pub fn df_d(&self, q2: usize) -> f64 {
        self.wishart_df_d.unwrap_or(q2 as f64 + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("v1", self.v1),
            ("v2", self.v2),
            ("sigma2_shape", self.sigma2_shape),
            ("sigma2_rate", self.sigma2_rate),
            ("wishart_scale_a", self.wishart_scale_a),
            ("wishart_scale_d", self.wishart_scale_d),
            ("fixed_effect_var", self.fixed_effect_var),
            ("alpha_var", self.alpha_var),
            ("working_df", self.working_df),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        for df in [self.wishart_df_a, self.wishart_df_d].into_iter().flatten() {
            if !(df > 0.0) {
                return Err(Error::InvalidArgument("Wishart df must be positive".into()));
            }
        }
        for s in self.spike_slab.iter().flatten() {
            if !(s.a > 0.0 && s.b > 0.0) {
                return Err(Error::InvalidArgument(
                    "spike-and-slab Beta parameters must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}
