//! Chain and replicate diagnostics: autocorrelation, effective sample
//! size, highest posterior density intervals and replicate summaries.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::model::{ParamLayout, ParameterSet};
use crate::sampler::ChainOutput;
use crate::{Error, Result};

fn centred(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let var = c.iter().map(|x| x * x).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::ConstantSeries);
    }
    Ok((c, var))
}

fn autocov(c: &[f64], k: usize) -> f64 {
    let n = c.len();
    let mut acc = 0.0;
    for t in 0..n - k {
        acc += c[t] * c[t + k];
    }
    acc / n as f64
}

/// Sample autocorrelations at lags `0..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag + 1 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            required: max_lag + 2,
        });
    }
    let (c, var) = centred(series)?;
    Ok((0..=max_lag).map(|k| autocov(&c, k) / var).collect())
}

/// Integrated autocorrelation time `1 + 2 Σ ρ_k`, truncated by the
/// initial-positive-sequence rule on pair sums `ρ_{2m} + ρ_{2m+1}`.
pub fn iact(series: &[f64]) -> Result<f64> {
    if series.len() < 4 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            required: 4,
        });
    }
    let (c, var) = centred(series)?;
    let n = c.len();
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocov(&c, 2 * m) + autocov(&c, 2 * m + 1)) / var;
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    Ok((2.0 * sum - 1.0).max(1.0))
}

/// Effective sample size `n / IACT`; never exceeds `n`.
pub fn ess(series: &[f64]) -> Result<f64> {
    Ok(series.len() as f64 / iact(series)?)
}

/// Shortest interval containing `⌈level·n⌉` of the sorted draws.
pub fn hpdi(series: &[f64], level: f64) -> Result<(f64, f64)> {
    if series.len() < 100 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            required: 100,
        });
    }
    Ok(shortest_interval(series, level))
}

/// [`hpdi`] without the minimum-length check (any non-empty series).
pub fn shortest_interval(series: &[f64], level: f64) -> (f64, f64) {
    let mut s: Vec<f64> = series.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let m = libm::ceil(level * n as f64 - 1e-9).max(1.0) as usize;
    let m = m.min(n);
    let mut best = (s[0], s[m - 1]);
    for i in 1..=(n - m) {
        if s[i + m - 1] - s[i] < best.1 - best.0 {
            best = (s[i], s[i + m - 1]);
        }
    }
    best
}

/// Pointwise mean of equally long ACF curves.
pub fn mean_curve(curves: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = curves.first() else {
        return Vec::new();
    };
    let mut out = alloc::vec![0.0; first.len()];
    for c in curves {
        for (o, v) in out.iter_mut().zip(c) {
            *o += v / curves.len() as f64;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
}

/// Mean, SD and 95% HpdI of every column of a chain.
pub fn summarize_chain(chain: &ChainOutput) -> Vec<PosteriorSummary> {
    (0..chain.n_columns())
        .map(|c| {
            let col = chain.column_at(c);
            let (mean, sd) = mean_sd(&col);
            let (lo, hi) = if col.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                shortest_interval(&col, 0.95)
            };
            PosteriorSummary {
                name: chain.names[c].clone(),
                mean,
                sd,
                hpd_lower: lo,
                hpd_upper: hi,
            }
        })
        .collect()
}

/// Mean and sample standard deviation (`n − 1` denominator).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, sqrt(ss / (n - 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamReplicates {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    /// SD of the posterior means across replicates.
    pub sd: f64,
    pub rmse: f64,
    /// Average within-chain posterior SD.
    pub mean_posterior_sd: f64,
    /// Fraction of replicates whose 95% HpdI covers the truth.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub n_replicates: usize,
    pub params: Vec<ParamReplicates>,
}

impl ReplicateSummary {
    pub fn get(&self, name: &str) -> Option<&ParamReplicates> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Aggregates per-replicate posterior means and HpdIs against the truth.
pub fn summarize_replicates(chains: &[ChainOutput], truth: &ParameterSet) -> Result<ReplicateSummary> {
    let Some(first) = chains.first() else {
        return Err(Error::InvalidArgument("no replicates".into()));
    };
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("need at least two replicates".into()));
    }
    for c in chains {
        if c.names != first.names {
            return Err(Error::NameMismatch(
                "replicates have different parameter columns".into(),
            ));
        }
    }
    let layout = ParamLayout {
        omega: Vec::new(),
        ..first.layout.clone()
    };
    let mut t = truth.clone();
    if !layout.include_sigma_a {
        t.sigma_a = crate::linalg::Mat::zeros(0, 0);
    }
    let truth_vals = t.to_values(&layout);
    let truth_names = layout.names();
    let mut params = Vec::with_capacity(truth_names.len());
    for (name, &tv) in truth_names.iter().zip(&truth_vals) {
        let col = first
            .column_index(name)
            .ok_or_else(|| Error::NameMismatch(alloc::format!("chain has no column {name}")))?;
        let mut means = Vec::with_capacity(chains.len());
        let mut covered = 0usize;
        let mut post_sd = 0.0;
        for ch in chains {
            let draws = ch.column_at(col);
            let (m, s) = mean_sd(&draws);
            means.push(m);
            post_sd += s;
            let (lo, hi) = shortest_interval(&draws, 0.95);
            if lo <= tv && tv <= hi {
                covered += 1;
            }
        }
        let (mean, sd) = mean_sd(&means);
        let mse = means.iter().map(|m| (m - tv) * (m - tv)).sum::<f64>() / means.len() as f64;
        params.push(ParamReplicates {
            name: name.clone(),
            truth: tv,
            mean,
            bias: mean - tv,
            sd,
            rmse: sqrt(mse),
            mean_posterior_sd: post_sd / chains.len() as f64,
            coverage: covered as f64 / chains.len() as f64,
        });
    }
    Ok(ReplicateSummary {
        n_replicates: chains.len(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::standard_normal;
    use crate::rng::RngHandle;
    use alloc::vec;

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngHandle::raw(seed, 0).rng();
        let mut x = standard_normal(&mut rng) / sqrt(1.0 - phi * phi);
        (0..n)
            .map(|_| {
                x = phi * x + standard_normal(&mut rng);
                x
            })
            .collect()
    }

    #[test]
    fn acf_lag_zero_and_iid_band() {
        let x = ar1(0.0, 100_000, 1);
        let a = acf(&x, 10).unwrap();
        assert_eq!(a[0], 1.0);
        assert!(a[1..].iter().all(|v| v.abs() < 0.01));
    }

    #[test]
    fn acf_ar1_matches_closed_form() {
        let x = ar1(0.5, 1_000_000, 2);
        let a = acf(&x, 5).unwrap();
        for k in 1..=5 {
            assert!((a[k] - 0.5f64.powi(k as i32)).abs() < 0.01, "lag {k}: {}", a[k]);
        }
    }

    #[test]
    fn acf_errors() {
        assert!(matches!(acf(&[1.0, 2.0], 1), Err(Error::SeriesTooShort { .. })));
        assert_eq!(acf(&[3.0; 10], 2), Err(Error::ConstantSeries));
        assert_eq!(ess(&[3.0; 10]), Err(Error::ConstantSeries));
    }

    #[test]
    fn ess_iid_and_sticky() {
        let n = 100_000;
        let e = ess(&ar1(0.0, n, 3)).unwrap();
        assert!(e >= 0.9 * n as f64 && e <= n as f64, "{e}");
        let e = ess(&ar1(0.9, n, 4)).unwrap();
        // IACT of AR(1) with 0.9 is 19.
        assert!(e < 0.1 * n as f64, "{e}");
        assert!((n as f64 / e - 19.0).abs() < 3.0);
    }

    #[test]
    fn hpdi_normal_and_degenerate() {
        let x = ar1(0.0, 100_000, 5);
        let (lo, hi) = hpdi(&x, 0.95).unwrap();
        assert!((lo + 1.96).abs() < 0.03 && (hi - 1.96).abs() < 0.03, "{lo} {hi}");
        assert_eq!(hpdi(&[2.5; 200], 0.95).unwrap(), (2.5, 2.5));
        assert!(hpdi(&[1.0; 50], 0.95).is_err());
    }

    #[test]
    fn hpdi_is_shortest_window() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 * 0.01 + if i % 7 == 0 { 5.0 } else { 0.0 }).collect();
        let (lo, hi) = hpdi(&x, 0.9).unwrap();
        let mut s = x.clone();
        s.sort_by(f64::total_cmp);
        let m = 180;
        for i in 0..=(200 - m) {
            assert!(s[i + m - 1] - s[i] >= hi - lo - 1e-12);
        }
    }

    #[test]
    fn mean_sd_two_replicates() {
        let (m, sd) = mean_sd(&[0.9, 1.1]);
        assert!((m - 1.0).abs() < 1e-12);
        assert!((sd - 0.141_421_356).abs() < 1e-6);
        assert_eq!(mean_curve(&[vec![1.0, 0.5], vec![1.0, 0.3]]), vec![1.0, 0.4]);
    }
}
