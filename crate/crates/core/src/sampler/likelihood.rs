//! Complete-data log-likelihood on the original scale.

use alloc::format;

use super::state::OriginalLatent;
use crate::linalg::{cholesky_strict, Mat};
use crate::math::{log, normal_ln_pdf, LN_2PI};
use crate::model::{ModelData, ParameterSet};
use crate::{Error, Result};

/// Sum of the Gaussian log-densities of every observed and latent cell:
/// continuous phenotypes (variance `sigma²_j`), binary underlying
/// variables `ỹ` (variance 1), the latent score (variance 1), and the
/// random effects `b`, `a`, `d`.
pub fn log_complete_likelihood(
    theta: &ParameterSet,
    latent: &OriginalLatent,
    data: &ModelData,
) -> Result<f64> {
    let d = data.dims;
    let nb = d.j - d.j1;
    theta.validate(&d)?;
    if latent.u.len() != data.n_rows
        || latent.b.len() != data.n_ind() * d.j
        || latent.a.len() != data.n_fam() * d.q1
        || latent.d.len() != data.n_ind() * d.q2
        || latent.y_tilde.len() != data.n_rows * nb
    {
        return Err(Error::DimensionMismatch(format!(
            "latent state does not match {} rows / {} individuals / {} families",
            data.n_rows,
            data.n_ind(),
            data.n_fam()
        )));
    }
    let mut ll = 0.0;
    for r in 0..data.n_rows {
        let i = data.row_ind[r];
        let c = data.row_fam[r];
        let u = latent.u[r];
        for j in 0..d.j {
            let mean = theta.beta0[j]
                + dot(data.w_row(r), &theta.beta[j])
                + theta.lambda[j] * u
                + latent.b[i * d.j + j];
            if j < d.j1 {
                ll += normal_ln_pdf(data.y(r, j), mean, theta.sigma2[j]);
            } else {
                ll += normal_ln_pdf(latent.y_tilde[r * nb + j - d.j1], mean, 1.0);
            }
        }
        let mean = dot(data.x_row(r), &theta.alpha)
            + dot(data.z_row(r), &latent.a[c * d.q1..(c + 1) * d.q1])
            + dot(data.q_row(r), &latent.d[i * d.q2..(i + 1) * d.q2]);
        ll += normal_ln_pdf(u, mean, 1.0);
    }
    for i in 0..data.n_ind() {
        for j in 0..d.j {
            ll += normal_ln_pdf(latent.b[i * d.j + j], 0.0, theta.tau2[j]);
        }
    }
    if d.q1 > 0 {
        ll += mvn_ln_pdf_sum(&latent.a, &theta.sigma_a)?;
    }
    if d.q2 > 0 {
        ll += mvn_ln_pdf_sum(&latent.d, &theta.sigma_d)?;
    }
    Ok(ll)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of `MVN(0, cov)` log-densities over consecutive vectors in `vals`.
fn mvn_ln_pdf_sum(vals: &[f64], cov: &Mat) -> Result<f64> {
    let q = cov.nrows();
    let chol = cholesky_strict(cov)?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * log(*v)).sum();
    let mut acc = 0.0;
    for v in vals.chunks_exact(q) {
        let x = crate::linalg::Vector::from_column_slice(v);
        let sol = chol.solve(&x);
        acc += -0.5 * (q as f64 * LN_2PI + log_det + x.dot(&sol));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::small;
    use crate::model::PhenotypeKind::{Binary as B, Continuous as C};
    use alloc::vec;

    fn params(j: usize, j1: usize) -> ParameterSet {
        ParameterSet {
            beta0: vec![0.0; j],
            beta: vec![vec![0.0]; j],
            alpha: vec![0.0],
            lambda: vec![0.0; j],
            tau2: vec![1.0; j],
            sigma2: vec![1.0; j1],
            sigma_a: Mat::from_element(1, 1, 1.0),
            sigma_d: Mat::from_element(1, 1, 1.0),
        }
    }

    fn zero_latent(data: &ModelData) -> OriginalLatent {
        let d = data.dims;
        OriginalLatent {
            u: vec![0.0; data.n_rows],
            b: vec![0.0; data.n_ind() * d.j],
            a: vec![0.0; data.n_fam() * d.q1],
            d: vec![0.0; data.n_ind() * d.q2],
            y_tilde: vec![0.0; data.n_rows * (d.j - d.j1)],
        }
    }

    #[test]
    fn zero_residual_cell_and_variance_doubling() {
        let ds = small(&[C], &[vec![vec![Some(0.7)]]]);
        let data = ModelData::new(&ds).unwrap();
        let mut p = params(1, 1);
        p.beta0 = vec![0.7];
        let lat = zero_latent(&data);
        let base = log_complete_likelihood(&p, &lat, &data).unwrap();
        // Remaining terms: latent, b, a, d, all N(0,1) at 0.
        let others = 4.0 * (-0.5 * LN_2PI);
        assert!((base - others - (-0.5 * LN_2PI)).abs() < 1e-12);
        p.sigma2 = vec![2.0];
        let doubled = log_complete_likelihood(&p, &lat, &data).unwrap();
        assert!((base - doubled - 0.5 * log(2.0)).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_two_phenotype_cell() {
        let ds = small(&[C, B], &[vec![vec![Some(1.2), Some(1.0)]]]);
        let data = ModelData::new(&ds).unwrap();
        let mut p = params(2, 1);
        p.beta0 = vec![0.1, -0.2];
        p.beta = vec![vec![0.4], vec![0.3]];
        p.alpha = vec![2.0];
        p.lambda = vec![1.5, 0.5];
        p.tau2 = vec![0.2, 0.4];
        p.sigma2 = vec![0.3];
        p.sigma_a = Mat::from_element(1, 1, 0.5);
        p.sigma_d = Mat::from_element(1, 1, 0.25);
        let lat = OriginalLatent {
            u: vec![0.6],
            b: vec![0.1, -0.3],
            a: vec![0.2],
            d: vec![-0.1],
            y_tilde: vec![0.8],
        };
        // w = 0.5, x = 0.0, z = q = 1 (see `small`).
        let ln = |x: f64, m: f64, v: f64| -0.5 * (LN_2PI + v.ln() + (x - m) * (x - m) / v);
        let want = ln(1.2, 0.1 + 0.2 + 0.9 + 0.1, 0.3)
            + ln(0.8, -0.2 + 0.15 + 0.3 - 0.3, 1.0)
            + ln(0.6, 0.0 + 0.2 - 0.1, 1.0)
            + ln(0.1, 0.0, 0.2)
            + ln(-0.3, 0.0, 0.4)
            + ln(0.2, 0.0, 0.5)
            + ln(-0.1, 0.0, 0.25);
        let got = log_complete_likelihood(&p, &lat, &data).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn dimension_mismatch() {
        let ds = small(&[C], &[vec![vec![Some(0.7)]]]);
        let data = ModelData::new(&ds).unwrap();
        let mut lat = zero_latent(&data);
        lat.u.push(0.0);
        assert!(matches!(
            log_complete_likelihood(&params(1, 1), &lat, &data),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
