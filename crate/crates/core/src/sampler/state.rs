//! Expanded parameter and latent states, and their map back to the
//! original parameterisation.

use alloc::vec;
use alloc::vec::Vec;
use rand_core::RngCore;

use crate::dist::{sample_truncated_normal, standard_normal, Side};
use crate::linalg::Mat;
use crate::math::sqrt;
use crate::model::{ModelData, ParameterSet};

/// Parameters of the expanded model. The standard Gibbs scheme uses the
/// same container with `psi2 = 1`, `xi = 1` and `beta0_star` as a plain
/// intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedState {
    pub beta0_star: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub alpha_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub eta2: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub sigma_a_star: Mat,
    pub sigma_d_star: Mat,
    pub psi2: f64,
    pub xi: Vec<f64>,
    /// Probit working parameters of the binary phenotypes.
    pub gamma2: Vec<f64>,
    pub omega: Vec<bool>,
    pub pi: Vec<f64>,
}

/// Latent variables of the expanded model, stored flat in the row order of
/// [`ModelData`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    /// One value per row `(c, i, t)`.
    pub u_star: Vec<f64>,
    /// `n_ind × J`; centred on `beta0_star` unless `centered` is false.
    pub b_star: Vec<f64>,
    /// `n_fam × q1`.
    pub a_star: Vec<f64>,
    /// `n_ind × q2`.
    pub d_star: Vec<f64>,
    /// `n_rows × (J − J1)` underlying Gaussian of the binary phenotypes.
    pub y_tilde: Vec<f64>,
    /// Hierarchically centred random effects (`b* ~ N(beta0*, eta²)`).
    pub centered: bool,
}

/// Latent variables on the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginalLatent {
    pub u: Vec<f64>,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
    pub y_tilde: Vec<f64>,
}

impl ExpandedState {
    /// Starting values: zero coefficients, unit variances, loadings 0.5.
    pub fn initial(data: &ModelData) -> Self {
        let d = data.dims;
        Self {
            beta0_star: vec![0.0; d.j],
            beta: vec![vec![0.0; d.p1]; d.j],
            alpha_star: vec![0.0; d.p2],
            lambda_star: vec![0.5; d.j],
            eta2: vec![1.0; d.j],
            sigma2: vec![1.0; d.j1],
            sigma_a_star: Mat::identity(d.q1, d.q1),
            sigma_d_star: Mat::identity(d.q2, d.q2),
            psi2: 1.0,
            xi: vec![1.0; d.j],
            gamma2: vec![1.0; d.j - d.j1],
            omega: vec![true; d.j],
            pi: vec![0.5; d.j],
        }
    }

    /// Expanded state equal to the given original parameters with unit
    /// auxiliaries.
    pub fn from_original(p: &ParameterSet, data: &ModelData) -> Self {
        let d = data.dims;
        let mut s = Self::initial(data);
        s.beta0_star = p.beta0.clone();
        s.beta = p.beta.clone();
        s.alpha_star = p.alpha.clone();
        s.lambda_star = p.lambda.clone();
        s.eta2 = p.tau2.clone();
        s.sigma2 = p.sigma2.clone();
        if d.q1 > 0 {
            s.sigma_a_star = p.sigma_a.clone();
        }
        s.sigma_d_star = p.sigma_d.clone();
        s.omega = p.lambda.iter().map(|&l| l > 0.0).collect();
        s
    }

    /// Maps the expanded parameters to the original model:
    /// `alpha = alpha*/psi`, `Sigma = Sigma*/psi²`, `lambda = lambda*·psi`,
    /// `beta0 = beta0*·xi`, `tau² = xi²·eta²`.
    pub fn to_original(&self) -> ParameterSet {
        let psi = sqrt(self.psi2);
        ParameterSet {
            beta0: self
                .beta0_star
                .iter()
                .zip(&self.xi)
                .map(|(b, x)| b * x)
                .collect(),
            beta: self.beta.clone(),
            alpha: self.alpha_star.iter().map(|a| a / psi).collect(),
            lambda: self.lambda_star.iter().map(|l| l * psi).collect(),
            tau2: self
                .eta2
                .iter()
                .zip(&self.xi)
                .map(|(e, x)| x * x * e)
                .collect(),
            sigma2: self.sigma2.clone(),
            sigma_a: &self.sigma_a_star / self.psi2,
            sigma_d: &self.sigma_d_star / self.psi2,
        }
    }
}

impl LatentState {
    /// Random-effect and latent-score starts drawn from `N(0, 1)`; each
    /// underlying probit variable from `TN±(0, 1)` on its observed side.
    pub fn initial<R: RngCore + ?Sized>(data: &ModelData, centered: bool, rng: &mut R) -> Self {
        let d = data.dims;
        let nb = d.j - d.j1;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| standard_normal(rng)).collect() };
        let u_star = draw(data.n_rows);
        let b_star = draw(data.n_ind() * d.j);
        let a_star = draw(data.n_fam() * d.q1);
        let d_star = draw(data.n_ind() * d.q2);
        let mut y_tilde = Vec::with_capacity(data.n_rows * nb);
        for r in 0..data.n_rows {
            for j in d.j1..d.j {
                y_tilde.push(sample_truncated_normal(0.0, 1.0, side_of(data.y(r, j)), rng));
            }
        }
        Self {
            u_star,
            b_star,
            a_star,
            d_star,
            y_tilde,
            centered,
        }
    }

    /// Original-scale latents: `U = U*/psi`, `a = a*/psi`, `d = d*/psi`,
    /// `b = xi·(b* − beta0*)` (or `b*` itself when not centred).
    pub fn to_original(&self, s: &ExpandedState, data: &ModelData) -> OriginalLatent {
        let psi = sqrt(s.psi2);
        let j = data.dims.j;
        let b = self
            .b_star
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let jj = k % j;
                if self.centered {
                    s.xi[jj] * (v - s.beta0_star[jj])
                } else {
                    s.xi[jj] * v
                }
            })
            .collect();
        OriginalLatent {
            u: self.u_star.iter().map(|v| v / psi).collect(),
            b,
            a: self.a_star.iter().map(|v| v / psi).collect(),
            d: self.d_star.iter().map(|v| v / psi).collect(),
            y_tilde: self.y_tilde.clone(),
        }
    }
}

pub(crate) fn side_of(y: f64) -> Side {
    if y > 0.5 {
        Side::Positive
    } else {
        Side::Negative
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::small;
    use crate::model::PhenotypeKind::Continuous as C;

    #[test]
    fn unit_auxiliaries_are_identity() {
        let ds = small(&[C, C], &[vec![vec![Some(1.0), Some(2.0)]; 2]]);
        let data = ModelData::new(&ds).unwrap();
        let p = ParameterSet {
            beta0: vec![0.3, -0.2],
            beta: vec![vec![1.0], vec![0.5]],
            alpha: vec![0.7],
            lambda: vec![1.0, 0.2],
            tau2: vec![0.2, 0.4],
            sigma2: vec![0.1, 0.3],
            sigma_a: Mat::from_element(1, 1, 0.5),
            sigma_d: Mat::from_element(1, 1, 0.3),
        };
        assert_eq!(ExpandedState::from_original(&p, &data).to_original(), p);
    }

    #[test]
    fn transformation_definitions() {
        let ds = small(&[C], &[vec![vec![Some(1.0)]]]);
        let data = ModelData::new(&ds).unwrap();
        let mut s = ExpandedState::initial(&data);
        s.lambda_star = vec![0.5];
        s.psi2 = 4.0;
        s.xi = vec![-2.0];
        s.eta2 = vec![0.25];
        s.beta0_star = vec![1.5];
        let p = s.to_original();
        assert_eq!(p.lambda, vec![1.0]);
        assert_eq!(p.tau2, vec![1.0]);
        assert_eq!(p.beta0, vec![-3.0]);
        assert_eq!(p.sigma_a[(0, 0)], 0.25);
    }
}
