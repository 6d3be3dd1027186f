use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    Full,
    Diagonal,
}

/// Maximum-likelihood covariance estimate (divisor N).
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Full(DMatrix<f64>),
    Diagonal(Vec<f64>),
}

impl Covariance {
    pub fn kind(&self) -> CovarianceKind {
        match self {
            Covariance::Full(_) => CovarianceKind::Full,
            Covariance::Diagonal(_) => CovarianceKind::Diagonal,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Covariance::Full(m) => m.nrows(),
            Covariance::Diagonal(v) => v.len(),
        }
    }

    /// Row-major values (the diagonal only, in diagonal mode).
    pub fn values(&self) -> Vec<f64> {
        match self {
            Covariance::Full(m) => m.transpose().as_slice().to_vec(),
            Covariance::Diagonal(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Factor {
    /// Lower Cholesky factor of the regularized covariance.
    Cholesky(DMatrix<f64>),
    /// Regularized variances.
    Variances(Vec<f64>),
}

/// Gaussian with covariance regularized toward the identity:
/// `(1 - alpha) * cov + alpha * I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    mean: Vec<f64>,
    covariance: Covariance,
    alpha: f64,
    sample_count: usize,
    factor: Factor,
    log_det: f64,
}

impl GaussianParams {
    /// Sample mean and ML covariance of `samples`, then regularized.
    pub fn fit<S: AsRef<[f64]>>(samples: &[S], alpha: f64, kind: CovarianceKind) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::InvalidArgument("cannot fit a Gaussian to zero samples".into()));
        }
        let d = samples[0].as_ref().len();
        let mut mean = vec![0.0; d];
        for s in samples {
            let s = s.as_ref();
            if s.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: s.len() });
            }
            mean.iter_mut().zip(s).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let covariance = match kind {
            CovarianceKind::Full => {
                let mut c = DMatrix::<f64>::zeros(d, d);
                for s in samples {
                    let diff = DVector::from_iterator(d, s.as_ref().iter().zip(&mean).map(|(x, m)| x - m));
                    c.ger(1.0, &diff, &diff, 1.0);
                }
                Covariance::Full(c / n as f64)
            }
            CovarianceKind::Diagonal => {
                let mut v = vec![0.0; d];
                for s in samples {
                    for ((vi, x), m) in v.iter_mut().zip(s.as_ref()).zip(&mean) {
                        *vi += (x - m) * (x - m);
                    }
                }
                Covariance::Diagonal(v.into_iter().map(|x| x / n as f64).collect())
            }
        };
        Self::from_moments(mean, covariance, alpha, n)
    }

    pub fn from_moments(mean: Vec<f64>, covariance: Covariance, alpha: f64, sample_count: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} not in [0, 1]")));
        }
        let d = mean.len();
        if covariance.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: covariance.dim() });
        }
        if mean.iter().any(|x| !x.is_finite()) || covariance.values().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Gaussian moments".into()));
        }
        let singular = || Error::SingularCovariance { condition: "this Gaussian".into() };
        let (factor, log_det) = match &covariance {
            Covariance::Full(c) => {
                let reg = c * (1.0 - alpha) + DMatrix::<f64>::identity(d, d) * alpha;
                let chol = reg.cholesky().ok_or_else(singular)?;
                let l = chol.unpack();
                let log_det = 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
                if !log_det.is_finite() {
                    return Err(singular());
                }
                (Factor::Cholesky(l), log_det)
            }
            Covariance::Diagonal(v) => {
                let reg: Vec<f64> = v.iter().map(|x| (1.0 - alpha) * x + alpha).collect();
                if reg.iter().any(|&x| !(x > 0.0)) {
                    return Err(singular());
                }
                let log_det = reg.iter().map(|x| x.ln()).sum();
                (Factor::Variances(reg), log_det)
            }
        };
        Ok(GaussianParams { mean, covariance, alpha, sample_count, factor, log_det })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn regularized_covariance(&self) -> DMatrix<f64> {
        let d = self.dim();
        match &self.covariance {
            Covariance::Full(c) => c * (1.0 - self.alpha) + DMatrix::<f64>::identity(d, d) * self.alpha,
            Covariance::Diagonal(v) => {
                DMatrix::from_diagonal(&DVector::from_iterator(d, v.iter().map(|x| (1.0 - self.alpha) * x + self.alpha)))
            }
        }
    }

    /// Log-density through the cached factorization.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density query point".into()));
        }
        let quad = match &self.factor {
            Factor::Cholesky(l) => {
                // forward substitution: L y = x - mean
                let d = self.dim();
                let mut y = vec![0.0; d];
                for i in 0..d {
                    let mut s = x[i] - self.mean[i];
                    for (j, yj) in y.iter().enumerate().take(i) {
                        s -= l[(i, j)] * yj;
                    }
                    y[i] = s / l[(i, i)];
                }
                y.iter().map(|v| v * v).sum::<f64>()
            }
            Factor::Variances(v) => x
                .iter()
                .zip(&self.mean)
                .zip(v)
                .map(|((xi, m), s)| (xi - m) * (xi - m) / s)
                .sum(),
        };
        Ok(-0.5 * (self.dim() as f64 * LN_2PI + self.log_det + quad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_fit_by_hand() {
        let g = GaussianParams::fit(&[[0.0, 0.0], [2.0, 0.0]], 0.5, CovarianceKind::Full).unwrap();
        assert_eq!(g.mean(), &[1.0, 0.0]);
        let reg = g.regularized_covariance();
        assert_eq!(reg, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]));
    }

    #[test]
    fn alpha_one_is_identity() {
        let pts = [[3.0, -1.0, 2.0], [0.5, 4.0, 1.0], [-2.0, 0.0, 7.0]];
        let g = GaussianParams::fit(&pts, 1.0, CovarianceKind::Full).unwrap();
        assert_eq!(g.regularized_covariance(), DMatrix::identity(3, 3));
        let x = g.mean().to_vec();
        let expect = -1.5 * LN_2PI;
        assert!((g.log_density(&x).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn univariate_by_hand() {
        let g = GaussianParams::from_moments(vec![0.0], Covariance::Full(DMatrix::from_element(1, 1, 1.0)), 0.0, 1).unwrap();
        let v = g.log_density(&[1.0]).unwrap();
        assert!((v - (-0.5 * LN_2PI - 0.5)).abs() < 1e-14);
        assert!((v + 1.4189385332046727).abs() < 1e-12);
    }

    #[test]
    fn zero_alpha_singular_is_rejected() {
        let r = GaussianParams::fit(&[[0.0, 0.0], [2.0, 0.0]], 0.0, CovarianceKind::Full);
        assert!(matches!(r, Err(Error::SingularCovariance { .. })));
        let r = GaussianParams::fit(&[[1.0, 1.0]], 0.0, CovarianceKind::Diagonal);
        assert!(matches!(r, Err(Error::SingularCovariance { .. })));
        assert!(GaussianParams::fit(&[[1.0]], 1.5, CovarianceKind::Full).is_err());
    }

    #[test]
    fn rejects_bad_query() {
        let g = GaussianParams::fit(&[[0.0, 1.0], [1.0, 0.0]], 0.5, CovarianceKind::Full).unwrap();
        assert!(matches!(g.log_density(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(g.log_density(&[f64::NAN, 0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn diagonal_mode_matches_full_on_diagonal_covariance() {
        let var = vec![0.3, 2.0, 0.7];
        let mean = vec![0.1, -1.0, 0.4];
        let full = GaussianParams::from_moments(
            mean.clone(),
            Covariance::Full(DMatrix::from_diagonal(&DVector::from_vec(var.clone()))),
            0.4,
            5,
        )
        .unwrap();
        let diag = GaussianParams::from_moments(mean, Covariance::Diagonal(var), 0.4, 5).unwrap();
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 3.0], [-0.3, 0.9, 0.2]] {
            let (a, b) = (full.log_density(&x).unwrap(), diag.log_density(&x).unwrap());
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
