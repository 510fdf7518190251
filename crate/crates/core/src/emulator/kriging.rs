//! Ordinary kriging with an anisotropic Gaussian correlation on a fixed set of sites.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};

pub const DEFAULT_NUGGET: f64 = 1e-8;
/// Largest jitter tried before a factorization is declared failed.
pub const MAX_NUGGET: f64 = 1e-4;
/// Offsets below this (sup norm) count as the zero lag and receive the nugget.
const ZERO_LAG: f64 = 1e-12;

/// Lengthscales `θ` of `R(h) = exp(-Σ h_k²/θ_k²)` and the nugget `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperParams {
    pub theta: Vec<f64>,
    pub nugget: f64,
}

impl GpHyperParams {
    pub fn new(theta: Vec<f64>, nugget: f64) -> Result<Self> {
        let p = Self { theta, nugget };
        p.validate()?;
        Ok(p)
    }

    pub fn with_theta(theta: Vec<f64>) -> Result<Self> {
        Self::new(theta, DEFAULT_NUGGET)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(Error::InvalidParameter("no lengthscales given".into()));
        }
        if let Some(t) = self.theta.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "lengthscales must be positive and finite, got {t}"
            )));
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "nugget must be non-negative, got {}",
                self.nugget
            )));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.theta.len()
    }
}

/// `exp(-Σ h_k²/θ_k²)`.
pub fn correlation(h: &[f64], theta: &[f64]) -> f64 {
    (-h.iter().zip(theta).map(|(x, t)| (x / t) * (x / t)).sum::<f64>()).exp()
}

fn corr_matrix_raw(sites: &[f64], d: usize, theta: &[f64], nugget: f64) -> DMatrix<f64> {
    let k = sites.len() / d;
    let mut r = DMatrix::<f64>::identity(k, k) * (1.0 + nugget);
    let mut h = vec![0.0; d];
    for i in 0..k {
        for j in 0..i {
            for (slot, (a, b)) in h
                .iter_mut()
                .zip(sites[i * d..(i + 1) * d].iter().zip(&sites[j * d..(j + 1) * d]))
            {
                *slot = a - b;
            }
            let c = correlation(&h, theta);
            r[(i, j)] = c;
            r[(j, i)] = c;
        }
    }
    r
}

/// Correlation matrix of the rows of `points` with `η` added on the diagonal.
pub fn corr_matrix(points: &Design, params: &GpHyperParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    if points.d() != params.d() {
        return Err(Error::InvalidParameter(format!(
            "{} lengthscales for {}-dimensional points",
            params.d(),
            points.d()
        )));
    }
    Ok(corr_matrix_raw(points.as_slice(), points.d(), &params.theta, params.nugget))
}

/// Ratio of extreme eigenvalue magnitudes, used in error reports.
pub(crate) fn condition_estimate(r: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(r.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Per-window quantities derived from one output vector.
#[derive(Debug, Clone)]
pub struct WindowFit {
    /// Generalized-least-squares constant mean.
    pub beta: f64,
    /// `(y - β1)ᵀ R⁻¹ (y - β1) / k`.
    pub sigma2: f64,
    /// `R⁻¹ (y - β1)`.
    pub alpha: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// Factorized correlation of fixed sites, shared by any number of output vectors.
#[derive(Debug, Clone)]
pub struct Kriging {
    sites: Vec<f64>,
    d: usize,
    params: GpHyperParams,
    chol: Cholesky<f64, Dyn>,
    /// `R⁻¹ 1`
    w: DVector<f64>,
    one_w: f64,
    decompositions: usize,
}

impl Kriging {
    /// Factorizes the site correlation, doubling the nugget up to [`MAX_NUGGET`] on failure.
    pub fn fit(sites: &Design, params: &GpHyperParams) -> Result<Self> {
        params.validate()?;
        if sites.d() != params.d() {
            return Err(Error::InvalidParameter(format!(
                "{} lengthscales for {}-dimensional sites",
                params.d(),
                sites.d()
            )));
        }
        Self::fit_raw(sites.as_slice().to_vec(), sites.d(), params.clone())
    }

    pub(crate) fn fit_raw(sites: Vec<f64>, d: usize, mut params: GpHyperParams) -> Result<Self> {
        let mut decompositions = 0;
        loop {
            let r = corr_matrix_raw(&sites, d, &params.theta, params.nugget);
            decompositions += 1;
            match r.clone().cholesky() {
                Some(chol) => {
                    let k = sites.len() / d;
                    let w = chol.solve(&DVector::from_element(k, 1.0));
                    let one_w = w.sum();
                    return Ok(Self {
                        sites,
                        d,
                        params,
                        chol,
                        w,
                        one_w,
                        decompositions,
                    });
                }
                None => {
                    let next = if params.nugget > 0.0 {
                        params.nugget * 2.0
                    } else {
                        DEFAULT_NUGGET
                    };
                    if next > MAX_NUGGET {
                        return Err(Error::Factorization {
                            nugget: params.nugget,
                            condition: condition_estimate(&r),
                        });
                    }
                    log::warn!(
                        "correlation matrix not positive definite with nugget {:e}; retrying with {:e}",
                        params.nugget,
                        next
                    );
                    params.nugget = next;
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Parameters in effect, including any nugget increase.
    pub fn params(&self) -> &GpHyperParams {
        &self.params
    }

    /// Number of matrix factorizations attempted while fitting.
    pub fn decompositions(&self) -> usize {
        self.decompositions
    }

    pub fn site(&self, s: usize) -> &[f64] {
        &self.sites[s * self.d..(s + 1) * self.d]
    }

    /// `ln |R|`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>()
    }

    pub fn window(&self, y: &[f64]) -> WindowFit {
        assert_eq!(y.len(), self.len(), "output count must match the site count");
        let y = DVector::from_column_slice(y);
        let beta = self.w.dot(&y) / self.one_w;
        let resid = y.add_scalar(-beta);
        let alpha = self.chol.solve(&resid);
        let sigma2 = (resid.dot(&alpha) / self.len() as f64).max(0.0);
        WindowFit {
            beta,
            sigma2,
            alpha,
        }
    }

    /// Correlations between `x` and the sites; the nugget is added at the zero lag so that
    /// training sites are reproduced exactly.
    pub fn cross_corr(&self, x: &[f64]) -> DVector<f64> {
        let mut h = vec![0.0; self.d];
        DVector::from_fn(self.len(), |s, _| {
            let mut sup = 0.0f64;
            for (slot, (a, b)) in h.iter_mut().zip(x.iter().zip(self.site(s))) {
                *slot = a - b;
                sup = sup.max(slot.abs());
            }
            let c = correlation(&h, &self.params.theta);
            if sup < ZERO_LAG {
                c + self.params.nugget
            } else {
                c
            }
        })
    }

    /// Kriging mean and variance at `x`, in the coordinates of the sites.
    pub fn predict(&self, fit: &WindowFit, x: &[f64]) -> Prediction {
        let r = self.cross_corr(x);
        let mean = fit.beta + r.dot(&fit.alpha);
        let rr = self.chol.solve(&r);
        let gap = 1.0 - self.w.dot(&r);
        let var = fit.sigma2 * (1.0 + self.params.nugget - r.dot(&rr) + gap * gap / self.one_w);
        Prediction {
            mean,
            variance: var.max(0.0),
        }
    }
}
