//! Local kriging over a repeated lattice design with one shared factorization.

use rayon::prelude::*;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::rlhd::{local_window, nearest_window_corner, point_key, PointIndex, RlhdSpec};

use super::kriging::{GpHyperParams, Kriging, Prediction, WindowFit};

/// Model over every window whose corner lies in the translation lattice. All those windows
/// hold the same relative configuration, so one factorization serves them all.
#[derive(Debug, Clone)]
pub struct LocalGpModel {
    spec: RlhdSpec,
    index: PointIndex,
    outputs: Vec<f64>,
    /// Integer offsets of the training sites from the window corner, `m × d`.
    rel_keys: Vec<u64>,
    kriging: Kriging,
}

/// Fits the shared model. `outputs[r]` is the response at row `r` of the enumerated design.
pub fn fit_shared_model(spec: &RlhdSpec, outputs: &[f64], params: &GpHyperParams) -> Result<LocalGpModel> {
    params.validate()?;
    let d = spec.d();
    if params.d() != d {
        return Err(Error::InvalidParameter(format!(
            "{} lengthscales for a {d}-dimensional design",
            params.d()
        )));
    }
    let index = PointIndex::new(spec);
    check_outputs(spec, &index, outputs)?;
    let origin = local_window(spec, &vec![0; d])?;
    let rel_keys = origin.relative_keys();
    let n = spec.n() as f64;
    let sites: Vec<f64> = rel_keys.iter().map(|&o| (o as f64 + 0.5) / n).collect();
    let kriging = Kriging::fit_raw(sites, d, params.clone())?;
    Ok(LocalGpModel {
        spec: spec.clone(),
        index,
        outputs: outputs.to_vec(),
        rel_keys,
        kriging,
    })
}

fn check_outputs(spec: &RlhdSpec, index: &PointIndex, outputs: &[f64]) -> Result<()> {
    let mut missing = None;
    let mut row = 0usize;
    crate::rlhd::for_each_point(spec, |key| {
        if missing.is_none() && outputs.get(row).is_none_or(|y| !y.is_finite()) {
            missing = Some(key.to_vec());
        }
        row += 1;
    });
    if let Some(key) = missing {
        return Err(Error::MissingOutput(key));
    }
    if outputs.len() > index.len() {
        return Err(Error::InvalidParameter(format!(
            "{} outputs for a design of {} points",
            outputs.len(),
            index.len()
        )));
    }
    Ok(())
}

impl LocalGpModel {
    pub fn spec(&self) -> &RlhdSpec {
        &self.spec
    }

    pub fn params(&self) -> &GpHyperParams {
        self.kriging.params()
    }

    /// Factorizations performed to build the model (one unless jitter had to grow).
    pub fn decompositions(&self) -> usize {
        self.kriging.decompositions()
    }

    /// Window-relative training sites in unit-cube coordinates.
    pub fn relative_sites(&self) -> Design {
        let n = self.spec.n() as f64;
        let pts = self.rel_keys.iter().map(|&o| (o as f64 + 0.5) / n).collect();
        Design::new(self.kriging.len(), self.spec.d(), pts).expect("sites lie in the unit cube")
    }

    /// Outputs of the window at `corner`, aligned with the relative sites.
    pub fn window_outputs(&self, corner: &[u64]) -> Vec<f64> {
        let d = self.spec.d();
        let mut key = vec![0u64; d];
        (0..self.kriging.len())
            .map(|s| {
                for k in 0..d {
                    key[k] = corner[k] + self.rel_keys[s * d + k];
                }
                let row = self
                    .index
                    .get(&key)
                    .expect("translation-lattice windows contain only design points");
                self.outputs[row]
            })
            .collect()
    }

    fn window_fit(&self, corner: &[u64]) -> WindowFit {
        self.kriging.window(&self.window_outputs(corner))
    }

    /// Output row of the design point at `x`, if `x` is one and lies outside the window.
    fn outside_observation(&self, corner: &[u64], x: &[f64]) -> Option<usize> {
        let n = self.spec.n();
        let key = point_key(x, n);
        let exact = x
            .iter()
            .zip(&key)
            .all(|(&xk, &c)| (xk * n as f64 - 0.5 - c as f64).abs() < 1e-9);
        let inside = key
            .iter()
            .zip(corner)
            .all(|(&c, &l)| c >= l && c < l + self.spec.m());
        if exact && !inside {
            self.index.get(&key)
        } else {
            None
        }
    }

    fn predict_in(&self, corner: &[u64], fit: &WindowFit, x: &[f64]) -> Prediction {
        // Conditioning on the window plus a coincident observation returns that observation
        // with zero variance (the zero-lag jitter makes the bordered solve exact).
        if let Some(row) = self.outside_observation(corner, x) {
            return Prediction {
                mean: self.outputs[row],
                variance: 0.0,
            };
        }
        let n = self.spec.n() as f64;
        let u: Vec<f64> = x
            .iter()
            .zip(corner)
            .map(|(&xk, &l)| xk - l as f64 / n)
            .collect();
        self.kriging.predict(fit, &u)
    }

    /// Prediction from the window whose centre is nearest to `x`.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let corner = nearest_window_corner(&self.spec, x);
        let fit = self.window_fit(&corner);
        self.predict_in(&corner, &fit, x)
    }

    /// Same values as mapping [`LocalGpModel::predict`]; queries sharing a window reuse its solve.
    pub fn predict_batch(&self, xs: &Design) -> Vec<Prediction> {
        let corners: Vec<Vec<u64>> = (0..xs.n())
            .into_par_iter()
            .map(|i| nearest_window_corner(&self.spec, xs.row(i)))
            .collect();
        let mut order: Vec<usize> = (0..xs.n()).collect();
        order.sort_by(|&a, &b| corners[a].cmp(&corners[b]).then(a.cmp(&b)));
        let groups: Vec<&[usize]> = order
            .chunk_by(|&a, &b| corners[a] == corners[b])
            .collect();
        let results: Vec<Vec<(usize, Prediction)>> = groups
            .par_iter()
            .map(|group| {
                let corner = &corners[group[0]];
                let fit = self.window_fit(corner);
                group
                    .iter()
                    .map(|&i| (i, self.predict_in(corner, &fit, xs.row(i))))
                    .collect()
            })
            .collect();
        let mut out = vec![
            Prediction {
                mean: 0.0,
                variance: 0.0
            };
            xs.n()
        ];
        for (i, p) in results.into_iter().flatten() {
            out[i] = p;
        }
        out
    }
}
