//! Local Gaussian-process emulation on repeated lattice designs.

mod estimate;
mod kriging;
mod model;
mod simplex;

pub use estimate::{
    composite_mle, composite_objective, estimate_lengthscales, window_width_for, EstimationConfig,
    LengthscaleEstimate,
};
pub use kriging::{
    corr_matrix, correlation, GpHyperParams, Kriging, Prediction, WindowFit, DEFAULT_NUGGET,
    MAX_NUGGET,
};
pub use model::{fit_shared_model, LocalGpModel};
pub use simplex::{nelder_mead, SimplexResult};
