//! Center-outward quantiles, superquantiles, and multivariate risk measures
//! via entropically regularized semi-discrete optimal transport.

pub mod analytic;
pub mod cloud;
pub mod error;
pub mod io;
pub mod maps;
pub mod persist;
pub mod reference;
pub mod risk;
pub mod solver;
pub mod tails;

pub use analytic::{GammaModel, UnivariateSample};
pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use maps::{quantile_contour, sign_curve, Contour, IdentityMap, QuantileMap};
pub use risk::{
    conditional_vector_at_risk, default_direction_count, generate_scenario, rho_q, rho_s,
    risk_report, vector_at_risk, RiskReport, Scenario, ScenarioSpec,
};
pub use reference::{
    direction_grid, lp_norm, lp_sphere_sample, radial_grid, sample_reference, DirectionGrid,
    ReferenceSpec,
};
pub use tails::{
    decomposition_residual, expected_shortfall, superquantile, tail_contour, tail_curve,
    ContourKind, TailOptions,
};

pub use solver::{
    smooth_c_transform, solve_semidual, solve_semidual_on_grid, FittedPotential, SolveLog,
    SolveMethod, SolveOptions,
};
