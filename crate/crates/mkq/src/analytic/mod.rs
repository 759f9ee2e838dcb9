//! Closed-form oracles: special functions, gamma product models, and exact
//! univariate empirical quantities.

pub mod gamma;
pub mod special;
pub mod univariate;

pub use gamma::GammaModel;
pub use univariate::UnivariateSample;
