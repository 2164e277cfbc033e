//! Fitting opinion-dynamics models to per-blog sentiment panels.

pub mod aggregate;
pub mod bundled;
pub mod diagnose;
pub mod error;
pub mod estimate;
pub mod io;
pub mod matrix;
pub mod models;
pub mod panel;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use panel::{Family, FitResult, ModelSpec, ParamName, ParamParts, ParamSet, SentimentPanel, SolverTrace};
