//! Global optimization by box-kernel homogenization.
//!
//! `T(h, x)` is the average gradient of `f` over the box of side `h` around
//! `x` and `F(h, x)` the box average of `f`. Zeros of `T` are tracked as `h`
//! grows, and descent on `F` is continued from coarse to fine scales.
//!
//! Everything numeric is generic over [`Scalar`] (implemented for `f32` and
//! `f64`); the aliases below fix it to `f64`.

pub mod analysis;
pub mod expr;
pub mod funcmodel;
pub mod homog;
pub mod scalar;
pub mod scale;
pub mod search;
pub mod solver;

pub use analysis::{
    extreme_point_census, scan_sweep, scan_zeros, verify_theorems, AnalysisError, CheckId, CheckRecord, CheckStatus,
    TheoremReport, VerifyConfig,
};
pub use expr::{ExprError, Expression};
pub use funcmodel::{corpus, corpus_with_controls, find_entry, FieldError, Tag};
pub use homog::{HomogError, QuadraturePolicy};
pub use scalar::Scalar;
pub use scale::{default_schedule, find_h0, heuristic_h0, make_schedule, H0Method, ScaleError};
pub use solver::{
    line_decomposition_solve, plain_descent, smoothed_descent, DescentParams, LineParams, Method, SolverError, Status,
};

pub type Domain = funcmodel::Domain<f64>;
pub type ScalarField = funcmodel::ScalarField<f64>;
pub type CorpusEntry = funcmodel::CorpusEntry<f64>;
pub type Oracle = funcmodel::Oracle<f64>;
pub type ExtremaReport = funcmodel::ExtremaReport<f64>;
pub type HomogenizationOperator = homog::HomogenizationOperator<f64>;
pub type ZeroCrossingReport = analysis::ZeroCrossingReport<f64>;
pub type Census = analysis::Census<f64>;
pub type H0Finding = scale::H0Finding<f64>;
pub type ContinuationSchedule = scale::ContinuationSchedule<f64>;
pub type SolverTrace = solver::SolverTrace<f64>;
