//! Numerical laboratory for reduced inverse σ_k-flows on `ℙⁿ#ℙ̄ⁿ` and the
//! projective bundles `X_{m,n}` under Calabi symmetry.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classes;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod gpoly;
pub mod obstacle;
pub mod phase;
pub mod potential;
pub mod sigma;
pub mod stationary;

pub use classes::{CaseLabel, CaseVariant, ClassVector, PnProblem, PnSubcase, Problem, XmnProblem};
pub use error::{Error, Result};
pub use gpoly::{BivariatePoly, GFunction, GSpec};
pub use potential::{FluxFunction, Potential, PotentialProfile, RadialPotential};
pub use stationary::{StationaryProfile, XmnSystem};
pub use flow::{evolve, FlowProblem, FlowRun, FlowState, Grid, Initial, RunStatus, SchemeConfig};
pub use diagnostics::NodalProfile;
pub use obstacle::{ObstacleProblem, ObstacleSolution};
pub use phase::{PhaseCell, PhaseDiagram};
