//! Strict upper and lower bounds for quantities of interest built on
//! sensitivity derivative fields of linear static structural problems.
//!
//! The pipeline for one case is:
//!
//! 1. build a mesh ([`mesh`]) and a parameterized problem ([`forms`]),
//! 2. solve the block primal pair `{u_h, U_h = xi u'_h}` and the block
//!    adjoint pair `{w_h, W_h}` by staggered SPD solves ([`sensitivity`]),
//! 3. recover statically admissible residual stress pairs ([`equilibration`]),
//! 4. evaluate the extended constitutive-relation-error estimators and the
//!    bounds `J_lower <= J(u') <= J_upper` ([`bounds`]).
//!
//! Two model problems are built in: a portal frame of Hermite beam elements
//! and a membrane on an elastic foundation discretized with bilinear squares.
//! [`harness`] runs mesh sweeps over both and writes CSV/plot data.

pub mod bounds;
pub mod equilibration;
pub mod error;
pub mod forms;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod sensitivity;

pub use bounds::{
    cre_estimator, cross_term, optimal_kappa, plain_qoi_bounds, sensitivity_bounds, symmetric_bounds,
    BoundsReport, EstimatorValue,
};
pub use equilibration::{build_admissible_pair, AdmissibleResidualPair, StressField};
pub use error::{Error, Result};
pub use forms::{AssembledProblem, ModelKind, ParamProblem, Parameter, QoI};
pub use harness::{fit_rate, run_case, CaseConfig, CaseId, StudyResult};
pub use mesh::{build_frame_mesh, build_quad_mesh, Mesh1D, Mesh2D, PortalFrame};
pub use quadrature::{gauss_rule, Quadrature};
pub use sensitivity::{
    adjoint_state_value, evaluate_qoi, solve_adjoint_pair, solve_primal_pair, validate_xi,
    FieldPair, Role, XiValidation,
};
