//! Graphical spacelike mean curvature flow in Minkowski space `R^{2+1}` on
//! strictly convex planar domains, with a prescribed Neumann angle α on the
//! boundary cylinder.
//!
//! A spacelike graph `u(x, t)` over `Ω` with `|Du| < 1` evolves by
//!
//! `u_t = (δ^{ij} + D_iu D_ju / (1 - |Du|²)) D_ij u`  in `Ω`,
//! `γ·Du = α √(1 - |Du|²)`  on `∂Ω`,
//!
//! where `γ` is the outward unit normal of `∂Ω`. The solver discretises this
//! on a boundary fitted polar mesh and steps it explicitly; [`diagnostics`]
//! tracks the quantities controlled by the a priori estimates and [`oracle`]
//! provides independent reference solutions.

pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod field;
pub mod flow;
pub mod grid;
pub mod initial;
pub mod oracle;

pub use diagnostics::{
    check_bounds, compute_h, compute_v, detect_translator, extract_translator_profile,
    write_monitor_csv, MonitorRecord, Quantity, TheoreticalBounds, Violation, MONITOR_CSV_HEADER,
};
pub use domain::{theoretical_c, AnglePrescription, Domain, DomainKind, DomainSpec, FourierSeries};
pub use error::{Error, Result};
pub use field::Field;
pub use flow::{
    boundary_normal_slope, boundary_residual, close_ghost, interior_rhs, run, run_observed, step,
    tendency, FlowState, RunFailure, RunObserver, RunOutcome, SolverConfig, Termination,
};
pub use grid::Grid;
pub use initial::InitialData;
pub use oracle::{compatible_plane, radial_flow, translator_shoot, RadialProfile, RadialSolver};
