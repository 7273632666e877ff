//! Monitored quantities along the flow and the checks against the a priori
//! estimates: the `|H|/v` bound, the gradient bound and linear height growth.
//! Also detects convergence to a translating solution `ũ(x) + λt`.

use std::io::Write;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::flow::{tendency, FlowState, SolverConfig};
use crate::grid::Grid;

/// `v = (1 - |Du|²)^{-1/2}` at every interior node. The ghost ring must be
/// closed.
pub fn compute_v(grid: &Grid, u: &Field) -> Result<Field> {
    let mut v = vec![0.0; grid.len()];
    let mut bad = None;
    grid.for_each_derivative(u, |i, du, _| {
        let m = 1.0 - du[0] * du[0] - du[1] * du[1];
        if !(m > 0.0) && bad.is_none() {
            bad = Some((i, m));
        }
        v[i] = 1.0 / m.sqrt();
    })?;
    if let Some((i, margin)) = bad {
        let n = grid.n_theta();
        return Err(Error::SpacelikeLost {
            j: i / n,
            k: i % n,
            t: f64::NAN,
            margin,
        });
    }
    Field::from_values(grid.n_r(), grid.n_theta(), v)
}

/// Mean curvature `H = v u_t`, with `u_t` the solver's tendency.
pub fn compute_h(grid: &Grid, u: &Field, eps_space: f64) -> Result<Field> {
    let v = compute_v(grid, u)?;
    let rate = tendency(grid, u, eps_space, f64::NAN)?.rate;
    let h = v.values().iter().zip(&rate).map(|(v, r)| v * r).collect();
    Field::from_values(grid.n_r(), grid.n_theta(), h)
}

/// Constants of the a priori estimates for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalBounds {
    /// sup |H|/v of the initial surface
    pub c_h: f64,
    pub alpha_bar: f64,
    pub kappa_min: f64,
    pub c_alpha: f64,
    /// bound on v
    pub c_grad: f64,
    pub sup_v0: f64,
}

impl TheoreticalBounds {
    pub fn new(domain: &Domain, c_h: f64, sup_v0: f64) -> Self {
        Self {
            c_h,
            alpha_bar: domain.alpha_bar,
            kappa_min: domain.kappa_min,
            c_alpha: domain.c_alpha,
            c_grad: domain.theoretical_c(c_h, sup_v0),
            sup_v0,
        }
    }

    /// Bounds from the initial state; `|H|/v = |u_t|` node by node.
    pub fn from_initial(domain: &Domain, state: &FlowState) -> Self {
        let c_h = state.rate().iter().fold(0.0f64, |m, r| m.max(r.abs()));
        Self::new(domain, c_h, state.v_max())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    pub sup_v: f64,
    pub sup_h_over_v: f64,
    /// area-weighted mean of u_t
    pub lambda_est: f64,
    /// sup u_t - inf u_t
    pub osc_ut: f64,
    pub sup_abs_u: f64,
    /// min (1 - |Du|²)
    pub spacelike_margin: f64,
    pub dt: f64,
}

pub const MONITOR_CSV_HEADER: &str =
    "t,sup_v,sup_H_over_v,lambda_est,osc_ut,sup_abs_u,spacelike_margin,dt";

impl MonitorRecord {
    pub fn from_state(grid: &Grid, state: &FlowState) -> Self {
        let rate = state.rate();
        let (lo, hi, sup) = rate.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, 0.0f64),
            |(lo, hi, sup), &r| (lo.min(r), hi.max(r), sup.max(r.abs())),
        );
        Self {
            t: state.t,
            sup_v: state.v_max(),
            sup_h_over_v: sup,
            lambda_est: grid.mean(rate),
            osc_ut: hi - lo,
            sup_abs_u: state.u.sup_abs(),
            spacelike_margin: state.spacelike_margin(),
            dt: state.last_dt,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.sup_v,
            self.sup_h_over_v,
            self.lambda_est,
            self.osc_ut,
            self.sup_abs_u,
            self.spacelike_margin,
            self.dt
        )
    }
}

pub fn write_monitor_csv<W: Write>(mut w: W, records: &[MonitorRecord]) -> std::io::Result<()> {
    writeln!(w, "{MONITOR_CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    HOverV,
    GradientV,
    Height,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::HOverV => "sup_H_over_v",
            Quantity::GradientV => "sup_v",
            Quantity::Height => "sup_abs_u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub quantity: Quantity,
    pub t: f64,
    pub bound: f64,
    pub observed: f64,
}

/// Absolute slack on the `H/v` bound, so that exact stationary data with
/// `C_H` at round-off level are not flagged.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

/// Compares one record against the estimates, with relative tolerance `tol`
/// on the `H/v` and gradient bounds and absolute `tol` on the height bound
/// `sup|u₀| + t C_H`.
pub fn check_bounds(
    record: &MonitorRecord,
    bounds: &TheoreticalBounds,
    u0_sup: f64,
    tol: f64,
) -> Vec<Violation> {
    let checks = [
        (
            Quantity::HOverV,
            record.sup_h_over_v,
            bounds.c_h * (1.0 + tol) + ROUNDOFF_FLOOR,
        ),
        (
            Quantity::GradientV,
            record.sup_v,
            bounds.c_grad * (1.0 + tol),
        ),
        (
            Quantity::Height,
            record.sup_abs_u,
            u0_sup + record.t * bounds.c_h + tol,
        ),
    ];
    checks
        .into_iter()
        .filter(|(_, observed, bound)| !(observed <= bound))
        .map(|(quantity, observed, bound)| Violation {
            quantity,
            t: record.t,
            bound,
            observed,
        })
        .collect()
}

/// Returns `(λ, since)` when `osc u_t < trans_tol` has held on every record
/// from `since` to the latest one, over at least `trans_window` time units.
pub fn detect_translator(history: &[MonitorRecord], cfg: &SolverConfig) -> Option<(f64, f64)> {
    let last = history.last()?;
    if !(last.osc_ut < cfg.trans_tol) {
        return None;
    }
    let start = history
        .iter()
        .rposition(|r| !(r.osc_ut < cfg.trans_tol))
        .map_or(0, |i| i + 1);
    let since = history[start].t;
    (last.t - since >= cfg.trans_window).then_some((last.lambda_est, since))
}

/// The translator profile `u - mean(u)`.
pub fn extract_translator_profile(grid: &Grid, state: &FlowState) -> Field {
    let mean = grid.mean(state.u.values());
    let values = state.u.values().iter().map(|v| v - mean).collect();
    Field::from_values(grid.n_r(), grid.n_theta(), values).expect("grid-sized field")
}
