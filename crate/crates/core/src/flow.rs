//! Explicit solver for graphical spacelike mean curvature flow with a
//! Neumann angle condition.
//!
//! The interior equation is used in non-divergence form
//!
//! ```text
//! u_t = a^{ij}(Du) u_ij,   a^{ij} = δ^{ij} + D_i u D_j u / (1 - |Du|²),
//! ```
//!
//! and the boundary condition `γ·Du = √(1 - |Du|²) α` is resolved in closed
//! form for the normal slope given the tangential one, then imposed through
//! the ghost ring. Time stepping is the explicit midpoint rule with a step
//! tied to the largest eigenvalue `v²` of `a^{ij}`.

use log::warn;

use crate::diagnostics::{self, MonitorRecord, TheoreticalBounds};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Initial boundary residual above which a run logs a compatibility warning.
pub const COMPATIBILITY_WARN: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// CFL safety factor in (0, 1].
    pub sigma: f64,
    /// Smallest admissible `1 - |Du|²`.
    pub eps_space: f64,
    pub t_end: f64,
    /// Threshold on `sup u_t - inf u_t` for translator detection.
    pub trans_tol: f64,
    /// Time over which the threshold must hold.
    pub trans_window: f64,
    pub snapshot_every: f64,
    pub monitor_every: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            eps_space: 1e-10,
            t_end: 1.0,
            trans_tol: 1e-4,
            trans_window: 1.0,
            snapshot_every: 1.0,
            monitor_every: 0.01,
        }
    }
}

impl SolverConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad("sigma must lie in (0, 1]");
        }
        if !(self.eps_space > 0.0 && self.eps_space < 1e-4) {
            return bad("eps_space must lie in (0, 1e-4)");
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad("t_end must be finite and nonnegative");
        }
        if !(self.trans_tol > 0.0 && self.trans_window >= 0.0) {
            return bad("trans_tol must be positive and trans_window nonnegative");
        }
        if !(self.snapshot_every > 0.0 && self.monitor_every > 0.0) {
            return bad("snapshot_every and monitor_every must be positive");
        }
        Ok(())
    }
}

/// Normal slope `p = γ·Du` solving `p = α √(1 - p² - q²)` for a tangential
/// slope `q`.
///
/// The solution `p = sign(α) √(α²(1 - q²)/(1 + α²))` always satisfies
/// `p² + q² < 1` when `|q| < 1`.
pub fn boundary_normal_slope(q: f64, alpha: f64) -> Result<f64> {
    if !(q.abs() < 1.0) {
        return Err(Error::TangentTooSteep { k: 0, q });
    }
    let a2 = alpha * alpha;
    let p = (a2 * (1.0 - q * q) / (1.0 + a2)).sqrt();
    Ok(if alpha < 0.0 { -p } else { p })
}

/// Fills the ghost ring of `u` so that the reconstructed `γ·Du` on `r = 1`
/// satisfies the angle condition at every boundary angle.
pub fn close_ghost(grid: &Grid, domain: &Domain, u: &mut Field) -> Result<()> {
    let q = grid.boundary_tangential_derivative(u);
    let n = grid.n_theta();
    let mut ghost = vec![0.0; n];
    for k in 0..n {
        let alpha = domain.alpha_at(grid.theta(k));
        let p = boundary_normal_slope(q[k], alpha)
            .map_err(|_| Error::TangentTooSteep { k, q: q[k] })?;
        ghost[k] = grid.ghost_for_normal_slope(u, k, q[k], p);
    }
    u.set_ghost(ghost);
    Ok(())
}

/// Largest `|γ·Du - √(1 - |Du|²) α|` over the boundary, for a field whose
/// ghost ring was set independently of the closure (e.g. sampled initial
/// data). Without a ghost ring the outermost rings are extrapolated.
pub fn boundary_residual(grid: &Grid, domain: &Domain, u: &Field) -> f64 {
    let mut u = u.clone();
    if u.ghost().is_none() {
        let (b, b1) = (
            u.row(grid.n_r() - 1).to_vec(),
            u.row(grid.n_r() - 2).to_vec(),
        );
        u.set_ghost(b.iter().zip(&b1).map(|(x, y)| 2.0 * x - y).collect());
    }
    let q = grid.boundary_tangential_derivative(&u);
    let p = grid
        .boundary_normal_derivative(&u)
        .expect("ghost row present");
    (0..grid.n_theta())
        .map(|k| {
            let m = 1.0 - p[k] * p[k] - q[k] * q[k];
            if m <= 0.0 {
                return f64::INFINITY;
            }
            (p[k] - m.sqrt() * domain.alpha_at(grid.theta(k))).abs()
        })
        .fold(0.0, f64::max)
}

/// Interior tendency of a field together with the reductions the stepper
/// needs.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `u_t` at every interior node.
    pub rate: Vec<f64>,
    /// `sup v = sup (1 - |Du|²)^{-1/2}`.
    pub v_max: f64,
    /// `min (1 - |Du|²)`.
    pub margin: f64,
    pub margin_node: (usize, usize),
}

fn evaluate_raw(grid: &Grid, u: &Field, eps_space: f64, t: f64) -> Result<Evaluation> {
    let mut rate = vec![0.0; grid.len()];
    let mut margin = f64::INFINITY;
    let mut at = 0;
    grid.for_each_derivative(u, |i, du, h| {
        let (gx, gy) = (du[0], du[1]);
        let m = 1.0 - gx * gx - gy * gy;
        if m < margin {
            margin = m;
            at = i;
        }
        rate[i] = h[0] + h[2] + (gx * gx * h[0] + 2.0 * gx * gy * h[1] + gy * gy * h[2]) / m;
    })?;
    let n = grid.n_theta();
    if let Some(i) = rate.iter().position(|r| !r.is_finite()) {
        // NaN gradients never win the margin comparison; report them here
        return Err(Error::NonFinite {
            j: i / n,
            k: i % n,
            t,
        });
    }
    if !(margin > eps_space) {
        return Err(Error::SpacelikeLost {
            j: at / n,
            k: at % n,
            t,
            margin,
        });
    }
    Ok(Evaluation {
        rate,
        v_max: 1.0 / margin.sqrt(),
        margin,
        margin_node: (at / n, at % n),
    })
}

/// `a^{ij}(Du) u_ij` at every interior node. The ghost ring must be closed.
pub fn interior_rhs(grid: &Grid, u: &Field, eps_space: f64) -> Result<Field> {
    let e = evaluate_raw(grid, u, eps_space, f64::NAN)?;
    Field::from_values(grid.n_r(), grid.n_theta(), e.rate)
}

/// The discrete time derivative used by the stepper: [`interior_rhs`] with
/// the pole-ring mode cutoff applied.
pub fn tendency(grid: &Grid, u: &Field, eps_space: f64, t: f64) -> Result<Evaluation> {
    let mut e = evaluate_raw(grid, u, eps_space, t)?;
    grid.filter_rings(&mut e.rate);
    Ok(e)
}

/// Explicit step size `σ h_min² / (2 (1 + v_max²))`.
pub fn cfl_dt(grid: &Grid, v_max: f64, cfg: &SolverConfig) -> f64 {
    cfl_dt_for_spacing(grid.h_min(), v_max, cfg.sigma)
}

pub fn cfl_dt_for_spacing(h_min: f64, v_max: f64, sigma: f64) -> f64 {
    sigma * h_min * h_min / (2.0 * (1.0 + v_max * v_max))
}

/// The evolving solution: height field with closed ghost ring, time and step
/// bookkeeping, and the tendency of the current field.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: Field,
    pub t: f64,
    pub step_count: usize,
    pub last_dt: f64,
    eval: Evaluation,
}

impl FlowState {
    /// Closes the boundary of `u0` and evaluates its tendency.
    pub fn new(grid: &Grid, domain: &Domain, mut u0: Field, cfg: &SolverConfig) -> Result<Self> {
        if let Some((j, k)) = u0.first_non_finite() {
            return Err(Error::NonFinite { j, k, t: 0.0 });
        }
        close_ghost(grid, domain, &mut u0)?;
        let eval = tendency(grid, &u0, cfg.eps_space, 0.0)?;
        Ok(Self {
            u: u0,
            t: 0.0,
            step_count: 0,
            last_dt: 0.0,
            eval,
        })
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.eval
    }

    /// `u_t` of the current field.
    pub fn rate(&self) -> &[f64] {
        &self.eval.rate
    }

    pub fn v_max(&self) -> f64 {
        self.eval.v_max
    }

    pub fn spacelike_margin(&self) -> f64 {
        self.eval.margin
    }

    /// One midpoint step, shortened so as not to pass `t_limit`. The state is
    /// left untouched on error.
    pub fn advance(
        &mut self,
        grid: &Grid,
        domain: &Domain,
        cfg: &SolverConfig,
        t_limit: f64,
    ) -> Result<()> {
        let mut dt = cfl_dt(grid, self.eval.v_max, cfg);
        let mut t_next = self.t + dt;
        if t_next >= t_limit {
            dt = t_limit - self.t;
            t_next = t_limit;
        }

        let mut mid = self.u.clone();
        for (m, r) in mid.values_mut().iter_mut().zip(&self.eval.rate) {
            *m += 0.5 * dt * r;
        }
        let t_mid = self.t + 0.5 * dt;
        if let Some((j, k)) = mid.first_non_finite() {
            return Err(Error::NonFinite { j, k, t: t_mid });
        }
        close_ghost(grid, domain, &mut mid)?;
        let k2 = tendency(grid, &mid, cfg.eps_space, t_mid)?;

        let mut next = mid;
        for ((n, u), r) in next
            .values_mut()
            .iter_mut()
            .zip(self.u.values())
            .zip(&k2.rate)
        {
            *n = u + dt * r;
        }
        if let Some((j, k)) = next.first_non_finite() {
            return Err(Error::NonFinite { j, k, t: t_next });
        }
        close_ghost(grid, domain, &mut next)?;
        let eval = tendency(grid, &next, cfg.eps_space, t_next)?;

        self.u = next;
        self.eval = eval;
        self.t = t_next;
        self.step_count += 1;
        self.last_dt = dt;
        Ok(())
    }
}

/// One explicit midpoint step, not passing `cfg.t_end`.
pub fn step(
    state: &FlowState,
    grid: &Grid,
    domain: &Domain,
    cfg: &SolverConfig,
) -> Result<FlowState> {
    let mut next = state.clone();
    let limit = if next.t < cfg.t_end {
        cfg.t_end
    } else {
        f64::INFINITY
    };
    next.advance(grid, domain, cfg, limit)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    EndTime,
    Translator { lambda: f64, since: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::EndTime => "t_end",
            Termination::Translator { .. } => "translator",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: FlowState,
    pub history: Vec<MonitorRecord>,
    pub termination: Termination,
    pub bounds: TheoreticalBounds,
    pub u0_sup: f64,
    /// Initial boundary residual of the supplied data.
    pub compatibility_residual: f64,
}

/// A run that stopped on a solver error, with everything produced before it.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    /// Last successfully computed state, absent if the initial data failed.
    pub state: Option<FlowState>,
    pub history: Vec<MonitorRecord>,
    pub bounds: Option<TheoreticalBounds>,
}

/// Receives monitor records and snapshots while a run progresses.
pub trait RunObserver {
    fn on_record(&mut self, _record: &MonitorRecord) {}
    fn on_snapshot(&mut self, _state: &FlowState) {}
}

impl RunObserver for () {}

/// Evolves `u0` until `cfg.t_end` or until a translator is detected.
pub fn run(
    u0: Field,
    domain: &Domain,
    grid: &Grid,
    cfg: &SolverConfig,
) -> std::result::Result<RunOutcome, Box<RunFailure>> {
    run_observed(u0, domain, grid, cfg, &mut ())
}

pub fn run_observed(
    u0: Field,
    domain: &Domain,
    grid: &Grid,
    cfg: &SolverConfig,
    observer: &mut dyn RunObserver,
) -> std::result::Result<RunOutcome, Box<RunFailure>> {
    let fail = |error, state, history, bounds| {
        Box::new(RunFailure {
            error,
            state,
            history,
            bounds,
        })
    };
    if let Err(e) = cfg.validate() {
        return Err(fail(e, None, Vec::new(), None));
    }
    let compatibility_residual = boundary_residual(grid, domain, &u0);
    if compatibility_residual > COMPATIBILITY_WARN {
        warn!("initial data violates the boundary condition by {compatibility_residual:.3e}");
    }
    let u0_sup = u0.sup_abs();
    let mut state = match FlowState::new(grid, domain, u0, cfg) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, None, Vec::new(), None)),
    };
    let bounds = TheoreticalBounds::from_initial(domain, &state);

    let mut history = Vec::new();
    let record = MonitorRecord::from_state(grid, &state);
    observer.on_record(&record);
    history.push(record);
    observer.on_snapshot(&state);

    let mut monitor_index = 1usize;
    let mut snapshot_index = 1usize;
    let mut termination = Termination::EndTime;
    if let Some((lambda, since)) = diagnostics::detect_translator(&history, cfg) {
        termination = Termination::Translator { lambda, since };
    }

    while termination == Termination::EndTime && state.t < cfg.t_end {
        let next_monitor = monitor_index as f64 * cfg.monitor_every;
        let next_snapshot = snapshot_index as f64 * cfg.snapshot_every;
        let limit = next_monitor.min(next_snapshot).min(cfg.t_end);
        if let Err(e) = state.advance(grid, domain, cfg, limit) {
            return Err(fail(e, Some(state), history, Some(bounds)));
        }
        let at_end = state.t >= cfg.t_end;
        if state.t >= next_monitor || at_end {
            while monitor_index as f64 * cfg.monitor_every <= state.t {
                monitor_index += 1;
            }
            let record = MonitorRecord::from_state(grid, &state);
            observer.on_record(&record);
            history.push(record);
            if let Some((lambda, since)) = diagnostics::detect_translator(&history, cfg) {
                termination = Termination::Translator { lambda, since };
            }
        }
        if state.t >= next_snapshot {
            while snapshot_index as f64 * cfg.snapshot_every <= state.t {
                snapshot_index += 1;
            }
            observer.on_snapshot(&state);
        } else if at_end || termination != Termination::EndTime {
            observer.on_snapshot(&state);
        }
    }

    Ok(RunOutcome {
        state,
        history,
        termination,
        bounds,
        u0_sup,
        compatibility_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AnglePrescription, DomainSpec};
    use crate::initial::InitialData;
    use proptest::prelude::*;

    fn disk(alpha: f64) -> Domain {
        Domain::new(
            DomainSpec::disk(1.0),
            AnglePrescription::Constant(alpha),
            256,
        )
        .unwrap()
    }

    #[test]
    fn normal_slope_examples() {
        assert_eq!(boundary_normal_slope(0.0, 0.0).unwrap(), 0.0);
        assert!((boundary_normal_slope(0.0, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let p = boundary_normal_slope(0.6, 1.0).unwrap();
        assert!((p - 0.32f64.sqrt()).abs() < 1e-15);
        assert!((p - (1.0 - p * p - 0.36f64).sqrt()).abs() < 1e-12);
        assert!(boundary_normal_slope(-0.3, -2.0).unwrap() < 0.0);
        assert!(matches!(
            boundary_normal_slope(1.0, 0.5),
            Err(Error::TangentTooSteep { .. })
        ));
        assert!(boundary_normal_slope(f64::NAN, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn normal_slope_stays_spacelike(q in -0.999_999..0.999_999f64, alpha in -5.0..5.0f64) {
            let p = boundary_normal_slope(q, alpha).unwrap();
            prop_assert!(p * p + q * q < 1.0);
            prop_assert!((p - alpha * (1.0 - p * p - q * q).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_closure() {
        let d = disk(0.0);
        let g = Grid::new(&d, 16, 32).unwrap();
        let mut u = Field::zeros(16, 32);
        close_ghost(&g, &d, &mut u).unwrap();
        assert!(u.ghost().unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_angle_closure_on_zero_field() {
        let d = disk(1.0);
        let g = Grid::new(&d, 16, 32).unwrap();
        let mut u = Field::zeros(16, 32);
        close_ghost(&g, &d, &mut u).unwrap();
        for p in g.boundary_normal_derivative(&u).unwrap() {
            assert!((p - 0.5f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn compatible_plane_ghost_reproduces_plane() {
        for (spec, exact_on_grid) in [
            (DomainSpec::disk(1.0), true),
            (DomainSpec::ellipse(2.0, 1.0), false),
        ] {
            let a = [0.3, -0.4];
            let d =
                Domain::new(spec, AnglePrescription::CompatiblePlane { slope: a }, 256).unwrap();
            let mut errs = Vec::new();
            for n in [16, 32, 64] {
                let g = Grid::new(&d, n, 2 * n).unwrap();
                let exact = g.sample(|p| a[0] * p[0] + a[1] * p[1]);
                let mut u = exact.clone();
                u.clear_ghost();
                close_ghost(&g, &d, &mut u).unwrap();
                let err = u
                    .ghost()
                    .unwrap()
                    .iter()
                    .zip(exact.ghost().unwrap())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                errs.push(err);
            }
            if exact_on_grid {
                // a plane is a pure ±1 mode on every ring of a disk
                assert!(errs.iter().all(|e| *e < 1e-14), "{errs:?}");
            } else {
                assert!(errs[2] < 1e-3, "{errs:?}");
                assert!(
                    (errs[0] / errs[1]).log2() > 1.8 && (errs[1] / errs[2]).log2() > 1.8,
                    "{errs:?}"
                );
            }
        }
    }

    #[test]
    fn steep_boundary_tangent_is_reported() {
        let d = disk(0.0);
        let g = Grid::new(&d, 16, 32).unwrap();
        let mut u = g.sample(|p| 1.2 * p[1]);
        let err = close_ghost(&g, &d, &mut u).unwrap_err();
        assert!(matches!(err, Error::TangentTooSteep { .. }));
    }

    #[test]
    fn rhs_examples() {
        let d = disk(0.0);
        let g = Grid::new(&d, 16, 32).unwrap();
        let mut zero = Field::zeros(16, 32);
        close_ghost(&g, &d, &mut zero).unwrap();
        assert!(interior_rhs(&g, &zero, 1e-10)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));

        let plane = g.sample(|p| 0.5 * p[0] - 0.3 * p[1]);
        let rhs = interior_rhs(&g, &plane, 1e-10).unwrap();
        assert!(rhs.sup_abs() < 1e-2);

        let g = Grid::new(&d, 64, 128).unwrap();
        let bowl = g.sample(|p| (p[0] * p[0] + p[1] * p[1]) / 8.0);
        let rhs = interior_rhs(&g, &bowl, 1e-10).unwrap();
        for k in 0..128 {
            assert!((rhs.at(0, k) - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn rhs_rejects_lightlike_gradient() {
        let d = disk(0.0);
        let g = Grid::new(&d, 16, 32).unwrap();
        let u = g.sample(|p| 1.01 * p[0]);
        assert!(matches!(
            interior_rhs(&g, &u, 1e-10),
            Err(Error::SpacelikeLost { .. })
        ));
    }

    #[test]
    fn cfl_examples() {
        assert!((cfl_dt_for_spacing(0.1, 1.0, 0.5) - 0.00125).abs() < 1e-16);
        assert!((cfl_dt_for_spacing(0.1, 2.0, 0.5) - 0.0005).abs() < 1e-16);
        assert!((cfl_dt_for_spacing(0.05, 1.0, 1.0) - 0.000625).abs() < 1e-16);
        let g = Grid::new(&disk(0.0), 48, 96).unwrap();
        let cfg = SolverConfig::default();
        assert!((cfl_dt(&g, 1.0, &cfg) - 0.5 / (48.0f64 * 48.0 * 4.0)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let c = SolverConfig {
            sigma: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SolverConfig {
            eps_space: 1e-3,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_state_is_stationary() {
        let d = disk(0.0);
        let g = Grid::new(&d, 16, 32).unwrap();
        let cfg = SolverConfig::default();
        let s0 = FlowState::new(&g, &d, Field::zeros(16, 32), &cfg).unwrap();
        let s1 = step(&s0, &g, &d, &cfg).unwrap();
        assert!(s1.t > 0.0 && s1.step_count == 1);
        assert_eq!(s1.u.sup_abs(), 0.0);
    }

    #[test]
    fn compatible_plane_step_drift() {
        let a = [0.6, 0.0];
        let d = Domain::new(
            DomainSpec::disk(1.0),
            AnglePrescription::CompatiblePlane { slope: a },
            256,
        )
        .unwrap();
        let g = Grid::new(&d, 32, 64).unwrap();
        let cfg = SolverConfig::default();
        let u0 = InitialData::Plane { slope: a }.sample(&g, &d).unwrap();
        let s0 = FlowState::new(&g, &d, u0, &cfg).unwrap();
        let s1 = step(&s0, &g, &d, &cfg).unwrap();
        let drift = s1.u.max_abs_diff(&s0.u);
        assert!(
            drift <= 1e-10 * s1.last_dt,
            "drift {drift}, dt {}",
            s1.last_dt
        );
    }

    #[test]
    fn boundary_rises_for_positive_angle() {
        let d = disk(0.3);
        let g = Grid::new(&d, 16, 32).unwrap();
        let cfg = SolverConfig::default();
        let s0 = FlowState::new(&g, &d, Field::zeros(16, 32), &cfg).unwrap();
        let s1 = step(&s0, &g, &d, &cfg).unwrap();
        for k in 0..32 {
            assert!(s1.u.at(15, k) > 0.0);
        }
    }

    #[test]
    fn step_does_not_pass_t_end() {
        let d = disk(0.2);
        let g = Grid::new(&d, 8, 16).unwrap();
        let cfg = SolverConfig::default().with_t_end(1e-4);
        let mut s = FlowState::new(&g, &d, Field::zeros(8, 16), &cfg).unwrap();
        while s.t < cfg.t_end {
            s = step(&s, &g, &d, &cfg).unwrap();
        }
        assert_eq!(s.t, 1e-4);
    }

    #[test]
    fn trivial_run_ends_at_t_end_or_translator() {
        let d = disk(0.0);
        let g = Grid::new(&d, 8, 16).unwrap();
        let cfg = SolverConfig {
            trans_window: 10.0,
            ..SolverConfig::default().with_t_end(1.0)
        };
        let out = run(Field::zeros(8, 16), &d, &g, &cfg).unwrap();
        assert_eq!(out.termination, Termination::EndTime);
        assert_eq!(out.state.t, 1.0);
        assert_eq!(out.state.u.sup_abs(), 0.0);
        assert!((out.history.last().unwrap().t - 1.0).abs() < 1e-15);

        let cfg = SolverConfig::default().with_t_end(5.0);
        let out = run(Field::zeros(8, 16), &d, &g, &cfg).unwrap();
        assert_eq!(
            out.termination,
            Termination::Translator {
                lambda: 0.0,
                since: 0.0
            }
        );
    }

    #[test]
    fn run_reports_initial_failure() {
        let d = disk(0.0);
        let g = Grid::new(&d, 8, 16).unwrap();
        let mut u0 = Field::zeros(8, 16);
        u0.set(3, 3, f64::NAN);
        let err = run(u0, &d, &g, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err.error, Error::NonFinite { j: 3, k: 3, .. }));
        assert!(err.state.is_none());
    }

    /// Divergence form `√(1-|Du|²) div(Du/√(1-|Du|²))` discretized
    /// conservatively in reference coordinates,
    /// `div F = (1/J)[∂_r(J F·∇r) + ∂_θ(J F·∇θ)]` with `J = r R²`, with
    /// all geometry taken from closed forms rather than the grid's metric.
    fn divergence_form(d: &Domain, g: &Grid, u: &Field) -> Vec<f64> {
        let (n_r, n) = g.shape();
        let du = g.gradient(u).unwrap();
        let inv_grad = |j: usize, k: usize| -> ([f64; 2], [f64; 2], f64) {
            let r = g.radius(j);
            let t = g.theta(k);
            let [rr, rp, _] = d.radial_fn(t);
            let (s, c) = t.sin_cos();
            let xr = [rr * c, rr * s];
            let xt = [r * (rp * c - rr * s), r * (rp * s + rr * c)];
            let det = xr[0] * xt[1] - xt[0] * xr[1];
            (
                [xt[1] / det, -xt[0] / det],
                [-xr[1] / det, xr[0] / det],
                det,
            )
        };
        let flux = |j: usize, k: usize| -> [f64; 2] {
            let g2 = du[j * n + k];
            let w = 1.0 / (1.0 - g2[0] * g2[0] - g2[1] * g2[1]).sqrt();
            let (gr, gt, det) = inv_grad(j, k);
            let f = [g2[0] * w, g2[1] * w];
            [
                det * (f[0] * gr[0] + f[1] * gr[1]),
                det * (f[0] * gt[0] + f[1] * gt[1]),
            ]
        };
        let mut out = vec![f64::NAN; n_r * n];
        for j in 1..n_r - 1 {
            for k in 0..n {
                let (kp, km) = ((k + 1) % n, (k + n - 1) % n);
                let dr = (flux(j + 1, k)[0] - flux(j - 1, k)[0]) / (2.0 * g.dr());
                let dt = (flux(j, kp)[1] - flux(j, km)[1]) / (2.0 * g.dtheta());
                let (_, _, det) = inv_grad(j, k);
                let g2 = du[j * n + k];
                let root = (1.0 - g2[0] * g2[0] - g2[1] * g2[1]).sqrt();
                out[j * n + k] = root * (dr + dt) / det;
            }
        }
        out
    }

    #[test]
    fn expanded_form_matches_divergence_form() {
        let field = |p: [f64; 2]| {
            0.35 * p[0] - 0.2 * p[1] + 0.15 * (1.3 * p[0] * p[1]).sin() + 0.1 * p[1] * p[1]
        };
        for d in [
            disk(0.0),
            Domain::new(
                DomainSpec::ellipse(1.5, 1.0),
                AnglePrescription::Constant(0.0),
                256,
            )
            .unwrap(),
        ] {
            let mut errs = Vec::new();
            for n in [16, 32, 64] {
                let g = Grid::new(&d, n, 2 * n).unwrap();
                let u = g.sample(field);
                let expanded = interior_rhs(&g, &u, 1e-10).unwrap();
                let div = divergence_form(&d, &g, &u);
                // annulus away from the pole and the boundary rows
                let mut err = 0.0f64;
                for j in 0..n {
                    let r = g.radius(j);
                    if !(0.25..=0.85).contains(&r) {
                        continue;
                    }
                    for k in 0..2 * n {
                        err = err.max((expanded.at(j, k) - div[j * 2 * n + k]).abs());
                    }
                }
                errs.push(err);
            }
            let o1 = (errs[0] / errs[1]).log2();
            let o2 = (errs[1] / errs[2]).log2();
            assert!(o1.min(o2) >= 1.5, "errors {errs:?}");
        }
    }
}
