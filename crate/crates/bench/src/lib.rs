//! Shared fixtures for the kernel benchmarks.

use minkflow::{
    AnglePrescription, Domain, DomainSpec, Field, FlowState, Grid, InitialData, SolverConfig,
};

/// A disk or ellipse problem with a closed initial state, ready to step.
pub struct Fixture {
    pub domain: Domain,
    pub grid: Grid,
    pub state: FlowState,
    pub cfg: SolverConfig,
}

impl Fixture {
    pub fn disk_bump(n_r: usize) -> Self {
        Self::build(DomainSpec::disk(1.0), n_r)
    }

    pub fn ellipse_bump(n_r: usize) -> Self {
        Self::build(DomainSpec::ellipse(1.5, 1.0), n_r)
    }

    fn build(spec: DomainSpec, n_r: usize) -> Self {
        let domain = Domain::new(spec, AnglePrescription::Constant(0.3), 256).expect("domain");
        let grid = Grid::new(&domain, n_r, 2 * n_r).expect("grid");
        let cfg = SolverConfig::default();
        let u0 = InitialData::Bump { beta: 0.2 }
            .sample(&grid, &domain)
            .expect("initial data");
        let state = FlowState::new(&grid, &domain, u0, &cfg).expect("initial state");
        Self {
            domain,
            grid,
            state,
            cfg,
        }
    }

    /// The current field with its ghost ring closed.
    pub fn field(&self) -> &Field {
        &self.state.u
    }
}

/// Grid sizes used across the benchmarks.
pub const SIZES: [usize; 3] = [32, 64, 128];
