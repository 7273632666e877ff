//! Executes a configured run and writes its output directory.
//!
//! A run directory holds `config.toml` (the effective configuration),
//! `monitors.csv`, `snapshots/u_NNNN.txt` and `summary.txt`. A run stopped by
//! a solver error additionally gets `failure_state.txt` (the last good state)
//! and a `PARTIAL` marker naming the error.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use minkflow::{
    check_bounds, run_observed, translator_shoot, FlowState, Grid, MonitorRecord, RunObserver,
    Termination, TheoreticalBounds, MONITOR_CSV_HEADER,
};

use crate::config::{ConfigError, RunConfig};

pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_VIOLATIONS: u8 = 1;
pub const EXIT_FAILED: u8 = 2;

/// Violations listed individually in the summary; the count is always given.
const LISTED_VIOLATIONS: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Solver(#[from] minkflow::Error),
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub no_checks: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub exit_code: u8,
    pub out_dir: PathBuf,
    pub lambda: Option<f64>,
    pub violations: usize,
    pub error: Option<String>,
}

/// Streams monitor rows and snapshots to disk; the first I/O error is kept
/// and reported after the run.
struct DiskObserver {
    monitors: BufWriter<File>,
    monitors_path: PathBuf,
    snapshot_dir: PathBuf,
    snapshots: usize,
    error: Option<RunError>,
}

impl DiskObserver {
    fn keep(&mut self, e: RunError) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    fn finish(mut self) -> Result<usize, RunError> {
        if let Err(e) = self.monitors.flush() {
            self.keep(RunError::Io {
                path: self.monitors_path.clone(),
                source: e,
            });
        }
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.snapshots),
        }
    }
}

impl RunObserver for DiskObserver {
    fn on_record(&mut self, record: &MonitorRecord) {
        if let Err(e) = writeln!(self.monitors, "{}", record.csv_row()) {
            let path = self.monitors_path.clone();
            self.keep(RunError::Io { path, source: e });
        }
    }

    fn on_snapshot(&mut self, state: &FlowState) {
        let path = self
            .snapshot_dir
            .join(format!("u_{:04}.txt", self.snapshots));
        let result = File::create(&path).and_then(|f| {
            let mut w = BufWriter::new(f);
            state.u.write_snapshot(&mut w, state.t)?;
            w.flush()
        });
        match result {
            Ok(()) => self.snapshots += 1,
            Err(e) => self.keep(RunError::Io { path, source: e }),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(io_at(path))
}

/// Runs a configuration. Returns `Err` only when nothing useful could be
/// produced (invalid configuration or an unwritable output directory);
/// solver failures are reported through the exit code and the output files.
pub fn run_command(config: &RunConfig, options: &RunOptions) -> Result<RunReport, RunError> {
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = &options.out {
        config.output.dir = out.clone();
    }
    if options.no_checks {
        config.checks.enabled = false;
    }
    let setup = config.setup()?;
    let out_dir = config.output.dir.clone();
    let snapshot_dir = out_dir.join("snapshots");
    fs::create_dir_all(&snapshot_dir).map_err(io_at(&snapshot_dir))?;
    write_file(&out_dir.join("config.toml"), &config.to_toml())?;
    let partial = out_dir.join("PARTIAL");
    if partial.exists() {
        fs::remove_file(&partial).map_err(io_at(&partial))?;
    }

    let grid = Grid::new(&setup.domain, setup.n_r, setup.n_theta)?;
    let u0 = setup.initial.sample(&grid, &setup.domain)?;

    let monitors_path = out_dir.join("monitors.csv");
    let file = File::create(&monitors_path).map_err(io_at(&monitors_path))?;
    let mut monitors = BufWriter::new(file);
    writeln!(monitors, "{MONITOR_CSV_HEADER}").map_err(io_at(&monitors_path))?;
    let mut observer = DiskObserver {
        monitors,
        monitors_path,
        snapshot_dir,
        snapshots: 0,
        error: None,
    };

    info!(
        "running {}x{} to t = {} in {}",
        setup.n_r,
        setup.n_theta,
        setup.solver.t_end,
        out_dir.display()
    );
    let result = run_observed(u0, &setup.domain, &grid, &setup.solver, &mut observer);
    observer.finish()?;

    let mut summary = String::new();
    let report = match result {
        Ok(outcome) => {
            let violations: Vec<_> = if config.checks.enabled {
                outcome
                    .history
                    .iter()
                    .flat_map(|r| {
                        check_bounds(r, &outcome.bounds, outcome.u0_sup, config.checks.tolerance)
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let lambda = match outcome.termination {
                Termination::Translator { lambda, .. } => Some(lambda),
                Termination::EndTime => None,
            };
            line(&mut summary, "status", "completed");
            line(&mut summary, "termination", outcome.termination.label());
            line(&mut summary, "t_final", outcome.state.t);
            line(&mut summary, "steps", outcome.state.step_count);
            match outcome.termination {
                Termination::Translator { lambda, since } => {
                    line(&mut summary, "lambda", lambda);
                    line(&mut summary, "translator_since", since);
                }
                Termination::EndTime => line(&mut summary, "lambda", "none"),
            }
            if let Some(last) = outcome.history.last() {
                line(&mut summary, "lambda_est_final", last.lambda_est);
                line(&mut summary, "osc_ut_final", last.osc_ut);
            }
            bounds_lines(&mut summary, &outcome.bounds, outcome.u0_sup);
            history_lines(&mut summary, &outcome.history);
            line(
                &mut summary,
                "compatibility_residual",
                outcome.compatibility_residual,
            );
            line(
                &mut summary,
                "checks",
                if config.checks.enabled {
                    "enabled"
                } else {
                    "disabled"
                },
            );
            line(&mut summary, "check_tolerance", config.checks.tolerance);
            line(&mut summary, "violations", violations.len());
            for v in violations.iter().take(LISTED_VIOLATIONS) {
                line(
                    &mut summary,
                    "violation",
                    format!(
                        "{} t={:e} observed={:e} bound={:e}",
                        v.quantity.name(),
                        v.t,
                        v.observed,
                        v.bound
                    ),
                );
            }
            if !violations.is_empty() {
                warn!("{} bound violations, see summary.txt", violations.len());
            }
            RunReport {
                exit_code: if violations.is_empty() {
                    EXIT_CLEAN
                } else {
                    EXIT_VIOLATIONS
                },
                out_dir: out_dir.clone(),
                lambda,
                violations: violations.len(),
                error: None,
            }
        }
        Err(failure) => {
            let message = failure.error.to_string();
            warn!("run failed: {message}");
            line(&mut summary, "status", "failed");
            line(&mut summary, "error", &message);
            if let Some(state) = &failure.state {
                line(&mut summary, "t_final", state.t);
                line(&mut summary, "steps", state.step_count);
                let path = out_dir.join("failure_state.txt");
                let mut buf = Vec::new();
                state
                    .u
                    .write_snapshot(&mut buf, state.t)
                    .map_err(io_at(&path))?;
                fs::write(&path, buf).map_err(io_at(&path))?;
            }
            if let Some(bounds) = &failure.bounds {
                let u0_sup = failure.history.first().map_or(0.0, |r| r.sup_abs_u);
                bounds_lines(&mut summary, bounds, u0_sup);
            }
            history_lines(&mut summary, &failure.history);
            write_file(
                &partial,
                &format!("run stopped by solver error: {message}\n"),
            )?;
            RunReport {
                exit_code: EXIT_FAILED,
                out_dir: out_dir.clone(),
                lambda: None,
                violations: 0,
                error: Some(message),
            }
        }
    };
    write_file(&out_dir.join("summary.txt"), &summary)?;
    Ok(report)
}

fn line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

fn bounds_lines(out: &mut String, b: &TheoreticalBounds, u0_sup: f64) {
    line(out, "c_h", b.c_h);
    line(out, "alpha_bar", b.alpha_bar);
    line(out, "kappa_min", b.kappa_min);
    line(out, "c_alpha", b.c_alpha);
    line(out, "c_grad", b.c_grad);
    line(out, "sup_v0", b.sup_v0);
    line(out, "sup_abs_u0", u0_sup);
}

fn history_lines(out: &mut String, history: &[MonitorRecord]) {
    if history.is_empty() {
        return;
    }
    let max_v = history
        .iter()
        .map(|r| r.sup_v)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_margin = history
        .iter()
        .map(|r| r.spacelike_margin)
        .fold(f64::INFINITY, f64::min);
    line(out, "max_sup_v", max_v);
    line(out, "min_spacelike_margin", min_margin);
    line(out, "records", history.len());
}

/// Computes the radial translator, prints λ and writes the profile CSV.
pub fn oracle_command(alpha: f64, radius: f64, n_pts: usize, out: &Path) -> Result<f64, RunError> {
    let profile = translator_shoot(alpha, radius, n_pts)?;
    let lambda = profile.lambda.unwrap_or(0.0);
    fs::create_dir_all(out).map_err(io_at(out))?;
    let path = out.join("translator.csv");
    let mut w = BufWriter::new(File::create(&path).map_err(io_at(&path))?);
    profile.write_csv(&mut w).map_err(io_at(&path))?;
    w.flush().map_err(io_at(&path))?;
    Ok(lambda)
}
