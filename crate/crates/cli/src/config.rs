//! Run configuration files.
//!
//! A configuration is a TOML document with the sections below. Unknown keys
//! are rejected everywhere.
//!
//! ```toml
//! [domain]
//! kind = "disk"            # "disk" | "ellipse" | "fourier"
//! radius = 1.0             # disk
//! # a = 2.0, b = 1.0       # ellipse semi-axes
//! # cos = [1.0, 0.0, 0.05], sin = [0.0, 0.0, 0.02]   # fourier R(θ)
//! center = [0.0, 0.0]      # optional
//! samples = 256            # optional, boundary sampling for α̅, κ, C_α
//!
//! [alpha]
//! kind = "constant"        # "constant" | "fourier" | "compatible-plane"
//! value = 0.5              # constant
//! # cos = [...], sin = [...]   # fourier α(θ)
//! # slope = [0.6, 0.0]         # compatible-plane
//!
//! [initial]
//! kind = "zero"            # "zero" | "plane" | "bump" | "fourier"
//! # slope = [0.6, 0.0]     # plane
//! # beta = 0.2             # bump
//! # modes = 3, max_slope = 0.5, seed = 1   # fourier
//!
//! [grid]
//! n_r = 48
//! n_theta = 96
//!
//! [solver]                 # optional, defaults shown
//! sigma = 0.5
//! t_end = 1.0
//! trans_tol = 1e-4
//! trans_window = 1.0
//! snapshot_every = 1.0
//! monitor_every = 0.01
//! eps_space = 1e-10
//!
//! [output]                 # optional
//! dir = "minkflow-run"
//!
//! [checks]                 # optional
//! enabled = true
//! tolerance = 0.05
//! ```

use std::path::PathBuf;

use minkflow::{AnglePrescription, Domain, DomainSpec, FourierSeries, InitialData, SolverConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SAMPLES: usize = 256;
pub const DEFAULT_OUTPUT_DIR: &str = "minkflow-run";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for {field}: {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub alpha: AlphaSection,
    pub initial: InitialSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

/// Domain shape; every variant also accepts an optional `center` and
/// boundary `samples` count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSection {
    Disk {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
    Fourier {
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
}

impl DomainSection {
    fn placement(&self) -> (Option<[f64; 2]>, Option<usize>) {
        match self {
            DomainSection::Disk {
                center, samples, ..
            }
            | DomainSection::Ellipse {
                center, samples, ..
            }
            | DomainSection::Fourier {
                center, samples, ..
            } => (*center, *samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaSection {
    Constant {
        value: f64,
    },
    Fourier {
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    CompatiblePlane {
        slope: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSection {
    Zero,
    Plane {
        slope: [f64; 2],
    },
    Bump {
        beta: f64,
    },
    Fourier {
        modes: usize,
        max_slope: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_r: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub sigma: f64,
    pub t_end: f64,
    pub trans_tol: f64,
    pub trans_window: f64,
    pub snapshot_every: f64,
    pub monitor_every: f64,
    pub eps_space: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            sigma: d.sigma,
            t_end: d.t_end,
            trans_tol: d.trans_tol,
            trans_window: d.trans_window,
            snapshot_every: d.snapshot_every,
            monitor_every: d.monitor_every,
            eps_space: d.eps_space,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksSection {
    pub enabled: bool,
    /// Relative tolerance on the H/v and gradient bounds, absolute on height.
    pub tolerance: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            enabled: true,
            tolerance: 0.05,
        }
    }
}

/// Everything a run needs, built from a validated configuration.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub domain: Domain,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub n_r: usize,
    pub n_theta: usize,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of a parse error. Errors inside tagged tables are reported by the
/// parser at the table header, so an unknown key is looked up below it.
fn error_line(text: &str, err: &toml::de::Error) -> usize {
    let Some(span) = err.span() else { return 0 };
    let line = line_of(text, span.start);
    let unknown = err
        .message()
        .strip_prefix("unknown field `")
        .and_then(|m| m.split('`').next());
    if let Some(key) = unknown {
        let end = line_of(text, span.end);
        for (i, l) in text.lines().enumerate().skip(line - 1).take(end + 1 - line) {
            let rest = l.trim_start().strip_prefix(key).unwrap_or("x");
            if rest.trim_start().starts_with('=') {
                return i + 1;
            }
        }
    }
    line
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: error_line(text, &e),
        message: e.message().trim().to_string(),
    })?;
    config.setup()?;
    Ok(config)
}

impl RunConfig {
    /// Replaces the seed of Fourier initial data; other initial data ignore it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InitialSection::Fourier { seed: s, .. } = &mut self.initial {
            *s = seed;
        }
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every numeric range and builds the solver inputs.
    pub fn setup(&self) -> Result<RunSetup, ConfigError> {
        let g = &self.grid;
        if g.n_r < minkflow::grid::MIN_N_R {
            return Err(ConfigError::invalid(
                "grid.n_r",
                format!(
                    "must be at least {}, got {}",
                    minkflow::grid::MIN_N_R,
                    g.n_r
                ),
            ));
        }
        if g.n_theta < minkflow::grid::MIN_N_THETA || !g.n_theta.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "grid.n_theta",
                format!(
                    "must be even and at least {}, got {}",
                    minkflow::grid::MIN_N_THETA,
                    g.n_theta
                ),
            ));
        }

        let s = &self.solver;
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(
                    field,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        if !(s.sigma > 0.0 && s.sigma <= 1.0) {
            return Err(ConfigError::invalid(
                "solver.sigma",
                format!("must lie in (0, 1], got {}", s.sigma),
            ));
        }
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
            return Err(ConfigError::invalid(
                "solver.t_end",
                format!("must be finite and >= 0, got {}", s.t_end),
            ));
        }
        positive("solver.trans_tol", s.trans_tol)?;
        if !(s.trans_window >= 0.0 && s.trans_window.is_finite()) {
            return Err(ConfigError::invalid(
                "solver.trans_window",
                "must be finite and >= 0",
            ));
        }
        positive("solver.snapshot_every", s.snapshot_every)?;
        positive("solver.monitor_every", s.monitor_every)?;
        if !(s.eps_space > 0.0 && s.eps_space < 1e-4) {
            return Err(ConfigError::invalid(
                "solver.eps_space",
                "must lie in (0, 1e-4)",
            ));
        }
        if !(self.checks.tolerance >= 0.0 && self.checks.tolerance.is_finite()) {
            return Err(ConfigError::invalid(
                "checks.tolerance",
                "must be finite and >= 0",
            ));
        }

        let d = &self.domain;
        let (center, samples) = d.placement();
        let mut spec = match d {
            DomainSection::Disk { radius, .. } => {
                positive("domain.radius", *radius)?;
                DomainSpec::disk(*radius)
            }
            DomainSection::Ellipse { a, b, .. } => {
                positive("domain.a", *a)?;
                positive("domain.b", *b)?;
                DomainSpec::ellipse(*a, *b)
            }
            DomainSection::Fourier { cos, sin, .. } => {
                if cos.is_empty() {
                    return Err(ConfigError::invalid(
                        "domain.cos",
                        "needs at least the mean radius",
                    ));
                }
                DomainSpec::radial_fourier(FourierSeries::new(cos.clone(), sin.clone()))
            }
        };
        if let Some(c) = center {
            if !(c[0].is_finite() && c[1].is_finite()) {
                return Err(ConfigError::invalid("domain.center", "must be finite"));
            }
            spec = spec.with_center(c);
        }

        let alpha = match &self.alpha {
            AlphaSection::Constant { value } => {
                if !value.is_finite() {
                    return Err(ConfigError::invalid("alpha.value", "must be finite"));
                }
                AnglePrescription::Constant(*value)
            }
            AlphaSection::Fourier { cos, sin } => {
                AnglePrescription::Fourier(FourierSeries::new(cos.clone(), sin.clone()))
            }
            AlphaSection::CompatiblePlane { slope } => {
                if !(slope[0].hypot(slope[1]) < 1.0) {
                    return Err(ConfigError::invalid(
                        "alpha.slope",
                        "plane slope must satisfy |a| < 1",
                    ));
                }
                AnglePrescription::CompatiblePlane { slope: *slope }
            }
        };
        let samples = samples.unwrap_or(DEFAULT_SAMPLES);
        let domain = Domain::new(spec, alpha, samples).map_err(|e| {
            let field = match e {
                minkflow::Error::InvalidSpec(ref m) if m.starts_with("alpha") => "alpha",
                minkflow::Error::ResolutionTooLow(_) => "domain.samples",
                _ => "domain",
            };
            ConfigError::invalid(field, e.to_string())
        })?;

        let initial = match &self.initial {
            InitialSection::Zero => InitialData::Zero,
            InitialSection::Plane { slope } => {
                if !(slope[0].hypot(slope[1]) < 1.0) {
                    return Err(ConfigError::invalid(
                        "initial.slope",
                        "plane slope must satisfy |a| < 1",
                    ));
                }
                InitialData::Plane { slope: *slope }
            }
            InitialSection::Bump { beta } => {
                if !(beta.abs() <= minkflow::initial::MAX_BUMP) {
                    return Err(ConfigError::invalid(
                        "initial.beta",
                        format!(
                            "must satisfy |beta| <= {}, got {beta}",
                            minkflow::initial::MAX_BUMP
                        ),
                    ));
                }
                InitialData::Bump { beta: *beta }
            }
            InitialSection::Fourier {
                modes,
                max_slope,
                seed,
            } => {
                if *modes == 0 {
                    return Err(ConfigError::invalid("initial.modes", "must be at least 1"));
                }
                if !(*max_slope > 0.0 && *max_slope <= 0.8) {
                    return Err(ConfigError::invalid(
                        "initial.max_slope",
                        "must lie in (0, 0.8]",
                    ));
                }
                InitialData::Fourier {
                    modes: *modes,
                    max_slope: *max_slope,
                    seed: *seed,
                }
            }
        };

        let solver = SolverConfig {
            sigma: s.sigma,
            eps_space: s.eps_space,
            t_end: s.t_end,
            trans_tol: s.trans_tol,
            trans_window: s.trans_window,
            snapshot_every: s.snapshot_every,
            monitor_every: s.monitor_every,
        };
        solver
            .validate()
            .map_err(|e| ConfigError::invalid("solver", e.to_string()))?;
        Ok(RunSetup {
            domain,
            initial,
            solver,
            n_r: g.n_r,
            n_theta: g.n_theta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
kind = "disk"
radius = 1.0

[alpha]
kind = "constant"
value = 0.5

[initial]
kind = "zero"

[grid]
n_r = 48
n_theta = 96

[solver]
t_end = 20.0
"#;

    #[test]
    fn minimal_config() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(
            c.domain,
            DomainSection::Disk {
                radius: 1.0,
                center: None,
                samples: None
            }
        );
        assert_eq!(c.alpha, AlphaSection::Constant { value: 0.5 });
        assert_eq!(c.solver.t_end, 20.0);
        assert_eq!(c.solver.sigma, 0.5);
        assert!(c.checks.enabled);
        let setup = c.setup().unwrap();
        assert_eq!((setup.n_r, setup.n_theta), (48, 96));
        assert_eq!(setup.domain.alpha_bar, 0.5);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn coarse_grid_names_the_field() {
        let text = MINIMAL.replace("n_r = 48", "n_r = 4");
        match parse_config(&text) {
            Err(ConfigError::Validation { field, .. }) => assert_eq!(field, "grid.n_r"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let text = MINIMAL.replace("value = 0.5", "value = 0.5\nalpha_typo = 1.0");
        match parse_config(&text) {
            Err(ConfigError::Parse { line, message }) => {
                assert!(message.contains("alpha_typo"), "{message}");
                assert_eq!(line, 9);
            }
            other => panic!("{other:?}"),
        }
        let top = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(matches!(parse_config(&top), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn range_checks() {
        let cases = [
            (
                "kind = \"zero\"",
                "kind = \"plane\"\nslope = [0.8, 0.6]",
                "initial.slope",
            ),
            (
                "kind = \"zero\"",
                "kind = \"bump\"\nbeta = 0.35",
                "initial.beta",
            ),
            ("t_end = 20.0", "t_end = 20.0\nsigma = 1.5", "solver.sigma"),
            ("n_theta = 96", "n_theta = 95", "grid.n_theta"),
            ("radius = 1.0", "radius = -1.0", "domain.radius"),
        ];
        for (from, to, field) in cases {
            match parse_config(&MINIMAL.replace(from, to)) {
                Err(ConfigError::Validation { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn non_convex_domain_is_rejected() {
        let text = MINIMAL.replace(
            "kind = \"disk\"\nradius = 1.0",
            "kind = \"fourier\"\ncos = [1.0, 0.0, 0.0, 0.3]",
        );
        match parse_config(&text) {
            Err(ConfigError::Validation { field, message }) => {
                assert_eq!(field, "domain");
                assert!(message.contains("convex"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_override_only_touches_fourier_data() {
        let text = MINIMAL.replace(
            "kind = \"zero\"",
            "kind = \"fourier\"\nmodes = 2\nmax_slope = 0.3\nseed = 1",
        );
        let c = parse_config(&text).unwrap().with_seed(9);
        assert_eq!(
            c.initial,
            InitialSection::Fourier {
                modes: 2,
                max_slope: 0.3,
                seed: 9
            }
        );
        let z = parse_config(MINIMAL).unwrap();
        assert_eq!(z.clone().with_seed(9), z);
    }

    #[test]
    fn alpha_variants() {
        let f = MINIMAL.replace(
            "kind = \"constant\"\nvalue = 0.5",
            "kind = \"fourier\"\ncos = [0.2, 0.1]\nsin = [0.0, 0.05]",
        );
        let s = parse_config(&f).unwrap().setup().unwrap();
        assert!((s.domain.alpha_at(0.0) - 0.3).abs() < 1e-15);
        let p = MINIMAL.replace(
            "kind = \"constant\"\nvalue = 0.5",
            "kind = \"compatible-plane\"\nslope = [0.6, 0.0]",
        );
        let s = parse_config(&p).unwrap().setup().unwrap();
        assert!((s.domain.alpha_at(0.0) - 0.75).abs() < 1e-12);
    }
}
