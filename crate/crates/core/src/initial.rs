//! Catalogue of initial height fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

pub const MAX_BUMP: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    /// `u = a·(x - c)`
    Plane {
        slope: [f64; 2],
    },
    /// `β (1 - ρ²)²` with `ρ = |x - c| / R(θ)` the reference radius.
    Bump {
        beta: f64,
    },
    /// Random trigonometric field with modes up to `modes`, rescaled so the
    /// largest nodal `|Du|` equals `max_slope`.
    Fourier {
        modes: usize,
        max_slope: f64,
        seed: u64,
    },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match *self {
            InitialData::Zero => Ok(()),
            InitialData::Plane { slope } => {
                let n = slope[0].hypot(slope[1]);
                if n < 1.0 {
                    Ok(())
                } else {
                    Err(Error::NotSpacelike(n))
                }
            }
            InitialData::Bump { beta } if !(beta.abs() <= MAX_BUMP) => {
                bad(format!("bump height {beta} exceeds {MAX_BUMP}"))
            }
            InitialData::Fourier {
                modes, max_slope, ..
            } if modes == 0 || !(max_slope > 0.0 && max_slope <= 0.8) => bad(format!(
                "fourier data needs modes >= 1 and max_slope in (0, 0.8], got {modes}, {max_slope}"
            )),
            _ => Ok(()),
        }
    }

    /// Samples the field on interior and ghost nodes.
    pub fn sample(&self, grid: &Grid, domain: &Domain) -> Result<Field> {
        self.validate()?;
        let c = domain.center();
        Ok(match *self {
            InitialData::Zero => grid.sample(|_| 0.0),
            InitialData::Plane { slope } => {
                grid.sample(|p| slope[0] * (p[0] - c[0]) + slope[1] * (p[1] - c[1]))
            }
            InitialData::Bump { beta } => grid.sample(|p| {
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                let rho = dx.hypot(dy) / domain.radial_fn(dy.atan2(dx))[0];
                let s = 1.0 - rho * rho;
                beta * s * s
            }),
            InitialData::Fourier {
                modes,
                max_slope,
                seed,
            } => {
                let waves = random_waves(domain, modes, seed);
                let mut steepest = 0.0f64;
                for j in 0..=grid.n_r() {
                    for k in 0..grid.n_theta() {
                        let p = grid.position(j, k);
                        let (_, g) = eval_waves(&waves, [p[0] - c[0], p[1] - c[1]]);
                        steepest = steepest.max(g[0].hypot(g[1]));
                    }
                }
                let scale = if steepest > 0.0 {
                    max_slope / steepest
                } else {
                    0.0
                };
                grid.sample(|p| scale * eval_waves(&waves, [p[0] - c[0], p[1] - c[1]]).0)
            }
        })
    }
}

struct Wave {
    k: [f64; 2],
    amp: f64,
    phase: f64,
}

fn random_waves(domain: &Domain, modes: usize, seed: u64) -> Vec<Wave> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = domain.radial.iter().fold(0.0f64, |m, r| m.max(r[0]));
    let base = PI / extent;
    let mut waves = Vec::new();
    let m = modes as i64;
    for a in -m..=m {
        for b in 0..=m {
            if b == 0 && a <= 0 {
                continue;
            }
            let weight = 1.0 / (1.0 + (a * a + b * b) as f64);
            waves.push(Wave {
                k: [a as f64 * base, b as f64 * base],
                amp: weight * rng.gen_range(-1.0..1.0),
                phase: rng.gen_range(0.0..2.0 * PI),
            });
        }
    }
    waves
}

fn eval_waves(waves: &[Wave], x: [f64; 2]) -> (f64, [f64; 2]) {
    let mut u = 0.0;
    let mut g = [0.0; 2];
    for w in waves {
        let (s, c) = (w.k[0] * x[0] + w.k[1] * x[1] + w.phase).sin_cos();
        u += w.amp * c;
        g[0] -= w.amp * s * w.k[0];
        g[1] -= w.amp * s * w.k[1];
    }
    (u, g)
}
