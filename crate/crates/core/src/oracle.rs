//! Reference computations for radially symmetric problems on a disk and for
//! exact stationary planes.
//!
//! On a disk of radius `R` with constant α, a radial height `u(r)` evolves by
//!
//! `u_t = u'' / (1 - u'²) + u' / r`,   `u'(0) = 0`,   `u'(R) = α / √(1 + α²)`,
//!
//! which is the two dimensional operator `Δu + (Du·D²u·Du) / (1 - |Du|²)`
//! with `Du = u' e_r`. A translator `u(r) + λt` therefore has slope `φ = u'`
//! solving `φ' = (λ - φ/r)(1 - φ²)`.

use std::io::Write;

use crate::domain::{AnglePrescription, Domain};
use crate::error::{Error, Result};
use crate::flow::cfl_dt_for_spacing;
use crate::initial::InitialData;

pub const MIN_RADIAL_POINTS: usize = 256;
const SHOOT_TOL: f64 = 1e-10;
const SHOOT_STEPS: usize = 4096;
const BRACKET_DOUBLINGS: usize = 10;

/// Samples of a radial function `u(r)` on `[0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `u'(r)` at the same radii, when known.
    pub slopes: Option<Vec<f64>>,
    /// Translation speed for translator profiles.
    pub lambda: Option<f64>,
}

impl RadialProfile {
    pub fn from_fn(radii: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let values = radii.iter().map(|&r| f(r)).collect();
        Self {
            radii,
            values,
            slopes: None,
            lambda: None,
        }
    }

    /// `n_pts` uniformly spaced samples of `f` on `[0, r_max]`.
    pub fn uniform(r_max: f64, n_pts: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = r_max / (n_pts - 1) as f64;
        Self::from_fn((0..n_pts).map(|i| i as f64 * h).collect(), f)
    }

    /// Cubic Lagrange interpolation; the function is extended evenly across
    /// `r = 0`.
    pub fn interpolate(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if n < 4 {
            let i = self.radii.partition_point(|&x| x < r).min(n - 1);
            return self.values[i];
        }
        let r = r.abs();
        let i = self.radii.partition_point(|&x| x <= r).clamp(2, n - 2);
        let lo = i - 2;
        let xs = &self.radii[lo..lo + 4];
        let ys = &self.values[lo..lo + 4];
        let mut acc = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (r - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += w * ys[a];
        }
        acc
    }

    /// Area weighted mean over the disk, `∫u r dr / ∫r dr`, by the trapezoid
    /// rule on the samples.
    pub fn disk_mean(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 1..self.radii.len() {
            let (r0, r1) = (self.radii[i - 1], self.radii[i]);
            let h = r1 - r0;
            num += 0.5 * h * (self.values[i - 1] * r0 + self.values[i] * r1);
            den += 0.5 * h * (r0 + r1);
        }
        num / den
    }

    /// The same profile shifted to zero disk mean.
    pub fn minus_disk_mean(&self) -> Self {
        let m = self.disk_mean();
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v -= m);
        out
    }

    /// Two column CSV `r,u`, preceded by `# lambda=<value>` for translators.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if let Some(l) = self.lambda {
            writeln!(w, "# lambda={l:.16e}")?;
        }
        writeln!(w, "r,u")?;
        for (r, u) in self.radii.iter().zip(&self.values) {
            writeln!(w, "{r:.16e},{u:.16e}")?;
        }
        Ok(())
    }
}

/// `u'(R)` enforced by the angle condition for a radial graph.
pub fn radial_boundary_slope(alpha: f64) -> f64 {
    alpha / (1.0 + alpha * alpha).sqrt()
}

/// Explicit solver for the radial flow on staggered nodes
/// `r_i = (i + ½) h`, `h = R / n`. The axis is closed by reflection and the
/// rim by a ghost node so that the slope across the face at `r = R` equals
/// the prescribed one.
#[derive(Debug, Clone)]
pub struct RadialSolver {
    h: f64,
    radii: Vec<f64>,
    inv_radii: Vec<f64>,
    slope: f64,
    sigma: f64,
    pub u: Vec<f64>,
    pub t: f64,
    pub steps: usize,
}

impl RadialSolver {
    pub fn new(n_pts: usize, r_disk: f64, alpha: f64, u0: impl Fn(f64) -> f64) -> Result<Self> {
        if n_pts < MIN_RADIAL_POINTS {
            return Err(Error::ResolutionTooLow(format!(
                "radial solver needs at least {MIN_RADIAL_POINTS} points, got {n_pts}"
            )));
        }
        if !(r_disk > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "radial solver needs R > 0 and finite alpha, got R={r_disk}, alpha={alpha}"
            )));
        }
        let h = r_disk / n_pts as f64;
        let radii: Vec<f64> = (0..n_pts).map(|i| (i as f64 + 0.5) * h).collect();
        let u = radii.iter().map(|&r| u0(r)).collect();
        Ok(Self {
            h,
            inv_radii: radii.iter().map(|r| 1.0 / r).collect(),
            radii,
            slope: radial_boundary_slope(alpha),
            sigma: 0.5,
            u,
            t: 0.0,
            steps: 0,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// `u_t` at every node together with the largest `v`.
    pub fn rate(&self, u: &[f64], out: &mut [f64]) -> Result<f64> {
        let n = u.len();
        let (inv2h, invh2) = (0.5 / self.h, 1.0 / (self.h * self.h));
        let node = |left: f64, c: f64, right: f64, inv_r: f64| {
            let d1 = (right - left) * inv2h;
            let d2 = (right - 2.0 * c + left) * invh2;
            let w = 1.0 - d1 * d1;
            (d2 / w + d1 * inv_r, w)
        };
        let mut w_min = f64::INFINITY;
        let ghost = u[n - 1] + self.h * self.slope;
        for (i, left, right) in [(0, u[0], u[1]), (n - 1, u[n - 2], ghost)] {
            let (q, w) = node(left, u[i], right, self.inv_radii[i]);
            out[i] = q;
            w_min = w_min.min(w);
        }
        for ((o, win), inv_r) in out[1..n - 1]
            .iter_mut()
            .zip(u.windows(3))
            .zip(&self.inv_radii[1..n - 1])
        {
            let (q, w) = node(win[0], win[1], win[2], *inv_r);
            *o = q;
            w_min = w_min.min(w);
        }
        if !(w_min > 0.0) {
            let i = (0..n)
                .find(|&i| {
                    let left = if i == 0 { u[0] } else { u[i - 1] };
                    let right = if i + 1 == n { ghost } else { u[i + 1] };
                    !(node(left, u[i], right, 0.0).1 > 0.0)
                })
                .unwrap_or(0);
            return Err(Error::SpacelikeLost {
                j: i,
                k: 0,
                t: self.t,
                margin: w_min,
            });
        }
        Ok(1.0 / w_min.sqrt())
    }

    /// Area weighted mean of `u_t`.
    pub fn mean_rate(&self) -> Result<f64> {
        let mut rate = vec![0.0; self.u.len()];
        self.rate(&self.u, &mut rate)?;
        let (num, den) = rate
            .iter()
            .zip(&self.radii)
            .fold((0.0, 0.0), |(a, b), (q, r)| (a + q * r, b + r));
        Ok(num / den)
    }

    /// Advances to `t_end` with the explicit midpoint rule.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let n = self.u.len();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut mid = vec![0.0; n];
        while self.t < t_end {
            let v_max = self.rate(&self.u, &mut k1)?;
            let mut dt = cfl_dt_for_spacing(self.h, v_max, self.sigma);
            if self.t + dt >= t_end {
                dt = t_end - self.t;
            }
            for ((m, u), k) in mid.iter_mut().zip(&self.u).zip(&k1) {
                *m = u + 0.5 * dt * k;
            }
            self.rate(&mid, &mut k2)?;
            for (u, k) in self.u.iter_mut().zip(&k2) {
                *u += dt * k;
            }
            self.t = if self.t + dt >= t_end {
                t_end
            } else {
                self.t + dt
            };
            self.steps += 1;
        }
        Ok(())
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile {
            radii: self.radii.clone(),
            values: self.u.clone(),
            slopes: None,
            lambda: None,
        }
    }
}

/// Evolves radial data on a disk of radius `r_disk` with constant α.
pub fn radial_flow(
    u0: &RadialProfile,
    alpha: f64,
    r_disk: f64,
    t_end: f64,
    n_pts: usize,
) -> Result<RadialProfile> {
    let mut solver = RadialSolver::new(n_pts, r_disk, alpha, |r| u0.interpolate(r))?;
    solver.advance_to(t_end)?;
    Ok(solver.profile())
}

fn translator_rhs(lambda: f64, r: f64, phi: f64) -> f64 {
    (lambda - phi / r) * (1.0 - phi * phi)
}

/// Integrates `(u, φ)` from the axis to `R`, returning the samples at
/// `n_pts` uniform radii.
fn integrate_translator(lambda: f64, r_disk: f64, n_pts: usize) -> (Vec<f64>, Vec<f64>) {
    let intervals = n_pts - 1;
    let sub = SHOOT_STEPS.div_ceil(intervals).max(1);
    let h = r_disk / (intervals * sub) as f64;
    let half = 0.5 * lambda;
    let mut u_out = Vec::with_capacity(n_pts);
    let mut phi_out = Vec::with_capacity(n_pts);
    u_out.push(0.0);
    phi_out.push(0.0);
    // Series start across the singular first step.
    let mut r = h;
    let mut phi = half * h - half.powi(3) * h.powi(3) / 4.0;
    let mut u = 0.5 * half * h * h - half.powi(3) * h.powi(4) / 16.0;
    let f = |r: f64, p: f64| translator_rhs(lambda, r, p);
    for i in 0..intervals {
        let first = if i == 0 { 1 } else { 0 };
        for _ in first..sub {
            let k1 = f(r, phi);
            let p2 = phi + 0.5 * h * k1;
            let k2 = f(r + 0.5 * h, p2);
            let p3 = phi + 0.5 * h * k2;
            let k3 = f(r + 0.5 * h, p3);
            let p4 = phi + h * k3;
            let k4 = f(r + h, p4);
            u += h / 6.0 * (phi + 2.0 * p2 + 2.0 * p3 + p4);
            phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            r += h;
        }
        u_out.push(u);
        phi_out.push(phi);
    }
    (u_out, phi_out)
}

/// Radial translator on a disk: finds λ such that the slope profile starting
/// from `φ(0) = 0` reaches the prescribed rim slope, by bisection.
pub fn translator_shoot(alpha: f64, r_disk: f64, n_pts: usize) -> Result<RadialProfile> {
    if !alpha.is_finite() || !(r_disk > 0.0) || !r_disk.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "translator needs finite alpha and R > 0, got alpha={alpha}, R={r_disk}"
        )));
    }
    if n_pts < 2 {
        return Err(Error::ResolutionTooLow(format!(
            "translator profile needs n_pts >= 2, got {n_pts}"
        )));
    }
    let target = radial_boundary_slope(alpha);
    let miss = |lambda: f64| -> f64 {
        let (_, phi) = integrate_translator(lambda, r_disk, 2);
        phi[1] - target
    };
    let lambda = if alpha == 0.0 {
        0.0
    } else {
        let mut bound = (1.0 + alpha.abs()) * 4.0 / r_disk;
        let mut bracket = None;
        for _ in 0..=BRACKET_DOUBLINGS {
            let (lo, hi) = (miss(-bound), miss(bound));
            if lo < 0.0 && hi > 0.0 {
                bracket = Some((-bound, bound));
                break;
            }
            bound *= 2.0;
        }
        let (mut lo, mut hi) = bracket.ok_or_else(|| {
            Error::ShootingFailed(format!(
                "no sign change for alpha={alpha} up to |lambda|={bound}"
            ))
        })?;
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let m = miss(mid);
            if m.abs() < 1e-2 * SHOOT_TOL || hi - lo < 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
            if m < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if !(miss(mid).abs() < SHOOT_TOL) {
            return Err(Error::ShootingFailed(format!(
                "bisection stalled at lambda={mid} with slope miss {}",
                miss(mid)
            )));
        }
        mid
    };
    let (values, slopes) = integrate_translator(lambda, r_disk, n_pts);
    let h = r_disk / (n_pts - 1) as f64;
    Ok(RadialProfile {
        radii: (0..n_pts).map(|i| i as f64 * h).collect(),
        values,
        slopes: Some(slopes),
        lambda: Some(lambda),
    })
}

/// The plane `u = a·(x - c)` with the angle that makes it stationary on
/// `domain`, `α = γ·a / √(1 - |a|²)`.
pub fn compatible_plane(a: [f64; 2], domain: &Domain) -> Result<(InitialData, AnglePrescription)> {
    let norm = a[0].hypot(a[1]);
    if !(norm < 1.0) {
        return Err(Error::NotSpacelike(norm));
    }
    let alpha = AnglePrescription::CompatiblePlane { slope: a };
    domain.with_alpha(alpha.clone())?;
    Ok((InitialData::Plane { slope: a }, alpha))
}
