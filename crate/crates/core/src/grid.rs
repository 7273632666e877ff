//! Boundary-fitted polar mesh with staggered radial nodes.
//!
//! Reference coordinates `(r, θ) ∈ (0, 1) × [0, 2π)` map to the domain by
//! `x = c + r R(θ) (cos θ, sin θ)`. Radial nodes sit at `r_j = (j + ½)/n_r`, so
//! there is no node at the pole; the innermost ring borrows the node across
//! the pole (`θ + π`) to complete its radial stencils. A ghost ring at
//! `r = 1 + 1/(2 n_r)` carries the boundary closure; the physical boundary
//! `r = 1` lies midway between the last interior ring and the ghost ring.
//!
//! Cartesian derivatives are obtained from second-order differences in `r`
//! and fourth-order periodic differences in `θ` (exact on modes 0 and ±1) by
//! the chain rule, using analytic first and second derivatives
//! of the inverse map.
//!
//! Near the pole the azimuthal spacing `r R dθ` collapses, which would force
//! an explicit time step far below the radial one. Each ring therefore has an
//! azimuthal mode cutoff: tendencies on that ring are projected onto Fourier
//! modes `|m| ≤ M_j`, with `M_j` the largest cutoff whose effective spacing
//! stays above the smallest radial spacing. Rings far enough from the pole
//! keep all modes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::Field;

pub const MIN_N_R: usize = 8;
pub const MIN_N_THETA: usize = 16;

/// Inverse-map data at one interior node.
#[derive(Debug, Clone, Copy)]
struct NodeMetric {
    /// ∇r
    gr: [f64; 2],
    /// ∇θ
    gt: [f64; 2],
    /// Cartesian Hessian of r: (xx, xy, yy)
    hr: [f64; 3],
    /// Cartesian Hessian of θ: (xx, xy, yy)
    ht: [f64; 3],
}

/// Boundary data at `r = 1` for one angular index.
#[derive(Debug, Clone, Copy)]
struct FaceMetric {
    /// γ·∇r, strictly positive
    gamma_r: f64,
    /// γ·∇θ
    gamma_t: f64,
    /// |∂x/∂θ| = ds/dθ
    arc_speed: f64,
}

/// Three-point stencil along the ray through the pole for ring 0.
#[derive(Debug, Clone, Copy)]
struct PoleStencil {
    /// index of the node at θ + π on ring 0
    opposite: usize,
    /// weights on (across-pole, ring 0, ring 1) for ∂_r
    d1: [f64; 3],
    /// weights for ∂_rr
    d2: [f64; 3],
}

#[derive(Clone)]
struct RingFilter {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for RingFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingFilter")
            .field("len", &self.forward.len())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
    /// weights of the periodic θ stencils, see [`theta_weights`]
    d1_weight: f64,
    d2_weight: f64,
    /// θ neighbours `k-2, k-1, k+1, k+2` modulo `n_theta`
    nbr: Vec<[usize; 4]>,
    center: [f64; 2],
    /// reference radii of interior rings followed by the ghost ring
    r: Vec<f64>,
    theta: Vec<f64>,
    /// physical positions, `(n_r + 1) × n_theta` including the ghost ring
    positions: Vec<[f64; 2]>,
    metric: Vec<NodeMetric>,
    face: Vec<FaceMetric>,
    pole: Vec<PoleStencil>,
    /// area weight `r R² Δr Δθ` per interior node
    weights: Vec<f64>,
    /// azimuthal cutoff per ring; `n_theta / 2` means unfiltered
    cutoff: Vec<usize>,
    h_min: f64,
    filter: RingFilter,
}

impl Grid {
    pub fn new(domain: &Domain, n_r: usize, n_theta: usize) -> Result<Self> {
        if n_r < MIN_N_R {
            return Err(Error::ResolutionTooLow(format!("n_r = {n_r} < {MIN_N_R}")));
        }
        if n_theta < MIN_N_THETA || !n_theta.is_multiple_of(2) {
            return Err(Error::ResolutionTooLow(format!(
                "n_theta = {n_theta} must be even and >= {MIN_N_THETA}"
            )));
        }
        let dr = 1.0 / n_r as f64;
        let dtheta = 2.0 * PI / n_theta as f64;
        let center = domain.center();
        let r: Vec<f64> = (0..=n_r).map(|j| (j as f64 + 0.5) * dr).collect();
        let theta: Vec<f64> = (0..n_theta).map(|k| k as f64 * dtheta).collect();
        let radial: Vec<[f64; 3]> = theta.iter().map(|&t| domain.radial_fn(t)).collect();

        let mut positions = Vec::with_capacity((n_r + 1) * n_theta);
        for &rj in &r {
            for (k, &t) in theta.iter().enumerate() {
                let (s, c) = t.sin_cos();
                let rr = rj * radial[k][0];
                positions.push([center[0] + rr * c, center[1] + rr * s]);
            }
        }

        let mut metric = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        for &rj in &r[..n_r] {
            for (k, &t) in theta.iter().enumerate() {
                metric.push(node_metric(rj, t, radial[k]));
                weights.push(rj * radial[k][0] * radial[k][0] * dr * dtheta);
            }
        }

        let face = theta
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let m = node_metric(1.0, t, radial[k]);
                let g = domain.boundary_normal(t);
                FaceMetric {
                    gamma_r: g[0] * m.gr[0] + g[1] * m.gr[1],
                    gamma_t: g[0] * m.gt[0] + g[1] * m.gt[1],
                    arc_speed: radial[k][0].hypot(radial[k][1]),
                }
            })
            .collect();

        let half = n_theta / 2;
        let pole = (0..n_theta)
            .map(|k| {
                let opposite = (k + half) % n_theta;
                // positions along the ray θ_k, in units of the reference radius
                let s_minus = -r[0] * radial[opposite][0] / radial[k][0];
                let hm = r[0] - s_minus;
                let hp = dr;
                PoleStencil {
                    opposite,
                    d1: [
                        -hp / (hm * (hm + hp)),
                        (hp - hm) / (hm * hp),
                        hm / (hp * (hm + hp)),
                    ],
                    d2: [
                        2.0 / (hm * (hm + hp)),
                        -2.0 / (hm * hp),
                        2.0 / (hp * (hm + hp)),
                    ],
                }
            })
            .collect();

        let h_radial = metric
            .iter()
            .map(|m| dr / m.gr[0].hypot(m.gr[1]))
            .fold(f64::INFINITY, f64::min);
        let mut cutoff = Vec::with_capacity(n_r);
        let mut h_min = h_radial;
        for j in 0..n_r {
            let ring = &metric[j * n_theta..(j + 1) * n_theta];
            let h_ang = ring
                .iter()
                .map(|m| dtheta / m.gt[0].hypot(m.gt[1]))
                .fold(f64::INFINITY, f64::min);
            let cut = if h_ang >= h_radial {
                half
            } else {
                let m = (2.0 * (h_ang / h_radial).asin() / dtheta).floor() as usize;
                m.clamp(1, half)
            };
            let h_eff = h_ang / (cut as f64 * dtheta / 2.0).sin();
            h_min = h_min.min(h_eff);
            cutoff.push(cut);
        }

        let (d1_weight, d2_weight) = theta_weights(dtheta);
        let mut planner = FftPlanner::new();
        let filter = RingFilter {
            forward: planner.plan_fft_forward(n_theta),
            inverse: planner.plan_fft_inverse(n_theta),
        };

        Ok(Self {
            n_r,
            n_theta,
            dr,
            dtheta,
            d1_weight,
            d2_weight,
            nbr: (0..n_theta)
                .map(|k| {
                    let n = n_theta;
                    [(k + n - 2) % n, (k + n - 1) % n, (k + 1) % n, (k + 2) % n]
                })
                .collect(),
            center,
            r,
            theta,
            positions,
            metric,
            face,
            pole,
            weights,
            cutoff,
            h_min,
            filter,
        })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_r, self.n_theta)
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    /// Reference radius of ring `j`; `j = n_r` is the ghost ring.
    pub fn radius(&self, j: usize) -> f64 {
        self.r[j]
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.theta[k]
    }

    /// Physical position of node `(j, k)`; `j = n_r` addresses the ghost ring.
    pub fn position(&self, j: usize, k: usize) -> [f64; 2] {
        self.positions[j * self.n_theta + k]
    }

    /// Smallest effective node spacing, after the pole cutoff.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    /// Azimuthal mode cutoff of ring `j`.
    pub fn ring_cutoff(&self, j: usize) -> usize {
        self.cutoff[j]
    }

    /// Area weights of the interior nodes; they sum to the domain area up to
    /// the quadrature error.
    pub fn area_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Area-weighted mean of an interior field.
    pub fn mean(&self, values: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (v, w) in values.iter().zip(&self.weights) {
            num += v * w;
            den += w;
        }
        num / den
    }

    fn check_shape(&self, u: &Field) -> Result<()> {
        if u.shape() != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: u.shape(),
            });
        }
        Ok(())
    }

    /// Samples `f` on every interior and ghost node.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Field {
        let n = self.n_theta;
        let values = self.positions[..self.len()].iter().map(|&p| f(p)).collect();
        let mut field = Field::from_values(self.n_r, n, values).expect("grid-sized field");
        field.set_ghost(self.positions[self.len()..].iter().map(|&p| f(p)).collect());
        field
    }

    /// Visits every interior node with its Cartesian gradient and Hessian
    /// `(u_xx, u_xy, u_yy)`.
    #[inline]
    pub(crate) fn for_each_derivative<F>(&self, u: &Field, mut visit: F) -> Result<()>
    where
        F: FnMut(usize, [f64; 2], [f64; 3]),
    {
        self.check_shape(u)?;
        let ghost = u.ghost().ok_or(Error::MissingGhostRow)?;
        let n = self.n_theta;
        let vals = u.values();
        let inv_2dr = 0.5 / self.dr;
        let inv_dr2 = 1.0 / (self.dr * self.dr);
        let inv_12dt = self.d1_weight;
        let inv_12dt2 = self.d2_weight;
        let mut ur = vec![0.0; n];

        for j in 0..self.n_r {
            let row = &vals[j * n..(j + 1) * n];
            let up = if j + 1 == self.n_r {
                ghost
            } else {
                &vals[(j + 1) * n..(j + 2) * n]
            };
            if j == 0 {
                for k in 0..n {
                    let p = &self.pole[k];
                    ur[k] = p.d1[0] * row[p.opposite] + p.d1[1] * row[k] + p.d1[2] * up[k];
                }
            } else {
                let down = &vals[(j - 1) * n..j * n];
                for k in 0..n {
                    ur[k] = (up[k] - down[k]) * inv_2dr;
                }
            }

            for k in 0..n {
                let [k2m, km, kp, k2p] = self.neighbours(k);
                let c = row[k];
                let u_r = ur[k];
                let u_t = (8.0 * (row[kp] - row[km]) - (row[k2p] - row[k2m])) * inv_12dt;
                let u_tt =
                    (16.0 * (row[kp] + row[km]) - (row[k2p] + row[k2m]) - 30.0 * c) * inv_12dt2;
                let u_rt = (8.0 * (ur[kp] - ur[km]) - (ur[k2p] - ur[k2m])) * inv_12dt;
                let u_rr = if j == 0 {
                    let p = &self.pole[k];
                    p.d2[0] * row[p.opposite] + p.d2[1] * c + p.d2[2] * up[k]
                } else {
                    (up[k] - 2.0 * c + vals[(j - 1) * n + k]) * inv_dr2
                };

                let idx = j * n + k;
                let m = &self.metric[idx];
                let du = [u_r * m.gr[0] + u_t * m.gt[0], u_r * m.gr[1] + u_t * m.gt[1]];
                let hxx = m.gr[0] * m.gr[0] * u_rr
                    + 2.0 * m.gr[0] * m.gt[0] * u_rt
                    + m.gt[0] * m.gt[0] * u_tt
                    + u_r * m.hr[0]
                    + u_t * m.ht[0];
                let hxy = m.gr[0] * m.gr[1] * u_rr
                    + (m.gr[0] * m.gt[1] + m.gt[0] * m.gr[1]) * u_rt
                    + m.gt[0] * m.gt[1] * u_tt
                    + u_r * m.hr[1]
                    + u_t * m.ht[1];
                let hyy = m.gr[1] * m.gr[1] * u_rr
                    + 2.0 * m.gr[1] * m.gt[1] * u_rt
                    + m.gt[1] * m.gt[1] * u_tt
                    + u_r * m.hr[2]
                    + u_t * m.ht[2];
                visit(idx, du, [hxx, hxy, hyy]);
            }
        }
        Ok(())
    }

    /// Cartesian gradient `Du` at every interior node.
    pub fn gradient(&self, u: &Field) -> Result<Vec<[f64; 2]>> {
        let mut out = vec![[0.0; 2]; self.len()];
        self.for_each_derivative(u, |i, du, _| out[i] = du)?;
        Ok(out)
    }

    /// Cartesian Hessian `(u_xx, u_xy, u_yy)` at every interior node.
    pub fn hessian(&self, u: &Field) -> Result<Vec<[f64; 3]>> {
        let mut out = vec![[0.0; 3]; self.len()];
        self.for_each_derivative(u, |i, _, h| out[i] = h)?;
        Ok(out)
    }

    /// Values on the boundary `r = 1`, extrapolated linearly from the two
    /// outermost interior rings.
    pub fn boundary_values(&self, u: &Field) -> Vec<f64> {
        let b = u.row(self.n_r - 1);
        let b1 = u.row(self.n_r - 2);
        b.iter().zip(b1).map(|(x, y)| 1.5 * x - 0.5 * y).collect()
    }

    /// Arc-length derivative `τ·Du` along ∂Ω at each boundary angle, with τ the
    /// counterclockwise unit tangent. Uses interior values only.
    pub fn boundary_tangential_derivative(&self, u: &Field) -> Vec<f64> {
        let f = self.boundary_values(u);
        (0..self.n_theta)
            .map(|k| self.theta_derivative(&f, k) / self.face[k].arc_speed)
            .collect()
    }

    /// Indices `k-2, k-1, k+1, k+2` modulo `n_theta`.
    #[inline]
    fn neighbours(&self, k: usize) -> [usize; 4] {
        self.nbr[k]
    }

    /// Fourth-order periodic difference of a ring of values.
    #[inline]
    fn theta_derivative(&self, f: &[f64], k: usize) -> f64 {
        let [k2m, km, kp, k2p] = self.neighbours(k);
        (8.0 * (f[kp] - f[km]) - (f[k2p] - f[k2m])) * self.d1_weight
    }

    /// Reconstructed `γ·Du` on the boundary `r = 1` from the outermost ring and
    /// the ghost ring.
    pub fn boundary_normal_derivative(&self, u: &Field) -> Result<Vec<f64>> {
        self.check_shape(u)?;
        let ghost = u.ghost().ok_or(Error::MissingGhostRow)?;
        let f = self.boundary_values(u);
        let b = u.row(self.n_r - 1);
        let n = self.n_theta;
        Ok((0..n)
            .map(|k| {
                let u_r = (ghost[k] - b[k]) / self.dr;
                let u_t = self.theta_derivative(&f, k);
                u_r * self.face[k].gamma_r + u_t * self.face[k].gamma_t
            })
            .collect())
    }

    /// Ghost value at angle index `k` such that the boundary reconstruction of
    /// `γ·Du` equals `normal_slope`, given the tangential slope `q` there.
    #[inline]
    pub(crate) fn ghost_for_normal_slope(
        &self,
        u: &Field,
        k: usize,
        q: f64,
        normal_slope: f64,
    ) -> f64 {
        let face = &self.face[k];
        let u_t = q * face.arc_speed;
        let u_r = (normal_slope - u_t * face.gamma_t) / face.gamma_r;
        u.at(self.n_r - 1, k) + self.dr * u_r
    }

    /// Projects each ring of an interior field onto its admissible azimuthal
    /// modes. Rings without a cutoff are left untouched.
    pub fn filter_rings(&self, values: &mut [f64]) {
        let n = self.n_theta;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch =
            vec![Complex::new(0.0, 0.0); self.filter.forward.get_inplace_scratch_len()];
        let scale = 1.0 / n as f64;
        for (j, &cut) in self.cutoff.iter().enumerate() {
            if cut >= n / 2 {
                continue;
            }
            let ring = &mut values[j * n..(j + 1) * n];
            for (b, v) in buf.iter_mut().zip(ring.iter()) {
                *b = Complex::new(*v, 0.0);
            }
            self.filter
                .forward
                .process_with_scratch(&mut buf, &mut scratch);
            for b in &mut buf[cut + 1..n - cut] {
                *b = Complex::new(0.0, 0.0);
            }
            self.filter
                .inverse
                .process_with_scratch(&mut buf, &mut scratch);
            for (v, b) in ring.iter_mut().zip(&buf) {
                *v = b.re * scale;
            }
        }
    }
}

/// Weights `w1, w2` of the five-point periodic stencils
/// `w1 (8(f₊ - f₋) - (f₊₊ - f₋₋))` and `w2 (16(f₊ + f₋) - (f₊₊ + f₋₋) - 30 f)`.
///
/// The plain fourth-order weights are `1/(12 dθ)` and `1/(12 dθ²)`; these are
/// rescaled by `1 + O(dθ⁴)` so that `e^{±iθ}` is differentiated exactly. Modes
/// 0 and ±1 then carry no θ truncation error, which keeps planes stationary on
/// a disk and leaves the modes kept near the pole exact in θ.
fn theta_weights(dtheta: f64) -> (f64, f64) {
    let symbol1 = (8.0 * dtheta.sin() - (2.0 * dtheta).sin()) / 6.0;
    let symbol2 = (30.0 - 32.0 * dtheta.cos() + 2.0 * (2.0 * dtheta).cos()) / 12.0;
    (1.0 / (12.0 * symbol1), 1.0 / (12.0 * symbol2))
}

fn node_metric(r: f64, theta: f64, radial: [f64; 3]) -> NodeMetric {
    let [big_r, rp, rpp] = radial;
    let (s, c) = theta.sin_cos();
    let er = [c, s];
    let et = [-s, c];
    // ∂x/∂r, ∂x/∂θ
    let xr = [big_r * er[0], big_r * er[1]];
    let xt = [
        r * (rp * er[0] + big_r * et[0]),
        r * (rp * er[1] + big_r * et[1]),
    ];
    let det = xr[0] * xt[1] - xt[0] * xr[1];
    let gr = [xt[1] / det, -xt[0] / det];
    let gt = [-xr[1] / det, xr[0] / det];

    // second derivatives of the forward map; x_rr = 0
    let xrt = [rp * er[0] + big_r * et[0], rp * er[1] + big_r * et[1]];
    let xtt = [
        r * ((rpp - big_r) * er[0] + 2.0 * rp * et[0]),
        r * ((rpp - big_r) * er[1] + 2.0 * rp * et[1]),
    ];
    // Q_k(i, j) = Σ_bc ∂²x_k/∂ξ_b∂ξ_c ∂ξ_b/∂x_i ∂ξ_c/∂x_j, for (i, j) in {xx, xy, yy}
    let pairs = [(0usize, 0usize), (0, 1), (1, 1)];
    let mut q = [[0.0; 3]; 2];
    for (comp, qk) in q.iter_mut().enumerate() {
        for (p, &(i, jj)) in pairs.iter().enumerate() {
            qk[p] = xrt[comp] * (gr[i] * gt[jj] + gt[i] * gr[jj]) + xtt[comp] * gt[i] * gt[jj];
        }
    }
    // ∂²ξ_a/∂x_i∂x_j = -Σ_k ∂ξ_a/∂x_k Q_k(i, j)
    let mut hr = [0.0; 3];
    let mut ht = [0.0; 3];
    for p in 0..3 {
        hr[p] = -(gr[0] * q[0][p] + gr[1] * q[1][p]);
        ht[p] = -(gt[0] * q[0][p] + gt[1] * q[1][p]);
    }
    NodeMetric { gr, gt, hr, ht }
}
