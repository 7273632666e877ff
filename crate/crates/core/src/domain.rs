//! Strictly convex planar domains given as radial graphs, and the boundary
//! angle prescription.
//!
//! A domain is described by its radial function `R(θ)` about an interior
//! center, so the boundary is `c + R(θ)(cos θ, sin θ)`. Boundary curvature,
//! the outward normal and the arc-length derivative of the angle function
//! are all evaluated analytically from `R`, `R'`, `R''`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Highest admissible Fourier mode for radial functions and angle series.
pub const MAX_FOURIER_ORDER: usize = 16;

/// Minimum number of boundary samples used when building a [`Domain`].
pub const MIN_SAMPLES: usize = 64;

/// Truncated real Fourier series `c₀ + Σ_{m≥1} (cₘ cos mθ + sₘ sin mθ)`.
///
/// `cos[m]` and `sin[m]` hold the coefficients of mode `m`; `sin[0]` is
/// ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierSeries {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { cos, sin }
    }

    /// Highest mode carrying a coefficient.
    pub fn order(&self) -> usize {
        self.cos.len().max(self.sin.len()).saturating_sub(1)
    }

    /// Value and first two θ-derivatives.
    pub fn eval(&self, theta: f64) -> [f64; 3] {
        let mut out = [self.cos.first().copied().unwrap_or(0.0), 0.0, 0.0];
        for m in 1..=self.order() {
            let c = self.cos.get(m).copied().unwrap_or(0.0);
            let s = self.sin.get(m).copied().unwrap_or(0.0);
            let mf = m as f64;
            let (sn, cs) = (mf * theta).sin_cos();
            out[0] += c * cs + s * sn;
            out[1] += mf * (s * cs - c * sn);
            out[2] -= mf * mf * (c * cs + s * sn);
        }
        out
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.order() > MAX_FOURIER_ORDER {
            return Err(Error::InvalidSpec(format!(
                "{what}: Fourier order {} exceeds {MAX_FOURIER_ORDER}",
                self.order()
            )));
        }
        if self.cos.iter().chain(&self.sin).any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "{what}: non-finite coefficient"
            )));
        }
        Ok(())
    }
}

/// Shape of the domain boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Disk {
        radius: f64,
    },
    /// Axis-aligned ellipse with semi-axes `a` (along x) and `b` (along y).
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Boundary `R(θ)` given directly as a Fourier series.
    RadialFourier(FourierSeries),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub center: [f64; 2],
}

impl DomainSpec {
    pub fn disk(radius: f64) -> Self {
        Self {
            kind: DomainKind::Disk { radius },
            center: [0.0, 0.0],
        }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self {
            kind: DomainKind::Ellipse { a, b },
            center: [0.0, 0.0],
        }
    }

    pub fn radial_fourier(series: FourierSeries) -> Self {
        Self {
            kind: DomainKind::RadialFourier(series),
            center: [0.0, 0.0],
        }
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    /// `R(θ)`, `R'(θ)`, `R''(θ)`.
    pub fn radial(&self, theta: f64) -> [f64; 3] {
        match &self.kind {
            DomainKind::Disk { radius } => [*radius, 0.0, 0.0],
            DomainKind::Ellipse { a, b } => {
                // R = ab D^{-1/2},  D = b² + (a² - b²) sin²θ
                let d2 = a * a - b * b;
                let (s, c) = theta.sin_cos();
                let d = b * b + d2 * s * s;
                let dp = d2 * 2.0 * s * c;
                let dpp = 2.0 * d2 * (c * c - s * s);
                let ab = a * b;
                let r = ab / d.sqrt();
                let rp = -0.5 * ab * dp * d.powf(-1.5);
                let rpp = ab * (0.75 * dp * dp * d.powf(-2.5) - 0.5 * dpp * d.powf(-1.5));
                [r, rp, rpp]
            }
            DomainKind::RadialFourier(series) => series.eval(theta),
        }
    }

    fn fourier_order(&self) -> usize {
        match &self.kind {
            DomainKind::RadialFourier(series) => series.order(),
            _ => 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return Err(Error::InvalidSpec("center must be finite".into()));
        }
        match &self.kind {
            DomainKind::Disk { radius } if !(radius.is_finite() && *radius > 0.0) => Err(
                Error::InvalidSpec(format!("disk radius must be positive, got {radius}")),
            ),
            DomainKind::Ellipse { a, b }
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) =>
            {
                Err(Error::InvalidSpec(format!(
                    "ellipse semi-axes must be positive, got a={a}, b={b}"
                )))
            }
            DomainKind::RadialFourier(series) => series.validate("radial function"),
            _ => Ok(()),
        }
    }
}

/// Boundary angle prescription α as a function of the boundary parameter θ.
///
/// It never depends on the height of the graph.
#[derive(Debug, Clone, PartialEq)]
pub enum AnglePrescription {
    Constant(f64),
    Fourier(FourierSeries),
    /// `α(θ) = γ(θ)·a / √(1 - |a|²)`, the angle for which the plane `u = a·x`
    /// is stationary.
    CompatiblePlane {
        slope: [f64; 2],
    },
}

impl AnglePrescription {
    fn fourier_order(&self) -> usize {
        match self {
            AnglePrescription::Fourier(series) => series.order(),
            _ => 0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            AnglePrescription::Constant(a) if !a.is_finite() => {
                Err(Error::InvalidSpec("alpha must be finite".into()))
            }
            AnglePrescription::Fourier(series) => series.validate("alpha"),
            AnglePrescription::CompatiblePlane { slope } => {
                let norm = slope[0].hypot(slope[1]);
                if norm.is_finite() && norm < 1.0 {
                    Ok(())
                } else {
                    Err(Error::NotSpacelike(norm))
                }
            }
            _ => Ok(()),
        }
    }
}

/// A validated domain with boundary geometry sampled on a uniform θ mesh.
#[derive(Debug, Clone)]
pub struct Domain {
    spec: DomainSpec,
    alpha: AnglePrescription,
    pub theta: Vec<f64>,
    /// `[R, R', R'']` per sample.
    pub radial: Vec<[f64; 3]>,
    pub gamma: Vec<[f64; 2]>,
    pub kappa: Vec<f64>,
    pub alpha_samples: Vec<f64>,
    /// sup |α|
    pub alpha_bar: f64,
    /// inf κ
    pub kappa_min: f64,
    /// sup |dα/ds|
    pub c_alpha: f64,
}

impl Domain {
    /// Validates `spec` and `alpha` and samples the boundary at `n_samples`
    /// equally spaced parameters.
    pub fn new(spec: DomainSpec, alpha: AnglePrescription, n_samples: usize) -> Result<Self> {
        spec.validate()?;
        alpha.validate()?;
        let order = spec.fourier_order().max(alpha.fourier_order());
        let needed = MIN_SAMPLES.max(16 * order);
        if n_samples < needed {
            return Err(Error::InvalidSpec(format!(
                "n_samples = {n_samples} below required {needed}"
            )));
        }

        let mut domain = Self {
            spec,
            alpha,
            theta: Vec::with_capacity(n_samples),
            radial: Vec::with_capacity(n_samples),
            gamma: Vec::with_capacity(n_samples),
            kappa: Vec::with_capacity(n_samples),
            alpha_samples: Vec::with_capacity(n_samples),
            alpha_bar: 0.0,
            kappa_min: f64::INFINITY,
            c_alpha: 0.0,
        };

        let mut r_min = (f64::INFINITY, 0.0);
        let mut k_min = (f64::INFINITY, 0.0);
        for i in 0..n_samples {
            let theta = 2.0 * PI * i as f64 / n_samples as f64;
            let rad = domain.spec.radial(theta);
            if rad[0] < r_min.0 {
                r_min = (rad[0], theta);
            }
            domain.theta.push(theta);
            domain.radial.push(rad);
        }
        if !(r_min.0 > 0.0) {
            return Err(Error::NonPositiveRadius {
                r_min: r_min.0,
                theta: r_min.1,
            });
        }
        for i in 0..n_samples {
            let theta = domain.theta[i];
            let kappa = domain.curvature(theta);
            if kappa < k_min.0 {
                k_min = (kappa, theta);
            }
            domain.kappa.push(kappa);
            domain.gamma.push(domain.boundary_normal(theta));
        }
        if !(k_min.0 > 0.0) {
            return Err(Error::NotStrictlyConvex {
                kappa_min: k_min.0,
                theta: k_min.1,
            });
        }
        domain.kappa_min = k_min.0;

        for i in 0..n_samples {
            let theta = domain.theta[i];
            let a = domain.alpha_at(theta);
            domain.alpha_samples.push(a);
            domain.alpha_bar = domain.alpha_bar.max(a.abs());
            domain.c_alpha = domain.c_alpha.max(domain.alpha_arc_derivative(theta).abs());
        }
        Ok(domain)
    }

    /// Same boundary with a different angle prescription.
    pub fn with_alpha(&self, alpha: AnglePrescription) -> Result<Self> {
        Self::new(self.spec.clone(), alpha, self.theta.len())
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn alpha(&self) -> &AnglePrescription {
        &self.alpha
    }

    pub fn center(&self) -> [f64; 2] {
        self.spec.center
    }

    pub fn radial_fn(&self, theta: f64) -> [f64; 3] {
        self.spec.radial(theta)
    }

    pub fn boundary_point(&self, theta: f64) -> [f64; 2] {
        let r = self.spec.radial(theta)[0];
        let (s, c) = theta.sin_cos();
        [self.spec.center[0] + r * c, self.spec.center[1] + r * s]
    }

    /// `ds/dθ = √(R² + R'²)`.
    pub fn arc_speed(&self, theta: f64) -> f64 {
        let [r, rp, _] = self.spec.radial(theta);
        r.hypot(rp)
    }

    /// Counterclockwise unit tangent of the boundary.
    pub fn boundary_tangent(&self, theta: f64) -> [f64; 2] {
        let [r, rp, _] = self.spec.radial(theta);
        let (s, c) = theta.sin_cos();
        // R' e_r + R e_θ
        let t = [rp * c - r * s, rp * s + r * c];
        let n = t[0].hypot(t[1]);
        [t[0] / n, t[1] / n]
    }

    /// Outward unit normal γ of ∂Ω.
    pub fn boundary_normal(&self, theta: f64) -> [f64; 2] {
        let t = self.boundary_tangent(theta);
        [t[1], -t[0]]
    }

    /// Boundary curvature of the radial graph, positive for convex curves.
    pub fn curvature(&self, theta: f64) -> f64 {
        let [r, rp, rpp] = self.spec.radial(theta);
        (r * r + 2.0 * rp * rp - r * rpp) / (r * r + rp * rp).powf(1.5)
    }

    pub fn alpha_at(&self, theta: f64) -> f64 {
        match &self.alpha {
            AnglePrescription::Constant(a) => *a,
            AnglePrescription::Fourier(series) => series.eval(theta)[0],
            AnglePrescription::CompatiblePlane { slope } => {
                let g = self.boundary_normal(theta);
                (g[0] * slope[0] + g[1] * slope[1]) / plane_lorentz(slope)
            }
        }
    }

    /// dα/ds along the boundary.
    pub fn alpha_arc_derivative(&self, theta: f64) -> f64 {
        match &self.alpha {
            AnglePrescription::Constant(_) => 0.0,
            AnglePrescription::Fourier(series) => series.eval(theta)[1] / self.arc_speed(theta),
            AnglePrescription::CompatiblePlane { slope } => {
                // dγ/ds = κ τ for the outward normal of a counterclockwise curve.
                let t = self.boundary_tangent(theta);
                self.curvature(theta) * (t[0] * slope[0] + t[1] * slope[1]) / plane_lorentz(slope)
            }
        }
    }

    /// The gradient-bound constant for this domain, see [`theoretical_c`].
    pub fn theoretical_c(&self, c_h: f64, sup_v0: f64) -> f64 {
        theoretical_c(self.alpha_bar, self.kappa_min, self.c_alpha, c_h, sup_v0)
    }
}

fn plane_lorentz(slope: &[f64; 2]) -> f64 {
    (1.0 - slope[0] * slope[0] - slope[1] * slope[1]).sqrt()
}

/// Time independent bound on `v = (1 - |Du|²)^{-1/2}`:
///
/// `C = max{ 2√(1+ᾱ²), (1+ᾱ²)(ᾱ C_H/κ̲ + (2ᾱ²+1) C_α/κ̲ + 1), sup v₀ }`.
pub fn theoretical_c(alpha_bar: f64, kappa_min: f64, c_alpha: f64, c_h: f64, sup_v0: f64) -> f64 {
    let a2 = 1.0 + alpha_bar * alpha_bar;
    let light = 2.0 * a2.sqrt();
    let boundary = a2
        * (alpha_bar * c_h / kappa_min
            + (2.0 * alpha_bar * alpha_bar + 1.0) * c_alpha / kappa_min
            + 1.0);
    light.max(boundary).max(sup_v0)
}
