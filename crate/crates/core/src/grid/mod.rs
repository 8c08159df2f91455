//! Uniform (t, r) grids, storage of the reduced field χ = r·φ, the bump
//! initial-data family and time slices.

mod interp;
mod io;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::conformal::alpha_p;
use crate::error::{Error, Result};

pub use interp::{lagrange_derivative_weights, lagrange_weights};

/// Relative slack allowed when checking that extents are integer multiples
/// of the step sizes.
const COMMENSURABILITY_TOL: f64 = 1e-9;

/// Queries closer than this (in units of the step) to a node are snapped to it.
pub(crate) const SNAP_TOL: f64 = 1e-9;

/// Uniform grid in (t, r). Time runs from `t_start` to `t_end` with step
/// `lambda * h`; space runs from the axis to `r_max` with step `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub r_max: f64,
    pub h: f64,
    pub lambda: f64,
}

fn integer_ratio(extent: f64, step: f64, field: &str) -> Result<usize> {
    let q = extent / step;
    let k = q.round();
    if !q.is_finite() || k < 1.0 || (q - k).abs() > COMMENSURABILITY_TOL * q.max(1.0) {
        return Err(Error::config(
            field,
            format!("extent {extent} is not an integer multiple of step {step}"),
        ));
    }
    Ok(k as usize)
}

impl GridSpec {
    pub fn new(t_start: f64, t_end: f64, r_max: f64, h: f64, lambda: f64) -> Result<Self> {
        let spec = GridSpec {
            t_start,
            t_end,
            r_max,
            h,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.t_start, self.t_end, self.r_max, self.h, self.lambda];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("grid", "all grid parameters must be finite"));
        }
        if self.t_end <= self.t_start {
            return Err(Error::config("grid.t_end", "t_end must exceed t_start"));
        }
        if self.r_max <= 0.0 {
            return Err(Error::config("grid.r_max", "r_max must be positive"));
        }
        if self.h <= 0.0 {
            return Err(Error::config("grid.h", "h must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::config(
                "grid.lambda",
                format!("Courant ratio {} outside (0, 1]", self.lambda),
            ));
        }
        integer_ratio(self.r_max, self.h, "grid.r_max")?;
        integer_ratio(self.t_end - self.t_start, self.dt(), "grid.t_end")?;
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.lambda * self.h
    }

    /// Number of time steps between `t_start` and `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt()).round() as usize
    }

    /// Number of radial nodes including the axis and the outer boundary.
    pub fn nodes(&self) -> usize {
        (self.r_max / self.h).round() as usize + 1
    }

    pub fn radius(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t_start + n as f64 * self.dt()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.radius(j)).collect()
    }

    /// Copy of this grid with all steps divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        GridSpec {
            h: self.h / factor as f64,
            ..*self
        }
    }
}

/// Which equation a field solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// The original equation on the forward cone.
    Forward,
    /// The conformally transformed equation on the backward cone.
    Transformed,
}

/// χ = r·φ sampled on a uniform grid. Row `i` holds time level
/// `i * stride` of the underlying grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeField {
    pub spec: GridSpec,
    pub stride: usize,
    pub values: Array2<f64>,
    pub p: f64,
    pub kind: FieldKind,
    /// The field vanishes identically for `t - r` below this value.
    pub support_edge: Option<f64>,
}

/// Zero field on every step of `spec`.
pub fn build_grid(spec: &GridSpec, p: f64, kind: FieldKind) -> Result<SpacetimeField> {
    SpacetimeField::zeros(spec, 1, p, kind)
}

impl SpacetimeField {
    /// Zero field keeping every `stride`-th time level.
    pub fn zeros(spec: &GridSpec, stride: usize, p: f64, kind: FieldKind) -> Result<Self> {
        spec.validate()?;
        if stride == 0 || !spec.steps().is_multiple_of(stride) {
            return Err(Error::config(
                "store_every",
                format!("stride {stride} does not divide {} steps", spec.steps()),
            ));
        }
        let levels = spec.steps() / stride + 1;
        Ok(SpacetimeField {
            spec: *spec,
            stride,
            values: Array2::zeros((levels, spec.nodes())),
            p,
            kind,
            support_edge: None,
        })
    }

    pub fn levels(&self) -> usize {
        self.values.nrows()
    }

    pub fn nodes(&self) -> usize {
        self.values.ncols()
    }

    /// Time between consecutive stored levels.
    pub fn level_dt(&self) -> f64 {
        self.spec.dt() * self.stride as f64
    }

    pub fn level_time(&self, i: usize) -> f64 {
        self.spec.t_start + (i * self.stride) as f64 * self.spec.dt()
    }

    pub fn t_final(&self) -> f64 {
        self.level_time(self.levels() - 1)
    }

    pub fn chi_row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// φ on every node of level `i`, with the axis value recovered from the
    /// first three off-axis nodes.
    pub fn phi_row(&self, i: usize) -> Vec<f64> {
        phi_from_chi(self.values.row(i).as_slice().expect("row-major"), self.spec.h)
    }

    pub fn is_boundary_node(&self, j: usize) -> bool {
        j == 0 || j + 1 == self.nodes()
    }

    /// Whether the support hint guarantees a vanishing field at (t, r).
    pub fn known_zero(&self, t: f64, r: f64) -> bool {
        self.support_edge.is_some_and(|edge| t - r < edge)
    }

    pub fn contains(&self, t: f64, r: f64) -> bool {
        let eps_t = SNAP_TOL * self.level_dt();
        let eps_r = SNAP_TOL * self.spec.h;
        t >= self.spec.t_start - eps_t
            && t <= self.t_final() + eps_t
            && r >= -eps_r
            && r <= self.spec.r_max + eps_r
    }

    /// (φ, ∂ₜφ) at stored level `i`. The time derivative is centered in the
    /// interior and one-sided second order at the first and last level.
    pub fn time_slice(&self, i: usize) -> TimeSlice {
        let levels = self.levels();
        let dt = self.level_dt();
        let row = |k: usize| self.values.row(k).to_vec();
        let chi_t: Vec<f64> = if levels == 1 {
            vec![0.0; self.nodes()]
        } else if levels == 2 {
            let (a, b) = (row(0), row(1));
            a.iter().zip(&b).map(|(x, y)| (y - x) / dt).collect()
        } else if i == 0 {
            let (a, b, c) = (row(0), row(1), row(2));
            (0..a.len())
                .map(|j| (-3.0 * a[j] + 4.0 * b[j] - c[j]) / (2.0 * dt))
                .collect()
        } else if i == levels - 1 {
            let (a, b, c) = (row(i - 2), row(i - 1), row(i));
            (0..a.len())
                .map(|j| (a[j] - 4.0 * b[j] + 3.0 * c[j]) / (2.0 * dt))
                .collect()
        } else {
            let (a, c) = (row(i - 1), row(i + 1));
            a.iter().zip(&c).map(|(x, y)| (y - x) / (2.0 * dt)).collect()
        };
        TimeSlice {
            t: self.level_time(i),
            r_nodes: self.spec.radii(),
            phi: self.phi_row(i),
            phi_t: phi_from_chi(&chi_t, self.spec.h),
        }
    }
}

/// φ = χ/r off the axis; on the axis the quadratic extrapolation
/// 3φ₁ − 3φ₂ + φ₃, which equals ∂ᵣχ(0) for any cubic χ with χ(0) = 0.
pub fn phi_from_chi(chi: &[f64], h: f64) -> Vec<f64> {
    let mut phi: Vec<f64> = chi
        .iter()
        .enumerate()
        .map(|(j, c)| if j == 0 { 0.0 } else { c / (j as f64 * h) })
        .collect();
    phi[0] = match phi.len() {
        0 | 1 => 0.0,
        2 => phi[1],
        3 => 2.0 * phi[1] - phi[2],
        _ => 3.0 * phi[1] - 3.0 * phi[2] + phi[3],
    };
    phi
}

/// Shape of the initial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    #[default]
    Bump,
}

/// Compactly supported initial data φ₀ = A·b(r), φ₁ = B·b(r) with the bump
/// b(r) = (1 − (r/ρ)²)^m on r < ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub amplitude: f64,
    pub support_radius: f64,
    pub smoothness_exponent: u32,
    #[serde(default)]
    pub velocity_amplitude: f64,
    #[serde(default)]
    pub profile: ProfileKind,
}

impl InitialDataSpec {
    pub fn bump(amplitude: f64, support_radius: f64, smoothness_exponent: u32) -> Self {
        InitialDataSpec {
            amplitude,
            support_radius,
            smoothness_exponent,
            velocity_amplitude: 0.0,
            profile: ProfileKind::Bump,
        }
    }

    pub fn with_velocity(mut self, velocity_amplitude: f64) -> Self {
        self.velocity_amplitude = velocity_amplitude;
        self
    }

    pub fn validate(&self, p: f64) -> Result<()> {
        if !(self.support_radius > 0.0) {
            return Err(Error::config(
                "data.support_radius",
                "support radius must be positive",
            ));
        }
        if self.smoothness_exponent < 3 {
            return Err(Error::config(
                "data.smoothness_exponent",
                "exponent m must be at least 3 for C² data",
            ));
        }
        if !self.amplitude.is_finite() || !self.velocity_amplitude.is_finite() {
            return Err(Error::config("data.amplitude", "amplitudes must be finite"));
        }
        let alpha = alpha_p(p)?;
        if self.support_radius >= alpha {
            return Err(Error::SupportViolation(format!(
                "support radius {} is not below alpha_p = {alpha} for p = {p}",
                self.support_radius
            )));
        }
        Ok(())
    }

    /// b(r) = (1 − (r/ρ)²)^m inside the support, zero outside.
    pub fn shape(&self, r: f64) -> f64 {
        let x = r / self.support_radius;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - x * x).powi(self.smoothness_exponent as i32)
        }
    }

    /// b'(r).
    pub fn shape_derivative(&self, r: f64) -> f64 {
        let rho = self.support_radius;
        let x = r / rho;
        if x.abs() >= 1.0 {
            0.0
        } else {
            let m = self.smoothness_exponent as i32;
            -2.0 * m as f64 * x / rho * (1.0 - x * x).powi(m - 1)
        }
    }

    pub fn phi0(&self, r: f64) -> f64 {
        self.amplitude * self.shape(r)
    }

    pub fn phi1(&self, r: f64) -> f64 {
        self.velocity_amplitude * self.shape(r)
    }
}

/// (φ, ∂ₜφ) along a constant-t line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub t: f64,
    pub r_nodes: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
}

impl TimeSlice {
    pub fn zeros(t: f64, spec: &GridSpec) -> Self {
        let n = spec.nodes();
        TimeSlice {
            t,
            r_nodes: spec.radii(),
            phi: vec![0.0; n],
            phi_t: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.r_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_nodes.is_empty()
    }

    /// Node spacing, checking that the nodes are uniform and start at 0.
    pub fn spacing(&self) -> Result<f64> {
        let n = self.r_nodes.len();
        if self.phi.len() != n || self.phi_t.len() != n {
            return Err(Error::Format("time slice arrays differ in length".into()));
        }
        if n < 2 {
            return Err(Error::Degenerate("time slice needs at least two nodes".into()));
        }
        let h = self.r_nodes[1] - self.r_nodes[0];
        let uniform = self.r_nodes[0].abs() <= SNAP_TOL * h
            && self
                .r_nodes
                .iter()
                .enumerate()
                .all(|(j, r)| (r - j as f64 * h).abs() <= 1e-9 * h.max(r.abs()));
        if !(h > 0.0) || !uniform {
            return Err(Error::Format(
                "time slice nodes must be uniformly spaced from r = 0".into(),
            ));
        }
        Ok(h)
    }

    /// Reduced variables (χ, ∂ₜχ) = r·(φ, ∂ₜφ).
    pub fn reduced(&self) -> (Vec<f64>, Vec<f64>) {
        let chi = self.r_nodes.iter().zip(&self.phi).map(|(r, f)| r * f).collect();
        let chi_t = self
            .r_nodes
            .iter()
            .zip(&self.phi_t)
            .map(|(r, f)| r * f)
            .collect();
        (chi, chi_t)
    }
}

/// Samples (φ₀, φ₁) on the radial nodes of `spec` at t = 1.
pub fn sample_initial_data(data: &InitialDataSpec, spec: &GridSpec, p: f64) -> Result<TimeSlice> {
    data.validate(p)?;
    spec.validate()?;
    if spec.t_start != 1.0 {
        return Err(Error::config(
            "grid.t_start",
            format!("forward data lives at t = 1, got {}", spec.t_start),
        ));
    }
    let r_nodes = spec.radii();
    let phi = r_nodes.iter().map(|&r| data.phi0(r)).collect();
    let phi_t = r_nodes.iter().map(|&r| data.phi1(r)).collect();
    Ok(TimeSlice {
        t: spec.t_start,
        r_nodes,
        phi,
        phi_t,
    })
}
