//! Explicit leapfrog evolution of the reduced field χ = r·φ.
//!
//! Both the original equation and its conformal transform reduce to
//!
//! ```text
//! ∂ₜ²χ − ∂ᵣ²χ = −c(t, r) · r · |χ/r|^{p−1} (χ/r)
//! ```
//!
//! with c ≡ 1 on the forward cone. The scheme is centered second order in
//! time and space, with χ = 0 on the axis and at `r_max`, and a Taylor
//! start for the first step.

use serde::{Deserialize, Serialize};

use crate::conformal::{alpha_p, ConformalChart};
use crate::error::{Error, Result};
use crate::grid::{
    sample_initial_data, FieldKind, GridSpec, InitialDataSpec, SpacetimeField, TimeSlice,
};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_LAMBDA: f64 = 0.8;

/// |χ| above this aborts the run.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct EvolutionReport {
    pub field: SpacetimeField,
    pub steps: usize,
    pub max_abs_phi: f64,
    pub cfl_used: f64,
    pub nonlinearity_evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Keep every `store_every`-th time level in the returned field.
    pub store_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { store_every: 1 }
    }
}

/// One time level handed to an observer: χ and ∂ₜχ on every node.
/// ∂ₜχ is exact at the first level, centered in the interior and one-sided
/// second order at the last level.
#[derive(Debug)]
pub struct LevelView<'a> {
    pub step: usize,
    pub t: f64,
    pub h: f64,
    pub chi: &'a [f64],
    pub chi_t: &'a [f64],
}

impl LevelView<'_> {
    pub fn time_slice(&self) -> TimeSlice {
        TimeSlice {
            t: self.t,
            r_nodes: (0..self.chi.len()).map(|j| j as f64 * self.h).collect(),
            phi: crate::grid::phi_from_chi(self.chi, self.h),
            phi_t: crate::grid::phi_from_chi(self.chi_t, self.h),
        }
    }
}

/// |φ|^{p−1} φ.
#[inline]
pub fn odd_power(phi: f64, p: f64) -> f64 {
    if p == 3.0 {
        phi * phi * phi
    } else if p == 4.0 {
        let a = phi.abs();
        a * a * a * phi
    } else if p == 5.0 {
        let s = phi * phi;
        s * s * phi
    } else {
        phi.abs().powf(p - 1.0) * phi
    }
}

enum Coefficient<'a> {
    Unit,
    Chart(&'a ConformalChart),
}

impl Coefficient<'_> {
    fn fill(&self, t: f64, h: f64, row: &mut [f64]) {
        match self {
            Coefficient::Unit => row.fill(1.0),
            Coefficient::Chart(chart) => {
                for (j, c) in row.iter_mut().enumerate() {
                    *c = chart.coefficient_tr(t, j as f64 * h);
                }
            }
        }
    }
}

struct Stepper<'a> {
    spec: GridSpec,
    p: f64,
    coefficient: Coefficient<'a>,
    coeff_row: Vec<f64>,
    source: Vec<f64>,
    max_abs_phi: f64,
    evaluations: u64,
}

impl Stepper<'_> {
    /// Fills `self.source` with c·r·|φ|^{p−1}φ at time `t`.
    fn nonlinearity(&mut self, t: f64, chi: &[f64]) {
        let h = self.spec.h;
        self.coefficient.fill(t, h, &mut self.coeff_row);
        let n = chi.len();
        self.source[0] = 0.0;
        self.source[n - 1] = 0.0;
        for j in 1..n - 1 {
            let r = j as f64 * h;
            let phi = chi[j] / r;
            self.max_abs_phi = self.max_abs_phi.max(phi.abs());
            self.source[j] = self.coeff_row[j] * r * odd_power(phi, self.p);
        }
        self.evaluations += (n - 2) as u64;
    }

    fn check(&self, t: f64, row: &[f64]) -> Result<()> {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() || v.abs() > BLOWUP_THRESHOLD {
                return Err(Error::BlowUp {
                    t,
                    r: j as f64 * self.spec.h,
                    value: *v,
                });
            }
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn evolve_core(
    chi0: Vec<f64>,
    chi_t0: Vec<f64>,
    spec: &GridSpec,
    p: f64,
    kind: FieldKind,
    coefficient: Coefficient<'_>,
    options: &EvolveOptions,
    mut observer: Option<&mut dyn FnMut(&LevelView)>,
) -> Result<EvolutionReport> {
    spec.validate()?;
    if spec.lambda > 1.0 {
        return Err(Error::config("grid.lambda", "Courant ratio above 1"));
    }
    let n = spec.nodes();
    if n < 3 {
        return Err(Error::config("grid.r_max", "need at least three radial nodes"));
    }
    let mut field = SpacetimeField::zeros(spec, options.store_every, p, kind)?;
    let steps = spec.steps();
    let dt = spec.dt();
    let lam2 = spec.lambda * spec.lambda;
    let dt2 = dt * dt;

    let mut stepper = Stepper {
        spec: *spec,
        p,
        coefficient,
        coeff_row: vec![0.0; n],
        source: vec![0.0; n],
        max_abs_phi: 0.0,
        evaluations: 0,
    };

    let mut prev = chi0;
    prev[0] = 0.0;
    prev[n - 1] = 0.0;
    stepper.check(spec.t_start, &prev)?;
    field.values.row_mut(0).assign(&ndarray::ArrayView1::from(&prev[..]));

    if let Some(obs) = observer.as_mut() {
        obs(&LevelView {
            step: 0,
            t: spec.t_start,
            h: spec.h,
            chi: &prev,
            chi_t: &chi_t0,
        });
    }

    // Taylor start
    stepper.nonlinearity(spec.t_start, &prev);
    let mut cur = vec![0.0; n];
    for j in 1..n - 1 {
        let lap = prev[j + 1] - 2.0 * prev[j] + prev[j - 1];
        cur[j] = prev[j] + dt * chi_t0[j] + 0.5 * lam2 * lap - 0.5 * dt2 * stepper.source[j];
    }
    stepper.check(spec.time(1), &cur)?;
    if options.store_every == 1 {
        field.values.row_mut(1).assign(&ndarray::ArrayView1::from(&cur[..]));
    }

    let mut next = vec![0.0; n];
    let mut chi_t = vec![0.0; n];
    for step in 1..steps {
        let t = spec.time(step);
        stepper.nonlinearity(t, &cur);
        for j in 1..n - 1 {
            let lap = cur[j + 1] - 2.0 * cur[j] + cur[j - 1];
            next[j] = 2.0 * cur[j] - prev[j] + lam2 * lap - dt2 * stepper.source[j];
        }
        stepper.check(spec.time(step + 1), &next)?;

        if let Some(obs) = observer.as_mut() {
            for j in 0..n {
                chi_t[j] = (next[j] - prev[j]) / (2.0 * dt);
            }
            obs(&LevelView {
                step,
                t,
                h: spec.h,
                chi: &cur,
                chi_t: &chi_t,
            });
        }

        if (step + 1) % options.store_every == 0 {
            let row = (step + 1) / options.store_every;
            field.values.row_mut(row).assign(&ndarray::ArrayView1::from(&next[..]));
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }

    if let Some(obs) = observer.as_mut() {
        // after the loop `cur` is the last level, `prev` the one before;
        // `next` holds the level before that
        if steps >= 2 {
            for j in 0..n {
                chi_t[j] = (next[j] - 4.0 * prev[j] + 3.0 * cur[j]) / (2.0 * dt);
            }
        } else {
            for j in 0..n {
                chi_t[j] = (cur[j] - prev[j]) / dt;
            }
        }
        obs(&LevelView {
            step: steps,
            t: spec.t_end,
            h: spec.h,
            chi: &cur,
            chi_t: &chi_t,
        });
    }

    Ok(EvolutionReport {
        field,
        steps,
        max_abs_phi: stepper.max_abs_phi,
        cfl_used: spec.lambda,
        nonlinearity_evaluations: stepper.evaluations,
    })
}

fn check_slice_on_grid(slice: &TimeSlice, spec: &GridSpec) -> Result<()> {
    let h = slice.spacing()?;
    if slice.len() != spec.nodes() || (h - spec.h).abs() > 1e-12 * spec.h {
        return Err(Error::config("slice", "slice nodes do not match the grid"));
    }
    if (slice.t - spec.t_start).abs() > 1e-12 * spec.t_start.abs().max(1.0) {
        return Err(Error::config("slice", "slice time differs from grid start"));
    }
    Ok(())
}

/// Evolves the original equation from bump data at t = 1.
pub fn evolve_forward(data: &InitialDataSpec, spec: &GridSpec, p: f64) -> Result<EvolutionReport> {
    evolve_forward_with(data, spec, p, &EvolveOptions::default(), None)
}

pub fn evolve_forward_with(
    data: &InitialDataSpec,
    spec: &GridSpec,
    p: f64,
    options: &EvolveOptions,
    observer: Option<&mut dyn FnMut(&LevelView)>,
) -> Result<EvolutionReport> {
    if !(p > 2.0) {
        return Err(Error::config("p", format!("power must exceed 2, got {p}")));
    }
    let slice = sample_initial_data(data, spec, p)?;
    let horizon = data.support_radius + (spec.t_end - spec.t_start);
    if spec.r_max < horizon - 1e-12 {
        return Err(Error::config(
            "grid.r_max",
            format!("r_max {} below support + horizon {horizon}", spec.r_max),
        ));
    }
    let mut report = evolve_slice(&slice, spec, p, options, observer)?;
    report.field.support_edge = Some(spec.t_start - data.support_radius);
    Ok(report)
}

/// Evolves the original equation from an arbitrary slice at `spec.t_start`.
pub fn evolve_slice(
    slice: &TimeSlice,
    spec: &GridSpec,
    p: f64,
    options: &EvolveOptions,
    observer: Option<&mut dyn FnMut(&LevelView)>,
) -> Result<EvolutionReport> {
    check_slice_on_grid(slice, spec)?;
    let (chi, chi_t) = slice.reduced();
    evolve_core(
        chi,
        chi_t,
        spec,
        p,
        FieldKind::Forward,
        Coefficient::Unit,
        options,
        observer,
    )
}

/// Evolves □ψ + c ψ|ψ|^{p−1} = 0 on the backward cone from a slice at
/// t̃ = `spec.t_start` (normally −1), with c from the chart.
pub fn evolve_transformed(
    slice: &TimeSlice,
    spec: &GridSpec,
    p: f64,
    chart: &ConformalChart,
) -> Result<EvolutionReport> {
    evolve_transformed_with(slice, spec, p, chart, &EvolveOptions::default(), None)
}

pub fn evolve_transformed_with(
    slice: &TimeSlice,
    spec: &GridSpec,
    p: f64,
    chart: &ConformalChart,
    options: &EvolveOptions,
    observer: Option<&mut dyn FnMut(&LevelView)>,
) -> Result<EvolutionReport> {
    if !(3.0..5.0).contains(&p) {
        return Err(Error::config("p", format!("transformed evolution needs 3 <= p < 5, got {p}")));
    }
    if chart.p != p {
        return Err(Error::config("p", "chart power differs from evolution power"));
    }
    if spec.t_end >= 0.0 {
        return Err(Error::domain(
            spec.t_end,
            0.0,
            "transformed evolution must stop before t = 0",
        ));
    }
    check_slice_on_grid(slice, spec)?;
    let mut last_nonzero = None;
    for (j, r) in slice.r_nodes.iter().enumerate() {
        if slice.phi[j] != 0.0 || slice.phi_t[j] != 0.0 {
            if *r >= 1.0 {
                return Err(Error::SupportViolation(format!(
                    "transformed data nonzero at r = {r}, outside [0, 1)"
                )));
            }
            last_nonzero = Some(j);
        }
    }
    let (chi, chi_t) = slice.reduced();
    let mut report = evolve_core(
        chi,
        chi_t,
        spec,
        p,
        FieldKind::Transformed,
        Coefficient::Chart(chart),
        options,
        observer,
    )?;
    report.field.support_edge = Some(match last_nonzero {
        Some(j) => spec.t_start - spec.radius(j + 1),
        None => f64::INFINITY,
    });
    Ok(report)
}

/// Closed-form solution of the free radial wave equation with bump data at
/// t = 1.
///
/// With F = ĝ + K, where ĝ is the odd extension of r·φ₀ and K an even
/// antiderivative of the odd extension of r·φ₁, the d'Alembert formula for
/// χ = r·φ gives φ(t, r) = [F(τ + r) − F(τ − r)]/(2r), τ = t − 1. This is
/// the mean of F' over [τ − r, τ + r]; F' is a polynomial on |x| < ρ and
/// vanishes outside, so piecewise Gauss–Legendre evaluates it exactly.
#[derive(Debug, Clone)]
pub struct LinearOracle {
    data: InitialDataSpec,
    rule: GaussLegendre,
}

impl LinearOracle {
    pub fn new(data: &InitialDataSpec) -> Self {
        let m = data.smoothness_exponent as usize;
        LinearOracle {
            data: *data,
            rule: GaussLegendre::new(m + 2),
        }
    }

    /// F'(x) = (x φ₀)'(x) + x φ₁(x), extended evenly and oddly respectively.
    fn density(&self, x: f64) -> f64 {
        let d = &self.data;
        let b = d.shape(x);
        let db = d.shape_derivative(x);
        d.amplitude * (b + x * db) + d.velocity_amplitude * x * b
    }

    pub fn value(&self, t: f64, r: f64) -> Result<f64> {
        if !(t >= 1.0) || !(r >= 0.0) {
            return Err(Error::domain(t, r, "linear solution is defined for t >= 1, r >= 0"));
        }
        let tau = t - 1.0;
        if r == 0.0 {
            return Ok(self.density(tau));
        }
        let rho = self.data.support_radius;
        let (a, b) = (tau - r, tau + r);
        let lo = a.max(-rho);
        let hi = b.min(rho);
        if lo >= hi {
            return Ok(0.0);
        }
        // split at the origin as well: b + x b' is smooth there, but keeping
        // the breakpoints symmetric costs nothing
        let mut total = 0.0;
        let mut cuts = vec![lo];
        if lo < 0.0 && hi > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(hi);
        for w in cuts.windows(2) {
            total += self.rule.integrate(w[0], w[1], |x| self.density(x));
        }
        Ok(total / (2.0 * r))
    }
}

pub fn exact_linear_solution(data: &InitialDataSpec, t: f64, r: f64) -> Result<f64> {
    LinearOracle::new(data).value(t, r)
}

/// Result of a three-level convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConvergenceOutcome {
    Converged { orders: Vec<f64>, order: f64 },
    Inconclusive { errors: Vec<f64>, reason: String },
}

impl ConvergenceOutcome {
    pub fn order(&self) -> Option<f64> {
        match self {
            ConvergenceOutcome::Converged { order, .. } => Some(*order),
            ConvergenceOutcome::Inconclusive { .. } => None,
        }
    }
}

/// Observed orders log₂(eᵢ/eᵢ₊₁) from errors at h, h/2, h/4, ...
pub fn convergence_order(errors: &[f64]) -> Result<ConvergenceOutcome> {
    if errors.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need three resolutions, got {}",
            errors.len()
        )));
    }
    if errors.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::Degenerate("errors must be finite and non-negative".into()));
    }
    if errors.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Degenerate(
            "consecutive errors are identical; runs do not differ".into(),
        ));
    }
    if errors.windows(2).any(|w| w[1] > w[0]) || errors.contains(&0.0) {
        return Ok(ConvergenceOutcome::Inconclusive {
            errors: errors.to_vec(),
            reason: "errors are not monotonically decreasing".into(),
        });
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order = *orders.last().expect("at least two ratios");
    Ok(ConvergenceOutcome::Converged { orders, order })
}

/// Self-convergence from three fields at h, h/2, h/4: the max-norm
/// differences of successive pairs, sampled on the coarse grid nodes.
pub fn self_convergence_order(
    coarse: &SpacetimeField,
    medium: &SpacetimeField,
    fine: &SpacetimeField,
) -> Result<ConvergenceOutcome> {
    let diff = |a: &SpacetimeField, b: &SpacetimeField| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..coarse.levels() {
            let t = coarse.level_time(i);
            for j in 0..coarse.nodes() {
                let r = coarse.spec.radius(j);
                let d = a.interpolate_chi(t, r)? - b.interpolate_chi(t, r)?;
                worst = worst.max(d.abs());
            }
        }
        Ok(worst)
    };
    let d1 = diff(coarse, medium)?;
    let d2 = diff(medium, fine)?;
    if d1 == 0.0 && d2 == 0.0 {
        return Err(Error::Degenerate("runs are identical".into()));
    }
    if !(d2 < d1) || d2 == 0.0 {
        return Ok(ConvergenceOutcome::Inconclusive {
            errors: vec![d1, d2],
            reason: "differences do not shrink".into(),
        });
    }
    let order = (d1 / d2).log2();
    Ok(ConvergenceOutcome::Converged {
        orders: vec![order],
        order,
    })
}

/// Smallest admissible outer radius for a forward run.
pub fn causal_r_max(data: &InitialDataSpec, t_start: f64, t_end: f64) -> f64 {
    data.support_radius + (t_end - t_start)
}

/// Checks the forward-run preconditions that do not need a grid.
pub fn check_forward_power(p: f64, data: &InitialDataSpec) -> Result<()> {
    let alpha = alpha_p(p)?;
    if data.support_radius >= alpha {
        return Err(Error::SupportViolation(format!(
            "support {} not below alpha_p = {alpha}",
            data.support_radius
        )));
    }
    Ok(())
}
