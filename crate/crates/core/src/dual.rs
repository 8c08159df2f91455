//! The dual evolution: a forward run, its push-forward onto the slice
//! t̃ = −1, and the direct evolution of the transformed equation from there.

use serde::{Deserialize, Serialize};

use crate::conformal::{push_initial_slice, ConformalChart};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, InitialDataSpec, SpacetimeField};
use crate::solver::{evolve_forward_with, evolve_transformed, EvolutionReport, EvolveOptions};

/// Settings of the transformed half of a dual run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualSettings {
    pub h: f64,
    pub lambda: f64,
    pub t_end: f64,
    pub r_max: f64,
    /// Comparisons stay on t̃ + r̃ ≤ `u_cut`, away from the cone t̃ + r̃ = 0
    /// where c stops being smooth for p > 3.
    pub u_cut: f64,
}

impl Default for DualSettings {
    fn default() -> Self {
        DualSettings {
            h: 1.0 / 128.0,
            lambda: 0.8,
            t_end: -0.05,
            r_max: 1.5,
            u_cut: -0.1,
        }
    }
}

impl DualSettings {
    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(-1.0, self.t_end, self.r_max, self.h, self.lambda)
    }
}

fn round_up(x: f64, step: f64) -> f64 {
    let q = x / step;
    let k = if (q - q.round()).abs() < 1e-9 { q.round() } else { q.ceil() };
    k * step
}

/// Forward time needed to push the first levels of the transformed grid,
/// and, when `compare` is set, every node with t̃ + r̃ ≤ u_cut.
pub fn forward_horizon(
    chart: &ConformalChart,
    support: f64,
    settings: &DualSettings,
    compare: bool,
) -> Result<f64> {
    let k = chart.p - 2.0;
    let edge = chart.transformed_support_edge(support);
    let grid = settings.grid()?;
    // the slice stencil reaches four steps past t̃ = −1; its nonzero part has
    // ṽ ≥ edge, hence ũ = 2t̃ − ṽ ≤ 2t̃ − edge
    let ut_slice = 2.0 * (grid.t_start + 4.0 * grid.dt()) - edge;
    let mut ut_max = ut_slice;
    if compare {
        ut_max = ut_max.max(settings.u_cut);
    }
    if !(ut_max < 0.0) {
        return Err(Error::config(
            "transform.u_cut",
            "compared region reaches the cone t + r = 0",
        ));
    }
    Ok((-ut_max).powf(-1.0 / k))
}

/// Forward grid from t = 1 to at least `horizon`, with the causal outer
/// radius rounded up to the spacing.
pub fn forward_grid(data: &InitialDataSpec, h: f64, lambda: f64, horizon: f64) -> Result<GridSpec> {
    let t_end = 1.0 + round_up((horizon - 1.0).max(lambda * h), lambda * h);
    let r_max = round_up(data.support_radius + (t_end - 1.0), h);
    GridSpec::new(1.0, t_end, r_max, h, lambda)
}

#[derive(Debug, Clone)]
pub struct DualRun {
    pub chart: ConformalChart,
    pub forward: SpacetimeField,
    pub transformed: EvolutionReport,
}

/// Forward run at spacing `h_forward`, push-forward of its data to
/// t̃ = −1 and transformed evolution on `settings.grid()`.
pub fn run_dual(
    data: &InitialDataSpec,
    p: f64,
    h_forward: f64,
    settings: &DualSettings,
    compare: bool,
) -> Result<DualRun> {
    let chart = ConformalChart::new(p)?;
    let horizon = forward_horizon(&chart, data.support_radius, settings, compare)?;
    let fspec = forward_grid(data, h_forward, settings.lambda, horizon)?;
    let forward = evolve_forward_with(data, &fspec, p, &EvolveOptions::default(), None)?.field;
    let transformed = evolve_from_forward(&forward, &chart, settings)?;
    Ok(DualRun {
        chart,
        forward,
        transformed,
    })
}

pub fn evolve_from_forward(
    forward: &SpacetimeField,
    chart: &ConformalChart,
    settings: &DualSettings,
) -> Result<EvolutionReport> {
    let tspec = settings.grid()?;
    let slice = push_initial_slice(forward, chart, &tspec)?;
    evolve_transformed(&slice, &tspec, chart.p, chart)
}
