//! Energies, the light-cone flux and divergence identity of the transformed
//! problem, and the decay and boundedness monitors.
//!
//! Energies are per steradian: the 4π of the spatial integral is dropped.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalChart;
use crate::error::{Error, Result};
use crate::grid::{FieldKind, SpacetimeField, TimeSlice};
use crate::quadrature::{simpson, trapezoid};
use crate::solver::LevelView;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub kinetic: f64,
    pub gradient: f64,
    pub potential: f64,
    pub total: f64,
}

impl EnergyRecord {
    pub fn zero(t: f64) -> Self {
        EnergyRecord {
            t,
            kinetic: 0.0,
            gradient: 0.0,
            potential: 0.0,
            total: 0.0,
        }
    }
}

/// Fourth-order ∂ᵣ of an even function of r sampled from r = 0: centered
/// differences with mirror values across the axis, one-sided at the outer
/// end.
pub fn radial_derivative_even(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    if n < 5 {
        // too short for the wide stencil; second order is all we can do
        return (0..n)
            .map(|j| match j {
                0 => 0.0,
                _ if j + 1 == n => (values[j] - values[j - 1]) / h,
                _ => (values[j + 1] - values[j - 1]) / (2.0 * h),
            })
            .collect();
    }
    let at = |j: isize| values[j.unsigned_abs()];
    (0..n)
        .map(|j| {
            let j = j as isize;
            if j + 2 < n as isize {
                (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * h)
            } else {
                let f = |k: isize| values[(j - k) as usize];
                (25.0 * f(0) - 48.0 * f(1) + 36.0 * f(2) - 16.0 * f(3) + 3.0 * f(4)) / (12.0 * h)
            }
        })
        .collect()
}

#[inline]
fn potential_density(phi: f64, p: f64) -> f64 {
    phi.abs().powf(p + 1.0) / (p + 1.0)
}

fn weighted_energy(slice: &TimeSlice, p: f64, coefficient: impl Fn(f64) -> f64) -> Result<EnergyRecord> {
    if slice.len() < 3 {
        return Err(Error::Degenerate(format!(
            "energy quadrature needs at least 3 nodes, got {}",
            slice.len()
        )));
    }
    let h = slice.spacing()?;
    let phi_r = radial_derivative_even(&slice.phi, h);
    let n = slice.len();
    let mut kin = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let mut pot = Vec::with_capacity(n);
    for j in 0..n {
        let r = slice.r_nodes[j];
        let r2 = r * r;
        kin.push(0.5 * r2 * slice.phi_t[j] * slice.phi_t[j]);
        grad.push(0.5 * r2 * phi_r[j] * phi_r[j]);
        let phi = slice.phi[j];
        pot.push(if phi == 0.0 {
            0.0
        } else {
            r2 * coefficient(r) * potential_density(phi, p)
        });
    }
    let kinetic = simpson(&kin, h);
    let gradient = simpson(&grad, h);
    let potential = simpson(&pot, h);
    Ok(EnergyRecord {
        t: slice.t,
        kinetic,
        gradient,
        potential,
        total: kinetic + gradient + potential,
    })
}

/// ∫ (½φₜ² + ½φᵣ² + |φ|^{p+1}/(p+1)) r² dr by composite Simpson.
pub fn conserved_energy(slice: &TimeSlice, p: f64) -> Result<EnergyRecord> {
    weighted_energy(slice, p, |_| 1.0)
}

/// The same functional with the potential weighted by c(t, r), for a slice
/// of ψ at −1 ≤ t < 0.
pub fn pseudo_energy(slice: &TimeSlice, chart: &ConformalChart, p: f64) -> Result<EnergyRecord> {
    if !(slice.t >= -1.0 && slice.t < 0.0) {
        return Err(Error::domain(slice.t, 0.0, "pseudo-energy needs -1 <= t < 0"));
    }
    let t = slice.t;
    weighted_energy(slice, p, |r| chart.coefficient_tr(t, r))
}

/// Energy of every level seen by the solver, kept every `every` levels.
#[derive(Debug)]
pub struct EnergyMonitor {
    pub p: f64,
    pub every: usize,
    pub chart: Option<ConformalChart>,
    pub records: Vec<EnergyRecord>,
    pub error: Option<Error>,
}

impl EnergyMonitor {
    pub fn new(p: f64, every: usize) -> Self {
        EnergyMonitor {
            p,
            every: every.max(1),
            chart: None,
            records: Vec::new(),
            error: None,
        }
    }

    pub fn pseudo(chart: ConformalChart, every: usize) -> Self {
        EnergyMonitor {
            chart: Some(chart),
            ..Self::new(chart.p, every)
        }
    }

    pub fn observe(&mut self, view: &LevelView) {
        if !view.step.is_multiple_of(self.every) || self.error.is_some() {
            return;
        }
        let slice = view.time_slice();
        let rec = match &self.chart {
            None => conserved_energy(&slice, self.p),
            Some(chart) => pseudo_energy(&slice, chart, self.p),
        };
        match rec {
            Ok(r) => self.records.push(r),
            Err(e) => self.error = Some(e),
        }
    }

    /// max |E(t) − E(t₀)| / E(t₀).
    pub fn relative_drift(&self) -> Result<f64> {
        let first = self
            .records
            .first()
            .ok_or_else(|| Error::Degenerate("no energy records".into()))?;
        if first.total == 0.0 {
            return Ok(0.0);
        }
        Ok(self
            .records
            .iter()
            .map(|r| (r.total - first.total).abs())
            .fold(0.0, f64::max)
            / first.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub t0: f64,
    pub flux: f64,
    pub e0: f64,
    pub ratio: f64,
    /// (1/(p+1)) ∫ r² c |ψ|^{p+1} ds, the part bounded on its own.
    pub potential: f64,
}

/// Flux of the energy current through the ingoing null segment
/// s ↦ (s, t₀ − s), −1 ≤ s ≤ t₀, measured against the pseudo-energy of the
/// first level. `ds` is the trapezoid step along the segment; `None` uses
/// half the grid spacing.
pub fn lightcone_flux(
    field: &SpacetimeField,
    t0: f64,
    chart: &ConformalChart,
    p: f64,
    ds: Option<f64>,
) -> Result<FluxRecord> {
    if !(t0 > -1.0 && t0 < 0.0) {
        return Err(Error::domain(t0, 0.0, "flux segment needs -1 < t0 < 0"));
    }
    let e0 = pseudo_energy(&field.time_slice(0), chart, p)?.total;
    let (flux, potential) = flux_integrals(field, t0, chart, p, ds, -1.0)?;
    Ok(FluxRecord {
        t0,
        flux,
        e0,
        ratio: if e0 > 0.0 { flux / e0 } else { 0.0 },
        potential,
    })
}

fn flux_integrals(
    field: &SpacetimeField,
    t0: f64,
    chart: &ConformalChart,
    p: f64,
    ds: Option<f64>,
    s_start: f64,
) -> Result<(f64, f64)> {
    let target = ds.unwrap_or(0.5 * field.spec.h);
    if !(target > 0.0) {
        return Err(Error::config("ds", "flux step must be positive"));
    }
    let length = t0 - s_start;
    let n = (length / target).ceil().max(1.0) as usize;
    let step = length / n as f64;
    if !field.contains(s_start, t0 - s_start) || !field.contains(t0, 0.0) {
        return Err(Error::Coverage { t: t0, r: t0 - s_start });
    }
    let mut total = Vec::with_capacity(n + 1);
    let mut pot = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = if k == n { t0 } else { s_start + k as f64 * step };
        let r = (t0 - s).max(0.0);
        let (_, chi_t, chi_r) = field.interpolate_chi_derivatives(s, r)?;
        let psi = field.interpolate(s, r)?;
        // r(ψₜ − ψᵣ) = χₜ − χᵣ + ψ
        let null = chi_t - chi_r + psi;
        let v = if psi == 0.0 {
            0.0
        } else {
            r * r * chart.coefficient_tr(s, r) * potential_density(psi, p)
        };
        total.push(0.5 * null * null + v);
        pot.push(v);
    }
    Ok((trapezoid(&total, step), trapezoid(&pot, step)))
}

/// Outcome of the discrete divergence identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResidual {
    /// max |Div 𝓔 − r² ∂ₜc |ψ|^{p+1}/(p+1)| over the checked nodes.
    pub max_norm: f64,
    /// max |Div 𝓔| over the same nodes.
    pub divergence: f64,
    pub points: usize,
}

/// Compares the centered-difference divergence of
/// 𝓔 = r²[½ψₜ² + ½ψᵣ² + c|ψ|^{p+1}/(p+1)] ∂ₜ − r² ψₜψᵣ ∂ᵣ with
/// r² (∂ₜc) |ψ|^{p+1}/(p+1) on interior nodes of K⁻ with t + r ≤ `u_cut`.
pub fn divergence_identity_residual(
    field: &SpacetimeField,
    chart: &ConformalChart,
    p: f64,
    u_cut: f64,
) -> Result<DivergenceResidual> {
    let levels = field.levels();
    let nodes = field.nodes();
    let h = field.spec.h;
    let dt = field.level_dt();
    let chi = &field.values;
    if levels < 5 || nodes < 5 {
        return Err(Error::Degenerate("divergence check needs 5 levels and nodes".into()));
    }
    // in χ: r²ψₜ² = χₜ², r²ψᵣ² = (χᵣ − χ/r)², r²ψₜψᵣ = χₜ(χᵣ − χ/r)
    let components = |i: usize, j: usize| -> (f64, f64) {
        let t = field.level_time(i);
        let r = j as f64 * h;
        let c_t = (chi[[i + 1, j]] - chi[[i - 1, j]]) / (2.0 * dt);
        let c_r = (chi[[i, j + 1]] - chi[[i, j - 1]]) / (2.0 * h);
        let x = chi[[i, j]];
        let grad = c_r - x / r;
        let psi = x / r;
        let pot = if psi == 0.0 {
            0.0
        } else {
            r * r * chart.coefficient_tr(t, r) * potential_density(psi, p)
        };
        (0.5 * c_t * c_t + 0.5 * grad * grad + pot, -c_t * grad)
    };
    let mut max_norm: f64 = 0.0;
    let mut divergence: f64 = 0.0;
    let mut points = 0;
    for i in 2..levels - 2 {
        let t = field.level_time(i);
        for j in 2..nodes - 2 {
            let r = j as f64 * h;
            if t + r > u_cut || r >= -t {
                break;
            }
            let e_t = (components(i + 1, j).0 - components(i - 1, j).0) / (2.0 * dt);
            let e_r = (components(i, j + 1).1 - components(i, j - 1).1) / (2.0 * h);
            let psi = chi[[i, j]] / r;
            let rhs = if psi == 0.0 {
                0.0
            } else {
                r * r * chart.coefficient_dt_tr(t, r)? * potential_density(psi, p)
            };
            let div = e_t + e_r;
            max_norm = max_norm.max((div - rhs).abs());
            divergence = divergence.max(div.abs());
            points += 1;
        }
    }
    Ok(DivergenceResidual {
        max_norm,
        divergence,
        points,
    })
}

/// B(t) = max over nodes r ≤ t of |φ|(1 + t + r)(1 + t − r)^{p−2}.
pub fn decay_weighted_max(t: f64, phi: &[f64], h: f64, p: f64) -> f64 {
    let mut best: f64 = 0.0;
    for (j, f) in phi.iter().enumerate() {
        let r = j as f64 * h;
        if r > t {
            break;
        }
        if *f != 0.0 {
            best = best.max(f.abs() * (1.0 + t + r) * (1.0 + t - r).powf(p - 2.0));
        }
    }
    best
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub t: Vec<f64>,
    pub b: Vec<f64>,
    pub running_max: Vec<f64>,
}

impl DecaySeries {
    pub fn push(&mut self, t: f64, b: f64) {
        let prev = self.running_max.last().copied().unwrap_or(0.0);
        self.t.push(t);
        self.b.push(b);
        self.running_max.push(prev.max(b));
    }

    /// max B over [t_hi/2, t_hi] divided by max B over [t_hi/10, t_hi/2].
    pub fn plateau_ratio(&self, t_hi: f64) -> Result<f64> {
        let late = window_max(&self.t, &self.b, 0.5 * t_hi, t_hi)?;
        let early = window_max(&self.t, &self.b, 0.1 * t_hi, 0.5 * t_hi)?;
        if early == 0.0 {
            return Ok(if late == 0.0 { 1.0 } else { f64::INFINITY });
        }
        Ok(late / early)
    }
}

/// Maximum of `values` over samples with lo ≤ t ≤ hi.
pub fn window_max(t: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let mut best: Option<f64> = None;
    for (ti, v) in t.iter().zip(values) {
        if *ti >= lo - 1e-12 && *ti <= hi + 1e-12 {
            best = Some(best.map_or(*v, |b: f64| b.max(*v)));
        }
    }
    best.ok_or_else(|| Error::domain(lo, 0.0, format!("no samples in window [{lo}, {hi}]")))
}

/// B(t) on every stored level of a forward field.
pub fn decay_bound_monitor(field: &SpacetimeField, p: f64) -> Result<DecaySeries> {
    if field.kind != FieldKind::Forward {
        return Err(Error::config("field", "decay monitor needs a forward field"));
    }
    let mut out = DecaySeries::default();
    for i in 0..field.levels() {
        let t = field.level_time(i);
        out.push(t, decay_weighted_max(t, &field.phi_row(i), field.spec.h, p));
    }
    Ok(out)
}

/// Collects B(t) and φ at probe radii while the solver runs.
#[derive(Debug, Clone)]
pub struct ForwardMonitor {
    pub p: f64,
    pub every: usize,
    pub probes: Vec<f64>,
    pub decay: DecaySeries,
    pub probe_t: Vec<f64>,
    pub probe_values: Vec<Vec<f64>>,
}

impl ForwardMonitor {
    pub fn new(p: f64, every: usize, probes: &[f64]) -> Self {
        ForwardMonitor {
            p,
            every: every.max(1),
            probes: probes.to_vec(),
            decay: DecaySeries::default(),
            probe_t: Vec::new(),
            probe_values: vec![Vec::new(); probes.len()],
        }
    }

    pub fn observe(&mut self, view: &LevelView) {
        if !view.step.is_multiple_of(self.every) {
            return;
        }
        let phi = crate::grid::phi_from_chi(view.chi, view.h);
        self.decay
            .push(view.t, decay_weighted_max(view.t, &phi, view.h, self.p));
        self.probe_t.push(view.t);
        for (k, r) in self.probes.iter().enumerate() {
            self.probe_values[k].push(radial_sample(&phi, view.h, *r));
        }
    }

    pub fn probe_series(&self, k: usize) -> ProbeSeries {
        ProbeSeries {
            r_probe: self.probes[k],
            t: self.probe_t.clone(),
            phi: self.probe_values[k].clone(),
        }
    }
}

/// Cubic Lagrange interpolation of nodal values at radius r.
pub fn radial_sample(values: &[f64], h: f64, r: f64) -> f64 {
    let s = (r / h).clamp(0.0, (values.len() - 1) as f64);
    let (start, w) = crate::grid::lagrange_weights(s, values.len());
    w.iter().enumerate().map(|(k, wk)| wk * values[start + k]).sum()
}

/// φ(t) at a fixed radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSeries {
    pub r_probe: f64,
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
}

impl ProbeSeries {
    pub fn from_field(field: &SpacetimeField, r_probe: f64) -> Result<Self> {
        let mut t = Vec::with_capacity(field.levels());
        let mut phi = Vec::with_capacity(field.levels());
        for i in 0..field.levels() {
            let ti = field.level_time(i);
            t.push(ti);
            phi.push(field.interpolate(ti, r_probe)?);
        }
        Ok(ProbeSeries { r_probe, t, phi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub r_probe: f64,
    pub window: (f64, f64),
    pub exponent: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
    pub samples: usize,
    /// φ changed sign in the window and the fit used local maxima of |φ|.
    pub oscillatory: bool,
}

/// Least-squares line through (ln t, ln y). Returns (slope, intercept, rms).
pub fn fit_power_law(t: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::Degenerate("power-law fit needs two or more points".into()));
    }
    let xs: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("fit abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, intercept, rms))
}

/// Fits |φ| ≈ C t^exponent over `window`.
pub fn tail_exponent_fit(series: &ProbeSeries, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(hi > lo && lo >= 1.0) {
        return Err(Error::config("window", format!("need 1 <= t_lo < t_hi, got ({lo}, {hi})")));
    }
    let (first, last) = match (series.t.first(), series.t.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::Degenerate("empty probe series".into())),
    };
    if lo < first - 1e-12 || hi > last + 1e-12 {
        return Err(Error::domain(hi, series.r_probe, format!(
            "window [{lo}, {hi}] outside run [{first}, {last}]"
        )));
    }
    let peak = series.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 10.0 * f64::EPSILON * peak;
    let idx: Vec<usize> = (0..series.t.len())
        .filter(|&i| series.t[i] >= lo - 1e-12 && series.t[i] <= hi + 1e-12)
        .collect();
    if idx.len() < 2 {
        return Err(Error::Degenerate("fewer than two samples in window".into()));
    }
    if peak == 0.0 || idx.iter().any(|&i| series.phi[i].abs() <= floor) {
        return Err(Error::NoiseFloor(format!(
            "|phi| at r = {} drops below {floor:e} inside the window",
            series.r_probe
        )));
    }
    let sign = series.phi[idx[0]].signum();
    let oscillatory = idx.iter().any(|&i| series.phi[i].signum() != sign);
    let (ts, ys): (Vec<f64>, Vec<f64>) = if oscillatory {
        let a: Vec<f64> = idx.iter().map(|&i| series.phi[i].abs()).collect();
        let maxima: Vec<usize> = (1..a.len().saturating_sub(1))
            .filter(|&k| a[k] >= a[k - 1] && a[k] > a[k + 1])
            .collect();
        if maxima.len() < 3 {
            return Err(Error::Oscillation(format!(
                "phi changes sign at r = {} with only {} local maxima of |phi|",
                series.r_probe,
                maxima.len()
            )));
        }
        maxima.iter().map(|&k| (series.t[idx[k]], a[k])).unzip()
    } else {
        idx.iter().map(|&i| (series.t[i], series.phi[i].abs())).unzip()
    };
    let (exponent, intercept, rms_residual) = fit_power_law(&ts, &ys)?;
    Ok(DecayFit {
        r_probe: series.r_probe,
        window,
        exponent,
        amplitude: intercept.exp(),
        rms_residual,
        samples: ts.len(),
        oscillatory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBound {
    pub t: Vec<f64>,
    pub sup: Vec<f64>,
    pub overall: f64,
}

impl UniformBound {
    /// max sup over [lo2, hi2] divided by max sup over [lo1, hi1].
    pub fn window_ratio(&self, early: (f64, f64), late: (f64, f64)) -> Result<f64> {
        let e = window_max(&self.t, &self.sup, early.0, early.1)?;
        let l = window_max(&self.t, &self.sup, late.0, late.1)?;
        if e == 0.0 {
            return Ok(if l == 0.0 { 1.0 } else { f64::INFINITY });
        }
        Ok(l / e)
    }
}

/// sup over r < −t of |ψ(t, r)| for every stored level of a transformed
/// field.
pub fn uniform_bound_report(field: &SpacetimeField) -> Result<UniformBound> {
    if field.kind != FieldKind::Transformed {
        return Err(Error::config("field", "uniform bound needs a transformed field"));
    }
    let h = field.spec.h;
    let mut t = Vec::with_capacity(field.levels());
    let mut sup = Vec::with_capacity(field.levels());
    for i in 0..field.levels() {
        let ti = field.level_time(i);
        let phi = field.phi_row(i);
        let s = phi
            .iter()
            .enumerate()
            .take_while(|(j, _)| (*j as f64) * h < -ti)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        t.push(ti);
        sup.push(s);
    }
    let overall = sup.iter().copied().fold(0.0, f64::max);
    Ok(UniformBound { t, sup, overall })
}

/// Time-indexed diagnostics in long format.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub rows: Vec<(f64, f64, String)>,
}

impl DiagnosticsSeries {
    pub fn push(&mut self, t: f64, value: f64, kind: &str) {
        self.rows.push((t, value, kind.to_string()));
    }

    pub fn extend_energy(&mut self, records: &[EnergyRecord], prefix: &str) {
        for r in records {
            self.push(r.t, r.kinetic, &format!("{prefix}kinetic"));
            self.push(r.t, r.gradient, &format!("{prefix}gradient"));
            self.push(r.t, r.potential, &format!("{prefix}potential"));
            self.push(r.t, r.total, &format!("{prefix}total"));
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,kind\n");
        for (t, v, k) in &self.rows {
            let _ = writeln!(out, "{t},{v},{k}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
