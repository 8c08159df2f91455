//! The power-adapted conformal map between the forward and backward light
//! cones, its factor Ω, the transformed nonlinearity coefficient c and the
//! push/pull of solutions between the two cones.
//!
//! Null coordinates are u = t + r and v = t − r. The map acts componentwise,
//! (u, v) ↦ (−u^{−(p−2)}, −v^{−(p−2)}), so it sends {0 ≤ r < t} onto
//! {0 ≤ r < −t}. Quantities on the backward cone carry a `t` suffix in the
//! code (`ut`, `vt`) for "tilde".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldKind, GridSpec, SpacetimeField, TimeSlice};

pub const DEFAULT_DIAGONAL_THRESHOLD: f64 = 1e-4;

/// Largest admissible support radius of the data at t = 1,
/// α_p = 1 − 2^{−1/(p−2)}.
pub fn alpha_p(p: f64) -> Result<f64> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::domain(f64::NAN, f64::NAN, format!("alpha_p needs p > 2, got {p}")));
    }
    Ok(-(-std::f64::consts::LN_2 / (p - 2.0)).exp_m1())
}

/// (y^e − x^e)/(y − x) for 0 ≤ x ≤ y, with a four-term series in
/// δ = (y − x)/x when δ < `eps`.
pub fn power_divided_difference(x: f64, y: f64, e: f64, eps: f64) -> f64 {
    if e == 1.0 {
        return 1.0;
    }
    if e == 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return y.powf(e - 1.0);
    }
    let delta = (y - x) / x;
    let scale = x.powf(e - 1.0);
    if delta < eps {
        let series =
            1.0 + (e - 1.0) / 2.0 * delta * (1.0 + (e - 2.0) / 3.0 * delta * (1.0 + (e - 3.0) / 4.0 * delta));
        scale * e * series
    } else {
        scale * (e * delta.ln_1p()).exp_m1() / delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalChart {
    pub p: f64,
    pub diagonal_threshold: f64,
}

impl ConformalChart {
    pub fn new(p: f64) -> Result<Self> {
        Self::with_threshold(p, DEFAULT_DIAGONAL_THRESHOLD)
    }

    pub fn with_threshold(p: f64, diagonal_threshold: f64) -> Result<Self> {
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::config("p", format!("conformal map needs p > 2, got {p}")));
        }
        if !(diagonal_threshold > 0.0 && diagonal_threshold <= 1e-2) {
            return Err(Error::config(
                "diagonal_threshold",
                format!("{diagonal_threshold} outside (0, 1e-2]"),
            ));
        }
        Ok(ConformalChart {
            p,
            diagonal_threshold,
        })
    }

    /// Exponent p − 2 of the null-coordinate map.
    fn k(&self) -> f64 {
        self.p - 2.0
    }

    fn dd(&self, x: f64, y: f64, e: f64) -> f64 {
        power_divided_difference(x, y, e, self.diagonal_threshold)
    }

    fn check_forward(u: f64, v: f64) -> Result<()> {
        if !(u > 0.0) || !(v > 0.0) {
            return Err(Error::domain(
                0.5 * (u + v),
                0.5 * (u - v),
                format!("null coordinates must be positive, got u = {u}, v = {v}"),
            ));
        }
        if v > u {
            return Err(Error::Orientation { u, v });
        }
        Ok(())
    }

    fn check_backward(ut: f64, vt: f64) -> Result<()> {
        if !(ut < 0.0) || !(vt < 0.0) {
            return Err(Error::domain(
                0.5 * (ut + vt),
                0.5 * (ut - vt),
                format!("null coordinates must be negative, got u = {ut}, v = {vt}"),
            ));
        }
        if vt > ut {
            return Err(Error::Orientation { u: ut, v: vt });
        }
        Ok(())
    }

    /// (u, v) ↦ (−u^{−(p−2)}, −v^{−(p−2)}).
    pub fn map_forward(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        Self::check_forward(u, v)?;
        Ok((-u.powf(-self.k()), -v.powf(-self.k())))
    }

    /// (ũ, ṽ) ↦ ((−ũ)^{−1/(p−2)}, (−ṽ)^{−1/(p−2)}).
    pub fn map_inverse(&self, ut: f64, vt: f64) -> Result<(f64, f64)> {
        Self::check_backward(ut, vt)?;
        let a = -1.0 / self.k();
        Ok(((-ut).powf(a), (-vt).powf(a)))
    }

    /// Image of (t, r) in K⁺, as (t̃, r̃). The radius is computed without
    /// cancellation so it stays accurate next to the axis.
    pub fn map_point(&self, t: f64, r: f64) -> Result<(f64, f64)> {
        let (u, v) = (t + r, t - r);
        let (ut, vt) = self.map_forward(u, v)?;
        let rt = -r * self.dd(v, u, -self.k());
        Ok((0.5 * (ut + vt), rt))
    }

    /// Preimage of (t̃, r̃) in K⁻, as (t, r).
    pub fn inverse_point(&self, tt: f64, rt: f64) -> Result<(f64, f64)> {
        let (ut, vt) = (tt + rt, tt - rt);
        let (u, v) = self.map_inverse(ut, vt)?;
        let r = -rt * self.dd(-ut, -vt, -1.0 / self.k());
        Ok((0.5 * (u + v), r))
    }

    /// r̃ ∘ Φ at null coordinates (u, v).
    pub fn mapped_radius(&self, u: f64, v: f64) -> Result<f64> {
        Self::check_forward(u, v)?;
        Ok(-0.5 * (u - v) * self.dd(v, u, -self.k()))
    }

    /// Conformal factor Ω = [1 − (v/u)^{p−2}] / (2r v^{p−2}), the positive
    /// function with r·Ω = r̃ ∘ Φ. On the axis Ω = (p − 2)/t^{p−1}.
    pub fn omega(&self, u: f64, v: f64) -> Result<f64> {
        Self::check_forward(u, v)?;
        let k = self.k();
        Ok(self.dd(v, u, k) / (u * v).powf(k))
    }

    pub fn omega_tr(&self, t: f64, r: f64) -> Result<f64> {
        self.omega(t + r, t - r)
    }

    /// Φ_*(Ω u v) = (ũ − ṽ)/((−ṽ)^{1/(p−2)} − (−ũ)^{1/(p−2)}), taking the
    /// boundary value at ũ = 0 for points with ũ ≥ 0.
    fn weight(&self, ut: f64, vt: f64) -> f64 {
        let x = (-ut).max(0.0);
        let y = -vt;
        1.0 / self.dd(x, y, 1.0 / self.k())
    }

    /// Coefficient c = (p − 2)^{−2} [Φ_*(Ω u v)]^{p−1} of the transformed
    /// nonlinearity on K⁻.
    pub fn conformal_coefficient(&self, ut: f64, vt: f64) -> Result<f64> {
        Self::check_backward(ut, vt)?;
        Ok(self.coefficient_extended(ut, vt))
    }

    /// The coefficient continued past the cone ũ = 0 by its boundary value,
    /// constant along ũ. This region cannot influence K⁻.
    pub fn coefficient_extended(&self, ut: f64, vt: f64) -> f64 {
        let k = self.k();
        self.weight(ut, vt).powf(self.p - 1.0) / (k * k)
    }

    pub fn coefficient_tr(&self, tt: f64, rt: f64) -> f64 {
        self.coefficient_extended(tt + rt, tt - rt)
    }

    /// ∂ₜc on K⁻, from ∂ₜ Φ_*(Ωuv) = w²/(p−2) · [(−ṽ)^{a−1} − (−ũ)^{a−1}]/(ũ − ṽ)
    /// with a = 1/(p − 2).
    pub fn coefficient_dt(&self, ut: f64, vt: f64) -> Result<f64> {
        Self::check_backward(ut, vt)?;
        let k = self.k();
        let a = 1.0 / k;
        let w = self.weight(ut, vt);
        let w_t = a * w * w * self.dd(-ut, -vt, a - 1.0);
        Ok((self.p - 1.0) / (k * k) * w.powf(self.p - 2.0) * w_t)
    }

    pub fn coefficient_dt_tr(&self, tt: f64, rt: f64) -> Result<f64> {
        self.coefficient_dt(tt + rt, tt - rt)
    }

    /// Relative discrepancy between the analytic metric factor
    /// dũ/du · dṽ/dv = (p−2)²(uv)^{−(p−1)} and a central finite-difference
    /// Jacobian of `map_forward` with relative step 1e-5.
    pub fn metric_conformal_factor_check(&self, u: f64, v: f64) -> Result<f64> {
        Self::check_forward(u, v)?;
        let k = self.k();
        let analytic = k * k * (u * v).powf(-(self.p - 1.0));
        let du = 1e-5 * u;
        let dv = 1e-5 * v;
        let ut = |x: f64| -x.powf(-k);
        let d_ut = (ut(u + du) - ut(u - du)) / (2.0 * du);
        let d_vt = (ut(v + dv) - ut(v - dv)) / (2.0 * dv);
        Ok(((d_ut * d_vt) - analytic).abs() / analytic)
    }

    /// Centered-difference □Ω = r⁻¹ (∂ₜ² − ∂ᵣ²)(rΩ) at (t, r) with radial
    /// step `h` and time step `lambda·h`, for r > h and t − r > h. With
    /// `lambda` = 1 the stencil is exact on f(u) + g(v) and only roundoff
    /// remains.
    pub fn box_omega(&self, t: f64, r: f64, h: f64, lambda: f64) -> Result<f64> {
        if !(r > h) || !(t - r > h) || !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::domain(t, r, "stencil leaves the forward cone"));
        }
        let f = |t: f64, r: f64| -> Result<f64> { Ok(r * self.omega_tr(t, r)?) };
        let dt = lambda * h;
        let centre = f(t, r)?;
        let tt = (f(t + dt, r)? - 2.0 * centre + f(t - dt, r)?) / (dt * dt);
        let rr = (f(t, r + h)? - 2.0 * centre + f(t, r - h)?) / (h * h);
        Ok((tt - rr) / r)
    }

    /// Image of the line t = 1 at radius r, i.e. Φ(1 + r, 1 − r) in (t̃, r̃).
    pub fn image_of_initial_line(&self, r: f64) -> Result<(f64, f64)> {
        self.map_point(1.0, r)
    }

    /// ṽ below which the push-forward of data supported in r < ρ at t = 1
    /// vanishes.
    pub fn transformed_support_edge(&self, support: f64) -> f64 {
        -(1.0 - support).powf(-self.k())
    }
}

/// Curve H = Φ(I) for I = {1} × [0, ρ] and the interval J = [0, j_outer] on
/// {t̃ = −1} cut out by the outgoing null ray through the endpoint of H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characteristics {
    pub support: f64,
    pub h_endpoint: (f64, f64),
    pub j_outer: f64,
}

pub fn curve_h_and_interval_j(chart: &ConformalChart, support: f64) -> Result<Characteristics> {
    let alpha = alpha_p(chart.p)?;
    if !(support >= 0.0) || support >= alpha {
        return Err(Error::SupportViolation(format!(
            "support {support} must lie in [0, alpha_p = {alpha})"
        )));
    }
    let h_endpoint = chart.image_of_initial_line(support)?;
    let vt_edge = chart.transformed_support_edge(support);
    Ok(Characteristics {
        support,
        h_endpoint,
        j_outer: -1.0 - vt_edge,
    })
}

impl Characteristics {
    /// H sampled at `n + 1` equispaced parameters r ∈ [0, ρ].
    pub fn sample_h(&self, chart: &ConformalChart, n: usize) -> Result<Vec<(f64, f64)>> {
        (0..=n)
            .map(|i| {
                let r = self.support * i as f64 / n.max(1) as f64;
                chart.image_of_initial_line(r)
            })
            .collect()
    }
}

/// Regions of Figure-1 geometry. `FutureOfI` and `FutureOfH` carry the data
/// support radius ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Region {
    /// K⁺ = {0 ≤ r < t}.
    ForwardCone,
    /// K⁻ = {0 ≤ r < −t}.
    BackwardCone,
    /// K = K⁻ ∩ {−1 ≤ t < 0}.
    Strip,
    /// Causal future of {1} × [0, ρ].
    FutureOfI { support: f64 },
    /// Φ of the causal future of {1} × [0, ρ].
    FutureOfH { support: f64 },
}

impl Region {
    pub fn contains(&self, chart: &ConformalChart, t: f64, r: f64) -> bool {
        if r < 0.0 {
            return false;
        }
        match *self {
            Region::ForwardCone => r < t,
            Region::BackwardCone => r < -t,
            Region::Strip => r < -t && t >= -1.0,
            Region::FutureOfI { support } => t >= 1.0 && r <= support + (t - 1.0),
            Region::FutureOfH { support } => {
                if r >= -t {
                    return false;
                }
                let (ut, vt) = (t + r, t - r);
                if vt < chart.transformed_support_edge(support) {
                    return false;
                }
                let a = -1.0 / chart.k();
                // preimage has u + v ≥ 2, i.e. t ≥ 1
                (-ut).powf(a) + (-vt).powf(a) >= 2.0
            }
        }
    }
}

/// ψ = Ω⁻¹ φ ∘ Φ⁻¹ at (t̃, r̃), from a forward field.
pub fn push_value(source: &SpacetimeField, chart: &ConformalChart, tt: f64, rt: f64) -> Result<f64> {
    let vt = tt - rt;
    if let Some(edge) = source.support_edge {
        if edge > 0.0 && vt < -edge.powf(-chart.k()) {
            return Ok(0.0);
        }
    }
    let ut = tt + rt;
    if !(ut < 0.0) || !(vt < 0.0) {
        return Err(Error::Coverage { t: tt, r: rt });
    }
    let (t, r) = chart.inverse_point(tt, rt)?;
    if !source.contains(t, r) {
        return Err(Error::Coverage { t: tt, r: rt });
    }
    let phi = source.interpolate(t, r)?;
    Ok(phi / chart.omega_tr(t, r)?)
}

/// φ = Ω · ψ ∘ Φ at (t, r), from a transformed field.
pub fn pull_value(source: &SpacetimeField, chart: &ConformalChart, t: f64, r: f64) -> Result<f64> {
    let v = t - r;
    if let Some(edge) = source.support_edge {
        if edge < 0.0 && v > 0.0 && v < (-edge).powf(-1.0 / chart.k()) {
            return Ok(0.0);
        }
    }
    if !(v > 0.0) || r < 0.0 {
        return Err(Error::Coverage { t, r });
    }
    let (tt, rt) = chart.map_point(t, r)?;
    if !source.contains(tt, rt) {
        return Err(Error::Coverage { t, r });
    }
    let psi = source.interpolate(tt, rt)?;
    Ok(chart.omega_tr(t, r)? * psi)
}

fn resample(
    target: &GridSpec,
    stride: usize,
    kind: FieldKind,
    p: f64,
    mut value: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<SpacetimeField> {
    let mut out = SpacetimeField::zeros(target, stride, p, kind)?;
    for i in 0..out.levels() {
        let t = out.level_time(i);
        for j in 0..out.nodes() {
            let r = target.radius(j);
            out.values[[i, j]] = r * value(t, r)?;
        }
    }
    Ok(out)
}

/// Push-forward ψ := Φ_*(Ω⁻¹ φ) of a forward field onto a regular grid in
/// the backward cone.
pub fn push_solution(
    source: &SpacetimeField,
    chart: &ConformalChart,
    target: &GridSpec,
    stride: usize,
) -> Result<SpacetimeField> {
    if source.kind != FieldKind::Forward {
        return Err(Error::config("source", "push-forward needs a forward field"));
    }
    let mut out = resample(target, stride, FieldKind::Transformed, chart.p, |t, r| {
        push_value(source, chart, t, r)
    })?;
    out.support_edge = source
        .support_edge
        .filter(|e| *e > 0.0)
        .map(|e| -e.powf(-chart.k()));
    Ok(out)
}

/// Pull-back φ := Ω Φ*ψ of a transformed field onto a regular grid in the
/// forward cone.
pub fn pull_solution(
    source: &SpacetimeField,
    chart: &ConformalChart,
    target: &GridSpec,
    stride: usize,
) -> Result<SpacetimeField> {
    if source.kind != FieldKind::Transformed {
        return Err(Error::config("source", "pull-back needs a transformed field"));
    }
    let mut out = resample(target, stride, FieldKind::Forward, chart.p, |t, r| {
        pull_value(source, chart, t, r)
    })?;
    out.support_edge = source
        .support_edge
        .filter(|e| *e < 0.0)
        .map(|e| (-e).powf(-1.0 / chart.k()));
    Ok(out)
}

/// Pushed-forward data (ψ, ∂ₜψ) on the first time level of `target`. The
/// time derivative is a fourth-order one-sided difference of pushed values
/// at steps of one grid time step.
pub fn push_initial_slice(
    source: &SpacetimeField,
    chart: &ConformalChart,
    target: &GridSpec,
) -> Result<TimeSlice> {
    if source.kind != FieldKind::Forward {
        return Err(Error::config("source", "push-forward needs a forward field"));
    }
    let t0 = target.t_start;
    let dt = target.dt();
    let radii = target.radii();
    let mut levels = Vec::with_capacity(5);
    for k in 0..5 {
        let t = t0 + k as f64 * dt;
        let row = radii
            .iter()
            .map(|&r| push_value(source, chart, t, r))
            .collect::<Result<Vec<f64>>>()?;
        levels.push(row);
    }
    let phi_t = (0..radii.len())
        .map(|j| {
            let f = |k: usize| levels[k][j];
            (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * dt)
        })
        .collect();
    Ok(TimeSlice {
        t: t0,
        r_nodes: radii,
        phi: levels.swap_remove(0),
        phi_t,
    })
}

/// Largest |ψ − Φ_*(Ω⁻¹φ)| over stored nodes of a transformed field lying in
/// K⁻ with t + r ≤ `u_cut`.
pub fn dual_discrepancy(
    forward: &SpacetimeField,
    transformed: &SpacetimeField,
    chart: &ConformalChart,
    u_cut: f64,
) -> Result<f64> {
    let h = transformed.spec.h;
    let mut worst: f64 = 0.0;
    for i in 0..transformed.levels() {
        let t = transformed.level_time(i);
        let psi = transformed.phi_row(i);
        for (j, value) in psi.iter().enumerate() {
            let r = j as f64 * h;
            if t + r > u_cut || r >= -t {
                break;
            }
            let pushed = push_value(forward, chart, t, r)?;
            worst = worst.max((value - pushed).abs());
        }
    }
    Ok(worst)
}
