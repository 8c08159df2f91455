use super::{SpacetimeField, SNAP_TOL};
use crate::error::{Error, Result};

/// Stencil start index and Lagrange weights for a query at fractional index
/// `s` on `n` equispaced points. Cubic when four points are available,
/// lower degree otherwise.
pub fn lagrange_weights(s: f64, n: usize) -> (usize, Vec<f64>) {
    let s = snap(s);
    let width = n.min(4);
    let start = if width < 4 {
        0
    } else {
        let i = s.floor() as isize - 1;
        i.clamp(0, n as isize - 4) as usize
    };
    let x: Vec<f64> = (0..width).map(|k| (start + k) as f64).collect();
    let weights = (0..width)
        .map(|k| {
            let mut w = 1.0;
            for m in 0..width {
                if m != k {
                    w *= (s - x[m]) / (x[k] - x[m]);
                }
            }
            w
        })
        .collect();
    (start, weights)
}

/// Weights of the derivative d/ds of the same Lagrange interpolant.
pub fn lagrange_derivative_weights(s: f64, n: usize) -> (usize, Vec<f64>) {
    let s = snap(s);
    let (start, _) = lagrange_weights(s, n);
    let width = n.min(4);
    let x: Vec<f64> = (0..width).map(|k| (start + k) as f64).collect();
    let weights = (0..width)
        .map(|k| {
            let mut total = 0.0;
            for m in 0..width {
                if m == k {
                    continue;
                }
                let mut term = 1.0 / (x[k] - x[m]);
                for q in 0..width {
                    if q != k && q != m {
                        term *= (s - x[q]) / (x[k] - x[q]);
                    }
                }
                total += term;
            }
            total
        })
        .collect();
    (start, weights)
}

fn snap(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() < SNAP_TOL {
        r
    } else {
        s
    }
}

impl SpacetimeField {
    fn check_domain(&self, t: f64, r: f64) -> Result<()> {
        if !t.is_finite() || !r.is_finite() || !self.contains(t, r) {
            return Err(Error::domain(
                t,
                r,
                format!(
                    "query outside grid [{}, {}] x [0, {}]",
                    self.spec.t_start,
                    self.t_final(),
                    self.spec.r_max
                ),
            ));
        }
        Ok(())
    }

    fn time_weights(&self, t: f64) -> (usize, Vec<f64>) {
        let s = ((t - self.spec.t_start) / self.level_dt()).clamp(0.0, (self.levels() - 1) as f64);
        lagrange_weights(s, self.levels())
    }

    /// χ at node `j` interpolated in time.
    fn chi_at_node(&self, tw: &(usize, Vec<f64>), j: usize) -> f64 {
        let (start, w) = tw;
        w.iter()
            .enumerate()
            .map(|(k, wk)| wk * self.values[[start + k, j]])
            .sum()
    }

    /// Bicubic interpolation of χ.
    pub fn interpolate_chi(&self, t: f64, r: f64) -> Result<f64> {
        self.check_domain(t, r)?;
        let tw = self.time_weights(t);
        let s = (r / self.spec.h).clamp(0.0, (self.nodes() - 1) as f64);
        let (rs, rw) = lagrange_weights(s, self.nodes());
        Ok(rw
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * self.chi_at_node(&tw, rs + k))
            .sum())
    }

    /// χ, ∂ₜχ and ∂ᵣχ from the bicubic interpolant.
    pub fn interpolate_chi_derivatives(&self, t: f64, r: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(t, r)?;
        let st = ((t - self.spec.t_start) / self.level_dt()).clamp(0.0, (self.levels() - 1) as f64);
        let sr = (r / self.spec.h).clamp(0.0, (self.nodes() - 1) as f64);
        let tw = lagrange_weights(st, self.levels());
        let (ts, tdw) = lagrange_derivative_weights(st, self.levels());
        let (rs, rw) = lagrange_weights(sr, self.nodes());
        let (_, rdw) = lagrange_derivative_weights(sr, self.nodes());
        let mut value = 0.0;
        let mut d_t = 0.0;
        let mut d_r = 0.0;
        for (k, (wk, dwk)) in rw.iter().zip(&rdw).enumerate() {
            let j = rs + k;
            let node = self.chi_at_node(&tw, j);
            let node_t: f64 = tdw
                .iter()
                .enumerate()
                .map(|(l, w)| w * self.values[[ts + l, j]])
                .sum();
            value += wk * node;
            d_r += dwk * node;
            d_t += wk * node_t;
        }
        Ok((value, d_t / self.level_dt(), d_r / self.spec.h))
    }

    /// φ(t, r). Off the axis this is interpolated χ divided by r; within two
    /// cells of the axis φ is extrapolated from the nodes at h, 2h, 3h, which
    /// amounts to a one-sided cubic Taylor fit of χ through χ(0) = 0.
    pub fn interpolate(&self, t: f64, r: f64) -> Result<f64> {
        self.check_domain(t, r)?;
        let h = self.spec.h;
        if r >= 2.0 * h || self.nodes() < 3 {
            if r == 0.0 {
                return Ok(0.0);
            }
            return Ok(self.interpolate_chi(t, r)? / r);
        }
        let tw = self.time_weights(t);
        let nodes = if self.nodes() >= 4 { 3 } else { 2 };
        let phis: Vec<f64> = (1..=nodes)
            .map(|j| self.chi_at_node(&tw, j) / (j as f64 * h))
            .collect();
        // φ_j sits at fractional index j, stencil starts at index 1
        let s = r / h - 1.0;
        let (_, w) = lagrange_weights(s, phis.len());
        Ok(w.iter().zip(&phis).map(|(a, b)| a * b).sum())
    }
}
