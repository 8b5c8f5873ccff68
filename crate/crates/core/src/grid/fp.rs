use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDensity, GridField};

/// Face flux discretisation for `J = −σ²∇m + b m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    /// Centred differences and arithmetic face averages.
    Central,
    /// Exponentially fitted (Scharfetter–Gummel) flux: central at low Péclet
    /// number, upwind at high.
    #[default]
    UpwindHybrid,
}

/// Largest admissible step: `0.4·min(dx²/(2σ²d), dx/max|b|)`.
pub fn cfl_bound(dx: f64, sigma: f64, dim: usize, max_drift: f64) -> f64 {
    let diffusive = if sigma > 0.0 {
        dx * dx / (2.0 * sigma * sigma * dim as f64)
    } else {
        f64::INFINITY
    };
    let advective = if max_drift > 0.0 { dx / max_drift } else { f64::INFINITY };
    0.4 * diffusive.min(advective)
}

/// Negative mass beyond this is reported as an instability.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// `B(z) = z/(eᶻ − 1)`.
fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

#[inline]
fn face_flux(scheme: FluxScheme, d2: f64, dx: f64, b: f64, left: f64, right: f64) -> f64 {
    match scheme {
        FluxScheme::Central => -d2 * (right - left) / dx + 0.5 * b * (left + right),
        FluxScheme::UpwindHybrid => {
            if d2 == 0.0 {
                if b > 0.0 {
                    b * left
                } else {
                    b * right
                }
            } else {
                let z = b * dx / d2;
                d2 / dx * (bernoulli(-z) * left - bernoulli(z) * right)
            }
        }
    }
}

/// Reusable buffers for repeated steps on one grid.
#[derive(Debug, Clone, Default)]
pub struct FpWorkspace {
    update: Vec<f64>,
}

/// One explicit finite-volume step of `∂ₜm = ∇·(σ²∇m − b m)` with zero-flux
/// boundary faces; `drift` holds `b` at cell centres.
pub fn fp_step(m: &GridDensity, drift: &GridField, sigma: f64, dt: f64, scheme: FluxScheme) -> Result<GridDensity> {
    let mut out = m.clone();
    fp_step_in_place(&mut out, drift, sigma, dt, scheme, &mut FpWorkspace::default())?;
    Ok(out)
}

pub fn fp_step_in_place(
    m: &mut GridDensity,
    drift: &GridField,
    sigma: f64,
    dt: f64,
    scheme: FluxScheme,
    ws: &mut FpWorkspace,
) -> Result<()> {
    let (dim, n) = (m.dim(), m.n());
    if drift.dim != dim || drift.n != n {
        return Err(Error::Shape(format!(
            "drift field is {}-D with n = {}, density is {}-D with n = {}",
            drift.dim, drift.n, dim, n
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    let dx = m.dx();
    let bound = cfl_bound(dx, sigma, dim, drift.max_norm());
    if dt > bound {
        return Err(Error::Cfl { dt, bound });
    }
    let d2 = sigma * sigma;
    let cells = m.len();
    ws.update.clear();
    ws.update.resize(cells, 0.0);
    let values = m.values();
    let stride = |axis: usize| if dim == 1 || axis == 1 { 1 } else { n };
    for axis in 0..dim {
        let st = stride(axis);
        let b = &drift.components[axis];
        for k in 0..cells {
            let i = if st == 1 { k % n } else { k / n };
            if i + 1 == n {
                continue;
            }
            let r = k + st;
            let f = face_flux(scheme, d2, dx, 0.5 * (b[k] + b[r]), values[k], values[r]);
            ws.update[k] -= f;
            ws.update[r] += f;
        }
    }
    let ratio = dt / dx;
    let mut min = f64::INFINITY;
    for (v, u) in m.values_mut().iter_mut().zip(&ws.update) {
        *v += ratio * u;
        min = min.min(*v);
    }
    if min < -NEGATIVITY_TOLERANCE {
        return Err(Error::Instability { min, dt, bound });
    }
    m.set_t(m.t() + dt);
    Ok(())
}

/// Drift field `b(x)` sampled at the cell centres of `m`.
pub fn sample_drift(m: &GridDensity, b: impl Fn(&[f64], &mut [f64])) -> GridField {
    let dim = m.dim();
    let mut field = GridField::zeros(dim, m.n());
    let mut out = [0.0; 2];
    for k in 0..m.len() {
        let x = m.point(k);
        b(&x[..dim], &mut out[..dim]);
        for c in 0..dim {
            field.components[c][k] = out[c];
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_flow_spreads_gaussian() {
        let (v, t_end) = (0.5, 0.5);
        let mut m = GridDensity::gaussian(1, 256, 8.0, &[0.0], v).unwrap();
        let zero = GridField::zeros(1, 256);
        let dt = 0.9 * cfl_bound(m.dx(), 1.0, 1, 0.0);
        let steps = (t_end / dt).ceil() as usize;
        let dt = t_end / steps as f64;
        let mut ws = FpWorkspace::default();
        for _ in 0..steps {
            fp_step_in_place(&mut m, &zero, 1.0, dt, FluxScheme::Central, &mut ws).unwrap();
        }
        let exact = GridDensity::gaussian(1, 256, 8.0, &[0.0], v + 2.0 * t_end).unwrap();
        let dx = m.dx();
        let err = m.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // second order in space, first in time with dt ∝ dx²
        assert!(err < 0.05 * dx * dx, "{err}");
    }

    #[test]
    fn hybrid_flux_keeps_ou_equilibrium() {
        let m = GridDensity::gaussian(1, 256, 8.0, &[0.0], 1.0).unwrap();
        let b = sample_drift(&m, |x, out| out[0] = -x[0]);
        let dt = cfl_bound(m.dx(), 1.0, 1, 8.0);
        let next = fp_step(&m, &b, 1.0, dt, FluxScheme::UpwindHybrid).unwrap();
        assert!(next.l1_distance(&m).unwrap() <= 1e-8);
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let m = GridDensity::gaussian(2, 64, 4.0, &[0.7, -0.2], 0.6).unwrap();
        let b = sample_drift(&m, |x, out| {
            out[0] = -x[0] + 0.8 * x[1];
            out[1] = -x[1] - 0.8 * x[0];
        });
        let dt = cfl_bound(m.dx(), 0.5, 2, b.max_norm());
        for scheme in [FluxScheme::Central, FluxScheme::UpwindHybrid] {
            let next = fp_step(&m, &b, 0.5, dt, scheme).unwrap();
            assert!((next.mass() - m.mass()).abs() <= 1e-12 * m.mass());
            assert!((next.t() - dt).abs() < 1e-15);
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let m = GridDensity::gaussian(1, 64, 4.0, &[0.0], 1.0).unwrap();
        let zero = GridField::zeros(1, 64);
        let bound = cfl_bound(m.dx(), 1.0, 1, 0.0);
        assert!(matches!(
            fp_step(&m, &zero, 1.0, 1.01 * bound, FluxScheme::Central),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn pure_transport_stays_positive_with_upwinding() {
        let mut m = GridDensity::gaussian(1, 128, 4.0, &[-1.0], 0.05).unwrap();
        let b = sample_drift(&m, |_, out| out[0] = 1.0);
        let dt = cfl_bound(m.dx(), 0.0, 1, 1.0);
        let mut ws = FpWorkspace::default();
        for _ in 0..200 {
            fp_step_in_place(&mut m, &b, 0.0, dt, FluxScheme::UpwindHybrid, &mut ws).unwrap();
        }
        assert!(m.min_value() >= 0.0);
        assert!(m.mean(0) > -1.0 + 0.9 * m.t());
    }
}
