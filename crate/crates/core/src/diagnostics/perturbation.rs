use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{evaluation_mask, interior_index, GridDensity, GridField, DENSITY_FLOOR, MASK_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationNorms {
    /// `sup |φ|` on the mask of `m_*`, `φ = −∇·g + g·∇ln m_*`.
    pub phi_sup: f64,
    /// `sup |g|` over the grid, `g = F(·, m_t) − F(·, m_*)`.
    pub g_sup: f64,
}

/// Splits the drift as `F(·, m_t) = F(·, m_*) + g_t` and evaluates the
/// perturbation potential `φ_t = −∇·g_t + g_t·∇ln m_*` by centred differences.
pub fn perturbation_potential(
    m_t: &GridDensity,
    m_star: &GridDensity,
    drift: impl Fn(&GridDensity) -> Result<GridField>,
) -> Result<PerturbationNorms> {
    m_t.require_same_grid(m_star)?;
    let (dim, n, dx) = (m_t.dim(), m_t.n(), m_t.dx());
    let (a, b) = (drift(m_t)?, drift(m_star)?);
    if a.dim != dim || a.n != n || b.dim != dim || b.n != n {
        return Err(Error::Shape("drift functional returned a field on another grid".into()));
    }
    let g: Vec<Vec<f64>> = a
        .components
        .iter()
        .zip(&b.components)
        .map(|(p, q)| p.iter().zip(q).map(|(x, y)| x - y).collect())
        .collect();
    let g_sup = (0..m_t.len())
        .map(|k| g.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let strides: &[usize] = if dim == 1 { &[1] } else { &[n, 1] };
    let mut phi_sup: f64 = 0.0;
    let mut used = 0;
    for k in evaluation_mask(m_star, MASK_FRACTION) {
        if interior_index(dim, n, k).is_none() {
            continue;
        }
        let mut phi = 0.0;
        let mut ok = true;
        for (axis, &st) in strides.iter().enumerate() {
            let (p, q) = (m_star.values()[k + st], m_star.values()[k - st]);
            if p < DENSITY_FLOOR || q < DENSITY_FLOOR {
                ok = false;
                break;
            }
            let score = (p.ln() - q.ln()) / (2.0 * dx);
            phi += -(g[axis][k + st] - g[axis][k - st]) / (2.0 * dx) + g[axis][k] * score;
        }
        if ok {
            phi_sup = phi_sup.max(phi.abs());
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(PerturbationNorms { phi_sup, g_sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ConvolutionPlan;

    #[test]
    fn smooth_convolution_respects_tv_bound() {
        // W(z) = −exp(−z²/2), so −∇W(z) = −z exp(−z²/2), sup |∇W| = e^{−1/2}
        let (n, l) = (256, 8.0);
        let dx = 2.0 * l / n as f64;
        let plan = ConvolutionPlan::new(1, n, dx, 1, |z, out| out[0] = -z[0] * (-0.5 * z[0] * z[0]).exp()).unwrap();
        let drift = |m: &GridDensity| -> Result<GridField> {
            let mut f = GridField::zeros(1, n);
            f.components = plan.apply(m.values());
            for (k, v) in f.components[0].iter_mut().enumerate() {
                *v -= m.coordinate(k);
            }
            Ok(f)
        };
        let m_star = GridDensity::gaussian(1, n, l, &[0.0], 1.0).unwrap();
        let same = perturbation_potential(&m_star, &m_star, drift).unwrap();
        assert_eq!((same.phi_sup, same.g_sup), (0.0, 0.0));
        let m_t = GridDensity::normalized_from_fn(1, n, l, |x| (-0.5 * x[0] * x[0]).exp() * (1.0 + 0.05 * x[0].sin())).unwrap();
        let r = perturbation_potential(&m_t, &m_star, drift).unwrap();
        let tv = m_t.l1_distance(&m_star).unwrap();
        assert!(r.g_sup > 0.0 && r.g_sup <= (-0.5f64).exp() * tv * (1.0 + 1e-6));
        assert!(r.phi_sup > 0.0);
    }
}
