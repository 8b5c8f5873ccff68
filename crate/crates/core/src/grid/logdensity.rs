use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ConvolutionPlan, GridDensity};

/// Mass fraction of the reference covered by the evaluation mask.
pub const MASK_FRACTION: f64 = 0.9999;
/// Densities below this are treated as zero.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Indices of the largest cells of `m` holding `fraction` of its mass, in
/// increasing index order.
pub fn evaluation_mask(m: &GridDensity, fraction: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m.len()).filter(|&k| m.values()[k] > DENSITY_FLOOR).collect();
    order.sort_by(|&a, &b| m.values()[b].total_cmp(&m.values()[a]).then(a.cmp(&b)));
    let total: f64 = m.values().iter().sum();
    let mut acc = 0.0;
    let mut mask = Vec::new();
    for k in order {
        if acc >= fraction * total {
            break;
        }
        acc += m.values()[k];
        mask.push(k);
    }
    mask.sort_unstable();
    mask
}

/// Row and column of cell `k` when it is not on the box edge.
pub fn interior_index(dim: usize, n: usize, k: usize) -> Option<[usize; 2]> {
    if dim == 1 {
        (k > 0 && k + 1 < n).then_some([k, 0])
    } else {
        let (i, j) = (k / n, k % n);
        (i > 0 && i + 1 < n && j > 0 && j + 1 < n).then_some([i, j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDensityDiagnostics {
    /// `sup |∇u|` over the mask, `u = −ln(m/reference)`.
    pub grad_sup: f64,
    /// `sup |∇²u|` (spectral norm).
    pub hess_sup: f64,
    /// `sup |x · K^ε ⋆ (m − reference)(x)|`; zero without a plan.
    pub orthogonality_sup: f64,
    pub mask_cells: usize,
}

/// Sup-norms of the derivatives of `u = −ln(m/reference)` by centred
/// differences on the reference mask.
pub fn log_density_diagnostics(
    m: &GridDensity,
    reference: &GridDensity,
    plan: Option<&ConvolutionPlan>,
) -> Result<LogDensityDiagnostics> {
    m.require_same_grid(reference)?;
    let (dim, n, dx) = (m.dim(), m.n(), m.dx());
    let mask = evaluation_mask(reference, MASK_FRACTION);
    let u = |k: usize| -> Option<f64> {
        let (a, b) = (m.values()[k], reference.values()[k]);
        (a > DENSITY_FLOOR && b > DENSITY_FLOOR).then(|| -(a / b).ln())
    };
    let mut grad_sup: f64 = 0.0;
    let mut hess_sup: f64 = 0.0;
    let mut used = 0;
    for &k in &mask {
        let Some([i, j]) = interior_index(dim, n, k) else { continue };
        if dim == 1 {
            let (Some(l), Some(c), Some(r)) = (u(k - 1), u(k), u(k + 1)) else { continue };
            grad_sup = grad_sup.max(((r - l) / (2.0 * dx)).abs());
            hess_sup = hess_sup.max(((r - 2.0 * c + l) / (dx * dx)).abs());
        } else {
            let at = |di: isize, dj: isize| u((i as isize + di) as usize * n + (j as isize + dj) as usize);
            let stencil = [
                at(0, 0),
                at(1, 0),
                at(-1, 0),
                at(0, 1),
                at(0, -1),
                at(1, 1),
                at(1, -1),
                at(-1, 1),
                at(-1, -1),
            ];
            if stencil.iter().any(Option::is_none) {
                continue;
            }
            let s: Vec<f64> = stencil.iter().map(|v| v.unwrap()).collect();
            let gx = (s[1] - s[2]) / (2.0 * dx);
            let gy = (s[3] - s[4]) / (2.0 * dx);
            let hxx = (s[1] - 2.0 * s[0] + s[2]) / (dx * dx);
            let hyy = (s[3] - 2.0 * s[0] + s[4]) / (dx * dx);
            let hxy = (s[5] - s[6] - s[7] + s[8]) / (4.0 * dx * dx);
            grad_sup = grad_sup.max(gx.hypot(gy));
            let mean = 0.5 * (hxx + hyy);
            let radius = (0.5 * (hxx - hyy)).hypot(hxy);
            hess_sup = hess_sup.max(mean.abs() + radius);
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyMask);
    }
    let mut orthogonality_sup: f64 = 0.0;
    if let Some(plan) = plan {
        if plan.side() != n || dim != 2 {
            return Err(Error::Shape("convolution plan does not match the grid".into()));
        }
        let diff: Vec<f64> = m.values().iter().zip(reference.values()).map(|(a, b)| a - b).collect();
        let field = plan.apply(&diff);
        for &k in &mask {
            let x = m.point(k);
            orthogonality_sup = orthogonality_sup.max((x[0] * field[0][k] + x[1] * field[1][k]).abs());
        }
    }
    Ok(LogDensityDiagnostics {
        grad_sup,
        hess_sup,
        orthogonality_sup,
        mask_cells: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::invariant_gaussian;
    use crate::kernels::ConfinementPotential;

    #[test]
    fn identical_densities_give_zeros() {
        let m = GridDensity::gaussian(2, 64, 6.0, &[0.0, 0.0], 1.0).unwrap();
        let d = log_density_diagnostics(&m, &m, None).unwrap();
        assert_eq!((d.grad_sup, d.hess_sup, d.orthogonality_sup), (0.0, 0.0, 0.0));
    }

    #[test]
    fn shifted_gaussian_pair_has_linear_log_ratio() {
        let kappa: f64 = 2.0;
        let u = ConfinementPotential::quadratic(kappa);
        let reference = invariant_gaussian(&u, 2, 128, 5.0, 1e-6).unwrap();
        let h = [0.3, -0.4];
        let m = GridDensity::gaussian(2, 128, 5.0, &h, 1.0 / kappa).unwrap();
        let d = log_density_diagnostics(&m, &reference, None).unwrap();
        assert!((d.grad_sup - kappa * 0.5).abs() < 1e-9, "{}", d.grad_sup);
        assert!(d.hess_sup < 1e-6, "{}", d.hess_sup);
    }

    #[test]
    fn mask_covers_requested_mass() {
        let m = GridDensity::gaussian(1, 256, 8.0, &[0.0], 1.0).unwrap();
        let mask = evaluation_mask(&m, MASK_FRACTION);
        let covered: f64 = mask.iter().map(|&k| m.values()[k]).sum::<f64>() * m.dx();
        assert!(covered >= MASK_FRACTION * m.mass());
        assert!(mask.len() < 256);
    }

    #[test]
    fn vanishing_reference_gives_empty_mask() {
        let zero = GridDensity::new(1, 16, 1.0, vec![0.0; 16]).unwrap();
        assert!(matches!(log_density_diagnostics(&zero, &zero, None), Err(Error::EmptyMask)));
    }
}
