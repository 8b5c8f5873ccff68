use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::convolve::with_ghost_ring;
use crate::grid::{evaluation_mask, ConvolutionPlan, GridDensity, KernelSampling, DENSITY_FLOOR, MASK_FRACTION};
use crate::kernels::MollifiedKernel;

/// How `∇ln m` and the kernel are discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// `Dm/m` with the lattice-gradient kernel; `m∇ln m` is summed as `Dm`
    /// over the grid plus one ghost ring.
    Conservative,
    /// Centred differences of `ln m` with the exact kernel.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JabinWangReport {
    pub sup_phi: f64,
    /// `max_x |∫ φ(x, y) m(dy)|` over the sampled `x`.
    pub max_residual: f64,
    /// `max |φ(x, y) − φ(y, x)|` over sampled pairs.
    pub max_asymmetry: f64,
    pub samples: usize,
}

impl JabinWangReport {
    pub fn relative_residual(&self) -> f64 {
        if self.sup_phi > 0.0 {
            self.max_residual / self.sup_phi
        } else {
            self.max_residual
        }
    }
}

struct Extended {
    side: usize,
    dx: f64,
    m: Vec<f64>,
    /// `m ∇ln m` per axis on the widened grid.
    flux: [Vec<f64>; 2],
    /// `∇ln m` where defined.
    score: [Vec<f64>; 2],
    /// `K ⋆ m` per axis.
    field: Vec<Vec<f64>>,
}

fn extend(m: &GridDensity, plan: &ConvolutionPlan, mode: ScoreMode) -> Extended {
    let (n, dx) = (m.n(), m.dx());
    let side = n + 2;
    let ext = with_ghost_ring(m.values(), 2, n);
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= side as isize || j >= side as isize {
            0.0
        } else {
            ext[i as usize * side + j as usize]
        }
    };
    let cells = side * side;
    let mut flux = [vec![0.0; cells], vec![0.0; cells]];
    let mut score = [vec![f64::NAN; cells], vec![f64::NAN; cells]];
    for i in 0..side as isize {
        for j in 0..side as isize {
            let k = i as usize * side + j as usize;
            let c = at(i, j);
            let nb = [(at(i + 1, j), at(i - 1, j)), (at(i, j + 1), at(i, j - 1))];
            for axis in 0..2 {
                let (p, q) = nb[axis];
                match mode {
                    ScoreMode::Conservative => {
                        flux[axis][k] = (p - q) / (2.0 * dx);
                        if c > DENSITY_FLOOR {
                            score[axis][k] = flux[axis][k] / c;
                        }
                    }
                    ScoreMode::Pointwise => {
                        if c > DENSITY_FLOOR && p > DENSITY_FLOOR && q > DENSITY_FLOOR {
                            score[axis][k] = (p.ln() - q.ln()) / (2.0 * dx);
                            flux[axis][k] = c * score[axis][k];
                        }
                    }
                }
            }
        }
    }
    Extended {
        side,
        dx,
        field: plan.apply(&ext),
        m: ext,
        flux,
        score,
    }
}

impl Extended {
    fn phi(&self, plan: &ConvolutionPlan, a: usize, b: usize) -> f64 {
        let s = self.side as isize;
        let (ai, aj) = (a as isize / s, a as isize % s);
        let (bi, bj) = (b as isize / s, b as isize % s);
        let pair = if a == b {
            0.0
        } else {
            let k = [plan.sample(0, ai - bi, aj - bj), plan.sample(1, ai - bi, aj - bj)];
            0.5 * (k[0] * (self.score[0][a] - self.score[0][b]) + k[1] * (self.score[1][a] - self.score[1][b]))
        };
        let own = |c: usize| self.field[0][c] * self.score[0][c] + self.field[1][c] * self.score[1][c];
        pair - 0.5 * (own(a) + own(b))
    }

    fn residual(&self, plan: &ConvolutionPlan, a: usize) -> f64 {
        let s = self.side as isize;
        let (ai, aj) = (a as isize / s, a as isize % s);
        let sx = [self.score[0][a], self.score[1][a]];
        let own = self.field[0][a] * sx[0] + self.field[1][a] * sx[1];
        let mut total = 0.0;
        for b in 0..self.m.len() {
            let (mb, f) = (self.m[b], [self.flux[0][b], self.flux[1][b]]);
            if mb == 0.0 && f[0] == 0.0 && f[1] == 0.0 {
                continue;
            }
            let mut term = -0.5 * own * mb - 0.5 * (self.field[0][b] * f[0] + self.field[1][b] * f[1]);
            if b != a {
                let (bi, bj) = (b as isize / s, b as isize % s);
                let k = [plan.sample(0, ai - bi, aj - bj), plan.sample(1, ai - bi, aj - bj)];
                term += 0.5 * (k[0] * (sx[0] * mb - f[0]) + k[1] * (sx[1] * mb - f[1]));
            }
            total += term;
        }
        total * self.dx * self.dx
    }
}

/// The centred pair functional
/// `φ(x,y) = ½K(x−y)·(∇ln m(x) − ∇ln m(y)) − ½(K⋆m)(x)·∇ln m(x) − ½(K⋆m)(y)·∇ln m(y)`
/// on `samples` mask cells, with the quadrature of its `y`-marginal.
pub fn jabin_wang_phi(m: &GridDensity, table: &MollifiedKernel, mode: ScoreMode, samples: usize) -> Result<JabinWangReport> {
    if m.dim() != 2 {
        return Err(Error::invalid("d", "the pair functional is evaluated on 2-D grids"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample cell"));
    }
    let sampling = match mode {
        ScoreMode::Conservative => KernelSampling::LatticeGradient,
        ScoreMode::Pointwise => KernelSampling::Exact,
    };
    let plan = ConvolutionPlan::riesz(table, 2, m.n(), m.half_width(), sampling, true)?;
    let ext = extend(m, &plan, mode);
    let n = m.n();
    let to_ext = |k: usize| (k / n + 1) * (n + 2) + k % n + 1;
    let mask: Vec<usize> = evaluation_mask(m, MASK_FRACTION)
        .into_iter()
        .map(to_ext)
        .filter(|&a| ext.score[0][a].is_finite() && ext.score[1][a].is_finite())
        .collect();
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let count = samples.min(mask.len());
    let picked: Vec<usize> = (0..count).map(|i| mask[i * mask.len() / count]).collect();
    let mut sup_phi: f64 = 0.0;
    let mut max_asymmetry: f64 = 0.0;
    for &a in &picked {
        for &b in &picked {
            let v = ext.phi(&plan, a, b);
            sup_phi = sup_phi.max(v.abs());
            max_asymmetry = max_asymmetry.max((v - ext.phi(&plan, b, a)).abs());
        }
    }
    let max_residual = crate::numerics::parallel::map(picked.len(), |i| ext.residual(&plan, picked[i]).abs())
        .into_iter()
        .fold(0.0, f64::max);
    Ok(JabinWangReport {
        sup_phi,
        max_residual,
        max_asymmetry,
        samples: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::invariant_gaussian;
    use crate::kernels::{BumpProfile, ConfinementPotential, Mollifier, RieszKernel};

    fn table(eps: f64, profile: BumpProfile) -> MollifiedKernel {
        MollifiedKernel::new(RieszKernel::vortex(1.0), Mollifier::new(eps, profile, 2).unwrap(), 30.0).unwrap()
    }

    #[test]
    fn marginal_cancels_on_asymmetric_snapshot() {
        let m = GridDensity::normalized_from_fn(2, 64, 4.0, |x| {
            (-((x[0] - 0.6).powi(2) + 2.0 * (x[1] + 0.2).powi(2))).exp() + 0.5 * (-(x[0] + 0.8).powi(2) - (x[1] - 0.7).powi(2) * 3.0).exp()
        })
        .unwrap();
        let r = jabin_wang_phi(&m, &table(0.25, BumpProfile::Exponential), ScoreMode::Conservative, 48).unwrap();
        assert!(r.sup_phi > 0.1);
        assert!(r.relative_residual() <= 1e-10, "{r:?}");
        assert_eq!(r.max_asymmetry, 0.0);
    }

    #[test]
    fn equilibrium_has_vanishing_phi() {
        let m = invariant_gaussian(&ConfinementPotential::quadratic(1.0), 2, 256, 8.0, 1e-6).unwrap();
        let r = jabin_wang_phi(&m, &table(0.5, BumpProfile::Polynomial), ScoreMode::Pointwise, 32).unwrap();
        assert!(r.sup_phi <= 1e-6, "{r:?}");
        assert_eq!(r.max_asymmetry, 0.0);
    }
}
