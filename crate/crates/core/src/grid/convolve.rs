use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::kernels::MollifiedKernel;

/// How the interaction kernel is placed on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSampling {
    /// `K^ε` evaluated at lattice lags.
    Exact,
    /// `M` times centred differences of `g^ε`: discretely divergence-free
    /// for anti-symmetric `M`.
    LatticeGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMode {
    Spectral,
    Direct,
}

/// Vector field on a grid: `components[c][cell]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub dim: usize,
    pub n: usize,
    pub components: Vec<Vec<f64>>,
}

impl GridField {
    pub fn zeros(dim: usize, n: usize) -> Self {
        GridField {
            dim,
            n,
            components: vec![vec![0.0; n.pow(dim as u32)]; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, k: usize) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (c, comp) in self.components.iter().enumerate() {
            v[c] = comp[k];
        }
        v
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.len())
            .map(|k| self.components.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Discrete convolution `Σ_j W(x_i − x_j) v_j dx^d` on a uniform grid with
/// `side` cells per axis, by zero-padded FFT of size `2·side`.
#[derive(Clone)]
pub struct ConvolutionPlan {
    dim: usize,
    side: usize,
    dx: f64,
    components: usize,
    /// Kernel samples on the padded lattice in wrap-around order.
    samples: Vec<Vec<f64>>,
    /// Their spectra (two real components packed as one complex spectrum).
    spectra: Vec<Vec<Complex<f64>>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("dim", &self.dim)
            .field("side", &self.side)
            .field("dx", &self.dx)
            .field("components", &self.components)
            .finish()
    }
}

impl ConvolutionPlan {
    /// `kernel(lag, out)` writes the `components` values of `W` at `lag`.
    pub fn new(
        dim: usize,
        side: usize,
        dx: f64,
        components: usize,
        mut kernel: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<Self> {
        if !(dim == 1 || dim == 2) || components == 0 {
            return Err(Error::invalid("d", "convolution supports d = 1, 2"));
        }
        let p = 2 * side;
        let total = p.pow(dim as u32);
        let mut samples = vec![vec![0.0; total]; components];
        let lag_of = |i: usize| -> f64 {
            let l = if i < side { i as isize } else { i as isize - p as isize };
            l as f64 * dx
        };
        let mut buf = vec![0.0; components];
        for k in 0..total {
            // index `side` is the unused Nyquist lag
            let lag = if dim == 1 {
                if k == side {
                    continue;
                }
                vec![lag_of(k)]
            } else {
                let (i, j) = (k / p, k % p);
                if i == side || j == side {
                    continue;
                }
                vec![lag_of(i), lag_of(j)]
            };
            kernel(&lag, &mut buf);
            for c in 0..components {
                samples[c][k] = buf[c];
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(p);
        let inverse = planner.plan_fft_inverse(p);
        let mut plan = ConvolutionPlan {
            dim,
            side,
            dx,
            components,
            samples,
            spectra: Vec::new(),
            forward,
            inverse,
        };
        let mut spectra = Vec::new();
        for pair in (0..components).collect::<Vec<_>>().chunks(2) {
            let mut z: Vec<Complex<f64>> = (0..total)
                .map(|k| {
                    Complex::new(
                        plan.samples[pair[0]][k],
                        if pair.len() > 1 { plan.samples[pair[1]][k] } else { 0.0 },
                    )
                })
                .collect();
            plan.forward(&mut z, 2 * side);
            spectra.push(z);
        }
        plan.spectra = spectra;
        Ok(plan)
    }

    /// Plan for `K^ε` of a log/Riesz kernel on the grid of `m` (optionally
    /// widened by one ghost ring on each side).
    pub fn riesz(
        table: &MollifiedKernel,
        dim: usize,
        n: usize,
        half_width: f64,
        sampling: KernelSampling,
        ghost: bool,
    ) -> Result<Self> {
        let dx = 2.0 * half_width / n as f64;
        if table.kernel().dim() != dim {
            return Err(Error::Shape("kernel and grid dimensions differ".into()));
        }
        if table.eps() < dx {
            return Err(Error::UnderResolved { eps: table.eps(), dx });
        }
        let side = if ghost { n + 2 } else { n };
        let kernel = table.kernel().clone();
        let mut grad = vec![0.0; dim];
        let mut shifted = vec![0.0; dim];
        Self::new(dim, side, dx, dim, |lag, out| match sampling {
            KernelSampling::Exact => {
                table.eval(lag, out);
            }
            KernelSampling::LatticeGradient => {
                for k in 0..dim {
                    shifted.copy_from_slice(lag);
                    shifted[k] = lag[k] + dx;
                    let gp = table.potential(&shifted);
                    shifted[k] = lag[k] - dx;
                    let gm = table.potential(&shifted);
                    grad[k] = (gp - gm) / (2.0 * dx);
                }
                kernel.apply_matrix(&grad, 1.0, out);
            }
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Kernel sample `c` at lattice lag `(li, lj)` (units of `dx`).
    pub(crate) fn sample(&self, c: usize, li: isize, lj: isize) -> f64 {
        let p = 2 * self.side as isize;
        let (a, b) = (li.rem_euclid(p) as usize, lj.rem_euclid(p) as usize);
        if self.dim == 1 {
            self.samples[c][a]
        } else {
            self.samples[c][a * p as usize + b]
        }
    }

    /// Forward transform of data supported in the first `rows` rows; the 2-D
    /// spectrum is left transposed.
    fn forward(&self, z: &mut [Complex<f64>], rows: usize) {
        let p = 2 * self.side;
        if self.dim == 1 {
            self.forward.process(z);
            return;
        }
        self.forward.process(&mut z[..rows * p]);
        transpose(z, p);
        self.forward.process(z);
    }

    /// Inverse of [`Self::forward`], exact in the first `rows` rows only.
    fn inverse(&self, z: &mut [Complex<f64>], rows: usize) {
        let p = 2 * self.side;
        if self.dim == 1 {
            self.inverse.process(z);
            return;
        }
        self.inverse.process(z);
        transpose(z, p);
        self.inverse.process(&mut z[..rows * p]);
    }

    /// `W ⋆ v` for `v` on the `side^d` grid.
    pub fn apply(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let p = 2 * self.side;
        let side = self.side;
        let total = p.pow(self.dim as u32);
        let mut z = vec![Complex::new(0.0, 0.0); total];
        if self.dim == 1 {
            for i in 0..side {
                z[i].re = values[i];
            }
        } else {
            for i in 0..side {
                for j in 0..side {
                    z[i * p + j].re = values[i * side + j];
                }
            }
        }
        self.forward(&mut z, side);
        let scale = self.dx.powi(self.dim as i32) / total as f64;
        let mut out = vec![vec![0.0; side.pow(self.dim as u32)]; self.components];
        for (pi, spec) in self.spectra.iter().enumerate() {
            let mut w: Vec<Complex<f64>> = z.iter().zip(spec).map(|(a, b)| a * b).collect();
            self.inverse(&mut w, side);
            let c0 = 2 * pi;
            for k in 0..side.pow(self.dim as u32) {
                let src = if self.dim == 1 { k } else { (k / side) * p + k % side };
                out[c0][k] = w[src].re * scale;
                if c0 + 1 < self.components {
                    out[c0 + 1][k] = w[src].im * scale;
                }
            }
        }
        out
    }

    /// The same sum evaluated directly, `O(side^{2d})`.
    pub fn apply_direct(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let p = 2 * self.side;
        let side = self.side;
        let vol = self.dx.powi(self.dim as i32);
        let cells = side.pow(self.dim as u32);
        let wrap = |l: isize| -> usize { l.rem_euclid(p as isize) as usize };
        let mut out = vec![vec![0.0; cells]; self.components];
        for a in 0..cells {
            for b in 0..cells {
                let v = values[b];
                if v == 0.0 {
                    continue;
                }
                let idx = if self.dim == 1 {
                    wrap(a as isize - b as isize)
                } else {
                    let (ai, aj) = ((a / side) as isize, (a % side) as isize);
                    let (bi, bj) = ((b / side) as isize, (b % side) as isize);
                    wrap(ai - bi) * p + wrap(aj - bj)
                };
                for c in 0..self.components {
                    out[c][a] += self.samples[c][idx] * v * vol;
                }
            }
        }
        out
    }
}

fn transpose(z: &mut [Complex<f64>], p: usize) {
    for i in 0..p {
        for j in i + 1..p {
            z.swap(i * p + j, j * p + i);
        }
    }
}

/// Embeds `m` into a grid with one extra zero ring on each side.
pub(crate) fn with_ghost_ring(values: &[f64], dim: usize, n: usize) -> Vec<f64> {
    let s = n + 2;
    if dim == 1 {
        let mut v = vec![0.0; s];
        v[1..=n].copy_from_slice(values);
        v
    } else {
        let mut v = vec![0.0; s * s];
        for i in 0..n {
            v[(i + 1) * s + 1..(i + 1) * s + 1 + n].copy_from_slice(&values[i * n..(i + 1) * n]);
        }
        v
    }
}

/// `K^ε ⋆ m` on the grid of `m`.
pub fn convolve_field(
    m: &GridDensity,
    table: &MollifiedKernel,
    sampling: KernelSampling,
    mode: ConvolutionMode,
) -> Result<GridField> {
    let plan = ConvolutionPlan::riesz(table, m.dim(), m.n(), m.half_width(), sampling, false)?;
    let components = match mode {
        ConvolutionMode::Spectral => plan.apply(m.values()),
        ConvolutionMode::Direct => plan.apply_direct(m.values()),
    };
    Ok(GridField {
        dim: m.dim(),
        n: m.n(),
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BumpProfile, Mollifier, RieszKernel};

    fn vortex_table(eps: f64, profile: BumpProfile) -> MollifiedKernel {
        MollifiedKernel::new(RieszKernel::vortex(1.0), Mollifier::new(eps, profile, 2).unwrap(), 20.0).unwrap()
    }

    #[test]
    fn spectral_matches_direct_sum() {
        let m = GridDensity::gaussian(2, 64, 4.0, &[0.5, -0.3], 0.8).unwrap();
        let table = vortex_table(0.25, BumpProfile::Exponential);
        let a = convolve_field(&m, &table, KernelSampling::Exact, ConvolutionMode::Spectral).unwrap();
        let b = convolve_field(&m, &table, KernelSampling::Exact, ConvolutionMode::Direct).unwrap();
        let scale = b.max_norm();
        for c in 0..2 {
            for k in 0..a.len() {
                assert!((a.components[c][k] - b.components[c][k]).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn radial_density_gives_orthogonal_field() {
        // smooth kernel keeps lattice aliasing below the tolerance
        let m = GridDensity::gaussian(2, 256, 8.0, &[0.0, 0.0], 1.0).unwrap();
        let table = vortex_table(0.5, BumpProfile::Polynomial);
        let f = convolve_field(&m, &table, KernelSampling::Exact, ConvolutionMode::Spectral).unwrap();
        for k in 0..f.len() {
            let x = m.point(k);
            let v = f.at(k);
            assert!((x[0] * v[0] + x[1] * v[1]).abs() < 1e-8, "cell {k} {:e}", x[0] * v[0] + x[1] * v[1]);
        }
    }

    #[test]
    fn near_delta_reproduces_kernel() {
        let n = 64;
        let mut values = vec![0.0; n * n];
        // unit mass in the four cells around the origin
        let dx = 8.0 / n as f64;
        for (i, j) in [(31, 31), (31, 32), (32, 31), (32, 32)] {
            values[i * n + j] = 0.25 / (dx * dx);
        }
        let m = GridDensity::new(2, n, 4.0, values).unwrap();
        let table = vortex_table(0.3, BumpProfile::Exponential);
        let f = convolve_field(&m, &table, KernelSampling::Exact, ConvolutionMode::Spectral).unwrap();
        for k in [10 * n + 50, 45 * n + 12, 5 * n + 5] {
            let x = m.point(k);
            let mut exact = [0.0; 2];
            table.eval(&x, &mut exact);
            let v = f.at(k);
            // four-point average of a smooth field: O(dx²) interpolation error
            let err = ((v[0] - exact[0]).powi(2) + (v[1] - exact[1]).powi(2)).sqrt();
            assert!(err < 0.02 * exact[0].hypot(exact[1]));
        }
    }

    #[test]
    fn lattice_gradient_is_discretely_divergence_free() {
        let table = vortex_table(0.25, BumpProfile::Exponential);
        let n = 32;
        let dx = 8.0 / n as f64;
        let plan = ConvolutionPlan::riesz(&table, 2, n, 4.0, KernelSampling::LatticeGradient, false).unwrap();
        let p = 2 * n;
        let at = |c: usize, i: isize, j: isize| {
            plan.samples[c][(i.rem_euclid(p as isize) as usize) * p + j.rem_euclid(p as isize) as usize]
        };
        for i in -10..10 {
            for j in -10..10 {
                let div = (at(0, i + 1, j) - at(0, i - 1, j) + at(1, i, j + 1) - at(1, i, j - 1)) / (2.0 * dx);
                assert!(div.abs() < 1e-12, "{div}");
            }
        }
    }

    #[test]
    fn under_resolved_kernel_rejected() {
        let m = GridDensity::gaussian(2, 64, 4.0, &[0.0, 0.0], 1.0).unwrap();
        let table = vortex_table(0.1, BumpProfile::Exponential);
        assert!(matches!(
            convolve_field(&m, &table, KernelSampling::Exact, ConvolutionMode::Spectral),
            Err(Error::UnderResolved { .. })
        ));
    }
}
