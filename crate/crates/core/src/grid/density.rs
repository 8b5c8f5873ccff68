use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative density on the cell-centred grid of `[−L, L]^d`, `d ∈ {1, 2}`,
/// with `n` cells per axis (row-major, axis 0 slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    dim: usize,
    n: usize,
    half_width: f64,
    values: Vec<f64>,
    t: f64,
}

/// Default limit on the fraction of mass carried by the outermost cells.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

impl GridDensity {
    pub fn new(dim: usize, n: usize, half_width: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_time(dim, n, half_width, values, 0.0)
    }

    pub fn with_time(dim: usize, n: usize, half_width: f64, values: Vec<f64>, t: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::invalid("d", format!("grids support d = 1 or 2, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid("n", format!("resolution must be a power of two ≥ 4, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid("L_box", "half-width must be positive"));
        }
        if values.len() != n.pow(dim as u32) {
            return Err(Error::Shape(format!("{} values for a {n}^{dim} grid", values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < -1e-12) {
            return Err(Error::invalid("values", format!("cell {k} holds {}", values[k])));
        }
        Ok(GridDensity {
            dim,
            n,
            half_width,
            values,
            t,
        })
    }

    /// Samples `f` at cell centres (not normalised).
    pub fn from_fn(dim: usize, n: usize, half_width: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dx = 2.0 * half_width / n as f64;
        let c = |i: usize| -half_width + (i as f64 + 0.5) * dx;
        let values = if dim == 1 {
            (0..n).map(|i| f(&[c(i)])).collect()
        } else {
            let mut v = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    v.push(f(&[c(i), c(j)]));
                }
            }
            v
        };
        Self::new(dim, n, half_width, values)
    }

    /// Samples `f` and rescales to unit mass.
    pub fn normalized_from_fn(dim: usize, n: usize, half_width: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(dim, n, half_width, f)?.normalized()
    }

    /// `N(mean, variance·I)` sampled and normalised.
    pub fn gaussian(dim: usize, n: usize, half_width: f64, mean: &[f64], variance: f64) -> Result<Self> {
        if mean.len() != dim {
            return Err(Error::Shape("mean has the wrong dimension".into()));
        }
        let mean = mean.to_vec();
        Self::normalized_from_fn(dim, n, half_width, move |x| {
            let r2: f64 = x.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum();
            (-0.5 * r2 / variance).exp()
        })
    }

    pub fn normalized(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::invalid("values", "zero mass cannot be normalised"));
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Replaces the values on the same grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::with_time(self.dim, self.n, self.half_width, values, self.t)
    }

    /// Centre of cell `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dx()
    }

    /// Centre of flat cell `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.coordinate(k), 0.0]
        } else {
            [self.coordinate(k / self.n), self.coordinate(k % self.n)]
        }
    }

    pub fn same_grid(&self, other: &GridDensity) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_width == other.half_width
    }

    pub(crate) fn require_same_grid(&self, other: &GridDensity) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::Shape("densities live on different grids".into()))
        }
    }

    /// Midpoint-rule mass `Σ mᵢ dx^d`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// `∫ f dm` by the midpoint rule.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                let p = self.point(k);
                acc += v * f(&p[..self.dim]);
            }
        }
        acc * self.cell_volume()
    }

    pub fn mean(&self, axis: usize) -> f64 {
        self.integrate(|x| x[axis]) / self.mass()
    }

    /// Second moment `∫ x_axis² dm / mass`.
    pub fn second_moment(&self, axis: usize) -> f64 {
        self.integrate(|x| x[axis] * x[axis]) / self.mass()
    }

    pub fn is_boundary_cell(&self, k: usize) -> bool {
        let n = self.n;
        if self.dim == 1 {
            k == 0 || k == n - 1
        } else {
            let (i, j) = (k / n, k % n);
            i == 0 || j == 0 || i == n - 1 || j == n - 1
        }
    }

    /// Fraction of the mass held by the outermost ring of cells.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let edge: f64 = (0..self.len())
            .filter(|&k| self.is_boundary_cell(k))
            .map(|k| self.values[k])
            .sum();
        edge / self.values.iter().sum::<f64>()
    }

    pub fn check_box(&self, limit: f64) -> Result<()> {
        let fraction = self.boundary_mass_fraction();
        if fraction < limit {
            Ok(())
        } else {
            Err(Error::BoxTooSmall { fraction, limit })
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `‖m‖_{L^p}` (midpoint rule; `p = ∞` gives the max).
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        }
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.cell_volume()).powf(1.0 / p)
    }

    /// `‖self − other‖_{L¹}`.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.cell_volume())
    }

    /// Bilinear interpolation of `ln m` (`−∞` where the density vanishes);
    /// outside the cell-centre hull the nearest centre's log-value is used.
    pub fn log_interpolate(&self, x: &[f64]) -> f64 {
        let dx = self.dx();
        let n = self.n;
        let locate = |c: f64| -> (usize, f64) {
            let u = ((c + self.half_width) / dx - 0.5).clamp(0.0, (n - 1) as f64);
            let i = (u.floor() as usize).min(n - 2);
            (i, u - i as f64)
        };
        let lv = |k: usize| {
            let v = self.values[k];
            if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }
        };
        if self.dim == 1 {
            let (i, a) = locate(x[0]);
            let (l0, l1) = (lv(i), lv(i + 1));
            if a == 0.0 {
                return l0;
            }
            if a == 1.0 {
                return l1;
            }
            (1.0 - a) * l0 + a * l1
        } else {
            let (i, a) = locate(x[0]);
            let (j, b) = locate(x[1]);
            let w = [
                ((1.0 - a) * (1.0 - b), i * n + j),
                ((1.0 - a) * b, i * n + j + 1),
                (a * (1.0 - b), (i + 1) * n + j),
                (a * b, (i + 1) * n + j + 1),
            ];
            let mut acc = 0.0;
            for (wt, k) in w {
                if wt > 0.0 {
                    acc += wt * lv(k);
                }
            }
            acc
        }
    }

    /// Rotation by +90° about the origin (d = 2).
    pub fn rotated_quarter(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::invalid("d", "rotation needs d = 2"));
        }
        let n = self.n;
        let mut v = vec![0.0; n * n];
        // (x, y) → (−y, x): new(i', j') = old(j', n−1−i')
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = self.values[j * n + (n - 1 - i)];
            }
        }
        self.with_values(v)
    }
}

/// Inverse-CDF sampler: picks a cell with probability proportional to its
/// mass, then a uniform point inside it.
#[derive(Debug, Clone)]
pub struct GridSampler {
    dim: usize,
    n: usize,
    half_width: f64,
    cdf: Vec<f64>,
}

impl GridSampler {
    pub fn new(m: &GridDensity) -> Result<Self> {
        let mut acc = 0.0;
        let cdf: Vec<f64> = m
            .values
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(Error::invalid("values", "cannot sample a zero density"));
        }
        Ok(GridSampler {
            dim: m.dim,
            n: m.n,
            half_width: m.half_width,
            cdf: cdf.into_iter().map(|c| c / acc).collect(),
        })
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        let dx = 2.0 * self.half_width / self.n as f64;
        let idx = if self.dim == 1 { [k, 0] } else { [k / self.n, k % self.n] };
        for (c, o) in out.iter_mut().enumerate().take(self.dim) {
            let v: f64 = rng.random();
            *o = -self.half_width + (idx[c] as f64 + v) * dx;
        }
    }
}

/// Normalised `exp(−κ|x|²/2)` on the grid, with the box-adequacy check.
pub fn invariant_gaussian(
    confinement: &crate::kernels::ConfinementPotential,
    dim: usize,
    n: usize,
    half_width: f64,
    boundary_limit: f64,
) -> Result<GridDensity> {
    let kappa = confinement
        .quadratic_kappa()
        .ok_or_else(|| Error::invalid("confinement", "invariant Gaussian needs the quadratic kind"))?;
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    let m = GridDensity::gaussian(dim, n, half_width, &vec![0.0; dim], 1.0 / kappa)?;
    m.check_box(boundary_limit)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ConfinementPotential;

    #[test]
    fn invariant_gaussian_examples() {
        let q = ConfinementPotential::quadratic(1.0);
        let m = invariant_gaussian(&q, 2, 128, 7.0, BOUNDARY_MASS_LIMIT).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-10);
        assert!((m.second_moment(0) - 1.0).abs() < 1e-4);
        assert!((m.second_moment(1) - 1.0).abs() < 1e-4);
        let n = m.n();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m.values()[i * n + j], m.values()[(n - 1 - i) * n + (n - 1 - j)]);
            }
        }
        assert!(matches!(
            invariant_gaussian(&q, 2, 64, 3.0, BOUNDARY_MASS_LIMIT),
            Err(Error::BoxTooSmall { .. })
        ));
        assert!(invariant_gaussian(&ConfinementPotential::double_well(1.0, 1.0), 1, 64, 5.0, 1e-6).is_err());
    }

    #[test]
    fn validation() {
        assert!(GridDensity::new(3, 8, 1.0, vec![0.0; 512]).is_err());
        assert!(GridDensity::new(1, 12, 1.0, vec![0.0; 12]).is_err());
        assert!(GridDensity::new(1, 8, 1.0, vec![-1.0; 8]).is_err());
        assert!(GridDensity::new(1, 8, 1.0, vec![0.0; 7]).is_err());
    }

    #[test]
    fn quarter_rotation_has_order_four() {
        let m = GridDensity::gaussian(2, 16, 4.0, &[1.0, -0.5], 0.7).unwrap();
        let r = m.rotated_quarter().unwrap();
        assert!((r.mean(0) + m.mean(1)).abs() < 1e-12 && (r.mean(1) - m.mean(0)).abs() < 1e-12);
        let back = r.rotated_quarter().unwrap().rotated_quarter().unwrap().rotated_quarter().unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sampler_reproduces_moments() {
        use rand::SeedableRng;
        let m = GridDensity::gaussian(2, 64, 6.0, &[0.5, -1.0], 0.8).unwrap();
        let sampler = GridSampler::new(&m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 40_000;
        let mut sum = [0.0; 2];
        let mut x = [0.0; 2];
        for _ in 0..n {
            sampler.sample(&mut rng, &mut x);
            sum[0] += x[0];
            sum[1] += x[1];
        }
        let se = (0.8f64 / n as f64).sqrt();
        assert!((sum[0] / n as f64 - 0.5).abs() < 4.0 * se);
        assert!((sum[1] / n as f64 + 1.0).abs() < 4.0 * se);
    }

    #[test]
    fn log_interpolation_is_exact_for_gaussians_at_centres() {
        let m = GridDensity::gaussian(1, 64, 6.0, &[0.0], 1.0).unwrap();
        let x = m.coordinate(20);
        assert!((m.log_interpolate(&[x]) - m.values()[20].ln()).abs() < 1e-14);
    }
}
