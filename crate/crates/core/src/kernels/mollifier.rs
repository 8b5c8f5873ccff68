use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::RieszKernel;
use crate::numerics::{parallel, sphere_area, GaussLegendre, TanhSinh};

/// Radial bump used for mollification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `exp(-1 / (1 - u²))`, smooth and flat at the support edge.
    Exponential,
    /// `(1 - u²)^4`.
    Polynomial,
}

impl BumpProfile {
    /// Unnormalized profile at `u = r / ε`.
    pub fn shape(self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u * u;
        match self {
            BumpProfile::Exponential => (-1.0 / w).exp(),
            BumpProfile::Polynomial => w * w * w * w,
        }
    }
}

/// Rotation-invariant, unit-mass bump supported in `B(0, ε)` ⊂ ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    eps: f64,
    profile: BumpProfile,
    dim: usize,
    normalization: f64,
}

impl Mollifier {
    pub fn new(eps: f64, profile: BumpProfile, dim: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
        }
        if dim == 0 {
            return Err(Error::invalid("d", "dimension must be positive"));
        }
        let gl = GaussLegendre::new(16);
        let radial = gl.integrate(0.0, 1.0, 64, |u| profile.shape(u) * u.powi(dim as i32 - 1));
        let normalization = 1.0 / (sphere_area(dim) * eps.powi(dim as i32) * radial);
        Ok(Mollifier {
            eps,
            profile,
            dim,
            normalization,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn profile(&self) -> BumpProfile {
        self.profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `η^ε` at radius `r`.
    pub fn density(&self, r: f64) -> f64 {
        self.normalization * self.profile.shape(r / self.eps)
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.density(crate::numerics::norm(x))
    }

    /// Radial weight `|S^{d-1}| ρ^{d-1} η^ε(ρ)`.
    pub fn shell_weight(&self, rho: f64) -> f64 {
        sphere_area(self.dim) * rho.powi(self.dim as i32 - 1) * self.density(rho)
    }
}

/// Cubic Hermite interpolant on a geometric radius grid.
#[derive(Debug, Clone)]
struct RadialTable {
    r0: f64,
    log_r0: f64,
    inv_log_q: f64,
    radii: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl RadialTable {
    fn new(radii: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        let r0 = radii[0];
        let q = radii[1] / radii[0];
        RadialTable {
            r0,
            log_r0: r0.ln(),
            inv_log_q: 1.0 / q.ln(),
            radii,
            values,
            slopes,
        }
    }

    fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Value and derivative; `r` must lie inside the table.
    fn eval(&self, r: f64) -> (f64, f64) {
        let n = self.radii.len();
        let mut k = ((r.ln() - self.log_r0) * self.inv_log_q).floor() as isize;
        k = k.clamp(0, n as isize - 2);
        let mut k = k as usize;
        // guard against rounding in the log-index
        while k > 0 && r < self.radii[k] {
            k -= 1;
        }
        while k + 2 < n && r > self.radii[k + 1] {
            k += 1;
        }
        let (a, b) = (self.radii[k], self.radii[k + 1]);
        let h = b - a;
        let t = (r - a) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (v, dv)
    }
}

/// Number of nodes in the radial tables.
pub const TABLE_NODES: usize = 4096;

/// `g^ε = g ⋆ η^ε` and `K^ε = M ∇g^ε`, tabulated once on a geometric radius
/// grid from `ε·1e-3` to `r_max`.
#[derive(Debug, Clone)]
pub struct MollifiedKernel {
    kernel: RieszKernel,
    mollifier: Mollifier,
    at_origin: f64,
    tables: Tables,
}

#[derive(Debug, Clone)]
enum Tables {
    /// Harmonic case: `g^ε = g` outside `B(0, ε)`; inside,
    /// `g^ε(r) = g(r)·mass(r) + tail(r)` by Newton's theorem.
    Harmonic { mass: RadialTable, tail: RadialTable },
    /// General exponent: direct tables of `g^ε` and `∂_r g^ε`.
    General { value: RadialTable, slope: RadialTable },
}

impl MollifiedKernel {
    pub fn new(kernel: RieszKernel, mollifier: Mollifier, r_max: f64) -> Result<Self> {
        if mollifier.dim() != kernel.dim() {
            return Err(Error::Shape(format!(
                "mollifier dimension {} does not match kernel dimension {}",
                mollifier.dim(),
                kernel.dim()
            )));
        }
        let eps = mollifier.eps();
        let r_min = eps * 1e-3;
        let r_max = r_max.max(4.0 * eps);
        let q = (r_max / r_min).powf(1.0 / (TABLE_NODES - 1) as f64);
        let radii: Vec<f64> = (0..TABLE_NODES).map(|k| r_min * q.powi(k as i32)).collect();

        let ts = TanhSinh::default();
        let weighted = |rho: f64| mollifier.shell_weight(rho) * kernel.radial(rho);
        let at_origin = ts.integrate(0.0, eps, |rho, _, _| weighted(rho));

        let tables = if kernel.is_coulombic() {
            harmonic_tables(&kernel, &mollifier, &radii, at_origin)
        } else {
            general_tables(&kernel, &mollifier, &radii)
        };
        Ok(MollifiedKernel {
            kernel,
            mollifier,
            at_origin,
            tables,
        })
    }

    pub fn kernel(&self) -> &RieszKernel {
        &self.kernel
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn eps(&self) -> f64 {
        self.mollifier.eps()
    }

    /// `(g^ε(r), ∂_r g^ε(r))`.
    pub fn radial(&self, r: f64) -> (f64, f64) {
        let eps = self.mollifier.eps();
        match &self.tables {
            Tables::Harmonic { mass, tail } => {
                if r >= eps {
                    return (self.kernel.radial(r), self.kernel.radial_derivative(r));
                }
                if r < mass.r0 {
                    return self.below_table(r);
                }
                let (m, _) = mass.eval(r);
                let (t, _) = tail.eval(r);
                (
                    self.kernel.radial(r) * m + t,
                    self.kernel.radial_derivative(r) * m,
                )
            }
            Tables::General { value, slope } => {
                if r < value.r0 {
                    return self.below_table(r);
                }
                if r > value.r_max() {
                    return (self.kernel.radial(r), self.kernel.radial_derivative(r));
                }
                (value.eval(r).0, slope.eval(r).0)
            }
        }
    }

    // g^ε is smooth and even at the origin: quadratic/linear continuation.
    fn below_table(&self, r: f64) -> (f64, f64) {
        let r0 = self.eps() * 1e-3;
        let (g0, dg0) = self.radial(r0);
        let u = r / r0;
        (self.at_origin + (g0 - self.at_origin) * u * u, dg0 * u)
    }

    /// `g^ε(x)` and `K^ε(x)`; total on ℝ^d.
    pub fn eval(&self, x: &[f64], force: &mut [f64]) -> f64 {
        let r = crate::numerics::norm(x);
        if r == 0.0 {
            force.iter_mut().for_each(|f| *f = 0.0);
            return self.at_origin;
        }
        let (g, dg) = self.radial(r);
        self.kernel.apply_matrix(x, dg / r, force);
        g
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        let r = crate::numerics::norm(x);
        if r == 0.0 {
            self.at_origin
        } else {
            self.radial(r).0
        }
    }

    pub fn force_into(&self, x: &[f64], force: &mut [f64]) {
        self.eval(x, force);
    }

    pub fn value_at_origin(&self) -> f64 {
        self.at_origin
    }
}

fn harmonic_tables(
    kernel: &RieszKernel,
    mollifier: &Mollifier,
    radii: &[f64],
    total_tail: f64,
) -> Tables {
    let eps = mollifier.eps();
    let gl = GaussLegendre::new(8);
    let ts = TanhSinh::default();
    let w = |rho: f64| mollifier.shell_weight(rho);
    let wg = |rho: f64| mollifier.shell_weight(rho) * kernel.radial(rho);

    let n = radii.len();
    let mut mass = vec![0.0; n];
    let mut partial = vec![0.0; n]; // ∫_0^r w g
    let first = radii[0].min(eps);
    mass[0] = gl.integrate(0.0, first, 4, w);
    partial[0] = ts.integrate(0.0, first, |rho, _, _| wg(rho));
    for k in 1..n {
        let a = radii[k - 1].min(eps);
        let b = radii[k].min(eps);
        if b > a {
            mass[k] = mass[k - 1] + gl.integrate(a, b, 1, w);
            partial[k] = partial[k - 1] + gl.integrate(a, b, 1, wg);
        } else {
            mass[k] = mass[k - 1];
            partial[k] = partial[k - 1];
        }
    }
    let mass_slopes: Vec<f64> = radii.iter().map(|&r| w(r)).collect();
    let tail: Vec<f64> = partial.iter().map(|p| (total_tail - p).max(if total_tail > 0.0 { 0.0 } else { f64::NEG_INFINITY })).collect();
    let tail_slopes: Vec<f64> = radii.iter().map(|&r| -wg(r)).collect();
    Tables::Harmonic {
        mass: RadialTable::new(radii.to_vec(), mass, mass_slopes),
        tail: RadialTable::new(radii.to_vec(), tail, tail_slopes),
    }
}

/// Mean of `g_s(|x - ρω|)` over the unit sphere, `|x| = r`.
pub fn spherical_mean(kernel: &RieszKernel, r: f64, rho: f64, ts: &TanhSinh) -> f64 {
    let d = kernel.dim();
    let s = kernel.exponent();
    if d == 3 && s > 0.0 && s != 2.0 {
        // closed form of ½∫_{-1}^{1} (r² + ρ² - 2rρu)^{-s/2} du
        let p = 2.0 - s;
        return ((r + rho).powf(p) - (r - rho).abs().powf(p)) / (2.0 * r * rho * p);
    }
    let norm = if d == 2 {
        PI
    } else {
        // ∫_0^π sin^{d-2}
        PI.sqrt() * statrs::function::gamma::gamma((d as f64 - 1.0) / 2.0)
            / statrs::function::gamma::gamma(d as f64 / 2.0)
    };
    let dr = r - rho;
    let integral = ts.integrate(0.0, PI, |theta, da, db| {
        // |x - ρω|² = (r - ρ)² + 4 r ρ sin²(θ/2), computed without cancellation
        let half = 0.5 * da.min(PI - db);
        let sh = if theta < 0.5 * PI { half.sin() } else { (0.5 * theta).sin() };
        let dist2 = dr * dr + 4.0 * r * rho * sh * sh;
        let g = if s == 0.0 { -0.5 * dist2.ln() } else { dist2.powf(-0.5 * s) };
        let weight = if d == 2 { 1.0 } else { theta.sin().powi(d as i32 - 2) };
        g * weight
    });
    integral / norm
}

fn general_tables(kernel: &RieszKernel, mollifier: &Mollifier, radii: &[f64]) -> Tables {
    let eps = mollifier.eps();
    let outer = TanhSinh::new(1.0 / 16.0, 3.2);
    let inner = TanhSinh::new(1.0 / 16.0, 3.2);
    let values = parallel::map(radii.len(), |k| {
        let r = radii[k];
        let split = r.min(eps);
        let f = |rho: f64| mollifier.shell_weight(rho) * spherical_mean(kernel, r, rho, &inner);
        let lo = outer.integrate(0.0, split, |rho, _, _| f(rho));
        let hi = if split < eps {
            outer.integrate(split, eps, |rho, _, _| f(rho))
        } else {
            0.0
        };
        lo + hi
    });
    // derivatives in t = ln r on the uniform log grid
    let h = (radii[1] / radii[0]).ln();
    let dvals = log_derivative(&values, h, radii);
    let ddvals = log_derivative(&dvals, h, radii);
    Tables::General {
        value: RadialTable::new(radii.to_vec(), values, dvals.clone()),
        slope: RadialTable::new(radii.to_vec(), dvals, ddvals),
    }
}

/// d/dr of samples on a geometric grid via fourth-order differences in ln r.
fn log_derivative(f: &[f64], h: f64, radii: &[f64]) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|k| {
            let dt = if k >= 2 && k + 2 < n {
                (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h)
            } else if k < 2 {
                let j = k;
                // forward 5-point stencil shifted
                let c: [[f64; 5]; 2] = [
                    [-25.0, 48.0, -36.0, 16.0, -3.0],
                    [-3.0, -10.0, 18.0, -6.0, 1.0],
                ];
                (0..5).map(|i| c[j][i] * f[i]).sum::<f64>() / (12.0 * h)
            } else {
                let j = n - 1 - k;
                let c: [[f64; 5]; 2] = [
                    [25.0, -48.0, 36.0, -16.0, 3.0],
                    [3.0, 10.0, -18.0, 6.0, -1.0],
                ];
                (0..5).map(|i| c[j][i] * f[n - 1 - i]).sum::<f64>() / (12.0 * h)
            };
            dt / radii[k]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vortex_table(eps: f64, profile: BumpProfile) -> MollifiedKernel {
        let m = Mollifier::new(eps, profile, 2).unwrap();
        MollifiedKernel::new(RieszKernel::vortex(1.0), m, 20.0).unwrap()
    }

    #[test]
    fn mollifier_has_unit_mass_and_support() {
        let ts = TanhSinh::new(1.0 / 128.0, 3.5);
        for d in 1..=3 {
            for profile in [BumpProfile::Exponential, BumpProfile::Polynomial] {
                let m = Mollifier::new(0.3, profile, d).unwrap();
                let mass = ts.integrate(0.0, 0.3, |r, _, _| m.shell_weight(r));
                assert!((mass - 1.0).abs() < 1e-10, "d={d} {profile:?}: {mass}");
                assert_eq!(m.density(0.3), 0.0);
                assert_eq!(m.density(0.31), 0.0);
                assert!(m.density(0.29) > 0.0);
            }
        }
        assert!(Mollifier::new(0.0, BumpProfile::Exponential, 2).is_err());
    }

    #[test]
    fn log_kernel_is_unchanged_outside_support() {
        let eps = 0.1;
        let k = vortex_table(eps, BumpProfile::Exponential);
        let mut f = [0.0; 2];
        let g = k.eval(&[2.0 * eps, 0.0], &mut f);
        assert!((g + (2.0 * eps).ln()).abs() < 1e-8);
        for r in [0.11, 0.2, 0.5, 1.7, 19.0, 40.0] {
            assert!((k.potential(&[0.0, r]) + r.ln()).abs() < 1e-8);
        }
    }

    #[test]
    fn value_at_origin_matches_radial_quadrature() {
        // independent oracle: composite Gauss-Legendre with log-graded panels
        let eps = 0.05;
        let k = vortex_table(eps, BumpProfile::Exponential);
        let m = k.mollifier().clone();
        let gl = GaussLegendre::new(20);
        let mut oracle = 0.0;
        let mut hi = eps;
        for _ in 0..60 {
            let lo = hi * 0.5;
            oracle += gl.integrate(lo, hi, 16, |r| -r.ln() * m.shell_weight(r));
            hi = lo;
        }
        let got = k.potential(&[0.0, 0.0]);
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn force_is_parallel_and_finite_everywhere() {
        let k = vortex_table(0.2, BumpProfile::Exponential);
        let mut f = [0.0; 2];
        for i in 0..400 {
            let a = i as f64 * 0.37;
            let r = 1e-7 * 1.08f64.powi(i);
            let x = [r * a.cos(), r * a.sin()];
            k.eval(&x, &mut f);
            assert!(f[0].is_finite() && f[1].is_finite());
            // K = J ∇g^ε with ∇g^ε ∥ x, so K ⊥ x
            let along = (x[0] * f[0] + x[1] * f[1]) / r;
            assert!(along.abs() <= 1e-10 * f[0].hypot(f[1]).max(1e-300));
        }
        k.eval(&[0.0, 0.0], &mut f);
        assert_eq!(f, [0.0, 0.0]);
    }

    #[test]
    fn mollified_value_converges_to_raw_kernel() {
        let x = [0.03, 0.0];
        let raw = -(0.03f64).ln();
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.04] {
            let err = (vortex_table(eps, BumpProfile::Exponential).potential(&x) - raw).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(vortex_table(0.02, BumpProfile::Exponential).potential(&x) - raw == 0.0
            || (vortex_table(0.02, BumpProfile::Exponential).potential(&x) - raw).abs() < 1e-8);
    }

    #[test]
    fn radial_slope_is_consistent_with_values() {
        for profile in [BumpProfile::Exponential, BumpProfile::Polynomial] {
            let k = vortex_table(0.3, profile);
            for r in [0.001, 0.05, 0.1, 0.2, 0.29, 0.31] {
                let h = 1e-6;
                let fd = (k.radial(r + h).0 - k.radial(r - h).0) / (2.0 * h);
                assert_relative_eq!(fd, k.radial(r).1, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn general_exponent_matches_brute_force_convolution() {
        // d = 2, s = 0.5: oracle by polar quadrature of g(x - y) η(y)
        let kernel = RieszKernel::new(2, 0.5, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        let eps = 0.4;
        let m = Mollifier::new(eps, BumpProfile::Polynomial, 2).unwrap();
        let tab = MollifiedKernel::new(kernel, m.clone(), 10.0).unwrap();
        let gl = GaussLegendre::new(24);
        for r in [0.0, 0.1, 0.25, 0.39, 0.6, 1.5] {
            let x = [r, 0.0];
            let oracle = if r == 0.0 {
                gl.integrate(0.0, eps, 32, |rho| rho.powf(-0.5) * m.shell_weight(rho))
            } else {
                // polar coordinates centred at x: ∫∫ |z|^{-s} η(x + z) |z| d|z| dθ
                gl.integrate(0.0, 2.0 * PI, 64, |th| {
                    let (c, s) = (th.cos(), th.sin());
                    gl.integrate(0.0, r + eps, 64, |rad| {
                        let y = [x[0] + rad * c, x[1] + rad * s];
                        rad.powf(-0.5) * m.density_at(&y) * rad
                    })
                })
            };
            assert_relative_eq!(tab.potential(&x), oracle, max_relative = 2e-6);
        }
    }

    #[test]
    fn profiles_agree_to_second_order_away_from_support() {
        // Riesz s = 0.5 in d = 2 is not harmonic, so profiles differ at O(ε²).
        let kernel = RieszKernel::new(2, 0.5, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        let gap = |eps: f64| {
            let a = MollifiedKernel::new(
                kernel.clone(),
                Mollifier::new(eps, BumpProfile::Exponential, 2).unwrap(),
                5.0,
            )
            .unwrap();
            let b = MollifiedKernel::new(
                kernel.clone(),
                Mollifier::new(eps, BumpProfile::Polynomial, 2).unwrap(),
                5.0,
            )
            .unwrap();
            let x = [1.0, 0.0];
            (a.potential(&x) - b.potential(&x)).abs()
        };
        let (g1, g2) = (gap(0.2), gap(0.1));
        assert!(g1 > 0.0);
        let ratio = g1 / g2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
