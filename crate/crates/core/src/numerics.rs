//! Small numerical building blocks shared across modules: quadrature rules,
//! least-squares fits, low-discrepancy point sets and the worker-pool shim.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess followed by Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * s;
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Double-exponential (tanh-sinh) rule on [a, b]. Integrable algebraic
/// endpoint singularities are handled; `f` receives the abscissa together
/// with its distances to both endpoints, computed without cancellation.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    // (1 + u, 1 - u, weight) triples for the reference interval [-1, 1].
    nodes: Vec<(f64, f64, f64)>,
}

impl TanhSinh {
    pub fn new(step: f64, max_t: f64) -> Self {
        let mut nodes = Vec::new();
        let n = (max_t / step).ceil() as i64;
        for k in -n..=n {
            let t = k as f64 * step;
            let s = 0.5 * PI * t.sinh();
            let cs = 0.5 * PI * t.cosh();
            let e = (-2.0 * s.abs()).exp();
            // 1 - tanh|s| = 2 e^{-2|s|} / (1 + e^{-2|s|})
            let small = 2.0 * e / (1.0 + e);
            let big = 2.0 - small;
            let (one_plus, one_minus) = if s >= 0.0 { (big, small) } else { (small, big) };
            let sech = 2.0 * (-s.abs()).exp() / (1.0 + e);
            let w = step * cs * sech * sech;
            if one_plus > 0.0 && one_minus > 0.0 && w > 1e-300 {
                nodes.push((one_plus, one_minus, w));
            }
        }
        TanhSinh { nodes }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mut total = 0.0;
        for &(p, m, w) in &self.nodes {
            let da = half * p;
            let db = half * m;
            let v = f(a + da, da, db);
            if v.is_finite() {
                total += w * v;
            }
        }
        half * total
    }
}

impl Default for TanhSinh {
    fn default() -> Self {
        TanhSinh::new(1.0 / 64.0, 4.0)
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let flat = y.iter().all(|v| *v == y[0]);
    let slope = if sxx > 0.0 && !flat { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    // A perfectly flat series is fitted exactly.
    let r_squared = if flat || syy <= 1e-300 * n { 1.0 } else { 1.0 - ss_res / syy };
    LineFit {
        intercept,
        slope,
        r_squared,
    }
}

/// Radical-inverse (van der Corput) sequence in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / b as f64;
    while i > 0 {
        f *= inv;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Halton point `i` in the unit cube of dimension `d` (d ≤ 12).
pub fn halton(i: u64, d: usize) -> Vec<f64> {
    (0..d).map(|k| radical_inverse(i + 1, PRIMES[k])).collect()
}

/// `count` deterministic, well-spread unit vectors in dimension `d`.
pub fn unit_directions(count: usize, d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => (0..count)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect(),
        2 => (0..count)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => (0..count as u64)
            .map(|i| {
                // Map Halton points through the inverse normal CDF's cheap
                // cousin: Box–Muller pairs, then normalize.
                let u = halton(i, d + (d % 2));
                let mut v = Vec::with_capacity(d + 1);
                for pair in u.chunks(2) {
                    let r = (-2.0 * (1.0 - pair[0]).max(1e-300).ln()).sqrt();
                    let th = 2.0 * PI * pair[1];
                    v.push(r * th.cos());
                    v.push(r * th.sin());
                }
                v.truncate(d);
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
                v.iter().map(|a| a / n).collect()
            })
            .collect(),
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Surface area of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Volume of the unit ball in ℝ^d.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

pub mod parallel {
    //! Thin shim over rayon so the crate also builds without threads
    //! (wasm). Results never depend on the worker count: every parallel
    //! loop writes to index-addressed slots.

    #[cfg(feature = "parallel")]
    use rayon::prelude::*;

    #[cfg(feature = "parallel")]
    pub fn map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        (0..n).map(f).collect()
    }

    /// Calls `f(chunk_index, chunk)` on consecutive chunks of `out`.
    #[cfg(feature = "parallel")]
    pub fn for_chunks(out: &mut [f64], chunk: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
        out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    #[cfg(not(feature = "parallel"))]
    pub fn for_chunks(out: &mut [f64], chunk: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
        out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Fallible [`for_chunks`]; stops at an error.
    #[cfg(feature = "parallel")]
    pub fn try_for_chunks<E: Send>(
        out: &mut [f64],
        chunk: usize,
        f: impl Fn(usize, &mut [f64]) -> Result<(), E> + Sync + Send,
    ) -> Result<(), E> {
        out.par_chunks_mut(chunk).enumerate().try_for_each(|(i, c)| f(i, c))
    }

    #[cfg(not(feature = "parallel"))]
    pub fn try_for_chunks<E: Send>(
        out: &mut [f64],
        chunk: usize,
        f: impl Fn(usize, &mut [f64]) -> Result<(), E> + Sync + Send,
    ) -> Result<(), E> {
        out.chunks_mut(chunk).enumerate().try_for_each(|(i, c)| f(i, c))
    }

    /// Runs `f` on a pool with `workers` threads (`None`: the ambient pool).
    #[cfg(feature = "parallel")]
    pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
        match workers {
            None => f(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map(|pool| pool.install(f))
                .unwrap_or_else(|_| panic!("failed to build a pool with {n} workers")),
        }
    }

    #[cfg(not(feature = "parallel"))]
    pub fn with_workers<R: Send>(_workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, 1, |x| x.powi(15));
        assert_relative_eq!(v, 2f64.powi(16) / 16.0, max_relative = 1e-13);
        assert_relative_eq!(gl.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let ts = TanhSinh::default();
        // ∫_0^1 x^{-1/2} dx = 2
        let v = ts.integrate(0.0, 1.0, |_, da, _| da.powf(-0.5));
        assert_relative_eq!(v, 2.0, max_relative = 1e-10);
        let w = ts.integrate(0.0, 1.0, |_, _, db| db.ln());
        assert_relative_eq!(w, -1.0, max_relative = 1e-10);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = fit_line(&x, &y);
        assert_relative_eq!(f.slope, -2.0, max_relative = 1e-14);
        assert_relative_eq!(f.intercept, 3.0, max_relative = 1e-14);
        assert_relative_eq!(f.r_squared, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn directions_are_unit() {
        for d in 1..5 {
            for v in unit_directions(37, d) {
                assert_relative_eq!(norm(&v), 1.0, max_relative = 1e-12);
            }
        }
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }
}
