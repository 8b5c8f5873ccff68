use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::numerics::parallel;

/// `h(x)` with its gradient written into the buffer.
pub type TestFn = Arc<dyn Fn(&[f64], &mut [f64]) -> f64 + Send + Sync>;

/// Test functions for the functional-inequality scans.
#[derive(Clone)]
pub enum TestFunctionFamily {
    /// Probabilists' Hermite polynomials `He_k(x_a)`, `1 ≤ k ≤ k_max`, per axis.
    Hermite { k_max: usize },
    /// `exp(λ e·x/2)` along the axes (and diagonals in 2-D).
    ExponentialTilts { lambdas: Vec<f64> },
    /// `(1 − |x − c|²/w²)₊²`.
    CompactBumps { centers: Vec<Vec<f64>>, widths: Vec<f64> },
    Custom(Vec<TestFn>),
    Union(Vec<TestFunctionFamily>),
}

impl fmt::Debug for TestFunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunctionFamily::Hermite { k_max } => write!(f, "Hermite {{ k_max: {k_max} }}"),
            TestFunctionFamily::ExponentialTilts { lambdas } => write!(f, "ExponentialTilts {lambdas:?}"),
            TestFunctionFamily::CompactBumps { centers, widths } => {
                write!(f, "CompactBumps {{ centers: {centers:?}, widths: {widths:?} }}")
            }
            TestFunctionFamily::Custom(v) => write!(f, "Custom({} members)", v.len()),
            TestFunctionFamily::Union(v) => f.debug_tuple("Union").field(v).finish(),
        }
    }
}

fn hermite(k: usize, x: f64) -> (f64, f64) {
    // He_{k+1} = x He_k − k He_{k−1}, He_k' = k He_{k−1}
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    (cur, k as f64 * prev)
}

fn directions(dim: usize) -> Vec<[f64; 2]> {
    if dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![[1.0, 0.0], [0.0, 1.0], [s, s], [s, -s], [-1.0, 0.0], [0.0, -1.0], [-s, -s], [-s, s]]
    }
}

impl TestFunctionFamily {
    pub fn members(&self, dim: usize) -> Vec<TestFn> {
        let mut out: Vec<TestFn> = Vec::new();
        match self {
            TestFunctionFamily::Hermite { k_max } => {
                for axis in 0..dim {
                    for k in 1..=*k_max {
                        out.push(Arc::new(move |x, g| {
                            g.iter_mut().for_each(|v| *v = 0.0);
                            let (h, dh) = hermite(k, x[axis]);
                            g[axis] = dh;
                            h
                        }));
                    }
                }
            }
            TestFunctionFamily::ExponentialTilts { lambdas } => {
                for &l in lambdas {
                    for e in directions(dim) {
                        out.push(Arc::new(move |x, g| {
                            let proj: f64 = x.iter().zip(&e).map(|(a, b)| a * b).sum();
                            let h = (0.5 * l * proj).exp();
                            for (gi, ei) in g.iter_mut().zip(&e) {
                                *gi = 0.5 * l * ei * h;
                            }
                            h
                        }));
                    }
                }
            }
            TestFunctionFamily::CompactBumps { centers, widths } => {
                for c in centers {
                    for &w in widths {
                        let c = c.clone();
                        out.push(Arc::new(move |x, g| {
                            let u2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (w * w);
                            if u2 >= 1.0 {
                                g.iter_mut().for_each(|v| *v = 0.0);
                                return 0.0;
                            }
                            let s = 1.0 - u2;
                            for ((gi, a), b) in g.iter_mut().zip(x).zip(&c) {
                                *gi = -4.0 * s * (a - b) / (w * w);
                            }
                            s * s
                        }));
                    }
                }
            }
            TestFunctionFamily::Custom(v) => out.extend(v.iter().cloned()),
            TestFunctionFamily::Union(v) => {
                for f in v {
                    out.extend(f.members(dim));
                }
            }
        }
        out
    }

    pub fn union(self, other: TestFunctionFamily) -> TestFunctionFamily {
        TestFunctionFamily::Union(vec![self, other])
    }
}

/// Optimising member of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub value: f64,
    pub member: usize,
    pub admissible: usize,
}

/// Grid moments of a member: `(∫h², ∫h² ln h², ∫h, ∫|∇h|²)` against `μ`.
fn moments(mu: &GridDensity, h: &TestFn) -> [f64; 4] {
    let dim = mu.dim();
    let mut g = [0.0; 2];
    let mut acc = [0.0; 4];
    for k in 0..mu.len() {
        let w = mu.values()[k];
        if w == 0.0 {
            continue;
        }
        let x = mu.point(k);
        let v = h(&x[..dim], &mut g[..dim]);
        let v2 = v * v;
        acc[0] += w * v2;
        if v2 > 0.0 {
            acc[1] += w * v2 * v2.ln();
        }
        acc[2] += w * v;
        acc[3] += w * g[..dim].iter().map(|a| a * a).sum::<f64>();
    }
    acc.map(|a| a * mu.cell_volume())
}

const GRADIENT_FLOOR: f64 = 1e-14;

fn scan(mu: &GridDensity, family: &TestFunctionFamily, ratio: impl Fn(&[f64; 4]) -> Option<f64> + Sync + Send) -> Result<ScanResult> {
    let members = family.members(mu.dim());
    let values = parallel::map(members.len(), |i| ratio(&moments(mu, &members[i])));
    let mut best: Option<ScanResult> = None;
    let admissible = values.iter().filter(|v| v.is_some()).count();
    for (i, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|b| v > b.value) {
                best = Some(ScanResult { value: v, member: i, admissible });
            }
        }
    }
    best.ok_or_else(|| Error::invalid("family", "no admissible test function"))
}

/// Lower bound on the optimal `C` in `H ≤ C·I`:
/// `max Ent_μ(h²) / (4∫|∇h|²dμ)` over the family.
pub fn lsi_scan(mu: &GridDensity, family: &TestFunctionFamily) -> Result<ScanResult> {
    scan(mu, family, |m| {
        let [z, hl, _, grad] = *m;
        if !(z > 0.0) {
            return None;
        }
        let grad = grad / z;
        if grad < GRADIENT_FLOOR {
            return None;
        }
        // Ent(h²) for h normalised to ∫h²dμ = 1
        let ent = hl / z - z.ln();
        Some(ent.max(0.0) / (4.0 * grad))
    })
}

/// Lower bound on the Poincaré constant: `max Var_μ(f)/∫|∇f|²dμ`.
pub fn poincare_scan(mu: &GridDensity, family: &TestFunctionFamily) -> Result<ScanResult> {
    let mass = mu.mass();
    scan(mu, family, move |m| {
        let [z, _, mean, grad] = *m;
        if !(z > 0.0) {
            return None;
        }
        let grad = grad / z;
        if grad < GRADIENT_FLOOR {
            return None;
        }
        let var = 1.0 - (mean * mean / mass) / z;
        Some(var / grad)
    })
}
