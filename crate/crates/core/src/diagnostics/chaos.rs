use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::diagnostics::relative_entropy;
use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::numerics::{ball_volume, parallel};
use crate::sde::rng::{self, Lane};
use crate::sde::ParticleEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlEstimator {
    /// First-nearest-neighbour entropy estimate against exact reference
    /// log-densities.
    Knn,
    /// Gaussian kernel density estimate on the reference grid.
    KdeGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosEstimate {
    /// Particles per system.
    pub n: usize,
    /// Marginal order.
    pub k: usize,
    pub estimator: KlEstimator,
    pub value: f64,
    pub stderr: f64,
    /// Sample points entering the estimate.
    pub samples: usize,
}

impl ChaosEstimate {
    /// Estimates below this are reported as estimator failure.
    pub const NEGATIVE_TOLERANCE: f64 = -0.05;

    pub fn is_plausible(&self) -> bool {
        self.value >= Self::NEGATIVE_TOLERANCE
    }
}

pub const MIN_SAMPLES: usize = 100;
pub const BOOTSTRAP_RESAMPLES: usize = 32;

/// Euclidean distance from each point to its nearest other point.
pub fn nearest_neighbor_distances(points: &[f64], dim: usize) -> Vec<f64> {
    let n = points.len() / dim;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a * dim].total_cmp(&points[b * dim]).then(a.cmp(&b)));
    let first: Vec<f64> = order.iter().map(|&i| points[i * dim]).collect();
    let dist2 = |a: usize, b: usize| -> f64 {
        (0..dim).map(|c| (points[a * dim + c] - points[b * dim + c]).powi(2)).sum()
    };
    let by_rank = parallel::map(n, |r| {
        let i = order[r];
        let mut best = f64::INFINITY;
        for s in (r + 1)..n {
            if (first[s] - first[r]).powi(2) >= best {
                break;
            }
            best = best.min(dist2(i, order[s]));
        }
        for s in (0..r).rev() {
            if (first[r] - first[s]).powi(2) >= best {
                break;
            }
            best = best.min(dist2(i, order[s]));
        }
        best.sqrt()
    });
    let mut out = vec![0.0; n];
    for (r, &i) in order.iter().enumerate() {
        out[i] = by_rank[r];
    }
    out
}

fn bootstrap_mean_stderr(terms: &[f64], seed: u64) -> f64 {
    let m = terms.len();
    let means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|b| {
            let mut r = rng::stream(seed, Lane::Aux, 0xb0_07 + b as u64, 0);
            (0..m).map(|_| terms[r.random_range(0..m)]).sum::<f64>() / m as f64
        })
        .collect();
    spread(&means)
}

fn spread(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// k-marginal sample points: disjoint `k`-tuples of consecutive particles,
/// concatenated.
fn marginal_points(positions: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let n = positions.len() / dim;
    positions[..(n / k) * k * dim].to_vec()
}

fn knn_estimate(points: &[f64], dim: usize, k: usize, reference: &GridDensity, seed: u64) -> (f64, f64) {
    let big_d = dim * k;
    let m = points.len() / big_d;
    let rho = nearest_neighbor_distances(points, big_d);
    let constant = ball_volume(big_d).ln() + digamma(m as f64) - digamma(1.0);
    let terms: Vec<f64> = (0..m)
        .map(|i| {
            let log_q: f64 = (0..k)
                .map(|j| reference.log_interpolate(&points[i * big_d + j * dim..i * big_d + (j + 1) * dim]))
                .sum();
            -(big_d as f64) * rho[i].ln() - log_q
        })
        .collect();
    let value = terms.iter().sum::<f64>() / m as f64 - constant;
    (value, bootstrap_mean_stderr(&terms, seed))
}

/// Gaussian KDE with Silverman bandwidth, evaluated at the cell centres of
/// `grid` and renormalised.
pub fn kde_on_grid(points: &[f64], dim: usize, grid: &GridDensity) -> Result<GridDensity> {
    let m = points.len() / dim;
    let mut sd = 0.0;
    for c in 0..dim {
        let mean = (0..m).map(|i| points[i * dim + c]).sum::<f64>() / m as f64;
        sd += ((0..m).map(|i| (points[i * dim + c] - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0)).sqrt();
    }
    sd /= dim as f64;
    let h = sd * (4.0 / ((dim as f64 + 2.0) * m as f64)).powf(1.0 / (dim as f64 + 4.0));
    let (n, dx, l) = (grid.n(), grid.dx(), grid.half_width());
    let reach = (6.0 * h / dx).ceil() as isize;
    let mut values = vec![0.0; grid.len()];
    let mut w = vec![vec![0.0; (2 * reach + 1) as usize]; dim];
    let mut start = [0isize; 2];
    for i in 0..m {
        for c in 0..dim {
            let x = points[i * dim + c];
            let centre = ((x + l) / dx - 0.5).round() as isize;
            start[c] = centre - reach;
            for (o, wv) in w[c].iter_mut().enumerate() {
                let cell = start[c] + o as isize;
                let xc = -l + (cell as f64 + 0.5) * dx;
                *wv = if cell < 0 || cell >= n as isize { 0.0 } else { (-0.5 * ((xc - x) / h).powi(2)).exp() };
            }
        }
        if dim == 1 {
            for (o, wv) in w[0].iter().enumerate() {
                if *wv > 0.0 {
                    values[(start[0] + o as isize) as usize] += wv;
                }
            }
        } else {
            for (a, wa) in w[0].iter().enumerate() {
                if *wa == 0.0 {
                    continue;
                }
                let row = (start[0] + a as isize) as usize * n;
                for (b, wb) in w[1].iter().enumerate() {
                    if *wb > 0.0 {
                        values[row + (start[1] + b as isize) as usize] += wa * wb;
                    }
                }
            }
        }
    }
    grid.with_values(values)?.normalized()
}

fn kde_estimate(points: &[f64], dim: usize, reference: &GridDensity, seed: u64) -> Result<(f64, f64)> {
    let value = relative_entropy(&kde_on_grid(points, dim, reference)?, reference)?;
    let m = points.len() / dim;
    let boots = (0..BOOTSTRAP_RESAMPLES)
        .map(|b| {
            let mut r = rng::stream(seed, Lane::Aux, 0xb0_07 + b as u64, 1);
            let mut resampled = Vec::with_capacity(points.len());
            for _ in 0..m {
                let i = r.random_range(0..m);
                resampled.extend_from_slice(&points[i * dim..(i + 1) * dim]);
            }
            relative_entropy(&kde_on_grid(&resampled, dim, reference)?, reference)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((value, spread(&boots)))
}

/// `H(law of k particles | reference^{⊗k})` estimated from the particles of
/// independent replicas of one system (exchangeability makes every particle a
/// draw from the one-particle marginal).
pub fn marginal_kl_pooled(
    replicas: &[&ParticleEnsemble],
    reference: &GridDensity,
    estimator: KlEstimator,
    k: usize,
) -> Result<ChaosEstimate> {
    let first = replicas.first().ok_or(Error::TooFewSamples { got: 0, need: MIN_SAMPLES })?;
    let (dim, n) = (first.dim(), first.len());
    if dim != reference.dim() {
        return Err(Error::Shape("ensemble and reference dimensions differ".into()));
    }
    if !(k == 1 || k == 2) {
        return Err(Error::invalid("k", "marginal order must be 1 or 2"));
    }
    if estimator == KlEstimator::KdeGrid && k != 1 {
        return Err(Error::invalid("k", "the grid estimator handles one-particle marginals"));
    }
    let mut points = Vec::new();
    for e in replicas {
        if e.dim() != dim || e.len() != n {
            return Err(Error::Shape("replicas differ in shape".into()));
        }
        points.extend(marginal_points(e.positions(), dim, k));
    }
    let samples = points.len() / (dim * k);
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: samples, need: MIN_SAMPLES });
    }
    let seed = first.seed();
    let (value, stderr) = match estimator {
        KlEstimator::Knn => knn_estimate(&points, dim, k, reference, seed),
        KlEstimator::KdeGrid => kde_estimate(&points, dim, reference, seed)?,
    };
    Ok(ChaosEstimate {
        n,
        k,
        estimator,
        value,
        stderr,
        samples,
    })
}

pub fn marginal_kl(ensemble: &ParticleEnsemble, reference: &GridDensity, estimator: KlEstimator) -> Result<ChaosEstimate> {
    marginal_kl_pooled(&[ensemble], reference, estimator, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSampler;

    fn reference() -> GridDensity {
        GridDensity::gaussian(2, 128, 6.0, &[0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn nearest_neighbours_match_brute_force() {
        let e = ParticleEnsemble::gaussian(300, &[0.0, 0.0, 0.0], 1.0, 5).unwrap();
        let fast = nearest_neighbor_distances(e.positions(), 3);
        for i in 0..300 {
            let brute = (0..300)
                .filter(|&j| j != i)
                .map(|j| crate::numerics::norm(&e.particle(i).iter().zip(e.particle(j)).map(|(a, b)| a - b).collect::<Vec<_>>()))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(fast[i], brute);
        }
    }

    #[test]
    fn self_divergence_is_zero_within_error() {
        let m = reference();
        let sampler = GridSampler::new(&m).unwrap();
        let e = ParticleEnsemble::sample(10_000, 2, 11, |r, x| sampler.sample(r, x)).unwrap();
        let est = marginal_kl(&e, &m, KlEstimator::Knn).unwrap();
        assert!(est.value.abs() <= 3.0 * est.stderr, "{est:?}");
        assert!(est.stderr > 0.0 && est.stderr < 0.05);
    }

    #[test]
    fn shifted_gaussian_divergence() {
        let m = reference();
        let e = ParticleEnsemble::gaussian(10_000, &[1.0, 0.0], 1.0, 12).unwrap();
        let knn = marginal_kl(&e, &m, KlEstimator::Knn).unwrap();
        let kde = marginal_kl(&e, &m, KlEstimator::KdeGrid).unwrap();
        assert!((knn.value - 0.5).abs() < 0.05, "{knn:?}");
        assert!((kde.value - 0.5).abs() < 0.05, "{kde:?}");
        let combined = (knn.stderr.powi(2) + kde.stderr.powi(2)).sqrt();
        assert!((knn.value - kde.value).abs() <= 2.0 * combined, "{knn:?} {kde:?}");
    }

    #[test]
    fn too_few_samples_rejected() {
        let e = ParticleEnsemble::gaussian(64, &[0.0, 0.0], 1.0, 1).unwrap();
        assert!(matches!(
            marginal_kl(&e, &reference(), KlEstimator::Knn),
            Err(Error::TooFewSamples { got: 64, need: 100 })
        ));
        let f = ParticleEnsemble::gaussian(64, &[0.0, 0.0], 1.0, 2).unwrap();
        assert_eq!(marginal_kl_pooled(&[&e, &f], &reference(), KlEstimator::Knn, 1).unwrap().samples, 128);
    }

    #[test]
    fn pair_marginal_of_independent_particles() {
        let e = ParticleEnsemble::gaussian(8_000, &[0.0, 0.0], 1.0, 9).unwrap();
        let est = marginal_kl_pooled(&[&e], &reference(), KlEstimator::Knn, 2).unwrap();
        assert_eq!(est.samples, 4_000);
        assert!(est.value.abs() <= 3.0 * est.stderr + 0.02, "{est:?}");
    }
}
