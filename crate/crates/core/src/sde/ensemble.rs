use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::parallel;
use crate::sde::rng::{self, Lane};

/// `N` particles in ℝ^d with their clock and noise-stream state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    /// Row-major `N × d`.
    positions: Vec<f64>,
    t: f64,
    seed: u64,
    step: u64,
    /// Canonical stream key per particle; travels with the particle under
    /// relabelling.
    keys: Vec<u64>,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 || positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::Shape(format!(
                "{} coordinates do not form particles in dimension {dim}",
                positions.len()
            )));
        }
        let n = positions.len() / dim;
        Self::from_parts(positions, dim, 0.0, seed, 0, (0..n as u64).collect())
    }

    pub fn from_parts(
        positions: Vec<f64>,
        dim: usize,
        t: f64,
        seed: u64,
        step: u64,
        keys: Vec<u64>,
    ) -> Result<Self> {
        if dim == 0 || positions.is_empty() || positions.len() != keys.len() * dim {
            return Err(Error::Shape("positions, keys and dimension disagree".into()));
        }
        if let Some(k) = positions.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("positions", format!("coordinate {k} is not finite")));
        }
        Ok(ParticleEnsemble {
            dim,
            positions,
            t,
            seed,
            step,
            keys,
        })
    }

    /// Draws `n` i.i.d. particles; `sample` receives the particle's own
    /// initialisation stream.
    pub fn sample(
        n: usize,
        dim: usize,
        seed: u64,
        sample: impl Fn(&mut ChaCha8Rng, &mut [f64]) + Sync + Send,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N", "need at least one particle"));
        }
        let mut positions = vec![0.0; n * dim];
        parallel::for_chunks(&mut positions, dim, |i, x| {
            let mut r = rng::stream(seed, Lane::Init, i as u64, 0);
            sample(&mut r, x);
        });
        Self::new(positions, dim, seed)
    }

    /// I.i.d. `N(mean, variance·I)` particles.
    pub fn gaussian(n: usize, mean: &[f64], variance: f64, seed: u64) -> Result<Self> {
        let sd = variance.sqrt();
        let mean = mean.to_vec();
        Self::sample(n, mean.len(), seed, move |r, x| {
            for (k, v) in x.iter_mut().enumerate() {
                let z: f64 = r.sample(rand_distr::StandardNormal);
                *v = mean[k] + sd * z;
            }
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn advance(&mut self, dt: f64) {
        self.t += dt;
        self.step += 1;
    }

    /// Replaces the positions (same shape), keeping clock and streams.
    pub fn set_positions(&mut self, positions: Vec<f64>) -> Result<()> {
        if positions.len() != self.positions.len() {
            return Err(Error::Shape("position count changed".into()));
        }
        self.positions = positions;
        Ok(())
    }

    /// Relabels particles: new particle `k` is old particle `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("perm", "not a permutation of the particle labels"));
        }
        let d = self.dim;
        let mut positions = Vec::with_capacity(n * d);
        for &p in perm {
            positions.extend_from_slice(self.particle(p));
        }
        let keys = perm.iter().map(|&p| self.keys[p]).collect();
        Self::from_parts(positions, d, self.t, self.seed, self.step, keys)
    }

    /// Smallest pairwise distance and the pair realising it (`None` if N = 1).
    /// Sweep over particles sorted by their first coordinate; ties resolve to
    /// the lexicographically smallest `(i, j)`.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let d = self.dim;
        let x = &self.positions;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a * d].total_cmp(&x[b * d]).then(a.cmp(&b)));
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for (pos, &a) in order.iter().enumerate() {
            for &b in &order[pos + 1..] {
                let lead = x[b * d] - x[a * d];
                if lead * lead > best.2 {
                    break;
                }
                let mut r2 = 0.0;
                for k in 0..d {
                    let u = x[a * d + k] - x[b * d + k];
                    r2 += u * u;
                }
                let (i, j) = if a < b { (a, b) } else { (b, a) };
                if r2 < best.2 || (r2 == best.2 && (i, j) < (best.0, best.1)) {
                    best = (i, j, r2);
                }
            }
        }
        Some((best.0, best.1, best.2.sqrt()))
    }

    pub fn min_distance(&self) -> f64 {
        self.closest_pair().map_or(f64::INFINITY, |p| p.2)
    }

    /// Empirical per-axis mean and variance of coordinate `axis`.
    pub fn axis_moments(&self, axis: usize) -> (f64, f64) {
        let n = self.len() as f64;
        let mean = (0..self.len()).map(|i| self.particle(i)[axis]).sum::<f64>() / n;
        let var = (0..self.len())
            .map(|i| (self.particle(i)[axis] - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (mean, var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_validation() {
        assert!(ParticleEnsemble::new(vec![0.0; 3], 2, 0).is_err());
        assert!(ParticleEnsemble::new(vec![], 2, 0).is_err());
        assert!(ParticleEnsemble::new(vec![f64::NAN, 0.0], 2, 0).is_err());
        let e = ParticleEnsemble::new(vec![0.0, 0.0, 3.0, 4.0], 2, 0).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.min_distance(), 5.0);
    }

    #[test]
    fn permutation_moves_keys_with_particles() {
        let e = ParticleEnsemble::gaussian(5, &[0.0], 1.0, 9).unwrap();
        let p = e.permuted(&[4, 3, 2, 1, 0]).unwrap();
        assert_eq!(p.keys(), &[4, 3, 2, 1, 0]);
        assert_eq!(p.particle(0), e.particle(4));
        assert!(e.permuted(&[0, 0, 1, 2, 3]).is_err());
    }

    #[test]
    fn closest_pair_matches_brute_force() {
        for d in [1, 2, 3] {
            let e = ParticleEnsemble::gaussian(300, &vec![0.0; d], 1.0, d as u64).unwrap();
            let mut best = (0, 0, f64::INFINITY);
            for i in 0..300 {
                for j in i + 1..300 {
                    let r = crate::numerics::norm(
                        &(0..d).map(|k| e.particle(i)[k] - e.particle(j)[k]).collect::<Vec<_>>(),
                    );
                    if r < best.2 {
                        best = (i, j, r);
                    }
                }
            }
            assert_eq!(e.closest_pair(), Some(best));
        }
    }

    #[test]
    fn gaussian_sampling_is_reproducible() {
        let a = ParticleEnsemble::gaussian(100, &[1.0, 2.0], 0.5, 3).unwrap();
        let b = ParticleEnsemble::gaussian(100, &[1.0, 2.0], 0.5, 3).unwrap();
        assert_eq!(a, b);
        let (m, v) = a.axis_moments(1);
        assert!((m - 2.0).abs() < 0.3 && (v - 0.5).abs() < 0.25);
    }
}
