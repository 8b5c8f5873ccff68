use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DriftSpec;
use crate::numerics::parallel;
use crate::sde::ensemble::ParticleEnsemble;
use crate::sde::rng::{self, Lane};
use crate::sde::step::{collision_check, drift_field, rk4_step, Scheme, SdeConfig, StepReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Both sides receive the same Gaussian increments.
    Synchronous,
    /// Increments mirrored across the pair's difference direction until
    /// the pair meets.
    Reflection,
    /// Separate streams.
    Independent,
}

/// Relative merge threshold: pairs merge once their gap falls below this
/// fraction of their initial gap.
pub const DEFAULT_MERGE_FRACTION: f64 = 1e-4;

/// Two ensembles of equal shape whose particles are paired by index.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    first: ParticleEnsemble,
    second: ParticleEnsemble,
    coupling: Coupling,
    merge_threshold: Vec<f64>,
    merged_at: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoupledStepReport {
    pub first: StepReport,
    pub second: StepReport,
    /// Pair indices that met during this step.
    pub merged: Vec<usize>,
}

impl CoupledPair {
    pub fn new(first: ParticleEnsemble, second: ParticleEnsemble, coupling: Coupling) -> Result<Self> {
        if first.len() != second.len() || first.dim() != second.dim() {
            return Err(Error::Shape(format!(
                "coupled ensembles differ: {}×{} vs {}×{}",
                first.len(),
                first.dim(),
                second.len(),
                second.dim()
            )));
        }
        let n = first.len();
        let merge_threshold = (0..n)
            .map(|i| DEFAULT_MERGE_FRACTION * gap(first.particle(i), second.particle(i)))
            .collect();
        Ok(CoupledPair {
            first,
            second,
            coupling,
            merge_threshold,
            merged_at: vec![None; n],
        })
    }

    /// Absolute merge threshold for every pair.
    pub fn with_merge_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::invalid("merge_threshold", "must be positive"));
        }
        self.merge_threshold.iter_mut().for_each(|m| *m = threshold);
        Ok(self)
    }

    pub fn first(&self) -> &ParticleEnsemble {
        &self.first
    }

    pub fn second(&self) -> &ParticleEnsemble {
        &self.second
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// Meeting time of each pair (reflection coupling).
    pub fn merged_at(&self) -> &[Option<f64>] {
        &self.merged_at
    }

    pub fn gaps(&self) -> Vec<f64> {
        (0..self.first.len())
            .map(|i| gap(self.first.particle(i), self.second.particle(i)))
            .collect()
    }

    /// `E|X − Y|²` over pairs.
    pub fn mean_square_gap(&self) -> f64 {
        let g = self.gaps();
        g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64
    }
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// One coupled step of both ensembles, in place.
pub fn step_coupled(
    pair: &mut CoupledPair,
    drift: &DriftSpec,
    drift2: &DriftSpec,
    config: &SdeConfig,
) -> Result<CoupledStepReport> {
    config.validate(drift)?;
    config.validate(drift2)?;
    if drift.sigma != drift2.sigma && pair.coupling != Coupling::Independent {
        return Err(Error::invalid("sigma", "coupled drifts must share the diffusion coefficient"));
    }
    let mut report = CoupledStepReport::default();
    collision_check(&pair.first, drift, config, &mut report.first)?;
    collision_check(&pair.second, drift2, config, &mut report.second)?;
    let d = pair.first.dim();
    let n = pair.first.len();
    let dt = config.dt;

    let (mut x_next, mut y_next) = match config.scheme {
        Scheme::Rk4Deterministic => (
            rk4_step(drift, pair.first.t(), pair.first.positions(), d, dt)?,
            rk4_step(drift2, pair.second.t(), pair.second.positions(), d, dt)?,
        ),
        Scheme::EulerMaruyama => {
            let mut bx = vec![0.0; n * d];
            let mut by = vec![0.0; n * d];
            drift_field(drift, pair.first.t(), pair.first.positions(), d, &mut bx)?;
            drift_field(drift2, pair.second.t(), pair.second.positions(), d, &mut by)?;
            let scale = (2.0 * drift.sigma * drift.sigma * dt).sqrt();
            let scale2 = (2.0 * drift2.sigma * drift2.sigma * dt).sqrt();
            let (f, s) = (&pair.first, &pair.second);
            let coupling = pair.coupling;
            let merged = &pair.merged_at;
            // both sides in one row of 2d numbers per pair
            let mut rows = vec![0.0; n * 2 * d];
            parallel::for_chunks(&mut rows, 2 * d, |i, row| {
                let (xo, yo) = row.split_at_mut(d);
                rng::normals(f.seed(), Lane::Noise, f.keys()[i], f.step_count(), xo);
                match coupling {
                    Coupling::Synchronous => yo.copy_from_slice(xo),
                    Coupling::Independent => {
                        rng::normals(s.seed(), Lane::Partner, s.keys()[i], s.step_count(), yo)
                    }
                    Coupling::Reflection => {
                        yo.copy_from_slice(xo);
                        if merged[i].is_none() {
                            let (a, b) = (f.particle(i), s.particle(i));
                            let g = gap(a, b);
                            if g > 0.0 {
                                let proj: f64 = (0..d).map(|k| (a[k] - b[k]) / g * xo[k]).sum();
                                for k in 0..d {
                                    yo[k] -= 2.0 * proj * (a[k] - b[k]) / g;
                                }
                            }
                        }
                    }
                }
                let (a, b) = (f.particle(i), s.particle(i));
                for k in 0..d {
                    xo[k] = a[k] + bx[i * d + k] * dt + scale * xo[k];
                    yo[k] = b[k] + by[i * d + k] * dt + scale2 * yo[k];
                }
            });
            let mut x_next = vec![0.0; n * d];
            let mut y_next = vec![0.0; n * d];
            for i in 0..n {
                x_next[i * d..(i + 1) * d].copy_from_slice(&rows[i * 2 * d..i * 2 * d + d]);
                y_next[i * d..(i + 1) * d].copy_from_slice(&rows[i * 2 * d + d..(i + 1) * 2 * d]);
            }
            (x_next, y_next)
        }
    };

    if pair.coupling == Coupling::Reflection {
        let var = 8.0 * drift.sigma * drift.sigma * dt;
        for i in 0..n {
            if pair.merged_at[i].is_some() {
                continue;
            }
            let (a, b) = (pair.first.particle(i), pair.second.particle(i));
            let g0 = gap(a, b);
            // signed gaps along the pre-step difference direction
            let before = g0;
            let after: f64 = if g0 > 0.0 {
                (0..d)
                    .map(|k| (a[k] - b[k]) / g0 * (x_next[i * d + k] - y_next[i * d + k]))
                    .sum()
            } else {
                0.0
            };
            let new_gap = gap(&x_next[i * d..(i + 1) * d], &y_next[i * d..(i + 1) * d]);
            let met = if new_gap < pair.merge_threshold[i] || after <= 0.0 {
                true
            } else if var > 0.0 {
                let u: f64 = rng::stream(
                    pair.first.seed(),
                    Lane::Aux,
                    pair.first.keys()[i],
                    pair.first.step_count(),
                )
                .random();
                u < (-2.0 * before * after / var).exp()
            } else {
                false
            };
            if met {
                pair.merged_at[i] = Some(pair.first.t() + dt);
                report.merged.push(i);
            }
        }
        for i in 0..n {
            if pair.merged_at[i].is_some() {
                let (src, dst) = (i * d, (i + 1) * d);
                let row = x_next[src..dst].to_vec();
                y_next[src..dst].copy_from_slice(&row);
            }
        }
    }
    if x_next.iter().chain(&y_next).any(|v| !v.is_finite()) {
        return Err(Error::invalid("dt", "coupled step produced a non-finite coordinate; reduce dt"));
    }
    pair.first.set_positions(std::mem::take(&mut x_next))?;
    pair.second.set_positions(std::mem::take(&mut y_next))?;
    pair.first.advance(dt);
    pair.second.advance(dt);
    Ok(report)
}

/// Synchronous coupling of an explicit drift with the pair gap carried as
/// `(ln|Δ|, Δ/|Δ|)`. Once `|Δ|` falls below `switch·(1 + |X|)` the gap is
/// propagated along the linearised flow, so contraction can be followed far
/// below the floating-point resolution of the positions.
#[derive(Debug, Clone)]
pub struct SynchronousGap {
    pub ensemble: ParticleEnsemble,
    log_gap: Vec<f64>,
    direction: Vec<f64>,
    switch: f64,
}

impl SynchronousGap {
    /// Partners start at `second`.
    pub fn new(first: ParticleEnsemble, second: &ParticleEnsemble, switch: f64) -> Result<Self> {
        if first.len() != second.len() || first.dim() != second.dim() {
            return Err(Error::Shape("coupled ensembles differ in shape".into()));
        }
        let d = first.dim();
        let mut log_gap = Vec::with_capacity(first.len());
        let mut direction = Vec::with_capacity(first.len() * d);
        for i in 0..first.len() {
            let (a, b) = (first.particle(i), second.particle(i));
            let g = gap(a, b);
            if g == 0.0 {
                return Err(Error::invalid("second", format!("pair {i} starts at zero gap")));
            }
            log_gap.push(g.ln());
            direction.extend((0..d).map(|k| (b[k] - a[k]) / g));
        }
        Ok(SynchronousGap {
            ensemble: first,
            log_gap,
            direction,
            switch,
        })
    }

    pub fn log_gaps(&self) -> &[f64] {
        &self.log_gap
    }

    /// `ln E|X − Y|²`, evaluated as a log-mean-exp.
    pub fn log_mean_square_gap(&self) -> f64 {
        let top = self.log_gap.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self.log_gap.iter().map(|l| (2.0 * (l - top)).exp()).sum();
        2.0 * top + (s / self.log_gap.len() as f64).ln()
    }

    /// Partner positions `X + Δ` (rounded to double precision).
    pub fn partner_positions(&self) -> Vec<f64> {
        let d = self.ensemble.dim();
        let x = self.ensemble.positions();
        (0..x.len())
            .map(|j| x[j] + self.log_gap[j / d].exp() * self.direction[j])
            .collect()
    }

    pub fn step(&mut self, drift: &DriftSpec, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let d = self.ensemble.dim();
        let n = self.ensemble.len();
        let t = self.ensemble.t();
        let scale = (2.0 * drift.sigma * drift.sigma * dt).sqrt();
        let (seed, step) = (self.ensemble.seed(), self.ensemble.step_count());
        let keys = self.ensemble.keys().to_vec();
        let x = self.ensemble.positions().to_vec();
        let switch = self.switch;
        let (lg, dir) = (&self.log_gap, &self.direction);
        // row: next X (d), next direction (d), next ln gap (1)
        let mut rows = vec![0.0; n * (2 * d + 1)];
        parallel::try_for_chunks(&mut rows, 2 * d + 1, |i, row| -> Result<()> {
            let xi = &x[i * d..(i + 1) * d];
            let v = &dir[i * d..(i + 1) * d];
            let mut noise = vec![0.0; d];
            if scale > 0.0 {
                rng::normals(seed, Lane::Noise, keys[i], step, &mut noise);
            }
            let mut bx = vec![0.0; d];
            drift.eval_free(t, xi, &mut bx)?;
            let g = lg[i].exp();
            let size = 1.0 + xi.iter().map(|u| u * u).sum::<f64>().sqrt();
            let mut w = vec![0.0; d];
            let log_scale;
            if g > switch * size {
                let y: Vec<f64> = (0..d).map(|k| xi[k] + g * v[k]).collect();
                let mut by = vec![0.0; d];
                drift.eval_free(t, &y, &mut by)?;
                for k in 0..d {
                    let xn = xi[k] + bx[k] * dt + scale * noise[k];
                    let yn = y[k] + by[k] * dt + scale * noise[k];
                    w[k] = yn - xn;
                }
                log_scale = 0.0;
            } else {
                // directional derivative of b along v by central differences
                let h = 1e-6 * size;
                let xp: Vec<f64> = (0..d).map(|k| xi[k] + h * v[k]).collect();
                let xm: Vec<f64> = (0..d).map(|k| xi[k] - h * v[k]).collect();
                let mut bp = vec![0.0; d];
                let mut bm = vec![0.0; d];
                drift.eval_free(t, &xp, &mut bp)?;
                drift.eval_free(t, &xm, &mut bm)?;
                for k in 0..d {
                    w[k] = v[k] + dt * (bp[k] - bm[k]) / (2.0 * h);
                }
                log_scale = lg[i];
            }
            let len = w.iter().map(|u| u * u).sum::<f64>().sqrt();
            for k in 0..d {
                row[k] = xi[k] + bx[k] * dt + scale * noise[k];
                row[d + k] = if len > 0.0 { w[k] / len } else { v[k] };
            }
            row[2 * d] = log_scale + len.ln();
            Ok(())
        })?;
        let mut xn = vec![0.0; n * d];
        for i in 0..n {
            let row = &rows[i * (2 * d + 1)..(i + 1) * (2 * d + 1)];
            xn[i * d..(i + 1) * d].copy_from_slice(&row[..d]);
            self.direction[i * d..(i + 1) * d].copy_from_slice(&row[d..2 * d]);
            self.log_gap[i] = row[2 * d];
        }
        if xn.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dt", "step produced a non-finite coordinate; reduce dt"));
        }
        self.ensemble.set_positions(xn)?;
        self.ensemble.advance(dt);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou() -> DriftSpec {
        DriftSpec::linear(1.0, 1.0).unwrap()
    }

    #[test]
    fn synchronous_identical_start_stays_identical() {
        let a = ParticleEnsemble::gaussian(50, &[0.0, 0.0], 1.0, 1).unwrap();
        let mut p = CoupledPair::new(a.clone(), a, Coupling::Synchronous).unwrap();
        for _ in 0..100 {
            step_coupled(&mut p, &ou(), &ou(), &SdeConfig::euler(0.01)).unwrap();
        }
        assert_eq!(p.first().positions(), p.second().positions());
    }

    #[test]
    fn synchronous_linear_gap_decays_exactly() {
        let a = ParticleEnsemble::gaussian(20, &[0.0], 1.0, 1).unwrap();
        let shifted: Vec<f64> = a.positions().iter().map(|v| v + 0.5).collect();
        let b = ParticleEnsemble::new(shifted, 1, 99).unwrap();
        let mut p = CoupledPair::new(a, b, Coupling::Synchronous).unwrap();
        let dt = 1e-3;
        for _ in 0..1000 {
            step_coupled(&mut p, &ou(), &ou(), &SdeConfig::euler(dt)).unwrap();
        }
        let expect = 0.5 * (1.0 - dt).powi(1000);
        for g in p.gaps() {
            assert!((g - expect).abs() < 1e-12);
            assert!((g / (0.5 * (-1.0f64).exp()) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn reflection_meeting_law_for_linear_drift() {
        // Δ = X − Y solves dΔ = −Δ dt + 2√2 dB; by the time change of the
        // OU process, P[τ ≤ t] = erfc(Δ₀ / (2√2 · √(2A))) with A = (e^{2t} − 1)/2.
        let n = 10_000;
        let a = ParticleEnsemble::new(vec![0.5; n], 1, 11).unwrap();
        let b = ParticleEnsemble::new(vec![-0.5; n], 1, 12).unwrap();
        let mut p = CoupledPair::new(a, b, Coupling::Reflection).unwrap();
        let dt = 1e-3;
        for _ in 0..1000 {
            step_coupled(&mut p, &ou(), &ou(), &SdeConfig::euler(dt)).unwrap();
        }
        let met = p.merged_at().iter().filter(|m| m.is_some()).count() as f64 / n as f64;
        let big_a = ((2.0f64).exp() - 1.0) / 2.0;
        let exact = statrs::function::erf::erfc(1.0 / (2.0 * 2f64.sqrt() * (2.0 * big_a).sqrt()));
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((met - exact).abs() < 3.0 * se, "{met} vs {exact} ± {se}");
        // merged pairs stay together
        for (i, m) in p.merged_at().iter().enumerate() {
            if m.is_some() {
                assert_eq!(p.first().particle(i), p.second().particle(i));
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = ParticleEnsemble::new(vec![0.0; 4], 2, 0).unwrap();
        let b = ParticleEnsemble::new(vec![0.0; 6], 2, 0).unwrap();
        assert!(CoupledPair::new(a, b, Coupling::Synchronous).is_err());
    }

    #[test]
    fn tangent_gap_follows_linear_contraction_below_resolution() {
        let a = ParticleEnsemble::gaussian(10, &[0.0], 1.0, 3).unwrap();
        let b = ParticleEnsemble::new(a.positions().iter().map(|v| v + 1.0).collect(), 1, 0).unwrap();
        let mut s = SynchronousGap::new(a, &b, 1e-6).unwrap();
        let dt = 1e-2;
        for _ in 0..5000 {
            s.step(&ou(), dt).unwrap();
        }
        // gap = (1 − dt)^{5000}, about e^{−50}, far below double resolution of X
        let expect = 5000.0 * (1.0 - dt).ln();
        for l in s.log_gaps() {
            assert!((l - expect).abs() < 1e-6, "{l} vs {expect}");
        }
        assert!((s.log_mean_square_gap() - 2.0 * expect).abs() < 1e-6);
    }
}
