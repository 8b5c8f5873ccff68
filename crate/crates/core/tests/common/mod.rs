use meanfield::grid::GridDensity;
use meanfield::sde::ParticleEnsemble;

/// Three 2-D particles with non-contiguous keys.
pub fn fixture_ensemble() -> ParticleEnsemble {
    ParticleEnsemble::from_parts(vec![0.5, -1.25, 3.0, 0.1, -0.0, 2.0f64.sqrt()], 2, 0.75, 42, 7, vec![0, 1, 5]).unwrap()
}

/// Eight-cell 1-D density on `[−2, 2]` at `t = 1.5`.
pub fn fixture_grid() -> GridDensity {
    let mut g = GridDensity::new(1, 8, 2.0, vec![0.0, 0.0625, 0.125, 0.5, 0.5, 0.125, 0.0625, 0.0]).unwrap();
    g.set_t(1.5);
    g
}
