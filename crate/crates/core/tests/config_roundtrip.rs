use std::path::PathBuf;

use meanfield::diagnostics::KlEstimator;
use meanfield::io::{parse_config, read_config, ConfigError, RunConfig};
use proptest::prelude::*;

fn positive() -> impl Strategy<Value = Option<f64>> {
    proptest::option::of(prop_oneof![1e-12f64..1e6, Just(1e-4), Just(0.1 + 0.2)])
}

fn nonnegative() -> impl Strategy<Value = Option<f64>> {
    proptest::option::of(prop_oneof![0.0f64..1e3, Just(0.0)])
}

prop_compose! {
    fn configs()(
        scenario in "[a-z_]{1,24}",
        particles in proptest::option::of(2usize..1_000_000),
        dt in positive(),
        t_end in positive(),
        grid_n in proptest::option::of((3u32..12).prop_map(|k| 1usize << k)),
        half_width in positive(),
        eps in positive(),
        sigma in nonnegative(),
        kappa in positive(),
        strength in nonnegative(),
        seed in proptest::option::of(0..=i64::MAX as u64),
        workers in proptest::option::of(1usize..64),
        out_dir in "[a-z0-9/_.-]{1,20}",
        emit_plots in any::<bool>(),
        estimator in proptest::option::of(prop_oneof![Just(KlEstimator::Knn), Just(KlEstimator::KdeGrid)]),
    ) -> RunConfig {
        RunConfig {
            particles, dt, t_end, grid_n, half_width, eps, sigma, kappa, strength, seed, workers,
            out_dir: PathBuf::from(out_dir),
            emit_plots,
            estimator,
            ..RunConfig::new(&scenario)
        }
    }
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(c in configs()) {
        let text = c.to_toml();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_toml(), text);
    }
}

#[test]
fn file_with_comments_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "# entropy study\nscenario = \"vortex_entropy_decay\"\ngrid_n = 64 # coarse\ndt = 5e-4\nworkers = 2\n",
    )
    .unwrap();
    let c = read_config(&path).unwrap();
    assert_eq!(c.grid_n, Some(64));
    assert_eq!(c.overrides().dt, Some(5e-4));
    assert_eq!(c.workers, Some(2));
    assert!(matches!(read_config(&dir.path().join("missing.toml")), Err(ConfigError::Read { .. })));
}
