mod common;

use meanfield::io::{decode, encode, read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
use meanfield::sde::ParticleEnsemble;
use proptest::prelude::*;

const ENSEMBLE: &[u8] = include_bytes!("fixtures/ensemble.mfck");
const GRID: &[u8] = include_bytes!("fixtures/grid.mfck");

#[test]
fn encoder_reproduces_frozen_bytes() {
    assert_eq!(encode(&Checkpoint::Ensemble(common::fixture_ensemble())), ENSEMBLE);
    assert_eq!(encode(&Checkpoint::Grid(common::fixture_grid())), GRID);
}

#[test]
fn frozen_bytes_decode_to_fixtures() {
    match decode(ENSEMBLE).unwrap() {
        Checkpoint::Ensemble(e) => {
            let want = common::fixture_ensemble();
            assert_eq!(e, want);
            // −0.0 survives bit-exactly
            assert_eq!(e.positions()[4].to_bits(), (-0.0f64).to_bits());
        }
        other => panic!("{}", other.describe()),
    }
    assert_eq!(decode(GRID).unwrap(), Checkpoint::Grid(common::fixture_grid()));
}

#[test]
fn header_fields_sit_at_documented_offsets() {
    assert_eq!(&ENSEMBLE[..5], b"MFCK1");
    assert_eq!(u32::from_le_bytes(ENSEMBLE[5..9].try_into().unwrap()), 1);
    assert_eq!(ENSEMBLE[9], 1);
    assert_eq!(u64::from_le_bytes(ENSEMBLE[10..18].try_into().unwrap()), 3);
    assert_eq!(u64::from_le_bytes(ENSEMBLE[18..26].try_into().unwrap()), 2);
    assert_eq!(f64::from_le_bytes(ENSEMBLE[26..34].try_into().unwrap()), 0.75);
    assert_eq!(GRID[9], 2);
    assert_eq!(f64::from_le_bytes(GRID[26..34].try_into().unwrap()), 2.0);
    assert_eq!(GRID.len(), 42 + 8 * 8);
}

#[test]
fn corruption_is_reported() {
    let mut bad = ENSEMBLE.to_vec();
    bad[0] = b'X';
    assert!(matches!(decode(&bad), Err(CheckpointError::BadMagic)));
    let mut bad = ENSEMBLE.to_vec();
    bad[5] = 9;
    assert!(matches!(decode(&bad), Err(CheckpointError::Version(9))));
    assert!(matches!(decode(&ENSEMBLE[..ENSEMBLE.len() - 3]), Err(CheckpointError::Truncated { .. })));
    let mut long = GRID.to_vec();
    long.push(0);
    assert!(matches!(decode(&long), Err(CheckpointError::Trailing(1))));
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.mfck");
    let c = Checkpoint::Ensemble(common::fixture_ensemble());
    write_checkpoint(&path, &c).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), ENSEMBLE);
    assert_eq!(read_checkpoint(&path).unwrap(), c);
}

proptest! {
    #[test]
    fn random_ensembles_round_trip(
        dim in 1usize..4,
        n in 1usize..20,
        seed in any::<u64>(),
        step in any::<u64>(),
        t in -1e6f64..1e6,
        raw in proptest::collection::vec(-1e300f64..1e300, 80),
    ) {
        let positions = raw[..n * dim].to_vec();
        let keys = (0..n as u64).map(|k| k * 3 + 1).collect();
        let e = ParticleEnsemble::from_parts(positions, dim, t, seed, step, keys).unwrap();
        let c = Checkpoint::Ensemble(e);
        let bytes = encode(&c);
        prop_assert_eq!(decode(&bytes).unwrap(), c);
    }
}
