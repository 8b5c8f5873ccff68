//! Binary snapshots of particle ensembles and grid densities.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "MFCK1" | version: u32 | kind: u8 | shape | payload: f64 × len (row-major)
//! kind 1, ensemble: n: u64, dim: u64, t: f64, seed: u64, step: u64, keys: u64 × n
//! kind 2, grid:     dim: u64, n: u64, half_width: f64, t: f64
//! ```

use std::path::Path;

use crate::grid::GridDensity;
use crate::sde::ParticleEnsemble;

pub const MAGIC: &[u8; 5] = b"MFCK1";
pub const VERSION: u32 = 1;
const KIND_ENSEMBLE: u8 = 1;
const KIND_GRID: u8 = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    Version(u32),
    #[error("unknown checkpoint kind {0}")]
    Kind(u8),
    #[error("truncated checkpoint: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated { offset: usize, needed: usize, available: usize },
    #[error("{0} trailing bytes after payload")]
    Trailing(usize),
    #[error("inconsistent checkpoint: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Ensemble(ParticleEnsemble),
    Grid(GridDensity),
}

impl Checkpoint {
    /// One-line description of kind, shape and time.
    pub fn describe(&self) -> String {
        match self {
            Checkpoint::Ensemble(e) => format!(
                "ensemble: N = {}, d = {}, t = {}, seed = {}, step = {}",
                e.len(),
                e.dim(),
                e.t(),
                e.seed(),
                e.step_count()
            ),
            Checkpoint::Grid(m) => format!(
                "grid density: d = {}, n = {} ({} cells), box = [-{hw}, {hw}]^{}, t = {}, mass = {}",
                m.dim(),
                m.n(),
                m.len(),
                m.dim(),
                m.t(),
                m.mass(),
                hw = m.half_width()
            ),
        }
    }
}

pub fn encode(c: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let payload = match c {
        Checkpoint::Ensemble(e) => {
            out.push(KIND_ENSEMBLE);
            out.extend_from_slice(&(e.len() as u64).to_le_bytes());
            out.extend_from_slice(&(e.dim() as u64).to_le_bytes());
            out.extend_from_slice(&e.t().to_le_bytes());
            out.extend_from_slice(&e.seed().to_le_bytes());
            out.extend_from_slice(&e.step_count().to_le_bytes());
            for k in e.keys() {
                out.extend_from_slice(&k.to_le_bytes());
            }
            e.positions()
        }
        Checkpoint::Grid(m) => {
            out.push(KIND_GRID);
            out.extend_from_slice(&(m.dim() as u64).to_le_bytes());
            out.extend_from_slice(&(m.n() as u64).to_le_bytes());
            out.extend_from_slice(&m.half_width().to_le_bytes());
            out.extend_from_slice(&m.t().to_le_bytes());
            m.values()
        }
    };
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], CheckpointError> {
        let available = self.bytes.len() - self.at;
        if available < k {
            return Err(CheckpointError::Truncated {
                offset: self.at,
                needed: k,
                available,
            });
        }
        let s = &self.bytes[self.at..self.at + k];
        self.at += k;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn count(&mut self) -> Result<usize, CheckpointError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| CheckpointError::Invalid(format!("count {v} overflows")))
    }

    fn f64s(&mut self, len: usize) -> Result<Vec<f64>, CheckpointError> {
        let bytes = len.checked_mul(8).ok_or_else(|| CheckpointError::Invalid("payload size overflows".into()))?;
        Ok(self.take(bytes)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(MAGIC.len()).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let kind = r.take(1)?[0];
    let invalid = |e: crate::Error| CheckpointError::Invalid(e.to_string());
    let c = match kind {
        KIND_ENSEMBLE => {
            let n = r.count()?;
            let dim = r.count()?;
            let t = r.f64()?;
            let seed = r.u64()?;
            let step = r.u64()?;
            let keys = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
            let len = n.checked_mul(dim).ok_or_else(|| CheckpointError::Invalid("shape overflows".into()))?;
            let positions = r.f64s(len)?;
            Checkpoint::Ensemble(ParticleEnsemble::from_parts(positions, dim, t, seed, step, keys).map_err(invalid)?)
        }
        KIND_GRID => {
            let dim = r.count()?;
            let n = r.count()?;
            let half_width = r.f64()?;
            let t = r.f64()?;
            if !(dim == 1 || dim == 2) {
                return Err(CheckpointError::Invalid(format!("grid dimension {dim}")));
            }
            let len = n.checked_pow(dim as u32).ok_or_else(|| CheckpointError::Invalid("shape overflows".into()))?;
            let values = r.f64s(len)?;
            Checkpoint::Grid(GridDensity::with_time(dim, n, half_width, values, t).map_err(invalid)?)
        }
        k => return Err(CheckpointError::Kind(k)),
    };
    if r.at != bytes.len() {
        return Err(CheckpointError::Trailing(bytes.len() - r.at));
    }
    Ok(c)
}

pub fn write_checkpoint(path: &Path, c: &Checkpoint) -> crate::Result<()> {
    std::fs::write(path, encode(c)).map_err(|e| crate::Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> crate::Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(decode(&bytes)?)
}
