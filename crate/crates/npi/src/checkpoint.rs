//! Binary checkpoints of a ring-polymer state.
//!
//! Layout, all little-endian: magic `NPI1`, format version (u32), SHA-256 of
//! the system spec (32 bytes), time (f64), random-stream cursor (seed u64,
//! stream id u64, word position u128), then positions and momenta. Each array
//! is preceded by its rank (u32) and extents (u64 each) and stored row-major
//! as particle x bead x axis.

use std::fs;
use std::path::Path;

use npi_core::rng::{RandomStream, RngCursor};
use npi_core::types::{RingPolymerState, SystemSpec};
use sha2::{Digest, Sha256};

use crate::error::{NpiError, Result};

pub const MAGIC: &[u8; 4] = b"NPI1";
pub const FORMAT_VERSION: u32 = 1;

pub type SpecHash = [u8; 32];

/// Content hash of a system spec (SHA-256 of its JSON form).
pub fn spec_hash(spec: &SystemSpec) -> SpecHash {
    let json = serde_json::to_vec(spec).expect("system spec serializes");
    Sha256::digest(&json).into()
}

pub fn encode(state: &RingPolymerState, hash: &SpecHash) -> Vec<u8> {
    let (n, p, d) = (state.n_particles(), state.n_beads(), state.dimension());
    let mut out = Vec::with_capacity(96 + 2 * (28 + 8 * n * p * d));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(hash);
    out.extend_from_slice(&state.time.to_le_bytes());
    let c = state.rng.cursor();
    out.extend_from_slice(&c.seed.to_le_bytes());
    out.extend_from_slice(&c.stream_id.to_le_bytes());
    out.extend_from_slice(&c.word_pos.to_le_bytes());
    for array in [&state.positions, &state.momenta] {
        out.extend_from_slice(&3u32.to_le_bytes());
        for extent in [n, p, d] {
            out.extend_from_slice(&(extent as u64).to_le_bytes());
        }
        for i in 0..n {
            for j in 0..p {
                for a in 0..d {
                    out.extend_from_slice(&array[(j * n + i) * d + a].to_le_bytes());
                }
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| NpiError::Format(format!("file truncated while reading {what}")))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn array<const K: usize>(&mut self, what: &str) -> Result<[u8; K]> {
        Ok(self.take(K, what)?.try_into().expect("length checked"))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array(what)?))
    }
}

/// Decodes a checkpoint, returning the state and the spec hash it was written with.
pub fn decode(bytes: &[u8]) -> Result<(RingPolymerState, SpecHash)> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(NpiError::Format("missing NPI1 magic bytes".into()));
    }
    let version = r.u32("format version")?;
    if version != FORMAT_VERSION {
        return Err(NpiError::Version { found: version, expected: FORMAT_VERSION });
    }
    let hash: SpecHash = r.array("spec hash")?;
    let time = r.f64("time")?;
    let seed = r.u64("rng seed")?;
    let stream_id = r.u64("rng stream")?;
    let word_pos = u128::from_le_bytes(r.array("rng position")?);
    let rng = RandomStream::from_cursor(RngCursor { seed, stream_id, word_pos });
    let mut shape = None;
    let mut arrays = Vec::with_capacity(2);
    for what in ["positions", "momenta"] {
        if r.u32(what)? != 3 {
            return Err(NpiError::Format(format!("{what} must be a rank-3 array")));
        }
        let mut ext = [0usize; 3];
        for e in &mut ext {
            *e = usize::try_from(r.u64(what)?).map_err(|_| NpiError::Format(format!("{what} extent overflows")))?;
        }
        if shape.is_some_and(|s| s != ext) {
            return Err(NpiError::Format("positions and momenta differ in shape".into()));
        }
        let [n, p, d] = ext;
        if n == 0 || p == 0 || d == 0 {
            return Err(NpiError::Format(format!("{what} has an empty extent")));
        }
        let count = n
            .checked_mul(p)
            .and_then(|x| x.checked_mul(d))
            .ok_or_else(|| NpiError::Format("array too large".into()))?;
        let raw = r.take(count.checked_mul(8).ok_or_else(|| NpiError::Format("array too large".into()))?, what)?;
        let mut v = vec![0.0; count];
        let mut chunks = raw.chunks_exact(8);
        for i in 0..n {
            for j in 0..p {
                for a in 0..d {
                    let c = chunks.next().expect("length checked");
                    v[(j * n + i) * d + a] = f64::from_le_bytes(c.try_into().expect("8 bytes"));
                }
            }
        }
        shape = Some(ext);
        arrays.push(v);
    }
    if r.at != bytes.len() {
        return Err(NpiError::Format(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let [n, p, d] = shape.expect("two arrays read");
    let momenta = arrays.pop().expect("two arrays");
    let positions = arrays.pop().expect("two arrays");
    let mut state = RingPolymerState::zeros(n, p, d, rng);
    state.positions = positions;
    state.momenta = momenta;
    state.time = time;
    Ok((state, hash))
}

pub fn save_checkpoint(state: &RingPolymerState, spec: &SystemSpec, path: &Path) -> Result<()> {
    state.check_shape(spec)?;
    fs::write(path, encode(state, &spec_hash(spec))).map_err(|e| NpiError::io(path, e))
}

/// Loads a checkpoint without checking it against a spec.
pub fn load_checkpoint(path: &Path) -> Result<(RingPolymerState, SpecHash)> {
    let bytes = fs::read(path).map_err(|e| NpiError::io(path, e))?;
    decode(&bytes)
}

/// Loads a checkpoint and rejects it unless it was written for `spec`.
pub fn load_checkpoint_for(path: &Path, spec: &SystemSpec) -> Result<RingPolymerState> {
    let (state, hash) = load_checkpoint(path)?;
    if hash != spec_hash(spec) {
        return Err(NpiError::SpecMismatch);
    }
    state.check_shape(spec)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (RingPolymerState, SystemSpec) {
        let spec = SystemSpec::uniform(2, 1.0, 3, 10.0, 1.0);
        let mut s = RingPolymerState::zeros(2, 4, 3, RandomStream::new(5, 9));
        for (k, x) in s.positions.iter_mut().enumerate() {
            *x = k as f64 * 0.1 - 1.0;
        }
        s.momenta[7] = -0.0;
        s.momenta[3] = f64::MIN_POSITIVE;
        s.time = 12.5;
        s.rng.normal();
        (s, spec)
    }

    #[test]
    fn layout_is_particle_major() {
        let (s, spec) = sample();
        let bytes = encode(&s, &spec_hash(&spec));
        // first position entry after the header and the rank/extent words
        let first = 4 + 4 + 32 + 8 + 8 + 8 + 16 + 4 + 24;
        let at = |k: usize| f64::from_le_bytes(bytes[first + 8 * k..first + 8 * k + 8].try_into().unwrap());
        // (i=0, j=1, a=0) is the fourth entry of the file, stored at bead-major index (1*2+0)*3
        assert_eq!(at(3), s.position(0, 1)[0]);
        assert_eq!(at(12), s.position(1, 0)[0]);
    }

    #[test]
    fn trailing_and_truncated_bytes_rejected() {
        let (s, spec) = sample();
        let mut bytes = encode(&s, &spec_hash(&spec));
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(NpiError::Format(_))));
        bytes.truncate(bytes.len() - 9);
        assert!(matches!(decode(&bytes), Err(NpiError::Format(_))));
    }

    #[test]
    fn hash_depends_on_spec() {
        let (_, a) = sample();
        let mut b = a.clone();
        b.beta = 2.0;
        assert_ne!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a), spec_hash(&a.clone()));
    }
}
