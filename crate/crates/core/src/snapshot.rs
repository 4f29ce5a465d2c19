//! Binary checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic     8 bytes  "HYDSNAP\0"
//! version   u8       1
//! nx ny nz  3 x u32
//! h         f64
//! params    6 x f64  r1 r2 r3 h f0 epsilon
//! time      f64
//! steps     u64
//! parity    3 x u8   v1 v2 T
//! coeffs    3 blocks of nx*ny*nz (re f64, im f64)
//! crc32     u32      over every preceding byte
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Grid3, Parity, SpectralField3D};
use crate::state::{Params, State};

pub const MAGIC: &[u8; 8] = b"HYDSNAP\0";
pub const VERSION: u8 = 1;

const HEADER_LEN: usize = 8 + 1 + 12 + 8 + 48 + 8 + 8 + 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub state: State,
    /// Steps taken by the run that wrote the snapshot.
    pub steps: u64,
}

pub fn encode(state: &State, steps: u64) -> Vec<u8> {
    let g = state.grid();
    let p = &state.params;
    let mut buf = Vec::with_capacity(HEADER_LEN + 3 * 16 * g.len() + 4);
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    for n in [g.nx(), g.ny(), g.nz()] {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in [g.h(), p.r1, p.r2, p.r3, p.h, p.f0, p.epsilon, state.time] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&steps.to_le_bytes());
    for f in [&state.v1, &state.v2, &state.temperature] {
        buf.push(f.parity().tag());
    }
    for f in [&state.v1, &state.v2, &state.temperature] {
        for c in f.coeffs() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Integrity("snapshot truncated".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::Integrity(format!(
            "snapshot too short ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Integrity("bad magic bytes".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::Integrity("checksum mismatch".into()));
    }
    let mut r = Reader {
        bytes: body,
        pos: 8,
    };
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::Integrity(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let (nx, ny, nz) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let gh = r.f64()?;
    let params = Params {
        r1: r.f64()?,
        r2: r.f64()?,
        r3: r.f64()?,
        h: r.f64()?,
        f0: r.f64()?,
        epsilon: r.f64()?,
    };
    let time = r.f64()?;
    let steps = r.u64()?;
    let grid = Grid3::new(nx, ny, nz, gh).map_err(|e| Error::Integrity(e.to_string()))?;
    params
        .validate()
        .map_err(|e| Error::Integrity(e.to_string()))?;
    let mut parities = [Parity::None; 3];
    for p in &mut parities {
        *p = Parity::from_tag(r.u8()?).ok_or_else(|| Error::Integrity("bad parity tag".into()))?;
    }
    let expected = HEADER_LEN + 3 * 16 * grid.len();
    if body.len() != expected {
        return Err(Error::Integrity(format!(
            "snapshot body has {} bytes, expected {expected}",
            body.len()
        )));
    }
    let mut fields = Vec::with_capacity(3);
    for parity in parities {
        let mut coeffs = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            coeffs.push(Complex64::new(r.f64()?, r.f64()?));
        }
        fields.push(SpectralField3D::new(grid, coeffs, parity)?);
    }
    let temperature = fields.pop().expect("3 fields");
    let v2 = fields.pop().expect("3 fields");
    let v1 = fields.pop().expect("3 fields");
    Ok(Snapshot {
        state: State {
            v1,
            v2,
            temperature,
            params,
            time,
        },
        steps,
    })
}

/// Writes through a temporary file and renames, so readers never see a
/// partially written snapshot.
pub fn write_snapshot(path: &Path, state: &State, steps: u64) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(state, steps)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::PhysicalField3D;
    use crate::state::make_state;

    fn state() -> State {
        let g = Grid3::new(8, 4, 6, 0.7).unwrap();
        let p = Params {
            r1: 1.1,
            r2: 2.2,
            r3: 3.3,
            h: 0.7,
            f0: -0.4,
            epsilon: 1e-3,
        };
        let v1 = PhysicalField3D::from_fn(g, |x, y, z| {
            (2.0 * PI * y).sin() + (PI * z / 0.7).cos() * x.cos()
        });
        let t = PhysicalField3D::from_fn(g, |x, _, z| (PI * z / 0.7).sin() * (2.0 * PI * x).cos());
        let z = PhysicalField3D::zeros(g);
        make_state([&v1, &z], &t, p).unwrap().at_time(0.123)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = state();
        let back = decode(&encode(&s, 42)).unwrap();
        assert_eq!(back.steps, 42);
        assert_eq!(back.state.time.to_bits(), s.time.to_bits());
        for (a, b) in [
            (&back.state.v1, &s.v1),
            (&back.state.v2, &s.v2),
            (&back.state.temperature, &s.temperature),
        ] {
            assert_eq!(a.parity(), b.parity());
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&state(), 1);
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 5] ^= 0x10;
        assert!(matches!(decode(&flipped), Err(Error::Integrity(_))));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 9]),
            Err(Error::Integrity(_))
        ));
        assert!(matches!(decode(&bytes[..10]), Err(Error::Integrity(_))));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode(&magic), Err(Error::Integrity(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        write_snapshot(&path, &state(), 7).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.state, state());
        let err = read_snapshot(&dir.path().join("missing.bin")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
