//! Binary profile files.
//!
//! Layout, little-endian: `b"FNLS"`, `u32` version (1), `u64` N, eight `f64`
//! (a, b, lambda, zeta, beta, sigma, omega, c), then N `(re, im)` pairs of `f64`.
//! Snapshot files append the time as one trailing `f64`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ModelParams, WaveParams};
use crate::spectral::{ComplexField, Grid};

pub const MAGIC: &[u8; 4] = b"FNLS";
pub const VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 8 + 8 * 8;

#[derive(Debug, Clone)]
pub struct ProfileFile {
    pub field: ComplexField,
    pub params: ModelParams,
    pub wave: WaveParams,
    pub time: Option<f64>,
}

pub fn encode(file: &ProfileFile) -> Vec<u8> {
    let g = file.field.grid();
    let n = g.n();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let p = &file.params;
    let w = &file.wave;
    for v in [g.a(), g.b(), p.lambda, p.zeta, p.beta, p.sigma, w.omega, w.c] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in file.field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    if let Some(t) = file.time {
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], pos: usize) -> f64 {
    f64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("8-byte slice"))
}

pub fn decode(bytes: &[u8]) -> Result<ProfileFile> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile);
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice"));
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
    let n = usize::try_from(n).map_err(|_| Error::TruncatedFile)?;
    let h: Vec<f64> = (0..8).map(|i| f64_at(bytes, 16 + 8 * i)).collect();
    let payload = n.checked_mul(16).ok_or(Error::TruncatedFile)?;
    let body_end = HEADER_LEN + payload;
    let time = match bytes.len().checked_sub(body_end) {
        Some(0) => None,
        Some(8) => Some(f64_at(bytes, body_end)),
        _ => return Err(Error::TruncatedFile),
    };
    let grid = Grid::new(h[0], h[1], n)?;
    let values = (0..n)
        .map(|j| {
            let pos = HEADER_LEN + 16 * j;
            Complex64::new(f64_at(bytes, pos), f64_at(bytes, pos + 8))
        })
        .collect();
    Ok(ProfileFile {
        field: ComplexField::new(grid, values)?,
        params: ModelParams::new(h[2], h[3], h[4], h[5]),
        wave: WaveParams::boosted(h[6], h[7]),
        time,
    })
}

pub fn write_profile(path: impl AsRef<Path>, file: &ProfileFile) -> Result<()> {
    fs::write(path, encode(file))?;
    Ok(())
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<ProfileFile> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(time: Option<f64>) -> ProfileFile {
        let g = Grid::new(-3.5, 7.25, 16).unwrap();
        let field = ComplexField::from_fn(g, |x| Complex64::new(x.sin() / 3.0, (x * 1.7).cos() * 1e-300));
        ProfileFile {
            field,
            params: ModelParams::new(1.0, 1.0, 0.3, 1.5),
            wave: WaveParams::boosted(2.0, -0.5),
            time,
        }
    }

    #[test]
    fn round_trip_bitwise() {
        for t in [None, Some(0.125)] {
            let f = sample(t);
            let back = decode(&encode(&f)).unwrap();
            for (a, b) in f.field.values().iter().zip(back.field.values()) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
            assert_eq!(back.params, f.params);
            assert_eq!(back.wave, f.wave);
            assert_eq!(back.time, t);
            assert_eq!(back.field.grid().a(), -3.5);
        }
    }

    #[test]
    fn header_errors() {
        let bytes = encode(&sample(None));
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(Error::TruncatedFile)));
        assert!(matches!(decode(&bytes[..20]), Err(Error::TruncatedFile)));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::BadMagic)));
        let mut v2 = bytes;
        v2[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode(&v2), Err(Error::UnsupportedVersion(2))));
    }
}
