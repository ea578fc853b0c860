//! Path serialization.
//!
//! Binary dump layout (all integers little-endian):
//!
//! ```text
//! magic   b"CUTP"
//! version u16 = 1
//! d       u8
//! start   d zigzag LEB128 varints
//! steps   LEB128 varint
//! body    one LEB128 varint per step: (dir_k - dir_{k-1}) mod 2d, dir_{-1} = 0
//! ```
//!
//! Direction codes are `0..2d`: axis `code / 2`, positive when `code` is even.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::walk::LatticePath;

pub const MAGIC: &[u8; 4] = b"CUTP";
pub const VERSION: u16 = 1;

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn get_varint(buf: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let byte = *buf
            .get(*pos)
            .ok_or_else(|| Error::Format("truncated varint".into()))?;
        *pos += 1;
        if shift >= 64 {
            return Err(Error::Format("varint overflow".into()));
        }
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
    }
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

pub fn encode_path<const D: usize>(path: &LatticePath<D>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + path.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(D as u8);
    for &c in &path.start().0 {
        put_varint(&mut out, zigzag(c));
    }
    put_varint(&mut out, path.len() as u64);
    let m = 2 * D as u8;
    let mut prev = 0u8;
    for dir in path.directions() {
        put_varint(&mut out, u64::from((dir + m - prev) % m));
        prev = dir;
    }
    out
}

pub fn decode_path<const D: usize>(buf: &[u8]) -> Result<LatticePath<D>> {
    if buf.len() < 7 || &buf[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([buf[4], buf[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    if usize::from(buf[6]) != D {
        return Err(Error::Format(format!("dimension {} does not match {D}", buf[6])));
    }
    let mut pos = 7;
    let mut start = [0i64; D];
    for c in &mut start {
        *c = unzigzag(get_varint(buf, &mut pos)?);
    }
    let steps = get_varint(buf, &mut pos)? as usize;
    let m = 2 * D as u64;
    let mut dirs = Vec::with_capacity(steps.min(buf.len()));
    let mut prev = 0u64;
    for _ in 0..steps {
        let delta = get_varint(buf, &mut pos)?;
        if delta >= m {
            return Err(Error::Format(format!("direction delta {delta} out of range")));
        }
        prev = (prev + delta) % m;
        dirs.push(prev as u8);
    }
    if pos != buf.len() {
        return Err(Error::Format("trailing bytes".into()));
    }
    LatticePath::from_directions(LatticePoint::new(start), &dirs)
}

pub fn write_path<const D: usize, W: Write>(path: &LatticePath<D>, mut w: W) -> std::io::Result<()> {
    w.write_all(&encode_path(path))
}

pub fn read_path<const D: usize, R: Read>(mut r: R) -> Result<LatticePath<D>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::Format(e.to_string()))?;
    decode_path(&buf)
}

/// CSV with one row per site: `t,x,y[,z]`, `t` in time units (`index / d`).
pub fn path_csv<const D: usize>(path: &LatticePath<D>) -> String {
    let mut s = String::from(if D == 2 { "t,x,y\n" } else { "t,x,y,z\n" });
    for (i, p) in path.sites().iter().enumerate() {
        s.push_str(&format!("{}", i as f64 / D as f64));
        for c in &p.0 {
            s.push(',');
            s.push_str(&c.to_string());
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::walk::sample_srw_fixed_steps;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_roundtrip(seed in any::<u64>(), steps in 1usize..400, x in -1000i64..1000, y in -1000i64..1000) {
            let path = sample_srw_fixed_steps(LatticePoint::<3>::new([x, y, -x]), steps, RngStream::new(seed, 0)).unwrap();
            let back: LatticePath<3> = decode_path(&encode_path(&path)).unwrap();
            prop_assert_eq!(back, path);
        }
    }

    #[test]
    fn header_layout() {
        let path = LatticePath::from_sites(vec![LatticePoint::<2>::new([0, 0]), LatticePoint::new([1, 0])]).unwrap();
        let b = encode_path(&path);
        assert_eq!(&b[..4], b"CUTP");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(b[6], 2);
        assert_eq!(&b[7..], &[0, 0, 1, 0]);
    }

    #[test]
    fn rejects_wrong_dimension_and_garbage() {
        let path = sample_srw_fixed_steps(LatticePoint::<2>::origin(), 5, RngStream::new(1, 1)).unwrap();
        let b = encode_path(&path);
        assert!(decode_path::<3>(&b).is_err());
        assert!(decode_path::<2>(&b[..b.len() - 1]).is_err());
        assert!(decode_path::<2>(b"NOPE\x01\x00\x02").is_err());
    }

    #[test]
    fn csv_rows() {
        let path = LatticePath::from_sites(vec![LatticePoint::<2>::new([0, 0]), LatticePoint::new([0, 1])]).unwrap();
        assert_eq!(path_csv(&path), "t,x,y\n0,0,0\n0.5,0,1\n");
    }
}
