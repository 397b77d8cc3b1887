//! `PMHD1` snapshot files.
//!
//! Layout: ASCII header lines `PMHD1`, `dims <nx1> <nx2> <nx3>`, `gamma <g>`,
//! `time <t>`, `END`, each terminated by `\n`; then little-endian `f64`
//! payload with the 8 conserved variables over the global active grid
//! (variable-major, `k-j-i`, `i` fastest) followed by the global staggered
//! `b1` (`nx3 x nx2 x (nx1+1)`), `b2` (`nx3 x (nx2+1) x nx1`) and `b3`
//! (`(nx3+1) x nx2 x nx1`) arrays.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Mesh, NVAR};
use crate::real::Real;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header line {line}: {msg}")]
    Header { line: usize, msg: String },
    #[error("payload has {got} bytes, expected {expected}")]
    Payload { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub gamma: f64,
    pub time: f64,
    /// `8 x nx3 x nx2 x nx1` conserved variables.
    pub u: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub b3: Vec<f64>,
}

impl Snapshot {
    pub fn from_mesh<T: Real>(mesh: &Mesh<T>) -> Self {
        let [n1, n2, n3] = mesh.cfg.nx;
        let mb = mesh.cfg.mb;
        let locate = |g: usize, d: usize| -> (usize, usize) {
            // Block coordinate and local offset; the closing face belongs to the last block.
            let nb = mesh.nblocks[d];
            let c = (g / mb[d]).min(nb - 1);
            (c, g - c * mb[d])
        };
        let mut u = Vec::with_capacity(NVAR * n1 * n2 * n3);
        for v in 0..NVAR {
            for k in 0..n3 {
                for j in 0..n2 {
                    for i in 0..n1 {
                        let (c1, l1) = locate(i, 0);
                        let (c2, l2) = locate(j, 1);
                        let (c3, l3) = locate(k, 2);
                        let b = &mesh.blocks[mesh.block_index([c1, c2, c3])];
                        u.push(b.state.u.get(v, b.ks + l3, b.js + l2, b.is + l1).as_f64());
                    }
                }
            }
        }
        let mut faces: [Vec<f64>; 3] = Default::default();
        for (d, out) in faces.iter_mut().enumerate() {
            let ext = [n1 + usize::from(d == 0), n2 + usize::from(d == 1), n3 + usize::from(d == 2)];
            out.reserve(ext.iter().product());
            for k in 0..ext[2] {
                for j in 0..ext[1] {
                    for i in 0..ext[0] {
                        let (c1, l1) = locate(i, 0);
                        let (c2, l2) = locate(j, 1);
                        let (c3, l3) = locate(k, 2);
                        let b = &mesh.blocks[mesh.block_index([c1, c2, c3])];
                        out.push(b.state.b.component(d).get(b.ks + l3, b.js + l2, b.is + l1).as_f64());
                    }
                }
            }
        }
        let [b1, b2, b3] = faces;
        Snapshot { dims: mesh.cfg.nx, gamma: mesh.cfg.gamma, time: mesh.time, u, b1, b2, b3 }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let [n1, n2, n3] = self.dims;
        let mut out = format!("PMHD1\ndims {n1} {n2} {n3}\ngamma {}\ntime {}\nEND\n", self.gamma, self.time).into_bytes();
        for x in self.u.iter().chain(&self.b1).chain(&self.b2).chain(&self.b3) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut pos = 0;
        let mut next_line = |line: usize| -> Result<&str, SnapshotError> {
            let rest = &bytes[pos..];
            let end = rest.iter().position(|&c| c == b'\n').ok_or(SnapshotError::Header { line, msg: "unterminated".into() })?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| SnapshotError::Header { line, msg: "not ASCII".into() })
        };
        let bad = |line: usize, msg: &str| SnapshotError::Header { line, msg: msg.to_string() };
        if next_line(1)? != "PMHD1" {
            return Err(bad(1, "missing PMHD1 magic"));
        }
        let dims_line = next_line(2)?;
        let mut parts = dims_line.split_whitespace();
        if parts.next() != Some("dims") {
            return Err(bad(2, "expected `dims`"));
        }
        let dims: Vec<usize> = parts.map(|p| p.parse().map_err(|_| bad(2, "bad dimension"))).collect::<Result<_, _>>()?;
        let dims: [usize; 3] = dims.try_into().map_err(|_| bad(2, "need three dimensions"))?;
        let scalar = |line: usize, text: &str, key: &str| -> Result<f64, SnapshotError> {
            let v = text.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| bad(line, &format!("expected `{key}`")))?;
            v.trim().parse().map_err(|_| bad(line, "bad number"))
        };
        let gamma = scalar(3, next_line(3)?, "gamma")?;
        let time = scalar(4, next_line(4)?, "time")?;
        if next_line(5)? != "END" {
            return Err(bad(5, "expected END"));
        }
        let [n1, n2, n3] = dims;
        let nu = NVAR * n1 * n2 * n3;
        let nb1 = (n1 + 1) * n2 * n3;
        let nb2 = n1 * (n2 + 1) * n3;
        let nb3 = n1 * n2 * (n3 + 1);
        let payload = &bytes[pos..];
        let expected = 8 * (nu + nb1 + nb2 + nb3);
        if payload.len() != expected {
            return Err(SnapshotError::Payload { expected, got: payload.len() });
        }
        let vals: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Snapshot {
            dims,
            gamma,
            time,
            u: vals[..nu].to_vec(),
            b1: vals[nu..nu + nb1].to_vec(),
            b2: vals[nu + nb1..nu + nb1 + nb2].to_vec(),
            b3: vals[nu + nb1 + nb2..].to_vec(),
        })
    }

    /// Bitwise equality of every stored value (NaN-safe).
    pub fn bitwise_eq(&self, other: &Snapshot) -> bool {
        let eq = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        self.dims == other.dims
            && self.gamma.to_bits() == other.gamma.to_bits()
            && self.time.to_bits() == other.time.to_bits()
            && eq(&self.u, &other.u)
            && eq(&self.b1, &other.b1)
            && eq(&self.b2, &other.b2)
            && eq(&self.b3, &other.b3)
    }

    /// Largest relative difference over the conserved variables, scaled by
    /// the largest magnitude of each variable.
    pub fn max_rel_diff(&self, other: &Snapshot) -> f64 {
        let n = self.u.len() / NVAR;
        let mut worst = 0.0f64;
        for v in 0..NVAR {
            let a = &self.u[v * n..(v + 1) * n];
            let b = &other.u[v * n..(v + 1) * n];
            let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                continue;
            }
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs() / scale);
            }
        }
        worst
    }
}

pub fn write_snapshot<T: Real>(path: &Path, mesh: &Mesh<T>) -> Result<Snapshot, SnapshotError> {
    let snap = Snapshot::from_mesh(mesh);
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&snap.to_bytes())?;
    f.flush()?;
    Ok(snap)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    Snapshot::parse(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshConfig};

    #[test]
    fn header_is_exact() {
        let cfg = MeshConfig { nx: [4, 2, 2], mb: [2, 2, 2], ..Default::default() };
        let mut m: Mesh<f64> = build_mesh(&cfg).unwrap();
        m.time = 0.25;
        let bytes = Snapshot::from_mesh(&m).to_bytes();
        let header = b"PMHD1\ndims 4 2 2\ngamma 1.6666666666666667\ntime 0.25\nEND\n";
        assert_eq!(&bytes[..header.len()], header);
        let n = 8 * 16 + 5 * 2 * 2 + 4 * 3 * 2 + 4 * 2 * 3;
        assert_eq!(bytes.len(), header.len() + 8 * n);
    }

    #[test]
    fn round_trip_file() {
        let cfg = MeshConfig { nx: [4, 4, 2], mb: [2, 4, 2], ..Default::default() };
        let mut m: Mesh<f64> = build_mesh(&cfg).unwrap();
        for (bi, b) in m.blocks.iter_mut().enumerate() {
            for (n, x) in b.state.u.as_mut_slice().iter_mut().enumerate() {
                *x = (n as f64).sin() + bi as f64;
            }
            for (n, x) in b.state.b.b1.as_mut_slice().iter_mut().enumerate() {
                *x = -(n as f64).cos();
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.pmhd");
        let written = write_snapshot(&p, &m).unwrap();
        let back = read_snapshot(&p).unwrap();
        assert!(written.bitwise_eq(&back));
        // global x1 index 2 is the first active cell of the second block
        let b = &m.blocks[1];
        assert_eq!(back.u[2], b.state.u.get(0, b.ks, b.js, b.is));
    }

    #[test]
    fn truncated_payload_rejected() {
        let m: Mesh<f64> = build_mesh(&MeshConfig::cube(2)).unwrap();
        let mut bytes = Snapshot::from_mesh(&m).to_bytes();
        bytes.pop();
        assert!(matches!(Snapshot::parse(&bytes), Err(SnapshotError::Payload { .. })));
        assert!(matches!(Snapshot::parse(b"PMHD2\n"), Err(SnapshotError::Header { line: 1, .. })));
    }
}
