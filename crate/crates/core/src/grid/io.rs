//! Field snapshots on disk.
//!
//! Binary layout, all little-endian:
//!
//! | offset | type | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | u64  | stored time levels                        |
//! | 8      | u64  | radial nodes                              |
//! | 16     | f64  | t_start, t_end, r_max, h, lambda          |
//! | 56     | f64  | p                                         |
//! | 64     | u64  | kind (0 forward, 1 transformed)           |
//! | 72     | u64  | stride (steps per stored level)           |
//! | 80     | f64  | support edge in t − r (NaN when unknown)  |
//! | 88     | f64  | χ payload, row-major (level, node)        |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{FieldKind, GridSpec, SpacetimeField};
use crate::error::{Error, Result};

const HEADER_BYTES: usize = 88;

impl SpacetimeField {
    /// One row per (level, node): `t,r,phi,chi`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut body = String::from("t,r,phi,chi\n");
        for i in 0..self.levels() {
            let t = self.level_time(i);
            let phi = self.phi_row(i);
            for j in 0..self.nodes() {
                let r = self.spec.radius(j);
                body.push_str(&format!("{t},{r},{},{}\n", phi[j], self.values[[i, j]]));
            }
            out.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
            body.clear();
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_BYTES + 8 * self.values.len());
        buf.extend_from_slice(&(self.levels() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.nodes() as u64).to_le_bytes());
        for x in [
            self.spec.t_start,
            self.spec.t_end,
            self.spec.r_max,
            self.spec.h,
            self.spec.lambda,
            self.p,
        ] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        let kind: u64 = match self.kind {
            FieldKind::Forward => 0,
            FieldKind::Transformed => 1,
        };
        buf.extend_from_slice(&kind.to_le_bytes());
        buf.extend_from_slice(&(self.stride as u64).to_le_bytes());
        buf.extend_from_slice(&self.support_edge.unwrap_or(f64::NAN).to_le_bytes());
        for v in self.values.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Format("field header truncated".into()));
        }
        let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().expect("8 bytes") };
        let u = |k: usize| u64::from_le_bytes(word(k));
        let f = |k: usize| f64::from_le_bytes(word(k));
        let levels = u(0) as usize;
        let nodes = u(1) as usize;
        let spec = GridSpec {
            t_start: f(2),
            t_end: f(3),
            r_max: f(4),
            h: f(5),
            lambda: f(6),
        };
        let p = f(7);
        let kind = match u(8) {
            0 => FieldKind::Forward,
            1 => FieldKind::Transformed,
            other => return Err(Error::Format(format!("unknown field kind {other}"))),
        };
        let stride = u(9) as usize;
        let edge = f(10);
        spec.validate()?;
        if nodes != spec.nodes() || stride == 0 || levels != spec.steps() / stride + 1 {
            return Err(Error::Format("field dimensions disagree with grid".into()));
        }
        let payload = &bytes[HEADER_BYTES..];
        if payload.len() != 8 * levels * nodes {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                8 * levels * nodes,
                payload.len()
            )));
        }
        let data: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let values = Array2::from_shape_vec((levels, nodes), data)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(SpacetimeField {
            spec,
            stride,
            values,
            p,
            kind,
            support_edge: (!edge.is_nan()).then_some(edge),
        })
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
