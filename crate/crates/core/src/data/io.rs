//! Binary snapshot container and CSV export.
//!
//! Layout (all integers `u64` and all floats `f64`, little-endian, unless
//! noted):
//!
//! ```text
//! magic        8 bytes  "COEFSNAP"
//! version      u32      1
//! dim          u32
//! M, n_master, Q, exactness_degree, points_per_dim, n_faces
//! face_len     n_faces × u64
//! noise_level  f64
//! rng_seed     u64
//! filtered     u8
//! sections     u8       bit 0: u_t, bit 1: boundary ∇u, bit 2: interior ∇u and ∂²u
//! padding      6 bytes  zero
//! times        M
//! master_times n_master
//! interior     Q × dim points, then Q weights
//! faces        per face: normal (dim), points (len × dim), weights (len)
//! values       M × Q interior, then M × B boundary
//! u_t          M × Q, then M × B                     (bit 0)
//! grad_b       M × B × dim                           (bit 1)
//! grad_i, d2_i M × Q × dim each                      (bit 2)
//! ```
//!
//! Matrices are row-major in the order listed.

use std::fmt::Write as _;
use std::io::{Read, Write};

use super::{DerivativeEstimates, SnapshotSet};
use crate::error::{Error, Result};
use crate::quadrature::{BoundaryRule, Face, QuadratureRule};

const MAGIC: &[u8; 8] = b"COEFSNAP";
const VERSION: u32 = 1;
const SECTION_TIME: u8 = 1;
const SECTION_GRAD_BOUNDARY: u8 = 2;
const SECTION_INTERIOR: u8 = 4;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u64(&mut self, v: usize) -> Result<()> {
        Ok(self.inner.write_all(&(v as u64).to_le_bytes())?)
    }

    fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) -> Result<()> {
        for v in vs {
            self.inner.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated snapshot file: {e}")))?;
        Ok(b)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.bytes()?);
        // Guards allocations against corrupt headers.
        if v > 1 << 40 {
            return Err(Error::Format(format!("implausible count {v}")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
        (0..rows).map(|_| self.f64s(cols)).collect()
    }

    fn tensor(&mut self, rows: usize, cols: usize, dim: usize) -> Result<Vec<Vec<Vec<f64>>>> {
        (0..rows).map(|_| self.matrix(cols, dim)).collect()
    }
}

/// Writes the snapshot set and whatever derivative sections are present.
pub fn write_snapshots<W: Write>(out: W, s: &SnapshotSet, derivs: Option<&DerivativeEstimates>) -> Result<()> {
    s.validate()?;
    let dim = s.dim();
    let (m, q, b) = (s.n_times(), s.interior.len(), s.boundary.len());
    let mut w = Writer { inner: out };
    w.inner.write_all(MAGIC)?;
    w.inner.write_all(&VERSION.to_le_bytes())?;
    w.inner.write_all(&(dim as u32).to_le_bytes())?;
    for v in [
        m,
        s.master_times.len(),
        q,
        s.interior.exactness_degree(),
        s.interior.points_per_dim(),
        s.boundary.faces().len(),
    ] {
        w.u64(v)?;
    }
    for f in s.boundary.faces() {
        w.u64(f.points.len())?;
    }
    w.f64s(&[s.noise_level])?;
    w.inner.write_all(&s.rng_seed.to_le_bytes())?;

    let d = derivs.cloned().unwrap_or_default();
    let time = d.u_t_interior.as_ref().zip(d.u_t_boundary.as_ref());
    let interior = d.grad_interior.as_ref().zip(d.hess_diag_interior.as_ref());
    let mut sections = 0u8;
    if time.is_some() {
        sections |= SECTION_TIME;
    }
    if d.grad_boundary.is_some() {
        sections |= SECTION_GRAD_BOUNDARY;
    }
    if interior.is_some() {
        sections |= SECTION_INTERIOR;
    }
    w.inner.write_all(&[s.filtered as u8, sections, 0, 0, 0, 0, 0, 0])?;

    w.f64s(&s.times)?;
    w.f64s(&s.master_times)?;
    w.f64s(s.interior.points().iter().flatten())?;
    w.f64s(s.interior.weights())?;
    for f in s.boundary.faces() {
        w.f64s(&f.normal)?;
        w.f64s(f.points.iter().flatten())?;
        w.f64s(&f.weights)?;
    }
    w.f64s(s.interior_values.iter().flatten())?;
    w.f64s(s.boundary_values.iter().flatten())?;

    let check = |rows: usize, cols: usize, ok: bool| -> Result<()> {
        if ok && rows == m {
            Ok(())
        } else {
            Err(Error::Dimension(format!("derivative section does not match {m} × {cols}")))
        }
    };
    if let Some((ti, tb)) = time {
        check(ti.len(), q, ti.iter().all(|r| r.len() == q))?;
        check(tb.len(), b, tb.iter().all(|r| r.len() == b))?;
        w.f64s(ti.iter().flatten())?;
        w.f64s(tb.iter().flatten())?;
    }
    if let Some(g) = &d.grad_boundary {
        check(g.len(), b, g.iter().all(|r| r.len() == b && r.iter().all(|v| v.len() == dim)))?;
        w.f64s(g.iter().flatten().flatten())?;
    }
    if let Some((g, h)) = interior {
        for t in [g, h] {
            check(t.len(), q, t.iter().all(|r| r.len() == q && r.iter().all(|v| v.len() == dim)))?;
            w.f64s(t.iter().flatten().flatten())?;
        }
    }
    w.inner.flush()?;
    Ok(())
}

/// Reads a container written by [`write_snapshots`].
pub fn read_snapshots<R: Read>(input: R) -> Result<(SnapshotSet, DerivativeEstimates)> {
    let mut r = Reader { inner: input };
    if &r.bytes::<8>()? != MAGIC {
        return Err(Error::Format("not a snapshot file".into()));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let dim = u32::from_le_bytes(r.bytes()?) as usize;
    if !(1..=2).contains(&dim) {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let m = r.u64()?;
    let n_master = r.u64()?;
    let q = r.u64()?;
    let exactness = r.u64()?;
    let per_dim = r.u64()?;
    let n_faces = r.u64()?;
    let face_len = (0..n_faces).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let noise_level = r.f64()?;
    let rng_seed = u64::from_le_bytes(r.bytes()?);
    let flags = r.bytes::<8>()?;
    let filtered = flags[0] != 0;
    let sections = flags[1];

    let times = r.f64s(m)?;
    let master_times = r.f64s(n_master)?;
    let points = r.matrix(q, dim)?;
    let weights = r.f64s(q)?;
    let interior = QuadratureRule::new(points, weights, exactness, per_dim);
    let mut faces = Vec::with_capacity(n_faces);
    for &len in &face_len {
        let normal = r.f64s(dim)?;
        let points = r.matrix(len, dim)?;
        let weights = r.f64s(len)?;
        faces.push(Face {
            points,
            weights,
            normal,
        });
    }
    let boundary = BoundaryRule::new(faces);
    let b = boundary.len();
    let interior_values = r.matrix(m, q)?;
    let boundary_values = r.matrix(m, b)?;

    let mut d = DerivativeEstimates::default();
    if sections & SECTION_TIME != 0 {
        d.u_t_interior = Some(r.matrix(m, q)?);
        d.u_t_boundary = Some(r.matrix(m, b)?);
    }
    if sections & SECTION_GRAD_BOUNDARY != 0 {
        d.grad_boundary = Some(r.tensor(m, b, dim)?);
    }
    if sections & SECTION_INTERIOR != 0 {
        d.grad_interior = Some(r.tensor(m, q, dim)?);
        d.hess_diag_interior = Some(r.tensor(m, q, dim)?);
    }
    let mut rest = Vec::new();
    r.inner.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rest.len())));
    }
    let s = SnapshotSet {
        times,
        master_times,
        interior,
        interior_values,
        boundary,
        boundary_values,
        noise_level,
        rng_seed,
        filtered,
    };
    s.validate()?;
    Ok((s, d))
}

/// One row per observation: `t, x[, y], u, kind` with `kind` either
/// `interior` or `boundary`.
pub fn snapshots_csv(s: &SnapshotSet) -> String {
    let dim = s.dim();
    let mut out = String::from("t,x");
    if dim == 2 {
        out.push_str(",y");
    }
    out.push_str(",u,kind\n");
    let boundary = s.boundary.points();
    for (m, &t) in s.times.iter().enumerate() {
        let rows = s
            .interior
            .points()
            .iter()
            .zip(&s.interior_values[m])
            .map(|(p, v)| (p, v, "interior"))
            .chain(boundary.iter().zip(&s.boundary_values[m]).map(|(p, v)| (p, v, "boundary")));
        for (p, v, kind) in rows {
            let _ = write!(out, "{}", fmt_f64(t));
            for x in p {
                let _ = write!(out, ",{}", fmt_f64(*x));
            }
            let _ = writeln!(out, ",{},{kind}", fmt_f64(*v));
        }
    }
    out
}
