//! Versioned little-endian binary snapshot of an [`Instance`].
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "SRLB1" | ensemble u8 | has_sparsified u8
//! n u32 | p u32 | s u32 | d u32 | sigma f64 | gen_seed u64
//! support: s × u32
//! y: n × f64
//! rows: n × (count u32, count × (idx u32, val f64))
//! if has_sparsified:
//!   d_tilde u32 | mask_seed u64
//!   mask rows: n × (count u32, count × u32)
//!   x_tilde rows: n × (count u32, count × (idx u32, val f64))
//!   y_tilde: n × f64
//! ```

use std::io::{self, Read, Write};

use super::{DesignMatrix, Ensemble, Instance, ModelError, Sparsified, SupportSet};

pub const MAGIC: &[u8; 5] = b"SRLB1";

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad snapshot: {0}")]
    Format(String),
    #[error("bad snapshot payload: {0}")]
    Model(#[from] ModelError),
}

fn write_rows(w: &mut impl Write, rows: &[Vec<(u32, f64)>]) -> io::Result<()> {
    for row in rows {
        w.write_all(&(row.len() as u32).to_le_bytes())?;
        for &(j, v) in row {
            w.write_all(&j.to_le_bytes())?;
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn dump(instance: &Instance, w: &mut impl Write) -> io::Result<()> {
    let design = &instance.design;
    let (ens_tag, d) = match design.ensemble() {
        Ensemble::Dense => (0u8, 0usize),
        Ensemble::Sparse { d } => (1, d),
        Ensemble::Sparsified { d } => (2, d),
    };
    w.write_all(MAGIC)?;
    w.write_all(&[ens_tag, instance.sparsified.is_some() as u8])?;
    w.write_all(&(design.n() as u32).to_le_bytes())?;
    w.write_all(&(design.p() as u32).to_le_bytes())?;
    w.write_all(&(instance.beta_support.len() as u32).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&instance.sigma.to_le_bytes())?;
    w.write_all(&design.gen_seed().to_le_bytes())?;
    for &j in instance.beta_support.indices() {
        w.write_all(&j.to_le_bytes())?;
    }
    for &v in &instance.y {
        w.write_all(&v.to_le_bytes())?;
    }
    write_rows(w, design.rows())?;
    if let Some(sp) = &instance.sparsified {
        let d_tilde = match sp.x_tilde.ensemble() {
            Ensemble::Sparsified { d } => d,
            _ => 0,
        };
        w.write_all(&(d_tilde as u32).to_le_bytes())?;
        w.write_all(&sp.x_tilde.gen_seed().to_le_bytes())?;
        for row in &sp.mask_rows {
            w.write_all(&(row.len() as u32).to_le_bytes())?;
            for &j in row {
                w.write_all(&j.to_le_bytes())?;
            }
        }
        write_rows(w, sp.x_tilde.rows())?;
        for &v in &sp.y_tilde {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, SnapshotError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, SnapshotError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64, SnapshotError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_rows(r: &mut impl Read, n: usize, p: u32) -> Result<Vec<Vec<(u32, f64)>>, SnapshotError> {
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let count = read_u32(r)? as usize;
        if count > p as usize {
            return Err(SnapshotError::Format(format!("row length {count} exceeds p={p}")));
        }
        let mut row = Vec::with_capacity(count);
        for _ in 0..count {
            let j = read_u32(r)?;
            let v = read_f64(r)?;
            row.push((j, v));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load(r: &mut impl Read) -> Result<Instance, SnapshotError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::Format(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut tags = [0u8; 2];
    r.read_exact(&mut tags)?;
    let n = read_u32(r)? as usize;
    let p = read_u32(r)?;
    let s = read_u32(r)? as usize;
    let d = read_u32(r)? as usize;
    let sigma = read_f64(r)?;
    let gen_seed = read_u64(r)?;
    let ensemble = match tags[0] {
        0 => Ensemble::Dense,
        1 => Ensemble::Sparse { d },
        2 => Ensemble::Sparsified { d },
        t => return Err(SnapshotError::Format(format!("unknown ensemble tag {t}"))),
    };
    let mut support = Vec::with_capacity(s);
    for _ in 0..s {
        support.push(read_u32(r)?);
    }
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        y.push(read_f64(r)?);
    }
    let rows = read_rows(r, n, p)?;
    let design = DesignMatrix { n, p: p as usize, ensemble, gen_seed, rows };
    let beta_support = SupportSet::new(p as usize, support)?;
    let mut instance = Instance::new(design, beta_support, sigma, y)?;
    if tags[1] == 1 {
        let d_tilde = read_u32(r)? as usize;
        let mask_seed = read_u64(r)?;
        let mut mask_rows = Vec::with_capacity(n);
        for _ in 0..n {
            let count = read_u32(r)? as usize;
            let mut row = Vec::with_capacity(count);
            for _ in 0..count {
                row.push(read_u32(r)?);
            }
            mask_rows.push(row);
        }
        let rows = read_rows(r, n, p)?;
        let x_tilde = DesignMatrix {
            n,
            p: p as usize,
            ensemble: Ensemble::Sparsified { d: d_tilde },
            gen_seed: mask_seed,
            rows,
        };
        let mut y_tilde = Vec::with_capacity(n);
        for _ in 0..n {
            y_tilde.push(read_f64(r)?);
        }
        instance.sparsified = Some(Sparsified { mask_rows, x_tilde, y_tilde });
    }
    Ok(instance)
}
