//! Plain-text parameter dumps.
//!
//! ```text
//! dualfeat-checkpoint v1
//! tensors <count>
//! tensor <index> <rows> <cols>
//! <row 0 values, space separated>
//! ...
//! ```
//!
//! Values use Rust's shortest round-trip `f64` formatting, so a dump read back
//! reproduces every parameter bit for bit. Tensors appear in the model's
//! [`Parameters`] order.

use std::io::{BufRead, Write};

use super::layers::Parameters;
use super::tensor::Tensor2;
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "dualfeat-checkpoint v1";

pub fn write_tensors<W: Write>(mut w: W, tensors: &[&Tensor2]) -> std::io::Result<()> {
    writeln!(w, "{CHECKPOINT_HEADER}")?;
    writeln!(w, "tensors {}", tensors.len())?;
    for (i, t) in tensors.iter().enumerate() {
        writeln!(w, "tensor {i} {} {}", t.rows, t.cols)?;
        for r in 0..t.rows {
            let line: Vec<String> = t.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_tensors<R: BufRead>(r: R) -> Result<Vec<Tensor2>> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::Checkpoint(e.to_string())),
            None => Err(Error::Checkpoint(format!(
                "unexpected end of file, expected {what}"
            ))),
        }
    };
    if next("header")?.trim() != CHECKPOINT_HEADER {
        return Err(Error::Checkpoint("missing header".into()));
    }
    let count_line = next("tensor count")?;
    let count: usize = count_line
        .strip_prefix("tensors ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Checkpoint(format!("bad tensor count line {count_line:?}")))?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let head = next("tensor header")?;
        let fields: Vec<&str> = head.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            ["tensor", idx, rows, cols] => idx
                .parse::<usize>()
                .ok()
                .filter(|&idx| idx == i)
                .and(rows.parse::<usize>().ok().zip(cols.parse::<usize>().ok())),
            _ => None,
        };
        let (rows, cols) =
            parsed.ok_or_else(|| Error::Checkpoint(format!("bad tensor header {head:?}")))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = next("tensor row")?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Checkpoint(format!("bad value {tok:?} in tensor {i}")))?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Checkpoint(format!(
                    "tensor {i}: row has wrong width"
                )));
            }
        }
        out.push(Tensor2::from_vec(rows, cols, data)?);
    }
    Ok(out)
}

pub fn save<P: Parameters, W: Write>(model: &P, w: W) -> std::io::Result<()> {
    write_tensors(w, &model.tensors())
}

/// Overwrites `model`'s tensors from a dump with matching shapes.
pub fn load<P: Parameters, R: BufRead>(model: &mut P, r: R) -> Result<()> {
    let tensors = read_tensors(r)?;
    let mut dst = model.tensors_mut();
    if dst.len() != tensors.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} tensors, model has {}",
            tensors.len(),
            dst.len()
        )));
    }
    for (i, (d, s)) in dst.iter_mut().zip(&tensors).enumerate() {
        if d.shape() != s.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor {i}: shape {:?} does not match model {:?}",
                s.shape(),
                d.shape()
            )));
        }
    }
    for (d, s) in dst.into_iter().zip(tensors) {
        *d = s;
    }
    Ok(())
}
