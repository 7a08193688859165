//! Linear operators appearing in problem statements.
//!
//! Besides plain dense matrices, identities, zero blocks and column
//! embeddings are represented symbolically so that stacked formulations such
//! as `[A 0]` and `[0 I]` never materialize large dense blocks.

use nalgebra::{DMatrix, DVectorView, DVectorViewMut};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOp", into = "RawOp")]
pub enum LinearOp {
    Dense(DMatrix<f64>),
    Identity(usize),
    Zero { rows: usize, cols: usize },
    /// `x -> inner * x[col_offset .. col_offset + inner.cols()]` on vectors
    /// of length `total_cols`.
    Embed { inner: Box<LinearOp>, col_offset: usize, total_cols: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum RawOp {
    Dense { shape: [usize; 2], data: Vec<f64> },
    Identity { identity: usize },
    Zero { zeros: [usize; 2] },
    Embed { embed: Box<LinearOp>, col_offset: usize, total_cols: usize },
}

impl TryFrom<RawOp> for LinearOp {
    type Error = Error;

    fn try_from(r: RawOp) -> Result<Self> {
        match r {
            RawOp::Dense { shape, data } => LinearOp::dense_row_major(shape[0], shape[1], &data),
            RawOp::Identity { identity } => Ok(LinearOp::Identity(identity)),
            RawOp::Zero { zeros } => Ok(LinearOp::Zero { rows: zeros[0], cols: zeros[1] }),
            RawOp::Embed { embed, col_offset, total_cols } => LinearOp::embed(*embed, col_offset, total_cols),
        }
    }
}

impl From<LinearOp> for RawOp {
    fn from(op: LinearOp) -> Self {
        match op {
            LinearOp::Dense(m) => {
                let (r, c) = m.shape();
                let mut data = Vec::with_capacity(r * c);
                for i in 0..r {
                    for j in 0..c {
                        data.push(m[(i, j)]);
                    }
                }
                RawOp::Dense { shape: [r, c], data }
            }
            LinearOp::Identity(n) => RawOp::Identity { identity: n },
            LinearOp::Zero { rows, cols } => RawOp::Zero { zeros: [rows, cols] },
            LinearOp::Embed { inner, col_offset, total_cols } => RawOp::Embed { embed: inner, col_offset, total_cols },
        }
    }
}

impl LinearOp {
    pub fn dense_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        check_len("dense matrix data", rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(LinearOp::Dense(DMatrix::from_row_slice(rows, cols, data)))
    }

    pub fn embed(inner: LinearOp, col_offset: usize, total_cols: usize) -> Result<Self> {
        if col_offset + inner.cols() > total_cols {
            return Err(invalid(format!(
                "embedded block with {} columns at offset {col_offset} exceeds {total_cols} columns",
                inner.cols()
            )));
        }
        Ok(LinearOp::Embed { inner: Box::new(inner), col_offset, total_cols })
    }

    pub fn rows(&self) -> usize {
        match self {
            LinearOp::Dense(m) => m.nrows(),
            LinearOp::Identity(n) => *n,
            LinearOp::Zero { rows, .. } => *rows,
            LinearOp::Embed { inner, .. } => inner.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearOp::Dense(m) => m.ncols(),
            LinearOp::Identity(n) => *n,
            LinearOp::Zero { cols, .. } => *cols,
            LinearOp::Embed { total_cols, .. } => *total_cols,
        }
    }

    /// `out = M x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        match self {
            LinearOp::Dense(m) => {
                let xv = DVectorView::from_slice(x, x.len());
                let n = out.len();
                let mut ov = DVectorViewMut::from_slice(out, n);
                ov.gemv(1.0, m, &xv, 0.0);
            }
            LinearOp::Identity(_) => out.copy_from_slice(x),
            LinearOp::Zero { .. } => out.fill(0.0),
            LinearOp::Embed { inner, col_offset, .. } => {
                inner.apply_into(&x[*col_offset..*col_offset + inner.cols()], out)
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        out
    }

    /// `out += scale * M^T y`.
    pub fn apply_t_add(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows());
        debug_assert_eq!(out.len(), self.cols());
        match self {
            LinearOp::Dense(m) => {
                let yv = DVectorView::from_slice(y, y.len());
                let n = out.len();
                let mut ov = DVectorViewMut::from_slice(out, n);
                ov.gemv_tr(scale, m, &yv, 1.0);
            }
            LinearOp::Identity(_) => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o += scale * v;
                }
            }
            LinearOp::Zero { .. } => {}
            LinearOp::Embed { inner, col_offset, .. } => {
                let c = inner.cols();
                inner.apply_t_add(y, scale, &mut out[*col_offset..*col_offset + c]);
            }
        }
    }

    pub fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.apply_t_add(y, 1.0, &mut out);
        out
    }

    /// `g += w M^T M` on the top-left `cols x cols` block starting at
    /// `offset`.
    pub fn gram_add(&self, g: &mut DMatrix<f64>, w: f64, offset: usize) {
        match self {
            LinearOp::Dense(m) => {
                let mtm = m.transpose() * m;
                let c = m.ncols();
                let mut view = g.view_mut((offset, offset), (c, c));
                view += mtm * w;
            }
            LinearOp::Identity(n) => {
                for i in 0..*n {
                    g[(offset + i, offset + i)] += w;
                }
            }
            LinearOp::Zero { .. } => {}
            LinearOp::Embed { inner, col_offset, .. } => inner.gram_add(g, w, offset + col_offset),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearOp::Dense(m) => m.clone(),
            LinearOp::Identity(n) => DMatrix::identity(*n, *n),
            LinearOp::Zero { rows, cols } => DMatrix::zeros(*rows, *cols),
            LinearOp::Embed { inner, col_offset, total_cols } => {
                let mut m = DMatrix::zeros(inner.rows(), *total_cols);
                let d = inner.to_dense();
                m.view_mut((0, *col_offset), (d.nrows(), d.ncols())).copy_from(&d);
                m
            }
        }
    }
}

/// Largest singular value, to about 1e-12 relative accuracy on
/// well-separated spectra.
pub fn operator_norm(op: &LinearOp) -> f64 {
    operator_norm_with(op, 5000, 1e-15)
}

/// Power iteration on `M^T M` from a fixed start vector, stopped when the
/// estimate changes by less than `rel_tol` or after `max_iterations`.
pub fn operator_norm_with(op: &LinearOp, max_iterations: usize, rel_tol: f64) -> f64 {
    match op {
        LinearOp::Identity(n) => {
            if *n == 0 {
                0.0
            } else {
                1.0
            }
        }
        LinearOp::Zero { .. } => 0.0,
        LinearOp::Embed { inner, .. } => operator_norm_with(inner, max_iterations, rel_tol),
        LinearOp::Dense(m) => {
            let n = m.ncols();
            if n == 0 || m.nrows() == 0 || m.iter().all(|v| *v == 0.0) {
                return 0.0;
            }
            let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i % 7) as f64)).collect();
            normalize(&mut v);
            let mut mv = vec![0.0; m.nrows()];
            let mut est = 0.0;
            for _ in 0..max_iterations {
                op.apply_into(&v, &mut mv);
                let s = norm2(&mv);
                let mut w = vec![0.0; n];
                op.apply_t_add(&mv, 1.0, &mut w);
                if norm2(&w) == 0.0 {
                    return s;
                }
                normalize(&mut w);
                v = w;
                if (s - est).abs() <= rel_tol * s {
                    est = s;
                    break;
                }
                est = s;
            }
            op.apply_into(&v, &mut mv);
            norm2(&mv).max(est)
        }
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
