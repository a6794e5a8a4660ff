//! Dense row-major float64 matrices and the matmul kernels behind the
//! neural core.
//!
//! Every kernel accumulates along the shared dimension in ascending index
//! order, no matter how the output is blocked or which thread computes
//! which block. That fixed order is what makes training bit-reproducible
//! across thread counts and across the `parallel`/sequential builds.

use crate::exec;

/// Output rows are processed in blocks so the streamed operand is read
/// once per block instead of once per row.
const ROW_BLOCK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Applies `f(row_index, row)` to every row, in parallel when enabled.
    pub fn for_each_row_mut<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        if self.rows == 0 {
            return;
        }
        exec::for_each_row_mut(&mut self.data, self.cols, f);
    }
}

/// Dot product with four independent accumulators combined in a fixed
/// order; gives the compiler ILP without reassociating the sum freely.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..n {
        tail += a[i] * b[i];
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

/// `out += s * x`, elementwise.
#[inline]
pub fn axpy(out: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(out.len(), x.len());
    for (o, v) in out.iter_mut().zip(x) {
        *o += s * v;
    }
}

fn run_blocked<F>(out: &mut Matrix, f: F)
where
    F: Fn(usize, usize, &mut [f64]) + Sync, // (row_start, row_end, block rows)
{
    let cols = out.cols;
    let rows = out.rows;
    if rows == 0 || cols == 0 {
        return;
    }
    exec::for_each_row_mut(&mut out.data, ROW_BLOCK * cols, |blk, slice| {
        let start = blk * ROW_BLOCK;
        let end = (start + slice.len() / cols).min(rows);
        f(start, end, slice);
    });
}

/// `C = A · Bᵀ` where `a` is n×k and `b` is m×k; result n×m.
/// `C[i][j] = dot(a.row(i), b.row(j))`.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols, b.cols, "matmul_nt inner dimension");
    let mut out = Matrix::zeros(a.rows, b.rows);
    run_blocked(&mut out, |start, end, block| {
        let m = b.rows;
        for j in 0..m {
            let bj = b.row(j);
            for i in start..end {
                block[(i - start) * m + j] = dot(a.row(i), bj);
            }
        }
    });
    out
}

/// `C = A · B` where `a` is n×k and `b` is k×m; result n×m.
pub fn matmul_nn(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols, b.rows, "matmul_nn inner dimension");
    let mut out = Matrix::zeros(a.rows, b.cols);
    run_blocked(&mut out, |start, end, block| {
        let m = b.cols;
        for t in 0..a.cols {
            let bt = b.row(t);
            for i in start..end {
                let s = a.row(i)[t];
                if s != 0.0 {
                    axpy(&mut block[(i - start) * m..(i - start + 1) * m], s, bt);
                }
            }
        }
    });
    out
}

/// `C = Aᵀ · B` where `a` is k×n and `b` is k×m; result n×m.
/// `C[i][j] = Σ_t a[t][i]·b[t][j]` with `t` ascending.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.rows, b.rows, "matmul_tn inner dimension");
    let mut out = Matrix::zeros(a.cols, b.cols);
    run_blocked(&mut out, |start, end, block| {
        let m = b.cols;
        for t in 0..a.rows {
            let at = a.row(t);
            let bt = b.row(t);
            for i in start..end {
                let s = at[i];
                if s != 0.0 {
                    axpy(&mut block[(i - start) * m..(i - start + 1) * m], s, bt);
                }
            }
        }
    });
    out
}

/// Column sums of `a`, accumulated over rows in ascending order.
pub fn column_sums(a: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; a.cols];
    for i in 0..a.rows {
        axpy(&mut out, 1.0, a.row(i));
    }
    out
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient convention: relu'(0) = 0.
#[inline]
pub fn relu_mask(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}
