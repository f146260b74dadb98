//! Small dense kernels for the Newton step: 4x4 blocks and the junction
//! coupling system.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub(crate) type Vec4 = [f64; 4];
pub(crate) type Mat4 = [[f64; 4]; 4];

pub(crate) const IDENTITY: Mat4 =
    [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];

pub(crate) fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub(crate) fn mat_vec(a: &Mat4, x: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (0..4).map(|k| a[i][k] * x[k]).sum();
    }
    out
}

/// Dense LU factorisation with partial pivoting, row-major.
pub(crate) struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub(crate) fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv, pmax) =
                (col..n)
                    .map(|r| (r, a[r * n + col].abs()))
                    .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny || pmax == 0.0 {
                return Err(Error::SingularSystem);
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                if f != 0.0 {
                    for j in col + 1..n {
                        a[r * n + j] -= f * a[col * n + j];
                    }
                }
            }
        }
        Ok(Self { n, a, perm })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.a[i * n + i];
        }
        x
    }
}

/// Solves `m x = b` for every column of `rhs` (4x4 system, several right-hand
/// sides packed as matrix columns plus one vector).
pub(crate) fn solve4(m: &Mat4, rhs_mat: &Mat4, rhs_vec: &Vec4) -> Result<(Mat4, Vec4)> {
    let mut flat = vec![0.0; 16];
    for i in 0..4 {
        flat[i * 4..i * 4 + 4].copy_from_slice(&m[i]);
    }
    let lu = Lu::factor(4, flat)?;
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        let col = lu.solve(&[rhs_mat[0][j], rhs_mat[1][j], rhs_mat[2][j], rhs_mat[3][j]]);
        for i in 0..4 {
            out[i][j] = col[i];
        }
    }
    let v = lu.solve(rhs_vec);
    Ok((out, [v[0], v[1], v[2], v[3]]))
}
