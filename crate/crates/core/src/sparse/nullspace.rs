//! Per-node tangent-plane bases and the reduction `Tᵀ A T`.

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct TangentBasis {
    pub t1: Vec<Vec3>,
    pub t2: Vec<Vec3>,
}

impl TangentBasis {
    pub fn len(&self) -> usize {
        self.t1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t1.is_empty()
    }
}

/// Orthonormal pair spanning the plane orthogonal to each `m(z)`. The seed
/// direction is the coordinate axis least aligned with `m(z)`.
pub fn tangent_basis(m: &[Vec3]) -> Result<TangentBasis> {
    let mut t1 = Vec::with_capacity(m.len());
    let mut t2 = Vec::with_capacity(m.len());
    for (z, &mz) in m.iter().enumerate() {
        let len = vec3::norm(mz);
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::invalid(format!("node {z} has zero or non-finite magnetisation")));
        }
        let mh = vec3::scale(1.0 / len, mz);
        let mut axis = 0;
        for i in 1..3 {
            if mh[i].abs() < mh[axis].abs() {
                axis = i;
            }
        }
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let a = vec3::axpy(e, -mh[axis], mh);
        let a = vec3::scale(1.0 / vec3::norm(a), a);
        t2.push(vec3::cross(mh, a));
        t1.push(a);
    }
    Ok(TangentBasis { t1, t2 })
}

/// `(Tᵀ A T, Tᵀ rhs)` for a matrix whose sparsity is organised in 3×3 node
/// blocks. The result has 2×2 node blocks.
pub fn nullspace_reduce(a: &CsrMatrix, rhs: &[f64], basis: &TangentBasis) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = basis.len();
    if a.dim() != 3 * n || rhs.len() != 3 * n {
        return Err(Error::invalid(format!(
            "reduction needs a {0}×{0} matrix and rhs for {n} nodes, got {1} and {2}",
            3 * n,
            a.dim(),
            rhs.len()
        )));
    }
    let mut row_ptr = Vec::with_capacity(2 * n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    let mut blocks: Vec<(usize, [[f64; 3]; 3])> = Vec::new();
    let mut second_row: Vec<(usize, f64, f64)> = Vec::new();
    for z in 0..n {
        blocks.clear();
        for i in 0..3 {
            let (cols, vals) = a.row(3 * z + i);
            for (&c, &v) in cols.iter().zip(vals) {
                let y = c / 3;
                let k = match blocks.binary_search_by_key(&y, |b| b.0) {
                    Ok(k) => k,
                    Err(k) => {
                        blocks.insert(k, (y, [[0.0; 3]; 3]));
                        k
                    }
                };
                blocks[k].1[i][c % 3] += v;
            }
        }
        let tz = [basis.t1[z], basis.t2[z]];
        second_row.clear();
        for (y, blk) in &blocks {
            let ty = [basis.t1[*y], basis.t2[*y]];
            let mut red = [[0.0; 2]; 2];
            for p in 0..2 {
                let row = [
                    vec3::dot(tz[p], [blk[0][0], blk[1][0], blk[2][0]]),
                    vec3::dot(tz[p], [blk[0][1], blk[1][1], blk[2][1]]),
                    vec3::dot(tz[p], [blk[0][2], blk[1][2], blk[2][2]]),
                ];
                for q in 0..2 {
                    red[p][q] = vec3::dot(row, ty[q]);
                }
            }
            col_idx.push(2 * y);
            values.push(red[0][0]);
            col_idx.push(2 * y + 1);
            values.push(red[0][1]);
            second_row.push((*y, red[1][0], red[1][1]));
        }
        row_ptr.push(col_idx.len());
        for &(y, a0, a1) in &second_row {
            col_idx.push(2 * y);
            values.push(a0);
            col_idx.push(2 * y + 1);
            values.push(a1);
        }
        row_ptr.push(col_idx.len());
    }
    let reduced = CsrMatrix::from_raw(2 * n, row_ptr, col_idx, values);
    Ok((reduced, reduce_vector(rhs, basis)))
}

/// `Tᵀ v`
pub fn reduce_vector(v: &[f64], basis: &TangentBasis) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * basis.len());
    for z in 0..basis.len() {
        let vz = [v[3 * z], v[3 * z + 1], v[3 * z + 2]];
        out.push(vec3::dot(basis.t1[z], vz));
        out.push(vec3::dot(basis.t2[z], vz));
    }
    out
}

/// `T x`, a field lying nodewise in the tangent planes.
pub fn nullspace_expand(x: &[f64], basis: &TangentBasis) -> Vec<Vec3> {
    (0..basis.len())
        .map(|z| vec3::add(vec3::scale(x[2 * z], basis.t1[z]), vec3::scale(x[2 * z + 1], basis.t2[z])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_cases() {
        let b = tangent_basis(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(b.t1[0], [1.0, 0.0, 0.0]);
        assert_eq!(b.t2[0], [0.0, 1.0, 0.0]);
        assert_eq!(b.t1[1], [0.0, 1.0, 0.0]);
        assert_eq!(b.t2[1], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(tangent_basis(&[[1.0, 0.0, 0.0], [0.0; 3]]).is_err());
    }

    #[test]
    fn lumped_mass_reduces_to_scaled_identity_blocks() {
        let w = [0.5, 2.0];
        let diag: Vec<f64> = w.iter().flat_map(|&x| [x; 3]).collect();
        let a = CsrMatrix::from_diagonal(&diag);
        let b = tangent_basis(&[[0.3, -1.0, 0.2], [1.0, 1.0, 1.0]]).unwrap();
        let (r, _) = nullspace_reduce(&a, &[0.0; 6], &b).unwrap();
        let d = r.to_dense();
        for z in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    let expect = if p == q { w[z] } else { 0.0 };
                    assert!((d[2 * z + p][2 * z + q] - expect).abs() < 1e-15);
                }
            }
        }
        assert!(r.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn tangent_rhs_is_reproduced() {
        let m = [[0.0, 0.6, 0.8], [2.0, 0.0, 0.0]];
        let b = tangent_basis(&m).unwrap();
        let rhs = [1.0, 0.8, -0.6, 0.0, 3.0, -4.0];
        let back = nullspace_expand(&reduce_vector(&rhs, &b), &b);
        for z in 0..2 {
            for i in 0..3 {
                assert!((back[z][i] - rhs[3 * z + i]).abs() < 1e-14);
            }
        }
    }
}
