use super::CsrMatrix;
use crate::error::{Error, Result};

pub trait Preconditioner: Send + Sync {
    /// `z = M⁻¹ r`
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal scaling. Zero diagonal entries are left unscaled.
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Jacobi {
        Jacobi {
            inv_diag: a
                .diagonal()
                .into_iter()
                .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

/// Incomplete LU factorisation with the sparsity pattern of `A`.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    /// Fails on a missing or zero pivot.
    pub fn new(a: &CsrMatrix) -> Result<Ilu0> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            diag_pos.push(
                lu.position(i, i)
                    .ok_or_else(|| Error::invalid(format!("ILU(0): row {i} has no diagonal entry")))?,
            );
        }
        let row_ptr = lu.row_ptr().to_vec();
        let col_idx = lu.col_idx().to_vec();
        // position of column c in the current row, or usize::MAX
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for k in start..end {
                marker[col_idx[k]] = k;
            }
            let vals = lu.values_mut();
            for k in start..end {
                let j = col_idx[k];
                if j >= i {
                    break;
                }
                let pivot = vals[diag_pos[j]];
                let factor = vals[k] / pivot;
                vals[k] = factor;
                for kk in diag_pos[j] + 1..row_ptr[j + 1] {
                    let m = marker[col_idx[kk]];
                    if m != usize::MAX {
                        vals[m] -= factor * vals[kk];
                    }
                }
            }
            for k in start..end {
                marker[col_idx[k]] = usize::MAX;
            }
            let d = vals[diag_pos[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::invalid(format!("ILU(0): zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag_pos })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.dim();
        let rp = self.lu.row_ptr();
        let ci = self.lu.col_idx();
        let v = self.lu.values();
        for i in 0..n {
            let mut s = r[i];
            for k in rp[i]..self.diag_pos[i] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..rp[i + 1] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s / v[self.diag_pos[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        // no fill-in, so ILU(0) = LU
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -2.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, &t).unwrap();
        let ilu = Ilu0::new(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let mut x = vec![0.0; n];
        ilu.apply(&b, &mut x);
        let r = a.matvec(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(Ilu0::new(&a).is_err());
    }

    #[test]
    fn jacobi_scales_by_diagonal() {
        let a = CsrMatrix::from_diagonal(&[2.0, 4.0]);
        let mut z = [0.0; 2];
        Jacobi::new(&a).apply(&[1.0, 1.0], &mut z);
        assert_eq!(z, [0.5, 0.25]);
    }
}
