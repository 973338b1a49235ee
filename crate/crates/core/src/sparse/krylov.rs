use super::precond::{Ilu0, Jacobi, Preconditioner};
use super::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_RESTART: usize = 50;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖ / ‖b‖`.
    pub residual: f64,
    /// Relative residual after each iteration, starting with the initial guess.
    pub history: Vec<f64>,
}

fn check_inputs(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("solver tolerance must be positive, got {tol}")));
    }
    if b.len() != a.dim() {
        return Err(Error::invalid(format!("rhs has length {}, matrix is {}", b.len(), a.dim())));
    }
    match x0 {
        Some(x) if x.len() != a.dim() => Err(Error::invalid(format!(
            "initial guess has length {}, matrix is {}",
            x.len(),
            a.dim()
        ))),
        Some(x) => Ok(x.to_vec()),
        None => Ok(vec![0.0; a.dim()]),
    }
}

fn residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = a.matvec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Jacobi-preconditioned conjugate gradients. Stops when
/// `‖b − Ax‖₂ ≤ tol ‖b‖₂`.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let mut x = check_inputs(a, b, x0, tol)?;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; a.dim()], SolveStats::default()));
    }
    let m = Jacobi::new(a);
    let mut r = residual(a, b, &x);
    let mut rel = norm2(&r) / bnorm;
    let mut stats = SolveStats {
        iterations: 0,
        residual: rel,
        history: vec![rel],
    };
    if rel <= tol {
        return Ok((x, stats));
    }
    let mut z = vec![0.0; r.len()];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; r.len()];
    for it in 1..=maxit {
        a.matvec_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NonConvergence {
                solver: "cg",
                iterations: it - 1,
                residual: rel,
                history: stats.history,
            });
        }
        let alpha = rz / pq;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = norm2(&r) / bnorm;
        stats.history.push(rel);
        stats.iterations = it;
        stats.residual = rel;
        if rel <= tol {
            return Ok((x, stats));
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        solver: "cg",
        iterations: maxit,
        residual: rel,
        history: stats.history,
    })
}

/// Restarted GMRES with ILU(0) right preconditioning, falling back to Jacobi
/// when the factorisation hits a zero pivot.
pub fn gmres_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    maxit: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    match Ilu0::new(a) {
        Ok(ilu) => gmres_solve_with(a, b, x0, tol, restart, maxit, &ilu),
        Err(e) => {
            log::warn!("{e}; falling back to Jacobi preconditioning");
            gmres_solve_with(a, b, x0, tol, restart, maxit, &Jacobi::new(a))
        }
    }
}

/// Restarted right-preconditioned GMRES. The residual it monitors is the
/// true residual `‖b − Ax‖₂ / ‖b‖₂`.
pub fn gmres_solve_with(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    maxit: usize,
    precond: &dyn Preconditioner,
) -> Result<(Vec<f64>, SolveStats)> {
    let mut x = check_inputs(a, b, x0, tol)?;
    if restart == 0 {
        return Err(Error::invalid("GMRES restart length must be positive"));
    }
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let mut stats = SolveStats::default();
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        let r = residual(a, b, &x);
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if stats.history.is_empty() {
            stats.history.push(rel);
        }
        stats.residual = rel;
        if rel <= tol {
            return Ok((x, stats));
        }
        if stats.iterations >= maxit {
            return Err(Error::NonConvergence {
                solver: "gmres",
                iterations: stats.iterations,
                residual: rel,
                history: stats.history,
            });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // columns of the Hessenberg matrix, already rotated
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        for j in 0..restart {
            if stats.iterations >= maxit {
                break;
            }
            precond.apply(&basis[j], &mut z);
            a.matvec_into(&z, &mut w);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hnext = norm2(&w);
            col[j + 1] = hnext;
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            if denom == 0.0 {
                return Err(Error::NonConvergence {
                    solver: "gmres",
                    iterations: stats.iterations,
                    residual: stats.residual,
                    history: stats.history,
                });
            }
            let (c, s) = (col[j] / denom, col[j + 1] / denom);
            col[j] = denom;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            stats.iterations += 1;
            let est = g[j + 1].abs() / bnorm;
            stats.history.push(est);
            stats.residual = est;
            if est <= tol || hnext <= f64::EPSILON * beta {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // back substitution for the least-squares coefficients
        let k = h.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for jj in i + 1..k {
                s -= h[jj][i] * y[jj];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yj, v) in y.iter().zip(&basis) {
            for (u, vi) in update.iter_mut().zip(v) {
                *u += yj * vi;
            }
        }
        precond.apply(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}
