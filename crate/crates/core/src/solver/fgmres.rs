use crate::error::Result;

use super::{BlockOps, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// The Krylov space stopped growing before the residual was small
    /// enough, or restarts no longer reduce the residual.
    Breakdown,
}

#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub history: Vec<f64>,
}

fn true_residual<O: BlockOps + ?Sized>(ops: &O, b: &[f64], x: &[f64], r: &mut [f64]) -> Result<f64> {
    ops.apply(x, r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    ops.norm(r)
}

/// Right-preconditioned restarted flexible GMRES.
///
/// `precond(r, z)` writes an approximation of `M⁻¹ r` into `z`; it may
/// change from one iteration to the next. The stopping test is
/// `‖b − M x‖ ≤ max(rtol ‖b‖, atol)` on the true residual, which is
/// recomputed at each restart and at exit.
pub fn fgmres<O, P>(ops: &O, b: &[f64], mut x: Vec<f64>, mut precond: P, cfg: &SolverConfig) -> Result<KrylovOutcome>
where
    O: BlockOps + ?Sized,
    P: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = ops.n_local();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let m = cfg.restart;
    let tol = (cfg.rtol * ops.norm(b)?).max(cfg.atol);

    let mut r = vec![0.0; n];
    let mut beta = true_residual(ops, b, &x, &mut r)?;
    let mut history = vec![beta];
    let mut iterations = 0;
    let mut stalled_cycles = 0;

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
    // Hessenberg columns, each of length m + 1
    let mut h = vec![vec![0.0; m + 1]; m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];

    loop {
        if beta <= tol {
            return Ok(KrylovOutcome {
                x,
                residual_norm: beta,
                iterations,
                status: SolveStatus::Converged,
                history,
            });
        }
        if iterations >= cfg.max_iters {
            return Ok(KrylovOutcome {
                x,
                residual_norm: beta,
                iterations,
                status: SolveStatus::MaxIterations,
                history,
            });
        }

        v.clear();
        z.clear();
        v.push(r.iter().map(|ri| ri / beta).collect());
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;
        let mut k = 0;
        let mut lucky = false;
        while k < m && iterations < cfg.max_iters {
            let mut zk = vec![0.0; n];
            precond(&v[k], &mut zk)?;
            ops.apply(&zk, &mut w)?;
            z.push(zk);

            let col = &mut h[k];
            for (i, vi) in v.iter().enumerate() {
                let hik = ops.dot(&w, vi)?;
                col[i] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hnext = ops.norm(&w)?;
            col[k + 1] = hnext;

            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            if denom == 0.0 {
                // the new direction is annihilated by M: no progress possible
                lucky = true;
                break;
            }
            cs[k] = col[k] / denom;
            sn[k] = col[k + 1] / denom;
            col[k] = denom;
            col[k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];

            iterations += 1;
            k += 1;
            let estimate = g[k].abs();
            history.push(estimate);
            if estimate <= tol || hnext == 0.0 {
                lucky = hnext == 0.0;
                break;
            }
            v.push(w.iter().map(|wi| wi / hnext).collect());
        }

        // back substitution for the k × k triangular system
        let mut y = g[..k].to_vec();
        for i in (0..k).rev() {
            for j in i + 1..k {
                y[i] -= h[j][i] * y[j];
            }
            y[i] /= h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xj, zj) in x.iter_mut().zip(zi) {
                *xj += yi * zj;
            }
        }

        let previous = beta;
        beta = true_residual(ops, b, &x, &mut r)?;
        if beta > tol && (lucky || k == 0) {
            return Ok(KrylovOutcome {
                x,
                residual_norm: beta,
                iterations,
                status: SolveStatus::Breakdown,
                history,
            });
        }
        if beta >= previous {
            stalled_cycles += 1;
            if stalled_cycles >= 3 {
                return Ok(KrylovOutcome {
                    x,
                    residual_norm: beta,
                    iterations,
                    status: SolveStatus::Breakdown,
                    history,
                });
            }
        } else {
            stalled_cycles = 0;
        }
    }
}
