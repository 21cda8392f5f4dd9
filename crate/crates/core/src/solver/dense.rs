//! Dense LU solve of the full saddle matrix, used as a reference for the
//! iterative solver on small systems.

use nalgebra::{DMatrix, DVector};

use crate::assembly::SaddleSystem;
use crate::error::{DecError, Result};

/// Largest system the dense solver accepts.
pub const DENSE_LIMIT: usize = 2000;

/// Returns `(ω, α)` from a partial-pivoting LU factorization.
pub fn dense_solve(system: &SaddleSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = system.n_unknowns();
    if n > DENSE_LIMIT {
        return Err(DecError::InvalidArgument(format!(
            "dense solve limited to {DENSE_LIMIT} unknowns, system has {n}"
        )));
    }
    let m = DMatrix::from(&system.to_csr());
    let b = DVector::from_column_slice(system.rhs());
    let x = m
        .lu()
        .solve(&b)
        .ok_or_else(|| DecError::Solver("saddle matrix is singular".into()))?;
    let mut omega: Vec<f64> = x.iter().copied().collect();
    let alpha = omega.split_off(system.n_faces());
    Ok((omega, alpha))
}
