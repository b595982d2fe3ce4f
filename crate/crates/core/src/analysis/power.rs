use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::operator::LinearOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterationResult {
    /// Rayleigh-quotient estimate of the dominant eigenvalue.
    pub eigenvalue: f64,
    /// Unit-norm eigenvector estimate.
    pub eigenvector: Vec<f64>,
    /// Number of operator applications.
    pub iterations: usize,
    /// `‖M x − λ x‖∞` at the last estimate.
    pub final_residual: f64,
    pub converged: bool,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Power iteration from a seeded random unit vector. Stops once
/// `‖M x⁽ᵏ⁾ − λ⁽ᵏ⁾ x⁽ᵏ⁾‖∞ < tol` with `λ⁽ᵏ⁾ = ⟨x⁽ᵏ⁾, M x⁽ᵏ⁾⟩`, or after
/// `max_iterations` applications with `converged = false`.
pub fn power_iteration(
    op: &dyn LinearOperator,
    tol: f64,
    max_iterations: usize,
    seed: u64,
) -> Result<PowerIterationResult> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidConfig("power iteration needs a non-empty operator".into()));
    }
    if !(tol > 0.0) || max_iterations == 0 {
        return Err(Error::InvalidConfig(
            "power iteration needs tol > 0 and at least one iteration".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let scale = norm2(&x);
    x.iter_mut().for_each(|v| *v /= scale);

    let mut y = vec![0.0; n];
    let mut eigenvalue = 0.0;
    let mut residual = f64::INFINITY;
    for k in 1..=max_iterations {
        op.apply(&x, &mut y);
        let len = norm2(&y);
        if len == 0.0 {
            return Err(Error::ZeroOperator);
        }
        eigenvalue = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - eigenvalue * a).abs())
            .fold(0.0, f64::max);
        if residual < tol {
            return Ok(PowerIterationResult {
                eigenvalue,
                eigenvector: x,
                iterations: k,
                final_residual: residual,
                converged: true,
            });
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / len;
        }
    }
    Ok(PowerIterationResult {
        eigenvalue,
        eigenvector: x,
        iterations: max_iterations,
        final_residual: residual,
        converged: false,
    })
}
