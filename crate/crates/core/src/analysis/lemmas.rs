//! Numerical checks of the SART convergence argument: with W = D Aᵀ M A and
//! A of full column rank, W has row sums at most one (exactly one for
//! positive A), its eigenvalues are real and positive, and T = I − W has
//! spectral radius below one.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eigen::{eigenvalues, matrix_rank};
use crate::error::{Error, Result};

/// Largest dimension accepted by the polynomial-root checks.
pub const MAX_LEMMA_DIM: usize = 8;
pub const RANK_PIVOT_TOL: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-9;

/// Outcome of a check whose hypothesis (full column rank) may fail.
#[derive(Debug, Clone, PartialEq)]
pub enum Verification<T> {
    Checked(T),
    /// `rank < n`; the check was skipped.
    RankDeficient { rank: usize, n: usize },
}

impl<T> Verification<T> {
    pub fn checked(&self) -> Option<&T> {
        match self {
            Verification::Checked(t) => Some(t),
            Verification::RankDeficient { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaA1 {
    pub row_sums: Vec<f64>,
    pub strictly_positive: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaA2 {
    pub eigenvalues: Vec<Complex64>,
    pub max_imag: f64,
    pub min_real: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremA3 {
    pub spectral_radius: f64,
    pub passed: bool,
}

/// W = D Aᵀ M A with `D = diag(1/β)`, `M = diag(1/γ)` and zero weights for
/// empty rows or columns.
pub fn sart_weight_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let inv = |s: f64| if s == 0.0 { 0.0 } else { 1.0 / s };
    let gamma: Vec<f64> = (0..m).map(|i| inv(a.row(i).iter().map(|v| v.abs()).sum())).collect();
    let beta: Vec<f64> = (0..n).map(|j| inv(a.column(j).iter().map(|v| v.abs()).sum())).collect();
    DMatrix::from_fn(n, n, |r, c| beta[r] * (0..m).map(|k| a[(k, r)] * gamma[k] * a[(k, c)]).sum::<f64>())
}

fn precheck(a: &DMatrix<f64>) -> Result<Option<(usize, usize)>> {
    let (m, n) = a.shape();
    if n == 0 || m == 0 || n > MAX_LEMMA_DIM {
        return Err(Error::InvalidConfig(format!(
            "lemma checks need 1 ≤ n ≤ {MAX_LEMMA_DIM}, got a {m}×{n} matrix"
        )));
    }
    let rank = matrix_rank(a, RANK_PIVOT_TOL);
    Ok((rank < n).then_some((rank, n)))
}

/// Row sums of W are ≤ 1, and equal to 1 when every entry of A is positive.
pub fn verify_lemma_a1(a: &DMatrix<f64>) -> Result<Verification<LemmaA1>> {
    if let Some((rank, n)) = precheck(a)? {
        return Ok(Verification::RankDeficient { rank, n });
    }
    let w = sart_weight_matrix(a);
    let row_sums: Vec<f64> = (0..w.nrows()).map(|r| w.row(r).iter().map(|v| v.abs()).sum()).collect();
    let strictly_positive = a.iter().all(|&v| v > 0.0);
    let bounded = row_sums.iter().all(|&s| s <= 1.0 + ROW_SUM_TOL);
    let unit = !strictly_positive || row_sums.iter().all(|&s| (s - 1.0).abs() <= ROW_SUM_TOL);
    Ok(Verification::Checked(LemmaA1 {
        row_sums,
        strictly_positive,
        passed: bounded && unit,
    }))
}

/// Every eigenvalue of W is real and positive.
pub fn verify_lemma_a2(a: &DMatrix<f64>) -> Result<Verification<LemmaA2>> {
    if let Some((rank, n)) = precheck(a)? {
        return Ok(Verification::RankDeficient { rank, n });
    }
    let eigenvalues = eigenvalues(&sart_weight_matrix(a));
    let max_imag = eigenvalues.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let min_real = eigenvalues.iter().fold(f64::INFINITY, |m, z| m.min(z.re));
    Ok(Verification::Checked(LemmaA2 {
        passed: max_imag < IMAG_TOL && min_real > 0.0,
        eigenvalues,
        max_imag,
        min_real,
    }))
}

/// ρ(I − W) < 1.
pub fn verify_theorem_a3(a: &DMatrix<f64>) -> Result<Verification<TheoremA3>> {
    if let Some((rank, n)) = precheck(a)? {
        return Ok(Verification::RankDeficient { rank, n });
    }
    let n = a.ncols();
    let t = DMatrix::identity(n, n) - sart_weight_matrix(a);
    let spectral_radius = eigenvalues(&t).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    Ok(Verification::Checked(TheoremA3 {
        spectral_radius,
        passed: spectral_radius < 1.0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.28, 1.13])
    }

    #[test]
    fn two_pixel_weight_matrix() {
        let w = sart_weight_matrix(&fixture());
        let expected = [[0.43406471631205673, 0.5659352836879432], [0.3400925648453368, 0.6599074351546632]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((w[(r, c)] - expected[r][c]).abs() < 1e-12);
            }
        }
        let a1 = verify_lemma_a1(&fixture()).unwrap();
        let a1 = a1.checked().unwrap();
        assert!(a1.passed && a1.strictly_positive);
        for s in &a1.row_sums {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(verify_lemma_a2(&fixture()).unwrap().checked().unwrap().passed);
        let a3 = verify_theorem_a3(&fixture()).unwrap();
        assert!((a3.checked().unwrap().spectral_radius - 0.9060278485332801).abs() < 1e-12);
    }

    #[test]
    fn zero_column_skips_checks() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 0.5, 0.0]);
        assert_eq!(verify_lemma_a1(&a).unwrap(), Verification::RankDeficient { rank: 1, n: 2 });
        assert!(matches!(verify_lemma_a2(&a).unwrap(), Verification::RankDeficient { .. }));
        assert!(matches!(verify_theorem_a3(&a).unwrap(), Verification::RankDeficient { .. }));
    }

    #[test]
    fn sparse_nonnegative_matrix_has_row_sums_at_most_one() {
        // one zero entry: sums stay ≤ 1 but the "all positive" clause is off
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.2, 0.9]);
        let r = verify_lemma_a1(&a).unwrap();
        let r = r.checked().unwrap();
        assert!(!r.strictly_positive && r.passed);
    }

    #[test]
    fn oversized_input_is_rejected() {
        assert!(verify_lemma_a1(&DMatrix::from_element(10, 9, 1.0)).is_err());
    }
}
