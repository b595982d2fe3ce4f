//! Small dense eigenvalue oracles: closed-form 2×2 spectral radius and roots
//! of the characteristic polynomial.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Spectral radius of a 2×2 matrix from its characteristic polynomial
/// `λ² − tr λ + det`.
pub fn spectral_radius_2x2(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        (half + root).abs().max((half - root).abs())
    } else {
        // complex pair with |λ|² = det
        det.sqrt()
    }
}

/// Monic characteristic polynomial coefficients `[1, c₁, …, cₙ]` of
/// `det(λI − M) = λⁿ + c₁λⁿ⁻¹ + … + cₙ` (Faddeev–LeVerrier).
pub fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "characteristic polynomial needs a square matrix");
    let mut coeffs = vec![1.0];
    let mut aux = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        // aux_k = M aux_{k-1} + c_{k-1} I
        aux = m * &aux;
        let prev = coeffs[k - 1];
        for i in 0..n {
            aux[(i, i)] += prev;
        }
        let c = -(m * &aux).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of a polynomial given highest-degree first, via
/// Durand–Kerner iteration followed by Newton polishing of each root.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let lead = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
    let coeffs: Vec<f64> = coeffs[lead..].iter().map(|c| c / coeffs[lead]).collect();
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    // Cauchy bound on root magnitudes
    let bound = 1.0 + coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let angle = Complex64::new(0.4, 0.9).arg();
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(bound, k as f64 * angle))
        .collect();

    for _ in 0..2000 {
        let mut largest_step = 0.0f64;
        for i in 0..degree {
            let (p, _) = horner(&coeffs, roots[i]);
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, &r) in roots.iter().enumerate() {
                if j != i {
                    denom *= roots[i] - r;
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = p / denom;
            roots[i] -= step;
            largest_step = largest_step.max(step.norm() / (1.0 + roots[i].norm()));
        }
        if largest_step < 1e-15 {
            break;
        }
    }

    for r in roots.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = horner(&coeffs, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *r -= step;
            if step.norm() <= 1e-17 * (1.0 + r.norm()) {
                break;
            }
        }
    }
    roots
}

/// Eigenvalues of a small square matrix as characteristic-polynomial roots.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    polynomial_roots(&characteristic_polynomial(m))
}

/// Spectral radius of a small square matrix: closed form for 2×2, polished
/// polynomial roots otherwise.
pub fn spectral_radius_by_roots(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 2 && m.ncols() == 2 {
        return spectral_radius_2x2([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
    }
    eigenvalues(m).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Rank by Gaussian elimination with partial pivoting; pivots below
/// `pivot_tol` times the largest entry count as zero.
pub fn matrix_rank(m: &DMatrix<f64>, pivot_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (pivot_row, pivot) = (rank..rows)
            .map(|r| (r, a[(r, c)].abs()))
            .fold((rank, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot <= pivot_tol * scale {
            continue;
        }
        a.swap_rows(rank, pivot_row);
        for r in rank + 1..rows {
            let f = a[(r, c)] / a[(rank, c)];
            if f != 0.0 {
                for k in c..cols {
                    let v = a[(rank, k)];
                    a[(r, k)] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(spectral_radius_2x2([[1.0, 0.0], [0.0, 1.0]]), 1.0);
        assert_eq!(spectral_radius_2x2([[0.0, -1.0], [1.0, 0.0]]), 1.0);
        assert_eq!(spectral_radius_2x2([[-3.0, 0.0], [0.0, 2.0]]), 3.0);
        // rotation-scaling: eigenvalues 0.5(cos θ ± i sin θ)
        let (s, c) = 0.7f64.sin_cos();
        assert!((spectral_radius_2x2([[0.5 * c, -0.5 * s], [0.5 * s, 0.5 * c]]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sart_matrix_radius_for_two_pixel_system() {
        // W has unit row sums so λ₁(W) = 1 and λ₂(W) = tr W − 1; ρ(T) = 2 − tr W
        let w00: f64 = (1.0 / 2.0 + 0.28 * 0.28 / 1.41) / 1.28;
        let w11: f64 = (1.0 / 2.0 + 1.13 * 1.13 / 1.41) / 2.13;
        let expected = 2.0 - w00 - w11;
        // exact rational evaluation of the same expression
        assert!((expected - 0.9060278485332801).abs() < 1e-15);
        let w01 = 1.0 - w00;
        let w10 = 1.0 - w11;
        let rho = spectral_radius_2x2([[1.0 - w00, -w01], [-w10, 1.0 - w11]]);
        assert!((rho - expected).abs() < 1e-15);
    }

    #[test]
    fn characteristic_polynomial_of_known_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(characteristic_polynomial(&m), vec![1.0, -5.0, -2.0]);
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 3.0, 4.0, 0.0, 4.0, 9.0]);
        // eigenvalues 2, 1, 11
        let roots = eigenvalues(&m);
        let mut re: Vec<f64> = roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (got, want) in re.iter().zip([1.0, 2.0, 11.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(roots.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn roots_recover_prescribed_values() {
        // (x - 0.5)(x + 2)(x^2 + 1)(x - 3)
        let roots = [0.5, -2.0, 3.0];
        let mut poly = vec![1.0];
        for r in roots {
            poly = multiply(&poly, &[1.0, -r]);
        }
        poly = multiply(&poly, &[1.0, 0.0, 1.0]);
        let found = polynomial_roots(&poly);
        assert_eq!(found.len(), 5);
        for want in [Complex64::new(0.5, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)] {
            assert!(found.iter().any(|z| (z - want).norm() < 1e-12), "{want} not in {found:?}");
        }
    }

    fn multiply(p: &[f64], q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len() + q.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }

    #[test]
    fn rank_detection() {
        let full = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 7.0]);
        assert_eq!(matrix_rank(&full, 1e-12), 2);
        let zero_col = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 3.0, 0.0, 5.0, 0.0]);
        assert_eq!(matrix_rank(&zero_col, 1e-12), 1);
        let dependent = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(matrix_rank(&dependent, 1e-12), 1);
        assert_eq!(matrix_rank(&DMatrix::zeros(2, 2), 1e-12), 0);
    }
}
