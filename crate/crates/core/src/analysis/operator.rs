use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::materials::LacModel;
use crate::projection::{CsrMatrix, SystemMatrix};
use crate::spectra::Spectrum;

use super::jacobian::jacobian_f;

/// Square linear map given only through its action on vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `out = M x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply(x, &mut out);
        out
    }
}

/// Explicit square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(pub DMatrix<f64>);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.0.nrows();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.0[(i, j)] * x[j]).sum();
        }
    }
}

/// `I − D Aᵀ M J`, the Jacobian of a SART-type fixed-point map. With
/// `J = A` this is the SART iteration matrix T; with `J = J_f(t)` it is the
/// pSART Jacobian J_F(t).
#[derive(Debug, Clone)]
pub struct IterationMatrix<'a> {
    a: &'a SystemMatrix,
    /// `None` stands for `A` itself.
    inner: Option<CsrMatrix>,
    d: Vec<f64>,
    m: Vec<f64>,
}

impl<'a> IterationMatrix<'a> {
    /// T = I − D Aᵀ M A.
    pub fn sart(a: &'a SystemMatrix) -> Self {
        Self {
            a,
            inner: None,
            d: a.col_sums().reciprocals(),
            m: a.row_sums().reciprocals(),
        }
    }

    /// J_F(t) = I − D Aᵀ M J_f(t).
    pub fn psart(a: &'a SystemMatrix, model: &LacModel, spectrum: &Spectrum, t: &[f64]) -> Result<Self> {
        Ok(Self {
            a,
            inner: Some(jacobian_f(a, model, spectrum, t)?),
            d: a.col_sums().reciprocals(),
            m: a.row_sums().reciprocals(),
        })
    }

    fn inner(&self) -> &CsrMatrix {
        self.inner.as_ref().unwrap_or_else(|| self.a.csr())
    }

    /// Materializes the `n × n` matrix; intended for small `n`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.a.n_cols();
        let mut out = DMatrix::identity(n, n);
        let at = self.a.csc();
        let j = self.inner();
        // (D Aᵀ M J)[r, c] = d_r Σ_i a_ir m_i J_ic
        for r in 0..n {
            let (rays, vals) = at.row(r);
            for (&i, &a_ir) in rays.iter().zip(vals) {
                let (cols, jvals) = j.row(i);
                for (&c, &j_ic) in cols.iter().zip(jvals) {
                    out[(r, c)] -= self.d[r] * a_ir * self.m[i] * j_ic;
                }
            }
        }
        out
    }
}

impl LinearOperator for IterationMatrix<'_> {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut r = self.inner().mul_vec(x);
        for (ri, mi) in r.iter_mut().zip(&self.m) {
            *ri *= mi;
        }
        self.a.backproject_into(&r, out);
        for ((o, &xj), &dj) in out.iter_mut().zip(x).zip(&self.d) {
            *o = xj - dj * *o;
        }
    }
}

/// Largest relative deviation from additivity and homogeneity over
/// `probes` random vector pairs.
pub fn check_linearity(op: &dyn LinearOperator, probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let alpha: f64 = rng.random_range(-3.0..3.0);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + alpha * q).collect();
        let (ox, oy, os) = (op.apply_vec(&x), op.apply_vec(&y), op.apply_vec(&sum));
        let scale = ox.iter().chain(&oy).fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            worst = worst.max((os[i] - ox[i] - alpha * oy[i]).abs() / scale);
        }
    }
    worst
}
