use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::materials::LacModel;
use crate::projection::{CsrMatrix, PolyProjector, SystemMatrix};
use crate::spectra::Spectrum;

/// Jacobian of `f(t) = −ln P(t) + ln p` with respect to `t`. Entry `(i, j)`
/// is `a_ij / [P(t)]_i · Σ_h I_h exp(−⟨a_i, μ(t, ε_h)⟩) ∂μ/∂t(t_j, ε_h)`; it
/// shares the sparsity pattern of `A`.
pub fn jacobian_f(a: &SystemMatrix, model: &LacModel, spectrum: &Spectrum, t: &[f64]) -> Result<CsrMatrix> {
    let projector = PolyProjector::new(model, spectrum)?;
    let h_count = projector.energy_count();
    let attenuated = projector.attenuated(a, t)?;
    let mut totals = Vec::with_capacity(a.n_rows());
    for (i, chunk) in attenuated.chunks_exact(h_count).enumerate() {
        let p: f64 = chunk.iter().sum();
        if !(p > 0.0) {
            return Err(Error::ZeroProjection(i));
        }
        totals.push(p);
    }
    let table = projector.table();
    let slopes: Vec<f64> = t
        .iter()
        .flat_map(|&tj| (0..h_count).map(move |h| table.dmu(tj, h)))
        .collect();
    Ok(a.csr().map_entries(|i, j, a_ij| {
        let w = &attenuated[i * h_count..(i + 1) * h_count];
        let g = &slopes[j * h_count..(j + 1) * h_count];
        let weighted: f64 = w.iter().zip(g).map(|(x, y)| x * y).sum();
        a_ij * weighted / totals[i]
    }))
}

/// [`jacobian_f`] as a dense `m × n` matrix.
pub fn jacobian_f_dense(a: &SystemMatrix, model: &LacModel, spectrum: &Spectrum, t: &[f64]) -> Result<DMatrix<f64>> {
    Ok(jacobian_f(a, model, spectrum, t)?.to_dense())
}
