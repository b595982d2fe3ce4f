use super::eigen::spectral_radius_2x2;
use super::operator::IterationMatrix;
use crate::error::{Error, Result};
use crate::materials::LacModel;
use crate::par;
use crate::projection::{PolyProjector, SystemMatrix};
use crate::reconstruction::{run, Psart, SolverConfig, Status};
use crate::spectra::Spectrum;

/// Grid nodes closer than this to a reference attenuation are moved off it.
const BOUNDARY_GUARD: f64 = 1e-9;
const BOUNDARY_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMapConfig {
    pub t1_range: (f64, f64),
    pub t2_range: (f64, f64),
    pub grid_size: usize,
    /// Solver settings for the empirical pSART runs (initial estimate is
    /// forced to zero).
    pub solver: SolverConfig,
}

impl Default for ConvergenceMapConfig {
    fn default() -> Self {
        Self {
            t1_range: (0.02, 0.30),
            t2_range: (0.02, 0.30),
            grid_size: 60,
            solver: SolverConfig {
                max_iterations: 5000,
                convergence_tol: 1e-8,
                ..SolverConfig::default()
            },
        }
    }
}

/// Spectral radius of J_F at the solution and empirical pSART outcome on a
/// `(t1, t2)` grid. Cell `(r, c)` (stored at `r * size + c`) has
/// `t1 = t1_nodes[c]`, `t2 = t2_nodes[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMap {
    pub t1_nodes: Vec<f64>,
    pub t2_nodes: Vec<f64>,
    pub spectral_radius: Vec<f64>,
    pub converged: Vec<bool>,
}

/// Mean absolute jump of ρ between neighbouring cells that straddle a
/// boundary versus neighbours inside one material segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpStats {
    pub across_mean: f64,
    pub within_mean: f64,
    pub across_pairs: usize,
    pub within_pairs: usize,
}

impl JumpStats {
    pub fn ratio(&self) -> f64 {
        self.across_mean / self.within_mean
    }
}

fn nodes(range: (f64, f64), count: usize, guards: &[f64]) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let t = if count == 1 {
                range.0
            } else {
                range.0 + (range.1 - range.0) * k as f64 / (count - 1) as f64
            };
            if guards.iter().any(|g| (t - g).abs() < BOUNDARY_GUARD) {
                t + BOUNDARY_NUDGE
            } else {
                t
            }
        })
        .collect()
}

/// Builds the map for a two-pixel system `a`. Each cell simulates exact data
/// `p = P(t*)`, evaluates ρ(J_F(t*)) in closed form and runs pSART from zero;
/// cycles, iteration caps and numerical breakdown all count as not converged.
pub fn convergence_map(
    a: &SystemMatrix,
    model: &LacModel,
    spectrum: &Spectrum,
    config: &ConvergenceMapConfig,
) -> Result<ConvergenceMap> {
    if a.n_cols() != 2 {
        return Err(Error::DimensionMismatch {
            what: "convergence map pixels",
            expected: 2,
            found: a.n_cols(),
        });
    }
    if config.grid_size == 0 {
        return Err(Error::InvalidConfig("grid size must be positive".into()));
    }
    config.solver.validate()?;
    let guards = model.reference_lacs();
    let (lo, hi) = (guards[0], guards[guards.len() - 1]);
    for (name, (a, b)) in [("t1", config.t1_range), ("t2", config.t2_range)] {
        if !(lo <= a && a <= b && b <= hi) {
            return Err(Error::InvalidConfig(format!(
                "{name} range [{a}, {b}] must be ordered and inside the material span [{lo}, {hi}]"
            )));
        }
    }
    let t1_nodes = nodes(config.t1_range, config.grid_size, guards);
    let t2_nodes = nodes(config.t2_range, config.grid_size, guards);
    let projector = PolyProjector::new(model, spectrum)?;
    let size = config.grid_size;
    let solver = SolverConfig {
        initial_estimate: None,
        ..config.solver.clone()
    };

    let cells: Vec<Result<(f64, bool)>> = par::map_tasks(size * size, |cell| {
        let t = [t1_nodes[cell % size], t2_nodes[cell / size]];
        let p = projector.project(a, &t)?;
        let jac = IterationMatrix::psart(a, model, spectrum, &t)?.to_dense();
        let rho = spectral_radius_2x2([[jac[(0, 0)], jac[(0, 1)]], [jac[(1, 0)], jac[(1, 1)]]]);
        let stepper = Psart::new(a, model, spectrum, &p)?;
        let converged = matches!(run(&stepper, &solver), Ok(r) if r.status == Status::Converged);
        Ok((rho, converged))
    });

    let mut spectral_radius = Vec::with_capacity(size * size);
    let mut converged = Vec::with_capacity(size * size);
    for cell in cells {
        let (rho, ok) = cell?;
        spectral_radius.push(rho);
        converged.push(ok);
    }
    Ok(ConvergenceMap {
        t1_nodes,
        t2_nodes,
        spectral_radius,
        converged,
    })
}

impl ConvergenceMap {
    pub fn size(&self) -> usize {
        self.t1_nodes.len()
    }

    /// `(agreeing, counted)` over cells with `|ρ − 1| > margin`, where a cell
    /// agrees when it converged exactly if ρ < 1.
    pub fn agreement(&self, margin: f64) -> (usize, usize) {
        self.spectral_radius
            .iter()
            .zip(&self.converged)
            .filter(|(rho, _)| (**rho - 1.0).abs() > margin)
            .fold((0, 0), |(agree, total), (rho, &ok)| {
                (agree + usize::from((*rho < 1.0) == ok), total + 1)
            })
    }

    /// Jump statistics along both axes. Neighbour pairs straddling a value in
    /// `boundaries` count as "across"; pairs straddling none of `segment_edges`
    /// count as "within".
    pub fn jump_stats(&self, boundaries: &[f64], segment_edges: &[f64]) -> JumpStats {
        let size = self.size();
        let straddles = |lo: f64, hi: f64, set: &[f64]| set.iter().any(|&b| lo < b && b <= hi);
        let (mut across, mut within) = ((0.0, 0usize), (0.0, 0usize));
        let mut visit = |lo: f64, hi: f64, d: f64| {
            if straddles(lo, hi, boundaries) {
                across.0 += d;
                across.1 += 1;
            } else if !straddles(lo, hi, segment_edges) {
                within.0 += d;
                within.1 += 1;
            }
        };
        for r in 0..size {
            for c in 0..size.saturating_sub(1) {
                let d = (self.spectral_radius[r * size + c + 1] - self.spectral_radius[r * size + c]).abs();
                visit(self.t1_nodes[c], self.t1_nodes[c + 1], d);
            }
        }
        for r in 0..size.saturating_sub(1) {
            for c in 0..size {
                let d = (self.spectral_radius[(r + 1) * size + c] - self.spectral_radius[r * size + c]).abs();
                visit(self.t2_nodes[r], self.t2_nodes[r + 1], d);
            }
        }
        JumpStats {
            across_mean: across.0 / across.1.max(1) as f64,
            within_mean: within.0 / within.1.max(1) as f64,
            across_pairs: across.1,
            within_pairs: within.1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::two_pixel_matrix;

    #[test]
    fn nodes_avoid_reference_values() {
        let n = nodes((0.1782, 0.2033), 2, &[0.0, 0.1782, 0.2033]);
        assert_eq!(n, vec![0.1782 + BOUNDARY_NUDGE, 0.2033 + BOUNDARY_NUDGE]);
        let n = nodes((0.02, 0.30), 60, &[0.1782, 0.2033]);
        assert_eq!(n.len(), 60);
        assert_eq!(n[0], 0.02);
        assert!((n[59] - 0.30).abs() < 1e-15);
    }

    #[test]
    fn small_map_marks_reference_cases() {
        let cfg = ConvergenceMapConfig {
            t1_range: (0.1, 0.1),
            t2_range: (0.16, 0.24),
            grid_size: 2,
            ..Default::default()
        };
        let map = convergence_map(&two_pixel_matrix(), &LacModel::bundled(), &Spectrum::bundled_130kvp(), &cfg).unwrap();
        // row 0: t2 = 0.16, row 1: t2 = 0.24; both columns have t1 = 0.1
        assert!(map.spectral_radius[0] < 1.0 && map.converged[0]);
        assert!(map.spectral_radius[2] > 1.0 && !map.converged[2]);
        let (agree, total) = map.agreement(0.02);
        assert_eq!(agree, total);
    }

    #[test]
    fn rejects_non_two_pixel_systems() {
        let a = SystemMatrix::dense(1, 3, &[1.0, 1.0, 1.0]).unwrap();
        assert!(convergence_map(&a, &LacModel::bundled(), &Spectrum::bundled_130kvp(), &Default::default()).is_err());
    }

    #[test]
    fn rejects_ranges_outside_the_material_span() {
        let a = two_pixel_matrix();
        for (t1_range, t2_range) in [((0.2, 0.1), (0.1, 0.2)), ((0.1, 0.2), (-0.1, 0.2)), ((0.1, 0.6), (0.1, 0.2))] {
            let cfg = ConvergenceMapConfig { t1_range, t2_range, grid_size: 2, ..Default::default() };
            let err = convergence_map(&a, &LacModel::bundled(), &Spectrum::bundled_130kvp(), &cfg);
            assert!(matches!(err, Err(Error::InvalidConfig(_))));
        }
    }
}
