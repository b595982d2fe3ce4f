//! `specrad`, `convmap` and `verify-lemmas`.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use psart_core::analysis::{
    convergence_map, power_iteration, spectral_radius_by_roots, verify_lemma_a1, verify_lemma_a2, verify_theorem_a3,
    ConvergenceMap, ConvergenceMapConfig, IterationMatrix, LinearOperator, Verification, MAX_LEMMA_DIM,
};
use psart_core::io::{columns_to_csv, encode_ppm_diverging, Grid};
use psart_core::materials::LacModel;
use psart_core::projection::two_pixel_matrix;
use psart_core::reconstruction::SolverConfig;

use crate::args::{read_grid, scene, GeometryArgs, ModelArgs, ObjectArgs};
use crate::output::Run;

/// Largest size for which `specrad` also reports the exact radius.
const EXACT_RADIUS_MAX_DIM: usize = 8;

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// SART iteration matrix T = I − D Aᵀ M A
    SartT,
    /// pSART Jacobian J_F at the object
    PsartJf,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct SpecradArgs {
    #[arg(long, value_enum)]
    pub operator: Option<OperatorKind>,
    /// Power-iteration residual tolerance [default: 1e-4]
    #[arg(long)]
    pub power_tol: Option<f64>,
    /// Power-iteration cap [default: 100000]
    #[arg(long)]
    pub power_max_iterations: Option<usize>,
    /// Seed of the random start vector [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub object: ObjectArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Serialize)]
pub struct SpecradReport {
    pub eigenvalue: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Spectral radius from the characteristic polynomial, small systems only.
    pub exact_radius: Option<f64>,
}

pub fn estimate(op: &IterationMatrix<'_>, tol: f64, max_iterations: usize, seed: u64) -> Result<SpecradReport> {
    let r = power_iteration(op, tol, max_iterations, seed)?;
    let exact_radius = (op.dim() <= EXACT_RADIUS_MAX_DIM).then(|| spectral_radius_by_roots(&op.to_dense()));
    Ok(SpecradReport {
        eigenvalue: r.eigenvalue,
        iterations: r.iterations,
        residual: r.final_residual,
        converged: r.converged,
        exact_radius,
    })
}

pub fn specrad(args: &SpecradArgs, out: &Path) -> Result<()> {
    let Some(operator) = args.operator else {
        bail!("operator: missing; choose sart-t or psart-jf");
    };
    let tol = args.power_tol.unwrap_or(1e-4);
    ensure!(tol.is_finite() && tol > 0.0, "power-tol: must be positive");
    let max_iterations = args.power_max_iterations.unwrap_or(100_000);
    ensure!(max_iterations >= 1, "power-max-iterations: must be at least 1");
    let (system, t) = scene(&args.geometry, &args.object)?;
    let op = match operator {
        OperatorKind::SartT => IterationMatrix::sart(&system.a),
        OperatorKind::PsartJf => {
            let model = args.model.model()?;
            let spectrum = args.model.spectrum()?;
            IterationMatrix::psart(&system.a, &model, &spectrum, &t).context("object")?
        }
    };
    let report = estimate(&op, tol, max_iterations, args.seed.unwrap_or(0))?;
    println!(
        "lambda = {:.10}, iterations = {}, residual = {:.3e}, converged = {}",
        report.eigenvalue, report.iterations, report.residual, report.converged
    );
    if let Some(rho) = report.exact_radius {
        println!("exact spectral radius = {rho:.10}");
    }
    let mut run = Run::new(out, "specrad", args)?;
    run.report("power_iteration", &report)?;
    run.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct ConvmapArgs {
    /// Lower end of the t1 axis, cm⁻¹ [default: 0.02]
    #[arg(long)]
    pub t1_min: Option<f64>,
    /// Upper end of the t1 axis, cm⁻¹ [default: 0.30]
    #[arg(long)]
    pub t1_max: Option<f64>,
    /// Lower end of the t2 axis, cm⁻¹ [default: 0.02]
    #[arg(long)]
    pub t2_min: Option<f64>,
    /// Upper end of the t2 axis, cm⁻¹ [default: 0.30]
    #[arg(long)]
    pub t2_max: Option<f64>,
    /// Nodes per axis [default: 60]
    #[arg(long)]
    pub grid: Option<usize>,
    /// pSART iteration cap per cell [default: 5000]
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// pSART convergence tolerance per cell [default: 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Distance from ρ = 1 at which the heatmap saturates [default: 0.25]
    #[arg(long)]
    pub color_range: Option<f64>,
    /// Two-column system matrix CSV [default: the two-pixel system]
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

impl ConvmapArgs {
    fn config(&self) -> Result<ConvergenceMapConfig> {
        let d = ConvergenceMapConfig::default();
        let grid_size = self.grid.unwrap_or(d.grid_size);
        ensure!(grid_size >= 2, "grid: must be at least 2");
        let tol = self.tol.unwrap_or(d.solver.convergence_tol);
        ensure!(tol.is_finite() && tol > 0.0, "tol: must be positive");
        let max_iterations = self.max_iterations.unwrap_or(d.solver.max_iterations);
        ensure!(max_iterations >= 1, "max-iterations: must be at least 1");
        Ok(ConvergenceMapConfig {
            t1_range: (self.t1_min.unwrap_or(d.t1_range.0), self.t1_max.unwrap_or(d.t1_range.1)),
            t2_range: (self.t2_min.unwrap_or(d.t2_range.0), self.t2_max.unwrap_or(d.t2_range.1)),
            grid_size,
            solver: SolverConfig {
                max_iterations,
                convergence_tol: tol,
                ..d.solver
            },
        })
    }
}

#[derive(Serialize)]
pub struct ConvmapReport {
    pub cells: usize,
    pub agreeing: usize,
    pub counted: usize,
    pub agreement: f64,
    pub jump_ratio: f64,
}

/// Agreement is counted on cells with `|ρ − 1|` above this margin.
pub const AGREEMENT_MARGIN: f64 = 0.02;

/// Writes the two grids, their node coordinates and the heatmap.
pub fn write_convmap(run: &mut Run, map: &ConvergenceMap, model: &LacModel, color_range: f64) -> Result<ConvmapReport> {
    let size = map.size();
    let rho = Grid::new(size, size, map.spectral_radius.clone())?;
    let converged = Grid::new(size, size, map.converged.iter().map(|&c| f64::from(u8::from(c))).collect())?;
    run.write_grid("spectral_radius.csv", &rho)?;
    run.write_grid("converged.csv", &converged)?;
    let index: Vec<f64> = (0..size).map(|k| k as f64).collect();
    run.write("nodes.csv", columns_to_csv(&["index", "t1", "t2"], &[&index, &map.t1_nodes, &map.t2_nodes]).as_bytes())?;
    // t2 grows upward in the picture
    let flipped: Vec<f64> = (0..size).rev().flat_map(|r| rho.data[r * size..(r + 1) * size].to_vec()).collect();
    run.write("spectral_radius.ppm", &encode_ppm_diverging(&Grid::new(size, size, flipped)?, 1.0, color_range))?;

    let (agreeing, counted) = map.agreement(AGREEMENT_MARGIN);
    let lo = map.t1_nodes[0].min(map.t2_nodes[0]);
    let hi = map.t1_nodes[size - 1].max(map.t2_nodes[size - 1]);
    let boundaries: Vec<f64> = model.reference_lacs().iter().copied().filter(|&b| lo < b && b <= hi).collect();
    let jumps = map.jump_stats(&boundaries, &boundaries);
    let report = ConvmapReport {
        cells: size * size,
        agreeing,
        counted,
        agreement: if counted == 0 { 1.0 } else { agreeing as f64 / counted as f64 },
        jump_ratio: jumps.ratio(),
    };
    run.report("convergence_map", &report)?;
    Ok(report)
}

pub fn convmap(args: &ConvmapArgs, out: &Path) -> Result<()> {
    let cfg = args.config()?;
    let color_range = args.color_range.unwrap_or(0.25);
    ensure!(color_range.is_finite() && color_range > 0.0, "color-range: must be positive");
    let a = match &args.matrix {
        Some(path) => {
            let g = read_grid("matrix", path)?;
            psart_core::projection::SystemMatrix::dense(g.rows, g.cols, &g.data).context("matrix")?
        }
        None => two_pixel_matrix(),
    };
    let model = args.model.model()?;
    let spectrum = args.model.spectrum()?;
    let map = convergence_map(&a, &model, &spectrum, &cfg).context("convergence map")?;
    let mut run = Run::new(out, "convmap", args)?;
    let report = write_convmap(&mut run, &map, &model, color_range)?;
    print_convmap(&report);
    run.finish()
}

pub fn print_convmap(report: &ConvmapReport) {
    println!(
        "{} cells; sign(1 - rho) matches pSART outcome on {}/{} cells away from rho = 1 ({:.2}%); jump ratio {:.2}",
        report.cells,
        report.agreeing,
        report.counted,
        100.0 * report.agreement,
        report.jump_ratio
    );
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct LemmaArgs {
    /// Number of random matrices [default: 100]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Largest column count n; rows are drawn from [n, 2n] [default: 6]
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long)]
    /// [default: 0]
    pub seed: Option<u64>,
}

/// Strictly positive `m × n` matrix with entries in `[0.01, 1)`.
pub fn random_positive_matrix(rng: &mut ChaCha8Rng, max_n: usize) -> DMatrix<f64> {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(n..=2 * n);
    DMatrix::from_fn(m, n, |_, _| rng.random_range(0.01..1.0))
}

pub fn verify_lemmas(args: &LemmaArgs, out: &Path) -> Result<bool> {
    let trials = args.trials.unwrap_or(100);
    ensure!(trials >= 1, "trials: must be at least 1");
    let max_n = args.max_n.unwrap_or(6);
    ensure!((1..=MAX_LEMMA_DIM).contains(&max_n), "max-n: must lie in 1..={MAX_LEMMA_DIM}");
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.unwrap_or(0));

    let header = [
        "trial", "m", "n", "rank_deficient", "a1", "a2", "a3", "max_row_sum_error", "max_imag", "min_real", "rho_t",
    ];
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(trials); header.len()];
    let mut passed = [0usize; 3];
    let mut skipped = 0;
    for trial in 0..trials {
        let a = random_positive_matrix(&mut rng, max_n);
        let (a1, a2, a3) = (verify_lemma_a1(&a)?, verify_lemma_a2(&a)?, verify_theorem_a3(&a)?);
        let row = match (a1, a2, a3) {
            (Verification::Checked(a1), Verification::Checked(a2), Verification::Checked(a3)) => {
                let row_err = a1.row_sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
                for (k, ok) in [a1.passed, a2.passed, a3.passed].into_iter().enumerate() {
                    passed[k] += usize::from(ok);
                }
                let flag = |b: bool| f64::from(u8::from(b));
                [0.0, flag(a1.passed), flag(a2.passed), flag(a3.passed), row_err, a2.max_imag, a2.min_real, a3.spectral_radius]
            }
            _ => {
                skipped += 1;
                [1.0, 0.0, 0.0, 0.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN]
            }
        };
        let lead = [trial as f64, a.nrows() as f64, a.ncols() as f64];
        for (col, v) in cols.iter_mut().zip(lead.into_iter().chain(row)) {
            col.push(v);
        }
    }
    let checked = trials - skipped;
    let names = ["lemma A.1 (unit row sums of W)", "lemma A.2 (real positive spectrum of W)", "theorem A.3 (rho(T) < 1)"];
    let mut all = skipped == 0;
    for (name, &ok) in names.iter().zip(&passed) {
        let verdict = if ok == checked { "PASS" } else { "FAIL" };
        all &= ok == checked;
        println!("{verdict} {name}: {ok}/{checked}");
    }
    if skipped > 0 {
        println!("FAIL {skipped} rank-deficient draws could not be checked");
    }

    let mut run = Run::new(out, "verify-lemmas", args)?;
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    run.write("lemmas.csv", columns_to_csv(&header, &refs).as_bytes())?;
    run.report("trials", trials)?;
    run.report("rank_deficient", skipped)?;
    run.report("passed", passed)?;
    run.report("all_passed", all)?;
    run.finish()?;
    Ok(all)
}
