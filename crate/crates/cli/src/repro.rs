//! `repro`: fixed recipes for the two-pixel experiments, the convergence map
//! and the head-phantom spectral-radius study.

use std::path::Path;

use anyhow::{ensure, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use psart_core::analysis::{convergence_map, spectral_radius_2x2, ConvergenceMapConfig, IterationMatrix};
use psart_core::io::columns_to_csv;
use psart_core::materials::LacModel;
use psart_core::phantoms::head_phantom;
use psart_core::projection::{two_pixel_matrix, ParallelBeamGeometry, PolyProjector, SystemMatrix};
use psart_core::reconstruction::{run, Art, IterationReport, Part, Psart, Recording, Sart, SolverConfig, Status, Stepper};
use psart_core::spectra::Spectrum;

use crate::analyze::{estimate, print_convmap, write_convmap};
use crate::args::DEFAULT_PIXEL_PITCH;
use crate::output::Run;
use crate::recon::{status_label, trajectory_csv};

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    /// ART and SART trajectories on the monoenergetic two-pixel system
    #[default]
    Fig2,
    /// pSART and pART trajectories at four two-pixel objects
    Fig4,
    /// Spectral radius and empirical convergence over a (t1, t2) grid
    Fig5,
    /// Power-iteration radii of T and J_F for the head phantom
    Table1,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Head phantom size for table1 [default: 64]
    #[arg(long)]
    pub size: Option<usize>,
    /// View count for table1 [default: 120]
    #[arg(long)]
    pub views: Option<usize>,
    /// Start-vector seed for table1 [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

const TRUTH: [f64; 2] = [0.1, 0.16];
const FIG4_T2: [f64; 4] = [0.16, 0.24, 0.203, 0.204];

fn trajectory_config(max_iterations: usize) -> SolverConfig {
    SolverConfig {
        max_iterations,
        convergence_tol: 1e-12,
        recording: Recording::Every(1),
        ..SolverConfig::default()
    }
}

pub fn repro(args: &ReproArgs, out: &Path) -> Result<()> {
    if args.figure != Figure::Table1 {
        ensure!(
            args.size.is_none() && args.views.is_none() && args.seed.is_none(),
            "size: only applies to table1"
        );
    }
    let mut out_run = Run::new(out, "repro", args)?;
    match args.figure {
        Figure::Fig2 => fig2(&mut out_run)?,
        Figure::Fig4 => fig4(&mut out_run)?,
        Figure::Fig5 => fig5(&mut out_run)?,
        Figure::Table1 => table1(args, &mut out_run)?,
    }
    out_run.finish()
}

fn fig2(out: &mut Run) -> Result<()> {
    let a = two_pixel_matrix();
    let b = a.forward(&TRUTH)?;
    let cfg = trajectory_config(500);
    for (name, stepper) in [("art", &Art::new(&a, &b)? as &dyn Stepper), ("sart", &Sart::new(&a, &b)?)] {
        let report = run(stepper, &cfg)?;
        out.write(&format!("{name}_trajectory.csv"), trajectory_csv(&report).as_bytes())?;
        let x = &report.final_iterate;
        println!(
            "{name}: {} after {} iterations at ({:.8}, {:.8})",
            status_label(report.status),
            report.iterations_run,
            x[0],
            x[1]
        );
        out.report(name, summary(&report))?;
    }
    let t = IterationMatrix::sart(&a).to_dense();
    let rho = spectral_radius_2x2([[t[(0, 0)], t[(0, 1)]], [t[(1, 0)], t[(1, 1)]]]);
    println!("rho(T) = {rho:.10}");
    out.report("rho_t", rho)
}

#[derive(Serialize)]
struct RunSummary {
    status: String,
    iterations: usize,
    final_iterate: Vec<f64>,
}

fn summary(report: &IterationReport) -> RunSummary {
    RunSummary {
        status: status_label(report.status),
        iterations: report.iterations_run,
        final_iterate: report.final_iterate.clone(),
    }
}

fn outcome_columns(status: Status) -> (f64, f64) {
    match status {
        Status::Converged => (1.0, 0.0),
        Status::Cycled { period } => (0.0, period as f64),
        Status::MaxIterations => (0.0, 0.0),
    }
}

fn fig4(out: &mut Run) -> Result<()> {
    let a = two_pixel_matrix();
    let model = LacModel::bundled();
    let spectrum = Spectrum::bundled_130kvp();
    let projector = PolyProjector::new(&model, &spectrum)?;
    let cfg = trajectory_config(5000);
    let header = [
        "t1", "t2", "rho_jf", "psart_converged", "psart_period", "psart_iterations", "part_converged", "part_period",
        "part_iterations",
    ];
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for t2 in FIG4_T2 {
        let t = [TRUTH[0], t2];
        let p = projector.project(&a, &t)?;
        let jf = IterationMatrix::psart(&a, &model, &spectrum, &t)?.to_dense();
        let rho = spectral_radius_2x2([[jf[(0, 0)], jf[(0, 1)]], [jf[(1, 0)], jf[(1, 1)]]]);
        let mut row = vec![t[0], t2, rho];
        let psart = Psart::new(&a, &model, &spectrum, &p)?;
        let part = Part::new(&a, &model, &spectrum, &p)?;
        for (name, stepper) in [("psart", &psart as &dyn Stepper), ("part", &part)] {
            let report = run(stepper, &cfg)?;
            out.write(&format!("{name}_t2_{t2:.3}.csv"), trajectory_csv(&report).as_bytes())?;
            let (conv, period) = outcome_columns(report.status);
            row.extend([conv, period, report.iterations_run as f64]);
            println!(
                "t2 = {t2:.3}: rho(J_F) = {rho:.4}, {name} {} after {} iterations",
                status_label(report.status),
                report.iterations_run
            );
        }
        for (col, v) in cols.iter_mut().zip(row) {
            col.push(v);
        }
    }
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    out.write("summary.csv", columns_to_csv(&header, &refs).as_bytes())
}

fn fig5(out: &mut Run) -> Result<()> {
    let model = LacModel::bundled();
    let map = convergence_map(&two_pixel_matrix(), &model, &Spectrum::bundled_130kvp(), &ConvergenceMapConfig::default())?;
    let report = write_convmap(out, &map, &model, 0.25)?;
    print_convmap(&report);
    Ok(())
}

fn table1(args: &ReproArgs, out: &mut Run) -> Result<()> {
    let size = args.size.unwrap_or(64);
    ensure!(size >= psart_core::phantoms::MIN_HEAD_SIZE, "size: the head phantom needs at least 16 pixels");
    let views = args.views.unwrap_or(120);
    ensure!(views >= 1, "views: must be at least 1");
    let seed = args.seed.unwrap_or(0);
    let a = SystemMatrix::parallel_beam(ParallelBeamGeometry::standard(size, views, DEFAULT_PIXEL_PITCH))?;
    let t = head_phantom(size)?;
    let model = LacModel::bundled();
    let spectrum = Spectrum::bundled_130kvp();
    let rt = estimate(&IterationMatrix::sart(&a), 1e-4, 100_000, seed)?;
    let rj = estimate(&IterationMatrix::psart(&a, &model, &spectrum, &t)?, 1e-4, 100_000, seed)?;
    let difference = rt.eigenvalue - rj.eigenvalue;
    println!("rho(T)   = {:.6} ({} iterations, converged = {})", rt.eigenvalue, rt.iterations, rt.converged);
    println!("rho(J_F) = {:.6} ({} iterations, converged = {})", rj.eigenvalue, rj.iterations, rj.converged);
    println!("difference = {difference:.3e}");
    let header = ["rho_t", "iterations_t", "residual_t", "rho_jf", "iterations_jf", "residual_jf", "difference"];
    let values = [
        rt.eigenvalue,
        rt.iterations as f64,
        rt.residual,
        rj.eigenvalue,
        rj.iterations as f64,
        rj.residual,
        difference,
    ];
    let cols: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    out.write("table1.csv", columns_to_csv(&header, &refs).as_bytes())?;
    out.report("sart_t", &rt)?;
    out.report("psart_jf", &rj)
}
