//! `phantom`, `simulate` and `reconstruct`.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use psart_core::io::{columns_to_csv, Grid};
use psart_core::phantoms::{head_phantom, two_pixel_object, BONE_LAC, MIN_HEAD_SIZE};
use psart_core::projection::{post_log, PolyProjector, Sinogram};
use psart_core::reconstruction::{run, Art, IterationReport, Part, Psart, Recording, Sart, SolverConfig, Status, Stepper};

use crate::args::{read_grid, scene, GeometryArgs, ModelArgs, ObjectArgs, PhantomKind, SolverArgs};
use crate::output::Run;

const DEFAULT_PHANTOM_SIZE: usize = 256;

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct PhantomArgs {
    /// Which object to emit [default: head]
    #[arg(long, value_enum)]
    pub kind: Option<PhantomKind>,
    /// Head phantom width and height in pixels [default: 256]
    #[arg(long)]
    pub size: Option<usize>,
    /// First pixel of the two-pixel object, cm⁻¹ [default: 0.1]
    #[arg(long)]
    pub t1: Option<f64>,
    /// Second pixel of the two-pixel object, cm⁻¹ [default: 0.16]
    #[arg(long)]
    pub t2: Option<f64>,
}

pub fn phantom(args: &PhantomArgs, out: &Path) -> Result<()> {
    let mut run = Run::new(out, "phantom", args)?;
    match args.kind.unwrap_or_default() {
        PhantomKind::Head => {
            ensure!(args.t1.is_none() && args.t2.is_none(), "t1: only applies to the two-pixel phantom");
            let size = args.size.unwrap_or(DEFAULT_PHANTOM_SIZE);
            ensure!(size >= MIN_HEAD_SIZE, "size: the head phantom needs at least {MIN_HEAD_SIZE} pixels");
            let grid = Grid::new(size, size, head_phantom(size)?.0)?;
            run.write_grid("phantom.csv", &grid)?;
            run.write_pgm("phantom.pgm", &grid, (0.0, BONE_LAC))?;
            println!("head phantom {size}x{size} written to {}", out.display());
        }
        PhantomKind::TwoPixel => {
            ensure!(args.size.is_none(), "size: the two-pixel object is always 2 pixels");
            let (a, t) = two_pixel_object(args.t1.unwrap_or(0.1), args.t2.unwrap_or(0.16));
            run.write_grid("phantom.csv", &Grid::new(2, 1, t.0)?)?;
            run.write_grid("matrix.csv", &Grid::new(2, 2, dense_rows(&a))?)?;
            println!("two-pixel object written to {}", out.display());
        }
    }
    run.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub object: ObjectArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

/// Writes noiseless polyenergetic intensities and their post-log line
/// integrals for an attenuation map.
pub fn simulate(args: &SimulateArgs, out: &Path) -> Result<()> {
    let (system, t) = scene(&args.geometry, &args.object)?;
    let model = args.model.model()?;
    let spectrum = args.model.spectrum()?;
    let projector = PolyProjector::new(&model, &spectrum)?;
    let p = projector.project(&system.a, &t).context("simulate")?;
    let b = post_log(&p, &spectrum)?;

    let mut run = Run::new(out, "simulate", args)?;
    let intensity = system.sinogram_grid(p.values);
    let line_integrals = system.sinogram_grid(b.values);
    run.write_grid("intensity.csv", &intensity)?;
    run.write_grid("line_integrals.csv", &line_integrals)?;
    run.write_grid("image.csv", &system.image_grid(t))?;
    if system.raster {
        let hi = line_integrals.data.iter().cloned().fold(0.0, f64::max);
        run.write_pgm("line_integrals.pgm", &line_integrals, (0.0, hi))?;
    } else {
        run.write_grid("matrix.csv", &Grid::new(system.a.n_rows(), system.a.n_cols(), dense_rows(&system.a))?)?;
    }
    run.report("rays", system.a.n_rows())?;
    run.report("pixels", system.a.n_cols())?;
    run.report("energy_bins", spectrum.len())?;
    println!(
        "simulated {} rays over {} pixels with {} energy bins",
        system.a.n_rows(),
        system.a.n_cols(),
        spectrum.len()
    );
    run.finish()
}

fn dense_rows(a: &psart_core::projection::SystemMatrix) -> Vec<f64> {
    let d = a.to_dense();
    (0..d.nrows()).flat_map(|r| (0..d.ncols()).map(move |c| (r, c))).map(|(r, c)| d[(r, c)]).collect()
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Art,
    Sart,
    Part,
    Psart,
}

impl Algorithm {
    fn polyenergetic(self) -> bool {
        matches!(self, Algorithm::Part | Algorithm::Psart)
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct ReconstructArgs {
    /// Update rule; art/sart read line integrals, part/psart read intensities
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    /// Sinogram CSV
    #[arg(long)]
    pub sinogram: Option<PathBuf>,
    /// Starting image CSV [default: zeros]
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Ground-truth image CSV; adds RMSE and max error to the report
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Lower end of the PGM display window, cm⁻¹ [default: 0]
    #[arg(long)]
    pub window_min: Option<f64>,
    /// Upper end of the PGM display window, cm⁻¹ [default: 0.4948]
    #[arg(long)]
    pub window_max: Option<f64>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Serialize)]
struct ErrorStats {
    rmse: f64,
    max_abs: f64,
}

fn error_stats(x: &[f64], truth: &[f64]) -> ErrorStats {
    let sq: f64 = x.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    ErrorStats {
        rmse: (sq / x.len() as f64).sqrt(),
        max_abs: x.iter().zip(truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
    }
}

pub fn status_label(status: Status) -> String {
    match status {
        Status::Converged => "converged".into(),
        Status::Cycled { period } => format!("cycled (period {period})"),
        Status::MaxIterations => "max iterations".into(),
    }
}

pub fn trajectory_csv(report: &IterationReport) -> String {
    let index: Vec<f64> = (0..report.iterates.len()).map(|k| k as f64).collect();
    let t1: Vec<f64> = report.iterates.iter().map(|x| x[0]).collect();
    let t2: Vec<f64> = report.iterates.iter().map(|x| x[1]).collect();
    columns_to_csv(&["iteration", "t1", "t2"], &[&index, &t1, &t2])
}

pub fn residuals_csv(report: &IterationReport) -> String {
    let index: Vec<f64> = (1..=report.residual_history.len()).map(|k| k as f64).collect();
    columns_to_csv(&["iteration", "update_norm"], &[&index, &report.residual_history])
}

pub fn reconstruct(args: &ReconstructArgs, out: &Path) -> Result<()> {
    let Some(algorithm) = args.algorithm else {
        bail!("algorithm: missing; choose art, sart, part or psart");
    };
    let Some(sinogram_path) = &args.sinogram else {
        bail!("sinogram: missing");
    };
    if !algorithm.polyenergetic() && (args.model.spectrum.is_some() || args.model.mono_kev.is_some()) {
        bail!("spectrum: only used by part and psart");
    }
    let system = args.geometry.system(crate::args::DEFAULT_SIZE)?;
    let a = &system.a;
    let data = read_grid("sinogram", sinogram_path)?;
    ensure!(
        data.data.len() == a.n_rows(),
        "sinogram: holds {} values but the system has {} rays",
        data.data.len(),
        a.n_rows()
    );
    let load_image = |field: &str, path: &Path| -> Result<Vec<f64>> {
        let grid = read_grid(field, path)?;
        ensure!(
            grid.data.len() == a.n_cols(),
            "{field}: holds {} values but the system has {} pixels",
            grid.data.len(),
            a.n_cols()
        );
        Ok(grid.data)
    };
    let initial = args.initial.as_deref().map(|p| load_image("initial", p)).transpose()?;
    let reference = args.reference.as_deref().map(|p| load_image("reference", p)).transpose()?;
    let two_pixels = a.n_cols() == 2;
    let solver = args.solver.config(SolverConfig {
        initial_estimate: initial,
        recording: if two_pixels { Recording::Every(1) } else { Recording::FinalOnly },
        ..SolverConfig::default()
    })?;

    let report = if algorithm.polyenergetic() {
        let model = args.model.model()?;
        let spectrum = args.model.spectrum()?;
        let p = Sinogram::intensity(data.data);
        let stepper: Box<dyn Stepper> = match algorithm {
            Algorithm::Part => Box::new(Part::new(a, &model, &spectrum, &p).context("sinogram")?),
            _ => Box::new(Psart::new(a, &model, &spectrum, &p).context("sinogram")?),
        };
        run(stepper.as_ref(), &solver)?
    } else {
        let b = Sinogram::line_integral(data.data);
        let stepper: Box<dyn Stepper> = match algorithm {
            Algorithm::Art => Box::new(Art::new(a, &b)?),
            _ => Box::new(Sart::new(a, &b)?),
        };
        run(stepper.as_ref(), &solver)?
    };

    let mut out_run = Run::new(out, "reconstruct", args)?;
    let image = system.image_grid(report.final_iterate.clone());
    out_run.write_grid("final.csv", &image)?;
    if system.raster {
        let window = (args.window_min.unwrap_or(0.0), args.window_max.unwrap_or(BONE_LAC));
        ensure!(window.0 < window.1, "window-min: must be below window-max");
        out_run.write_pgm("final.pgm", &image, window)?;
    }
    out_run.write("residuals.csv", residuals_csv(&report).as_bytes())?;
    if two_pixels {
        out_run.write("trajectory.csv", trajectory_csv(&report).as_bytes())?;
    }
    let status = status_label(report.status);
    out_run.report("status", &status)?;
    out_run.report("iterations", report.iterations_run)?;
    out_run.report("final_update_norm", report.residual_history.last().copied())?;
    let mut summary = format!(
        "{algorithm:?}: {status} after {} iterations",
        report.iterations_run
    )
    .to_lowercase();
    if let Some(truth) = &reference {
        let stats = error_stats(&report.final_iterate, truth);
        summary.push_str(&format!(", rmse {:.3e}, max error {:.3e}", stats.rmse, stats.max_abs));
        out_run.report("error", stats)?;
    }
    println!("{summary}");
    out_run.finish()
}
