//! Flag groups shared between subcommands and their resolution into core
//! types.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use psart_core::io::Grid;
use psart_core::materials::{LacModel, DEFAULT_REFERENCE_KEV};
use psart_core::phantoms::{head_phantom, two_pixel_object, MIN_HEAD_SIZE};
use psart_core::projection::{ParallelBeamGeometry, SystemMatrix};
use psart_core::reconstruction::SolverConfig;
use psart_core::spectra::Spectrum;

pub const DEFAULT_SIZE: usize = 64;
pub const DEFAULT_PIXEL_PITCH: f64 = 0.25;

pub fn read_grid(field: &str, path: &Path) -> Result<Grid> {
    Grid::read(path).with_context(|| format!("{field}: cannot load {}", path.display()))
}

fn positive(field: &str, v: f64) -> Result<f64> {
    ensure!(v.is_finite() && v > 0.0, "{field}: must be a positive number, got {v}");
    Ok(v)
}

fn at_least_one(field: &str, v: usize) -> Result<usize> {
    ensure!(v >= 1, "{field}: must be at least 1");
    Ok(v)
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct GeometryArgs {
    /// Image width and height in pixels [default: 64]
    #[arg(long)]
    pub size: Option<usize>,
    /// Number of views spread uniformly over [0°, 180°) [default: 2 × size]
    #[arg(long)]
    pub views: Option<usize>,
    /// Pixel side length in cm [default: 0.25]
    #[arg(long)]
    pub pixel_pitch: Option<f64>,
    /// Detector bins per view [default: size]
    #[arg(long)]
    pub detectors: Option<usize>,
    /// Detector bin width in cm [default: pixel pitch]
    #[arg(long)]
    pub detector_pitch: Option<f64>,
    /// Dense system matrix CSV, one row per ray, used instead of a
    /// parallel-beam geometry
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

/// A system matrix plus the shapes its images and sinograms are stored in.
pub struct System {
    pub a: SystemMatrix,
    pub image_shape: (usize, usize),
    pub sinogram_shape: (usize, usize),
    /// Whether images are square rasters worth writing as PGM.
    pub raster: bool,
}

impl System {
    fn dense(a: SystemMatrix) -> Self {
        Self {
            image_shape: (a.n_cols(), 1),
            sinogram_shape: (a.n_rows(), 1),
            raster: false,
            a,
        }
    }

    pub fn image_grid(&self, data: Vec<f64>) -> Grid {
        Grid::new(self.image_shape.0, self.image_shape.1, data).expect("image length matches the system")
    }

    pub fn sinogram_grid(&self, data: Vec<f64>) -> Grid {
        Grid::new(self.sinogram_shape.0, self.sinogram_shape.1, data).expect("sinogram length matches the system")
    }
}

impl GeometryArgs {
    fn has_beam_fields(&self) -> bool {
        self.size.is_some()
            || self.views.is_some()
            || self.pixel_pitch.is_some()
            || self.detectors.is_some()
            || self.detector_pitch.is_some()
    }

    pub fn size_or(&self, default: usize) -> Result<usize> {
        at_least_one("size", self.size.unwrap_or(default))
    }

    pub fn system(&self, default_size: usize) -> Result<System> {
        if let Some(path) = &self.matrix {
            ensure!(
                !self.has_beam_fields(),
                "matrix: cannot be combined with parallel-beam settings (size, views, pitches, detectors)"
            );
            let grid = read_grid("matrix", path)?;
            let a = SystemMatrix::dense(grid.rows, grid.cols, &grid.data).context("matrix")?;
            return Ok(System::dense(a));
        }
        let size = self.size_or(default_size)?;
        let views = at_least_one("views", self.views.unwrap_or(2 * size))?;
        let pitch = positive("pixel-pitch", self.pixel_pitch.unwrap_or(DEFAULT_PIXEL_PITCH))?;
        let detectors = at_least_one("detectors", self.detectors.unwrap_or(size))?;
        let detector_pitch = positive("detector-pitch", self.detector_pitch.unwrap_or(pitch))?;
        let geometry = ParallelBeamGeometry::with_detectors(size, views, pitch, detectors, detector_pitch);
        let a = SystemMatrix::parallel_beam(geometry).context("geometry")?;
        Ok(System {
            a,
            image_shape: (size, size),
            sinogram_shape: (views, detectors),
            raster: true,
        })
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct ModelArgs {
    /// Spectrum CSV (`energy_kev,weight`) [default: bundled 130 kVp]
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Use a single energy bin at this energy instead of a spectrum
    #[arg(long)]
    pub mono_kev: Option<f64>,
    /// Materials manifest CSV (`name,path`) [default: bundled tissues]
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Energy at which reconstructed attenuation is defined [default: 70]
    #[arg(long)]
    pub reference_kev: Option<f64>,
}

impl ModelArgs {
    pub fn model(&self) -> Result<LacModel> {
        let reference = positive("reference-kev", self.reference_kev.unwrap_or(DEFAULT_REFERENCE_KEV))?;
        match &self.materials {
            Some(path) => LacModel::load_manifest(path, reference)
                .with_context(|| format!("materials: cannot load {}", path.display())),
            None if reference == DEFAULT_REFERENCE_KEV => Ok(LacModel::bundled()),
            None => LacModel::new(LacModel::bundled().materials().to_vec(), reference).context("reference-kev"),
        }
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        match (&self.spectrum, self.mono_kev) {
            (Some(_), Some(_)) => bail!("mono-kev: cannot be combined with spectrum"),
            (Some(path), None) => {
                Spectrum::load(path).with_context(|| format!("spectrum: cannot load {}", path.display()))
            }
            (None, Some(kev)) => Spectrum::monoenergetic(kev).context("mono-kev"),
            (None, None) => Ok(Spectrum::bundled_130kvp()),
        }
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct SolverArgs {
    /// Iteration cap [default: 1000]
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Stop once the ∞-norm of the update falls below this [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Previous iterates searched for a repeat [default: 8]
    #[arg(long)]
    pub cycle_window: Option<usize>,
    /// Distance below which an iterate counts as a repeat [default: 1e-9]
    #[arg(long)]
    pub cycle_tol: Option<f64>,
}

impl SolverArgs {
    pub fn config(&self, defaults: SolverConfig) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            max_iterations: at_least_one("max-iterations", self.max_iterations.unwrap_or(defaults.max_iterations))?,
            convergence_tol: positive("tol", self.tol.unwrap_or(defaults.convergence_tol))?,
            cycle_window: self.cycle_window.unwrap_or(defaults.cycle_window),
            cycle_tol: positive("cycle-tol", self.cycle_tol.unwrap_or(defaults.cycle_tol))?,
            ..defaults
        };
        Ok(cfg)
    }
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    /// Ellipse head phantom on the geometry's pixel grid
    #[default]
    Head,
    /// The two-pixel object with its fixed two-ray system
    TwoPixel,
}

/// Where the ground-truth attenuation map comes from.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct ObjectArgs {
    /// Attenuation map CSV at the reference energy
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Built-in object [default: head]
    #[arg(long, value_enum)]
    pub phantom: Option<PhantomKind>,
    /// First pixel of the two-pixel object, cm⁻¹ [default: 0.1]
    #[arg(long)]
    pub t1: Option<f64>,
    /// Second pixel of the two-pixel object, cm⁻¹ [default: 0.16]
    #[arg(long)]
    pub t2: Option<f64>,
}

/// Resolves the system and the attenuation map it acts on.
pub fn scene(geometry: &GeometryArgs, object: &ObjectArgs) -> Result<(System, Vec<f64>)> {
    if let Some(path) = &object.image {
        ensure!(object.phantom.is_none(), "phantom: cannot be combined with image");
        let grid = read_grid("image", path)?;
        let default_size = if grid.rows == grid.cols { grid.rows } else { DEFAULT_SIZE };
        let system = geometry.system(default_size)?;
        ensure!(
            grid.data.len() == system.a.n_cols(),
            "image: holds {} values but the system has {} pixels",
            grid.data.len(),
            system.a.n_cols()
        );
        return Ok((system, grid.data));
    }
    match object.phantom.unwrap_or_default() {
        PhantomKind::TwoPixel => {
            ensure!(
                !geometry.has_beam_fields(),
                "phantom: the two-pixel object has its own rays; drop the parallel-beam settings"
            );
            let (a, t) = two_pixel_object(object.t1.unwrap_or(0.1), object.t2.unwrap_or(0.16));
            let system = match &geometry.matrix {
                Some(_) => geometry.system(DEFAULT_SIZE)?,
                None => System::dense(a),
            };
            ensure!(system.a.n_cols() == 2, "matrix: the two-pixel object needs exactly 2 columns");
            Ok((system, t.0))
        }
        PhantomKind::Head => {
            ensure!(geometry.matrix.is_none(), "phantom: the head phantom needs a parallel-beam geometry, not a matrix");
            ensure!(
                object.t1.is_none() && object.t2.is_none(),
                "t1: only applies to the two-pixel phantom"
            );
            let system = geometry.system(DEFAULT_SIZE)?;
            let size = system.image_shape.0;
            ensure!(size >= MIN_HEAD_SIZE, "size: the head phantom needs at least {MIN_HEAD_SIZE} pixels");
            Ok((system, head_phantom(size).context("size")?.0))
        }
    }
}
