//! System matrices, forward and back projection, and the SART weighting sums.

mod poly;
mod siddon;
mod sparse;

pub use poly::{post_log, PolyProjector};
pub use siddon::{trace, PixelGrid};
pub use sparse::CsrMatrix;

use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::par;

/// Image-domain attenuation values (cm⁻¹ at the reference energy),
/// row-major for 2-D images.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationMap(pub Vec<f64>);

impl Deref for AttenuationMap {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for AttenuationMap {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinogramKind {
    /// Transmitted intensities p.
    Intensity,
    /// Post-log line integrals b.
    LineIntegral,
}

/// Measurement-domain vector, one value per ray.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub kind: SinogramKind,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn intensity(values: Vec<f64>) -> Self {
        Self {
            kind: SinogramKind::Intensity,
            values,
        }
    }

    pub fn line_integral(values: Vec<f64>) -> Self {
        Self {
            kind: SinogramKind::LineIntegral,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Parallel-beam acquisition over a square image.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelBeamGeometry {
    pub image_size: usize,
    pub pixel_pitch: f64,
    pub detector_count: usize,
    pub detector_pitch: f64,
    /// View angles in radians.
    pub angles: Vec<f64>,
}

impl ParallelBeamGeometry {
    /// `views` angles uniformly spaced over `[0°, 180°)`, one detector bin per
    /// image column at the pixel pitch.
    pub fn standard(image_size: usize, views: usize, pixel_pitch: f64) -> Self {
        Self::with_detectors(image_size, views, pixel_pitch, image_size, pixel_pitch)
    }

    pub fn with_detectors(
        image_size: usize,
        views: usize,
        pixel_pitch: f64,
        detector_count: usize,
        detector_pitch: f64,
    ) -> Self {
        Self {
            image_size,
            pixel_pitch,
            detector_count,
            detector_pitch,
            angles: (0..views).map(|k| k as f64 * PI / views as f64).collect(),
        }
    }

    pub fn views(&self) -> usize {
        self.angles.len()
    }

    pub fn ray_count(&self) -> usize {
        self.views() * self.detector_count
    }

    /// Signed detector offset of bin `d` from the rotation centre.
    pub fn detector_offset(&self, d: usize) -> f64 {
        (d as f64 - 0.5 * (self.detector_count as f64 - 1.0)) * self.detector_pitch
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("parallel-beam geometry: {msg}")));
        if self.image_size == 0 {
            return bad("image size must be positive");
        }
        if !(self.pixel_pitch > 0.0) || !(self.detector_pitch > 0.0) {
            return bad("pitches must be positive");
        }
        if self.detector_count == 0 || self.angles.is_empty() {
            return bad("need at least one view and one detector");
        }
        Ok(())
    }

    /// Ray `view * detector_count + d`: the line `x cos θ + y sin θ = s`.
    fn trace_ray(&self, ray: usize) -> Vec<(usize, f64)> {
        let theta = self.angles[ray / self.detector_count];
        let s = self.detector_offset(ray % self.detector_count);
        let (sin, cos) = theta.sin_cos();
        let grid = PixelGrid {
            size: self.image_size,
            pitch: self.pixel_pitch,
        };
        trace(&grid, (s * cos, s * sin), (-sin, cos))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    Dense,
    ParallelBeam(ParallelBeamGeometry),
}

/// Absolute row or column sums together with a mask of empty lines.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSums {
    pub sums: Vec<f64>,
    /// `true` where the sum is zero (ray misses the image / pixel never hit).
    pub empty: Vec<bool>,
}

impl LineSums {
    fn new(sums: Vec<f64>) -> Self {
        let empty = sums.iter().map(|&s| s == 0.0).collect();
        Self { sums, empty }
    }

    /// Reciprocal sums with zero in place of empty entries.
    pub fn reciprocals(&self) -> Vec<f64> {
        self.sums
            .iter()
            .map(|&s| if s == 0.0 { 0.0 } else { 1.0 / s })
            .collect()
    }
}

/// Non-negative system matrix with cached transpose and line sums. The
/// parallel-beam variant is assembled from exact ray-pixel intersection
/// lengths, so forward and back projection form a matched pair.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    kind: SystemKind,
    rows: CsrMatrix,
    cols: CsrMatrix,
    row_sums: LineSums,
    col_sums: LineSums,
}

impl SystemMatrix {
    /// Dense `m × n` matrix from row-major entries.
    pub fn dense(m: usize, n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != m * n {
            return Err(Error::DimensionMismatch {
                what: "dense system matrix entries",
                expected: m * n,
                found: data.len(),
            });
        }
        if m == 0 || n == 0 {
            return Err(Error::InvalidConfig("system matrix must be non-empty".into()));
        }
        if let Some(v) = data.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "system matrix entries must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self::from_csr(SystemKind::Dense, CsrMatrix::from_dense(m, n, data)))
    }

    pub fn parallel_beam(geometry: ParallelBeamGeometry) -> Result<Self> {
        geometry.validate()?;
        let n = geometry.image_size * geometry.image_size;
        let rays = par::map_indices(geometry.ray_count(), |i| geometry.trace_ray(i));
        let csr = CsrMatrix::from_rows(n, rays);
        Ok(Self::from_csr(SystemKind::ParallelBeam(geometry), csr))
    }

    fn from_csr(kind: SystemKind, rows: CsrMatrix) -> Self {
        let cols = rows.transpose();
        let row_sums = LineSums::new(rows.abs_row_sums());
        let col_sums = LineSums::new(cols.abs_row_sums());
        Self {
            kind,
            rows,
            cols,
            row_sums,
            col_sums,
        }
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    /// Number of rays, m.
    pub fn n_rows(&self) -> usize {
        self.rows.rows()
    }

    /// Number of pixels, n.
    pub fn n_cols(&self) -> usize {
        self.rows.cols()
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.rows
    }

    /// Transposed storage (rows of Aᵀ).
    pub fn csc(&self) -> &CsrMatrix {
        &self.cols
    }

    /// Sparse entries `(columns, values)` of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.rows.row(i)
    }

    /// γ: per-ray absolute row sums.
    pub fn row_sums(&self) -> &LineSums {
        &self.row_sums
    }

    /// β: per-pixel absolute column sums.
    pub fn col_sums(&self) -> &LineSums {
        &self.col_sums
    }

    fn check(&self, what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected != found {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            });
        }
        Ok(())
    }

    /// `A x`.
    pub fn forward(&self, x: &[f64]) -> Result<Sinogram> {
        self.check("image length", self.n_cols(), x.len())?;
        Ok(Sinogram::line_integral(self.rows.mul_vec(x)))
    }

    /// `out = A x` without allocating. Lengths must match `n_cols` and
    /// `n_rows`; this is only checked in debug builds.
    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        self.rows.mul_vec_into(x, out);
    }

    /// `Aᵀ y`.
    pub fn backproject(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check("sinogram length", self.n_rows(), y.len())?;
        Ok(self.cols.mul_vec(y))
    }

    /// `out = Aᵀ y`; see [`SystemMatrix::forward_into`].
    pub fn backproject_into(&self, y: &[f64], out: &mut [f64]) {
        self.cols.mul_vec_into(y, out);
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        self.rows.to_dense()
    }
}

/// Dense 2×2 system of the two-pixel example: one ray crosses both pixels
/// horizontally, the other cuts 0.28 cm of pixel 1 and 1.13 cm of pixel 2.
pub fn two_pixel_matrix() -> SystemMatrix {
    SystemMatrix::dense(2, 2, &[1.0, 1.0, 0.28, 1.13]).expect("valid fixture")
}
