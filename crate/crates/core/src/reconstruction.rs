//! ART, SART and their polyenergetic variants pART and pSART, plus a driver
//! that runs any of them to convergence, a limit cycle or an iteration cap.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::materials::LacModel;
use crate::projection::{PolyProjector, Sinogram, SinogramKind, SystemMatrix};
use crate::spectra::Spectrum;

/// One application of a fixed-point map `x ↦ F(x)`.
pub trait Stepper {
    /// Length of the iterate.
    fn dim(&self) -> usize;
    fn step(&self, x: &[f64]) -> Result<Vec<f64>>;
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

fn expect_kind(s: &Sinogram, kind: SinogramKind) -> Result<()> {
    if s.kind == kind {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "expected a {kind:?} sinogram, found {:?}",
            s.kind
        )))
    }
}

fn log_intensities(p: &Sinogram) -> Result<Vec<f64>> {
    expect_kind(p, SinogramKind::Intensity)?;
    p.values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 {
                Ok(value.ln())
            } else {
                Err(Error::NonPositiveIntensity { index, value })
            }
        })
        .collect()
}

/// `x - D Aᵀ M r` for a residual `r`; rays and pixels with empty sums are
/// masked out through zero weights.
fn sart_correction(a: &SystemMatrix, d: &[f64], m: &[f64], x: &[f64], mut r: Vec<f64>) -> Vec<f64> {
    for (ri, mi) in r.iter_mut().zip(m) {
        *ri *= mi;
    }
    let mut back = vec![0.0; a.n_cols()];
    a.backproject_into(&r, &mut back);
    x.iter()
        .zip(back.iter().zip(d))
        .map(|(&xj, (&bj, &dj))| xj - dj * bj)
        .collect()
}

/// One full sequential sweep of Kaczmarz projections over all rows.
pub struct Art<'a> {
    a: &'a SystemMatrix,
    b: &'a [f64],
}

impl<'a> Art<'a> {
    pub fn new(a: &'a SystemMatrix, b: &'a Sinogram) -> Result<Self> {
        expect_kind(b, SinogramKind::LineIntegral)?;
        check_len("sinogram length", a.n_rows(), b.len())?;
        Ok(Self { a, b: &b.values })
    }
}

impl Stepper for Art<'_> {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }

    fn step(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("image length", self.dim(), x.len())?;
        let mut x = x.to_vec();
        for (i, &bi) in self.b.iter().enumerate() {
            let (idx, vals) = self.a.row(i);
            let norm2: f64 = vals.iter().map(|v| v * v).sum();
            if norm2 == 0.0 {
                continue;
            }
            let dot: f64 = idx.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            let scale = (dot - bi) / norm2;
            for (&j, &v) in idx.iter().zip(vals) {
                x[j] -= scale * v;
            }
        }
        Ok(x)
    }
}

/// Simultaneous update `x - D Aᵀ M (A x - b)`.
pub struct Sart<'a> {
    a: &'a SystemMatrix,
    b: &'a [f64],
    d: Vec<f64>,
    m: Vec<f64>,
}

impl<'a> Sart<'a> {
    pub fn new(a: &'a SystemMatrix, b: &'a Sinogram) -> Result<Self> {
        expect_kind(b, SinogramKind::LineIntegral)?;
        check_len("sinogram length", a.n_rows(), b.len())?;
        Ok(Self {
            a,
            b: &b.values,
            d: a.col_sums().reciprocals(),
            m: a.row_sums().reciprocals(),
        })
    }
}

impl Stepper for Sart<'_> {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }

    fn step(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("image length", self.dim(), x.len())?;
        let mut r = vec![0.0; self.a.n_rows()];
        self.a.forward_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(self.b) {
            *ri -= bi;
        }
        Ok(sart_correction(self.a, &self.d, &self.m, x, r))
    }
}

/// Polyenergetic ART: each row projection uses `-ln [P(t)]_i` in place of
/// `⟨a_i, t⟩`, re-evaluated after every sub-iteration.
pub struct Part<'a> {
    a: &'a SystemMatrix,
    projector: PolyProjector,
    log_p: Vec<f64>,
}

impl<'a> Part<'a> {
    pub fn new(a: &'a SystemMatrix, model: &LacModel, spectrum: &Spectrum, p: &Sinogram) -> Result<Self> {
        check_len("sinogram length", a.n_rows(), p.len())?;
        Ok(Self {
            a,
            projector: PolyProjector::new(model, spectrum)?,
            log_p: log_intensities(p)?,
        })
    }

    fn ray_log_projection(&self, i: usize, t: &[f64]) -> Result<f64> {
        let (idx, vals) = self.a.row(i);
        let table = self.projector.table();
        let p: f64 = self
            .projector
            .weights()
            .iter()
            .enumerate()
            .map(|(h, &w)| {
                let line: f64 = idx.iter().zip(vals).map(|(&j, &v)| v * table.mu(t[j], h)).sum();
                w * (-line).exp()
            })
            .sum();
        if p > 0.0 {
            Ok(p.ln())
        } else {
            Err(Error::ZeroProjection(i))
        }
    }
}

impl Stepper for Part<'_> {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }

    fn step(&self, t: &[f64]) -> Result<Vec<f64>> {
        check_len("image length", self.dim(), t.len())?;
        let mut t = t.to_vec();
        for (i, &log_pi) in self.log_p.iter().enumerate() {
            let (idx, vals) = self.a.row(i);
            let norm2: f64 = vals.iter().map(|v| v * v).sum();
            if norm2 == 0.0 {
                continue;
            }
            let residual = -self.ray_log_projection(i, &t)? + log_pi;
            let scale = residual / norm2;
            for (&j, &v) in idx.iter().zip(vals) {
                t[j] -= scale * v;
            }
        }
        Ok(t)
    }
}

/// Polyenergetic SART: `t - D Aᵀ M (-ln P(t) + ln p)`.
pub struct Psart<'a> {
    a: &'a SystemMatrix,
    projector: PolyProjector,
    log_p: Vec<f64>,
    d: Vec<f64>,
    m: Vec<f64>,
}

impl<'a> Psart<'a> {
    pub fn new(a: &'a SystemMatrix, model: &LacModel, spectrum: &Spectrum, p: &Sinogram) -> Result<Self> {
        check_len("sinogram length", a.n_rows(), p.len())?;
        Ok(Self {
            a,
            projector: PolyProjector::new(model, spectrum)?,
            log_p: log_intensities(p)?,
            d: a.col_sums().reciprocals(),
            m: a.row_sums().reciprocals(),
        })
    }

    /// `f(t) = -ln P(t) + ln p`.
    pub fn residual(&self, t: &[f64]) -> Result<Vec<f64>> {
        let p = self.projector.project(self.a, t)?;
        p.values
            .iter()
            .zip(&self.log_p)
            .enumerate()
            .map(|(i, (&pi, &log_pi))| {
                if pi > 0.0 {
                    Ok(-pi.ln() + log_pi)
                } else {
                    Err(Error::ZeroProjection(i))
                }
            })
            .collect()
    }
}

impl Stepper for Psart<'_> {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }

    fn step(&self, t: &[f64]) -> Result<Vec<f64>> {
        check_len("image length", self.dim(), t.len())?;
        let r = self.residual(t)?;
        Ok(sart_correction(self.a, &self.d, &self.m, t, r))
    }
}

pub fn art_sweep(a: &SystemMatrix, b: &Sinogram, x: &[f64]) -> Result<Vec<f64>> {
    Art::new(a, b)?.step(x)
}

pub fn sart_step(a: &SystemMatrix, b: &Sinogram, x: &[f64]) -> Result<Vec<f64>> {
    Sart::new(a, b)?.step(x)
}

pub fn part_sweep(
    a: &SystemMatrix,
    model: &LacModel,
    spectrum: &Spectrum,
    p: &Sinogram,
    t: &[f64],
) -> Result<Vec<f64>> {
    Part::new(a, model, spectrum, p)?.step(t)
}

pub fn psart_step(
    a: &SystemMatrix,
    model: &LacModel,
    spectrum: &Spectrum,
    p: &Sinogram,
    t: &[f64],
) -> Result<Vec<f64>> {
    Psart::new(a, model, spectrum, p)?.step(t)
}

/// Which iterates to keep in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    /// Only the final iterate.
    FinalOnly,
    /// The initial estimate, every k-th iterate, and the final one.
    Every(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop when `‖t⁽ᵏ⁺¹⁾ − t⁽ᵏ⁾‖∞` falls below this.
    pub convergence_tol: f64,
    /// How many previous iterates are searched for a repeat.
    pub cycle_window: usize,
    pub cycle_tol: f64,
    /// Zero vector when absent.
    pub initial_estimate: Option<Vec<f64>>,
    pub recording: Recording,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            convergence_tol: 1e-10,
            cycle_window: 8,
            cycle_tol: 1e-9,
            initial_estimate: None,
            recording: Recording::FinalOnly,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) || !(self.cycle_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.recording == Recording::Every(0) {
            return Err(Error::InvalidConfig("recording stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Settled into a periodic orbit of the given period (≥ 2).
    Cycled { period: usize },
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iterates: Vec<Vec<f64>>,
    /// `‖t⁽ᵏ⁺¹⁾ − t⁽ᵏ⁾‖∞` for every iteration run.
    pub residual_history: Vec<f64>,
    pub status: Status,
    pub iterations_run: usize,
    pub final_iterate: Vec<f64>,
}

/// A repeat only counts as a cycle while consecutive iterates are still at
/// least this many times `cycle_tol` apart. Without it, a sequence slowly
/// spiralling into a fixed point matches `t⁽ᵏ⁻²⁾` before its update norm
/// reaches the convergence tolerance.
pub const CYCLE_AMPLITUDE_FACTOR: f64 = 1e3;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Iterates `stepper` until the update norm drops below the convergence
/// tolerance, an iterate repeats one from the last `cycle_window` steps, or
/// the iteration cap is reached.
pub fn run<S: Stepper + ?Sized>(stepper: &S, config: &SolverConfig) -> Result<IterationReport> {
    config.validate()?;
    let n = stepper.dim();
    let mut x = match &config.initial_estimate {
        Some(x0) => {
            check_len("initial estimate", n, x0.len())?;
            x0.clone()
        }
        None => vec![0.0; n],
    };

    let mut iterates = Vec::new();
    if let Recording::Every(_) = config.recording {
        iterates.push(x.clone());
    }
    let mut recent: VecDeque<Vec<f64>> = VecDeque::with_capacity(config.cycle_window + 1);
    let mut residual_history = Vec::new();
    let mut status = Status::MaxIterations;

    for k in 1..=config.max_iterations {
        let next = stepper.step(&x)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIterate(k));
        }
        residual_history.push(max_abs_diff(&next, &x));

        // recent[p - 1] holds the iterate p steps before `next`
        recent.push_front(std::mem::replace(&mut x, next));
        recent.truncate(config.cycle_window);

        if let Recording::Every(stride) = config.recording {
            if k % stride == 0 {
                iterates.push(x.clone());
            }
        }

        if residual_history[k - 1] < config.convergence_tol {
            status = Status::Converged;
            break;
        }
        if residual_history[k - 1] < CYCLE_AMPLITUDE_FACTOR * config.cycle_tol {
            continue;
        }
        let period = (2..=recent.len()).find(|&p| max_abs_diff(&x, &recent[p - 1]) < config.cycle_tol);
        if let Some(period) = period {
            status = Status::Cycled { period };
            break;
        }
    }

    let iterations_run = residual_history.len();
    match config.recording {
        Recording::FinalOnly => iterates.push(x.clone()),
        Recording::Every(stride) => {
            if iterations_run % stride != 0 {
                iterates.push(x.clone());
            }
        }
    }
    Ok(IterationReport {
        iterates,
        residual_history,
        status,
        iterations_run,
        final_iterate: x,
    })
}
