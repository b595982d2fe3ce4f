//! Reference-material attenuation curves and the piecewise-linear model that
//! maps a reference-energy attenuation value `t` to attenuation at any other
//! energy by interpolating between the two adjacent base materials.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::parse_table;

/// Reference energy of the bundled model, keV.
pub const DEFAULT_REFERENCE_KEV: f64 = 70.0;

const BUNDLED: [(&str, &str); 4] = [
    ("air", include_str!("../data/materials/air.csv")),
    ("fat", include_str!("../data/materials/fat.csv")),
    ("soft_tissue", include_str!("../data/materials/soft_tissue.csv")),
    ("bone", include_str!("../data/materials/bone.csv")),
];

/// Tabulated linear attenuation coefficient of one material.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialCurve {
    name: String,
    energies: Vec<f64>,
    lacs: Vec<f64>,
}

impl MaterialCurve {
    /// Builds a curve from `(energy keV, lac cm⁻¹)` samples in increasing
    /// energy order. Zero attenuation is only accepted for a curve named `air`.
    pub fn new(name: impl Into<String>, samples: &[(f64, f64)]) -> Result<Self> {
        let name = name.into();
        if samples.is_empty() {
            return Err(Error::EmptyFile(name));
        }
        let is_air = name.eq_ignore_ascii_case("air");
        for w in samples.windows(2) {
            if w[1].0 == w[0].0 {
                return Err(Error::DuplicateEnergy(w[0].0));
            }
            if w[1].0 < w[0].0 {
                return Err(Error::UnsortedEnergy {
                    previous: w[0].0,
                    next: w[1].0,
                });
            }
        }
        for &(e, mu) in samples {
            if !(e > 0.0) {
                return Err(Error::NonPositiveEnergy(e));
            }
            if !mu.is_finite() || mu < 0.0 || (mu == 0.0 && !is_air) {
                return Err(Error::InvalidModel(format!(
                    "`{name}` has attenuation {mu} at {e} keV"
                )));
            }
        }
        Ok(Self {
            name,
            energies: samples.iter().map(|s| s.0).collect(),
            lacs: samples.iter().map(|s| s.1).collect(),
        })
    }

    /// Parses the `energy_kev,lac_per_cm` CSV format.
    pub fn parse(name: &str, text: &str, source_name: &str) -> Result<Self> {
        let rows = parse_table(text, source_name, &["energy_kev", "lac_per_cm"])?;
        let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.values[0], r.values[1])).collect();
        Self::new(name, &samples)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn energy_range(&self) -> (f64, f64) {
        (self.energies[0], self.energies[self.energies.len() - 1])
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.energies.iter().copied().zip(self.lacs.iter().copied())
    }

    /// Attenuation at `energy_kev`, log-log linear between bracketing samples.
    /// Segments touching a zero sample fall back to linear interpolation.
    pub fn eval(&self, energy_kev: f64) -> Result<f64> {
        let (lo, hi) = self.energy_range();
        if !(energy_kev >= lo && energy_kev <= hi) {
            return Err(Error::EnergyOutOfRange {
                name: self.name.clone(),
                energy: energy_kev,
                lo,
                hi,
            });
        }
        let upper = self.energies.partition_point(|&e| e < energy_kev);
        if self.energies[upper] == energy_kev {
            return Ok(self.lacs[upper]);
        }
        let (e0, e1) = (self.energies[upper - 1], self.energies[upper]);
        let (m0, m1) = (self.lacs[upper - 1], self.lacs[upper]);
        if m0 > 0.0 && m1 > 0.0 {
            let w = (energy_kev.ln() - e0.ln()) / (e1.ln() - e0.ln());
            Ok((m0.ln() + w * (m1.ln() - m0.ln())).exp())
        } else {
            let w = (energy_kev - e0) / (e1 - e0);
            Ok(m0 + w * (m1 - m0))
        }
    }
}

/// Ordered set of base materials plus the reference energy at which the
/// reconstructed attenuation map is expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct LacModel {
    materials: Vec<MaterialCurve>,
    reference_kev: f64,
    reference_lacs: Vec<f64>,
}

impl LacModel {
    /// Validates that there are at least two materials and that their
    /// attenuation at `reference_kev` is strictly increasing.
    pub fn new(materials: Vec<MaterialCurve>, reference_kev: f64) -> Result<Self> {
        if materials.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least two materials, found {}",
                materials.len()
            )));
        }
        let reference_lacs = materials
            .iter()
            .map(|m| m.eval(reference_kev))
            .collect::<Result<Vec<_>>>()?;
        for (w, names) in reference_lacs.windows(2).zip(materials.windows(2)) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidModel(format!(
                    "reference attenuation must increase strictly: `{}` ({}) then `{}` ({})",
                    names[0].name, w[0], names[1].name, w[1]
                )));
            }
        }
        Ok(Self {
            materials,
            reference_kev,
            reference_lacs,
        })
    }

    /// Air, fat, soft tissue and bone anchored at 70 keV.
    pub fn bundled() -> Self {
        let materials = BUNDLED
            .iter()
            .map(|(name, text)| MaterialCurve::parse(name, text, name))
            .collect::<Result<Vec<_>>>()
            .expect("bundled material curves are valid");
        Self::new(materials, DEFAULT_REFERENCE_KEV).expect("bundled material model is valid")
    }

    /// Loads a manifest CSV (`name,path` rows, paths relative to the manifest,
    /// listed in ascending reference attenuation order).
    pub fn load_manifest(path: &Path, reference_kev: f64) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let source = path.display().to_string();
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut materials = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !header_seen {
                if fields != ["name", "path"] {
                    return Err(Error::parse(&source, i + 1, "expected header `name,path`"));
                }
                header_seen = true;
                continue;
            }
            let [name, file] = fields[..] else {
                return Err(Error::parse(&source, i + 1, "expected `name,path`"));
            };
            let curve_path = base.join(file);
            let curve_text = fs::read_to_string(&curve_path)?;
            materials.push(MaterialCurve::parse(
                name,
                &curve_text,
                &curve_path.display().to_string(),
            )?);
        }
        if materials.is_empty() {
            return Err(Error::EmptyFile(source));
        }
        Self::new(materials, reference_kev)
    }

    pub fn materials(&self) -> &[MaterialCurve] {
        &self.materials
    }

    pub fn reference_kev(&self) -> f64 {
        self.reference_kev
    }

    /// Attenuation of each material at the reference energy, ascending.
    pub fn reference_lacs(&self) -> &[f64] {
        &self.reference_lacs
    }

    /// Indices `(k, k + 1)` of the materials whose reference attenuation
    /// brackets `t` on the half-open interval `[μ_k, μ_{k+1})`. Values outside
    /// the span use the first or last segment.
    pub fn bracket(&self, t: f64) -> (usize, usize) {
        let k = bracket_index(&self.reference_lacs, t);
        (k, k + 1)
    }

    /// Attenuation at `energy_kev` of a voxel whose reference-energy
    /// attenuation is `t`.
    pub fn interpolate_lac(&self, t: f64, energy_kev: f64) -> Result<f64> {
        let (k, k1) = self.bracket(t);
        let (lo, hi) = (self.reference_lacs[k], self.reference_lacs[k1]);
        let mu_k = self.materials[k].eval(energy_kev)?;
        let mu_k1 = self.materials[k1].eval(energy_kev)?;
        Ok(((hi - t) * mu_k + (t - lo) * mu_k1) / (hi - lo))
    }

    /// `∂μ/∂t` at `(t, energy_kev)`; piecewise constant in `t`.
    pub fn lac_derivative(&self, t: f64, energy_kev: f64) -> Result<f64> {
        let (k, k1) = self.bracket(t);
        let mu_k = self.materials[k].eval(energy_kev)?;
        let mu_k1 = self.materials[k1].eval(energy_kev)?;
        Ok((mu_k1 - mu_k) / (self.reference_lacs[k1] - self.reference_lacs[k]))
    }

    /// Precomputes the material curves at a fixed list of energies.
    pub fn tabulate(&self, energies: &[f64]) -> Result<LacTable> {
        let mut values = Vec::with_capacity(energies.len() * self.materials.len());
        for &e in energies {
            for m in &self.materials {
                values.push(m.eval(e)?);
            }
        }
        Ok(LacTable {
            reference_lacs: self.reference_lacs.clone(),
            materials: self.materials.len(),
            energies: energies.len(),
            values,
        })
    }
}

fn bracket_index(reference_lacs: &[f64], t: f64) -> usize {
    let above = reference_lacs.partition_point(|&r| r <= t);
    above.saturating_sub(1).min(reference_lacs.len() - 2)
}

/// Material curves sampled at a fixed set of energies, for fast repeated
/// evaluation of the interpolation model inside projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LacTable {
    reference_lacs: Vec<f64>,
    materials: usize,
    energies: usize,
    /// `values[h * materials + k]` = μ_k(ε_h)
    values: Vec<f64>,
}

impl LacTable {
    pub fn energy_count(&self) -> usize {
        self.energies
    }

    #[inline]
    pub fn segment(&self, t: f64) -> usize {
        bracket_index(&self.reference_lacs, t)
    }

    /// μ(t, ε_h).
    #[inline]
    pub fn mu(&self, t: f64, h: usize) -> f64 {
        let k = self.segment(t);
        let (lo, hi) = (self.reference_lacs[k], self.reference_lacs[k + 1]);
        let row = &self.values[h * self.materials..];
        ((hi - t) * row[k] + (t - lo) * row[k + 1]) / (hi - lo)
    }

    /// ∂μ/∂t(t, ε_h).
    #[inline]
    pub fn dmu(&self, t: f64, h: usize) -> f64 {
        let k = self.segment(t);
        let row = &self.values[h * self.materials..];
        (row[k + 1] - row[k]) / (self.reference_lacs[k + 1] - self.reference_lacs[k])
    }
}
