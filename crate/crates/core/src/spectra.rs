//! Discrete X-ray spectra: energy bins with bin-integrated photon weights.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_table};

const BUNDLED_130KVP: &str = include_str!("../data/spectrum_130kvp.csv");

/// One energy bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub energy_kev: f64,
    pub weight: f64,
}

/// Polyenergetic spectrum with strictly increasing bin energies and
/// non-negative weights, at least one of them positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Bin>,
}

impl Spectrum {
    /// Validates and wraps a list of bins. Bins must already be sorted.
    pub fn new(bins: Vec<Bin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyFile("spectrum".into()));
        }
        for b in &bins {
            if !(b.energy_kev > 0.0) || !b.energy_kev.is_finite() {
                return Err(Error::NonPositiveEnergy(b.energy_kev));
            }
            if b.weight < 0.0 || !b.weight.is_finite() {
                return Err(Error::NegativeWeight {
                    energy: b.energy_kev,
                    weight: b.weight,
                });
            }
        }
        for w in bins.windows(2) {
            if w[1].energy_kev == w[0].energy_kev {
                return Err(Error::DuplicateEnergy(w[0].energy_kev));
            }
            if w[1].energy_kev < w[0].energy_kev {
                return Err(Error::UnsortedEnergy {
                    previous: w[0].energy_kev,
                    next: w[1].energy_kev,
                });
            }
        }
        if bins.iter().all(|b| b.weight == 0.0) {
            return Err(Error::ZeroWeights);
        }
        Ok(Self { bins })
    }

    /// Single bin at `energy_kev` with unit weight.
    pub fn monoenergetic(energy_kev: f64) -> Result<Self> {
        if !(energy_kev > 0.0) {
            return Err(Error::NonPositiveEnergy(energy_kev));
        }
        Self::new(vec![Bin {
            energy_kev,
            weight: 1.0,
        }])
    }

    /// Parses the `energy_kev,weight` CSV format. Rows may appear in any
    /// order; the result is sorted by energy. Weights are kept as written.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let rows = parse_table(text, source_name, &["energy_kev", "weight"])?;
        let mut bins = Vec::with_capacity(rows.len());
        for row in rows {
            let (energy_kev, weight) = (row.values[0], row.values[1]);
            if weight < 0.0 {
                return Err(Error::NegativeWeight { energy: energy_kev, weight });
            }
            if !(energy_kev > 0.0) {
                return Err(Error::NonPositiveEnergy(energy_kev));
            }
            bins.push(Bin { energy_kev, weight });
        }
        bins.sort_by(|a, b| a.energy_kev.total_cmp(&b.energy_kev));
        Self::new(bins)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The 11-bin 130 kVp fixture shipped with the crate.
    pub fn bundled_130kvp() -> Self {
        Self::parse(BUNDLED_130KVP, "spectrum_130kvp.csv").expect("bundled spectrum is valid")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy_kev,weight\n");
        for b in &self.bins {
            out.push_str(&format!("{},{}\n", fmt_f64(b.energy_kev), fmt_f64(b.weight)));
        }
        out
    }

    /// Rescales the weights to sum to one.
    pub fn normalize(&self) -> Result<Self> {
        let total = self.total_weight();
        if !(total > 0.0) {
            return Err(Error::ZeroWeights);
        }
        let bins = self
            .bins
            .iter()
            .map(|b| Bin {
                energy_kev: b.energy_kev,
                weight: b.weight / total,
            })
            .collect();
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|b| b.energy_kev)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|b| b.weight)
    }

    /// Blank-scan intensity, Σ weights.
    pub fn total_weight(&self) -> f64 {
        self.bins.iter().map(|b| b.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= 1e-12
    }
}
