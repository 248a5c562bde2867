//! Spectral densities J(ω) and the system–bath coupling |v(ω)|².

use std::f64::consts::PI;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bath cutoff frequency; `Infinite` selects the analytic Ω_c → ∞ forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    Finite(f64),
    Infinite,
}

impl Cutoff {
    pub fn is_infinite(self) -> bool {
        matches!(self, Cutoff::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Cutoff::Finite(c) => Some(c),
            Cutoff::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    OhmicSharp,
    Drude,
    Tabulated,
}

/// Oscillator and bath parameters, in units where ħ enters only through `hbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mass: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub cutoff: Cutoff,
    pub kt: f64,
    pub hbar: f64,
}

impl ModelParams {
    pub fn new(omega0: f64, gamma: f64, cutoff: Cutoff) -> Result<Self> {
        let p = Self {
            mass: 1.0,
            omega0,
            gamma,
            cutoff,
            kt: 0.0,
            hbar: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("mass", self.mass), ("omega0", self.omega0), ("hbar", self.hbar)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if !(self.kt >= 0.0 && self.kt.is_finite()) {
            return Err(Error::InvalidParameter(format!("kT must be non-negative, got {}", self.kt)));
        }
        if let Cutoff::Finite(c) = self.cutoff {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("cutoff must be positive, got {c}")));
            }
        }
        Ok(())
    }

    /// Advisory messages for parameter choices that are allowed but questionable.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Cutoff::Finite(c) = self.cutoff {
            if c < 10.0 * self.omega0 {
                out.push(format!("cutoff {c} is not much larger than omega0 {}", self.omega0));
            }
        }
        out
    }

    pub fn is_limit(&self) -> bool {
        self.cutoff.is_infinite()
    }
}

/// Spectral density of the bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpectrum {
    pub kind: SpectrumKind,
    pub gamma: f64,
    pub cutoff: Cutoff,
    /// (ω, J) samples for `Tabulated`, strictly increasing in ω.
    pub table: Option<Vec<(f64, f64)>>,
}

impl BathSpectrum {
    pub fn ohmic_sharp(gamma: f64, cutoff: Cutoff) -> Self {
        Self {
            kind: SpectrumKind::OhmicSharp,
            gamma,
            cutoff,
            table: None,
        }
    }

    pub fn drude(gamma: f64, cutoff: Cutoff) -> Self {
        Self {
            kind: SpectrumKind::Drude,
            gamma,
            cutoff,
            table: None,
        }
    }

    /// Spectrum of the given kind with damping and cutoff taken from `p`.
    pub fn from_params(kind: SpectrumKind, p: &ModelParams) -> Result<Self> {
        match kind {
            SpectrumKind::OhmicSharp => Ok(Self::ohmic_sharp(p.gamma, p.cutoff)),
            SpectrumKind::Drude => Ok(Self::drude(p.gamma, p.cutoff)),
            SpectrumKind::Tabulated => Err(Error::InvalidParameter(
                "a tabulated spectrum needs a table; use BathSpectrum::tabulated".into(),
            )),
        }
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Input("spectral table needs at least two rows".into()));
        }
        for (i, &(w, j)) in table.iter().enumerate() {
            if !(w >= 0.0 && w.is_finite()) || !(j >= 0.0 && j.is_finite()) {
                return Err(Error::Input(format!("row {i}: need ω ≥ 0 and J ≥ 0, got ({w}, {j})")));
            }
            if i > 0 && !(w > table[i - 1].0) {
                return Err(Error::Input(format!("row {i}: frequencies must be strictly increasing")));
            }
        }
        let last = table[table.len() - 1].0;
        Ok(Self {
            kind: SpectrumKind::Tabulated,
            gamma: 0.0,
            cutoff: Cutoff::Finite(last),
            table: Some(table),
        })
    }

    /// Reads a two-column `ω,J` CSV; a non-numeric first line is taken as a header.
    pub fn read_table(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Input(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse_table(std::io::BufReader::new(file))
    }

    pub fn parse_table(reader: impl BufRead) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Input(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Input(format!("line {}: expected two columns", n + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(w), Ok(j)) => rows.push((w, j)),
                _ if rows.is_empty() && n == 0 => continue,
                _ => return Err(Error::Input(format!("line {}: cannot parse '{line}'", n + 1))),
            }
        }
        Self::tabulated(rows)
    }

    /// Largest frequency with non-zero density, or `None` when unbounded.
    pub fn support_end(&self) -> Option<f64> {
        match self.kind {
            SpectrumKind::OhmicSharp => self.cutoff.finite(),
            SpectrumKind::Drude => None,
            SpectrumKind::Tabulated => self.table.as_ref().and_then(|t| t.last()).map(|r| r.0),
        }
    }

    /// Frequencies where J has a kink or jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            SpectrumKind::OhmicSharp => self.cutoff.finite().into_iter().collect(),
            SpectrumKind::Drude => Vec::new(),
            SpectrumKind::Tabulated => self.table.iter().flatten().map(|r| r.0).collect(),
        }
    }

    /// Scale on which J varies at large frequency.
    pub fn frequency_scale(&self) -> Option<f64> {
        match self.kind {
            SpectrumKind::Tabulated => self.support_end(),
            _ => self.cutoff.finite(),
        }
    }

    /// J(ω); tabulated values are absolute and ignore `mass`.
    fn density(&self, mass: f64, w: f64) -> f64 {
        match self.kind {
            SpectrumKind::OhmicSharp => match self.cutoff {
                Cutoff::Finite(c) if w >= c => 0.0,
                _ => 2.0 * mass * self.gamma * w,
            },
            SpectrumKind::Drude => match self.cutoff {
                Cutoff::Finite(c) => 2.0 * mass * self.gamma * w / (1.0 + (w / c) * (w / c)),
                Cutoff::Infinite => 2.0 * mass * self.gamma * w,
            },
            SpectrumKind::Tabulated => interpolate(self.table.as_deref().unwrap_or(&[]), w),
        }
    }
}

fn interpolate(table: &[(f64, f64)], w: f64) -> f64 {
    let Some(first) = table.first() else {
        return 0.0;
    };
    let last = table[table.len() - 1];
    if w < first.0 || w > last.0 {
        return 0.0;
    }
    let i = table.partition_point(|r| r.0 <= w);
    if i == 0 {
        return first.1;
    }
    if i >= table.len() {
        return last.1;
    }
    let (w0, j0) = table[i - 1];
    let (w1, j1) = table[i];
    j0 + (j1 - j0) * (w - w0) / (w1 - w0)
}

/// J(ω) for oscillator mass `mass`. Tabulated values are taken as given.
pub fn spectral_density(s: &BathSpectrum, mass: f64, w: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("spectral density needs ω ≥ 0, got {w}")));
    }
    Ok(s.density(mass, w))
}

/// |v(ω)|² = J(ω)/(2πMω₀).
pub fn coupling_sq(s: &BathSpectrum, p: &ModelParams, w: f64) -> Result<f64> {
    Ok(spectral_density(s, p.mass, w)? / (2.0 * PI * p.mass * p.omega0))
}

/// Infallible |v(ω)|² for use inside integrands; negative ω maps to zero.
pub(crate) fn coupling_sq_unchecked(s: &BathSpectrum, p: &ModelParams, w: f64) -> f64 {
    if !(w > 0.0) {
        return 0.0;
    }
    s.density(p.mass, w) / (2.0 * PI * p.mass * p.omega0)
}
