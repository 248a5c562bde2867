//! Run configuration: TOML file, command-line overrides and validation.

use std::path::{Path, PathBuf};

use fanodiag::{BathSpectrum, Cutoff, ModelParams, SpectrumKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub mass: f64,
    pub omega0: f64,
    pub gamma: f64,
    /// Cutoff frequency; `inf` selects the infinite-cutoff limit.
    pub cutoff: f64,
    pub kt: f64,
    pub hbar: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega0: 1.0,
            gamma: 0.1,
            cutoff: 50.0,
            kt: 0.1,
            hbar: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    Drude,
    OhmicSharp,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub kind: BathKind,
    /// Two-column (ω, J) text file for the tabulated kind.
    pub table: Option<PathBuf>,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            kind: BathKind::Drude,
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlagSection {
    pub counter_term: bool,
    pub rwa: bool,
    pub limit_mode: bool,
}

impl Default for FlagSection {
    fn default() -> Self {
        Self {
            counter_term: true,
            rwa: false,
            limit_mode: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub omega_max: f64,
    pub omega_points: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            omega_max: 5.0,
            omega_points: 2000,
            t_min: 0.0,
            t_max: 20.0,
            t_points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_modes: usize,
    pub n_samples: usize,
    /// Integrator step; defaults to 0.05 over the fastest bath frequency.
    pub dt: Option<f64>,
    pub seed: u64,
    pub q0: f64,
    pub p0: f64,
    /// Upper end of the discretized bath; defaults from the spectrum.
    pub omega_max: Option<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            n_modes: 400,
            n_samples: 10_000,
            dt: None,
            seed: 0,
            q0: 1.0,
            p0: 0.0,
            omega_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub n_modes: usize,
    pub omega_max: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            n_modes: 64,
            omega_max: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineshapeSection {
    /// Damping rates to sweep; empty means the model value only.
    pub gammas: Vec<f64>,
}

impl Default for LineshapeSection {
    fn default() -> Self {
        Self { gammas: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    pub path: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            path: None,
            svg: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub bath: BathSection,
    pub flags: FlagSection,
    pub grid: GridSection,
    pub ensemble: EnsembleSection,
    pub oracle: OracleSection,
    pub lineshape: LineshapeSection,
    pub output: OutputSection,
}

/// Values given on the command line; each replaces the file value when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub omega0: Option<f64>,
    pub cutoff: Option<f64>,
    pub kt: Option<f64>,
    pub bath: Option<BathKind>,
    pub counter_term: Option<bool>,
    pub rwa: bool,
    pub limit: bool,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub modes: Option<usize>,
    pub t_max: Option<f64>,
    pub t_points: Option<usize>,
    pub gammas: Vec<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // Table paths are relative to the config file.
        if let (Some(t), Some(dir)) = (&cfg.bath.table, path.parent()) {
            if t.is_relative() {
                cfg.bath.table = Some(dir.join(t));
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut self.model.gamma, o.gamma);
        set(&mut self.model.omega0, o.omega0);
        set(&mut self.model.cutoff, o.cutoff);
        set(&mut self.model.kt, o.kt);
        set(&mut self.grid.t_max, o.t_max);
        if let Some(v) = o.bath {
            self.bath.kind = v;
        }
        if let Some(v) = o.counter_term {
            self.flags.counter_term = v;
        }
        self.flags.rwa |= o.rwa;
        self.flags.limit_mode |= o.limit;
        if let Some(v) = o.seed {
            self.ensemble.seed = v;
        }
        if let Some(v) = o.samples {
            self.ensemble.n_samples = v;
        }
        if let Some(v) = o.modes {
            self.ensemble.n_modes = v;
            self.oracle.n_modes = v;
        }
        if let Some(v) = o.t_points {
            self.grid.t_points = v;
        }
        if !o.gammas.is_empty() {
            self.lineshape.gammas = o.gammas.clone();
        }
        if let Some(v) = o.format {
            self.output.format = v;
        }
        if o.out.is_some() {
            self.output.path = o.out.clone();
        }
        if o.svg.is_some() {
            self.output.svg = o.svg.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.flags.limit_mode && self.bath.kind == BathKind::Tabulated {
            return bad("a tabulated spectrum has no infinite-cutoff limit".into());
        }
        if self.bath.kind == BathKind::Tabulated && self.bath.table.is_none() {
            return bad("bath.table is required for the tabulated kind".into());
        }
        let g = &self.grid;
        if !(g.omega_max > 0.0 && g.omega_max.is_finite()) || g.omega_points < 2 {
            return bad("grid.omega_max must be positive and grid.omega_points at least 2".into());
        }
        if !(g.t_min >= 0.0 && g.t_max > g.t_min && g.t_max.is_finite()) || g.t_points < 2 {
            return bad("need 0 ≤ grid.t_min < grid.t_max and grid.t_points ≥ 2".into());
        }
        let e = &self.ensemble;
        if e.n_modes < 2 || e.n_samples == 0 {
            return bad("ensemble.n_modes must be at least 2 and ensemble.n_samples positive".into());
        }
        if let Some(dt) = e.dt {
            if !(dt > 0.0) {
                return bad(format!("ensemble.dt must be positive, got {dt}"));
            }
        }
        if let Some(w) = e.omega_max {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("ensemble.omega_max must be positive, got {w}"));
            }
        }
        if self.oracle.n_modes < 2 || !(self.oracle.omega_max > 0.0 && self.oracle.omega_max.is_finite()) {
            return bad("oracle.n_modes must be at least 2 and oracle.omega_max positive".into());
        }
        if self.lineshape.gammas.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return bad("lineshape.gammas must be non-negative".into());
        }
        Ok(())
    }

    pub fn cutoff(&self) -> Cutoff {
        if self.flags.limit_mode || self.model.cutoff.is_infinite() {
            Cutoff::Infinite
        } else {
            Cutoff::Finite(self.model.cutoff)
        }
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.params_with_gamma(self.model.gamma)
    }

    pub fn params_with_gamma(&self, gamma: f64) -> Result<ModelParams, CliError> {
        let p = ModelParams {
            mass: self.model.mass,
            omega0: self.model.omega0,
            gamma,
            cutoff: self.cutoff(),
            kt: self.model.kt,
            hbar: self.model.hbar,
        };
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn spectrum(&self, p: &ModelParams) -> Result<BathSpectrum, CliError> {
        match self.bath.kind {
            BathKind::Drude => Ok(BathSpectrum::from_params(SpectrumKind::Drude, p)?),
            BathKind::OhmicSharp => Ok(BathSpectrum::from_params(SpectrumKind::OhmicSharp, p)?),
            BathKind::Tabulated => {
                let path = self.bath.table.as_ref().ok_or_else(|| CliError::Config("bath.table is missing".into()))?;
                BathSpectrum::read_table(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    /// Evenly spaced times from `grid.t_min` to `grid.t_max`.
    pub fn times(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.t_points)
            .map(|i| g.t_min + (g.t_max - g.t_min) * i as f64 / (g.t_points - 1) as f64)
            .collect()
    }
}
