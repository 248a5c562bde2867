//! Exact diagonalization of the oscillator with coordinate-coordinate coupling, with or without
//! the counter-term, and the resulting Heisenberg coefficients of â(t).

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pv::{
    closed_form_frequency_shift_sq, closed_form_shifts, default_grid_max, frequency_shift_sq, fourier_pv,
    QuadratureConfig, ShiftFunction, ShiftKind,
};
use crate::quad::{self, Tolerance};
use crate::spectral::{coupling_sq_unchecked, BathSpectrum, ModelParams, SpectrumKind};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Options shared by the full-model operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullOptions {
    pub counter_term: bool,
    pub quad: QuadratureConfig,
    /// Start of the asymptotic tail for frequency integrals over ω.
    pub inner_max: Option<f64>,
    /// Truncation of bath-frequency integrals over Ω.
    pub outer_max: Option<f64>,
}

impl Default for FullOptions {
    fn default() -> Self {
        Self {
            counter_term: true,
            quad: QuadratureConfig::default(),
            inner_max: None,
            outer_max: None,
        }
    }
}

impl FullOptions {
    pub fn with_counter_term(counter_term: bool) -> Self {
        Self {
            counter_term,
            ..Self::default()
        }
    }
}

/// Breakpoints clustered geometrically around a peak of the given width.
pub fn peak_breaks(center: f64, width: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![center];
    if width > 0.0 {
        for k in -8..=6 {
            let d = width * 2f64.powi(k);
            out.push(center - d);
            out.push(center + d);
        }
    }
    out.retain(|x| *x > lo && *x < hi);
    out.sort_by(f64::total_cmp);
    out
}

/// Frequency grid dense near `center` (within 20·`width`) plus uniform coverage of (0, `omega_max`].
pub fn frequency_grid(center: f64, width: f64, omega_max: f64, n_uniform: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=n_uniform).map(|i| omega_max * i as f64 / n_uniform as f64).collect();
    g.push(center);
    if width > 0.0 {
        let n_log = 40;
        let lo = (width * 1e-3).ln();
        let hi = (20.0 * width).ln();
        for k in 0..=n_log {
            let d = (lo + (hi - lo) * k as f64 / n_log as f64).exp();
            g.push(center - d);
            g.push(center + d);
        }
        for k in -20..=20 {
            g.push(center + width * k as f64);
        }
    }
    g.retain(|x| *x > 0.0 && *x <= omega_max);
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * b.abs().max(1.0));
    g
}

/// Continuum model with its shift function fixed (H without the counter-term, H_R with it).
#[derive(Debug, Clone)]
pub struct FullModel {
    pub spectrum: BathSpectrum,
    pub params: ModelParams,
    pub opts: FullOptions,
    shift: ShiftFunction,
    inner_max: f64,
    outer_max: f64,
}

/// Mode weights of the eigenoperator Â_ω in terms of â, â†, b̂_Ω, b̂_Ω†.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeWeights {
    pub omega: f64,
    pub alpha_sq: f64,
    /// α_ω with its phase fixed real positive.
    pub alpha: f64,
    pub chi: f64,
    /// Coefficient c in β_{ω,Ω} = c·v(Ω)·P/(ω−Ω) + on-shell part.
    pub beta_principal_prefactor: f64,
    /// Weight of δ(ω−Ω) in β_{ω,Ω}.
    pub beta_on_shell: f64,
    /// Coefficient c in σ_{ω,Ω} = c·v(Ω)/(ω+Ω).
    pub sigma_prefactor: f64,
    pub z: f64,
}

impl ModeWeights {
    /// Principal-part weight of β_{ω,Ω} for coupling amplitude `v` at Ω.
    pub fn beta_principal(&self, v: f64, big_omega: f64) -> f64 {
        self.beta_principal_prefactor * v / (self.omega - big_omega)
    }

    pub fn sigma(&self, v: f64, big_omega: f64) -> f64 {
        self.sigma_prefactor * v / (self.omega + big_omega)
    }
}

/// Ω-dependent principal-value integrals entering the bath coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathIntegrals {
    pub x: f64,
    pub y_plus: f64,
    pub y_minus: f64,
}

/// Heisenberg coefficients of â(t) = c_a â + c_adag â† + ∫dΩ/π (B1 b̂_Ω + B2 b̂_Ω†).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionCoefficients {
    pub t: f64,
    pub c_a: Complex64,
    pub c_adag: Complex64,
    pub omega: Vec<f64>,
    pub b1: Vec<Complex64>,
    pub b2: Vec<Complex64>,
    pub x: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    pub z: Vec<f64>,
}

/// Terms of the commutator sum rule |c_a|² − |c_adag|² + (1/π²)∫(|B1|² − |B2|²)dΩ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRule {
    pub t: f64,
    pub c_a: Complex64,
    pub c_adag: Complex64,
    pub bath: f64,
    pub total: f64,
    pub error: f64,
}

impl FullModel {
    pub fn new(s: &BathSpectrum, p: &ModelParams, opts: FullOptions) -> Result<Self> {
        p.validate()?;
        opts.quad.validate()?;
        let limit = s.cutoff.is_infinite() && s.kind != SpectrumKind::Tabulated;
        if !opts.counter_term {
            if limit {
                return Err(Error::Validity(
                    "without the counter-term the infinite-cutoff limit violates ω₀² > Δω²".into(),
                ));
            }
            let d = match closed_form_frequency_shift_sq(s) {
                Some(d) => d,
                None => frequency_shift_sq(s, p, &opts.quad)?,
            };
            if !(p.omega0 * p.omega0 > d) {
                return Err(Error::Validity(format!(
                    "without the counter-term stability needs ω₀² > Δω², got ω₀² = {} and Δω² = {d}",
                    p.omega0 * p.omega0
                )));
            }
        }
        let scale = s.frequency_scale().unwrap_or(0.0).max(p.omega0).max(p.gamma);
        let inner_max = opts.inner_max.unwrap_or(10.0 * scale).max(4.0 * p.omega0);
        let outer_max = opts.outer_max.unwrap_or(20.0 * scale).max(4.0 * p.omega0);
        let which = if opts.counter_term { ShiftKind::HR } else { ShiftKind::H };
        let grid = if closed_form_shifts(s, p, 1.0).is_some() || limit {
            Vec::new()
        } else {
            let end = s.support_end().unwrap_or(default_grid_max(s, p, &opts.quad));
            frequency_grid(p.omega0, p.gamma.max(1e-6), end, 800)
        };
        let shift = ShiftFunction::new(s, p, which, &grid, &opts.quad)?;
        Ok(Self {
            spectrum: s.clone(),
            params: *p,
            opts,
            shift,
            inner_max,
            outer_max,
        })
    }

    pub fn is_limit(&self) -> bool {
        self.spectrum.cutoff.is_infinite() && self.spectrum.kind != SpectrumKind::Tabulated
    }

    pub fn coupling_sq(&self, w: f64) -> f64 {
        coupling_sq_unchecked(&self.spectrum, &self.params, w)
    }

    /// H(ω) without the counter-term, H_R(ω) with it.
    pub fn shift(&self, w: f64) -> f64 {
        self.shift.eval(&self.spectrum, &self.params, w)
    }

    pub fn z(&self, w: f64) -> Result<f64> {
        let v2 = self.coupling_sq(w);
        if !(v2 > 0.0) {
            return Err(Error::Singularity(format!("coupling vanishes at ω = {w}")));
        }
        let w0 = self.params.omega0;
        Ok((w * w - w0 * w0 - 2.0 * w0 * self.shift(w)) / (2.0 * w0 * v2))
    }

    /// |L(ω)|² in its direct form; zero where the coupling vanishes.
    pub fn l_sq(&self, w: f64) -> f64 {
        let v2 = self.coupling_sq(w);
        if !(v2 > 0.0) {
            return 0.0;
        }
        let w0 = self.params.omega0;
        let a = w * w - w0 * w0 - 2.0 * w0 * self.shift(w);
        let b = 2.0 * PI * w0 * v2;
        b / (a * a + b * b)
    }

    /// Z(Ω) = |L(Ω)|²·z(Ω).
    pub fn z_amplitude(&self, w: f64) -> f64 {
        let v2 = self.coupling_sq(w);
        if !(v2 > 0.0) {
            return 0.0;
        }
        let w0 = self.params.omega0;
        let a = w * w - w0 * w0 - 2.0 * w0 * self.shift(w);
        let b = 2.0 * PI * w0 * v2;
        PI * a / (a * a + b * b)
    }

    pub fn mode_weights(&self, w: f64) -> Result<ModeWeights> {
        let z = self.z(w)?;
        let w0 = self.params.omega0;
        let v2 = self.coupling_sq(w);
        let r = (w + w0) / (2.0 * w0);
        let alpha_sq = r * r / (v2 * (PI * PI + z * z));
        let alpha = alpha_sq.sqrt();
        let pref = 2.0 * w0 / (w + w0) * alpha;
        Ok(ModeWeights {
            omega: w,
            alpha_sq,
            alpha,
            chi: (w - w0) / (w + w0) * alpha,
            beta_principal_prefactor: pref,
            beta_on_shell: z * pref * v2.sqrt(),
            sigma_prefactor: pref,
            z,
        })
    }

    fn peak_width(&self) -> f64 {
        let w0 = self.params.omega0;
        (PI * self.coupling_sq(w0)).clamp(1e-9 * w0, 0.5 * w0)
    }

    fn breaks(&self, hi: f64) -> Vec<f64> {
        let mut b = peak_breaks(self.params.omega0, self.peak_width(), 0.0, hi);
        b.extend(self.spectrum.breakpoints().into_iter().filter(|x| *x < hi));
        b.sort_by(f64::total_cmp);
        b
    }

    fn inner_tol(&self) -> Tolerance {
        let q = &self.opts.quad;
        Tolerance {
            abs: q.abs_tol * 0.1,
            rel: q.rel_tol * 0.1,
            max_subdivisions: q.max_subdivisions,
        }
    }

    fn upper(&self) -> Option<f64> {
        self.spectrum.support_end()
    }

    /// c_a(t) and c_adag(t) by quadrature over ω.
    pub fn c_coefficients(&self, t: f64) -> Result<(Complex64, Complex64)> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        let w0 = self.params.omega0;
        let breaks = self.breaks(self.inner_max);
        let tol = self.inner_tol();
        if t == 0.0 {
            let g = |w: f64| [2.0 * w * self.l_sq(w) / PI];
            let e = fourier_pv(&g, 0.0, None, self.upper(), &breaks, 0.0, self.inner_max, tol)?;
            return Ok((e.value[0], Complex64::new(0.0, 0.0)));
        }
        let g = |w: f64| {
            let l = self.l_sq(w) / PI;
            [2.0 * w * l, (w * w + w0 * w0) / w0 * l, (w * w - w0 * w0) / w0 * l]
        };
        let e = fourier_pv(&g, t, None, self.upper(), &breaks, 0.0, self.inner_max, tol)?;
        let cos_a = e.value[0].re;
        let sin_b = -e.value[1].im;
        let sin_c = -e.value[2].im;
        Ok((Complex64::new(cos_a, -sin_b), Complex64::new(0.0, -sin_c)))
    }

    /// X(Ω;t) and Y±(Ω;t).
    pub fn bath_integrals(&self, big: f64, t: f64) -> Result<BathIntegrals> {
        if self.is_limit() && self.params.gamma < self.params.omega0 {
            return Ok(limit_bath_integrals(&self.params, big, t));
        }
        self.bath_integrals_quadrature(big, t)
    }

    /// X and Y± by principal-value quadrature regardless of closed forms.
    pub fn bath_integrals_quadrature(&self, big: f64, t: f64) -> Result<BathIntegrals> {
        if !(big > 0.0) {
            return Err(Error::Domain(format!("bath frequency must be positive, got {big}")));
        }
        let w0 = self.params.omega0;
        let breaks = self.breaks(self.inner_max.max(2.0 * big + 1.0));
        let eps = 1e-4 * w0.max(big);
        let tol = self.inner_tol();
        // PV ∫ f/(ω² − Ω²) = −PV ∫ [f/(ω + Ω)]/(Ω − ω).
        if t == 0.0 {
            let g = |w: f64| [-2.0 * self.l_sq(w) * w / (w + big)];
            let e = fourier_pv(&g, 0.0, Some(big), self.upper(), &breaks, eps, self.inner_max, tol)?;
            return Ok(BathIntegrals {
                x: e.value[0].re,
                y_plus: 0.0,
                y_minus: 0.0,
            });
        }
        let g = |w: f64| {
            let l = -2.0 * self.l_sq(w) / (w + big);
            [l * w, l * (w * w + w0 * big), l * (w * w - w0 * big)]
        };
        let e = fourier_pv(&g, t, Some(big), self.upper(), &breaks, eps, self.inner_max, tol)?;
        Ok(BathIntegrals {
            x: e.value[0].re,
            y_plus: -e.value[1].im,
            y_minus: -e.value[2].im,
        })
    }

    /// B1(Ω;t) and B2(Ω;t) with v(Ω) real positive.
    pub fn b_coefficients(&self, big: f64, t: f64) -> Result<(Complex64, Complex64, BathIntegrals, f64)> {
        let v2 = self.coupling_sq(big);
        if !(v2 > 0.0) {
            let zero = Complex64::new(0.0, 0.0);
            return Ok((zero, zero, BathIntegrals { x: 0.0, y_plus: 0.0, y_minus: 0.0 }, 0.0));
        }
        let v = v2.sqrt();
        let w0 = self.params.omega0;
        let bi = self.bath_integrals(big, t)?;
        let z = self.z_amplitude(big);
        let ph = Complex64::from_polar(1.0, -big * t);
        let b1 = v * ((w0 + big) * (bi.x + z * ph) - I * bi.y_plus);
        let b2 = v * ((w0 - big) * (bi.x + z * ph.conj()) - I * bi.y_minus);
        Ok((b1, b2, bi, z))
    }

    /// All coefficients at time t, with bath coefficients tabulated on `omega`.
    pub fn evolve(&self, t: f64, omega: &[f64]) -> Result<EvolutionCoefficients> {
        let (c_a, c_adag) = self.c_coefficients(t)?;
        let mut out = EvolutionCoefficients {
            t,
            c_a,
            c_adag,
            omega: omega.to_vec(),
            b1: Vec::with_capacity(omega.len()),
            b2: Vec::with_capacity(omega.len()),
            x: Vec::with_capacity(omega.len()),
            y_plus: Vec::with_capacity(omega.len()),
            y_minus: Vec::with_capacity(omega.len()),
            z: Vec::with_capacity(omega.len()),
        };
        for &w in omega {
            let (b1, b2, bi, z) = self.b_coefficients(w, t)?;
            out.b1.push(b1);
            out.b2.push(b2);
            out.x.push(bi.x);
            out.y_plus.push(bi.y_plus);
            out.y_minus.push(bi.y_minus);
            out.z.push(z);
        }
        Ok(out)
    }

    /// Evaluates the commutator sum rule at time t; the bath integral runs to the outer cutoff.
    pub fn sum_rule(&self, t: f64) -> Result<SumRule> {
        let (c_a, c_adag) = self.c_coefficients(t)?;
        let end = self.upper().map_or(self.outer_max, |e| e.min(self.outer_max));
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let f = |w: f64| -> f64 {
            match self.b_coefficients(w, t) {
                Ok((b1, b2, _, _)) => b1.norm_sqr() - b2.norm_sqr(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let width = (t > 0.0).then(|| 2.0 * PI / t);
        let pts = quad::partition(0.0, end, &self.breaks(end), width);
        let tol = Tolerance {
            abs: 1e-7,
            rel: 1e-7,
            max_subdivisions: self.opts.quad.max_subdivisions,
        };
        let est = quad::integrate(f, &pts, tol)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let bath = est.value / (PI * PI);
        Ok(SumRule {
            t,
            c_a,
            c_adag,
            bath,
            total: c_a.norm_sqr() - c_adag.norm_sqr() + bath,
            error: est.error / (PI * PI),
        })
    }
}

/// z(ω); the counter-term flag selects H_R instead of H.
pub fn z_of_omega(s: &BathSpectrum, p: &ModelParams, w: f64, opts: FullOptions) -> Result<f64> {
    FullModel::new(s, p, opts)?.z(w)
}

pub fn mode_weights(s: &BathSpectrum, p: &ModelParams, w: f64, opts: FullOptions) -> Result<ModeWeights> {
    FullModel::new(s, p, opts)?.mode_weights(w)
}

pub fn evolve_a_full(model: &FullModel, t: f64, omega: &[f64]) -> Result<EvolutionCoefficients> {
    model.evolve(t, omega)
}

/// Grid tables of z, |L|² and |L_R|².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagKernel {
    pub omega_grid: Vec<f64>,
    pub z_values: Vec<f64>,
    /// |L|² with the bare shift H; absent in the infinite-cutoff limit where H diverges.
    pub l_sq: Option<Vec<f64>>,
    pub l_sq_renorm: Vec<f64>,
    pub counter_term: bool,
    pub limit_mode: bool,
}

/// Grid controls for `lineshape`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineshapeConfig {
    pub counter_term: bool,
    pub omega_max: f64,
    pub n_uniform: usize,
    pub quad: QuadratureConfig,
}

impl Default for LineshapeConfig {
    fn default() -> Self {
        Self {
            counter_term: true,
            omega_max: 5.0,
            n_uniform: 2000,
            quad: QuadratureConfig::default(),
        }
    }
}

pub fn lineshape(s: &BathSpectrum, p: &ModelParams, cfg: &LineshapeConfig) -> Result<DiagKernel> {
    let renorm = FullModel::new(
        s,
        p,
        FullOptions {
            counter_term: true,
            quad: cfg.quad,
            ..FullOptions::default()
        },
    )?;
    let bare = if renorm.is_limit() {
        if !cfg.counter_term {
            return Err(Error::Validity(
                "without the counter-term the infinite-cutoff limit violates ω₀² > Δω²".into(),
            ));
        }
        None
    } else {
        let opts = FullOptions {
            counter_term: false,
            quad: cfg.quad,
            ..FullOptions::default()
        };
        match FullModel::new(s, p, opts) {
            Ok(m) => Some(m),
            Err(e) if cfg.counter_term && matches!(e, Error::Validity(_)) => None,
            Err(e) => return Err(e),
        }
    };
    let grid = frequency_grid(p.omega0, p.gamma.max(1e-9), cfg.omega_max, cfg.n_uniform);
    let active = if cfg.counter_term { &renorm } else { bare.as_ref().expect("checked above") };
    let z_values = grid
        .iter()
        .map(|&w| active.z(w).unwrap_or(f64::NAN))
        .collect();
    Ok(DiagKernel {
        l_sq: bare.as_ref().map(|m| grid.iter().map(|&w| m.l_sq(w)).collect()),
        l_sq_renorm: grid.iter().map(|&w| renorm.l_sq(w)).collect(),
        omega_grid: grid,
        z_values,
        counter_term: cfg.counter_term,
        limit_mode: renorm.is_limit(),
    })
}

/// (ω² − ω₀²)² + 4γ²ω².
fn lorentz_den(p: &ModelParams, w: f64) -> f64 {
    let d = w * w - p.omega0 * p.omega0;
    d * d + 4.0 * p.gamma * p.gamma * w * w
}

/// PV ∫_ℝ ω^k e^{iωt}/(D(ω)(ω² − Ω²)) dω by residues, for k ∈ {1, 2, 3} and γ < ω₀.
fn residue_integral(p: &ModelParams, k: i32, big: f64, t: f64) -> Complex64 {
    let g = p.gamma;
    let w0 = p.omega0;
    let wp = (w0 * w0 - g * g).sqrt();
    let mut s = Complex64::new(0.0, 0.0);
    for pole in [Complex64::new(wp, g), Complex64::new(-wp, g)] {
        let dprime = 4.0 * pole * (pole * pole - w0 * w0 + 2.0 * g * g);
        s += 2.0 * PI * I * pole.powi(k) * (I * pole * t).exp() / (dprime * (pole * pole - big * big));
    }
    let (sn, cs) = (big * t).sin_cos();
    let real = match k {
        1 => Complex64::new(cs, 0.0),
        2 => Complex64::new(0.0, big * sn),
        _ => Complex64::new(big * big * cs, 0.0),
    };
    s + PI * I * real / lorentz_den(p, big)
}

/// X_R, Y±_R for the infinite-cutoff lineshape 2γω/D(ω), from residues (γ < ω₀).
pub fn limit_bath_integrals(p: &ModelParams, big: f64, t: f64) -> BathIntegrals {
    let g = p.gamma;
    let x = 2.0 * g * residue_integral(p, 2, big, t).re;
    let w = limit_w_r(p, big, t);
    let y3 = 2.0 * g * residue_integral(p, 3, big, t).im;
    BathIntegrals {
        x,
        y_plus: y3 + p.omega0 * big * w,
        y_minus: y3 - p.omega0 * big * w,
    }
}

/// X_R(Ω;t) = PV ∫ 2|L_R|²ω cos(ωt)/(ω² − Ω²) dω in the infinite-cutoff limit.
pub fn limit_x_r(p: &ModelParams, big: f64, t: f64) -> f64 {
    2.0 * p.gamma * residue_integral(p, 2, big, t).re
}

/// W_R(Ω;t) = PV ∫ 2|L_R|² sin(ωt)/(ω² − Ω²) dω in the infinite-cutoff limit.
pub fn limit_w_r(p: &ModelParams, big: f64, t: f64) -> f64 {
    2.0 * p.gamma * residue_integral(p, 1, big, t).im
}

/// Z_R(Ω) = π(Ω² − ω₀²)/D(Ω) in the infinite-cutoff limit.
pub fn limit_z_r(p: &ModelParams, big: f64) -> f64 {
    PI * (big * big - p.omega0 * p.omega0) / lorentz_den(p, big)
}

/// |L_R(ω)|² = 2γω/((ω² − ω₀²)² + (2γω)²) in the infinite-cutoff limit.
pub fn limit_l_sq(p: &ModelParams, w: f64) -> f64 {
    2.0 * p.gamma * w / lorentz_den(p, w)
}

/// Options for the RWA-reduction analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub threshold: f64,
    pub counter_term: bool,
    pub quad: QuadratureConfig,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            counter_term: true,
            quad: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaReductionReport {
    pub valid: bool,
    /// max π|v(ω)|²/ω₀ near ω₀.
    pub coupling_ratio: f64,
    /// max |H(ω)|/ω₀ near ω₀ (H_R with the counter-term).
    pub shift_ratio_to_omega0: f64,
    pub omega: Vec<f64>,
    pub alpha_tilde_sq: Vec<f64>,
    /// (2ω₀/π)|L(ω)|² on the same grid.
    pub lineshape_scaled: Vec<f64>,
    /// max relative deviation of the two curves within 10 linewidths of ω₀.
    pub max_rel_deviation: f64,
    /// H(ω₀)/F(ω₀); absent in the infinite-cutoff limit.
    pub h_over_f: Option<f64>,
}

pub fn rwa_reduction(s: &BathSpectrum, p: &ModelParams, cfg: &ReductionConfig) -> Result<RwaReductionReport> {
    let model = FullModel::new(
        s,
        p,
        FullOptions {
            counter_term: cfg.counter_term,
            quad: cfg.quad,
            ..FullOptions::default()
        },
    )?;
    let w0 = p.omega0;
    let width = model.peak_width();
    let lo = (w0 - 20.0 * width).max(0.5 * w0);
    let hi = w0 + 20.0 * width;
    let n = 401;
    let omega: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut coupling_ratio: f64 = 0.0;
    let mut shift_ratio: f64 = 0.0;
    let mut alpha_tilde_sq = Vec::with_capacity(n);
    let mut lineshape_scaled = Vec::with_capacity(n);
    let mut max_rel: f64 = 0.0;
    for &w in &omega {
        let v2 = model.coupling_sq(w);
        let h = model.shift(w);
        coupling_ratio = coupling_ratio.max(PI * v2 / w0);
        shift_ratio = shift_ratio.max(h.abs() / w0);
        let d = w - w0 - h;
        let at = v2 / (d * d + (PI * v2).powi(2));
        let ls = 2.0 * w0 / PI * model.l_sq(w);
        if (w - w0).abs() <= 10.0 * width {
            max_rel = max_rel.max((at - ls).abs() / ls);
        }
        alpha_tilde_sq.push(at);
        lineshape_scaled.push(ls);
    }
    let h_over_f = if model.is_limit() {
        None
    } else {
        let (h, f) = match closed_form_shifts(s, p, w0) {
            Some(v) => (v.h, v.f),
            None => (
                crate::pv::level_shift_h(s, p, w0, &cfg.quad)?,
                crate::pv::level_shift_f(s, p, w0, &cfg.quad)?,
            ),
        };
        Some(h / f)
    };
    Ok(RwaReductionReport {
        valid: coupling_ratio < cfg.threshold && shift_ratio < cfg.threshold,
        coupling_ratio,
        shift_ratio_to_omega0: shift_ratio,
        omega,
        alpha_tilde_sq,
        lineshape_scaled,
        max_rel_deviation: max_rel,
        h_over_f,
    })
}
