//! Mean-position dynamics of the damped oscillator in the ohmic limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full_diag::{limit_x_r, peak_breaks, FullModel, FullOptions};
use crate::pv::{fourier_pv, QuadratureConfig};
use crate::quad::{self, Tolerance};
use crate::spectral::{BathSpectrum, ModelParams};

/// Relative distance |γ − ω₀|/ω₀ below which the critical branch is used.
pub const CRITICAL_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Under,
    Critical,
    Over,
}

pub fn regime(p: &ModelParams) -> Regime {
    if (p.gamma - p.omega0).abs() < CRITICAL_BAND * p.omega0 {
        Regime::Critical
    } else if p.gamma < p.omega0 {
        Regime::Under
    } else {
        Regime::Over
    }
}

/// Initial preparation of the reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReservoirIc {
    /// ⟨q̂_j⟩ = ⟨p̂_j⟩ = 0.
    Bare,
    /// ⟨q̂_j⟩ = C_j q0/(m_j ω_j²), ⟨p̂_j⟩ = 0.
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub q0: f64,
    pub p0: f64,
    pub reservoir_ic: ReservoirIc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q_mean: Vec<f64>,
    pub regime: Regime,
}

/// Damping kernel L(t): the response of the position to a unit initial velocity.
pub fn damping_kernel_l(p: &ModelParams, t: f64) -> f64 {
    let g = p.gamma;
    let w0 = p.omega0;
    match regime(p) {
        Regime::Critical => t * (-g * t).exp(),
        Regime::Under => {
            let wp = (w0 * w0 - g * g).sqrt();
            (-g * t).exp() * (wp * t).sin() / wp
        }
        Regime::Over => {
            let s = (g * g - w0 * w0).sqrt();
            -(-(g - s) * t).exp() * (-2.0 * s * t).exp_m1() / (2.0 * s)
        }
    }
}

/// dL/dt, evaluated analytically.
pub fn damping_kernel_dl(p: &ModelParams, t: f64) -> f64 {
    let g = p.gamma;
    let w0 = p.omega0;
    match regime(p) {
        Regime::Critical => (-g * t).exp() * (1.0 - g * t),
        Regime::Under => {
            let wp = (w0 * w0 - g * g).sqrt();
            let (sn, cs) = (wp * t).sin_cos();
            (-g * t).exp() * (cs - g / wp * sn)
        }
        Regime::Over => {
            let s = (g * g - w0 * w0).sqrt();
            let fast = g + s;
            (-(g - s) * t).exp() * (1.0 + fast * (-2.0 * s * t).exp_m1() / (2.0 * s))
        }
    }
}

pub fn mean_position(p: &ModelParams, ic: &InitialState, t: f64) -> f64 {
    let l = damping_kernel_l(p, t);
    let dl = damping_kernel_dl(p, t);
    let q_part = match ic.reservoir_ic {
        ReservoirIc::Bare => dl,
        ReservoirIc::Shifted => dl + 2.0 * p.gamma * l,
    };
    ic.q0 * q_part + ic.p0 / p.mass * l
}

pub fn trajectory(p: &ModelParams, ic: &InitialState, times: &[f64]) -> Trajectory {
    Trajectory {
        times: times.to_vec(),
        q_mean: times.iter().map(|&t| mean_position(p, ic, t)).collect(),
        regime: regime(p),
    }
}

/// Solution of q̈ + 2γq̇ + ω₀²q = 0 with q(0) = q0, q̇(0) = p0/M.
pub fn classical_trajectory(p: &ModelParams, q0: f64, p0: f64, t: f64) -> f64 {
    let g = p.gamma;
    let w0 = p.omega0;
    let v0 = p0 / p.mass;
    match regime(p) {
        Regime::Critical => (-g * t).exp() * (q0 + (v0 + g * q0) * t),
        Regime::Under => {
            let wp = (w0 * w0 - g * g).sqrt();
            let (sn, cs) = (wp * t).sin_cos();
            (-g * t).exp() * (q0 * cs + (v0 + g * q0) / wp * sn)
        }
        Regime::Over => {
            let s = (g * g - w0 * w0).sqrt();
            let (r1, r2) = (-g + s, -g - s);
            let a = (v0 - r2 * q0) / (r1 - r2);
            let b = (r1 * q0 - v0) / (r1 - r2);
            a * (r1 * t).exp() + b * (r2 * t).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixBRow {
    pub t: f64,
    pub i1: f64,
    pub h: f64,
    pub two_gamma_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixBReport {
    pub i1_max_abs: f64,
    pub h_vs_2gamma_l_max_rel: f64,
    pub rows: Vec<AppendixBRow>,
}

fn lorentz_den(p: &ModelParams, w: f64) -> f64 {
    let d = w * w - p.omega0 * p.omega0;
    d * d + 4.0 * p.gamma * p.gamma * w * w
}

/// I₁(t) = −(4γ/π²)∫₀^∞ ∂_t W_R(Ω,t) dΩ, with the 1/Ω² tail added analytically.
pub fn i1_integral(p: &ModelParams, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let w0 = p.omega0;
    let end = (400.0 * w0).max(60.0 / t.max(1e-300)).min(1e6 * w0);
    let breaks = peak_breaks(w0, p.gamma, 0.0, end);
    let width = (t > 0.0).then(|| 2.0 * PI / t);
    let pts = quad::partition(0.0, end, &breaks, width);
    let tol = Tolerance {
        abs: 1e-12,
        rel: 1e-10,
        max_subdivisions: cfg.max_subdivisions,
    };
    let e = quad::integrate(|w: f64| limit_x_r(p, w, t), &pts, tol)?;
    let tail = -PI * damping_kernel_dl(p, t) / end;
    Ok(-4.0 * p.gamma / (PI * PI) * (e.value + tail))
}

/// H(t) = 4γ∫(dΩ/π)(ω₀² − Ω²)cos(Ωt)/D(Ω) by quadrature.
pub fn h_integral(p: &ModelParams, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let w0 = p.omega0;
    let g = |w: f64| [4.0 * p.gamma / PI * (w0 * w0 - w * w) / lorentz_den(p, w)];
    let breaks = peak_breaks(w0, p.gamma, 0.0, 50.0 * w0);
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_subdivisions: cfg.max_subdivisions,
    };
    let e = fourier_pv(&g, t, None, None, &breaks, 0.0, 50.0 * w0, tol)?;
    Ok(e.value[0].re)
}

/// Checks I₁(t) = 0 and H(t) = 2γL(t) numerically on `t_grid`.
pub fn appendix_b_check(
    s: &BathSpectrum,
    p: &ModelParams,
    t_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<AppendixBReport> {
    if !s.cutoff.is_infinite() || !p.is_limit() {
        return Err(Error::Domain("the identities hold in the infinite-cutoff limit only".into()));
    }
    if !(p.gamma > 0.0 && p.gamma < p.omega0) {
        return Err(Error::InvalidParameter(format!(
            "the check needs 0 < γ < ω₀, got γ = {} and ω₀ = {}",
            p.gamma, p.omega0
        )));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut i1_max: f64 = 0.0;
    let mut rel_max: f64 = 0.0;
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("times must be positive, got {t}")));
        }
        let i1 = i1_integral(p, t, cfg)?;
        let h = h_integral(p, t, cfg)?;
        let two_gamma_l = 2.0 * p.gamma * damping_kernel_l(p, t);
        i1_max = i1_max.max(i1.abs());
        rel_max = rel_max.max((h - two_gamma_l).abs() / two_gamma_l.abs());
        rows.push(AppendixBRow { t, i1, h, two_gamma_l });
    }
    Ok(AppendixBReport {
        i1_max_abs: i1_max,
        h_vs_2gamma_l_max_rel: rel_max,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathResponse {
    pub omega: Vec<f64>,
    pub w_r: Vec<f64>,
    pub z_r: Vec<f64>,
}

/// W_R(Ω,t) = PV∫2|L_R|² sin(ωt)/(ω² − Ω²)dω and Z_R(Ω) on a grid, always with the counter-term.
pub fn bath_response_tables(
    s: &BathSpectrum,
    p: &ModelParams,
    omega: &[f64],
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<BathResponse> {
    let model = FullModel::new(
        s,
        p,
        FullOptions {
            counter_term: true,
            quad: *cfg,
            ..FullOptions::default()
        },
    )?;
    let mut w_r = Vec::with_capacity(omega.len());
    let mut z_r = Vec::with_capacity(omega.len());
    for &w in omega {
        if t == 0.0 {
            w_r.push(0.0);
        } else {
            let b = model.bath_integrals(w, t)?;
            w_r.push((b.y_plus - b.y_minus) / (2.0 * p.omega0 * w));
        }
        z_r.push(model.z_amplitude(w));
    }
    Ok(BathResponse {
        omega: omega.to_vec(),
        w_r,
        z_r,
    })
}
