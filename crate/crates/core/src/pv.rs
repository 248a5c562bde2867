//! Principal-value quadrature and the level-shift functions F, G, H, H_R and Δω².
//!
//! Kernel convention: `cauchy_pv` returns PV ∫ f(x)/(pole − x) dx.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Estimate, QuadValue, Tolerance};
use crate::spectral::{coupling_sq_unchecked, BathSpectrum, Cutoff, ModelParams, SpectrumKind};

/// Controls for principal-value and semi-infinite quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Half-width ε of the paired window around a pole; default 1e-4·max(ω₀, pole).
    pub excision_halfwidth: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Split point Ω_max between the finite range and the mapped tail; default 50·Ω_c.
    pub grid_max: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            excision_halfwidth: None,
            rel_tol: 1e-8,
            abs_tol: 1e-9,
            max_subdivisions: 200_000,
            grid_max: None,
        }
    }
}

impl QuadratureConfig {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs: self.abs_tol,
            rel: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }

    pub fn with_tolerances(mut self, abs: f64, rel: f64) -> Self {
        self.abs_tol = abs;
        self.rel_tol = rel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.excision_halfwidth {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!("excision half-width must be positive, got {e}")));
            }
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter("max_subdivisions must be positive".into()));
        }
        if let Some(g) = self.grid_max {
            if !(g > 0.0) {
                return Err(Error::InvalidParameter(format!("grid_max must be positive, got {g}")));
            }
        }
        Ok(())
    }

    fn eps(&self, reference: f64, pole: f64) -> f64 {
        self.excision_halfwidth
            .unwrap_or(1e-4 * reference.abs().max(pole.abs()))
    }
}

/// Geometric breakpoints p ± ε·2^k inside (a, b).
fn graded_points(pole: f64, eps: f64, a: f64, b: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let mut d = eps;
    for _ in 0..60 {
        d *= 2.0;
        let (l, r) = (pole - d, pole + d);
        if l > a {
            pts.push(l);
        }
        if r < b {
            pts.push(r);
        }
        if l <= a && r >= b {
            break;
        }
    }
    pts
}

/// PV ∫_a^b h(x)/(pole − x) dx for a < pole < b.
///
/// The window [pole−ε, pole+ε] is folded onto ∫_0^ε [h(pole−s) − h(pole+s)]/s ds, which has no
/// singularity; the remainder is integrated adaptively. `breaks` are extra interior breakpoints and
/// `max_width` bounds the initial panel width.
pub(crate) fn pv_core<T, H>(
    h: &H,
    pole: f64,
    a: f64,
    b: f64,
    eps: f64,
    breaks: &[f64],
    max_width: Option<f64>,
    tol: Tolerance,
) -> Result<Estimate<T>>
where
    T: QuadValue,
    H: Fn(f64) -> T,
{
    if !(pole > a && pole < b) {
        return Err(Error::Domain(format!("pole {pole} must lie strictly inside ({a}, {b})")));
    }
    // A kink at (or within rounding of) the pole leaves the folded integrand continuous.
    let near = 1e-9 * pole.abs().max(b - a);
    let nearest = breaks
        .iter()
        .copied()
        .filter(|&x| (x - pole).abs() > near)
        .chain([a, b])
        .map(|x| (x - pole).abs())
        .fold(f64::INFINITY, f64::min);
    let eps = eps.min(0.5 * nearest);
    let window = quad::integrate(
        |s: f64| h(pole - s).sub(h(pole + s)).scale(1.0 / s),
        &[0.0, 0.25 * eps, eps],
        tol,
    )?;
    let kernel = |x: f64| h(x).scale(1.0 / (pole - x));
    let mut interior: Vec<f64> = breaks.to_vec();
    interior.extend(graded_points(pole, eps, a, b));
    let left_pts = quad::partition(a, pole - eps, &interior, max_width);
    let right_pts = quad::partition(pole + eps, b, &interior, max_width);
    let left = quad::integrate(kernel, &left_pts, tol)?;
    let right = quad::integrate(kernel, &right_pts, tol)?;
    Ok(window.combine(left).combine(right))
}

/// PV ∫_a^b f(x)/(pole − x) dx by the paired-window method.
///
/// A pole outside [a, b] gives the ordinary integral; a pole on an endpoint is a domain error.
pub fn cauchy_pv<F>(f: F, pole: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate<f64>>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(b > a) {
        return Err(Error::Domain(format!("empty domain [{a}, {b}]")));
    }
    if pole == a || pole == b {
        return Err(Error::Domain(format!("pole {pole} on the domain boundary")));
    }
    if pole < a || pole > b {
        return quad::integrate(|x| f(x) / (pole - x), &[a, b], cfg.tolerance());
    }
    let eps = cfg.eps(0.5 * (b - a), pole);
    pv_core(&f, pole, a, b, eps, &[], None, cfg.tolerance())
}

/// Same principal value by pole subtraction:
/// ∫ [f(x) − f(pole)]/(pole − x) dx + f(pole)·ln((pole − a)/(b − pole)).
pub fn cauchy_pv_subtracted<F>(f: F, pole: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate<f64>>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(pole > a && pole < b) {
        return Err(Error::Domain(format!("pole {pole} must lie strictly inside ({a}, {b})")));
    }
    let fp = f(pole);
    let est = quad::integrate(|x| (f(x) - fp) / (pole - x), &[a, pole, b], cfg.tolerance())?;
    Ok(Estimate {
        value: est.value + fp * ((pole - a) / (b - pole)).ln(),
        ..est
    })
}

/// Upper limit and tail start used for integrals over [0, ∞) of bath quantities.
pub(crate) fn default_grid_max(s: &BathSpectrum, p: &ModelParams, cfg: &QuadratureConfig) -> f64 {
    cfg.grid_max.unwrap_or_else(|| {
        let scale = s.frequency_scale().unwrap_or(p.omega0).max(p.omega0);
        50.0 * scale
    })
}

/// ∫_0^∞ g(x)·e^{−ixt}/(pole − x) dx (or without the pole factor when `pole` is `None`)
/// for a real vector-valued g.
///
/// Oscillatory ranges are cut into panels spanning at most 2π of phase and the range beyond the
/// tail start is summed asymptotically by parts. At t = 0 the tail is mapped to a finite interval.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fourier_pv<const K: usize, G>(
    g: &G,
    t: f64,
    pole: Option<f64>,
    upper: Option<f64>,
    breaks: &[f64],
    eps: f64,
    tail_start: f64,
    tol: Tolerance,
) -> Result<Estimate<[Complex64; K]>>
where
    G: Fn(f64) -> [f64; K] + Sync,
{
    let osc = |x: f64| -> [Complex64; K] {
        let ph = Complex64::from_polar(1.0, -x * t);
        g(x).map(|v| ph * v)
    };
    let width = (t > 0.0).then(|| TAU / t);
    let end = match upper {
        Some(b) => b,
        None => {
            let mut w = tail_start;
            if t > 0.0 {
                w = w.max(60.0 / t);
            }
            if let Some(q) = pole {
                w = w.max(2.0 * q.abs() + 1.0);
            }
            w
        }
    };
    let inside = pole.filter(|&q| q > 0.0 && q < end);
    let finite = match inside {
        Some(q) => pv_core(&osc, q, 0.0, end, eps, breaks, width, tol)?,
        None => {
            let pts = quad::partition(0.0, end, breaks, width);
            match pole {
                Some(q) => quad::integrate(|x: f64| osc(x).scale(1.0 / (q - x)), &pts, tol)?,
                None => quad::integrate(osc, &pts, tol)?,
            }
        }
    };
    if upper.is_some() {
        return Ok(finite);
    }
    let damped = |x: f64| -> [f64; K] {
        match pole {
            Some(q) => g(x).map(|v| v / (q - x)),
            None => g(x),
        }
    };
    let tail = if t > 0.0 {
        let v = quad::fourier_tail(&damped, t, end);
        let last = damped(end).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Estimate {
            value: v,
            error: 10.0 * last / (end * t).powi(3) / t,
            evaluations: 3,
        }
    } else {
        let e = quad::integrate_to_infinity(|x: f64| damped(x), end, tol)?;
        Estimate {
            value: e.value.map(|v| Complex64::new(v, 0.0)),
            error: e.error,
            evaluations: e.evaluations,
        }
    };
    Ok(finite.combine(tail))
}

/// Closed-form F, G, H for the built-in spectra with a finite cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftValues {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

/// Analytic F, G, H; `None` for tabulated spectra or the Ω_c → ∞ flag.
pub fn closed_form_shifts(s: &BathSpectrum, p: &ModelParams, w: f64) -> Option<ShiftValues> {
    let Cutoff::Finite(c) = s.cutoff else {
        return None;
    };
    let gamma = s.gamma;
    match s.kind {
        SpectrumKind::Drude => {
            let k = gamma * c * c / (PI * p.omega0);
            let den = w * w + c * c;
            let log_term = if w > 0.0 { w * (w / c).ln() } else { 0.0 };
            let f = k * (log_term - 0.5 * PI * c) / den;
            let g = k * (log_term + 0.5 * PI * c) / den;
            let h = -(gamma * c / p.omega0) / (1.0 + (w / c) * (w / c));
            Some(ShiftValues { f, g, h })
        }
        SpectrumKind::OhmicSharp => {
            let k = gamma / (PI * p.omega0);
            let (f, g) = if w > 0.0 {
                (
                    k * (-c + w * (w / (c - w).abs()).ln()),
                    k * (c - w * ((c + w) / w).ln()),
                )
            } else {
                (-k * c, k * c)
            };
            Some(ShiftValues { f, g, h: f - g })
        }
        SpectrumKind::Tabulated => None,
    }
}

fn reject_limit(s: &BathSpectrum, what: &str) -> Result<()> {
    if s.cutoff.is_infinite() && s.kind != SpectrumKind::Tabulated {
        return Err(Error::Domain(format!("{what} diverges in the infinite-cutoff limit")));
    }
    Ok(())
}

/// PV ∫_0^∞ |v(Ω)|²·m(Ω)/(ω − Ω) dΩ over the support of the spectrum.
fn shift_integral<M>(s: &BathSpectrum, p: &ModelParams, w: f64, weight: M, cfg: &QuadratureConfig) -> Result<f64>
where
    M: Fn(f64) -> f64 + Sync,
{
    cfg.validate()?;
    let f = |x: f64| [coupling_sq_unchecked(s, p, x) * weight(x)];
    let support = s.support_end();
    if let Some(e) = support {
        if w == e && coupling_sq_unchecked(s, p, e * (1.0 - 1e-12)) > 0.0 {
            return Err(Error::Singularity(format!("pole at the support edge {e} gives a divergent shift")));
        }
    }
    let grid_max = default_grid_max(s, p, cfg);
    let breaks = s.breakpoints();
    let eps = cfg.eps(p.omega0, w);
    let pole = (w > 0.0).then_some(w);
    let est = match support {
        Some(e) => fourier_pv(&f, 0.0, pole.or(Some(w)), Some(e), &breaks, eps, grid_max, cfg.tolerance())?,
        None => fourier_pv(&f, 0.0, pole.or(Some(w)), None, &breaks, eps, grid_max, cfg.tolerance())?,
    };
    Ok(est.value[0].re)
}

/// F(ω) = PV ∫ |v(Ω)|²/(ω − Ω) dΩ by quadrature.
pub fn level_shift_f(s: &BathSpectrum, p: &ModelParams, w: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("F(ω) needs ω > 0, got {w}")));
    }
    reject_limit(s, "F(ω)")?;
    shift_integral(s, p, w, |_| 1.0, cfg)
}

/// G(ω) = ∫ |v(Ω)|²/(ω + Ω) dΩ by quadrature.
pub fn level_shift_g(s: &BathSpectrum, p: &ModelParams, w: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("G(ω) needs ω ≥ 0, got {w}")));
    }
    reject_limit(s, "G(ω)")?;
    cfg.validate()?;
    let grid_max = default_grid_max(s, p, cfg);
    let f = |x: f64| [coupling_sq_unchecked(s, p, x) / (w + x)];
    let est = fourier_pv(&f, 0.0, None, s.support_end(), &s.breakpoints(), 0.0, grid_max, cfg.tolerance())?;
    Ok(est.value[0].re)
}

/// H(ω) = F(ω) − G(ω), evaluated as the single principal value PV ∫ |v|²·2Ω/((ω+Ω)(ω−Ω)) dΩ.
pub fn level_shift_h(s: &BathSpectrum, p: &ModelParams, w: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("H(ω) needs ω ≥ 0, got {w}")));
    }
    reject_limit(s, "H(ω)")?;
    shift_integral(s, p, w, |x| 2.0 * x / (w + x), cfg)
}

/// Δω² = 4ω₀ ∫ |v(ω)|²/ω dω.
pub fn frequency_shift_sq(s: &BathSpectrum, p: &ModelParams, cfg: &QuadratureConfig) -> Result<f64> {
    reject_limit(s, "Δω²")?;
    cfg.validate()?;
    if let Some(table) = &s.table {
        if table[0].0 == 0.0 && table[0].1 > 0.0 {
            return Err(Error::Domain("J(0) ≠ 0 makes ∫J(ω)/ω dω divergent".into()));
        }
    }
    let grid_max = default_grid_max(s, p, cfg);
    let f = |x: f64| [coupling_sq_unchecked(s, p, x) / x];
    let est = fourier_pv(&f, 0.0, None, s.support_end(), &s.breakpoints(), 0.0, grid_max, cfg.tolerance())?;
    Ok(4.0 * p.omega0 * est.value[0].re)
}

/// Closed-form Δω² where available: 2γΩ_c for Drude, 4γΩ_c/π for the sharp cutoff.
pub fn closed_form_frequency_shift_sq(s: &BathSpectrum) -> Option<f64> {
    let c = s.cutoff.finite()?;
    match s.kind {
        SpectrumKind::Drude => Some(2.0 * s.gamma * c),
        SpectrumKind::OhmicSharp => Some(4.0 * s.gamma * c / PI),
        SpectrumKind::Tabulated => None,
    }
}

/// H_R(ω) = H(ω) + Δω²/(2ω₀); identically zero under the infinite-cutoff flag.
pub fn renormalized_shift_h_r(s: &BathSpectrum, p: &ModelParams, w: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("H_R(ω) needs ω ≥ 0, got {w}")));
    }
    if s.cutoff.is_infinite() && s.kind != SpectrumKind::Tabulated {
        return Ok(0.0);
    }
    Ok(level_shift_h(s, p, w, cfg)? + frequency_shift_sq(s, p, cfg)? / (2.0 * p.omega0))
}

/// Shift functions tabulated once and evaluated cheaply afterwards.
#[derive(Debug, Clone)]
pub enum ShiftSource {
    Closed,
    Zero,
    Table { omega: Vec<f64>, values: Vec<f64> },
}

/// Evaluator for the shift entering a resonance denominator: F, H or H_R as requested.
#[derive(Debug, Clone)]
pub struct ShiftFunction {
    pub which: ShiftKind,
    pub source: ShiftSource,
    offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftKind {
    F,
    H,
    HR,
}

impl ShiftFunction {
    /// Builds the evaluator, tabulating by quadrature on `grid` when no closed form exists.
    pub fn new(
        s: &BathSpectrum,
        p: &ModelParams,
        which: ShiftKind,
        grid: &[f64],
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if s.cutoff.is_infinite() && s.kind != SpectrumKind::Tabulated {
            return match which {
                ShiftKind::HR => Ok(Self {
                    which,
                    source: ShiftSource::Zero,
                    offset: 0.0,
                }),
                _ => Err(Error::Domain("F and H diverge in the infinite-cutoff limit".into())),
            };
        }
        let offset = match which {
            ShiftKind::HR => match closed_form_frequency_shift_sq(s) {
                Some(d) => d / (2.0 * p.omega0),
                None => frequency_shift_sq(s, p, cfg)? / (2.0 * p.omega0),
            },
            _ => 0.0,
        };
        if closed_form_shifts(s, p, 1.0).is_some() {
            return Ok(Self {
                which,
                source: ShiftSource::Closed,
                offset,
            });
        }
        let mut omega: Vec<f64> = grid.iter().copied().filter(|w| *w > 0.0).collect();
        omega.sort_by(f64::total_cmp);
        omega.dedup();
        let values = omega
            .iter()
            .map(|&w| match which {
                ShiftKind::F => level_shift_f(s, p, w, cfg),
                _ => level_shift_h(s, p, w, cfg),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            which,
            source: ShiftSource::Table { omega, values },
            offset,
        })
    }

    pub fn eval(&self, s: &BathSpectrum, p: &ModelParams, w: f64) -> f64 {
        let base = match &self.source {
            ShiftSource::Zero => return 0.0,
            ShiftSource::Closed => {
                let v = closed_form_shifts(s, p, w).expect("closed form available");
                match self.which {
                    ShiftKind::F => v.f,
                    _ => v.h,
                }
            }
            ShiftSource::Table { omega, values } => {
                let i = omega.partition_point(|x| *x <= w).clamp(1, omega.len() - 1);
                let (x0, x1) = (omega[i - 1], omega[i]);
                values[i - 1] + (values[i] - values[i - 1]) * (w - x0) / (x1 - x0)
            }
        };
        base + self.offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn drude(gamma: f64, c: f64) -> (BathSpectrum, ModelParams) {
        (
            BathSpectrum::drude(gamma, Cutoff::Finite(c)),
            ModelParams::new(1.0, gamma, Cutoff::Finite(c)).unwrap(),
        )
    }

    #[test]
    fn constant_over_symmetric_domain_vanishes() {
        let cfg = QuadratureConfig::default();
        let v = cauchy_pv(|_| 1.0, 3.0, 1.0, 5.0, &cfg).unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn linear_numerator_closed_form() {
        // PV ∫_0^2 x/(1 − x) dx = −2.
        let cfg = QuadratureConfig::default();
        let v = cauchy_pv(|x| x, 1.0, 0.0, 2.0, &cfg).unwrap();
        assert!((v.value + 2.0).abs() < 1e-10);
        let w = cauchy_pv_subtracted(|x| x, 1.0, 0.0, 2.0, &cfg).unwrap();
        assert!((w.value + 2.0).abs() < 1e-10);
    }

    #[test]
    fn asymmetric_log_closed_form() {
        // PV ∫_0^3 e^x/(1 − x) dx against the subtraction route and a known value.
        let cfg = QuadratureConfig::default();
        let a = cauchy_pv(f64::exp, 1.0, 0.0, 3.0, &cfg).unwrap().value;
        let b = cauchy_pv_subtracted(f64::exp, 1.0, 0.0, 3.0, &cfg).unwrap().value;
        assert!((a - b).abs() < 1e-9);
        // e·[Ei(−1)... ] evaluated independently: PV∫ e^x/(1−x) = −e·(Ei(2) − Ei(−1)).
        let ei2 = 4.954_234_356_001_89;
        let eim1 = -0.219_383_934_395_520_3;
        assert!((a + std::f64::consts::E * (ei2 - eim1)).abs() < 1e-9);
    }

    #[test]
    fn pole_outside_and_on_boundary() {
        let cfg = QuadratureConfig::default();
        let v = cauchy_pv(|_| 1.0, 5.0, 0.0, 1.0, &cfg).unwrap().value;
        assert!((v - (5.0f64 / 4.0).ln()).abs() < 1e-12);
        assert!(matches!(cauchy_pv(|_| 1.0, 1.0, 0.0, 1.0, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn drude_closed_forms_match_quadrature() {
        let (s, p) = drude(0.1, 50.0);
        let cfg = QuadratureConfig::default();
        for &w in &[0.2, 1.0, 3.0, 49.0, 77.0, 250.0] {
            let closed = closed_form_shifts(&s, &p, w).unwrap();
            let f = level_shift_f(&s, &p, w, &cfg).unwrap();
            let g = level_shift_g(&s, &p, w, &cfg).unwrap();
            assert!((f - closed.f).abs() <= 1e-7 * closed.f.abs().max(1.0), "F at {w}: {f} vs {}", closed.f);
            assert!((g - closed.g).abs() <= 1e-7 * closed.g.abs().max(1.0), "G at {w}: {g} vs {}", closed.g);
        }
    }

    #[test]
    fn ohmic_sharp_closed_forms_match_quadrature() {
        let s = BathSpectrum::ohmic_sharp(0.2, Cutoff::Finite(20.0));
        let p = ModelParams::new(1.0, 0.2, Cutoff::Finite(20.0)).unwrap();
        let cfg = QuadratureConfig::default();
        for &w in &[0.5, 1.0, 13.0, 30.0] {
            let closed = closed_form_shifts(&s, &p, w).unwrap();
            let f = level_shift_f(&s, &p, w, &cfg).unwrap();
            let h = level_shift_h(&s, &p, w, &cfg).unwrap();
            assert!((f - closed.f).abs() < 1e-7, "F at {w}");
            assert!((h - closed.h).abs() < 1e-7, "H at {w}");
        }
        assert!(matches!(level_shift_f(&s, &p, 20.0, &cfg), Err(Error::Singularity(_))));
        let d = frequency_shift_sq(&s, &p, &cfg).unwrap();
        assert!((d - closed_form_frequency_shift_sq(&s).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn f_at_resonance_against_paired_riemann_sum() {
        let (s, p) = drude(0.1, 50.0);
        let v2 = |x: f64| coupling_sq_unchecked(&s, &p, x);
        // Midpoints placed symmetrically about ω = 1 so the pole terms cancel pairwise.
        let h = 2e-4;
        let n = (2.0 / h) as usize;
        let mut sum = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            sum += v2(x) / (1.0 - x) * h;
        }
        let h2 = 2e-3;
        let upper = 2.0e4;
        let m = ((upper - 2.0) / h2) as usize;
        for i in 0..m {
            let x = 2.0 + (i as f64 + 0.5) * h2;
            sum += v2(x) / (1.0 - x) * h2;
        }
        // Tail beyond the grid from the large-Ω expansion of |v|²/(1 − Ω).
        let k = 0.1 * 2500.0 / PI;
        sum += -k * (1.0 / upper + 0.5 / (upper * upper));
        let f = level_shift_f(&s, &p, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((f - sum).abs() <= 1e-6 * f.abs(), "{f} vs {sum}");
    }

    #[test]
    fn f_self_converges_across_resolutions() {
        let (s, p) = drude(0.1, 50.0);
        let coarse = level_shift_f(&s, &p, 1.0, &QuadratureConfig::default()).unwrap();
        let fine_cfg = QuadratureConfig {
            grid_max: Some(1e4),
            ..QuadratureConfig::default().with_tolerances(1e-12, 1e-11)
        };
        let fine = level_shift_f(&s, &p, 1.0, &fine_cfg).unwrap();
        assert!((coarse - fine).abs() <= 1e-6 * fine.abs());
    }

    #[test]
    fn h_closed_form_values() {
        let (s, p) = drude(0.1, 50.0);
        let cfg = QuadratureConfig::default();
        let h = level_shift_h(&s, &p, 1.0, &cfg).unwrap();
        assert!((h + 5.0 / 1.0004).abs() < 1e-7);
        let far = level_shift_h(&s, &p, 5000.0, &cfg).unwrap();
        let closed = closed_form_shifts(&s, &p, 5000.0).unwrap().h;
        assert!(far < 0.0 && ((far - closed) / closed).abs() < 0.1);
        let hr = renormalized_shift_h_r(&s, &p, 1.0, &cfg).unwrap();
        assert!((hr - 5.0 * (1.0 - 1.0 / 1.0004)).abs() < 1e-7);
        let hr0 = renormalized_shift_h_r(&s, &p, 0.0, &cfg).unwrap();
        assert!(hr0.abs() < 1e-8);
    }

    #[test]
    fn frequency_shift_drude() {
        let (s, p) = drude(0.1, 50.0);
        let d = frequency_shift_sq(&s, &p, &QuadratureConfig::default()).unwrap();
        assert!((d - 10.0).abs() < 1e-6);
        let (s0, p0) = drude(0.0, 50.0);
        assert_eq!(frequency_shift_sq(&s0, &p0, &QuadratureConfig::default()).unwrap(), 0.0);
        assert_eq!(level_shift_f(&s0, &p0, 1.0, &QuadratureConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn infinite_cutoff_flag() {
        let s = BathSpectrum::drude(0.1, Cutoff::Infinite);
        let p = ModelParams::new(1.0, 0.1, Cutoff::Infinite).unwrap();
        let cfg = QuadratureConfig::default();
        assert_eq!(renormalized_shift_h_r(&s, &p, 2.0, &cfg).unwrap(), 0.0);
        assert!(level_shift_h(&s, &p, 2.0, &cfg).is_err());
        assert!(frequency_shift_sq(&s, &p, &cfg).is_err());
    }

    #[test]
    fn tabulated_with_nonzero_origin_is_rejected() {
        let s = BathSpectrum::tabulated(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        let p = ModelParams::new(1.0, 0.1, Cutoff::Finite(1.0)).unwrap();
        assert!(matches!(frequency_shift_sq(&s, &p, &QuadratureConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn tabulated_shift_function_interpolates_quadrature() {
        let (d, p) = drude(0.1, 10.0);
        let table: Vec<(f64, f64)> = (0..=4000)
            .map(|i| {
                let w = 100.0 * i as f64 / 4000.0;
                (w, crate::spectral::spectral_density(&d, 1.0, w).unwrap())
            })
            .collect();
        let s = BathSpectrum::tabulated(table).unwrap();
        let grid: Vec<f64> = (1..=40).map(|i| 0.05 * i as f64).collect();
        let sf = ShiftFunction::new(&s, &p, ShiftKind::F, &grid, &QuadratureConfig::default()).unwrap();
        let direct = level_shift_f(&s, &p, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((sf.eval(&s, &p, 1.0) - direct).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn paired_window_agrees_with_subtraction(a in 0.5f64..3.0, k in 0.1f64..4.0, pole in 0.2f64..1.8) {
            let f = move |x: f64| (k * x).sin() + a * x * x;
            let cfg = QuadratureConfig::default();
            let x = cauchy_pv(f, pole, 0.0, 2.0, &cfg).unwrap();
            let y = cauchy_pv_subtracted(f, pole, 0.0, 2.0, &cfg).unwrap();
            prop_assert!((x.value - y.value).abs() <= 10.0 * (x.error + y.error) + 1e-9);
        }

        #[test]
        fn halving_window_is_within_error(w in 0.3f64..5.0) {
            let (s, p) = drude(0.1, 50.0);
            let cfg = QuadratureConfig::default();
            let eps = 1e-4 * w.max(1.0);
            let f = |x: f64| [coupling_sq_unchecked(&s, &p, x)];
            let a = fourier_pv(&f, 0.0, Some(w), None, &[], eps, 2500.0, cfg.tolerance()).unwrap();
            let b = fourier_pv(&f, 0.0, Some(w), None, &[], 0.5 * eps, 2500.0, cfg.tolerance()).unwrap();
            prop_assert!((a.value[0] - b.value[0]).norm() <= a.error + b.error + 1e-12);
        }

        #[test]
        fn h_below_f(w in 0.05f64..300.0, g in 0.01f64..0.5, c in 5.0f64..100.0) {
            let (s, p) = drude(g, c);
            let v = closed_form_shifts(&s, &p, w).unwrap();
            prop_assert!(v.h < v.f);
            prop_assert!(v.g > 0.0);
        }
    }
}
