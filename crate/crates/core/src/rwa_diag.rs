//! Diagonalization of the rotating-wave Hamiltonian and its exact dynamics.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full_diag::{frequency_grid, peak_breaks};
use crate::pv::{default_grid_max, fourier_pv, QuadratureConfig, ShiftFunction, ShiftKind};
use crate::quad::{self, Tolerance};
use crate::spectral::{coupling_sq_unchecked, BathSpectrum, ModelParams, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaOptions {
    /// Shift in the resonance denominator: F for the exact rotating-wave model, H or H_R for the
    /// reduced kernel obtained from the full model.
    pub shift: ShiftKind,
    pub quad: QuadratureConfig,
    /// Start of the asymptotic tail for integrals over ω.
    pub tail_start: Option<f64>,
    /// Truncation of integrals over the bath frequency Ω.
    pub outer_max: Option<f64>,
    pub n_grid: usize,
}

impl Default for RwaOptions {
    fn default() -> Self {
        Self {
            shift: ShiftKind::F,
            quad: QuadratureConfig::default(),
            tail_start: None,
            outer_max: None,
            n_grid: 2000,
        }
    }
}

impl RwaOptions {
    pub fn with_shift(shift: ShiftKind) -> Self {
        Self {
            shift,
            ..Self::default()
        }
    }
}

/// |α_ω|² and the shift tabulated on a frequency grid, plus the evaluators behind them.
#[derive(Debug, Clone)]
pub struct RwaKernel {
    pub omega_grid: Vec<f64>,
    pub alpha_sq: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Root of ω − ω₀ − S(ω) = 0, if found on ω > 0.
    pub resonance: Option<f64>,
    spectrum: BathSpectrum,
    params: ModelParams,
    shift: ShiftFunction,
    opts: RwaOptions,
    tail_start: f64,
    outer_max: f64,
}

/// Amplitude of an initially coherent oscillator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude {
    pub t: f64,
    pub value: Complex64,
    /// (Ω, β_Ω(t)) pairs for the coherent amplitudes acquired by the bath modes.
    pub reservoir_amplitudes: Option<Vec<(f64, Complex64)>>,
}

/// Coefficients of â(t) = c_a â + ∫dΩ c_b(Ω) b̂_Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaEvolution {
    pub t: f64,
    pub c_a: Complex64,
    pub omega: Vec<f64>,
    pub c_b: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaSumRule {
    pub t: f64,
    pub c_a: Complex64,
    pub bath: f64,
    pub total: f64,
}

impl RwaKernel {
    pub fn new(s: &BathSpectrum, p: &ModelParams, opts: RwaOptions) -> Result<Self> {
        p.validate()?;
        opts.quad.validate()?;
        let limit = s.cutoff.is_infinite() && s.kind != SpectrumKind::Tabulated;
        let end = s
            .support_end()
            .unwrap_or_else(|| default_grid_max(s, p, &opts.quad));
        let scale = s.frequency_scale().unwrap_or(0.0).max(p.omega0);
        let width0 = (PI * coupling_sq_unchecked(s, p, p.omega0)).max(1e-9 * p.omega0);
        let closed = crate::pv::closed_form_shifts(s, p, 1.0).is_some() || limit;
        let table_grid = if closed {
            Vec::new()
        } else {
            frequency_grid(p.omega0, width0, end, opts.n_grid)
        };
        let shift = ShiftFunction::new(s, p, opts.shift, &table_grid, &opts.quad)?;
        let mut k = Self {
            omega_grid: Vec::new(),
            alpha_sq: Vec::new(),
            f_values: Vec::new(),
            resonance: None,
            spectrum: s.clone(),
            params: *p,
            shift,
            opts,
            tail_start: opts.tail_start.unwrap_or(10.0 * scale),
            outer_max: opts.outer_max.unwrap_or(20.0 * scale),
        };
        if opts.shift != ShiftKind::HR {
            let s0 = k.shift(1e-9 * p.omega0);
            if p.omega0 + s0 <= 0.0 {
                return Err(Error::Validity(format!(
                    "the rotating-wave Hamiltonian has a bound state below the continuum: ω₀ + S(0) = {} ≤ 0",
                    p.omega0 + s0
                )));
            }
        }
        k.resonance = k.find_resonance();
        let center = k.resonance.unwrap_or(p.omega0);
        let grid = frequency_grid(center, width0, end.min(k.tail_start), opts.n_grid);
        k.f_values = grid.iter().map(|&w| k.shift(w)).collect();
        k.alpha_sq = grid.iter().map(|&w| k.alpha_sq(w)).collect();
        k.omega_grid = grid;
        Ok(k)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn coupling_sq(&self, w: f64) -> f64 {
        coupling_sq_unchecked(&self.spectrum, &self.params, w)
    }

    pub fn shift(&self, w: f64) -> f64 {
        self.shift.eval(&self.spectrum, &self.params, w)
    }

    pub fn alpha_sq(&self, w: f64) -> f64 {
        let v2 = self.coupling_sq(w);
        if !(v2 > 0.0) {
            return 0.0;
        }
        let d = w - self.params.omega0 - self.shift(w);
        v2 / (d * d + (PI * v2).powi(2))
    }

    fn find_resonance(&self) -> Option<f64> {
        let w0 = self.params.omega0;
        let mut x = w0 + self.shift(w0);
        for _ in 0..200 {
            if !(x > 0.0) {
                return None;
            }
            let next = w0 + self.shift(x);
            if (next - x).abs() <= 1e-15 * w0.max(x.abs()) {
                return Some(next);
            }
            x = next;
        }
        // Fall back to bisection on a sign change around the last iterate.
        let f = |w: f64| w - w0 - self.shift(w);
        let mut lo = (x - 0.5 * w0).max(1e-12 * w0);
        let mut hi = x + 0.5 * w0;
        if f(lo) * f(hi) > 0.0 {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Half width of the main peak.
    pub fn width(&self) -> f64 {
        let c = self.resonance.unwrap_or(self.params.omega0);
        (PI * self.coupling_sq(c)).clamp(1e-9 * self.params.omega0, 0.5 * self.params.omega0)
    }

    fn breaks(&self, hi: f64) -> Vec<f64> {
        let c = self.resonance.unwrap_or(self.params.omega0);
        let mut b = peak_breaks(c, self.width(), 0.0, hi);
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

    /// ∫|α_ω|²dω over the whole support.
    pub fn normalization(&self) -> Result<f64> {
        let g = |w: f64| [self.alpha_sq(w)];
        let e = fourier_pv(
            &g,
            0.0,
            None,
            self.spectrum.support_end(),
            &self.breaks(self.tail_start),
            0.0,
            self.tail_start,
            self.inner_tol(),
        )?;
        Ok(e.value[0].re)
    }

    /// c_a(t) = ∫|α_ω|²e^{−iωt}dω; exactly 1 at t = 0.
    pub fn c_a(&self, t: f64) -> Result<Complex64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let g = |w: f64| [self.alpha_sq(w)];
        let e = fourier_pv(
            &g,
            t,
            None,
            self.spectrum.support_end(),
            &self.breaks(self.tail_start),
            0.0,
            self.tail_start,
            self.inner_tol(),
        )?;
        Ok(e.value[0])
    }

    /// c_b(Ω,t): principal-value part plus the on-shell part, with v(Ω) real positive.
    pub fn c_b(&self, big: f64, t: f64) -> Result<Complex64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        let v2 = self.coupling_sq(big);
        if t == 0.0 || !(v2 > 0.0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let g = |w: f64| [self.alpha_sq(w)];
        let hi = self.tail_start.max(2.0 * big + 1.0);
        let eps = 1e-4 * self.params.omega0.max(big);
        let e = fourier_pv(
            &g,
            t,
            Some(big),
            self.spectrum.support_end(),
            &self.breaks(hi),
            eps,
            self.tail_start,
            self.inner_tol(),
        )?;
        let principal = -e.value[0];
        let d = big - self.params.omega0 - self.shift(big);
        let on_shell = self.alpha_sq(big) * d / v2 * Complex64::from_polar(1.0, -big * t);
        Ok(v2.sqrt() * (principal + on_shell))
    }

    pub fn evolve(&self, t: f64, omega: &[f64]) -> Result<RwaEvolution> {
        Ok(RwaEvolution {
            t,
            c_a: self.c_a(t)?,
            omega: omega.to_vec(),
            c_b: omega.iter().map(|&w| self.c_b(w, t)).collect::<Result<_>>()?,
        })
    }

    /// |c_a|² + ∫|c_b|²dΩ with the large-Ω tail ∫|v|²(1 + |c_a|²)/Ω² added.
    pub fn sum_rule(&self, t: f64) -> Result<RwaSumRule> {
        if self.spectrum.cutoff.is_infinite() && self.spectrum.kind != SpectrumKind::Tabulated {
            return Err(Error::Validity(
                "the bath weight ∫|c_b|² diverges logarithmically without a cutoff; the sum rule needs a finite cutoff"
                    .into(),
            ));
        }
        let c_a = self.c_a(t)?;
        let end = self
            .spectrum
            .support_end()
            .map_or(self.outer_max, |e| e.min(self.outer_max));
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let f = |w: f64| -> f64 {
            match self.c_b(w, t) {
                Ok(c) => c.norm_sqr(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let width = (t > 0.0).then(|| 2.0 * PI / t);
        let pts = quad::partition(0.0, end, &self.breaks(end), width);
        let tol = Tolerance {
            abs: 1e-8,
            rel: 1e-8,
            max_subdivisions: self.opts.quad.max_subdivisions,
        };
        let body = quad::integrate(f, &pts, tol)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let tail = if t > 0.0 && self.spectrum.support_end().is_none_or(|e| e > end) {
            let weight = 1.0 + c_a.norm_sqr();
            let e = quad::integrate_to_infinity(|w: f64| self.coupling_sq(w) / (w * w), end, tol)?;
            weight * e.value
        } else {
            0.0
        };
        let bath = body.value + tail;
        Ok(RwaSumRule {
            t,
            c_a,
            bath,
            total: c_a.norm_sqr() + bath,
        })
    }
}

pub fn alpha_sq_rwa(s: &BathSpectrum, p: &ModelParams, w: f64, opts: RwaOptions) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {w}")));
    }
    Ok(RwaKernel::new(s, p, opts)?.alpha_sq(w))
}

pub fn evolve_a_rwa(kernel: &RwaKernel, t: f64, omega: &[f64]) -> Result<RwaEvolution> {
    kernel.evolve(t, omega)
}

/// α(t) = α0·c_a(t) for a coherent oscillator state and a vacuum bath; bath amplitudes on `omega`.
pub fn coherent_decay(
    kernel: &RwaKernel,
    alpha0: Complex64,
    t: f64,
    omega: Option<&[f64]>,
) -> Result<CoherentAmplitude> {
    let value = alpha0 * kernel.c_a(t)?;
    let reservoir_amplitudes = match omega {
        Some(grid) => Some(
            grid.iter()
                .map(|&w| Ok((w, alpha0 * kernel.c_b(w, t)?)))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    Ok(CoherentAmplitude {
        t,
        value,
        reservoir_amplitudes,
    })
}

/// Weak-damping form α0·e^{−i(ω₀ + S(ω₀))t}·e^{−π|v(ω₀)|²t}.
pub fn coherent_decay_weak(kernel: &RwaKernel, alpha0: Complex64, t: f64) -> Complex64 {
    let w0 = kernel.params.omega0;
    let rate = PI * kernel.coupling_sq(w0);
    alpha0 * Complex64::from_polar((-rate * t).exp(), -(w0 + kernel.shift(w0)) * t)
}

/// Lorentzian approximation |v(ω₀)|²/((ω − ω₀ − S(ω₀))² + (π|v(ω₀)|²)²), normalized to one.
pub fn lorentzian_alpha_sq(kernel: &RwaKernel, w: f64) -> f64 {
    let w0 = kernel.params.omega0;
    let v2 = kernel.coupling_sq(w0);
    let d = w - w0 - kernel.shift(w0);
    v2 / (d * d + (PI * v2).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Cutoff;
    use proptest::prelude::*;

    fn drude(g: f64, c: f64) -> (BathSpectrum, ModelParams) {
        (
            BathSpectrum::drude(g, Cutoff::Finite(c)),
            ModelParams::new(1.0, g, Cutoff::Finite(c)).unwrap(),
        )
    }

    fn limit(g: f64) -> (BathSpectrum, ModelParams) {
        (
            BathSpectrum::ohmic_sharp(g, Cutoff::Infinite),
            ModelParams::new(1.0, g, Cutoff::Infinite).unwrap(),
        )
    }

    #[test]
    fn peak_value_at_resonance() {
        let (s, p) = drude(0.05, 20.0);
        let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
        let r = k.resonance.unwrap();
        assert!((r - 1.0 - k.shift(r)).abs() < 1e-12);
        let expect = 1.0 / (PI * PI * k.coupling_sq(r));
        assert!((k.alpha_sq(r) - expect).abs() <= 1e-10 * expect);
        let (sl, pl) = limit(0.1);
        let kl = RwaKernel::new(&sl, &pl, RwaOptions::with_shift(ShiftKind::HR)).unwrap();
        assert_eq!(kl.resonance, Some(1.0));
        assert!((kl.alpha_sq(1.0) - 1.0 / (PI * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn normalization_across_parameters() {
        for &(g, c) in &[(1e-3, 50.0), (0.01, 10.0), (0.1, 5.0), (0.3, 3.0)] {
            let (s, p) = drude(g, c);
            let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
            let n = k.normalization().unwrap();
            assert!((n - 1.0).abs() <= 1e-4, "γ={g} Ω_c={c}: {n}");
        }
        for &(g, c) in &[(0.05, 8.0), (0.2, 4.0)] {
            let s = BathSpectrum::ohmic_sharp(g, Cutoff::Finite(c));
            let p = ModelParams::new(1.0, g, Cutoff::Finite(c)).unwrap();
            let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
            let n = k.normalization().unwrap();
            assert!((n - 1.0).abs() <= 1e-4, "sharp γ={g}: {n}");
        }
    }

    #[test]
    fn bound_state_is_rejected() {
        let (s, p) = drude(0.1, 50.0);
        assert!(matches!(
            RwaKernel::new(&s, &p, RwaOptions::default()),
            Err(Error::Validity(_))
        ));
    }

    #[test]
    fn weak_coupling_lorentzian() {
        let (s, p) = drude(1e-3, 10.0);
        let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
        let peak = 1.0 / (PI * PI * k.coupling_sq(1.0));
        let mut worst: f64 = 0.0;
        for i in -500..=500 {
            let w = 1.0 + k.shift(1.0) + 10e-3 * i as f64 / 500.0;
            worst = worst.max((k.alpha_sq(w) - lorentzian_alpha_sq(&k, w)).abs());
        }
        assert!(worst <= 0.01 * peak, "{} of peak", worst / peak);
    }

    #[test]
    fn initial_values() {
        let (s, p) = drude(0.1, 5.0);
        let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
        let e = evolve_a_rwa(&k, 0.0, &[0.5, 1.0, 3.0]).unwrap();
        assert_eq!(e.c_a, Complex64::new(1.0, 0.0));
        assert!(e.c_b.iter().all(|c| c.norm() == 0.0));
        let a0 = Complex64::new(0.3, -1.2);
        assert_eq!(coherent_decay(&k, a0, 0.0, None).unwrap().value, a0);
    }

    #[test]
    fn reduced_limit_kernel_follows_its_pole() {
        // |α|² = (γω/π)/((ω − 1)² + γ²ω²) has its lower-half-plane pole at p = (1 − iγ)/(1 + γ²).
        let g = 1e-3;
        let (s, p) = limit(g);
        let k = RwaKernel::new(&s, &p, RwaOptions::with_shift(ShiftKind::HR)).unwrap();
        let pole = Complex64::new(1.0, -g) / (1.0 + g * g);
        for i in 1..=10 {
            let t = 0.5 * i as f64 / g;
            let c = k.c_a(t).unwrap();
            let expect = pole * (-Complex64::i() * pole * t).exp();
            assert!((c - expect).norm() <= 1e-5 * expect.norm(), "t={t}: {c} vs {expect}");
            assert!((c.norm() / (-g * t).exp() - 1.0).abs() <= 1e-3, "t={t}");
        }
        let a = coherent_decay_weak(&k, Complex64::new(2.0, 0.0), 1.0 / g);
        assert!((a.norm() - 2.0 * (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn sum_rule_holds() {
        let g = 0.2;
        let (s, p) = drude(g, 4.0);
        let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
        for &gt in &[0.5, 1.0, 5.0] {
            let r = k.sum_rule(gt / g).unwrap();
            assert!((r.total - 1.0).abs() <= 1e-4, "γt={gt}: {r:?}");
        }
    }

    #[test]
    fn sum_rule_needs_a_cutoff() {
        let s = BathSpectrum::drude(0.1, Cutoff::Infinite);
        let p = ModelParams::new(1.0, 0.1, Cutoff::Infinite).unwrap();
        let k = RwaKernel::new(&s, &p, RwaOptions::with_shift(ShiftKind::HR)).unwrap();
        assert!(matches!(k.sum_rule(1.0), Err(Error::Validity(_))));
        assert!(k.c_a(1.0).unwrap().norm().is_finite());
    }

    #[test]
    fn magnitude_decreases() {
        let (s, p) = drude(0.01, 20.0);
        let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
        let mut last = 1.0;
        for i in 1..=20 {
            let m = k.c_a(0.25 * i as f64 / 0.01).unwrap().norm();
            assert!(m <= last, "step {i}: {m} > {last}");
            last = m;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn alpha_sq_non_negative(w in 0.0f64..200.0, g in 0.001f64..0.2, c in 2.0f64..40.0) {
            let (s, p) = drude(g, c);
            if let Ok(k) = RwaKernel::new(&s, &p, RwaOptions::default()) {
                prop_assert!(k.alpha_sq(w) >= 0.0);
            }
        }

        #[test]
        fn coherent_amplitude_never_grows(t in 0.0f64..400.0, g in 0.005f64..0.05) {
            let (s, p) = drude(g, 10.0);
            let k = RwaKernel::new(&s, &p, RwaOptions::default()).unwrap();
            let a = coherent_decay(&k, Complex64::new(1.0, 0.5), t, None).unwrap();
            prop_assert!(a.value.norm() <= Complex64::new(1.0, 0.5).norm() * (1.0 + 1e-9));
        }
    }
}
