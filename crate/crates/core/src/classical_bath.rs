//! Classical simulation of the oscillator coupled to a finite set of bath oscillators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::ReservoirIc;
use crate::error::{Error, Result};
use crate::spectral::{spectral_density, BathSpectrum, ModelParams, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscretizationScheme {
    UniformFreq,
}

/// Bath oscillators with frequencies ω_j, masses m_j and couplings C_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBath {
    pub omegas: Vec<f64>,
    pub masses: Vec<f64>,
    pub couplings: Vec<f64>,
    pub scheme: DiscretizationScheme,
    pub delta_omega: f64,
    pub omega_max: f64,
}

impl DiscreteBath {
    /// Bath from explicit modes; spacing and extent are read off the frequencies.
    pub fn from_modes(omegas: Vec<f64>, masses: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if omegas.len() != masses.len() || omegas.len() != couplings.len() {
            return Err(Error::InvalidParameter("mode arrays differ in length".into()));
        }
        if omegas.iter().any(|w| !(*w > 0.0)) || masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidParameter("mode frequencies and masses must be positive".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("mode frequencies must be strictly increasing".into()));
        }
        let delta_omega = if omegas.len() > 1 {
            (omegas[omegas.len() - 1] - omegas[0]) / (omegas.len() - 1) as f64
        } else {
            0.0
        };
        let omega_max = omegas.last().map_or(0.0, |w| w + 0.5 * delta_omega);
        Ok(Self {
            omegas,
            masses,
            couplings,
            scheme: DiscretizationScheme::UniformFreq,
            delta_omega,
            omega_max,
        })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// C_j/(m_j ω_j²), the equilibrium displacement of mode j per unit system displacement.
    pub fn displacement_per_q(&self, j: usize) -> f64 {
        self.couplings[j] / (self.masses[j] * self.omegas[j] * self.omegas[j])
    }

    /// Σ_j C_j²/(M m_j ω_j²).
    pub fn frequency_shift_sq(&self, mass: f64) -> f64 {
        (0..self.len())
            .map(|j| self.couplings[j] * self.displacement_per_q(j))
            .sum::<f64>()
            / mass
    }

    /// (π/2)Σ_j C_j²/(m_j ω_j)·box(ω − ω_j)/Δω, with half weight on box edges.
    pub fn reconstructed_j(&self, w: f64) -> f64 {
        let h = 0.5 * self.delta_omega;
        let mut acc = 0.0;
        for j in 0..self.len() {
            let d = (w - self.omegas[j]).abs();
            let weight = if d < h - 1e-12 * h {
                1.0
            } else if d <= h + 1e-12 * h {
                0.5
            } else {
                continue;
            };
            acc += weight * self.couplings[j].powi(2) / (self.masses[j] * self.omegas[j]);
        }
        0.5 * PI * acc / self.delta_omega
    }

    /// Σ_j C_j²/(m_j ω_j²)·cos(ω_j s).
    pub fn memory_kernel(&self, s: f64) -> f64 {
        (0..self.len())
            .map(|j| self.couplings[j] * self.displacement_per_q(j) * (self.omegas[j] * s).cos())
            .sum()
    }

    /// 2π/Δω.
    pub fn recurrence_time(&self) -> f64 {
        if self.delta_omega > 0.0 {
            2.0 * PI / self.delta_omega
        } else {
            f64::INFINITY
        }
    }

    /// First zero of the memory kernel, located by scanning and bisection.
    pub fn memory_time(&self) -> f64 {
        if self.couplings.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        let step = PI / (16.0 * self.omega_max.max(1e-300));
        let mut a = 0.0;
        let mut fa = self.memory_kernel(a);
        let limit = 0.5 * self.recurrence_time().min(1e6 * step);
        while a < limit {
            let b = a + step;
            let fb = self.memory_kernel(b);
            if fa * fb <= 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.memory_kernel(lo) * self.memory_kernel(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            a = b;
            fa = fb;
        }
        f64::INFINITY
    }
}

/// Extent used when none is configured: 5Ω_c for Drude, the support end otherwise.
pub fn default_omega_max(s: &BathSpectrum) -> Option<f64> {
    match s.kind {
        SpectrumKind::Drude => s.cutoff.finite().map(|c| 5.0 * c),
        _ => s.support_end(),
    }
}

/// Uniform midpoint grid ω_j = (j − ½)Δω with C_j² = (2/π)m_jω_jJ(ω_j)Δω and m_j = 1.
pub fn discretize_bath(
    s: &BathSpectrum,
    p: &ModelParams,
    n: usize,
    scheme: DiscretizationScheme,
    omega_max: Option<f64>,
) -> Result<DiscreteBath> {
    p.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bath modes, got {n}")));
    }
    let wmax = match omega_max.or_else(|| default_omega_max(s)) {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => return Err(Error::InvalidParameter(format!("bath extent must be positive, got {w}"))),
        None => {
            return Err(Error::InvalidParameter(
                "an infinite-cutoff spectrum needs an explicit bath extent".into(),
            ))
        }
    };
    let dw = wmax / n as f64;
    if dw > 0.25 * p.omega0 {
        return Err(Error::InvalidParameter(format!(
            "mode spacing {dw} exceeds ω₀/4 = {}; increase the mode count",
            0.25 * p.omega0
        )));
    }
    let DiscretizationScheme::UniformFreq = scheme;
    let omegas: Vec<f64> = (1..=n).map(|j| (j as f64 - 0.5) * dw).collect();
    let masses = vec![1.0; n];
    let couplings = omegas
        .iter()
        .zip(&masses)
        .map(|(&w, &m)| Ok((2.0 / PI * m * w * spectral_density(s, p.mass, w)? * dw).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteBath {
        omegas,
        masses,
        couplings,
        scheme,
        delta_omega: dw,
        omega_max: wmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_samples: usize,
    pub kt: f64,
    pub seed: u64,
    pub dt: f64,
    pub t_max: f64,
    pub ic_variant: ReservoirIc,
    /// Store every k-th integrator step.
    pub record_every: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            kt: 0.1,
            seed: 0,
            dt: 1e-3,
            t_max: 10.0,
            ic_variant: ReservoirIc::Shifted,
            record_every: 1,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self, bath: &DiscreteBath, p: &ModelParams) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        if !(self.kt >= 0.0 && self.kt.is_finite()) {
            return Err(Error::InvalidParameter(format!("kT must be non-negative, got {}", self.kt)));
        }
        let fastest = bath.omegas.iter().copied().fold(p.omega0, f64::max);
        if !(self.dt > 0.0 && self.dt < 0.1 / fastest) {
            return Err(Error::InvalidParameter(format!(
                "time step {} must lie in (0, 0.1/ω_max) = (0, {})",
                self.dt,
                0.1 / fastest
            )));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Positions and momenta of the system and all bath modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: f64,
    pub p: f64,
    pub qj: Vec<f64>,
    pub pj: Vec<f64>,
}

/// Standard-normal draws for one sample: ξ for positions, η for momenta.
fn draw_noise(n: usize, seed: u64, index: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let xi = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let eta = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    (xi, eta)
}

fn state_from_noise(
    bath: &DiscreteBath,
    kt: f64,
    ic: ReservoirIc,
    q0: f64,
    p0: f64,
    xi: &[f64],
    eta: &[f64],
) -> PhaseState {
    let n = bath.len();
    let mut qj = Vec::with_capacity(n);
    let mut pj = Vec::with_capacity(n);
    for j in 0..n {
        let (m, w) = (bath.masses[j], bath.omegas[j]);
        let center = match ic {
            ReservoirIc::Shifted => bath.displacement_per_q(j) * q0,
            ReservoirIc::Bare => 0.0,
        };
        qj.push(center + (kt / (m * w * w)).sqrt() * xi[j]);
        pj.push((m * kt).sqrt() * eta[j]);
    }
    PhaseState { q: q0, p: p0, qj, pj }
}

/// Thermal initial state of sample `index`; the system starts exactly at (q0, p0).
pub fn sample_initial_conditions(
    bath: &DiscreteBath,
    cfg: &EnsembleConfig,
    q0: f64,
    p0: f64,
    index: u64,
) -> PhaseState {
    let (xi, eta) = draw_noise(bath.len(), cfg.seed, index);
    state_from_noise(bath, cfg.kt, cfg.ic_variant, q0, p0, &xi, &eta)
}

/// Total energy in the completed-square form.
pub fn energy(bath: &DiscreteBath, p: &ModelParams, s: &PhaseState) -> f64 {
    let mut e = s.p * s.p / (2.0 * p.mass) + 0.5 * p.mass * p.omega0 * p.omega0 * s.q * s.q;
    for j in 0..bath.len() {
        let (m, w) = (bath.masses[j], bath.omegas[j]);
        let d = s.qj[j] - bath.displacement_per_q(j) * s.q;
        e += s.pj[j] * s.pj[j] / (2.0 * m) + 0.5 * m * w * w * d * d;
    }
    e
}

/// F(t) = Σ C_j q̃_j(0)cos(ω_j t) + Σ (C_j/ω_j)q̇_j(0)sin(ω_j t) for an initial state.
pub fn fluctuating_force(bath: &DiscreteBath, s: &PhaseState, t: f64) -> f64 {
    (0..bath.len())
        .map(|j| {
            let (c, w, m) = (bath.couplings[j], bath.omegas[j], bath.masses[j]);
            let qt = s.qj[j] - bath.displacement_per_q(j) * s.q;
            let (sn, cs) = (w * t).sin_cos();
            c * qt * cs + c / w * (s.pj[j] / m) * sn
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub energy: Vec<f64>,
    pub final_state: PhaseState,
}

fn forces(bath: &DiscreteBath, p: &ModelParams, s: &PhaseState, fj: &mut [f64]) -> f64 {
    let mut f = -p.mass * p.omega0 * p.omega0 * s.q;
    for j in 0..bath.len() {
        let (m, w, c) = (bath.masses[j], bath.omegas[j], bath.couplings[j]);
        let d = s.qj[j] - bath.displacement_per_q(j) * s.q;
        f += c * d;
        fj[j] = -m * w * w * d;
    }
    f
}

/// Velocity-Verlet integration of the full system up to `cfg.t_max`.
pub fn integrate_eom(
    bath: &DiscreteBath,
    p: &ModelParams,
    state: &PhaseState,
    cfg: &EnsembleConfig,
) -> Result<SimTrajectory> {
    cfg.validate(bath, p)?;
    let n = bath.len();
    let steps = (cfg.t_max / cfg.dt).round() as usize;
    let dt = cfg.dt;
    let mut s = state.clone();
    let mut fj = vec![0.0; n];
    let mut f = forces(bath, p, &s, &mut fj);
    let e0 = energy(bath, p, &s);
    let cap = steps / cfg.record_every + 2;
    let mut out = SimTrajectory {
        times: Vec::with_capacity(cap),
        q: Vec::with_capacity(cap),
        p: Vec::with_capacity(cap),
        energy: Vec::with_capacity(cap),
        final_state: s.clone(),
    };
    out.times.push(0.0);
    out.q.push(s.q);
    out.p.push(s.p);
    out.energy.push(e0);
    for step in 1..=steps {
        s.p += 0.5 * dt * f;
        for j in 0..n {
            s.pj[j] += 0.5 * dt * fj[j];
        }
        s.q += dt * s.p / p.mass;
        for j in 0..n {
            s.qj[j] += dt * s.pj[j] / bath.masses[j];
        }
        f = forces(bath, p, &s, &mut fj);
        s.p += 0.5 * dt * f;
        for j in 0..n {
            s.pj[j] += 0.5 * dt * fj[j];
        }
        if step % cfg.record_every == 0 || step == steps {
            let e = energy(bath, p, &s);
            if e0 > 0.0 && (e - e0).abs() > 1e-3 * e0 || !e.is_finite() {
                return Err(Error::Unstable(format!(
                    "energy drifted from {e0} to {e} by t = {}; reduce the time step",
                    step as f64 * dt
                )));
            }
            out.times.push(step as f64 * dt);
            out.q.push(s.q);
            out.p.push(s.p);
            out.energy.push(e);
        }
    }
    out.final_state = s;
    Ok(out)
}

/// Exact propagation of the linear equations through the normal modes of the coupled system.
#[derive(Debug, Clone)]
pub struct ModalPropagator {
    pub frequencies: Vec<f64>,
    vectors: DMatrix<f64>,
    sqrt_masses: Vec<f64>,
}

impl ModalPropagator {
    pub fn new(bath: &DiscreteBath, p: &ModelParams) -> Result<Self> {
        let n = bath.len() + 1;
        let mut k = DMatrix::<f64>::zeros(n, n);
        k[(0, 0)] = p.omega0 * p.omega0 + bath.frequency_shift_sq(p.mass);
        let mut sqrt_masses = vec![p.mass.sqrt()];
        for j in 0..bath.len() {
            let (m, w, c) = (bath.masses[j], bath.omegas[j], bath.couplings[j]);
            k[(j + 1, j + 1)] = w * w;
            k[(0, j + 1)] = -c / (p.mass * m).sqrt();
            k[(j + 1, 0)] = k[(0, j + 1)];
            sqrt_masses.push(m.sqrt());
        }
        let eig = SymmetricEigen::new(k);
        let mut frequencies = Vec::with_capacity(n);
        for &l in eig.eigenvalues.iter() {
            if !(l > 0.0) {
                return Err(Error::Unstable(format!("normal-mode frequency squared {l} is not positive")));
            }
            frequencies.push(l.sqrt());
        }
        Ok(Self {
            frequencies,
            vectors: eig.eigenvectors,
            sqrt_masses,
        })
    }

    /// Weights (g_q, g_v) with q(t) = Σ_i g_q[i]·y_i(0) + g_v[i]·ẏ_i(0) in mass-weighted coordinates.
    pub fn position_response(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.frequencies.len();
        let mut cq = vec![0.0; n];
        let mut cv = vec![0.0; n];
        for k in 0..n {
            let l = self.frequencies[k];
            let (sn, cs) = (l * t).sin_cos();
            cq[k] = self.vectors[(0, k)] * cs;
            cv[k] = self.vectors[(0, k)] * sn / l;
        }
        let mut gq = vec![0.0; n];
        let mut gv = vec![0.0; n];
        let inv = 1.0 / self.sqrt_masses[0];
        for i in 0..n {
            let (mut a, mut b) = (0.0, 0.0);
            for k in 0..n {
                a += cq[k] * self.vectors[(i, k)];
                b += cv[k] * self.vectors[(i, k)];
            }
            gq[i] = a * inv;
            gv[i] = b * inv;
        }
        (gq, gv)
    }

    /// Mass-weighted coordinates and velocities of a phase-space state.
    pub fn weighted(&self, s: &PhaseState) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![s.q * self.sqrt_masses[0]];
        let mut v = vec![s.p / self.sqrt_masses[0]];
        for j in 0..s.qj.len() {
            y.push(s.qj[j] * self.sqrt_masses[j + 1]);
            v.push(s.pj[j] / self.sqrt_masses[j + 1]);
        }
        (y, v)
    }

    pub fn position(&self, s: &PhaseState, t: f64) -> f64 {
        let (gq, gv) = self.position_response(t);
        let (y, v) = self.weighted(s);
        dot(&gq, &y) + dot(&gv, &v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceStats {
    pub mean_force: MeanSeries,
    /// Bare-ensemble mean force under the same draws.
    pub bare_mean_force: MeanSeries,
    /// Integration window for the impulses, just past the 20th lobe of sin(Ω_max t)/t.
    pub kick_window: f64,
    pub kick_impulse: Estimate,
    pub shifted_impulse: Estimate,
    /// Bare minus Shifted impulse over the window, sample by sample.
    pub impulse_difference: Estimate,
    pub expected_impulse: f64,
    /// ∫⟨F(t)F(t′)⟩dt′ over a window of ±`kick_window`, averaged over reference times.
    pub integrated_autocorr: Estimate,
    pub expected_autocorr: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub n_samples: usize,
    pub shifted: MeanSeries,
    pub bare: MeanSeries,
    pub forces: ForceStats,
}

struct SampleResult {
    q_shifted: Vec<f64>,
    q_bare: Vec<f64>,
    f_shifted: Vec<f64>,
    f_bare: Vec<f64>,
    impulse_shifted: f64,
    impulse_bare: f64,
    autocorr: f64,
}

fn estimate<I: Iterator<Item = f64> + Clone>(values: I, n: usize) -> Estimate {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Estimate {
        mean,
        stderr: (var / n as f64).sqrt(),
    }
}

fn series(times: &[f64], rows: &[SampleResult], pick: impl Fn(&SampleResult) -> &[f64]) -> MeanSeries {
    let n = rows.len();
    let mut mean = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let e = estimate(rows.iter().map(|r| pick(r)[i]), n);
        mean.push(e.mean);
        stderr.push(e.stderr);
    }
    MeanSeries {
        times: times.to_vec(),
        mean,
        stderr,
    }
}

/// Runs Bare and Shifted ensembles with common random numbers, propagating each sample exactly.
pub fn run_ensembles(
    bath: &DiscreteBath,
    p: &ModelParams,
    cfg: &EnsembleConfig,
    q0: f64,
    p0: f64,
    times: &[f64],
) -> Result<EnsembleReport> {
    cfg.validate(bath, p)?;
    let prop = ModalPropagator::new(bath, p)?;
    let responses: Vec<(Vec<f64>, Vec<f64>)> = times.iter().map(|&t| prop.position_response(t)).collect();
    let n = bath.len();
    let tau = 20.5 * PI / bath.omega_max;
    let refs: Vec<f64> = (0..32).map(|i| tau * (1.0 + 0.25 * i as f64)).collect();
    // Per-mode trigonometric tables shared by all samples.
    let trig = |t: f64| -> (Vec<f64>, Vec<f64>) { bath.omegas.iter().map(|w| (w * t).sin_cos()).map(|(s, c)| (c, s)).unzip() };
    let force_tables: Vec<(Vec<f64>, Vec<f64>)> = times.iter().map(|&t| trig(t)).collect();
    let imp_cos: Vec<f64> = bath.omegas.iter().map(|w| (w * tau).sin() / w).collect();
    let imp_sin: Vec<f64> = bath.omegas.iter().map(|w| (1.0 - (w * tau).cos()) / w).collect();
    let ref_tables: Vec<[Vec<f64>; 4]> = refs
        .iter()
        .map(|&t| {
            let (c, s) = trig(t);
            let (a, b) = (t - tau, t + tau);
            let ic = bath.omegas.iter().map(|w| ((w * b).sin() - (w * a).sin()) / w).collect();
            let is = bath.omegas.iter().map(|w| ((w * a).cos() - (w * b).cos()) / w).collect();
            [c, s, ic, is]
        })
        .collect();

    let rows: Vec<SampleResult> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|idx| {
            let (xi, eta) = draw_noise(n, cfg.seed, idx);
            let sh = state_from_noise(bath, cfg.kt, ReservoirIc::Shifted, q0, p0, &xi, &eta);
            let ba = state_from_noise(bath, cfg.kt, ReservoirIc::Bare, q0, p0, &xi, &eta);
            let (ys, vs) = prop.weighted(&sh);
            let (yb, vb) = prop.weighted(&ba);
            let q_shifted = responses.iter().map(|(gq, gv)| dot(gq, &ys) + dot(gv, &vs)).collect();
            let q_bare = responses.iter().map(|(gq, gv)| dot(gq, &yb) + dot(gv, &vb)).collect();
            // Force amplitudes: a_j multiplies cos(ω_j t), b_j multiplies sin(ω_j t).
            let amp = |s: &PhaseState| -> (Vec<f64>, Vec<f64>) {
                (0..n)
                    .map(|j| {
                        let c = bath.couplings[j];
                        let qt = s.qj[j] - bath.displacement_per_q(j) * s.q;
                        (c * qt, c / bath.omegas[j] * s.pj[j] / bath.masses[j])
                    })
                    .unzip()
            };
            let (as_, bs) = amp(&sh);
            let (ab, bb) = amp(&ba);
            let force = |a: &[f64], b: &[f64], c: &[f64], s: &[f64]| dot(a, c) + dot(b, s);
            let f_shifted = force_tables.iter().map(|(c, s)| force(&as_, &bs, c, s)).collect();
            let f_bare = force_tables.iter().map(|(c, s)| force(&ab, &bb, c, s)).collect();
            let autocorr = ref_tables
                .iter()
                .map(|[c, s, ic, is]| force(&as_, &bs, c, s) * force(&as_, &bs, ic, is))
                .sum::<f64>()
                / ref_tables.len() as f64;
            SampleResult {
                q_shifted,
                q_bare,
                f_shifted,
                f_bare,
                impulse_shifted: force(&as_, &bs, &imp_cos, &imp_sin),
                impulse_bare: force(&ab, &bb, &imp_cos, &imp_sin),
                autocorr,
            }
        })
        .collect();

    let ns = rows.len();
    let kick_impulse = estimate(rows.iter().map(|r| r.impulse_bare), ns);
    let shifted_impulse = estimate(rows.iter().map(|r| r.impulse_shifted), ns);
    let impulse_difference = estimate(rows.iter().map(|r| r.impulse_bare - r.impulse_shifted), ns);
    let integrated_autocorr = estimate(rows.iter().map(|r| r.autocorr), ns);
    let mut warnings = Vec::new();
    if integrated_autocorr.stderr > 0.5 * integrated_autocorr.mean.abs() {
        warnings.push(format!(
            "insufficient samples: autocorrelation standard error {} exceeds half its value {}",
            integrated_autocorr.stderr, integrated_autocorr.mean
        ));
    }
    if kick_impulse.stderr > 0.5 * kick_impulse.mean.abs() {
        warnings.push(format!(
            "insufficient samples: kick impulse standard error {} exceeds half its value {}",
            kick_impulse.stderr, kick_impulse.mean
        ));
    }
    Ok(EnsembleReport {
        n_samples: ns,
        shifted: series(times, &rows, |r| &r.q_shifted),
        bare: series(times, &rows, |r| &r.q_bare),
        forces: ForceStats {
            mean_force: series(times, &rows, |r| &r.f_shifted),
            bare_mean_force: series(times, &rows, |r| &r.f_bare),
            kick_window: tau,
            kick_impulse,
            shifted_impulse,
            impulse_difference,
            expected_impulse: -2.0 * p.mass * p.gamma * q0,
            integrated_autocorr,
            expected_autocorr: 4.0 * p.mass * p.gamma * cfg.kt,
            warnings,
        },
    })
}

/// Force statistics of the ensembles for an oscillator released from rest at q0.
pub fn fluctuating_force_stats(
    bath: &DiscreteBath,
    p: &ModelParams,
    cfg: &EnsembleConfig,
    q0: f64,
    times: &[f64],
) -> Result<ForceStats> {
    Ok(run_ensembles(bath, p, cfg, q0, 0.0, times)?.forces)
}

/// Finite-cutoff mean force of the Bare ensemble, −(4Mγq0/π)·sin(Ω_max t)/t.
pub fn bare_mean_force_continuum(p: &ModelParams, omega_max: f64, q0: f64, t: f64) -> f64 {
    let k = if t == 0.0 { omega_max } else { (omega_max * t).sin() / t };
    -4.0 * p.mass * p.gamma * q0 / PI * k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryKernelReport {
    pub t: f64,
    pub kernel_integral: f64,
    pub markov_value: f64,
    pub relative_error: f64,
    pub memory_time: f64,
}

/// Compares Σ_j (C_j²/m_jω_j²)∫₀^t cos(ω_j(t − t′))q̇(t′)dt′ with 2Mγq̇(t) at the last sample time.
/// The integral uses the trapezoidal rule on the supplied samples.
pub fn memory_kernel_check(
    bath: &DiscreteBath,
    p: &ModelParams,
    times: &[f64],
    qdot: &[f64],
) -> Result<MemoryKernelReport> {
    if times.len() != qdot.len() || times.is_empty() {
        return Err(Error::InvalidParameter("times and velocities must be non-empty and equal in length".into()));
    }
    let t = *times.last().expect("non-empty");
    let mut integral = 0.0;
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        integral += 0.5 * h * (bath.memory_kernel(t - times[i - 1]) * qdot[i - 1] + bath.memory_kernel(t - times[i]) * qdot[i]);
    }
    let markov = 2.0 * p.mass * p.gamma * qdot[qdot.len() - 1];
    let relative_error = if markov == 0.0 {
        integral.abs()
    } else {
        (integral - markov).abs() / markov.abs()
    };
    Ok(MemoryKernelReport {
        t,
        kernel_integral: integral,
        markov_value: markov,
        relative_error,
        memory_time: bath.memory_time(),
    })
}

/// Kernel integral for constant velocity v, in closed form: Σ_j (C_j²/m_jω_j²)·v·sin(ω_j t)/ω_j.
pub fn memory_kernel_constant_velocity(bath: &DiscreteBath, t: f64, v: f64) -> f64 {
    (0..bath.len())
        .map(|j| bath.couplings[j] * bath.displacement_per_q(j) * v * (bath.omegas[j] * t).sin() / bath.omegas[j])
        .sum()
}
