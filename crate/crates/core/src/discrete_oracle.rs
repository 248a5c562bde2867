//! Exact diagonalization of the oscillator coupled to a finite bath of bosonic modes.
//!
//! The Hamiltonian is H = Σ A_ij d_i†d_j + ½Σ B_ij(d_i d_j + d_i†d_j†) over d = (a, b_1, …, b_N).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical_bath::DiscreteBath;
use crate::error::{Error, Result};
use crate::spectral::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    /// Number-conserving block.
    pub a: DMatrix<f64>,
    /// Anomalous block.
    pub b: DMatrix<f64>,
    pub rwa: bool,
    pub counter_term: bool,
    /// Σ_j C_j²/(M m_j ω_j²) of the bath.
    pub frequency_shift_sq: f64,
    pub omega0: f64,
}

impl QuadraticForm {
    pub fn dimension(&self) -> usize {
        self.a.nrows()
    }
}

/// k_j = −C_j/(2√(Mω₀m_jω_j)).
pub fn discrete_couplings(bath: &DiscreteBath, p: &ModelParams) -> Vec<f64> {
    (0..bath.len())
        .map(|j| -bath.couplings[j] / (2.0 * (p.mass * p.omega0 * bath.masses[j] * bath.omegas[j]).sqrt()))
        .collect()
}

pub fn build_quadratic_form(bath: &DiscreteBath, p: &ModelParams, rwa: bool, counter_term: bool) -> QuadraticForm {
    let n = bath.len() + 1;
    let k = discrete_couplings(bath, p);
    let shift_sq = bath.frequency_shift_sq(p.mass);
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    a[(0, 0)] = p.omega0;
    if counter_term {
        let dressing = shift_sq / (2.0 * p.omega0);
        a[(0, 0)] += dressing;
        if !rwa {
            b[(0, 0)] = dressing;
        }
    }
    for j in 0..bath.len() {
        a[(j + 1, j + 1)] = bath.omegas[j];
        a[(0, j + 1)] = k[j];
        a[(j + 1, 0)] = k[j];
        if !rwa {
            b[(0, j + 1)] = k[j];
            b[(j + 1, 0)] = k[j];
        }
    }
    QuadraticForm {
        a,
        b,
        rwa,
        counter_term,
        frequency_shift_sq: shift_sq,
        omega0: p.omega0,
    }
}

/// Eigenoperators c = Φd + Ψd† with H = Σ λ_k c_k†c_k + const.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    pub frequencies: Vec<f64>,
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
}

impl NormalModes {
    /// max |ΦΦᵀ − ΨΨᵀ − I| and |ΦΨᵀ − ΨΦᵀ| entries.
    pub fn paraunitarity_residual(&self) -> f64 {
        let n = self.frequencies.len();
        let r1 = &self.phi * self.phi.transpose() - &self.psi * self.psi.transpose() - DMatrix::identity(n, n);
        let r2 = &self.phi * self.psi.transpose() - &self.psi * self.phi.transpose();
        r1.amax().max(r2.amax())
    }
}

fn unstable(form: &QuadraticForm, eig: f64) -> Error {
    Error::Unstable(format!(
        "normal-mode frequency squared {eig:.3e} is not positive; the stability condition ω₀² > Δω² fails \
         (ω₀² = {}, Δω² = {}, counter-term {})",
        form.omega0 * form.omega0,
        form.frequency_shift_sq,
        if form.counter_term { "on" } else { "off" }
    ))
}

pub fn symplectic_diagonalize(form: &QuadraticForm) -> Result<NormalModes> {
    let n = form.dimension();
    if form.rwa {
        let eig = SymmetricEigen::new(form.a.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut phi = DMatrix::zeros(n, n);
        let mut frequencies = Vec::with_capacity(n);
        for (row, &k) in order.iter().enumerate() {
            let l = eig.eigenvalues[k];
            if !(l > 0.0) {
                return Err(unstable(form, l));
            }
            frequencies.push(l);
            phi.set_row(row, &eig.eigenvectors.column(k).transpose());
        }
        return Ok(NormalModes {
            frequencies,
            phi,
            psi: DMatrix::zeros(n, n),
        });
    }
    // In quadratures H = ½xᵀKx + ½pᵀTp with K = A + B and T = A − B.
    let k = &form.a + &form.b;
    let t = &form.a - &form.b;
    let t_eig = SymmetricEigen::new(t);
    if t_eig.eigenvalues.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Unstable("kinetic block of the quadratic form is not positive definite".into()));
    }
    let root = |pow: f64| {
        let d = DVector::from_iterator(n, t_eig.eigenvalues.iter().map(|l| l.powf(pow)));
        &t_eig.eigenvectors * DMatrix::from_diagonal(&d) * t_eig.eigenvectors.transpose()
    };
    let w = root(0.5);
    let w_inv = root(-0.5);
    let s = &w * k * &w;
    let s = 0.5 * (&s + s.transpose());
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut phi = DMatrix::zeros(n, n);
    let mut psi = DMatrix::zeros(n, n);
    let mut frequencies = Vec::with_capacity(n);
    for (row, &idx) in order.iter().enumerate() {
        let l2 = eig.eigenvalues[idx];
        if !(l2 > 0.0) {
            return Err(unstable(form, l2));
        }
        let l = l2.sqrt();
        let u = eig.eigenvectors.column(idx).transpose();
        let x_part = &u * &w_inv * l.sqrt();
        let p_part = &u * &w / l.sqrt();
        phi.set_row(row, &(0.5 * (&x_part + &p_part)));
        psi.set_row(row, &(0.5 * (&x_part - &p_part)));
        frequencies.push(l);
    }
    Ok(NormalModes { frequencies, phi, psi })
}

/// Coefficients of a(t) = c_a·a + c_adag·a† + Σ_j (c_b[j]·b_j + c_bdag[j]·b_j†).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEvolution {
    pub t: f64,
    pub c_a: Complex64,
    pub c_adag: Complex64,
    pub c_b: Vec<Complex64>,
    pub c_bdag: Vec<Complex64>,
}

impl DiscreteEvolution {
    /// [a(t), a†(t)] = |c_a|² − |c_adag|² + Σ_j (|c_b|² − |c_bdag|²).
    pub fn commutator(&self) -> f64 {
        self.c_a.norm_sqr() - self.c_adag.norm_sqr()
            + self.c_b.iter().map(|c| c.norm_sqr()).sum::<f64>()
            - self.c_bdag.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

/// Heisenberg evolution of the system operator through the eigenphases of the normal modes.
pub fn discrete_evolve_a(modes: &NormalModes, t: f64) -> Result<DiscreteEvolution> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("evolution needs t ≥ 0, got {t}")));
    }
    let n = modes.frequencies.len();
    // d_0(t) = Σ_k Φ_k0 e^{−iλt}c_k − Ψ_k0 e^{iλt}c_k†, with c = Φd + Ψd†.
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let e = Complex64::from_polar(1.0, -modes.frequencies[k] * t);
        let (f0, p0) = (modes.phi[(k, 0)], modes.psi[(k, 0)]);
        for i in 0..n {
            let (fi, pi) = (modes.phi[(k, i)], modes.psi[(k, i)]);
            u[i] += f0 * e * fi - p0 * e.conj() * pi;
            v[i] += f0 * e * pi - p0 * e.conj() * fi;
        }
    }
    Ok(DiscreteEvolution {
        t,
        c_a: u[0],
        c_adag: v[0],
        c_b: u[1..].to_vec(),
        c_bdag: v[1..].to_vec(),
    })
}
