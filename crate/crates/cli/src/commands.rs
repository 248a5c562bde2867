//! Subcommand implementations; each turns a validated configuration into a report.

use std::f64::consts::PI;

use fanodiag::classical_bath::{discretize_bath, run_ensembles, DiscretizationScheme, EnsembleConfig};
use fanodiag::discrete_oracle::{build_quadratic_form, discrete_evolve_a, symplectic_diagonalize};
use fanodiag::dynamics::{
    appendix_b_check, classical_trajectory, damping_kernel_l, mean_position, InitialState, ReservoirIc,
};
use fanodiag::full_diag::{lineshape, rwa_reduction, FullModel, FullOptions, LineshapeConfig, ReductionConfig};
use fanodiag::pv::{QuadratureConfig, ShiftKind};
use fanodiag::rwa_diag::{RwaKernel, RwaOptions};
use fanodiag::{Cutoff, ModelParams};
use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{Report, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Lineshape,
    Evolve,
    MeanQ,
    RwaCheck,
    Langevin,
    OracleCompare,
    AppendixB,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Lineshape => "lineshape",
            CommandKind::Evolve => "evolve",
            CommandKind::MeanQ => "mean-q",
            CommandKind::RwaCheck => "rwa-check",
            CommandKind::Langevin => "langevin",
            CommandKind::OracleCompare => "oracle-compare",
            CommandKind::AppendixB => "appendix-b",
        }
    }
}

/// SHA-256 of the command name and every configuration section except output.
pub fn config_hash(kind: CommandKind, cfg: &RunConfig) -> String {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.remove("output");
        m.insert("command".into(), Value::from(kind.name()));
    }
    let text = serde_json::to_string(&v).expect("value serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn run(kind: CommandKind, cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let hash = config_hash(kind, cfg);
    match kind {
        CommandKind::Lineshape => lineshape_cmd(cfg, &hash),
        CommandKind::Evolve => evolve_cmd(cfg, &hash),
        CommandKind::MeanQ => mean_q_cmd(cfg, &hash),
        CommandKind::RwaCheck => rwa_check_cmd(cfg, &hash),
        CommandKind::Langevin => langevin_cmd(cfg, &hash),
        CommandKind::OracleCompare => oracle_cmd(cfg, &hash),
        CommandKind::AppendixB => appendix_b_cmd(cfg, &hash),
    }
}

/// Peak position and full width at half maximum of a sampled curve.
pub fn peak_and_width(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (imax, ymax) = y
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let half = 0.5 * ymax;
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let mut lo = x[0];
    for i in (0..imax).rev() {
        if y[i] < half {
            lo = cross(i, i + 1);
            break;
        }
    }
    let mut hi = x[x.len() - 1];
    for i in imax + 1..y.len() {
        if y[i] < half {
            hi = cross(i - 1, i);
            break;
        }
    }
    (x[imax], hi - lo)
}

fn lineshape_cmd(cfg: &RunConfig, hash: &str) -> Result<Report, CliError> {
    let gammas = if cfg.lineshape.gammas.is_empty() {
        vec![cfg.model.gamma]
    } else {
        cfg.lineshape.gammas.clone()
    };
    let w0 = cfg.model.omega0;
    let mut r = Report::new("lineshape", hash, &["gamma", "omega", "l_sq_r", "a_l_sq_r", "b_l_sq_r", "c_l_sq_r"]);
    r.x_label = "omega".into();
    let (mut peaks, mut widths, mut heights, mut c_at_w0) = (vec![], vec![], vec![], vec![]);
    for &g in &gammas {
        let p = cfg.params_with_gamma(g)?;
        let s = cfg.spectrum(&p)?;
        let lc = LineshapeConfig {
            counter_term: cfg.flags.counter_term,
            omega_max: cfg.grid.omega_max,
            n_uniform: cfg.grid.omega_points,
            quad: QuadratureConfig::default(),
        };
        let k = lineshape(&s, &p, &lc)?;
        let curve = if cfg.flags.counter_term {
            k.l_sq_renorm.clone()
        } else {
            k.l_sq.clone().unwrap_or_else(|| k.l_sq_renorm.clone())
        };
        for (&w, &l) in k.omega_grid.iter().zip(&curve) {
            let a = 2.0 * w;
            let b = (w * w + w0 * w0) / w0;
            let c = (w * w - w0 * w0) / w0;
            r.push_row(vec![g, w, l, a * l, b * l, c * l]);
        }
        let (pk, fw) = peak_and_width(&k.omega_grid, &curve);
        peaks.push(pk);
        widths.push(fw);
        heights.push(curve.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let i0 = k.omega_grid.iter().position(|w| *w == w0);
        c_at_w0.push(i0.map_or(f64::NAN, |i| (w0 * w0 - w0 * w0) / w0 * curve[i]));
        r.plot.push(Series {
            name: format!("|L_R|² γ={g}"),
            x: k.omega_grid.clone(),
            y: curve,
        });
    }
    r.metric("gammas", gammas);
    r.metric("peak_omega", peaks);
    r.metric("fwhm", widths);
    r.metric("peak_height", heights);
    r.metric("c_l_sq_r_at_omega0", c_at_w0);
    Ok(r)
}

fn rwa_options(cfg: &RunConfig) -> RwaOptions {
    if cfg.cutoff().is_infinite() {
        RwaOptions::with_shift(ShiftKind::HR)
    } else {
        RwaOptions::default()
    }
}

fn evolve_cmd(cfg: &RunConfig, hash: &str) -> Result<Report, CliError> {
    let p = cfg.params()?;
    let s = cfg.spectrum(&p)?;
    let times = cfg.times();
    let mut r = Report::new(
        "evolve",
        hash,
        &["t", "c_a_re", "c_a_im", "c_a_abs", "c_adag_re", "c_adag_im", "bath_weight", "sum_rule", "sum_rule_residual"],
    );
    let rows: Vec<Vec<f64>> = if cfg.flags.rwa {
        let k = RwaKernel::new(&s, &p, rwa_options(cfg))?;
        let limit = cfg.cutoff().is_infinite();
        times
            .par_iter()
            .map(|&t| {
                if limit {
                    let c = k.c_a(t)?;
                    return Ok(vec![t, c.re, c.im, c.norm(), 0.0, 0.0, f64::NAN, f64::NAN, f64::NAN]);
                }
                let sr = k.sum_rule(t)?;
                Ok(vec![t, sr.c_a.re, sr.c_a.im, sr.c_a.norm(), 0.0, 0.0, sr.bath, sr.total, (sr.total - 1.0).abs()])
            })
            .collect::<Result<_, fanodiag::Error>>()?
    } else {
        let m = FullModel::new(&s, &p, FullOptions::with_counter_term(cfg.flags.counter_term))?;
        times
            .par_iter()
            .map(|&t| {
                let sr = m.sum_rule(t)?;
                Ok(vec![
                    t,
                    sr.c_a.re,
                    sr.c_a.im,
                    sr.c_a.norm(),
                    sr.c_adag.re,
                    sr.c_adag.im,
                    sr.bath,
                    sr.total,
                    (sr.total - 1.0).abs(),
                ])
            })
            .collect::<Result<_, fanodiag::Error>>()?
    };
    let defined = rows.iter().all(|r| r[8].is_finite());
    let worst = rows.iter().map(|r| r[8]).fold(0.0, f64::max);
    for row in rows {
        r.push_row(row);
    }
    r.metric("rwa", cfg.flags.rwa);
    if defined {
        r.metric("max_sum_rule_residual", worst);
    } else {
        r.metric("max_sum_rule_residual", Value::Null);
        r.metric("warnings", vec!["sum rule undefined: the rotating-wave bath weight diverges without a cutoff"]);
    }
    let t = r.column("t").unwrap_or_default();
    r.plot = ["c_a_abs", "sum_rule"]
        .iter()
        .map(|c| Series { name: c.to_string(), x: t.clone(), y: r.column(c).unwrap_or_default() })
        .collect();
    Ok(r)
}

fn mean_q_cmd(cfg: &RunConfig, hash: &str) -> Result<Report, CliError> {
    let p = cfg.params()?;
    let (q0, p0) = (cfg.ensemble.q0, cfg.ensemble.p0);
    let mut r = Report::new(
        "mean-q",
        hash,
        &["t", "bare", "shifted", "classical", "classical_minus_bare", "two_gamma_q0_l"],
    );
    let ic = |reservoir_ic| InitialState { q0, p0, reservoir_ic };
    let mut worst: f64 = 0.0;
    for t in cfg.times() {
        let bare = mean_position(&p, &ic(ReservoirIc::Bare), t);
        let shifted = mean_position(&p, &ic(ReservoirIc::Shifted), t);
        let classical = classical_trajectory(&p, q0, p0, t);
        let kick = 2.0 * p.gamma * q0 * damping_kernel_l(&p, t);
        worst = worst.max(((classical - bare) - kick).abs());
        r.push_row(vec![t, bare, shifted, classical, classical - bare, kick]);
    }
    r.metric("max_difference_residual", worst);
    r.plot_all_columns();
    Ok(r)
}

fn rwa_check_cmd(cfg: &RunConfig, hash: &str) -> Result<Report, CliError> {
    let p = cfg.params()?;
    let s = cfg.spectrum(&p)?;
    let rc = ReductionConfig {
        counter_term: cfg.flags.counter_term,
        ..ReductionConfig::default()
    };
    let rep = rwa_reduction(&s, &p, &rc)?;
    let mut r = Report::new("rwa-check", hash, &["omega", "alpha_tilde_sq", "lineshape_scaled"]);
    r.metric("valid", rep.valid);
    r.metric("threshold", rc.threshold);
    r.metric("coupling_ratio", rep.coupling_ratio);
    r.metric("shift_ratio_to_omega0", rep.shift_ratio_to_omega0);
    r.metric("max_rel_deviation", rep.max_rel_deviation);
    r.metric("h_over_f", rep.h_over_f.map_or(Value::Null, Value::from));
    for i in 0..rep.omega.len() {
        r.push_row(vec![rep.omega[i], rep.alpha_tilde_sq[i], rep.lineshape_scaled[i]]);
    }
    r.plot_all_columns();
    Ok(r)
}

fn langevin_cmd(cfg: &RunConfig, hash: &str) -> Result<Report, CliError> {
    let p = cfg.params()?;
    let s = cfg.spectrum(&p)?;
    let e = &cfg.ensemble;
    let bath = discretize_bath(&s, &p, e.n_modes, DiscretizationScheme::UniformFreq, e.omega_max)?;
    let fastest = bath.omegas.iter().copied().fold(p.omega0, f64::max);
    let times = cfg.times();
    let ec = EnsembleConfig {
        n_samples: e.n_samples,
        kt: cfg.model.kt,
        seed: e.seed,
        dt: e.dt.unwrap_or(0.05 / fastest),
        t_max: cfg.grid.t_max,
        ic_variant: ReservoirIc::Shifted,
        record_every: 1,
    };
    let rep = run_ensembles(&bath, &p, &ec, e.q0, e.p0, &times)?;
    let ohmic = ModelParams { cutoff: Cutoff::Infinite, ..p };
    let mut r = Report::new(
        "langevin",
        hash,
        &[
            "t",
            "shifted_mean",
            "shifted_stderr",
            "bare_mean",
            "bare_stderr",
            "ohmic_classical",
            "shifted_force",
            "shifted_force_stderr",
            "bare_force",
            "bare_force_stderr",
        ],
    );
    for (i, &t) in times.iter().enumerate() {
        let f = &rep.forces;
        r.push_row(vec![
            t,
            rep.shifted.mean[i],
            rep.shifted.stderr[i],
            rep.bare.mean[i],
            rep.bare.stderr[i],
            classical_trajectory(&ohmic, e.q0, e.p0, t),
            f.mean_force.mean[i],
            f.mean_force.stderr[i],
            f.bare_mean_force.mean[i],
            f.bare_mean_force.stderr[i],
        ]);
    }
    let f = &rep.forces;
    r.metric("n_modes", bath.len());
    r.metric("n_samples", rep.n_samples);
    r.metric("bath_omega_max", bath.omega_max);
    r.metric("recurrence_time", bath.recurrence_time());
    r.metric("memory_time", bath.memory_time());
    r.metric("kick_window", f.kick_window);
    r.metric("kick_impulse", f.kick_impulse.mean);
    r.metric("kick_impulse_stderr", f.kick_impulse.stderr);
    r.metric("impulse_difference", f.impulse_difference.mean);
    r.metric("impulse_difference_stderr", f.impulse_difference.stderr);
    r.metric("expected_impulse", f.expected_impulse);
    r.metric("integrated_autocorr", f.integrated_autocorr.mean);
    r.metric("integrated_autocorr_stderr", f.integrated_autocorr.stderr);
    r.metric("expected_autocorr", f.expected_autocorr);
    r.metric("warnings", f.warnings.clone());
    let t = times.clone();
    r.plot = ["shifted_mean", "bare_mean", "ohmic_classical"]
        .iter()
        .map(|c| Series { name: c.to_string(), x: t.clone(), y: r.column(c).unwrap_or_default() })
        .collect();
    Ok(r)
}

fn oracle_cmd(cfg: &RunConfig, hash: &str) -> Result<Report, CliError> {
    let p = cfg.params()?;
    let s = cfg.spectrum(&p)?;
    let bath = discretize_bath(&s, &p, cfg.oracle.n_modes, DiscretizationScheme::UniformFreq, Some(cfg.oracle.omega_max))?;
    let form = build_quadratic_form(&bath, &p, cfg.flags.rwa, cfg.flags.counter_term);
    let modes = symplectic_diagonalize(&form)?;
    let window = if p.gamma > 0.0 { 5.0 / p.gamma } else { f64::INFINITY }.min(PI / bath.delta_omega);
    let times = cfg.times();
    let continuum: Vec<f64> = if cfg.flags.rwa {
        let k = RwaKernel::new(&s, &p, rwa_options(cfg))?;
        times.par_iter().map(|&t| k.c_a(t).map(|c| c.norm())).collect::<Result<_, _>>()?
    } else {
        let m = FullModel::new(&s, &p, FullOptions::with_counter_term(cfg.flags.counter_term))?;
        times
            .par_iter()
            .map(|&t| m.c_coefficients(t).map(|(c, _)| c.norm()))
            .collect::<Result<_, _>>()?
    };
    let mut r = Report::new(
        "oracle-compare",
        hash,
        &["t", "continuum_abs", "discrete_abs", "rel_deviation", "commutator_residual", "in_window"],
    );
    let (mut dev_in, mut dev_out, mut comm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, &t) in times.iter().enumerate() {
        let d = discrete_evolve_a(&modes, t)?;
        let c = continuum[i];
        let rel = (d.c_a.norm() - c).abs() / c;
        let res = (d.commutator() - 1.0).abs();
        comm = comm.max(res);
        let inside = t <= window;
        if inside {
            dev_in = dev_in.max(rel);
        } else {
            dev_out = dev_out.max(rel);
        }
        r.push_row(vec![t, c, d.c_a.norm(), rel, res, if inside { 1.0 } else { 0.0 }]);
    }
    r.metric("n_modes", bath.len());
    r.metric("delta_omega", bath.delta_omega);
    r.metric("window", window);
    r.metric("max_rel_deviation_in_window", dev_in);
    r.metric("max_rel_deviation_beyond_window", dev_out);
    r.metric("max_commutator_residual", comm);
    r.metric("paraunitarity_residual", modes.paraunitarity_residual());
    let t = times.clone();
    r.plot = ["continuum_abs", "discrete_abs"]
        .iter()
        .map(|c| Series { name: c.to_string(), x: t.clone(), y: r.column(c).unwrap_or_default() })
        .collect();
    Ok(r)
}

fn appendix_b_cmd(cfg: &RunConfig, hash: &str) -> Result<Report, CliError> {
    // The identities are statements about the infinite-cutoff model.
    let mut limit = cfg.clone();
    limit.flags.limit_mode = true;
    let p = limit.params()?;
    let s = limit.spectrum(&p)?;
    let times: Vec<f64> = cfg.times().into_iter().filter(|t| *t > 0.0).collect();
    let rep = appendix_b_check(&s, &p, &times, &QuadratureConfig::default())?;
    let mut r = Report::new("appendix-b", hash, &["t", "i1", "h", "two_gamma_l", "rel_residual"]);
    for row in &rep.rows {
        r.push_row(vec![row.t, row.i1, row.h, row.two_gamma_l, (row.h - row.two_gamma_l).abs() / row.two_gamma_l.abs()]);
    }
    r.metric("i1_max_abs", rep.i1_max_abs);
    r.metric("h_vs_2gamma_l_max_rel", rep.h_vs_2gamma_l_max_rel);
    let t = times.clone();
    r.plot = ["h", "two_gamma_l"]
        .iter()
        .map(|c| Series { name: c.to_string(), x: t.clone(), y: r.column(c).unwrap_or_default() })
        .collect();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_and_width_of_triangle() {
        let x: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| (1.0 - (v - 2.0).abs()).max(0.0)).collect();
        let (pk, w) = peak_and_width(&x, &y);
        assert!((pk - 2.0).abs() < 1e-12);
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hash_ignores_output_section() {
        let mut a = RunConfig::default();
        let h = config_hash(CommandKind::MeanQ, &a);
        a.output.path = Some("elsewhere.csv".into());
        assert_eq!(h, config_hash(CommandKind::MeanQ, &a));
        assert_ne!(h, config_hash(CommandKind::Evolve, &a));
        a.model.gamma = 0.3;
        assert_ne!(h, config_hash(CommandKind::MeanQ, &a));
    }

    #[test]
    fn mean_q_difference_column() {
        let cfg = RunConfig::default();
        let r = run(CommandKind::MeanQ, &cfg).unwrap();
        let d = r.column("classical_minus_bare").unwrap();
        let k = r.column("two_gamma_q0_l").unwrap();
        for (a, b) in d.iter().zip(&k) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
