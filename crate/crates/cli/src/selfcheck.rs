//! Invariant suite run against the configured system.
//!
//! Also records the RMS deviation of the three-bound-state model from the
//! exact P_e(t) on the second half of the record, the calibration value for
//! the long-time reduction.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use serde_json::json;

use giantbic_core::quadrature::integrate;
use giantbic_core::spectrum::self_energy_integral;
use giantbic_core::{
    analytic_bic, bic_condition, boc_energies, bound_state_projection, detect_peaks, evolve,
    fft_spectrum, long_time_populations, verify_bic, Complex64, InitialState, SystemParams,
};

use crate::commands::{solve, CliResult, Solved, Summary};
use crate::config::RunConfig;
use crate::output::ArtifactWriter;

pub const MODEL_RMS_TARGET: f64 = 1e-2;
const DRAWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn bound(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: if value <= tolerance { Status::Pass } else { Status::Fail },
            value,
            tolerance,
            detail: detail.into(),
        }
    }

    fn skipped(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: Status::Skipped,
            value: f64::NAN,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Largest relative gap between the closed-form I(E) and quadrature.
fn self_energy_vs_quadrature(rng: &mut ChaCha8Rng, base: &SystemParams) -> f64 {
    let xi = base.hopping;
    let mut worst: f64 = 0.0;
    for _ in 0..DRAWS {
        let eps = rng.gen_range(2.0 * xi..=6.0 * xi);
        let eps = if eps <= 2.0 * xi { 6.0 * xi } else { eps };
        let eps = if rng.gen_bool(0.5) { eps } else { -eps };
        let n = rng.gen_range(1..=24usize);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let mut p = *base;
        p.leg_separation = n;
        p.phase = phase;
        let energy = p.omega_cavity + eps;
        let closed = match self_energy_integral(&p, energy) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        let quad = integrate(
            |k| (1.0 + (k * n as f64 + phase).cos()) / (eps + 2.0 * xi * k.cos()),
            -PI,
            PI,
            0.0,
            1e-13,
        );
        let scale = quad.value.abs().max(f64::MIN_POSITIVE);
        worst = worst.max((closed - quad.value).abs() / scale);
    }
    worst
}

/// Tone plus white noise; distance of the strongest peak from the tone, in bins.
fn synthetic_tone(rng: &mut ChaCha8Rng) -> CliResult<f64> {
    let dt = 0.05;
    let n = 4096;
    let resolution = 2.0 * PI / (n as f64 * dt);
    let omega = rng.gen_range(20.0..400.0) * resolution;
    let noise = Normal::new(0.0, 0.3).expect("noise");
    let series: Vec<f64> = (0..n)
        .map(|k| (omega * k as f64 * dt).cos() + noise.sample(rng))
        .collect();
    let report = detect_peaks(&fft_spectrum(&series, dt)?, 0.5)?;
    Ok(report
        .peaks
        .first()
        .map_or(f64::INFINITY, |p| (p.frequency - omega).abs() / resolution))
}

pub(crate) fn selfcheck(config: &RunConfig, seed: u64, w: &mut ArtifactWriter) -> CliResult<Summary> {
    let p = &config.system;
    let xi = p.hopping;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let Solved { decomp, bound } = solve(config, w)?;
    let dense = decomp.hamiltonian().to_dense();
    let mut asym: f64 = 0.0;
    for i in 0..dense.nrows() {
        for j in 0..=i {
            asym = asym.max((dense[(i, j)] - dense[(j, i)].conj()).norm());
        }
    }
    checks.push(Check::bound("hermiticity", asym, 0.0, "max |H_ij - conj(H_ji)|"));
    checks.push(Check::bound(
        "eigen_residual",
        decomp.max_residual(),
        1e-10 * xi,
        "max ||H v - E v||",
    ));
    checks.push(Check::bound(
        "orthonormality",
        decomp.max_orthonormality_error(),
        1e-10,
        "max |<v_m|v_n> - delta_mn|",
    ));
    let completeness = (0..5)
        .map(|_| {
            let psi = random_state(&mut rng, decomp.dimension());
            let total: f64 = decomp.coefficients(&psi).iter().map(|c| c.norm_sqr()).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check::bound(
        "completeness",
        completeness,
        1e-10,
        "|sum_n |<v_n|psi>|^2 - 1| over 5 random states",
    ));
    w.lap("spectral checks");

    checks.push(Check::bound(
        "self_energy_closed_form",
        self_energy_vs_quadrature(&mut rng, p),
        1e-9,
        format!("relative gap to adaptive quadrature, {DRAWS} draws"),
    ));

    if p.coupling > 0.0 {
        let roots = boc_energies(p)?;
        let mut worst: f64 = 0.0;
        for r in &roots {
            let numeric = match r.side {
                giantbic_core::spectrum::BandSide::Lower => bound.lower_boc.as_ref(),
                giantbic_core::spectrum::BandSide::Upper => bound.upper_boc.as_ref(),
            };
            worst = worst.max(numeric.map_or(f64::INFINITY, |b| (b.energy - r.energy).abs()));
        }
        checks.push(Check::bound(
            "boc_roots_vs_eigenvalues",
            worst,
            1e-6 * xi,
            format!("{} root(s)", roots.len()),
        ));
    } else {
        checks.push(Check::skipped("boc_roots_vs_eigenvalues", "g = 0"));
    }

    match bic_condition(p) {
        Ok(c) if c.holds && c.compact_support() => {
            let nearest = decomp
                .energies()
                .iter()
                .map(|e| (e - p.omega_atom).abs())
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::bound(
                "bic_eigenvalue_at_omega",
                nearest,
                1e-10 * xi,
                "min_n |E_n - Omega|",
            ));
            let analytic = analytic_bic(p, &config.lattice)?;
            let v = verify_bic(&analytic, decomp.hamiltonian(), bound.bic.as_ref())?;
            checks.push(Check::bound(
                "bic_analytic_residual",
                v.residual,
                1e-10 * xi,
                "||H v - Omega v|| for the closed-form profile",
            ));
        }
        _ => checks.push(Check::skipped("bic_eigenvalue_at_omega", "BIC condition does not hold")),
    }

    let tone = synthetic_tone(&mut rng)?;
    checks.push(Check::bound("synthetic_tone", tone, 1.0, "peak offset in bins"));
    w.lap("analytic checks");

    let grid = config.time_grid()?;
    let sites = &config.dynamics.tracked_sites;
    let traj = evolve(&decomp, &InitialState::ExcitedAtom, &grid, sites)?;
    w.lap("evolve");
    checks.push(Check::bound(
        "norm_conservation",
        traj.max_norm_error(),
        1e-10,
        "max |<psi(t)|psi(t)> - 1|",
    ));
    let early: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.edge_amplitude)
        .filter(|(t, _)| **t < traj.horizon)
        .map(|(_, a)| *a)
        .collect();
    if early.is_empty() {
        checks.push(Check::skipped("causality", "horizon shorter than one step"));
    } else {
        checks.push(Check::bound(
            "causality",
            early.iter().copied().fold(0.0, f64::max),
            1e-6,
            format!("max edge amplitude for t < {:.3}", traj.horizon),
        ));
    }

    let mut calibration = serde_json::Value::Null;
    match bound_state_projection(&decomp, &bound, &InitialState::ExcitedAtom, sites) {
        Ok(model) => {
            let t0 = 0.5 * grid.duration();
            let window: Vec<usize> = (0..traj.times.len()).filter(|&k| traj.times[k] >= t0).collect();
            let times: Vec<f64> = window.iter().map(|&k| traj.times[k]).collect();
            let predicted = long_time_populations(&model, &times);
            let rms = (window
                .iter()
                .zip(&predicted.pe_projector)
                .map(|(&k, m)| (traj.atom_population[k] - m).powi(2))
                .sum::<f64>()
                / window.len().max(1) as f64)
                .sqrt();
            checks.push(Check::bound(
                "long_time_model",
                rms,
                MODEL_RMS_TARGET,
                "RMS of P_e against the three-bound-state model",
            ));
            calibration = json!({
                "model_rms": rms,
                "window": [t0, grid.duration()],
                "bound_weight": model.bound_weight(),
                "beat_frequencies": model.beat_frequencies(),
            });
        }
        Err(e) => checks.push(Check::skipped("long_time_model", e.to_string())),
    }
    w.lap("model");

    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    w.write_json(
        "selfcheck.json",
        &json!({
            "seed": seed,
            "passed": failed == 0,
            "checks": checks,
            "calibration": calibration,
        }),
    )?;
    Ok(Summary {
        numeric_bic: Some(bound.bic.is_some()),
        failed_checks: failed,
    })
}
