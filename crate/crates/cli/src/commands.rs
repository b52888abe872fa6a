//! Subcommand implementations. Each one writes its artifacts through an
//! [`ArtifactWriter`] and finishes with a manifest.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use giantbic_core::beats::{match_beats, PeakRecord};
use giantbic_core::bic::m_integral_contour;
use giantbic_core::spectrum::BocRoot;
use giantbic_core::{
    analytic_bic, bic_condition, boc_energies, bound_state_projection, build_hamiltonian,
    classify_states, detect_peaks, diagonalize, evolve, fft_spectrum, m_integral, verify_bic,
    BoundState, BoundStateSet, ClassifyOptions, EigenDecomposition, InitialState, StateClass,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Command, Format, RunConfig, ValidationReport};
use crate::output::{ArtifactWriter, Cell, ResultManifest, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Validation(ValidationReport),
    /// A required state or condition is absent for these parameters.
    Model(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Model(_) => EXIT_MODEL,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn single(module: &'static str, message: String) -> Self {
        CliError::Validation(ValidationReport {
            violations: vec![crate::config::Violation {
                module,
                field: "-".into(),
                message,
            }],
            warnings: Vec::new(),
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(r) => {
                write!(f, "invalid configuration")?;
                for v in &r.violations {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
            CliError::Model(m) => write!(f, "model unavailable: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<giantbic_core::Error> for CliError {
    fn from(e: giantbic_core::Error) -> Self {
        use giantbic_core::Error as E;
        match e {
            E::BicCondition(_) | E::ModelUnavailable(_) | E::Classification(_) => {
                CliError::Model(e.to_string())
            }
            E::Config(_) | E::Input(_) | E::OutOfBand { .. } | E::SingularParameter(_) | E::InsideBand { .. } => {
                CliError::single("core", e.to_string())
            }
            E::Internal(m) => CliError::Internal(m),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Internal(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Options that come from the command line rather than the config file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub format: Format,
    /// Worker threads for sweeps; `None` uses every core.
    pub jobs: Option<usize>,
    pub seed: u64,
}

/// What a single run found, used by the sweep index.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    /// Classification found a BIC (None when the command did not diagonalize).
    pub numeric_bic: Option<bool>,
    pub failed_checks: usize,
}

/// Runs `command` with artifacts under `options.out`.
pub fn run(command: Command, config: &RunConfig, options: &RunOptions) -> CliResult<ResultManifest> {
    let mut writer = ArtifactWriter::create(&options.out, options.format)?;
    let summary = dispatch(command, config, options, &mut writer)?;
    let manifest = writer.finish(command.name(), config_snapshot(config))?;
    if summary.failed_checks > 0 {
        return Err(CliError::Internal(format!(
            "{} self-check(s) failed; see selfcheck.json",
            summary.failed_checks
        )));
    }
    Ok(manifest)
}

pub(crate) fn dispatch(
    command: Command,
    config: &RunConfig,
    options: &RunOptions,
    w: &mut ArtifactWriter,
) -> CliResult<Summary> {
    match command {
        Command::Spectrum => spectrum(config, w),
        Command::Bic => bic(config, w),
        Command::Boc => boc(config, w),
        Command::Dynamics => dynamics(config, w),
        Command::Beats => beats(config, w),
        Command::Sweep => crate::sweep::sweep(config, options, w),
        Command::Selfcheck => crate::selfcheck::selfcheck(config, options.seed, w),
    }
}

pub(crate) fn config_snapshot(config: &RunConfig) -> serde_json::Value {
    json!({
        "keys": config.snapshot,
        "resolved": {
            "system": config.system,
            "lattice": config.lattice,
            "dynamics": config.dynamics,
            "rel_threshold": config.rel_threshold,
            "sweep": config.sweep,
        },
    })
}

pub(crate) struct Solved {
    pub decomp: EigenDecomposition,
    pub bound: BoundStateSet,
}

pub(crate) fn solve(config: &RunConfig, w: &mut ArtifactWriter) -> CliResult<Solved> {
    let h = build_hamiltonian(&config.system, &config.lattice)?;
    let decomp = diagonalize(&h)?;
    w.lap("diagonalize");
    let bound = classify_states(&decomp, &ClassifyOptions::default())?;
    w.lap("classify");
    Ok(Solved { decomp, bound })
}

#[derive(Serialize)]
struct BoundSummary {
    index: usize,
    energy: f64,
    atom_weight: f64,
    window: usize,
    outside_window_weight: f64,
}

impl From<&BoundState> for BoundSummary {
    fn from(b: &BoundState) -> Self {
        Self {
            index: b.index,
            energy: b.energy,
            atom_weight: b.atom_weight,
            window: b.window,
            outside_window_weight: b.outside_window_weight,
        }
    }
}

fn spectrum(config: &RunConfig, w: &mut ArtifactWriter) -> CliResult<Summary> {
    let Solved { decomp, bound } = solve(config, w)?;
    let mut table = Table::new([
        "index",
        "energy",
        "class",
        "atom_weight",
        "photon_weight_in_span",
    ]);
    for r in &bound.table {
        table.push(vec![
            r.index.into(),
            r.energy.into(),
            r.class.label().into(),
            r.atom_weight.into(),
            r.photon_weight_in_span.into(),
        ]);
    }
    w.write_table("spectrum", &table)?;

    let p = &config.system;
    let counts: serde_json::Map<String, serde_json::Value> = [
        StateClass::Propagating,
        StateClass::LowerBoc,
        StateClass::UpperBoc,
        StateClass::Bic,
        StateClass::Atomic,
    ]
    .iter()
    .map(|c| (c.label().to_string(), bound.count(*c).into()))
    .collect();
    let (lower, upper) = giantbic_core::band_edges(p);
    let report = json!({
        "band": [lower, upper],
        "counts": counts,
        "lower_boc": bound.lower_boc.as_ref().map(BoundSummary::from),
        "upper_boc": bound.upper_boc.as_ref().map(BoundSummary::from),
        "bic": bound.bic.as_ref().map(BoundSummary::from),
        "flagged": bound.flagged,
        "bic_condition": bic_condition(p).ok(),
        "max_residual": decomp.max_residual(),
        "max_orthonormality_error": decomp.max_orthonormality_error(),
    });
    w.write_json("classification.json", &report)?;
    w.lap("write");
    Ok(Summary {
        numeric_bic: Some(bound.bic.is_some()),
        ..Summary::default()
    })
}

const PROFILE_PAD: isize = 5;

fn profile_table(amplitude: impl Fn(isize) -> giantbic_core::Complex64, n: usize) -> Table {
    let mut table = Table::new(["site_index", "re_beta", "im_beta", "intensity"]);
    for j in -PROFILE_PAD..=(n as isize + PROFILE_PAD) {
        let b = amplitude(j);
        table.push(vec![j.into(), b.re.into(), b.im.into(), b.norm_sqr().into()]);
    }
    table
}

fn bic(config: &RunConfig, w: &mut ArtifactWriter) -> CliResult<Summary> {
    let p = &config.system;
    let lattice = &config.lattice;
    let check = bic_condition(p)?;
    let analytic = analytic_bic(p, lattice)?;
    let zero = giantbic_core::Complex64::new(0.0, 0.0);
    let n = p.leg_separation;
    let table = profile_table(
        |j| lattice.absolute(j).map_or(zero, |a| analytic.beta[a]),
        n,
    );
    w.write_table("bic_profile_analytic", &table)?;

    let Solved { decomp, bound } = solve(config, w)?;
    let numeric = bound.bic.as_ref();
    let verification = verify_bic(&analytic, decomp.hamiltonian(), numeric)?;
    if let Some(b) = numeric {
        let table = profile_table(
            |j| lattice.absolute(j).map_or(zero, |a| b.state[a + 1]),
            n,
        );
        w.write_table("bic_profile_numeric", &table)?;
    }
    let contour = m_integral_contour(p)?;
    let report = json!({
        "energy": analytic.energy,
        "k": analytic.k,
        "delta": analytic.delta,
        "alpha": analytic.alpha.re,
        "alpha_sq": analytic.alpha.norm_sqr(),
        "bic_condition": check,
        "residual": verification.residual,
        "flagged": verification.flagged,
        "overlap": verification.overlap,
        "numeric": numeric.map(|b| json!({
            "index": b.index,
            "energy": b.energy,
            "energy_error": b.energy - analytic.energy,
            "atom_weight": b.atom_weight,
        })),
        "m_integral": m_integral(p)?,
        "m_integral_contour": [contour.re, contour.im],
    });
    w.write_json("bic_report.json", &report)?;
    w.lap("write");
    if numeric.is_none() {
        return Err(CliError::Model(
            "the BIC condition holds but no localized in-band eigenstate was classified".into(),
        ));
    }
    Ok(Summary {
        numeric_bic: Some(true),
        ..Summary::default()
    })
}

fn boc(config: &RunConfig, w: &mut ArtifactWriter) -> CliResult<Summary> {
    let roots = boc_energies(&config.system)?;
    w.lap("roots");
    let Solved { bound, .. } = solve(config, w)?;
    let mut table = Table::new([
        "side",
        "energy_transcendental",
        "energy_numeric",
        "difference",
        "decay_constant",
        "atom_weight_transcendental",
        "atom_weight_numeric",
    ]);
    for (side, numeric) in [
        (giantbic_core::spectrum::BandSide::Lower, bound.lower_boc.as_ref()),
        (giantbic_core::spectrum::BandSide::Upper, bound.upper_boc.as_ref()),
    ] {
        let root: Option<&BocRoot> = roots.iter().find(|r| r.side == side);
        if root.is_none() && numeric.is_none() {
            continue;
        }
        let label = match side {
            giantbic_core::spectrum::BandSide::Lower => "lower",
            giantbic_core::spectrum::BandSide::Upper => "upper",
        };
        let diff = root.zip(numeric).map(|(r, b)| b.energy - r.energy);
        table.push(vec![
            label.into(),
            root.map(|r| r.energy).into(),
            numeric.map(|b| b.energy).into(),
            diff.into(),
            root.map(|r| r.decay_constant).into(),
            root.map(|r| r.atom_weight).into(),
            numeric.map(|b| b.atom_weight).into(),
        ]);
    }
    w.write_table("boc", &table)?;
    w.lap("write");
    Ok(Summary {
        numeric_bic: Some(bound.bic.is_some()),
        ..Summary::default()
    })
}

fn dynamics(config: &RunConfig, w: &mut ArtifactWriter) -> CliResult<Summary> {
    let Solved { decomp, bound } = solve(config, w)?;
    let grid = config.time_grid()?;
    let sites = &config.dynamics.tracked_sites;
    let traj = evolve(&decomp, &InitialState::ExcitedAtom, &grid, sites)?;
    w.lap("evolve");

    let mut columns: Vec<String> = ["t", "p_e", "norm", "energy", "edge_amplitude"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for j in sites {
        columns.extend([
            format!("re_beta_{j}"),
            format!("im_beta_{j}"),
            format!("intensity_{j}"),
        ]);
    }
    let mut table = Table::new(columns);
    for k in 0..traj.times.len() {
        let mut row: Vec<Cell> = vec![
            traj.times[k].into(),
            traj.atom_population[k].into(),
            traj.norm[k].into(),
            traj.energy[k].into(),
            traj.edge_amplitude[k].into(),
        ];
        for amps in &traj.site_amplitudes {
            let b = amps[k];
            row.extend([b.re.into(), b.im.into(), b.norm_sqr().into()]);
        }
        table.push(row);
    }
    w.write_table("trajectory", &table)?;
    let e0 = traj.energy.first().copied().unwrap_or(0.0);
    let drift = traj.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    w.write_json(
        "dynamics_report.json",
        &json!({
            "dt": grid.dt,
            "samples": grid.samples,
            "horizon": traj.horizon,
            "exceeds_horizon": traj.exceeds_horizon,
            "max_norm_error": traj.max_norm_error(),
            "max_energy_drift": drift,
        }),
    )?;
    w.lap("write");
    Ok(Summary {
        numeric_bic: Some(bound.bic.is_some()),
        ..Summary::default()
    })
}

#[derive(Serialize)]
struct ObservablePeaks {
    observable: String,
    peaks: Vec<PeakRecord>,
    labels: Vec<&'static str>,
    unmatched: usize,
}

fn beats(config: &RunConfig, w: &mut ArtifactWriter) -> CliResult<Summary> {
    let Solved { decomp, bound } = solve(config, w)?;
    let sites = &config.dynamics.tracked_sites;
    let model = bound_state_projection(&decomp, &bound, &InitialState::ExcitedAtom, sites)?;
    let grid = config.time_grid()?;
    let traj = evolve(&decomp, &InitialState::ExcitedAtom, &grid, sites)?;
    w.lap("evolve");

    let mut series: Vec<(String, Vec<f64>)> = vec![("p_e".into(), traj.atom_population.clone())];
    for (i, j) in sites.iter().enumerate() {
        series.push((format!("intensity_{j}"), traj.site_intensity(i)));
    }

    let mut spectra = Vec::with_capacity(series.len());
    let mut observables = Vec::with_capacity(series.len());
    for (name, s) in &series {
        let spec = fft_spectrum(s, grid.dt)?;
        let report = match_beats(&detect_peaks(&spec, config.rel_threshold)?, &model);
        observables.push(ObservablePeaks {
            observable: name.clone(),
            labels: report.labels().iter().map(|l| l.name()).collect(),
            unmatched: report.unmatched.len(),
            peaks: report.records(),
        });
        spectra.push(spec);
    }
    w.lap("fft");

    let mut columns = vec!["frequency".to_string()];
    columns.extend(series.iter().map(|(n, _)| n.clone()));
    let mut table = Table::new(columns);
    for k in 0..spectra[0].frequencies.len() {
        let mut row: Vec<Cell> = vec![spectra[0].frequencies[k].into()];
        row.extend(spectra.iter().map(|s| Cell::from(s.magnitudes[k])));
        table.push(row);
    }
    w.write_table("beats_spectrum", &table)?;
    let [dl, du, sum] = model.beat_frequencies();
    w.write_json(
        "peaks.json",
        &json!({
            "predicted": {"delta_L": dl, "delta_U": du, "delta_L+delta_U": sum},
            "energies": model.energies,
            "bound_weight": model.bound_weight(),
            "resolution": spectra[0].resolution,
            "rel_threshold": config.rel_threshold,
            "observables": observables,
        }),
    )?;
    w.lap("write");
    Ok(Summary {
        numeric_bic: Some(true),
        ..Summary::default()
    })
}

/// Output directory: `--out` wins over `output.directory`, then `out`.
pub fn resolve_out(cli: Option<&Path>, config: &RunConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
