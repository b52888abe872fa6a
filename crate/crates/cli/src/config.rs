//! Run configuration: a flat `section.key = value` text format.
//!
//! ```text
//! # Config A
//! system.omega_atom   = -1 xi
//! system.coupling     = 0.1 xi
//! system.leg_separation = 6
//! system.phase        = pi
//! lattice.total_sites = 2001
//! dynamics.dt         = 0.05 /xi
//! dynamics.t_max      = 400 /xi
//! dynamics.tracked_sites = 0, 1, 3
//! ```
//!
//! Energies may carry an `xi` tag (multiples of `system.hopping`), times a
//! `/xi` tag. Scalars accept `pi`, `sqrt(..)`, products and one division, so
//! `3pi/4`, `0.25 pi` and `-sqrt(2) xi` all parse.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use giantbic_core::beats::MIN_SAMPLES;
use giantbic_core::{Lattice, SystemParams, TimeGrid};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Bic,
    Boc,
    Dynamics,
    Beats,
    Sweep,
    Selfcheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Bic => "bic",
            Command::Boc => "boc",
            Command::Dynamics => "dynamics",
            Command::Beats => "beats",
            Command::Sweep => "sweep",
            Command::Selfcheck => "selfcheck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "spectrum" => Command::Spectrum,
            "bic" => Command::Bic,
            "boc" => Command::Boc,
            "dynamics" => Command::Dynamics,
            "beats" => Command::Beats,
            "sweep" => Command::Sweep,
            "selfcheck" => Command::Selfcheck,
            _ => return None,
        })
    }

    fn needs_dynamics(self) -> bool {
        matches!(self, Command::Dynamics | Command::Beats | Command::Selfcheck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    OmegaAtom,
    OmegaCavity,
    Coupling,
    Phase,
    LegSeparation,
}

impl SweepParameter {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "omega_atom" => SweepParameter::OmegaAtom,
            "omega_cavity" => SweepParameter::OmegaCavity,
            "coupling" => SweepParameter::Coupling,
            "phase" => SweepParameter::Phase,
            "leg_separation" => SweepParameter::LegSeparation,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::OmegaAtom => "omega_atom",
            SweepParameter::OmegaCavity => "omega_cavity",
            SweepParameter::Coupling => "coupling",
            SweepParameter::Phase => "phase",
            SweepParameter::LegSeparation => "leg_separation",
        }
    }

    fn kind(self) -> Kind {
        match self {
            SweepParameter::Phase => Kind::Phase,
            SweepParameter::LegSeparation => Kind::Count,
            _ => Kind::Energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Sites relative to the left leg.
    pub tracked_sites: Vec<isize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub lattice: Lattice,
    /// `lattice.leg0` was given explicitly rather than centered.
    pub explicit_leg0: bool,
    pub dynamics: DynamicsConfig,
    pub rel_threshold: f64,
    pub sweep: Option<SweepConfig>,
    pub directory: Option<PathBuf>,
    pub format: Format,
    /// Keys exactly as read, for the manifest.
    pub snapshot: BTreeMap<String, String>,
}

impl RunConfig {
    /// Copy of this configuration with one system parameter replaced.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> RunConfig {
        let mut out = self.clone();
        let s = &mut out.system;
        match parameter {
            SweepParameter::OmegaAtom => s.omega_atom = value,
            SweepParameter::OmegaCavity => s.omega_cavity = value,
            SweepParameter::Coupling => s.coupling = value,
            SweepParameter::Phase => s.phase = value,
            SweepParameter::LegSeparation => s.leg_separation = value as usize,
        }
        if !self.explicit_leg0 {
            if let Ok(l) = Lattice::centered(out.lattice.total_sites, out.system.leg_separation) {
                out.lattice = l;
            }
        }
        out
    }

    pub fn time_grid(&self) -> giantbic_core::Result<TimeGrid> {
        TimeGrid::new(self.dynamics.dt, self.dynamics.t_max)
    }
}

/// One violated invariant, attributed to the module that owns it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub module: &'static str,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.module, self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Non-fatal remarks, e.g. legs placed close to a wall.
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, module: &'static str, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            module,
            field: field.into(),
            message: message.into(),
        });
    }
}

const KEYS: &[&str] = &[
    "system.omega_atom",
    "system.omega_cavity",
    "system.hopping",
    "system.coupling",
    "system.leg_separation",
    "system.phase",
    "lattice.total_sites",
    "lattice.leg0",
    "lattice.boundary",
    "dynamics.dt",
    "dynamics.t_max",
    "dynamics.tracked_sites",
    "analysis.rel_threshold",
    "sweep.parameter",
    "sweep.values",
    "sweep.command",
    "output.directory",
    "output.format",
];

const DEFAULT_TOTAL_SITES: usize = 2001;
const DEFAULT_DT: f64 = 0.05;
const DEFAULT_T_MAX: f64 = 400.0;

/// Splits the text into key/value pairs. Errors are line-level syntax faults.
pub fn parse_pairs(text: &str) -> (BTreeMap<String, String>, ValidationReport) {
    let mut map = BTreeMap::new();
    let mut report = ValidationReport::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            report.push("cli-io", format!("line {}", n + 1), "expected `key = value`");
            continue;
        };
        let key = k.trim().to_string();
        let value = v.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            report.push("cli-io", key, "unknown key");
            continue;
        }
        if map.insert(key.clone(), value).is_some() {
            report.push("cli-io", key, format!("duplicate key on line {}", n + 1));
        }
    }
    (map, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Energy,
    Time,
    Phase,
    Real,
    Count,
}

/// Parses and validates a configuration for `command`.
///
/// Returns the configuration only when the report is empty.
pub fn load(text: &str, command: Command) -> (Option<RunConfig>, ValidationReport) {
    let (map, mut report) = parse_pairs(text);

    let hopping = match map.get("system.hopping") {
        None => 1.0,
        Some(s) => match parse_scalar(s) {
            Ok(v) => v,
            Err(e) => {
                report.push("core-model", "system.hopping", e);
                1.0
            }
        },
    };

    let mut get = |key: &str, kind: Kind, default: Option<f64>| -> f64 {
        match map.get(key) {
            None => match default {
                Some(d) => d,
                None => {
                    report.push(module_of(key), key, "missing required key");
                    f64::NAN
                }
            },
            Some(s) => match parse_value(s, kind, hopping) {
                Ok(v) => v,
                Err(e) => {
                    report.push(module_of(key), key, e);
                    f64::NAN
                }
            },
        }
    };

    let omega_atom = get("system.omega_atom", Kind::Energy, None);
    let omega_cavity = get("system.omega_cavity", Kind::Energy, Some(0.0));
    let coupling = get("system.coupling", Kind::Energy, None);
    let leg_separation = get("system.leg_separation", Kind::Count, None);
    let phase = get("system.phase", Kind::Phase, None);
    let total_sites = get(
        "lattice.total_sites",
        Kind::Count,
        Some(DEFAULT_TOTAL_SITES as f64),
    );
    let leg0 = map
        .contains_key("lattice.leg0")
        .then(|| get("lattice.leg0", Kind::Count, None));
    let dt = get("dynamics.dt", Kind::Time, Some(DEFAULT_DT));
    let t_max = get("dynamics.t_max", Kind::Time, Some(DEFAULT_T_MAX));
    let rel_threshold = get(
        "analysis.rel_threshold",
        Kind::Real,
        Some(giantbic_core::beats::DEFAULT_REL_THRESHOLD),
    );

    if let Some(b) = map.get("lattice.boundary") {
        if b != "hard-wall" && b != "hard_wall" {
            report.push("core-model", "lattice.boundary", format!("unsupported boundary `{b}`"));
        }
    }

    let format = match map.get("output.format") {
        None => Format::Csv,
        Some(s) => Format::parse(s).unwrap_or_else(|| {
            report.push("cli-io", "output.format", format!("expected csv or json, got `{s}`"));
            Format::Csv
        }),
    };
    let directory = map.get("output.directory").map(PathBuf::from);

    let tracked_sites = match map.get("dynamics.tracked_sites") {
        None => None,
        Some(s) => match parse_sites(s) {
            Ok(v) => Some(v),
            Err(e) => {
                report.push("dynamics", "dynamics.tracked_sites", e);
                Some(Vec::new())
            }
        },
    };

    let sweep = parse_sweep(&map, hopping, &mut report);
    if command == Command::Sweep && sweep.is_none() && !map.contains_key("sweep.parameter") {
        report.push("cli-io", "sweep.parameter", "the sweep command needs a sweep section");
    }

    if !report.is_empty() {
        return (None, report);
    }

    let leg_separation = leg_separation as usize;
    let system = SystemParams {
        omega_atom,
        omega_cavity,
        hopping,
        coupling,
        leg_separation,
        phase,
    };
    check_system(&system, "system", &mut report);

    let total_sites = total_sites as usize;
    let lattice = match leg0 {
        Some(l) => Lattice::new(total_sites, l as usize),
        None => Lattice::new(
            total_sites,
            total_sites.saturating_sub(1 + leg_separation) / 2,
        ),
    };
    if let Err(e) = lattice.validate(leg_separation) {
        report.push("core-model", "lattice", strip(e));
    } else if !lattice.is_well_centered(leg_separation) {
        report.warnings.push(format!(
            "legs sit {} sites from the nearest wall, less than a quarter of the chain",
            lattice.margin(leg_separation)
        ));
    }

    let tracked_sites = tracked_sites.unwrap_or_else(|| (0..=leg_separation as isize).collect());
    let dynamics = DynamicsConfig {
        dt,
        t_max,
        tracked_sites,
    };
    let config = RunConfig {
        system,
        lattice,
        explicit_leg0: leg0.is_some(),
        dynamics,
        rel_threshold,
        sweep,
        directory,
        format,
        snapshot: map,
    };
    check_command(&config, command, &mut report);
    if report.is_empty() {
        (Some(config), report)
    } else {
        (None, report)
    }
}

fn check_system(p: &SystemParams, prefix: &str, report: &mut ValidationReport) {
    let field = |k: &str| format!("{prefix}.{k}");
    if !(p.hopping > 0.0) {
        report.push("core-model", field("hopping"), format!("must be positive, got {}", p.hopping));
    }
    if !(p.coupling >= 0.0) {
        report.push("core-model", field("coupling"), format!("must be non-negative, got {}", p.coupling));
    }
    if p.leg_separation == 0 {
        report.push("core-model", field("leg_separation"), "must be at least 1");
    }
    for (k, v) in [
        ("omega_atom", p.omega_atom),
        ("omega_cavity", p.omega_cavity),
        ("phase", p.phase),
    ] {
        if !v.is_finite() {
            report.push("core-model", field(k), "must be finite");
        }
    }
}

/// Checks that only matter for a particular subcommand.
fn check_command(config: &RunConfig, command: Command, report: &mut ValidationReport) {
    let p = &config.system;
    match command {
        Command::Bic => {
            if !p.atom_in_band() {
                let (lo, hi) = giantbic_core::band_edges(p);
                report.push(
                    "bic-analytics",
                    "system.omega_atom",
                    format!(
                        "{} is outside the open band ({lo}, {hi}); no BIC can form",
                        p.omega_atom
                    ),
                );
            }
        }
        Command::Boc => {
            if !(p.coupling > 0.0) {
                report.push(
                    "spectrum",
                    "system.coupling",
                    "the bound-state equation needs g > 0",
                );
            }
        }
        Command::Beats => {
            if !(config.rel_threshold > 0.0 && config.rel_threshold < 1.0) {
                report.push(
                    "beat-analysis",
                    "analysis.rel_threshold",
                    format!("must lie in (0, 1), got {}", config.rel_threshold),
                );
            }
        }
        Command::Sweep => {
            if let Some(sweep) = &config.sweep {
                for (i, &v) in sweep.values.iter().enumerate() {
                    let point = config.with_parameter(sweep.parameter, v);
                    let mut sub = ValidationReport::default();
                    check_system(&point.system, "system", &mut sub);
                    if let Err(e) = point.lattice.validate(point.system.leg_separation) {
                        sub.push("core-model", "lattice", strip(e));
                    }
                    if sub.is_empty() {
                        check_command(&point, sweep.command, &mut sub);
                    }
                    for mut v in sub.violations {
                        v.field = format!("sweep.values[{i}] -> {}", v.field);
                        report.violations.push(v);
                    }
                }
            }
        }
        _ => {}
    }
    if command.needs_dynamics() {
        let d = &config.dynamics;
        match config.time_grid() {
            Err(e) => report.push("dynamics", "dynamics.dt", strip(e)),
            Ok(grid) => {
                if command == Command::Beats && grid.samples < MIN_SAMPLES {
                    report.push(
                        "beat-analysis",
                        "dynamics.t_max",
                        format!(
                            "record has {} samples, the spectrum needs at least {MIN_SAMPLES}",
                            grid.samples
                        ),
                    );
                }
            }
        }
        for &j in &d.tracked_sites {
            if config.lattice.absolute(j).is_none() {
                report.push(
                    "dynamics",
                    "dynamics.tracked_sites",
                    format!("site {j} lies outside the chain"),
                );
            }
        }
    }
}

fn parse_sweep(
    map: &BTreeMap<String, String>,
    hopping: f64,
    report: &mut ValidationReport,
) -> Option<SweepConfig> {
    let present = ["sweep.parameter", "sweep.values", "sweep.command"]
        .iter()
        .any(|k| map.contains_key(*k));
    if !present {
        return None;
    }
    let parameter = match map.get("sweep.parameter").map(|s| (s, SweepParameter::parse(s))) {
        Some((_, Some(p))) => p,
        Some((s, None)) => {
            report.push("cli-io", "sweep.parameter", format!("cannot sweep `{s}`"));
            return None;
        }
        None => {
            report.push("cli-io", "sweep.parameter", "missing required key");
            return None;
        }
    };
    let Some(raw) = map.get("sweep.values") else {
        report.push("cli-io", "sweep.values", "missing required key");
        return None;
    };
    let mut values = Vec::new();
    for item in raw.split(',') {
        match parse_value(item.trim(), parameter.kind(), hopping) {
            Ok(v) => values.push(v),
            Err(e) => report.push("cli-io", "sweep.values", e),
        }
    }
    if values.is_empty() {
        report.push("cli-io", "sweep.values", "needs at least one value");
    }
    let command = match map.get("sweep.command") {
        None => Command::Spectrum,
        Some(s) => match Command::parse(s) {
            Some(c) if !matches!(c, Command::Sweep | Command::Selfcheck) => c,
            _ => {
                report.push("cli-io", "sweep.command", format!("cannot sweep the `{s}` command"));
                return None;
            }
        },
    };
    Some(SweepConfig {
        parameter,
        values,
        command,
    })
}

fn module_of(key: &str) -> &'static str {
    match key.split('.').next() {
        Some("system") | Some("lattice") => "core-model",
        Some("dynamics") => "dynamics",
        Some("analysis") => "beat-analysis",
        _ => "cli-io",
    }
}

fn strip(e: giantbic_core::Error) -> String {
    match e {
        giantbic_core::Error::Config(s) | giantbic_core::Error::Input(s) => s,
        other => other.to_string(),
    }
}

fn parse_value(s: &str, kind: Kind, hopping: f64) -> Result<f64, String> {
    match kind {
        Kind::Energy => match s.strip_suffix("xi") {
            Some(head) => Ok(parse_scalar(head)? * hopping),
            None => parse_scalar(s),
        },
        Kind::Time => match s.strip_suffix("/xi") {
            Some(head) => Ok(parse_scalar(head)? / hopping),
            None => parse_scalar(s),
        },
        Kind::Phase | Kind::Real => parse_scalar(s),
        Kind::Count => s
            .trim()
            .parse::<u64>()
            .map(|n| n as f64)
            .map_err(|_| format!("expected a non-negative integer, got `{s}`")),
    }
}

fn parse_sites(s: &str) -> Result<Vec<isize>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        if let Some((a, b)) = item.split_once("..=") {
            let a: isize = a.trim().parse().map_err(|_| format!("bad range `{item}`"))?;
            let b: isize = b.trim().parse().map_err(|_| format!("bad range `{item}`"))?;
            if b < a {
                return Err(format!("empty range `{item}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| format!("bad site `{item}`"))?);
        }
    }
    if out.is_empty() {
        return Err("no sites listed".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Num(f64),
    Pi,
    Sqrt,
    Open,
    Close,
    Star,
    Slash,
    Minus,
    Plus,
}

fn tokenize(s: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '(' => (out.push(Token::Open), i += 1).1,
            ')' => (out.push(Token::Close), i += 1).1,
            '*' => (out.push(Token::Star), i += 1).1,
            '/' => (out.push(Token::Slash), i += 1).1,
            '-' => (out.push(Token::Minus), i += 1).1,
            '+' => (out.push(Token::Plus), i += 1).1,
            _ if s[i..].starts_with("pi") => (out.push(Token::Pi), i += 2).1,
            _ if s[i..].starts_with("sqrt") => (out.push(Token::Sqrt), i += 4).1,
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    let exp_sign = (d == '-' || d == '+')
                        && i > start
                        && matches!(bytes[i - 1], b'e' | b'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text = &s[start..i];
                out.push(Token::Num(
                    text.parse().map_err(|_| format!("bad number `{text}`"))?,
                ));
            }
            _ => return Err(format!("unexpected `{}` in `{s}`", &s[i..])),
        }
    }
    Ok(out)
}

/// Evaluates a scalar such as `-3pi/4`, `0.25 * pi` or `sqrt(2)`.
pub fn parse_scalar(s: &str) -> Result<f64, String> {
    let tokens = tokenize(s.trim())?;
    if tokens.is_empty() {
        return Err("empty value".into());
    }
    let mut pos = 0;
    let mut sign = 1.0;
    match tokens[0] {
        Token::Minus => (sign, pos) = (-1.0, 1),
        Token::Plus => pos = 1,
        _ => {}
    }
    let factor = |pos: &mut usize| -> Result<f64, String> {
        let v = match tokens.get(*pos) {
            Some(Token::Num(x)) => *x,
            Some(Token::Pi) => std::f64::consts::PI,
            Some(Token::Sqrt) => {
                match (tokens.get(*pos + 1), tokens.get(*pos + 2), tokens.get(*pos + 3)) {
                    (Some(Token::Open), Some(Token::Num(x)), Some(Token::Close)) => {
                        *pos += 3;
                        x.sqrt()
                    }
                    _ => return Err(format!("expected sqrt(<number>) in `{s}`")),
                }
            }
            _ => return Err(format!("expected a number in `{s}`")),
        };
        *pos += 1;
        Ok(v)
    };
    let mut value = sign * factor(&mut pos)?;
    while pos < tokens.len() {
        match tokens[pos] {
            Token::Star => {
                pos += 1;
                value *= factor(&mut pos)?;
            }
            Token::Slash => {
                pos += 1;
                let d = factor(&mut pos)?;
                if d == 0.0 {
                    return Err(format!("division by zero in `{s}`"));
                }
                value /= d;
            }
            Token::Num(_) | Token::Pi | Token::Sqrt => value *= factor(&mut pos)?,
            _ => return Err(format!("cannot parse `{s}`")),
        }
    }
    if !value.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(value)
}
