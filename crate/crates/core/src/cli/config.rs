//! Flat `section.key = value` scenario files.
//!
//! ```text
//! # condensed phase, strong localization
//! molecule.localization = 1e-3
//! bath.kind = ohmic
//! bath.coupling = 10
//! bath.cutoff = 0.01
//! time.max = 2000
//! eval.path = general
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::bath_oracle::{Discretization, GridScheme};
use crate::dynamics::{Dressing, InitialState};
use crate::model::{derive_two_level, MoleculeParams, Scales, UnitSystem};
use crate::quadrature::DEFAULT_REL_TOL;
use crate::spectral::{
    debye_params, gas_params_from_micro, read_table, DebyeSolventParams, GasMicroParams, SpectralDensity,
};

/// Every problem found in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

const KEYS: &[&str] = &[
    "molecule.tunneling",
    "molecule.localization",
    "molecule.h",
    "molecule.omega",
    "molecule.eta",
    "molecule.tau0",
    "initial.state",
    "bath.kind",
    "bath.coupling",
    "bath.cutoff",
    "bath.table",
    "gas.density",
    "gas.thermal_energy",
    "gas.range",
    "debye.dipole",
    "debye.radius",
    "debye.eps_static",
    "debye.eps_inf",
    "debye.relaxation_time",
    "time.min",
    "time.max",
    "time.points",
    "time.spacing",
    "eval.path",
    "eval.dressing",
    "eval.tol",
    "oracle.modes",
    "oracle.omega_min",
    "oracle.omega_max",
    "oracle.scheme",
    "oracle.threshold",
    "oracle.truncation",
    "output.path",
    "sweep.parameter",
    "sweep.values",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPath {
    General,
    Dilute,
    Isolated,
    Oracle,
}

impl EvalPath {
    pub fn name(self) -> &'static str {
        match self {
            EvalPath::General => "general",
            EvalPath::Dilute => "dilute",
            EvalPath::Isolated => "isolated",
            EvalPath::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl TimeGrid {
    pub fn linear(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points, log: false }
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if self.log {
                    self.min * (self.max / self.min).powf(f)
                } else {
                    self.min + (self.max - self.min) * f
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// `None` picks [`Discretization::default_for`] the bath.
    pub grid: Option<Discretization>,
    pub modes: Option<usize>,
    pub threshold: f64,
    pub truncation: f64,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub molecule: MoleculeParams,
    pub bath: Option<SpectralDensity>,
    pub initial: InitialState,
    pub time: TimeGrid,
    pub path: EvalPath,
    pub dressing: Dressing,
    pub tol: f64,
    pub oracle: OracleSettings,
    pub output: Option<PathBuf>,
    /// The resolved settings, echoed into output headers.
    pub resolved: BTreeMap<String, String>,
}

impl ScenarioConfig {
    /// A scenario built in code rather than parsed.
    pub fn new(molecule: MoleculeParams, bath: Option<SpectralDensity>, time: TimeGrid, path: EvalPath) -> Self {
        let mut c = Self {
            molecule,
            bath,
            initial: InitialState::Left,
            time,
            path,
            dressing: Dressing::Leading,
            tol: DEFAULT_REL_TOL,
            oracle: OracleSettings {
                grid: None,
                modes: None,
                threshold: 0.01,
                truncation: 1e-3,
            },
            output: None,
            resolved: BTreeMap::new(),
        };
        c.refresh();
        c
    }

    /// Recompute the header echo after fields were changed in code.
    pub fn refresh(&mut self) {
        let r = &mut self.resolved;
        r.insert("molecule.tunneling".into(), fmt_f(self.molecule.tunneling));
        r.insert("molecule.localization".into(), fmt_f(self.molecule.localization));
        r.insert("molecule.h".into(), fmt_f(self.molecule.h));
        r.insert("eval.path".into(), self.path.name().into());
        r.insert(
            "eval.dressing".into(),
            match self.dressing {
                Dressing::Leading => "leading",
                Dressing::Full => "full",
            }
            .into(),
        );
        r.insert("eval.tol".into(), fmt_f(self.tol));
        r.insert("time.min".into(), fmt_f(self.time.min));
        r.insert("time.max".into(), fmt_f(self.time.max));
        r.insert("time.points".into(), self.time.points.to_string());
        r.insert("time.spacing".into(), if self.time.log { "log" } else { "linear" }.into());
        match &self.bath {
            Some(SpectralDensity::SubOhmicGas { coupling, cutoff }) | Some(SpectralDensity::OhmicDebye { coupling, cutoff }) => {
                let kind = self.bath.as_ref().unwrap().kind_name();
                r.insert("bath.kind".into(), kind.into());
                r.insert("bath.coupling".into(), fmt_f(*coupling));
                r.insert("bath.cutoff".into(), fmt_f(*cutoff));
            }
            Some(SpectralDensity::Tabulated(_)) => {
                r.insert("bath.kind".into(), "tabulated".into());
            }
            None => {
                r.insert("bath.kind".into(), "none".into());
                r.remove("bath.coupling");
                r.remove("bath.cutoff");
            }
        }
    }

    pub fn oracle_grid(&self) -> Option<Discretization> {
        let bath = self.bath.as_ref()?;
        let mut g = self.oracle.grid.unwrap_or_else(|| Discretization::default_for(bath));
        if let Some(n) = self.oracle.modes {
            g.modes = n;
        }
        Some(g)
    }
}

pub(crate) fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Asymmetry `η`, with `δ = η` (or derived from `molecule.omega`).
    Eta,
    Localization,
    Coupling,
    Cutoff,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Eta => "eta",
            SweepParameter::Localization => "localization",
            SweepParameter::Coupling => "coupling",
            SweepParameter::Cutoff => "cutoff",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: ScenarioConfig,
    /// Well frequency for `η` sweeps that derive `δ`.
    pub omega: Option<(f64, Scales)>,
}

/// Raw `key -> value` pairs, in document order.
fn tokenize(text: &str, problems: &mut Vec<String>) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            problems.push(format!("line {}: expected `key = value`", n + 1));
            continue;
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !KEYS.contains(&k.as_str()) {
            problems.push(format!("line {}: unknown key `{k}`", n + 1));
            continue;
        }
        if map.insert(k.clone(), v).is_some() {
            problems.push(format!("line {}: duplicate key `{k}`", n + 1));
        }
    }
    map
}

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
    problems: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn num(&mut self, key: &str) -> Option<f64> {
        let v = self.map.get(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.problems.push(format!("`{key}`: not a finite number: {v:?}"));
                None
            }
        }
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        let v = self.map.get(key)?;
        match v.parse::<usize>() {
            Ok(x) => Some(x),
            _ => {
                self.problems.push(format!("`{key}`: not a non-negative integer: {v:?}"));
                None
            }
        }
    }

    fn require(&mut self, key: &str) -> Option<f64> {
        if !self.has(key) {
            self.problems.push(format!("missing required key `{key}`"));
            return None;
        }
        self.num(key)
    }
}

/// Parse and validate a scenario document, reporting every violation at once.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_inner(text).map(|(c, _)| c)
}

/// Parse a document that also carries `sweep.parameter` and `sweep.values`.
pub fn parse_sweep(text: &str) -> Result<SweepSpec, ConfigError> {
    let (base, raw) = parse_inner(text)?;
    let mut problems = Vec::new();
    let parameter = match raw.get("sweep.parameter").map(String::as_str) {
        Some("eta") => Some(SweepParameter::Eta),
        Some("localization") | Some("delta") => Some(SweepParameter::Localization),
        Some("coupling") | Some("J0") => Some(SweepParameter::Coupling),
        Some("cutoff") | Some("Lambda") => Some(SweepParameter::Cutoff),
        Some(other) => {
            problems.push(format!("`sweep.parameter`: unknown parameter {other:?}"));
            None
        }
        None => {
            problems.push("missing required key `sweep.parameter`".into());
            None
        }
    };
    let mut values = Vec::new();
    match raw.get("sweep.values") {
        None => problems.push("missing required key `sweep.values`".into()),
        Some(list) => {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match item.parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => problems.push(format!("`sweep.values`: bad entry {item:?}")),
                }
            }
            if values.is_empty() {
                problems.push("`sweep.values` is empty".into());
            }
        }
    }
    let fixed = |k: &str| raw.contains_key(k);
    match parameter {
        Some(SweepParameter::Coupling) | Some(SweepParameter::Cutoff) if base.bath.is_none() => {
            problems.push("sweeping a bath parameter needs a bath".into());
        }
        Some(SweepParameter::Coupling) if fixed("bath.coupling") => {
            problems.push("`bath.coupling` is both fixed and swept".into());
        }
        Some(SweepParameter::Cutoff) if fixed("bath.cutoff") => {
            problems.push("`bath.cutoff` is both fixed and swept".into());
        }
        Some(SweepParameter::Localization) if fixed("molecule.localization") => {
            problems.push("`molecule.localization` is both fixed and swept".into());
        }
        Some(SweepParameter::Eta) if fixed("molecule.eta") || fixed("molecule.localization") => {
            problems.push("the asymmetry is both fixed and swept".into());
        }
        Some(SweepParameter::Coupling) | Some(SweepParameter::Cutoff)
            if matches!(base.bath, Some(SpectralDensity::Tabulated(_))) =>
        {
            problems.push("a tabulated bath has no coupling or cut-off to sweep".into());
        }
        _ => {}
    }
    if !problems.is_empty() {
        return Err(ConfigError { problems });
    }
    let omega = raw.get("molecule.omega").and_then(|v| v.parse::<f64>().ok()).map(|w| {
        let tau0 = raw.get("molecule.tau0").and_then(|v| v.parse().ok()).unwrap_or(1e-14);
        (
            w,
            Scales {
                tau0,
                h: base.molecule.h,
                thermal_energy: None,
            },
        )
    });
    Ok(SweepSpec {
        parameter: parameter.unwrap(),
        values,
        base,
        omega,
    })
}

fn parse_inner(text: &str) -> Result<(ScenarioConfig, BTreeMap<String, String>), ConfigError> {
    let mut problems = Vec::new();
    let map = tokenize(text, &mut problems);
    let sweep_target = map.get("sweep.parameter").cloned();
    let mut r = Reader {
        map: &map,
        problems: &mut problems,
    };
    let mut resolved = BTreeMap::new();

    // Molecule
    let h = r.num("molecule.h").unwrap_or(0.1);
    let tunneling = r.num("molecule.tunneling").unwrap_or(1e-3);
    let derived = r.has("molecule.omega") || r.has("molecule.eta");
    let swept_asym = matches!(sweep_target.as_deref(), Some("eta" | "localization" | "delta"));
    let mut molecule = None;
    if derived {
        if r.has("molecule.localization") || r.has("molecule.tunneling") {
            r.problems
                .push("give either `molecule.omega`/`molecule.eta` or `molecule.tunneling`/`molecule.localization`".into());
        }
        let omega = r.require("molecule.omega");
        let eta = if swept_asym { Some(0.0) } else { r.require("molecule.eta") };
        let tau0 = r.num("molecule.tau0").unwrap_or(1e-14);
        if let (Some(omega), Some(eta)) = (omega, eta) {
            let scales = Scales {
                tau0,
                h,
                thermal_energy: None,
            };
            match derive_two_level(omega, eta, &scales) {
                Ok(m) => molecule = Some(m),
                Err(e) => r.problems.push(e.to_string()),
            }
            resolved.insert("molecule.omega".into(), fmt_f(omega));
            resolved.insert("molecule.eta".into(), fmt_f(eta));
            resolved.insert("molecule.tau0".into(), fmt_f(tau0));
        }
    } else {
        let delta = if swept_asym {
            r.num("molecule.localization").or(Some(0.0))
        } else {
            r.require("molecule.localization")
        };
        if let Some(delta) = delta {
            match MoleculeParams::new(tunneling, delta, h) {
                Ok(m) => molecule = Some(m),
                Err(e) => r.problems.push(e.to_string()),
            }
        }
    }

    let initial = match r.str("initial.state").unwrap_or("left") {
        "left" | "L" => InitialState::Left,
        "right" | "R" => InitialState::Right,
        other => {
            r.problems.push(format!("`initial.state`: expected left|right, got {other:?}"));
            InitialState::Left
        }
    };

    // Evaluation path
    let path = match r.str("eval.path") {
        None => {
            r.problems.push("missing required key `eval.path`".into());
            None
        }
        Some("general") => Some(EvalPath::General),
        Some("dilute") | Some("dilute-closed-form") => Some(EvalPath::Dilute),
        Some("isolated") => Some(EvalPath::Isolated),
        Some("oracle") => Some(EvalPath::Oracle),
        Some(other) => {
            r.problems.push(format!("`eval.path`: unknown path {other:?}"));
            None
        }
    };
    let dressing = match r.str("eval.dressing").unwrap_or("leading") {
        "leading" => Dressing::Leading,
        "full" => Dressing::Full,
        other => {
            r.problems.push(format!("`eval.dressing`: expected leading|full, got {other:?}"));
            Dressing::Leading
        }
    };
    let tol = r.num("eval.tol").unwrap_or(DEFAULT_REL_TOL);
    if !(tol > 1e-12 && tol < 1e-2) {
        r.problems.push(format!("`eval.tol` must lie in (1e-12, 1e-2), got {tol}"));
    }

    // Bath: exactly one parameterization.
    let has_prefix = |p: &str| map.keys().any(|k| k.starts_with(p));
    let mut blocks = Vec::new();
    if r.has("bath.coupling") || r.has("bath.cutoff") {
        blocks.push("bath");
    }
    if r.has("bath.table") {
        blocks.push("table");
    }
    if has_prefix("gas.") {
        blocks.push("gas");
    }
    if has_prefix("debye.") {
        blocks.push("debye");
    }
    let needs_bath = path.is_some_and(|p| p != EvalPath::Isolated);
    let sweeping_bath = matches!(sweep_target.as_deref(), Some("coupling" | "J0" | "cutoff" | "Lambda"));
    let mut bath = None;
    if blocks.len() > 1 {
        r.problems.push(format!("conflicting bath blocks: {}", blocks.join(", ")));
    } else if needs_bath && blocks.is_empty() && !(sweeping_bath && r.has("bath.kind")) {
        r.problems.push("missing bath: give `bath.kind` with `bath.coupling`/`bath.cutoff`, `bath.table`, a `gas.*` block or a `debye.*` block".into());
    } else if let Some(&block) = blocks.first().or(if sweeping_bath { Some(&"bath") } else { None }) {
        bath = read_bath(block, &mut r, &mut resolved, sweep_target.as_deref());
    }
    if !needs_bath && path.is_some() {
        bath = None;
    }

    // Time grid
    let t_max = r.require("time.max");
    let t_min = r.num("time.min").unwrap_or(0.0);
    let points = r.count("time.points").unwrap_or(1000);
    let log = match r.str("time.spacing").unwrap_or("linear") {
        "linear" => false,
        "log" => true,
        other => {
            r.problems.push(format!("`time.spacing`: expected linear|log, got {other:?}"));
            false
        }
    };
    if let Some(t_max) = t_max {
        if !(t_max > t_min && t_min >= 0.0) {
            r.problems.push(format!("time grid needs t_max > t_min >= 0, got [{t_min}, {t_max}]"));
        }
        if log && t_min <= 0.0 {
            r.problems.push("log time spacing needs `time.min` > 0".into());
        }
    }
    if points < 2 {
        r.problems.push(format!("`time.points` must be at least 2, got {points}"));
    }

    // Oracle
    let grid_keys = ["oracle.omega_min", "oracle.omega_max", "oracle.scheme"];
    let modes = r.count("oracle.modes");
    let grid = if grid_keys.iter().any(|k| r.has(k)) {
        let lo = r.require("oracle.omega_min");
        let hi = r.require("oracle.omega_max");
        let scheme = match r.str("oracle.scheme").unwrap_or("log") {
            "log" => GridScheme::Log,
            "linear" => GridScheme::Linear,
            other => {
                r.problems.push(format!("`oracle.scheme`: expected linear|log, got {other:?}"));
                GridScheme::Log
            }
        };
        match (lo, hi) {
            (Some(lo), Some(hi)) => Some(Discretization {
                modes: modes.unwrap_or(200),
                omega_min: lo,
                omega_max: hi,
                scheme,
            }),
            _ => None,
        }
    } else {
        None
    };
    let threshold = r.num("oracle.threshold").unwrap_or(0.01);
    let truncation = r.num("oracle.truncation").unwrap_or(1e-3);
    let output = r.str("output.path").map(PathBuf::from);

    if !problems.is_empty() {
        return Err(ConfigError { problems });
    }
    let time = TimeGrid {
        min: t_min,
        max: t_max.unwrap(),
        points,
        log,
    };
    let mut c = ScenarioConfig {
        molecule: molecule.unwrap(),
        bath,
        initial,
        time,
        path: path.unwrap(),
        dressing,
        tol,
        oracle: OracleSettings {
            grid,
            modes,
            threshold,
            truncation,
        },
        output,
        resolved,
    };
    c.refresh();
    if let Some(v) = map.get("initial.state") {
        c.resolved.insert("initial.state".into(), v.clone());
    }
    if c.path == EvalPath::Oracle {
        if let Some(g) = c.oracle_grid() {
            c.resolved.insert("oracle.modes".into(), g.modes.to_string());
            c.resolved.insert("oracle.omega_min".into(), fmt_f(g.omega_min));
            c.resolved.insert("oracle.omega_max".into(), fmt_f(g.omega_max));
            c.resolved.insert(
                "oracle.scheme".into(),
                match g.scheme {
                    GridScheme::Log => "log",
                    GridScheme::Linear => "linear",
                }
                .into(),
            );
        }
    }
    Ok((c, map))
}

fn read_bath(
    block: &str,
    r: &mut Reader<'_>,
    resolved: &mut BTreeMap<String, String>,
    sweep: Option<&str>,
) -> Option<SpectralDensity> {
    let result = match block {
        "bath" => {
            let kind = r.str("bath.kind").map(str::to_string);
            let coupling = if matches!(sweep, Some("coupling" | "J0")) {
                Some(1.0)
            } else {
                r.require("bath.coupling")
            };
            let cutoff = if matches!(sweep, Some("cutoff" | "Lambda")) {
                Some(1.0)
            } else {
                r.require("bath.cutoff")
            };
            let (coupling, cutoff) = (coupling?, cutoff?);
            match kind.as_deref() {
                Some("ohmic") | Some("debye") | Some("ohmic-debye") => SpectralDensity::ohmic_debye(coupling, cutoff),
                Some("gas") | Some("sub-ohmic") | Some("sub-ohmic-gas") => SpectralDensity::sub_ohmic_gas(coupling, cutoff),
                Some(other) => {
                    r.problems.push(format!("`bath.kind`: expected ohmic|gas, got {other:?}"));
                    return None;
                }
                None => {
                    r.problems.push("missing required key `bath.kind`".into());
                    return None;
                }
            }
        }
        "table" => {
            let path = r.str("bath.table").unwrap().to_string();
            resolved.insert("bath.table".into(), path.clone());
            read_table(std::path::Path::new(&path)).map(SpectralDensity::tabulated)
        }
        "gas" => {
            let rho = r.require("gas.density");
            let e = r.require("gas.thermal_energy");
            let range = r.require("gas.range");
            let h = r.num("molecule.h").unwrap_or(0.1);
            let (rho, e, range) = (rho?, e?, range?);
            let fit = GasMicroParams::new(rho, e, range, h).and_then(|g| gas_params_from_micro(&g));
            match fit {
                Ok(f) => {
                    resolved.insert("gas.fitted_constant".into(), fmt_f(f.constant));
                    SpectralDensity::sub_ohmic_gas(f.coupling, f.cutoff)
                }
                Err(e) => Err(e),
            }
        }
        "debye" => {
            let mut d = DebyeSolventParams::water(0.0, 1.0);
            d.dipole_change = r.require("debye.dipole")?;
            d.onsager_radius = r.require("debye.radius")?;
            if let Some(v) = r.num("debye.eps_static") {
                d.static_dielectric = v;
            }
            if let Some(v) = r.num("debye.eps_inf") {
                d.high_freq_dielectric = v;
            }
            if let Some(v) = r.num("debye.relaxation_time") {
                d.debye_time = v;
            }
            let tau0 = r.num("molecule.tau0").unwrap_or(1e-14);
            let base = UnitSystem::table_one();
            // Keep U0 and R0, rescale the mass so that tau0 matches.
            let mass = base.mass * (tau0 / base.time()).powi(2);
            UnitSystem::new(mass, base.energy, base.length)
                .and_then(|u| debye_params(&d, &u))
                .and_then(|f| SpectralDensity::ohmic_debye(f.coupling, f.cutoff))
        }
        _ => unreachable!(),
    };
    match result {
        Ok(j) => Some(j),
        Err(e) => {
            r.problems.push(e.to_string());
            None
        }
    }
}
