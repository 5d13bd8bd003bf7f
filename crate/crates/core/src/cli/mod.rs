//! Scenario runs, figure data, sweeps and oracle comparisons behind the `chiral` binary.

mod config;
mod figures;
mod sweep;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath_oracle::{self, discretize, OracleComparison, TruncatedState, DEFAULT_MAX_DIMENSION};
use crate::dynamics::{PerturbativeInputs, Prepared};
use crate::spectral::SpectralDensity;

pub use config::{
    parse_config, parse_sweep, ConfigError, EvalPath, OracleSettings, ScenarioConfig, SweepParameter, SweepSpec,
    TimeGrid,
};
pub use figures::{reproduce_figure, FIGURES};
pub use sweep::run_sweep;

/// Why a command failed, with the matching process exit status.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}{source}", at.map(|t| format!("at t = {t}: ")).unwrap_or_default())]
    Numeric {
        at: Option<f64>,
        #[source]
        source: crate::Error,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::Error> for Failure {
    fn from(source: crate::Error) -> Self {
        Failure::Numeric { at: None, source }
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric { .. } => 3,
            Failure::Io(_) => 1,
        }
    }

    fn at(t: f64) -> impl Fn(crate::Error) -> Failure {
        move |source| Failure::Numeric { at: Some(t), source }
    }
}

pub(crate) fn invalid_config(problem: impl Into<String>) -> Failure {
    Failure::Config(ConfigError {
        problems: vec![problem.into()],
    })
}

/// A table with a `#` metadata block, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Dataset {
    pub fn new(header: BTreeMap<String, String>, columns: &[&str]) -> Self {
        Self {
            header,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| num(*v)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    /// Write through a temporary file in the same directory and rename over `path`.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, &self.to_csv())
    }
}

pub(crate) fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

pub const TRAJECTORY_COLUMNS: [&str; 6] = ["t", "P_R", "P1", "P2", "Re_coh", "Im_coh"];

fn inputs_for(c: &ScenarioConfig, bath: SpectralDensity) -> PerturbativeInputs {
    PerturbativeInputs::new(c.molecule, bath)
        .with_initial(c.initial)
        .with_dressing(c.dressing)
        .with_tolerance(c.tol)
}

/// Perturbative inputs of a scenario; the isolated path uses an empty bath.
pub fn scenario_inputs(c: &ScenarioConfig) -> PerturbativeInputs {
    let bath = match (c.path, &c.bath) {
        (EvalPath::Isolated, _) | (_, None) => SpectralDensity::zero(),
        (_, Some(j)) => j.clone(),
    };
    inputs_for(c, bath)
}

/// Evaluate `P_R(t)` and the level-resolved overlaps on the configured grid.
pub fn run_scenario(c: &ScenarioConfig) -> Result<Dataset, Failure> {
    let times = c.time.times();
    let inputs = scenario_inputs(c);
    let mut header = c.resolved.clone();
    let rows: Vec<[f64; 6]> = match c.path {
        EvalPath::General | EvalPath::Isolated => {
            let p = inputs.prepare()?;
            record_rates(&mut header, &p);
            times
                .par_iter()
                .map(|&t| {
                    let s = p.p_right(t).map_err(Failure::at(t))?;
                    Ok(row(t, s.p_right, s.overlaps.p1, s.overlaps.p2, s.overlaps.coherence))
                })
                .collect::<Result<_, Failure>>()?
        }
        EvalPath::Dilute => {
            if !matches!(c.initial, crate::dynamics::InitialState::Left) {
                return Err(invalid_config("the dilute closed form starts from the left-handed state"));
            }
            let p = inputs.prepare()?;
            record_rates(&mut header, &p);
            times
                .par_iter()
                .map(|&t| {
                    let o = p.dilute_overlaps(t).map_err(Failure::at(t))?;
                    let pr = p.p_right_dilute(t).map_err(Failure::at(t))?;
                    Ok(row(t, pr, o.p1, o.p2, o.coherence))
                })
                .collect::<Result<_, Failure>>()?
        }
        EvalPath::Oracle => {
            let (bath, grid) = match (&c.bath, c.oracle_grid()) {
                (Some(j), Some(g)) => (j, g),
                _ => return Err(invalid_config("the oracle path needs a bath")),
            };
            let discrete = discretize(bath, &grid)?;
            let h = bath_oracle::build_hamiltonian(&c.molecule, &discrete, DEFAULT_MAX_DIMENSION)?;
            let psi0 = TruncatedState::vacuum(h.basis, c.initial.amplitudes(&c.molecule)?);
            let samples = bath_oracle::evolve(&psi0, &h, &times)?;
            header.insert("oracle.reconstruction_residual".into(), config::fmt_f(discrete.reconstruction_residual));
            header.insert(
                "oracle.max_two_excitation_weight".into(),
                config::fmt_f(samples.iter().map(|s| s.two_excitation_weight).fold(0.0, f64::max)),
            );
            samples
                .iter()
                .map(|s| row(s.t, s.p_right, s.p1, s.p2, s.coherence))
                .collect()
        }
    };
    let mut d = Dataset::new(header, &TRAJECTORY_COLUMNS);
    for r in &rows {
        d.push(r);
    }
    Ok(d)
}

fn row(t: f64, p: f64, p1: f64, p2: f64, coh: Complex64) -> [f64; 6] {
    [t, p, p1, p2, coh.re, coh.im]
}

fn record_rates(header: &mut BTreeMap<String, String>, p: &Prepared<'_>) {
    if p.inputs.bath.is_zero() {
        return;
    }
    header.insert("derived.gamma2".into(), config::fmt_f(p.gamma));
    header.insert("derived.shift1".into(), config::fmt_f(p.shifts[0]));
    header.insert("derived.shift2".into(), config::fmt_f(p.shifts[1]));
}

/// Oracle comparison together with the thresholds it is judged by.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub comparison: OracleComparison,
    pub threshold: f64,
    pub truncation: f64,
    pub weak_coupling: bool,
    pub header: BTreeMap<String, String>,
}

impl OracleReport {
    pub fn truncation_valid(&self) -> bool {
        self.comparison.truncation_valid(self.truncation)
    }

    pub fn within_threshold(&self) -> bool {
        self.comparison.max_deviation <= self.threshold
    }

    /// 0 pass, 4 deviation above threshold, 5 truncation invalid (takes precedence).
    pub fn exit_code(&self) -> i32 {
        if !self.truncation_valid() {
            5
        } else if !self.within_threshold() {
            4
        } else {
            0
        }
    }

    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            0 => "pass",
            4 => "fail: deviation above threshold",
            _ => "fail: truncation invalid",
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s.push_str(&self.comparison.to_table());
        let _ = writeln!(
            s,
            "# threshold = {:e}, truncation_limit = {:e}, weak_coupling = {}, status = {}",
            self.threshold,
            self.truncation,
            self.weak_coupling,
            self.status()
        );
        s
    }
}

/// Run the brute-force oracle and the perturbative assembly on the same grid.
pub fn oracle_compare(c: &ScenarioConfig) -> Result<OracleReport, Failure> {
    let (bath, grid) = match (&c.bath, c.oracle_grid()) {
        (Some(j), Some(g)) => (j, g),
        _ => return Err(invalid_config("oracle comparison needs a bath")),
    };
    let inputs = inputs_for(c, bath.clone());
    let weak_coupling = inputs.is_weak_coupling()?;
    if !weak_coupling {
        log::warn!("coupling is not weak; second order is not expected to hold");
    }
    let discrete = discretize(bath, &grid)?;
    let comparison = bath_oracle::compare(&inputs, &discrete, &c.time.times())?;
    let mut header = c.resolved.clone();
    header.insert("oracle.modes".into(), grid.modes.to_string());
    header.insert("oracle.omega_min".into(), config::fmt_f(grid.omega_min));
    header.insert("oracle.omega_max".into(), config::fmt_f(grid.omega_max));
    Ok(OracleReport {
        comparison,
        threshold: c.oracle.threshold,
        truncation: c.oracle.truncation,
        weak_coupling,
        header,
    })
}
