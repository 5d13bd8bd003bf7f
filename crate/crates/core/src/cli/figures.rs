//! Curve sets of the published figures, with the parameters the captions omit filled in.

use rayon::prelude::*;

use super::config::{fmt_f, EvalPath, ScenarioConfig, TimeGrid};
use super::{invalid_config, run_scenario, Dataset, Failure};
use crate::model::{isolated_tunneling_probability, MoleculeParams};
use crate::spectral::SpectralDensity;

pub const FIGURES: [&str; 8] = ["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b"];

const GAS_COUPLING: f64 = 1e-3;
const GAS_CUTOFF: f64 = 0.5;
const SOLVENT_COUPLING: f64 = 10.0;
const SOLVENT_CUTOFF: f64 = 0.01;
const DILUTE_DELTA: f64 = 1e-5;
const POINTS: usize = 1000;

fn gas(j0: f64, cutoff: f64) -> SpectralDensity {
    SpectralDensity::sub_ohmic_gas(j0, cutoff).expect("positive gas parameters")
}

fn solvent(j0: f64, cutoff: f64) -> SpectralDensity {
    SpectralDensity::ohmic_debye(j0, cutoff).expect("positive solvent parameters")
}

fn dilute_grid() -> TimeGrid {
    TimeGrid::linear(0.0, 2e4, POINTS)
}

fn condensed_grid() -> TimeGrid {
    TimeGrid::linear(0.0, 2e3, POINTS)
}

/// A named curve of a figure.
#[derive(Debug, Clone)]
pub struct Curve {
    pub name: String,
    pub config: ScenarioConfig,
}

fn curve(fig: &str, label: String, delta: f64, bath: Option<SpectralDensity>, time: TimeGrid) -> Curve {
    let path = if bath.is_some() { EvalPath::General } else { EvalPath::Isolated };
    let mut config = ScenarioConfig::new(MoleculeParams::table_one(delta), bath, time, path);
    config.resolved.insert("figure".into(), fig.into());
    config.resolved.insert("curve".into(), label.clone());
    Curve {
        name: format!("{fig}_{label}"),
        config,
    }
}

fn tag(v: f64) -> String {
    format!("{v:+e}").replace('+', "p").replace('-', "m")
}

/// Curves of a trajectory figure; `None` for `fig1b`, which is not a time series.
pub fn curves(id: &str) -> Result<Vec<Curve>, Failure> {
    let c = match id {
        "fig1a" => [1e-4, 1e-3, 1e-2]
            .iter()
            .map(|&eta| curve(id, format!("eta_{}", tag(eta)), eta, None, TimeGrid::linear(0.0, 1e4, POINTS)))
            .collect(),
        "fig2a" => [DILUTE_DELTA, -DILUTE_DELTA]
            .iter()
            .map(|&d| curve(id, format!("delta_{}", tag(d)), d, Some(gas(GAS_COUPLING, GAS_CUTOFF)), dilute_grid()))
            .collect(),
        "fig2b" => [1e-5, -1e-5, 1e-4, -1e-4, 1e-3, -1e-3]
            .iter()
            .map(|&d| {
                let bath = solvent(SOLVENT_COUPLING, SOLVENT_CUTOFF);
                curve(id, format!("delta_{}", tag(d)), d, Some(bath), condensed_grid())
            })
            .collect(),
        "fig3a" => [1e-4, 1e-3, 1e-2]
            .iter()
            .map(|&j0| curve(id, format!("J0_{}", tag(j0)), DILUTE_DELTA, Some(gas(j0, GAS_CUTOFF)), dilute_grid()))
            .collect(),
        "fig3b" => [10.0, 20.0, 30.0]
            .iter()
            .map(|&j0| {
                let bath = solvent(j0, SOLVENT_CUTOFF);
                curve(id, format!("J0_{}", tag(j0)), DILUTE_DELTA, Some(bath), condensed_grid())
            })
            .collect(),
        "fig4a" => [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&l| curve(id, format!("Lambda_{}", tag(l)), DILUTE_DELTA, Some(gas(GAS_COUPLING, l)), dilute_grid()))
            .collect(),
        "fig4b" => [1e-2, 1e-1, 1.0]
            .iter()
            .map(|&l| {
                let bath = solvent(SOLVENT_COUPLING, l);
                curve(id, format!("Lambda_{}", tag(l)), DILUTE_DELTA, Some(bath), condensed_grid())
            })
            .collect(),
        "fig1b" => Vec::new(),
        other => {
            return Err(invalid_config(format!(
                "unknown figure {other:?}; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    Ok(c)
}

/// `P_R(t = 1000)` of the isolated molecule against the asymmetry, with the envelope `sin²2θ`.
fn fig1b() -> Dataset {
    let t = 1000.0;
    let mut header = std::collections::BTreeMap::new();
    header.insert("figure".into(), "fig1b".into());
    header.insert("eval.path".into(), "isolated".into());
    header.insert("molecule.tunneling".into(), fmt_f(1e-3));
    header.insert("molecule.h".into(), fmt_f(0.1));
    header.insert("time".into(), fmt_f(t));
    let mut d = Dataset::new(header, &["eta", "P_R", "envelope"]);
    let n = 201;
    for i in 0..n {
        let eta = 1e-4 * 100f64.powf(i as f64 / (n - 1) as f64);
        let m = MoleculeParams::table_one(eta);
        d.push(&[eta, isolated_tunneling_probability(&m, t), m.sin2_two_theta()]);
    }
    d
}

/// One dataset per curve, named `<figure>_<curve>`, evaluated concurrently.
/// `rel_tol` overrides the quadrature tolerance when given.
pub fn reproduce_figure(id: &str, rel_tol: Option<f64>) -> Result<Vec<(String, Dataset)>, Failure> {
    if id == "fig1b" {
        return Ok(vec![("fig1b".into(), fig1b())]);
    }
    let mut curves = curves(id)?;
    if let Some(tol) = rel_tol {
        for c in &mut curves {
            c.config.tol = tol;
            c.config.refresh();
        }
    }
    curves
        .into_par_iter()
        .map(|c| Ok((c.name, run_scenario(&c.config)?)))
        .collect()
}
