use rayon::prelude::*;

use super::config::{fmt_f, ScenarioConfig, SweepParameter, SweepSpec};
use super::{invalid_config, run_scenario, scenario_inputs, Dataset, Failure};
use crate::dynamics::fit_equilibration_rate;
use crate::model::{derive_two_level, MoleculeParams};
use crate::spectral::SpectralDensity;

pub const SWEEP_COLUMNS: [&str; 6] = ["value", "mean_P_R", "fitted_rate", "gamma2", "envelope", "status"];

/// Summary statistics of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    /// Mean of `P_R` over the final 20% of the time grid.
    pub mean: f64,
    pub fitted_rate: Option<f64>,
    pub gamma2: f64,
    /// Amplitude `sin²2θ` of the isolated oscillation.
    pub envelope: f64,
}

pub(crate) fn summarize(c: &ScenarioConfig, d: &Dataset) -> Result<Summary, Failure> {
    let t = d.column("t").unwrap_or_default();
    let p = d.column("P_R").unwrap_or_default();
    let start = t.len() - (t.len() / 5).max(1);
    let tail = &p[start..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let inputs = scenario_inputs(c);
    let gamma2 = if inputs.bath.is_zero() { 0.0 } else { inputs.prepare()?.gamma };
    Ok(Summary {
        mean,
        fitted_rate: fit_equilibration_rate(&t, &p, mean),
        gamma2,
        envelope: c.molecule.sin2_two_theta(),
    })
}

fn point(s: &SweepSpec, v: f64) -> Result<ScenarioConfig, Failure> {
    let mut c = s.base.clone();
    let m = c.molecule;
    match s.parameter {
        SweepParameter::Eta => {
            c.molecule = match s.omega {
                Some((omega, scales)) => derive_two_level(omega, v, &scales)?,
                None => MoleculeParams::new(m.tunneling, v, m.h)?,
            };
            c.resolved.insert("molecule.eta".into(), fmt_f(v));
        }
        SweepParameter::Localization => c.molecule = MoleculeParams::new(m.tunneling, v, m.h)?,
        SweepParameter::Coupling | SweepParameter::Cutoff => {
            let j = c.bath.as_ref().ok_or_else(|| invalid_config("sweep needs a bath"))?;
            let (mut j0, mut cut) = (j.coupling().unwrap_or(0.0), j.cutoff());
            if s.parameter == SweepParameter::Coupling {
                j0 = v;
            } else {
                cut = v;
            }
            c.bath = Some(match j {
                SpectralDensity::SubOhmicGas { .. } => SpectralDensity::sub_ohmic_gas(j0, cut)?,
                SpectralDensity::OhmicDebye { .. } => SpectralDensity::ohmic_debye(j0, cut)?,
                SpectralDensity::Tabulated(_) => return Err(invalid_config("a tabulated bath cannot be swept")),
            });
        }
    }
    c.refresh();
    Ok(c)
}

/// One summary row per swept value. A failing value is recorded in the
/// `status` column and does not stop the sweep.
pub fn run_sweep(s: &SweepSpec) -> Result<Dataset, Failure> {
    if s.values.is_empty() {
        return Err(invalid_config("`sweep.values` is empty"));
    }
    let rows: Vec<Vec<String>> = s
        .values
        .par_iter()
        .map(|&v| {
            let r = point(s, v).and_then(|c| {
                let d = run_scenario(&c)?;
                summarize(&c, &d)
            });
            match r {
                Ok(x) => vec![
                    fmt_num(v),
                    fmt_num(x.mean),
                    x.fitted_rate.map(fmt_num).unwrap_or_else(|| "nan".into()),
                    fmt_num(x.gamma2),
                    fmt_num(x.envelope),
                    "ok".into(),
                ],
                Err(e) => {
                    log::warn!("sweep point {v}: {e}");
                    let msg = e.to_string().replace([',', '\n'], ";");
                    let mut row = vec![fmt_num(v)];
                    row.extend(std::iter::repeat_n("nan".to_string(), 4));
                    row.push(format!("error: {}", msg.trim_end_matches(';')));
                    row
                }
            }
        })
        .collect();
    let mut header = s.base.resolved.clone();
    header.insert("sweep.parameter".into(), s.parameter.name().into());
    header.insert(
        "sweep.values".into(),
        s.values.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(", "),
    );
    let mut d = Dataset::new(header, &SWEEP_COLUMNS);
    d.rows = rows;
    Ok(d)
}

fn fmt_num(v: f64) -> String {
    super::num(v)
}
