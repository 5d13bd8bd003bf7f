//! Bath spectral densities: the sub-ohmic gas form, the ohmic Debye-solvent
//! form, user tables, and the microscopic gas integral they come from.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::model::UnitSystem;
use crate::quadrature::{integrate, QuadratureResult};

/// Debye unit of dipole moment in C m.
pub const DEBYE: f64 = 3.335_640_952e-30;
/// Vacuum permittivity (F / m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Prefactor of the solvent coupling for `Δμ` in debye and `a` in ångström.
pub const DEBYE_COUPLING_RULE: f64 = 22.0;

/// `J0 sqrt(ω) e^{-ω/Λ}`, rejecting negative frequencies.
pub fn gas_closed_form(omega: f64, coupling: f64, cutoff: f64) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::NegativeFrequency(omega));
    }
    Ok(coupling * omega.sqrt() * (-omega / cutoff).exp())
}

/// `J0 ω e^{-ω/Λ}`, rejecting negative frequencies.
pub fn debye_closed_form(omega: f64, coupling: f64, cutoff: f64) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::NegativeFrequency(omega));
    }
    Ok(coupling * omega * (-omega / cutoff).exp())
}

/// A tabulated density with monotone piecewise-cubic (Fritsch–Carlson) interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    omega: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(omega: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if omega.len() != value.len() {
            return Err(invalid("table", "column lengths differ"));
        }
        if omega.len() < 2 {
            return Err(invalid("table", "needs at least two rows"));
        }
        if omega[0] < 0.0 {
            return Err(Error::NegativeFrequency(omega[0]));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("table", "frequencies must be strictly ascending"));
        }
        if let Some(v) = value.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(invalid("table", format!("negative or non-finite value {v}")));
        }
        let slope = monotone_slopes(&omega, &value);
        Ok(Self { omega, value, slope })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.omega[0], *self.omega.last().unwrap())
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.omega.iter().copied().zip(self.value.iter().copied())
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(omega >= lo && omega <= hi) {
            return Err(Error::OutsideTable { omega, lo, hi });
        }
        Ok(self.interpolate(omega))
    }

    fn interpolate(&self, omega: f64) -> f64 {
        let x = &self.omega;
        let i = match x.partition_point(|&v| v <= omega) {
            0 => 0,
            n if n >= x.len() => x.len() - 2,
            n => n - 1,
        };
        let h = x[i + 1] - x[i];
        let s = (omega - x[i]) / h;
        let (y0, y1) = (self.value[i], self.value[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        v.max(0.0)
    }

    /// The grid point with the largest value.
    fn peak(&self) -> f64 {
        let mut best = 0;
        for (i, v) in self.value.iter().enumerate() {
            if *v > self.value[best] {
                best = i;
            }
        }
        self.omega[best]
    }
}

fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / d[i];
        let b = m[i + 1] / d[i];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * a * d[i];
            m[i + 1] = tau * b * d[i];
        }
    }
    m
}

/// Read a two-column `omega<TAB>J` table; blank lines and `#` comments are skipped.
pub fn read_table(path: &Path) -> Result<TabulatedDensity> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut omega = Vec::new();
    let mut value = Vec::new();
    for (n, line) in file.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let cols: Vec<&str> = body.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Table {
                line: n + 1,
                reason: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Table {
                line: n + 1,
                reason: format!("{s:?}: {e}"),
            })
        };
        omega.push(parse(cols[0])?);
        value.push(parse(cols[1])?);
    }
    TabulatedDensity::new(omega, value)
}

/// Render a table in the same format `read_table` accepts.
pub fn format_table(rows: impl IntoIterator<Item = (f64, f64)>, comment: &str) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for (w, j) in rows {
        let _ = writeln!(out, "{w:e}\t{j:e}");
    }
    out
}

/// Spectral density of the bath.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    SubOhmicGas { coupling: f64, cutoff: f64 },
    OhmicDebye { coupling: f64, cutoff: f64 },
    Tabulated(Arc<TabulatedDensity>),
}

impl SpectralDensity {
    pub fn sub_ohmic_gas(coupling: f64, cutoff: f64) -> Result<Self> {
        check_closed(coupling, cutoff)?;
        Ok(Self::SubOhmicGas { coupling, cutoff })
    }

    pub fn ohmic_debye(coupling: f64, cutoff: f64) -> Result<Self> {
        check_closed(coupling, cutoff)?;
        Ok(Self::OhmicDebye { coupling, cutoff })
    }

    pub fn tabulated(table: TabulatedDensity) -> Self {
        Self::Tabulated(Arc::new(table))
    }

    /// A density that vanishes identically.
    pub fn zero() -> Self {
        Self::OhmicDebye {
            coupling: 0.0,
            cutoff: 1.0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::SubOhmicGas { .. } => "sub-ohmic-gas",
            Self::OhmicDebye { .. } => "ohmic-debye",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn coupling(&self) -> Option<f64> {
        match *self {
            Self::SubOhmicGas { coupling, .. } | Self::OhmicDebye { coupling, .. } => Some(coupling),
            Self::Tabulated(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coupling() == Some(0.0)
    }

    /// Low-frequency exponent `s` in `J ∝ ω^s`.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Self::SubOhmicGas { .. } => Some(0.5),
            Self::OhmicDebye { .. } => Some(1.0),
            Self::Tabulated(_) => None,
        }
    }

    /// Characteristic frequency: the cut-off, or the table's peak.
    pub fn cutoff(&self) -> f64 {
        match self {
            Self::SubOhmicGas { cutoff, .. } | Self::OhmicDebye { cutoff, .. } => *cutoff,
            Self::Tabulated(t) => {
                let (lo, hi) = t.range();
                t.peak().max(0.01 * (hi - lo)).max(f64::MIN_POSITIVE)
            }
        }
    }

    /// Frequency of the maximum.
    pub fn peak(&self) -> f64 {
        match self {
            Self::SubOhmicGas { cutoff, .. } => 0.5 * cutoff,
            Self::OhmicDebye { cutoff, .. } => *cutoff,
            Self::Tabulated(t) => t.peak(),
        }
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        match self {
            Self::SubOhmicGas { coupling, cutoff } => gas_closed_form(omega, *coupling, *cutoff),
            Self::OhmicDebye { coupling, cutoff } => debye_closed_form(omega, *coupling, *cutoff),
            Self::Tabulated(t) => t.eval(omega),
        }
    }

    /// Value without domain checks: zero outside the support. Used as a quadrature weight.
    pub fn value(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        match self {
            Self::SubOhmicGas { coupling, cutoff } => coupling * omega.sqrt() * (-omega / cutoff).exp(),
            Self::OhmicDebye { coupling, cutoff } => coupling * omega * (-omega / cutoff).exp(),
            Self::Tabulated(t) => {
                let (lo, hi) = t.range();
                if omega < lo || omega > hi {
                    0.0
                } else {
                    t.interpolate(omega)
                }
            }
        }
    }

    /// `(lower, upper)` of the support; `upper` is `None` for the exponential tails.
    pub fn support(&self) -> (f64, Option<f64>) {
        match self {
            Self::Tabulated(t) => {
                let (lo, hi) = t.range();
                (lo, Some(hi))
            }
            _ => (0.0, None),
        }
    }
}

fn check_closed(coupling: f64, cutoff: f64) -> Result<()> {
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(invalid("coupling", format!("must be non-negative, got {coupling}")));
    }
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(invalid("cutoff", format!("must be positive, got {cutoff}")));
    }
    Ok(())
}

/// `dJ/dω`: analytic for the closed forms, central differences for tables.
pub fn spectral_derivative(omega: f64, j: &SpectralDensity) -> Result<f64> {
    match j {
        SpectralDensity::SubOhmicGas { coupling, cutoff } => {
            if omega <= 0.0 {
                return Err(if omega < 0.0 { Error::NegativeFrequency(omega) } else { Error::DerivativePole });
            }
            Ok(coupling * (-omega / cutoff).exp() * (0.5 / omega.sqrt() - omega.sqrt() / cutoff))
        }
        SpectralDensity::OhmicDebye { coupling, cutoff } => {
            if omega < 0.0 {
                return Err(Error::NegativeFrequency(omega));
            }
            Ok(coupling * (-omega / cutoff).exp() * (1.0 - omega / cutoff))
        }
        SpectralDensity::Tabulated(t) => {
            let (lo, hi) = t.range();
            t.eval(omega)?;
            let step = 1e-6 * (hi - lo);
            let a = (omega - step).max(lo);
            let b = (omega + step).min(hi);
            Ok((t.interpolate(b) - t.interpolate(a)) / (b - a))
        }
    }
}

/// Microscopic description of a dilute classical buffer gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasMicroParams {
    pub number_density: f64,
    pub thermal_energy: f64,
    pub interaction_range: f64,
    pub h: f64,
}

impl GasMicroParams {
    pub fn new(number_density: f64, thermal_energy: f64, interaction_range: f64, h: f64) -> Result<Self> {
        for (name, v) in [
            ("number_density", number_density),
            ("thermal_energy", thermal_energy),
            ("interaction_range", interaction_range),
            ("h", h),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(Self {
            number_density,
            thermal_energy,
            interaction_range,
            h,
        })
    }

    /// Build from the two correlation times instead of `E_th` and `R`.
    pub fn from_times(number_density: f64, t_c: f64, t_q: f64, h: f64) -> Result<Self> {
        if !(t_c > 0.0 && t_q > 0.0) {
            return Err(invalid("correlation_time", "t_c and t_Q must be positive"));
        }
        let e = h / t_q;
        Self::new(number_density, e, t_c * (2.0 * e).sqrt(), h)
    }

    /// Classical correlation time `(R² / 2E_th)^{1/2}`.
    pub fn t_c(&self) -> f64 {
        (self.interaction_range.powi(2) / (2.0 * self.thermal_energy)).sqrt()
    }

    /// Quantum correlation time `h / E_th`.
    pub fn t_q(&self) -> f64 {
        self.h / self.thermal_energy
    }

    /// Whether `(t_Q / t_c)² < 10⁻²`, the regime where the closed form applies.
    pub fn is_valid(&self) -> bool {
        (self.t_q() / self.t_c()).powi(2) < 1e-2
    }
}

/// Closed-form parameters fitted to the microscopic gas integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasFit {
    pub coupling: f64,
    pub cutoff: f64,
    /// `C` in `J0 = C ρ E_th^{-3/4}`.
    pub constant: f64,
}

/// The microscopic gas integral with a Gaussian form factor `e^{-q²}`,
///
/// `(ρ t_c / R) e^{ω t_Q} ∫_0^∞ dq e^{-q²}/q · exp[-(ω² t_c²/q² + t_Q² q²/t_c²)]`.
///
/// Integrated in `q = e^s`, which makes the integrand a smooth double
/// exponential. The integral diverges logarithmically as `ω → 0`, so `ω = 0`
/// is rejected.
pub fn gas_micro_integral(omega: f64, g: &GasMicroParams, density: f64) -> Result<QuadratureResult> {
    if omega < 0.0 {
        return Err(Error::NegativeFrequency(omega));
    }
    if omega == 0.0 {
        return Err(invalid("omega", "the microscopic integral diverges at omega = 0"));
    }
    let (tc, tq) = (g.t_c(), g.t_q());
    let a = (omega * tc).powi(2);
    let b = 1.0 + (tq / tc).powi(2);
    let shift = omega * tq;
    // Exponent -(a e^{-2s} + b e^{2s}) is maximal at s0 = ln(a/b)/4.
    let s0 = 0.25 * (a / b).ln();
    let f = move |s: f64| (shift - a * (-2.0 * s).exp() - b * (2.0 * s).exp()).exp();
    // Beyond these the exponent is below -745 on both sides.
    let lo = s0 - 0.5 * (800.0 / (a * b).sqrt().max(1e-300)).ln().max(1.0) - 1.0;
    let hi = s0 + 0.5 * (800.0 / (a * b).sqrt().max(1e-300)).ln().max(1.0) + 1.0;
    let mut r = integrate(f, lo, hi, 1e-10, 0.0);
    let pre = density * tc / g.interaction_range;
    r.value *= pre;
    r.error_estimate *= pre;
    if !r.converged {
        return Err(Error::NoConvergence {
            value: r.value,
            error: r.error_estimate,
            subdivisions: r.subdivisions,
        });
    }
    Ok(r)
}

/// `Λ = 2 / (4 t_c − t_Q)` and `J0 = C ρ E_th^{-3/4}`, with `C` the least-squares
/// match of the closed form to [`gas_micro_integral`] on `ω ∈ [0.1Λ, 5Λ]`.
pub fn gas_params_from_micro(g: &GasMicroParams) -> Result<GasFit> {
    let (tc, tq) = (g.t_c(), g.t_q());
    if 4.0 * tc <= tq {
        return Err(invalid("correlation_time", format!("need 4 t_c > t_Q, got t_c={tc}, t_Q={tq}")));
    }
    if !g.is_valid() {
        log::warn!("gas closed form used outside t_Q² << t_c² (t_c={tc}, t_Q={tq})");
    }
    let cutoff = 2.0 / (4.0 * tc - tq);
    let scale = g.number_density * g.thermal_energy.powf(-0.75);
    let (mut num, mut den) = (0.0, 0.0);
    for omega in fit_grid(cutoff) {
        let micro = gas_micro_integral(omega, g, g.number_density)?.value;
        let shape = scale * omega.sqrt() * (-omega / cutoff).exp();
        num += micro * shape;
        den += shape * shape;
    }
    let constant = num / den;
    Ok(GasFit {
        coupling: constant * scale,
        cutoff,
        constant,
    })
}

/// Frequencies on which the gas constant is fitted.
pub fn fit_grid(cutoff: f64) -> impl Iterator<Item = f64> {
    const N: usize = 50;
    (0..N).map(move |i| cutoff * (0.1 + 4.9 * i as f64 / (N - 1) as f64))
}

/// Macroscopic description of a polar solvent in the Onsager cavity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebyeSolventParams {
    /// Change of dipole moment between the enantiomers (debye).
    pub dipole_change: f64,
    /// Cavity radius (ångström).
    pub onsager_radius: f64,
    pub static_dielectric: f64,
    pub high_freq_dielectric: f64,
    /// Debye relaxation time (s).
    pub debye_time: f64,
}

impl DebyeSolventParams {
    /// Water at room temperature with the given solute parameters.
    pub fn water(dipole_change: f64, onsager_radius: f64) -> Self {
        Self {
            dipole_change,
            onsager_radius,
            static_dielectric: 78.3,
            high_freq_dielectric: 4.21,
            debye_time: 8.2e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.static_dielectric > self.high_freq_dielectric && self.high_freq_dielectric > 1.0) {
            return Err(invalid("dielectric", "need eps_s > eps_inf > 1"));
        }
        if !(self.debye_time > 0.0) {
            return Err(invalid("debye_time", "must be positive"));
        }
        if !(self.onsager_radius > 0.0) {
            return Err(invalid("onsager_radius", "must be positive"));
        }
        if !self.dipole_change.is_finite() {
            return Err(invalid("dipole_change", "must be finite"));
        }
        Ok(())
    }
}

/// Ohmic parameters of a Debye solvent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebyeFit {
    /// `22 (Δμ)² / a³` with `Δμ` in debye and `a` in ångström.
    pub coupling: f64,
    /// The unrounded Onsager expression in units of `U0`.
    pub coupling_onsager: f64,
    pub cutoff: f64,
}

/// `Λ = τ0 (2ε_s + 1) / (τ_D (2ε_∞ + 1))` and the solvent coupling.
pub fn debye_params(d: &DebyeSolventParams, units: &UnitSystem) -> Result<DebyeFit> {
    d.validate()?;
    let tau0 = units.time();
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(invalid("tau0", format!("must be positive, got {tau0}")));
    }
    let (es, ei) = (d.static_dielectric, d.high_freq_dielectric);
    let cutoff = tau0 * (2.0 * es + 1.0) / (d.debye_time * (2.0 * ei + 1.0));
    let mu = d.dipole_change * DEBYE;
    let a = d.onsager_radius * 1e-10;
    let reaction = mu * mu / (4.0 * std::f64::consts::PI * EPSILON_0 * a.powi(3)) / units.energy;
    let coupling_onsager = reaction * 6.0 * (es - ei) / ((2.0 * es + 1.0) * (2.0 * ei + 1.0) * cutoff);
    let coupling = DEBYE_COUPLING_RULE * d.dipole_change.powi(2) / d.onsager_radius.powi(3);
    Ok(DebyeFit {
        coupling,
        coupling_onsager,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn closed_form_examples() {
        assert_eq!(gas_closed_form(0.0, 1.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(gas_closed_form(0.5, 2.0, 0.5).unwrap(), 2.0 * 0.5f64.sqrt() / E, max_relative = 1e-15);
        assert_eq!(debye_closed_form(0.0, 1.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(debye_closed_form(0.01, 10.0, 0.01).unwrap(), 0.1 / E, max_relative = 1e-15);
        assert_relative_eq!(
            debye_closed_form(1e-3, 10.0, 0.01).unwrap(),
            10.0 * 1e-3 * (-0.1f64).exp(),
            max_relative = 1e-15
        );
        assert!(matches!(gas_closed_form(-1.0, 1.0, 1.0), Err(Error::NegativeFrequency(_))));
        assert!(matches!(debye_closed_form(-1e-9, 1.0, 1.0), Err(Error::NegativeFrequency(_))));
    }

    #[test]
    fn peaks_by_grid_search() {
        for (j, want) in [
            (SpectralDensity::sub_ohmic_gas(1.0, 0.5).unwrap(), 0.25),
            (SpectralDensity::ohmic_debye(1.0, 0.01).unwrap(), 0.01),
        ] {
            let hi = 20.0 * j.cutoff();
            let best = (1..200_000)
                .map(|i| hi * i as f64 / 200_000.0)
                .max_by(|a, b| j.value(*a).total_cmp(&j.value(*b)))
                .unwrap();
            assert_relative_eq!(best, want, max_relative = 1e-3);
            assert_eq!(j.peak(), want);
        }
    }

    #[test]
    fn derivative_examples() {
        let ohm = SpectralDensity::ohmic_debye(3.0, 0.01).unwrap();
        assert!(spectral_derivative(0.01, &ohm).unwrap().abs() < 1e-14);
        let gas = SpectralDensity::sub_ohmic_gas(1.0, 0.5).unwrap();
        assert!(spectral_derivative(0.25, &gas).unwrap().abs() < 1e-14);
        assert!(matches!(spectral_derivative(0.0, &gas), Err(Error::DerivativePole)));
        for j in [ohm, gas] {
            let w = j.cutoff() / 3.0;
            let h = 1e-6 * w;
            let fd = (j.value(w + h) - j.value(w - h)) / (2.0 * h);
            assert_relative_eq!(spectral_derivative(w, &j).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn low_frequency_slopes() {
        for (j, s) in [
            (SpectralDensity::sub_ohmic_gas(1.0, 0.5).unwrap(), 0.5),
            (SpectralDensity::ohmic_debye(1.0, 0.01).unwrap(), 1.0),
        ] {
            let (a, b) = (1e-4 * j.cutoff(), 2e-4 * j.cutoff());
            let slope = (j.value(b) / j.value(a)).ln() / 2f64.ln();
            assert!((slope - s).abs() < 0.02, "{slope}");
        }
    }

    #[test]
    fn table_interpolation_and_bounds() {
        let w: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let v: Vec<f64> = w.iter().map(|x| x * (-x).exp()).collect();
        let t = TabulatedDensity::new(w.clone(), v.clone()).unwrap();
        for (x, y) in w.iter().zip(&v) {
            assert_relative_eq!(t.eval(*x).unwrap(), *y, epsilon = 1e-15);
        }
        assert_relative_eq!(t.eval(0.73).unwrap(), 0.73 * (-0.73f64).exp(), max_relative = 1e-3);
        assert!(matches!(t.eval(2.5), Err(Error::OutsideTable { .. })));
        let j = SpectralDensity::tabulated(t);
        assert_relative_eq!(spectral_derivative(0.5, &j).unwrap(), 0.5 * (-0.5f64).exp(), max_relative = 1e-2);
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.tsv");
        let rows: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, (i as f64 * 0.1).sqrt())).collect();
        std::fs::write(&path, format_table(rows.clone(), "test table\nsecond line")).unwrap();
        let t = read_table(&path).unwrap();
        assert_eq!(t.rows().collect::<Vec<_>>(), rows);
        std::fs::write(&path, "0\t1\n1\tx\n").unwrap();
        assert!(matches!(read_table(&path), Err(Error::Table { line: 2, .. })));
        std::fs::write(&path, "0\t1\n0\t2\n").unwrap();
        assert!(read_table(&path).is_err());
    }

    #[test]
    fn micro_integral_matches_bessel_form() {
        // The q-integral is K0(2 ω t_c sqrt(1 + t_Q²/t_c²)).
        let g = GasMicroParams::from_times(1.0, 1.0, 0.1, 0.1).unwrap();
        let pre = g.t_c() / g.interaction_range;
        // K0(x) values from Abramowitz & Stegun table 9.8
        for (x, k0) in [(0.5, 0.924_419_071_2), (1.0, 0.421_024_438_2), (2.0, 0.113_893_872_7)] {
            let omega = x / (2.0 * 1.01f64.sqrt());
            let got = gas_micro_integral(omega, &g, 1.0).unwrap().value;
            let want = pre * (omega * g.t_q()).exp() * k0;
            assert_relative_eq!(got, want, max_relative = 1e-8);
        }
        assert!(gas_micro_integral(0.0, &g, 1.0).is_err());
    }

    #[test]
    fn micro_integral_linear_in_density() {
        let g = GasMicroParams::from_times(1.0, 2.0, 0.1, 0.1).unwrap();
        let a = gas_micro_integral(0.2, &g, 1.5).unwrap().value;
        let b = gas_micro_integral(0.2, &g, 3.0).unwrap().value;
        assert_eq!(2.0 * a, b);
    }

    #[test]
    fn gas_cutoff_examples() {
        let g = GasMicroParams::from_times(1.0, 1.0, 0.1, 0.1).unwrap();
        let fit = gas_params_from_micro(&g).unwrap();
        assert_relative_eq!(fit.cutoff, 2.0 / 3.9, max_relative = 1e-12);
        assert!(fit.cutoff > 0.5 && fit.coupling > 0.0);
        let g = GasMicroParams::from_times(1.0, 1.0, 1e-9, 0.1).unwrap();
        assert_relative_eq!(gas_params_from_micro(&g).unwrap().cutoff, 0.5, max_relative = 1e-8);
        let g = GasMicroParams::from_times(1.0, 0.1, 1.0, 0.1).unwrap();
        assert!(gas_params_from_micro(&g).is_err());
    }

    #[test]
    fn gas_times_at_room_temperature() {
        let u = UnitSystem::table_one();
        let e = u.thermal_energy(300.0);
        let g = GasMicroParams::new(1e-3, e, 2.0, u.reduced_planck()).unwrap();
        // h / k_B T at 300 K is 2.5e-14 s, i.e. about 2.4 tau0.
        assert_relative_eq!(g.t_q(), 2.55, max_relative = 0.01);
    }

    #[test]
    fn debye_water() {
        let u = UnitSystem::table_one();
        let fit = debye_params(&DebyeSolventParams::water(0.6, 1.0), &u).unwrap();
        assert!(fit.cutoff >= 0.01 && fit.cutoff <= 0.03, "{}", fit.cutoff);
        assert_relative_eq!(fit.coupling, 7.92, max_relative = 1e-14);
        let weak = debye_params(&DebyeSolventParams::water(0.2, 1.0), &u).unwrap();
        assert_relative_eq!(weak.coupling, 0.88, max_relative = 1e-14);
        let mut bad = DebyeSolventParams::water(0.6, 1.0);
        bad.high_freq_dielectric = 90.0;
        assert!(debye_params(&bad, &u).is_err());
    }

    proptest! {
        #[test]
        fn debye_monotone(td in 1e-13f64..1e-10, a in 0.5f64..5.0, k in 1.01f64..3.0) {
            let u = UnitSystem::table_one();
            let mut d = DebyeSolventParams::water(0.6, a);
            d.debye_time = td;
            let base = debye_params(&d, &u).unwrap();
            let mut slower = d;
            slower.debye_time = td * k;
            prop_assert!(debye_params(&slower, &u).unwrap().cutoff < base.cutoff);
            let mut wider = d;
            wider.onsager_radius = a * k;
            prop_assert!(debye_params(&wider, &u).unwrap().coupling < base.coupling);
        }

        #[test]
        fn densities_non_negative(j0 in 0.0f64..50.0, cut in 1e-4f64..2.0, x in 0.0f64..100.0) {
            let w = x * cut;
            prop_assert!(SpectralDensity::sub_ohmic_gas(j0, cut).unwrap().eval(w).unwrap() >= 0.0);
            prop_assert!(SpectralDensity::ohmic_debye(j0, cut).unwrap().eval(w).unwrap() >= 0.0);
        }

        #[test]
        fn table_positive(vals in proptest::collection::vec(0.0f64..5.0, 3..30), x in 0.0f64..1.0) {
            let n = vals.len();
            let w: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let t = TabulatedDensity::new(w, vals).unwrap();
            prop_assert!(t.eval(x * (n - 1) as f64).unwrap() >= 0.0);
        }
    }
}
