//! Second-order perturbative dynamics of the two-level molecule in a zero
//! temperature bath.
//!
//! The reduced state is carried by the two bath vectors `χ1`, `χ2` attached
//! to the energy levels. Their norms `P1`, `P2` and overlap `<χ1|χ2>` give the
//! right-handed probability
//!
//! `P_R = cos²θ P1 + sin²θ P2 + sin2θ Re<χ1|χ2>`.
//!
//! Decay is resummed (`Γt → 1 − e^{−Γt}`) so the populations stay bounded.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{Level, MoleculeParams};
use crate::quadrature::{spectral_integral, Kernel, DEFAULT_REL_TOL};
use crate::spectral::{spectral_derivative, SpectralDensity};

/// Initial molecular state; the bath starts in its vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Left,
    Right,
    /// Amplitudes on the lower and upper energy levels; normalized on use.
    Energy(Complex64, Complex64),
}

impl InitialState {
    /// Normalized energy-basis amplitudes `(a1, a2)`.
    pub fn amplitudes(&self, m: &MoleculeParams) -> Result<(Complex64, Complex64)> {
        let (a1, a2) = match *self {
            InitialState::Left => {
                let (a, b) = m.left_amplitudes();
                (Complex64::from(a), Complex64::from(b))
            }
            InitialState::Right => {
                let (a, b) = m.right_amplitudes();
                (Complex64::from(a), Complex64::from(b))
            }
            InitialState::Energy(a, b) => (a, b),
        };
        let norm = (a1.norm_sqr() + a2.norm_sqr()).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("initial_state", "zero or non-finite amplitudes"));
        }
        Ok((a1 / norm, a2 / norm))
    }
}

/// Which second-order corrections enter the overlaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dressing {
    /// Golden-rule decay of the upper level only; the form used for the figures.
    #[default]
    Leading,
    /// Adds the finite-time `sinc²` populations, the off-resonant dressing of the
    /// lower level and the one-phonon cross term of the overlap.
    Full,
}

/// Molecule, bath and initial state, plus evaluation settings.
#[derive(Debug, Clone)]
pub struct PerturbativeInputs {
    pub molecule: MoleculeParams,
    pub bath: SpectralDensity,
    pub initial: InitialState,
    pub dressing: Dressing,
    pub rel_tol: f64,
}

impl PerturbativeInputs {
    pub fn new(molecule: MoleculeParams, bath: SpectralDensity) -> Self {
        Self {
            molecule,
            bath,
            initial: InitialState::Left,
            dressing: Dressing::Leading,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_dressing(mut self, dressing: Dressing) -> Self {
        self.dressing = dressing;
        self
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// `Γ2 / Ω21`; second order needs this small.
    pub fn coupling_ratio(&self) -> Result<f64> {
        Ok(decay_rate(Level::Excited, self)? / self.molecule.gap())
    }

    pub fn is_weak_coupling(&self) -> Result<bool> {
        Ok(self.coupling_ratio()? < 0.1)
    }

    /// Whether `Ω⁻¹ ≪ t ≪ Γ2⁻¹`, taken as `10/Ω < t < 0.1/Γ2`.
    pub fn in_closed_form_window(&self, t: f64) -> Result<bool> {
        let g = decay_rate(Level::Excited, self)?;
        Ok(t > 10.0 / self.molecule.gap() && g * t < 0.1)
    }

    /// Evaluate the time-independent pieces once.
    pub fn prepare(&self) -> Result<Prepared<'_>> {
        let de1 = energy_shift(Level::Ground, self)?;
        let de2 = energy_shift(Level::Excited, self)?;
        let gamma = decay_rate(Level::Excited, self)?;
        let (a1, a2) = self.initial.amplitudes(&self.molecule)?;
        Ok(Prepared {
            inputs: self,
            shifts: [de1, de2],
            gamma,
            amplitudes: (a1, a2),
        })
    }
}

/// Second-order level shift `δE_n` in energy units (phases are `δE t / h`).
///
/// `δE_n = (1/π) Σ_{r≠n} σ_rn² Ω_rn P.V.∫ J(ω) / (ω (ω + Ω_rn)) dω`.
pub fn energy_shift(n: Level, inputs: &PerturbativeInputs) -> Result<f64> {
    let m = &inputs.molecule;
    if inputs.bath.is_zero() {
        return Ok(0.0);
    }
    let r = n.other();
    let sigma = m.sigma(r, n);
    let omega_rn = m.transition(r, n);
    if sigma == 0.0 || omega_rn == 0.0 {
        return Ok(0.0);
    }
    let over_omega = |w: f64| 1.0 / w;
    let pv = spectral_integral(
        &inputs.bath,
        Kernel::Rational,
        -omega_rn,
        0.0,
        Some(&over_omega),
        inputs.rel_tol,
    )?
    .into_value()?;
    Ok(sigma * sigma * omega_rn * pv / PI)
}

/// Golden-rule rate `Γ_n = (2/h) Σ_{m below n} σ_mn² J(Ω_nm)`; zero for the ground level.
pub fn decay_rate(n: Level, inputs: &PerturbativeInputs) -> Result<f64> {
    let m = &inputs.molecule;
    match n {
        Level::Ground => Ok(0.0),
        Level::Excited => {
            let j = inputs.bath.eval(m.gap())?;
            Ok(2.0 / m.h * m.sin2_two_theta() * j)
        }
    }
}

/// `J(Ω21) sin²2θ / (π h)`-weighted kernel integrals share this prefactor.
fn prefactor(m: &MoleculeParams) -> f64 {
    m.sin2_two_theta() / (PI * m.h)
}

/// Diagonal vacuum-to-vacuum amplitude in the interaction picture.
///
/// `u11 = e^{−i t δE1/h} (1 − i S1)`, `u22 = e^{−i t δE2/h} (e^{−Γ2 t/2} − i S2)`,
/// with `S_n` the `sin(xt)/x²` integrals around `ω = ±Ω21`.
pub fn u_vac_diagonal(n: Level, t: f64, inputs: &PerturbativeInputs) -> Result<Complex64> {
    let p = inputs.prepare()?;
    p.u_vac_diagonal(n, t)
}

/// Spectral amplitude density of the one-phonon state `|m, 1_ω>` reached from `|n, vac>`.
///
/// Its squared modulus integrated over `ω` is the transition probability.
pub fn u_alpha_element(m: Level, n: Level, omega: f64, t: f64, inputs: &PerturbativeInputs) -> Result<Complex64> {
    if !(omega > 0.0) {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    if m == n {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mol = &inputs.molecule;
    let sigma = mol.sigma(m, n);
    let j = inputs.bath.eval(omega)?;
    let x = omega + mol.transition(m, n);
    let sinc = if x == 0.0 { t } else { (0.5 * x * t).sin() / (0.5 * x) };
    let amp = (j / (PI * mol.h)).sqrt() * sigma * sinc;
    Ok(Complex64::new(0.0, amp) * Complex64::from_polar(1.0, 0.5 * x * t))
}

/// Norms and overlap of the level-resolved bath vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiOverlaps {
    pub p1: f64,
    pub p2: f64,
    /// `<χ1|χ2>` in the Schrödinger picture.
    pub coherence: Complex64,
    /// Long-time phase offset `(sin²2θ/h)(J'(Ω21) − J(Ω21)/Ω21)`.
    pub phase_shift: f64,
}

pub fn chi_overlaps(t: f64, inputs: &PerturbativeInputs) -> Result<ChiOverlaps> {
    inputs.prepare()?.chi_overlaps(t)
}

/// `P_R(t)` from the general second-order assembly, clipped to `[0, 1]`.
pub fn p_right_general(t: f64, inputs: &PerturbativeInputs) -> Result<f64> {
    inputs.prepare()?.p_right(t).map(|s| s.p_right)
}

/// Closed form valid for `Ω⁻¹ ≪ t ≪ Γ2⁻¹` in a dilute bath, starting from `|L>`:
///
/// `cos²θ P1 + sin²θ P2 − (sin²2θ/2) e^{−Γ2 t/2} cos((Ω21 + (δE2 − δE1)/h) t + ζ)`.
pub fn p_right_dilute_closed_form(t: f64, inputs: &PerturbativeInputs) -> Result<f64> {
    inputs.prepare()?.p_right_dilute(t)
}

/// Long-time phase offset `ζ`.
pub fn phase_shift(inputs: &PerturbativeInputs) -> Result<f64> {
    let m = &inputs.molecule;
    if inputs.bath.is_zero() {
        return Ok(0.0);
    }
    let w = m.gap();
    let j = inputs.bath.eval(w)?;
    let dj = spectral_derivative(w, &inputs.bath)?;
    Ok(m.sin2_two_theta() / m.h * (dj - j / w))
}

/// One time point of a perturbative trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p_right: f64,
    /// Value before clipping to `[0, 1]`.
    pub raw: f64,
    pub overlaps: ChiOverlaps,
}

/// Inputs with the shifts and the decay rate already evaluated.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub inputs: &'a PerturbativeInputs,
    /// `[δE1, δE2]`.
    pub shifts: [f64; 2],
    pub gamma: f64,
    amplitudes: (Complex64, Complex64),
}

impl Prepared<'_> {
    fn integral(&self, kernel: Kernel, pole: f64, t: f64) -> Result<f64> {
        let i = self.inputs;
        spectral_integral(&i.bath, kernel, pole, t, None, i.rel_tol)?.into_value()
    }

    /// `(S1, S2)`.
    fn sine_terms(&self, t: f64) -> Result<(f64, f64)> {
        let m = &self.inputs.molecule;
        if self.inputs.bath.is_zero() || t == 0.0 {
            return Ok((0.0, 0.0));
        }
        let c = prefactor(m);
        let w = m.gap();
        Ok((
            c * self.integral(Kernel::SineOverSquare, -w, t)?,
            c * self.integral(Kernel::SineOverSquare, w, t)?,
        ))
    }

    pub fn renormalized_frequency(&self) -> f64 {
        let m = &self.inputs.molecule;
        m.gap() + (self.shifts[1] - self.shifts[0]) / m.h
    }

    pub fn u_vac_diagonal(&self, n: Level, t: f64) -> Result<Complex64> {
        if t < 0.0 {
            return Err(invalid("time", format!("must be non-negative, got {t}")));
        }
        let h = self.inputs.molecule.h;
        let (s1, s2) = self.sine_terms(t)?;
        let (phase, body) = match n {
            Level::Ground => (self.shifts[0], Complex64::new(1.0, -s1)),
            Level::Excited => (self.shifts[1], Complex64::new((-0.5 * self.gamma * t).exp(), -s2)),
        };
        Ok(Complex64::from_polar(1.0, -t * phase / h) * body)
    }

    pub fn chi_overlaps(&self, t: f64) -> Result<ChiOverlaps> {
        if t < 0.0 {
            return Err(invalid("time", format!("must be non-negative, got {t}")));
        }
        let inputs = self.inputs;
        let m = &inputs.molecule;
        let w = m.gap();
        let (a1, a2) = self.amplitudes;
        let (n1, n2) = (a1.norm_sqr(), a2.norm_sqr());
        let live = !inputs.bath.is_zero() && t > 0.0;
        let (decay, w21, cross) = match inputs.dressing {
            Dressing::Leading => (self.gamma * t, 0.0, 0.0),
            Dressing::Full if live => {
                let c = prefactor(m);
                let d = 2.0 * c * self.integral(Kernel::SincSquared, w, t)?;
                let w21 = 2.0 * c * self.integral(Kernel::SincSquared, -w, t)?;
                let partner = move |om: f64| 4.0 * (0.5 * (om + w) * t).sin() / (om + w);
                let x = spectral_integral(&inputs.bath, Kernel::Sinc, w, 0.5 * t, Some(&partner), inputs.rel_tol)?
                    .into_value()?;
                (d, w21, c * x)
            }
            Dressing::Full => (0.0, 0.0, 0.0),
        };
        let (s1, s2) = if live { self.sine_terms(t)? } else { (0.0, 0.0) };
        let survive = (-decay).exp();
        let p1 = n1 * (1.0 - w21) + n2 * (1.0 - survive);
        let p2 = n2 * survive + n1 * w21;
        let phi = self.renormalized_frequency() * t + s2 - s1;
        let coherence = a1.conj() * a2 * (-0.5 * decay).exp() * (1.0 - 0.5 * w21) * Complex64::from_polar(1.0, -phi)
            + a2.conj() * a1 * cross;
        Ok(ChiOverlaps {
            p1,
            p2,
            coherence,
            phase_shift: phase_shift(inputs)?,
        })
    }

    pub fn p_right(&self, t: f64) -> Result<Sample> {
        let o = self.chi_overlaps(t)?;
        let th = self.inputs.molecule.mixing_angle();
        let (c, s) = (th.cos(), th.sin());
        let raw = c * c * o.p1 + s * s * o.p2 + (2.0 * th).sin() * o.coherence.re;
        Ok(Sample {
            t,
            p_right: clip(raw, t),
            raw,
            overlaps: o,
        })
    }

    /// Closed-form overlaps for a start in `|L>`.
    pub fn dilute_overlaps(&self, t: f64) -> Result<ChiOverlaps> {
        if t < 0.0 {
            return Err(invalid("time", format!("must be non-negative, got {t}")));
        }
        let th = self.inputs.molecule.mixing_angle();
        let c2 = th.cos().powi(2);
        let e = (-self.gamma * t).exp();
        let zeta = phase_shift(self.inputs)?;
        let phase = self.renormalized_frequency() * t + zeta;
        Ok(ChiOverlaps {
            p1: 1.0 - c2 * e,
            p2: c2 * e,
            coherence: Complex64::from_polar(-0.5 * (2.0 * th).sin() * (-0.5 * self.gamma * t).exp(), -phase),
            phase_shift: zeta,
        })
    }

    pub fn p_right_dilute(&self, t: f64) -> Result<f64> {
        let o = self.dilute_overlaps(t)?;
        let th = self.inputs.molecule.mixing_angle();
        let (c2, s2) = (th.cos().powi(2), th.sin().powi(2));
        Ok(c2 * o.p1 + s2 * o.p2 + (2.0 * th).sin() * o.coherence.re)
    }

    /// `P_R` on a grid of times, evaluated in parallel.
    pub fn series(&self, times: &[f64]) -> Result<Vec<Sample>> {
        times.par_iter().map(|&t| self.p_right(t)).collect()
    }
}

fn clip(p: f64, t: f64) -> f64 {
    if (0.0..=1.0).contains(&p) {
        return p;
    }
    log::debug!("P_R = {p} clipped at t = {t}");
    p.clamp(0.0, 1.0)
}

/// Exponential rate at which `|P_R − P∞|` approaches zero, from a least-squares
/// fit of `ln` of its interior local maxima against time.
///
/// Without three maxima (overdamped decay) the fit falls back to every point whose
/// deviation lies between `1e-10` and 90% of the largest one. `None` if that also
/// leaves fewer than three points.
pub fn fit_equilibration_rate(times: &[f64], values: &[f64], p_inf: f64) -> Option<f64> {
    let dev: Vec<f64> = values.iter().map(|v| (v - p_inf).abs()).collect();
    let mut pts = Vec::new();
    for i in 1..dev.len().saturating_sub(1) {
        if dev[i] > dev[i - 1] && dev[i] >= dev[i + 1] && dev[i] > 0.0 {
            pts.push((times[i], dev[i].ln()));
        }
    }
    if pts.len() < 3 {
        let top = dev.iter().copied().fold(0.0, f64::max);
        pts = times
            .iter()
            .zip(&dev)
            .filter(|(_, &d)| d > 1e-10 && d < 0.9 * top)
            .map(|(&t, &d)| (t, d.ln()))
            .collect();
    }
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::isolated_tunneling_probability;
    use approx::assert_relative_eq;

    fn ohmic(j0: f64, lambda: f64, delta: f64) -> PerturbativeInputs {
        PerturbativeInputs::new(
            MoleculeParams::table_one(delta),
            SpectralDensity::ohmic_debye(j0, lambda).unwrap(),
        )
    }

    #[test]
    fn closed_system_matches_isolated() {
        let inputs = PerturbativeInputs::new(MoleculeParams::table_one(1e-4), SpectralDensity::zero());
        let p = inputs.prepare().unwrap();
        for i in 0..=200 {
            let t = 50.0 * i as f64;
            let want = isolated_tunneling_probability(&inputs.molecule, t);
            assert!((p.p_right(t).unwrap().p_right - want).abs() < 1e-12);
            assert!((p.p_right_dilute(t).unwrap() - want).abs() < 1e-12);
        }
        assert_eq!(p.u_vac_diagonal(Level::Excited, 10.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rates() {
        let inputs = ohmic(10.0, 0.01, 1e-5);
        let m = inputs.molecule;
        let want = 20.0 * m.sin2_two_theta() * 10.0 * m.gap() * (-m.gap() / 0.01).exp();
        assert_relative_eq!(decay_rate(Level::Excited, &inputs).unwrap(), want, max_relative = 1e-14);
        assert_eq!(decay_rate(Level::Ground, &inputs).unwrap(), 0.0);
        // σ12 = 0 only in the fully localized limit; approach it.
        let far = ohmic(10.0, 0.01, 1e3);
        assert!(decay_rate(Level::Excited, &far).unwrap() < 1e-10 * want);
    }

    #[test]
    fn initial_values() {
        for d in [Dressing::Leading, Dressing::Full] {
            let inputs = ohmic(10.0, 0.01, 1e-4).with_dressing(d);
            let o = chi_overlaps(0.0, &inputs).unwrap();
            let th = inputs.molecule.mixing_angle();
            assert_relative_eq!(o.p1, th.sin().powi(2), epsilon = 1e-15);
            assert_relative_eq!(o.p2, th.cos().powi(2), epsilon = 1e-15);
            assert_relative_eq!(o.coherence.re, -0.5 * (2.0 * th).sin(), epsilon = 1e-15);
            assert!(p_right_general(0.0, &inputs).unwrap().abs() < 1e-15);
            for n in [Level::Ground, Level::Excited] {
                assert_eq!(u_vac_diagonal(n, 0.0, &inputs).unwrap(), Complex64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn ohmic_phase_shift() {
        let inputs = ohmic(10.0, 0.01, 1e-5);
        let m = inputs.molecule;
        let r = m.gap() / 0.01;
        let want = -(m.sin2_two_theta() / m.h) * 10.0 * r * (-r).exp();
        assert_relative_eq!(phase_shift(&inputs).unwrap(), want, max_relative = 1e-12);
    }

    #[test]
    fn u_alpha_examples() {
        let inputs = ohmic(1e-3, 0.01, 1e-5);
        assert_eq!(u_alpha_element(Level::Ground, Level::Excited, 1e-3, 0.0, &inputs).unwrap().norm(), 0.0);
        assert_eq!(u_alpha_element(Level::Ground, Level::Ground, 1e-3, 5.0, &inputs).unwrap().norm(), 0.0);
        assert!(u_alpha_element(Level::Ground, Level::Excited, 0.0, 5.0, &inputs).is_err());
    }

    #[test]
    fn upper_amplitude_at_lifetime() {
        let inputs = ohmic(1e-3, 0.01, 1e-5);
        let p = inputs.prepare().unwrap();
        let u = p.u_vac_diagonal(Level::Excited, 1.0 / p.gamma).unwrap();
        assert!((u.norm() / (-0.5f64).exp() - 1.0).abs() < 0.1, "{}", u.norm());
    }

    #[test]
    fn closed_form_envelope() {
        let inputs = PerturbativeInputs::new(
            MoleculeParams::table_one(1e-5),
            SpectralDensity::sub_ohmic_gas(1e-3, 0.5).unwrap(),
        );
        let p = inputs.prepare().unwrap();
        let t = 4f64.ln() / p.gamma;
        assert_relative_eq!((-0.5 * p.gamma * t).exp(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn rate_fit_recovers_exponential() {
        let times: Vec<f64> = (0..4000).map(|i| i as f64).collect();
        let vals: Vec<f64> = times.iter().map(|t| 0.5 + 0.4 * (-2e-3 * t).exp() * (0.05 * t).cos()).collect();
        assert_relative_eq!(fit_equilibration_rate(&times, &vals, 0.5).unwrap(), 2e-3, max_relative = 1e-3);
    }

    #[test]
    fn rate_fit_handles_monotone_decay() {
        let times: Vec<f64> = (0..500).map(|i| 2.0 * i as f64).collect();
        let vals: Vec<f64> = times.iter().map(|t| 0.5 + 0.35 * (-0.09 * t).exp()).collect();
        assert_relative_eq!(fit_equilibration_rate(&times, &vals, 0.5).unwrap(), 0.09, max_relative = 1e-6);
        assert!(fit_equilibration_rate(&times[..2], &vals[..2], 0.5).is_none());
    }

    #[test]
    fn dilute_overlaps_reproduce_closed_form_initial_value() {
        let p = ohmic(1e-3, 0.01, 1e-4);
        let p = p.prepare().unwrap();
        let o = p.dilute_overlaps(0.0).unwrap();
        let th = p.inputs.molecule.mixing_angle();
        assert_relative_eq!(o.p1, th.sin().powi(2), max_relative = 1e-12);
        assert!(p.p_right_dilute(0.0).unwrap().abs() < 1e-6);
    }
}
