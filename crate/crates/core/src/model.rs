//! Dimensionless units, the asymmetric double well, and its two-level reduction.
//!
//! Lengths are measured in the well separation `R0`, energies in the barrier
//! scale `U0`, and times in `tau0 = R0 / sqrt(U0 / M)`. In these units the
//! commutator is `[x, p] = i h` with the reduced Planck constant
//! `h = hbar / (U0 tau0)`.
//!
//! The two-level gap `(Δ² + δ²)^{1/2}` is used directly as an angular
//! frequency: every phase in the crate is `gap * t`, with `h` absorbed.

use std::f64::consts::FRAC_PI_4;

use crate::error::{invalid, Result};

/// CODATA reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J / K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Physical scales of the double-well coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// Effective mass `M` (kg).
    pub mass: f64,
    /// Characteristic energy `U0` (J).
    pub energy: f64,
    /// Characteristic length `R0` (m).
    pub length: f64,
}

impl UnitSystem {
    pub fn new(mass: f64, energy: f64, length: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("energy", energy), ("length", length)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(Self {
            mass,
            energy,
            length,
        })
    }

    /// Order-of-magnitude scales of a small chiral molecule such as NHDT.
    pub fn table_one() -> Self {
        Self {
            mass: 1e-27,
            energy: 1e-19,
            length: 1e-10,
        }
    }

    /// Unit of time `tau0` (s).
    pub fn time(&self) -> f64 {
        self.length / (self.energy / self.mass).sqrt()
    }

    /// Unit of momentum `P0` (kg m / s).
    pub fn momentum(&self) -> f64 {
        (self.mass * self.energy).sqrt()
    }

    /// Dimensionless reduced Planck constant `hbar / (U0 tau0)`.
    pub fn reduced_planck(&self) -> f64 {
        HBAR / (self.energy * self.time())
    }

    /// Dimensionless thermal energy `k_B T / U0` for `T` in kelvin.
    pub fn thermal_energy(&self, temperature: f64) -> f64 {
        BOLTZMANN * temperature / self.energy
    }

    pub fn scales(&self) -> Scales {
        Scales {
            tau0: self.time(),
            h: self.reduced_planck(),
            thermal_energy: None,
        }
    }
}

/// The two numbers the two-level reduction actually needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    /// Unit of time in seconds.
    pub tau0: f64,
    /// Reduced Planck constant.
    pub h: f64,
    /// Optional thermal energy, only used for the validity warning.
    pub thermal_energy: Option<f64>,
}

impl Scales {
    /// The rounded values the figures are parameterized by: `tau0 = 1e-14 s`, `h = 0.1`.
    pub fn table_one() -> Self {
        Self {
            tau0: 1e-14,
            h: 0.1,
            thermal_energy: None,
        }
    }
}

/// Quartic double well with a linear tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub asymmetry: f64,
    /// Harmonic frequency at the bottom of each well (rad/s).
    pub harmonic_frequency: f64,
    /// Well separation `R0` (m).
    pub well_separation: f64,
}

/// `U(x) / U0 = (x² − 1)² − 1 − η x`.
pub fn potential_value(x: f64, p: &PotentialParams) -> f64 {
    let s = x * x - 1.0;
    s * s - 1.0 - p.asymmetry * x
}

/// Energy eigenstate of the isolated molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    /// `|1> = cos θ |R> + sin θ |L>`, energy `−gap/2`.
    Ground,
    /// `|2> = sin θ |R> − cos θ |L>`, energy `+gap/2`.
    Excited,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Ground => 1,
            Level::Excited => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Level::Ground => Level::Excited,
            Level::Excited => Level::Ground,
        }
    }

    pub fn from_index(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Level::Ground),
            2 => Ok(Level::Excited),
            _ => Err(invalid("level", format!("expected 1 or 2, got {n}"))),
        }
    }
}

/// Two-level chiral molecule `H_M = −Δ σx − δ σz` in the chiral basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoleculeParams {
    pub tunneling: f64,
    pub localization: f64,
    pub h: f64,
}

impl MoleculeParams {
    pub fn new(tunneling: f64, localization: f64, h: f64) -> Result<Self> {
        if !(tunneling > 0.0 && tunneling.is_finite()) {
            return Err(invalid("tunneling", format!("must be positive, got {tunneling}")));
        }
        if !localization.is_finite() {
            return Err(invalid("localization", "must be finite"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("must be positive, got {h}")));
        }
        Ok(Self {
            tunneling,
            localization,
            h,
        })
    }

    /// `Δ = 1e-3`, `h = 0.1` with the given localization strength.
    pub fn table_one(localization: f64) -> Self {
        Self {
            tunneling: 1e-3,
            localization,
            h: 0.1,
        }
    }

    /// `θ = ½ arctan(Δ/δ)`, with the limit `π/4` at `δ = 0`.
    pub fn mixing_angle(&self) -> f64 {
        if self.localization == 0.0 {
            FRAC_PI_4
        } else {
            0.5 * (self.tunneling / self.localization).atan()
        }
    }

    /// `Ω21 = (Δ² + δ²)^{1/2}`.
    pub fn gap(&self) -> f64 {
        self.tunneling.hypot(self.localization)
    }

    /// `Ω_mn = E_m − E_n`.
    pub fn transition(&self, m: Level, n: Level) -> f64 {
        self.energy(m) - self.energy(n)
    }

    pub fn energy(&self, n: Level) -> f64 {
        match n {
            Level::Ground => -0.5 * self.gap(),
            Level::Excited => 0.5 * self.gap(),
        }
    }

    /// `<m|σz|n>` in the energy basis.
    pub fn sigma(&self, m: Level, n: Level) -> f64 {
        let two_theta = 2.0 * self.mixing_angle();
        match (m, n) {
            (Level::Ground, Level::Ground) => two_theta.cos(),
            (Level::Excited, Level::Excited) => -two_theta.cos(),
            _ => two_theta.sin(),
        }
    }

    /// `sin²(2θ) = Δ² / (Δ² + δ²)`.
    pub fn sin2_two_theta(&self) -> f64 {
        let s = (2.0 * self.mixing_angle()).sin();
        s * s
    }

    /// Amplitudes `(<1|L>, <2|L>) = (sin θ, −cos θ)`.
    pub fn left_amplitudes(&self) -> (f64, f64) {
        let th = self.mixing_angle();
        (th.sin(), -th.cos())
    }

    /// Amplitudes `(<R|1>, <R|2>) = (cos θ, sin θ)`.
    pub fn right_amplitudes(&self) -> (f64, f64) {
        let th = self.mixing_angle();
        (th.cos(), th.sin())
    }

    /// Envelope `Δ² / (Δ² + δ²)` of the isolated tunneling oscillation.
    pub fn tunneling_amplitude(&self) -> f64 {
        let d2 = self.tunneling * self.tunneling;
        d2 / (d2 + self.localization * self.localization)
    }
}

/// Two-level parameters from the well frequency `omega` (rad/s) and asymmetry `eta`.
///
/// `Δ = h Ω τ0 / 4`, `δ = η (h / (2 Ω τ0))^{1/2}`. A warning is logged when the
/// thermal energy is not small against `Ω τ0 h`.
pub fn derive_two_level(omega: f64, eta: f64, scales: &Scales) -> Result<MoleculeParams> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    let w = omega * scales.tau0;
    let h = scales.h;
    if let Some(e_th) = scales.thermal_energy {
        if e_th >= w * h {
            log::warn!(
                "two-level reduction questionable: thermal energy {e_th:e} >= omega*tau0*h = {:e}",
                w * h
            );
        }
    }
    if w * h >= 1.0 {
        log::warn!("two-level reduction questionable: omega*tau0*h = {:e} is not small", w * h);
    }
    MoleculeParams::new(h * w / 4.0, eta * (h / (2.0 * w)).sqrt(), h)
}

/// Closed-system probability of finding the molecule right-handed after starting left-handed.
pub fn isolated_tunneling_probability(m: &MoleculeParams, t: f64) -> f64 {
    let s = (0.5 * m.gap() * t).sin();
    m.tunneling_amplitude() * s * s
}
