//! Principal-value and oscillatory integrals with references computed
//! independently with 30-digit arithmetic on a dense subdivision.
#![allow(dead_code, clippy::excessive_precision)]

use chiral_core::quadrature::{pv_integrate, Kernel, PVIntegralSpec, QuadratureResult, DEFAULT_REL_TOL};
use chiral_core::spectral::SpectralDensity;

pub struct Case {
    pub name: &'static str,
    pub density: SpectralDensity,
    pub kernel: Kernel,
    pub pole: f64,
    pub t: f64,
    pub reference: f64,
}

pub fn cases() -> Vec<Case> {
    let ohmic = |j0| SpectralDensity::ohmic_debye(j0, 0.01).unwrap();
    let gas = SpectralDensity::sub_ohmic_gas(1.0, 0.5).unwrap();
    vec![
        Case {
            name: "ohmic sine/square t=100",
            density: ohmic(1.0),
            kernel: Kernel::SineOverSquare,
            pole: 1e-3,
            t: 100.0,
            reference: 0.940_743_531_448_094_660_09,
        },
        Case {
            name: "ohmic sinc² t=1e4",
            density: ohmic(10.0),
            kernel: Kernel::SincSquared,
            pole: 1e-3,
            t: 1e4,
            reference: 287.388_435_403_719_797_33,
        },
        Case {
            name: "sub-ohmic rational",
            density: gas.clone(),
            kernel: Kernel::Rational,
            pole: 1e-3,
            t: 0.0,
            reference: 1.248_307_559_763_884_622,
        },
        Case {
            name: "sub-ohmic sinc t=2000",
            density: gas.clone(),
            kernel: Kernel::Sinc,
            pole: 1e-3,
            t: 2000.0,
            reference: 0.093_414_773_795_569_471_788,
        },
        Case {
            name: "sub-ohmic sine/square, pole off domain",
            density: gas,
            kernel: Kernel::SineOverSquare,
            pole: -1e-3,
            t: 500.0,
            reference: 16.121_293_186_051_828_629,
        },
        Case {
            name: "ohmic sine/square t=2000",
            density: ohmic(10.0),
            kernel: Kernel::SineOverSquare,
            pole: 1e-3,
            t: 2000.0,
            reference: 26.637_393_367_458_720_303,
        },
    ]
}

/// `P.V. ∫₀^∞ e^{−ω} / (ω − 1) dω = −e^{−1} Ei(1)`.
pub const EXP_RATIONAL_REFERENCE: f64 = -0.697_174_883_235_066_068_765_478_682_066;

pub fn exp_rational() -> QuadratureResult {
    let w = |om: f64| (-om).exp();
    let spec = PVIntegralSpec {
        weight: &w,
        kernel: Kernel::Rational,
        pole: 1.0,
        time: 0.0,
        lower: 0.0,
        upper: 60.0,
        scale: 1.0,
        tail_error: 0.0,
    };
    pv_integrate(&spec, DEFAULT_REL_TOL).unwrap()
}
