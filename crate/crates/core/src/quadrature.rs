//! Adaptive Gauss–Kronrod quadrature and principal-value integrals with the
//! four kernels that appear in the perturbative matrix elements.
//!
//! Every kernel is a function of the detuning `x = ω − pole`:
//!
//! | kernel            | value                  | at `x = 0` |
//! |-------------------|------------------------|------------|
//! | `Sinc`            | `sin(x t) / x`         | `t`        |
//! | `SincSquared`     | `2 sin²(x t / 2) / x²` | `t² / 2`   |
//! | `SineOverSquare`  | `sin(x t) / x²`        | odd, P.V.  |
//! | `Rational`        | `1 / x`                | odd, P.V.  |
//!
//! A pole inside the domain is handled by folding `[pole − ε, pole + ε]` onto
//! `[0, ε]`, which cancels the odd singular part exactly and leaves a smooth
//! integrand.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::spectral::SpectralDensity;

/// Default relative tolerance of all principal-value evaluations.
pub const DEFAULT_REL_TOL: f64 = 1e-6;
/// Default cap on the number of adaptive subdivisions.
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 400_000;
/// Upper bound on the number of seed panels laid over an oscillatory range.
const MAX_SEED_PANELS: usize = 120_000;

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
    pub converged: bool,
}

impl QuadratureResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 0,
            converged: true,
        }
    }

    /// Value if converged, otherwise [`Error::NoConvergence`].
    pub fn into_value(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NoConvergence {
                value: self.value,
                error: self.error_estimate,
                subdivisions: self.subdivisions,
            })
        }
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    if !result.is_finite() {
        return (result, f64::INFINITY);
    }
    (result, err)
}

/// A piece of a composite integral: `∫_a^b f`, seeded with `panels` equal sub-panels.
pub struct Piece<'a> {
    pub f: Box<dyn Fn(f64) -> f64 + 'a>,
    pub a: f64,
    pub b: f64,
    pub panels: usize,
}

impl<'a> Piece<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + 'a, a: f64, b: f64, panels: usize) -> Self {
        Self {
            f: Box::new(f),
            a,
            b,
            panels: panels.max(1),
        }
    }
}

struct Segment {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod over a set of pieces sharing one error budget.
pub fn integrate_pieces(
    pieces: &[Piece<'_>],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> QuadratureResult {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut count = 0usize;
    for (i, p) in pieces.iter().enumerate() {
        if p.b == p.a {
            continue;
        }
        let w = (p.b - p.a) / p.panels as f64;
        for k in 0..p.panels {
            let a = p.a + w * k as f64;
            let b = if k + 1 == p.panels { p.b } else { a + w };
            let (value, error) = gauss_kronrod(&*p.f, a, b);
            total += value;
            total_err += error;
            count += 1;
            heap.push(Segment {
                piece: i,
                a,
                b,
                value,
                error,
            });
        }
    }
    let mut subdivisions = 0usize;
    let mut frozen_err = 0.0;
    let mut frozen_val = 0.0;
    loop {
        let target = abs_tol.max(rel_tol * total.abs());
        if !total_err.is_finite() && heap.is_empty() {
            break;
        }
        if subdivisions >= max_subdivisions {
            break;
        }
        if total_err <= target {
            total = heap.iter().map(|s| s.value).sum::<f64>() + frozen_val;
            total_err = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
            if total_err <= abs_tol.max(rel_tol * total.abs()) {
                break;
            }
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        // Intervals at the resolution limit are kept as they are.
        if mid <= seg.a || mid >= seg.b || (seg.b - seg.a) < 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            frozen_err += seg.error;
            frozen_val += seg.value;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let f = &*pieces[seg.piece].f;
        let (v1, e1) = gauss_kronrod(f, seg.a, mid);
        let (v2, e2) = gauss_kronrod(f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        subdivisions += 1;
        heap.push(Segment {
            piece: seg.piece,
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            piece: seg.piece,
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        // Running sums drift; refresh them now and then.
        if subdivisions.is_multiple_of(4096) {
            total = heap.iter().map(|s| s.value).sum::<f64>() + frozen_val;
            total_err = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
        }
    }
    let value: f64 = heap.iter().map(|s| s.value).sum::<f64>() + frozen_val;
    let error: f64 = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
    let target = abs_tol.max(rel_tol * value.abs());
    QuadratureResult {
        value,
        error_estimate: error,
        subdivisions: subdivisions + count,
        converged: error.is_finite() && error <= target,
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> QuadratureResult {
    integrate_pieces(&[Piece::new(f, a, b, 1)], rel_tol, abs_tol, DEFAULT_MAX_SUBDIVISIONS)
}

/// Kernel multiplying the spectral weight, as a function of `x = ω − pole`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Sinc,
    SincSquared,
    SineOverSquare,
    Rational,
}

impl Kernel {
    pub fn eval(self, x: f64, t: f64) -> f64 {
        match self {
            Kernel::Sinc => {
                if x == 0.0 {
                    t
                } else {
                    (x * t).sin() / x
                }
            }
            Kernel::SincSquared => {
                if x == 0.0 {
                    0.5 * t * t
                } else {
                    let s = (0.5 * x * t).sin();
                    2.0 * s * s / (x * x)
                }
            }
            // Odd kernels carry no weight at the pole in the principal-value sense.
            Kernel::SineOverSquare => {
                if x == 0.0 {
                    0.0
                } else {
                    (x * t).sin() / (x * x)
                }
            }
            Kernel::Rational => {
                if x == 0.0 {
                    0.0
                } else {
                    1.0 / x
                }
            }
        }
    }

    pub fn is_odd(self) -> bool {
        matches!(self, Kernel::SineOverSquare | Kernel::Rational)
    }

    fn oscillates(self) -> bool {
        !matches!(self, Kernel::Rational)
    }

    /// Envelope of `|K(x)|` for `|x|` large, used for tail bounds.
    fn envelope(self, x: f64) -> f64 {
        let x = x.abs().max(f64::MIN_POSITIVE);
        match self {
            Kernel::Sinc | Kernel::Rational => 1.0 / x,
            Kernel::SincSquared => 2.0 / (x * x),
            Kernel::SineOverSquare => 1.0 / (x * x),
        }
    }
}

/// A principal-value integral `P.V. ∫_lower^upper w(ω) K(ω − pole; t) dω`.
pub struct PVIntegralSpec<'a> {
    pub weight: &'a (dyn Fn(f64) -> f64 + Sync),
    pub kernel: Kernel,
    pub pole: f64,
    pub time: f64,
    pub lower: f64,
    pub upper: f64,
    /// Frequency scale of the weight (its cut-off); sets the excision radius.
    pub scale: f64,
    /// Bound on the neglected `∫_upper^∞`, added to the error estimate.
    pub tail_error: f64,
}

impl PVIntegralSpec<'_> {
    /// Tail bound for a weight that decays like `e^{−ω/Λ}` beyond `upper`.
    pub fn exponential_tail(&self, weight_at_upper: f64) -> f64 {
        weight_at_upper.abs() * self.scale * self.kernel.envelope(self.upper - self.pole)
    }
}

/// Truncation point for a weight with exponential cut-off `scale`.
///
/// At least `10 Λ`, far enough that `e^{−ω/Λ}` is below the tolerance, and at
/// least `50 / t` past the pole so the kernel's main lobes are inside.
pub fn truncation_point(scale: f64, pole: f64, t: f64, rel_tol: f64) -> f64 {
    let decay = scale * (10.0f64).max((1.0 / rel_tol).ln() + 10.0);
    let lobes = if t > 0.0 { pole + 50.0 / t } else { 0.0 };
    decay.max(lobes).max(pole + 10.0 * scale)
}

fn seed_count(len: f64, t: f64, per_period: f64) -> usize {
    if t <= 0.0 || len <= 0.0 {
        return 4;
    }
    let n = (len * t * per_period / (2.0 * PI)).ceil();
    (n as usize).clamp(4, MAX_SEED_PANELS)
}

/// Principal-value quadrature. See the module docs for the kernels and the fold.
pub fn pv_integrate(spec: &PVIntegralSpec<'_>, rel_tol: f64) -> Result<QuadratureResult> {
    if !(rel_tol > 1e-13 && rel_tol < 1e-1) {
        return Err(invalid("rel_tol", format!("{rel_tol} outside (1e-13, 1e-1)")));
    }
    if !(spec.upper > spec.lower) {
        return Err(invalid("domain", format!("[{}, {}] is empty", spec.lower, spec.upper)));
    }
    if spec.time < 0.0 {
        return Err(invalid("time", format!("must be non-negative, got {}", spec.time)));
    }
    let (lo, hi, p, t) = (spec.lower, spec.upper, spec.pole, spec.time);
    let span = hi - lo;
    if (p - lo).abs() <= 1e-14 * span || (p - hi).abs() <= 1e-14 * span {
        return Err(Error::PoleOnBoundary(p));
    }
    if t == 0.0 && spec.kernel.oscillates() {
        return Ok(QuadratureResult::zero());
    }
    let w = spec.weight;
    let k = spec.kernel;
    let direct = move |om: f64| w(om) * k.eval(om - p, t);
    let mut pieces: Vec<Piece<'_>> = Vec::new();

    // Weights with a power-law onset at ω = 0 (sub-ohmic) are integrated in
    // u = sqrt(ω − lo) on the first stretch.
    fn push_range<'a>(
        pieces: &mut Vec<Piece<'a>>,
        direct: impl Fn(f64) -> f64 + Copy + 'a,
        k: Kernel,
        (lo, a, b, t): (f64, f64, f64, f64),
        dense: bool,
    ) {
        if b <= a {
            return;
        }
        let per_period = if dense { 8.0 } else { 1.0 };
        let count = |len: f64| if k.oscillates() { seed_count(len, t, per_period) } else { 8 };
        if a == lo {
            let mut first = a + 0.5 * (b - a);
            if k.oscillates() && t > 0.0 {
                first = first.min(a + PI / t);
            }
            pieces.push(Piece::new(
                move |u: f64| 2.0 * u * direct(lo + u * u),
                0.0,
                (first - lo).sqrt(),
                4,
            ));
            if first < b {
                pieces.push(Piece::new(direct, first, b, count(b - first)));
            }
        } else {
            pieces.push(Piece::new(direct, a, b, count(b - a)));
        }
    }

    if p > lo && p < hi {
        let mut eps = 0.1 * spec.scale;
        if t > 0.0 && k.oscillates() {
            eps = eps.min(0.1 / t);
        }
        eps = eps.min(0.5 * (p - lo)).min(0.5 * (hi - p));
        // Fine panels near the pole: width <= π/(4t) within 50/t of it.
        let near = if t > 0.0 && k.oscillates() { 50.0 / t } else { 0.0 };
        let left_near = (p - eps - near).max(lo);
        let right_near = (p + eps + near).min(hi);
        push_range(&mut pieces, direct, k, (lo, lo, left_near, t), false);
        if left_near < p - eps {
            pieces.push(Piece::new(direct, left_near, p - eps, seed_count(p - eps - left_near, t, 8.0)));
        }
        let fold_panels = if k.oscillates() { seed_count(eps, t, 8.0) } else { 4 };
        if k.is_odd() {
            pieces.push(Piece::new(
                move |u: f64| (w(p + u) - w(p - u)) * k.eval(u, t),
                0.0,
                eps,
                fold_panels,
            ));
        } else {
            pieces.push(Piece::new(
                move |u: f64| (w(p + u) + w(p - u)) * k.eval(u, t),
                0.0,
                eps,
                fold_panels,
            ));
        }
        if p + eps < right_near {
            pieces.push(Piece::new(direct, p + eps, right_near, seed_count(right_near - p - eps, t, 8.0)));
        }
        push_range(&mut pieces, direct, k, (lo, right_near, hi, t), false);
    } else {
        // Pole outside the domain: ordinary quadrature, densest near the end facing the pole.
        let near = if t > 0.0 && k.oscillates() { 50.0 / t } else { 0.0 };
        if p <= lo {
            let split = (lo + near).min(hi);
            push_range(&mut pieces, direct, k, (lo, lo, split, t), true);
            push_range(&mut pieces, direct, k, (lo, split, hi, t), false);
        } else {
            let split = (hi - near).max(lo);
            push_range(&mut pieces, direct, k, (lo, lo, split, t), false);
            push_range(&mut pieces, direct, k, (lo, split, hi, t), true);
        }
    }

    // The tail bound is added afterwards, so leave it some room.
    let abs_floor = 1e-300 + 2.0 * spec.tail_error;
    let mut res = integrate_pieces(&pieces, 0.9 * rel_tol, abs_floor, DEFAULT_MAX_SUBDIVISIONS);
    res.error_estimate += spec.tail_error;
    res.converged = res.error_estimate.is_finite()
        && res.error_estimate <= (rel_tol * res.value.abs()).max(abs_floor + spec.tail_error);
    Ok(res)
}

/// `∫ J(ω) f(ω) K(ω − pole; t) dω` over the support of `J`, with an optional
/// extra smooth factor `f`. Closed forms are truncated per [`truncation_point`].
pub fn spectral_integral(
    j: &SpectralDensity,
    kernel: Kernel,
    pole: f64,
    t: f64,
    factor: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    if t < 0.0 {
        return Err(invalid("time", format!("must be non-negative, got {t}")));
    }
    if j.is_zero() || (t == 0.0 && kernel.oscillates()) {
        return Ok(QuadratureResult::zero());
    }
    let weight = |om: f64| {
        let v = j.value(om);
        match factor {
            Some(f) if v != 0.0 => v * f(om),
            _ => v,
        }
    };
    let (lower, upper) = j.support();
    let scale = j.cutoff();
    let (upper, tail) = match upper {
        Some(hi) => (hi, 0.0),
        None => {
            let hi = truncation_point(scale, pole, t, rel_tol);
            let bound = factor.map_or(1.0, |f| f(hi).abs().max(f(2.0 * hi).abs()).max(1.0));
            (hi, j.value(hi) * bound)
        }
    };
    let mut spec = PVIntegralSpec {
        weight: &weight,
        kernel,
        pole,
        time: t,
        lower,
        upper,
        scale,
        tail_error: 0.0,
    };
    spec.tail_error = spec.exponential_tail(tail);
    pv_integrate(&spec, rel_tol)
}

/// `∫ J(ω) 2 sin²((ω − Ω)t/2) / (ω − Ω)² dω`, tending to `π t J(Ω)` for `Ω` inside the support.
pub fn sinc_squared_integral(j: &SpectralDensity, pole: f64, t: f64) -> Result<f64> {
    spectral_integral(j, Kernel::SincSquared, pole, t, None, DEFAULT_REL_TOL)?.into_value()
}

/// `P.V. ∫ J(ω) sin((ω − Ω)t) / (ω − Ω)² dω`.
pub fn sine_over_square_integral(j: &SpectralDensity, pole: f64, t: f64) -> Result<f64> {
    spectral_integral(j, Kernel::SineOverSquare, pole, t, None, DEFAULT_REL_TOL)?.into_value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kronrod_exact_on_polynomials() {
        for deg in 0..=20 {
            let r = gauss_kronrod(&|x: f64| x.powi(deg), 0.0, 1.0).0;
            assert_relative_eq!(r, 1.0 / (deg as f64 + 1.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 0.0);
        assert!(r.converged);
        assert_relative_eq!(r.value, 2.0 / 3.0, max_relative = 1e-11);
    }

    #[test]
    fn odd_kernel_on_symmetric_window_vanishes() {
        let one = |_: f64| 1.0;
        for (pole, a) in [(1.0, 0.5), (3.0, 2.0), (0.2, 0.1)] {
            let spec = PVIntegralSpec {
                weight: &one,
                kernel: Kernel::Rational,
                pole,
                time: 0.0,
                lower: pole - a,
                upper: pole + a,
                scale: 1.0,
                tail_error: 0.0,
            };
            let r = pv_integrate(&spec, 1e-10).unwrap();
            assert!(r.value.abs() < 1e-12, "{}", r.value);
        }
    }

    #[test]
    fn sine_over_square_at_zero_time() {
        let w = |om: f64| om * (-om).exp();
        let spec = PVIntegralSpec {
            weight: &w,
            kernel: Kernel::SineOverSquare,
            pole: 1.0,
            time: 0.0,
            lower: 0.0,
            upper: 40.0,
            scale: 1.0,
            tail_error: 0.0,
        };
        assert_eq!(pv_integrate(&spec, 1e-8).unwrap().value, 0.0);
    }

    #[test]
    fn pole_on_boundary_rejected() {
        let w = |om: f64| (-om).exp();
        let spec = PVIntegralSpec {
            weight: &w,
            kernel: Kernel::Rational,
            pole: 0.0,
            time: 0.0,
            lower: 0.0,
            upper: 40.0,
            scale: 1.0,
            tail_error: 0.0,
        };
        assert!(matches!(pv_integrate(&spec, 1e-8), Err(Error::PoleOnBoundary(_))));
    }

    #[test]
    fn rational_pv_matches_exponential_integral() {
        // P.V. ∫_0^∞ e^{-ω}/(ω − 1) dω = −e^{-1} Ei(1)
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
        let r = pv_integrate(&spec, 1e-10).unwrap();
        assert_relative_eq!(r.value, -0.697_174_883_235_066_068_8, max_relative = 1e-9);
    }

    #[test]
    fn kernel_limits_finite() {
        for k in [Kernel::Sinc, Kernel::SincSquared, Kernel::SineOverSquare, Kernel::Rational] {
            assert!(k.eval(0.0, 3.0).is_finite());
        }
        assert_eq!(Kernel::Sinc.eval(0.0, 3.0), 3.0);
        assert_eq!(Kernel::SincSquared.eval(0.0, 3.0), 4.5);
    }

    #[test]
    fn sinc_squared_golden_rule_limit() {
        let j = SpectralDensity::ohmic_debye(1.0, 0.01).unwrap();
        let mut last = f64::INFINITY;
        for t in [1e3, 1e4, 1e5] {
            let ratio = sinc_squared_integral(&j, 0.01, t).unwrap() / (PI * t * j.value(0.01));
            let dev = (ratio - 1.0).abs();
            assert!(dev < last);
            last = dev;
        }
        assert!(last < 0.02);
        assert_eq!(sinc_squared_integral(&j, 0.01, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn off_domain_pole_saturates() {
        let j = SpectralDensity::ohmic_debye(1.0, 0.01).unwrap();
        let a = sinc_squared_integral(&j, -1e-3, 1e4).unwrap();
        let b = sinc_squared_integral(&j, -1e-3, 2e4).unwrap();
        assert!((a - b).abs() < 1e-2 * a, "{a} {b}");
        assert_eq!(sine_over_square_integral(&SpectralDensity::zero(), 1e-3, 50.0).unwrap(), 0.0);
    }

    proptest! {
        // Mirroring the weight about the pole flips the sign of an odd-kernel window integral.
        #[test]
        fn pv_antisymmetry(slope in -2.0f64..2.0, curv in -1.0f64..1.0, t in 0.5f64..20.0) {
            let p = 2.0;
            let w = move |om: f64| 1.0 + slope * (om - p) + curv * (om - p).powi(3);
            let m = move |om: f64| w(2.0 * p - om);
            let run = |weight: &(dyn Fn(f64) -> f64 + Sync)| {
                pv_integrate(&PVIntegralSpec {
                    weight, kernel: Kernel::SineOverSquare, pole: p, time: t,
                    lower: p - 1.0, upper: p + 1.0, scale: 1.0, tail_error: 0.0,
                }, 1e-10).unwrap()
            };
            let r1 = run(&w);
            let r2 = run(&m);
            prop_assert!((r1.value + r2.value).abs() <= 10.0 * (r1.error_estimate + r2.error_estimate) + 1e-12);
        }
    }
}
