//! Brute-force reference dynamics: the bath is cut into `N` discrete modes and
//! the molecule plus bath is evolved exactly in the space of at most two bath
//! excitations.
//!
//! Everything here works with the generator `K = H / h`, so a mode of
//! frequency `ω` has energy `ω` and the molecular levels sit at `∓Ω21/2`. The
//! coupling of mode `α` is `−σz g_α (a_α + a_α†)` with
//! `g_α = ω_α^{3/2} γ_α / (2h)^{1/2}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{PerturbativeInputs, Prepared};
use crate::error::{invalid, Error, Result};
use crate::model::{Level, MoleculeParams};
use crate::quadrature::integrate;
use crate::spectral::SpectralDensity;

/// Default bound on the truncated-space dimension.
pub const DEFAULT_MAX_DIMENSION: usize = 2_000_000;
/// Largest dimension diagonalized densely.
pub const DENSE_LIMIT: usize = 600;
/// Norm drift that aborts an evolution.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    Linear,
    Log,
}

/// How to sample the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub modes: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub scheme: GridScheme,
}

impl Discretization {
    /// Logarithmic grid on `[Λ/1000, 10Λ]` with 200 modes.
    pub fn default_for(j: &SpectralDensity) -> Self {
        let c = j.cutoff();
        Self {
            modes: 200,
            omega_min: c / 1000.0,
            omega_max: 10.0 * c,
            scheme: GridScheme::Log,
        }
    }
}

/// One bath mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub omega: f64,
    pub gamma: f64,
    /// Width of the frequency bin the mode stands for.
    pub width: f64,
}

impl Mode {
    /// Coupling constant `ω^{3/2} γ / (2h)^{1/2}` of the generator.
    pub fn coupling(&self, h: f64) -> f64 {
        self.omega.powf(1.5) * self.gamma / (2.0 * h).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    pub modes: Vec<Mode>,
    pub scheme: Option<Discretization>,
    /// Largest per-bin relative error between `∫_bin J` and `(π/2) γ² ω³`.
    pub reconstruction_residual: f64,
}

impl DiscreteBath {
    /// A bath given mode by mode.
    pub fn from_modes(modes: Vec<Mode>) -> Result<Self> {
        if let Some(m) = modes.iter().find(|m| !(m.omega > 0.0)) {
            return Err(invalid("omega", format!("mode frequency must be positive, got {}", m.omega)));
        }
        Ok(Self {
            modes,
            scheme: None,
            reconstruction_residual: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Spacing of the grid near `omega`.
    pub fn local_spacing(&self, omega: f64) -> f64 {
        self.modes
            .iter()
            .min_by(|a, b| (a.omega - omega).abs().total_cmp(&(b.omega - omega).abs()))
            .map_or(0.0, |m| m.width)
    }
}

/// Sample `J` on a grid; `γ_α² = (2/π) J(ω_α) Δω_α / ω_α³` at bin centers.
pub fn discretize(j: &SpectralDensity, d: &Discretization) -> Result<DiscreteBath> {
    if d.modes < 2 {
        return Err(invalid("modes", format!("need at least 2, got {}", d.modes)));
    }
    if !(d.omega_min > 0.0) {
        return Err(invalid("omega_min", format!("the grid must exclude 0, got {}", d.omega_min)));
    }
    if !(d.omega_max > d.omega_min) {
        return Err(invalid("omega_max", "must exceed omega_min"));
    }
    let n = d.modes;
    let edges: Vec<f64> = match d.scheme {
        GridScheme::Linear => {
            let w = (d.omega_max - d.omega_min) / n as f64;
            (0..=n).map(|k| d.omega_min + w * k as f64).collect()
        }
        GridScheme::Log => {
            let r = (d.omega_max / d.omega_min).ln() / n as f64;
            (0..=n).map(|k| d.omega_min * (r * k as f64).exp()).collect()
        }
    };
    let mut modes = Vec::with_capacity(n);
    let mut residual: f64 = 0.0;
    for k in 0..n {
        let (a, b) = (edges[k], edges[k + 1]);
        let (omega, width) = match d.scheme {
            GridScheme::Linear => (0.5 * (a + b), b - a),
            GridScheme::Log => {
                let c = (a * b).sqrt();
                (c, c * (b / a).ln())
            }
        };
        let jw = j.eval(omega)?;
        let gamma = (2.0 / PI * jw * width / omega.powi(3)).sqrt();
        let exact = integrate(|w| j.value(w), a, b, 1e-12, 0.0).value;
        let approx = 0.5 * PI * gamma * gamma * omega.powi(3);
        if exact > 0.0 {
            residual = residual.max((approx - exact).abs() / exact);
        }
        modes.push(Mode { omega, gamma, width });
    }
    Ok(DiscreteBath {
        modes,
        scheme: Some(*d),
        reconstruction_residual: residual,
    })
}

/// Basis `{|n> ⊗ |vac>, |n> ⊗ |α>, |n> ⊗ |αβ>}` with `α ≤ β`, level-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedBasis {
    pub modes: usize,
}

impl TruncatedBasis {
    /// States per molecular level: `1 + N + N(N+1)/2`.
    pub fn block(&self) -> usize {
        let n = self.modes;
        1 + n + n * (n + 1) / 2
    }

    pub fn dimension(&self) -> usize {
        2 * self.block()
    }

    pub fn vacuum(&self, level: usize) -> usize {
        level * self.block()
    }

    pub fn single(&self, level: usize, a: usize) -> usize {
        level * self.block() + 1 + a
    }

    pub fn pair(&self, level: usize, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let n = self.modes;
        level * self.block() + 1 + n + a * (2 * n - a + 1) / 2 + (b - a)
    }

    /// Whether index `i` lies in the two-excitation sector.
    pub fn is_pair(&self, i: usize) -> bool {
        i % self.block() > self.modes
    }
}

/// Real symmetric generator in compressed-row form.
#[derive(Debug, Clone)]
pub struct TruncatedHamiltonian {
    pub basis: TruncatedBasis,
    pub molecule: MoleculeParams,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TruncatedHamiltonian {
    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64], shift: f64, scale: f64) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *out = (acc - x[r] * shift) * scale;
        });
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dimension() {
            let mut diag = 0.0;
            let mut off = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[k] == r {
                    diag += self.vals[k];
                } else {
                    off += self.vals[k].abs();
                }
            }
            lo = lo.min(diag - off);
            hi = hi.max(diag + off);
        }
        (lo, hi)
    }
}

/// Assemble `K = H_M + Σ ω a†a − σz Σ g_α (a_α + a_α†) + Σ ω²γ²/(2h)`.
///
/// The last term is the counter-term; it is a constant and only fixes the
/// zero of energy so that shifts compare with the perturbative ones.
pub fn build_hamiltonian(m: &MoleculeParams, bath: &DiscreteBath, max_dimension: usize) -> Result<TruncatedHamiltonian> {
    let n = bath.len();
    let basis = TruncatedBasis { modes: n };
    let dim = basis
        .modes
        .checked_mul(n + 1)
        .map(|x| 2 * (1 + n + x / 2))
        .unwrap_or(usize::MAX);
    if dim > max_dimension {
        return Err(Error::DimensionOverflow { dim, limit: max_dimension });
    }
    let h = m.h;
    let counter: f64 = bath.modes.iter().map(|md| md.omega.powi(2) * md.gamma.powi(2) / (2.0 * h)).sum();
    let g: Vec<f64> = bath.modes.iter().map(|md| md.coupling(h)).collect();
    let w: Vec<f64> = bath.modes.iter().map(|md| md.omega).collect();
    let sigma = |a: usize, b: usize| -> f64 {
        let lv = |i| if i == 0 { Level::Ground } else { Level::Excited };
        m.sigma(lv(a), lv(b))
    };
    let level_energy = [m.energy(Level::Ground), m.energy(Level::Excited)];

    // Rows are generated in index order; each row lists its own entries.
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    let mut push_row = |entries: &mut Vec<(usize, f64)>| {
        entries.sort_by_key(|e| e.0);
        for &(c, v) in entries.iter() {
            if v != 0.0 {
                cols.push(c);
                vals.push(v);
            }
        }
        row_ptr.push(cols.len());
        entries.clear();
    };
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for lvl in 0..2 {
        // Couplings to the same bath configuration on either level.
        let couple = |entries: &mut Vec<(usize, f64)>, target: &dyn Fn(usize) -> usize, amp: f64| {
            for other in 0..2 {
                let s = sigma(lvl, other);
                if s != 0.0 {
                    entries.push((target(other), -s * amp));
                }
            }
        };
        // vacuum
        entries.push((basis.vacuum(lvl), level_energy[lvl] + counter));
        for a in 0..n {
            couple(&mut entries, &|o| basis.single(o, a), g[a]);
        }
        push_row(&mut entries);
        // one excitation
        for a in 0..n {
            entries.push((basis.single(lvl, a), level_energy[lvl] + counter + w[a]));
            couple(&mut entries, &|o| basis.vacuum(o), g[a]);
            for b in 0..n {
                let f = if a == b { 2f64.sqrt() } else { 1.0 };
                couple(&mut entries, &|o| basis.pair(o, a, b), g[b] * f);
            }
            push_row(&mut entries);
        }
        // two excitations
        for a in 0..n {
            for b in a..n {
                entries.push((basis.pair(lvl, a, b), level_energy[lvl] + counter + w[a] + w[b]));
                if a == b {
                    couple(&mut entries, &|o| basis.single(o, a), g[a] * 2f64.sqrt());
                } else {
                    couple(&mut entries, &|o| basis.single(o, b), g[a]);
                    couple(&mut entries, &|o| basis.single(o, a), g[b]);
                }
                push_row(&mut entries);
            }
        }
    }
    debug_assert_eq!(row_ptr.len(), dim + 1);
    Ok(TruncatedHamiltonian {
        basis,
        molecule: *m,
        row_ptr,
        cols,
        vals,
    })
}

/// State in the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    pub basis: TruncatedBasis,
    pub amplitudes: Vec<Complex64>,
}

impl TruncatedState {
    /// `|L> ⊗ |vac>`.
    pub fn left_vacuum(m: &MoleculeParams, basis: TruncatedBasis) -> Self {
        let (a1, a2) = m.left_amplitudes();
        Self::vacuum(basis, (a1.into(), a2.into()))
    }

    /// `(a1|1> + a2|2>) ⊗ |vac>`.
    pub fn vacuum(basis: TruncatedBasis, (a1, a2): (Complex64, Complex64)) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dimension()];
        amplitudes[basis.vacuum(0)] = a1;
        amplitudes[basis.vacuum(1)] = a2;
        Self { basis, amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn two_excitation_weight(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.is_pair(*i))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// `(P1, P2, <χ1|χ2>)`: norms and overlap of the level-resolved bath vectors.
    pub fn overlaps(&self) -> (f64, f64, Complex64) {
        let b = self.basis.block();
        let (lower, upper) = self.amplitudes.split_at(b);
        let p1 = lower.iter().map(|a| a.norm_sqr()).sum();
        let p2 = upper.iter().map(|a| a.norm_sqr()).sum();
        let coh = lower.iter().zip(upper).map(|(a, c)| a.conj() * c).sum();
        (p1, p2, coh)
    }

    /// Probability of `|R>` summed over bath configurations.
    pub fn p_right(&self, m: &MoleculeParams) -> f64 {
        let (r1, r2) = m.right_amplitudes();
        let b = self.basis.block();
        (0..b)
            .map(|i| (self.amplitudes[i] * r1 + self.amplitudes[b + i] * r2).norm_sqr())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSample {
    pub t: f64,
    pub p_right: f64,
    pub norm: f64,
    pub two_excitation_weight: f64,
    pub p1: f64,
    pub p2: f64,
    pub coherence: Complex64,
}

fn bessel_j(x: f64, count: usize) -> Vec<f64> {
    // Miller's backward recurrence normalized by J0 + 2 Σ J_2k = 1.
    if x == 0.0 {
        let mut v = vec![0.0; count];
        v[0] = 1.0;
        return v;
    }
    let start = count + 20 + (x as usize) + (40.0 * (count as f64 + x)).sqrt() as usize;
    let mut v = vec![0.0; start + 2];
    v[start] = 1e-300;
    for k in (1..=start).rev() {
        v[k - 1] = 2.0 * k as f64 / x * v[k] - v[k + 1];
        if v[k - 1].abs() > 1e250 {
            for e in v.iter_mut().skip(k - 1) {
                *e *= 1e-250;
            }
        }
    }
    let norm = v[0] + 2.0 * v.iter().skip(2).step_by(2).sum::<f64>();
    v.truncate(count);
    for e in v.iter_mut() {
        *e /= norm;
    }
    v
}

/// Exact evolution of the truncated state, sampled at `times` (ascending, ≥ 0).
pub fn evolve(state0: &TruncatedState, h: &TruncatedHamiltonian, times: &[f64]) -> Result<Vec<OracleSample>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(invalid("times", "must be non-negative and ascending"));
    }
    let n0 = state0.norm();
    if (n0 - 1.0).abs() > 1e-12 {
        return Err(invalid("state", format!("initial norm {n0} is not 1")));
    }
    if h.dimension() <= DENSE_LIMIT {
        evolve_dense(state0, h, times)
    } else {
        evolve_chebyshev(state0, h, times)
    }
}

fn sample(state: &TruncatedState, m: &MoleculeParams, t: f64) -> Result<OracleSample> {
    let norm = state.norm();
    let drift = (norm - 1.0).abs();
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift { t, drift });
    }
    let (p1, p2, coherence) = state.overlaps();
    Ok(OracleSample {
        t,
        p_right: state.p_right(m),
        norm,
        two_excitation_weight: state.two_excitation_weight(),
        p1,
        p2,
        coherence,
    })
}

fn evolve_dense(state0: &TruncatedState, h: &TruncatedHamiltonian, times: &[f64]) -> Result<Vec<OracleSample>> {
    let eig = SymmetricEigen::new(h.to_dense());
    let v = &eig.eigenvectors;
    let d = h.dimension();
    let proj: Vec<Complex64> = (0..d)
        .map(|k| (0..d).map(|i| state0.amplitudes[i] * v[(i, k)]).sum())
        .collect();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let c: Vec<Complex64> = (0..d)
            .map(|k| proj[k] * Complex64::from_polar(1.0, -eig.eigenvalues[k] * t))
            .collect();
        let amplitudes = (0..d).map(|i| (0..d).map(|k| c[k] * v[(i, k)]).sum()).collect();
        let s = TruncatedState {
            basis: state0.basis,
            amplitudes,
        };
        out.push(sample(&s, &h.molecule, t)?);
    }
    Ok(out)
}

fn evolve_chebyshev(state0: &TruncatedState, h: &TruncatedHamiltonian, times: &[f64]) -> Result<Vec<OracleSample>> {
    let (lo, hi) = h.spectral_bounds();
    let center = 0.5 * (hi + lo);
    let radius = 0.5 * (hi - lo) * 1.01 + 1e-300;
    // Steps are capped so the expansion stays short.
    let max_step = 400.0 / radius;
    let d = h.dimension();
    let mut psi = state0.amplitudes.clone();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut prev = vec![Complex64::new(0.0, 0.0); d];
    let mut cur = vec![Complex64::new(0.0, 0.0); d];
    let mut next = vec![Complex64::new(0.0, 0.0); d];
    let mut acc = vec![Complex64::new(0.0, 0.0); d];
    for &t in times {
        while t - now > 0.0 {
            let dt = (t - now).min(max_step);
            let x = radius * dt;
            let terms = (x + 10.0 * x.cbrt() + 30.0) as usize;
            let j = bessel_j(x, terms);
            let last = j.iter().rposition(|v| v.abs() > 1e-17).unwrap_or(0).max(1);
            // c_k = (2 − δ_k0) (−i)^k J_k(x)
            let coef = |k: usize| -> Complex64 {
                let f = if k == 0 { 1.0 } else { 2.0 };
                let phase = match k % 4 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, -1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, 1.0),
                };
                phase * (f * j[k])
            };
            prev.copy_from_slice(&psi);
            h.apply(&prev, &mut cur, center, 1.0 / radius);
            let (c0, c1) = (coef(0), coef(1));
            acc.par_iter_mut()
                .zip(prev.par_iter().zip(cur.par_iter()))
                .for_each(|(a, (p, c))| *a = p * c0 + c * c1);
            for k in 2..=last {
                h.apply(&cur, &mut next, center, 1.0 / radius);
                let ck = coef(k);
                next.par_iter_mut()
                    .zip(prev.par_iter())
                    .zip(acc.par_iter_mut())
                    .for_each(|((n, p), a)| {
                        *n = 2.0 * *n - p;
                        *a += *n * ck;
                    });
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
            }
            let global = Complex64::from_polar(1.0, -center * dt);
            psi.par_iter_mut().zip(acc.par_iter()).for_each(|(p, a)| *p = a * global);
            now += dt;
        }
        let s = TruncatedState {
            basis: state0.basis,
            amplitudes: psi.clone(),
        };
        out.push(sample(&s, &h.molecule, t)?);
    }
    Ok(out)
}

/// Golden-rule rate from the discrete modes, each broadened into a Lorentzian
/// of half-width twice the local spacing and normalized on the grid.
pub fn golden_rule_discrete(m: &MoleculeParams, bath: &DiscreteBath) -> Result<f64> {
    let s = m.sin2_two_theta();
    let w = m.gap();
    if bath.is_empty() {
        return Ok(0.0);
    }
    let lo = bath.modes.first().unwrap().omega;
    let hi = bath.modes.last().unwrap().omega;
    if w < lo || w > hi {
        log::warn!("transition frequency {w} outside the sampled band [{lo}, {hi}]");
    }
    let eta = 2.0 * bath.local_spacing(w);
    let lorentz = |x: f64| eta / PI / (x * x + eta * eta);
    let mut weight = 0.0;
    let mut mass = 0.0;
    for md in &bath.modes {
        let l = lorentz(w - md.omega);
        weight += 0.5 * PI * md.gamma.powi(2) * md.omega.powi(3) * l;
        mass += l * md.width;
    }
    if mass < 0.5 {
        log::warn!("broadening window under-resolved: Lorentzian mass on grid {mass:.3}");
    }
    if mass == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 / m.h * s * weight / mass)
}

/// Side-by-side perturbative and brute-force `P_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    /// `(t, perturbative, oracle, |difference|)`.
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub max_deviation: f64,
    pub max_two_excitation_weight: f64,
    pub max_norm_drift: f64,
    pub reconstruction_residual: f64,
    pub modes: usize,
}

impl OracleComparison {
    /// Whether the truncation stayed within `limit` two-excitation weight.
    pub fn truncation_valid(&self, limit: f64) -> bool {
        self.max_two_excitation_weight < limit
    }

    pub fn to_table(&self) -> String {
        let mut s = String::from("t, P_R_perturbative, P_R_oracle, abs_diff\n");
        for (t, p, o, d) in &self.rows {
            let _ = writeln!(s, "{t}, {p:.10}, {o:.10}, {d:.3e}");
        }
        let _ = writeln!(
            s,
            "# max_abs_diff = {:.3e}, max_two_excitation_weight = {:.3e}, max_norm_drift = {:.3e}, modes = {}",
            self.max_deviation, self.max_two_excitation_weight, self.max_norm_drift, self.modes
        );
        s
    }
}

/// Run the oracle on `bath` and the perturbative assembly on the same times.
pub fn compare(inputs: &PerturbativeInputs, bath: &DiscreteBath, times: &[f64]) -> Result<OracleComparison> {
    let prepared: Prepared<'_> = inputs.prepare()?;
    let pert = prepared.series(times)?;
    let h = build_hamiltonian(&inputs.molecule, bath, DEFAULT_MAX_DIMENSION)?;
    let psi0 = TruncatedState::vacuum(h.basis, inputs.initial.amplitudes(&inputs.molecule)?);
    let oracle = evolve(&psi0, &h, times)?;
    let rows: Vec<_> = pert
        .iter()
        .zip(&oracle)
        .map(|(p, o)| (o.t, p.p_right, o.p_right, (p.p_right - o.p_right).abs()))
        .collect();
    Ok(OracleComparison {
        max_deviation: rows.iter().map(|r| r.3).fold(0.0, f64::max),
        max_two_excitation_weight: oracle.iter().map(|o| o.two_excitation_weight).fold(0.0, f64::max),
        max_norm_drift: oracle.iter().map(|o| (o.norm - 1.0).abs()).fold(0.0, f64::max),
        reconstruction_residual: bath.reconstruction_residual,
        modes: bath.len(),
        rows,
    })
}
