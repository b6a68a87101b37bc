//! The boundary field `Ẑ = Ξ0 Z − A(1 − Ξ0²)∂_{Ξ0}` on `X × [−1, 1]`, closed
//! characteristics, `T̂_γ`, the period bands and measure diagnostics.
//!
//! The interior of the `Ξ0` interval is integrated in `w = ln((1+Ξ0)/(1−Ξ0))`,
//! for which `ẇ = −2A`; the endpoints `Ξ0 = ±1` are exact invariant slices
//! carried as a flag. `|Ξ0| ≤ 1` therefore holds by construction.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::geometry::{GeometryError, QuasiContactStructure};
use crate::quadrature::Composite;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DynamicsError {
    Geometry(GeometryError),
    StepFailure { t: f64, h: f64 },
    InvalidState { xi0: f64 },
    /// The characteristic through the start point did not close after the estimated period.
    NotClosed { gap: f64 },
    InvalidArgument(&'static str),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::Geometry(e) => write!(f, "geometry: {e}"),
            DynamicsError::StepFailure { t, h } => write!(f, "step size {h:.3e} too small at t = {t}"),
            DynamicsError::InvalidState { xi0 } => write!(f, "Ξ0 = {xi0} outside [-1, 1]"),
            DynamicsError::NotClosed { gap } => write!(f, "characteristic does not close (gap {gap:.3e})"),
            DynamicsError::InvalidArgument(s) => write!(f, "invalid argument: {s}"),
        }
    }
}

impl From<GeometryError> for DynamicsError {
    fn from(e: GeometryError) -> Self {
        DynamicsError::Geometry(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupState {
    pub x: [f64; 4],
    pub xi0: f64,
}

/// Base data of `Ẑ`: the characteristic field and `A = ½ da_g(R, Z)`.
pub trait ZhatField {
    fn eval(&self, x: [f64; 4]) -> Result<([f64; 4], f64), DynamicsError>;
}

impl ZhatField for QuasiContactStructure {
    fn eval(&self, x: [f64; 4]) -> Result<([f64; 4], f64), DynamicsError> {
        let p = self.point(x)?;
        Ok((p.z(), p.a_fn()))
    }
}

/// `field` with `A` multiplied by `factor` (factor 2 is the invariance negative control).
pub struct ScaledA<'a, F> {
    pub inner: &'a F,
    pub factor: f64,
}

impl<F: ZhatField> ZhatField for ScaledA<'_, F> {
    fn eval(&self, x: [f64; 4]) -> Result<([f64; 4], f64), DynamicsError> {
        let (z, a) = self.inner.eval(x)?;
        Ok((z, a * self.factor))
    }
}

/// A closed characteristic parametrised by arc length `x[0]`: `Z = ∂x0`, `A = a(x0)`.
pub struct OrbitField<F> {
    pub a: F,
}

impl<F: Fn(f64) -> f64> ZhatField for OrbitField<F> {
    fn eval(&self, x: [f64; 4]) -> Result<([f64; 4], f64), DynamicsError> {
        Ok(([1.0, 0.0, 0.0, 0.0], (self.a)(x[0])))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { atol: 1e-11, rtol: 1e-11, max_steps: 1_000_000 }
    }
}

const DIM: usize = 6;
type State = [f64; DIM];

fn to_internal(s: &BlowupState) -> Result<(State, Option<f64>), DynamicsError> {
    if !(s.xi0.abs() <= 1.0) {
        return Err(DynamicsError::InvalidState { xi0: s.xi0 });
    }
    let x = s.x;
    if s.xi0.abs() == 1.0 {
        return Ok(([x[0], x[1], x[2], x[3], 0.0, 0.0], Some(s.xi0)));
    }
    let w = libm::log((1.0 + s.xi0) / (1.0 - s.xi0));
    Ok(([x[0], x[1], x[2], x[3], w, 0.0], None))
}

fn xi_of(w: f64, endpoint: Option<f64>) -> f64 {
    endpoint.unwrap_or_else(|| libm::tanh(0.5 * w))
}

fn from_internal(y: &State, endpoint: Option<f64>) -> BlowupState {
    BlowupState { x: [y[0], y[1], y[2], y[3]], xi0: xi_of(y[4], endpoint) }
}

// Dormand–Prince 5(4)
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates the autonomous system `ẏ = f(y)` from 0 to `t` (either sign) with local error control.
fn integrate(
    mut f: impl FnMut(&State) -> Result<State, DynamicsError>,
    y0: State,
    t: f64,
    opts: &FlowOptions,
) -> Result<State, DynamicsError> {
    let mut y = y0;
    if t == 0.0 {
        return Ok(y);
    }
    let dir = t.signum();
    let mut s = 0.0f64;
    let mut h = dir * t.abs().min(0.05);
    let mut k0 = f(&y)?;
    for _ in 0..opts.max_steps {
        if (t - s) * dir <= 0.0 {
            return Ok(y);
        }
        if (s + h - t) * dir > 0.0 {
            h = t - s;
        }
        let mut k = [[0.0; DIM]; 7];
        k[0] = k0;
        for i in 1..7 {
            let mut yi = y;
            for j in 0..i {
                for d in 0..DIM {
                    yi[d] += h * A[i][j] * k[j][d];
                }
            }
            k[i] = f(&yi)?;
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for d in 0..DIM {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for i in 0..7 {
                d5 += B5[i] * k[i][d];
                d4 += B4[i] * k[i][d];
            }
            y5[d] += h * d5;
            let sc = opts.atol + opts.rtol * y[d].abs().max(y5[d].abs());
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if err <= 1.0 {
            s += h;
            y = y5;
            k0 = k[6];
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h.abs() < 1e-14 * (1.0 + s.abs()) {
            return Err(DynamicsError::StepFailure { t: s, h });
        }
    }
    Err(DynamicsError::StepFailure { t: s, h })
}

/// Right-hand side of `(x, w, q)` with `q̇ = b(state)`.
fn rhs<F: ZhatField>(
    field: &F,
    endpoint: Option<f64>,
    b: &mut impl FnMut(&BlowupState) -> Result<f64, DynamicsError>,
    y: &State,
) -> Result<State, DynamicsError> {
    let x = [y[0], y[1], y[2], y[3]];
    let (z, a) = field.eval(x)?;
    let xi = xi_of(y[4], endpoint);
    let wdot = if endpoint.is_some() { 0.0 } else { -2.0 * a };
    let q = b(&BlowupState { x, xi0: xi })?;
    Ok([xi * z[0], xi * z[1], xi * z[2], xi * z[3], wdot, q])
}

/// `e^{tẐ}(s0)`.
pub fn zhat_flow<F: ZhatField>(field: &F, s0: &BlowupState, t: f64) -> Result<BlowupState, DynamicsError> {
    Ok(zhat_flow_with_integral(field, s0, t, |_| Ok(0.0), &FlowOptions::default())?.0)
}

/// The flow together with `∫_0^t b(e^{sẐ}s0) ds`, integrated as an extra state component.
pub fn zhat_flow_with_integral<F: ZhatField>(
    field: &F,
    s0: &BlowupState,
    t: f64,
    mut b: impl FnMut(&BlowupState) -> Result<f64, DynamicsError>,
    opts: &FlowOptions,
) -> Result<(BlowupState, f64), DynamicsError> {
    if !t.is_finite() {
        return Err(DynamicsError::InvalidArgument("flow time must be finite"));
    }
    let (y0, endpoint) = to_internal(s0)?;
    let y = integrate(|y| rhs(field, endpoint, &mut b, y), y0, t, opts)?;
    Ok((from_internal(&y, endpoint), y[5]))
}

/// States at the given times (each integrated from the previous one).
pub fn zhat_trajectory<F: ZhatField>(
    field: &F,
    s0: &BlowupState,
    times: &[f64],
) -> Result<Vec<BlowupState>, DynamicsError> {
    let mut out = Vec::with_capacity(times.len());
    let mut cur = *s0;
    let mut t_prev = 0.0;
    for &t in times {
        cur = zhat_flow(field, &cur, t - t_prev)?;
        t_prev = t;
        out.push(cur);
    }
    Ok(out)
}

/// Exact `Ξ0(t)` of `Ξ̇0 = −A(1 − Ξ0²)` given `I = ∫_0^t A(x(s)) ds` along the trajectory:
/// `[1+Ξ0 − (1−Ξ0)e^{2I}] / [1+Ξ0 + (1−Ξ0)e^{2I}]`.
pub fn closed_form_xi0(xi0: f64, int_a: f64) -> f64 {
    let e = libm::exp(2.0 * int_a);
    (1.0 + xi0 - (1.0 - xi0) * e) / (1.0 + xi0 + (1.0 - xi0) * e)
}

/// `(1/T)∫_0^T b(e^{tẐ}s0) dt`.
pub fn birkhoff_average<F: ZhatField>(
    field: &F,
    b: impl Fn(&BlowupState) -> f64,
    s0: &BlowupState,
    t: f64,
) -> Result<f64, DynamicsError> {
    if t == 0.0 {
        return Err(DynamicsError::InvalidArgument("averaging time must be nonzero"));
    }
    let (_, q) = zhat_flow_with_integral(field, s0, t, |s| Ok(b(s)), &FlowOptions::default())?;
    Ok(q / t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureDrift {
    /// `max |div Ẑ|` with respect to `ρ̂^{-2}(1 − Ξ0²) μ_Popp` over the samples.
    pub max_divergence: f64,
    /// `max |ln(m J_t)|` after time `t`, i.e. `|∫_0^t div Ẑ|` along each trajectory.
    pub max_drift: f64,
    pub samples: usize,
}

/// `div Ẑ = Ξ0 (div_μ Z − 2 Z ln ρ̂) + 4 c A Ξ0` where `c` scales `A` in the flowed field.
fn weighted_divergence(qc: &QuasiContactStructure, a_factor: f64, s: &BlowupState) -> Result<f64, DynamicsError> {
    let p = qc.point(s.x)?;
    let z = p.z();
    let zlnf: f64 = (0..4).map(|j| z[j] * p.f.g[j]).sum::<f64>() / p.f.v;
    let div_mu = p.lz_mu / p.popp_density.v;
    Ok(s.xi0 * (div_mu - 2.0 * zlnf) + 4.0 * a_factor * p.a_fn() * s.xi0)
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points in `[0,1)^4 × (−1, 1)`.
pub fn sample_states(n: usize) -> Vec<BlowupState> {
    (1..=n)
        .map(|i| BlowupState {
            x: [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5), radical_inverse(i, 7)],
            xi0: 2.0 * radical_inverse(i, 11) - 1.0,
        })
        .collect()
}

/// Divergence of the flow (with `A` scaled by `a_factor`) against the weighted density,
/// pointwise and integrated along trajectories for time `t`.
pub fn measure_invariance_check(
    qc: &QuasiContactStructure,
    a_factor: f64,
    sample_count: usize,
    t: f64,
) -> Result<MeasureDrift, DynamicsError> {
    let field = ScaledA { inner: qc, factor: a_factor };
    let mut rep = MeasureDrift { max_divergence: 0.0, max_drift: 0.0, samples: sample_count };
    for s in sample_states(sample_count) {
        rep.max_divergence = rep.max_divergence.max(weighted_divergence(qc, a_factor, &s)?.abs());
        let (_, q) =
            zhat_flow_with_integral(&field, &s, t, |st| weighted_divergence(qc, a_factor, st), &FlowOptions::default())?;
        rep.max_drift = rep.max_drift.max(q.abs());
    }
    Ok(rep)
}

/// Real trigonometric interpolant of uniform samples on `[0, T)`.
#[derive(Clone, Debug)]
pub struct PeriodicSamples {
    pub period: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PeriodicSamples {
    pub fn new(period: f64, samples: &[f64]) -> Self {
        let n = samples.len();
        let m = n / 2;
        let mut cos = alloc::vec![0.0; m + 1];
        let mut sin = alloc::vec![0.0; m + 1];
        for k in 0..=m {
            let (mut c, mut s) = (0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                let th = 2.0 * PI * (k * j) as f64 / n as f64;
                c += v * libm::cos(th);
                s += v * libm::sin(th);
            }
            let scale = if k == 0 || (n % 2 == 0 && k == m) { 1.0 } else { 2.0 };
            cos[k] = scale * c / n as f64;
            sin[k] = scale * s / n as f64;
        }
        if n % 2 == 0 {
            sin[m] = 0.0;
        }
        PeriodicSamples { period, cos, sin }
    }

    pub fn mean(&self) -> f64 {
        self.cos[0]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = 2.0 * PI * t / self.period;
        let mut s = self.cos[0];
        for k in 1..self.cos.len() {
            let (sn, cs) = libm::sincos(k as f64 * w);
            s += self.cos[k] * cs + self.sin[k] * sn;
        }
        s
    }

    /// `∫_0^t (p − mean)`.
    pub fn zero_mean_antiderivative(&self, t: f64) -> f64 {
        let w = 2.0 * PI / self.period;
        let mut s = 0.0;
        for k in 1..self.cos.len() {
            let kw = k as f64 * w;
            let (sn, cs) = libm::sincos(kw * t);
            s += self.cos[k] * sn / kw + self.sin[k] * (1.0 - cs) / kw;
        }
        s
    }
}

/// `|∫_0^T A| ≤ VP_TOL` counts as volume-preserving along the orbit.
pub const VP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct CharacteristicOrbit {
    pub period: f64,
    /// `A(t)` at `t = kT/n`.
    pub a_samples: Vec<f64>,
    /// `ρ̂^γ_Z` at the same times, normalised to `sup = 1`, when volume-preserving.
    pub rho_hat: Option<Vec<f64>>,
}

impl CharacteristicOrbit {
    /// `ρ̂` from `(ln ρ̂)' = 2A` when `∫_0^T A` vanishes.
    pub fn from_a_samples(period: f64, a_samples: Vec<f64>) -> Self {
        let interp = PeriodicSamples::new(period, &a_samples);
        let rho_hat = if (interp.mean() * period).abs() <= VP_TOL {
            let n = a_samples.len();
            let log_rho = |t: f64| 2.0 * interp.zero_mean_antiderivative(t);
            let fine = 16 * n.max(16);
            let mut best = (f64::NEG_INFINITY, 0.0);
            for j in 0..fine {
                let t = period * j as f64 / fine as f64;
                let v = log_rho(t);
                if v > best.0 {
                    best = (v, t);
                }
            }
            // golden-section refinement of the maximum
            let (mut lo, mut hi) = (best.1 - period / fine as f64, best.1 + period / fine as f64);
            let g = 0.5 * (libm::sqrt(5.0) - 1.0);
            for _ in 0..80 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if log_rho(m1) < log_rho(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let lmax = log_rho(0.5 * (lo + hi)).max(best.0);
            Some((0..n).map(|j| libm::exp(log_rho(period * j as f64 / n as f64) - lmax)).collect())
        } else {
            None
        };
        CharacteristicOrbit { period, a_samples, rho_hat }
    }

    /// Orbit described directly by `ρ̂^γ_Z` samples (assumed volume-preserving).
    pub fn from_rho_hat(period: f64, rho_hat: Vec<f64>) -> Self {
        CharacteristicOrbit { period, a_samples: Vec::new(), rho_hat: Some(rho_hat) }
    }

    pub fn a_integral(&self) -> f64 {
        if self.a_samples.is_empty() {
            return 0.0;
        }
        self.a_samples.iter().sum::<f64>() * self.period / self.a_samples.len() as f64
    }

    pub fn is_volume_preserving(&self) -> bool {
        self.rho_hat.is_some()
    }

    pub fn rho_hat_interp(&self) -> Option<PeriodicSamples> {
        self.rho_hat.as_ref().map(|r| PeriodicSamples::new(self.period, r))
    }
}

/// The closed characteristic of `qc` through `start`, assuming `Z = c ∂x0` along it
/// (the closed characteristics of the built-in models). `T = 1/c`, checked by flowing.
pub fn characteristic_orbit(
    qc: &QuasiContactStructure,
    start: [f64; 4],
    n_samples: usize,
) -> Result<CharacteristicOrbit, DynamicsError> {
    let (z, _) = qc.eval(start)?;
    if z[0].abs() < 1e-12 {
        return Err(DynamicsError::InvalidArgument("Z has no ∂x0 component at the start point"));
    }
    let period = 1.0 / z[0].abs();
    let s0 = BlowupState { x: start, xi0: 1.0 };
    let end = zhat_flow(qc, &s0, period)?;
    let mut gap = 0.0f64;
    for k in 0..4 {
        let d = end.x[k] - start[k];
        gap = gap.max((d - libm::round(d)).abs());
    }
    if gap > 1e-8 {
        return Err(DynamicsError::NotClosed { gap });
    }
    let times: Vec<f64> = (0..n_samples).map(|j| period * j as f64 / n_samples as f64).collect();
    let states = zhat_trajectory(qc, &s0, &times)?;
    let mut a = Vec::with_capacity(n_samples);
    for s in &states {
        a.push(qc.eval(s.x)?.1);
    }
    Ok(CharacteristicOrbit::from_a_samples(period, a))
}

fn bisect_monotone(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `T̂_γ`: the smallest `T̂` with `∫_0^{T̂} (1 − ρ̂)/(1 + ρ̂) = T_γ`, `ρ̂` extended `T_γ`-periodically;
/// `∞` when `ρ̂ ≡ 1` and `T_γ` when the orbit is not volume-preserving.
pub fn hat_t(orbit: &CharacteristicOrbit) -> f64 {
    let Some(rho) = orbit.rho_hat_interp() else {
        return orbit.period;
    };
    let t = orbit.period;
    let g = |s: f64| {
        let r = rho.eval(s);
        (1.0 - r) / (1.0 + r)
    };
    let rule = Composite::new(12, 64);
    let per_period = rule.integrate(0.0, t, g);
    if per_period <= 1e-14 * t {
        return f64::INFINITY;
    }
    // m full periods, then the remainder inside the next one
    let m = libm::ceil(t / per_period) - 1.0;
    let rem = t - m * per_period;
    let partial = |s: f64| Composite::new(12, 16).integrate(0.0, s, g);
    m * t + bisect_monotone(0.0, t, rem, partial)
}

/// `∪_{n≥1} n[T, T̂]` and its negative, merged and clipped to `[−T_max, T_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodBands {
    /// Disjoint closed intervals in increasing order.
    pub intervals: Vec<(f64, f64)>,
}

impl PeriodBands {
    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= t && t <= b)
    }

    pub fn positive(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.intervals.iter().filter(|iv| iv.0 > 0.0)
    }
}

/// `orbits` are `(T_γ, T̂_γ)` pairs; `T̂ = ∞` is allowed.
pub fn period_spectrum(orbits: &[(f64, f64)], t_max: f64) -> Result<PeriodBands, DynamicsError> {
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for &(t, th) in orbits {
        if !(t > 0.0) || !(th >= t) {
            return Err(DynamicsError::InvalidArgument("need 0 < T ≤ T̂"));
        }
        let mut n = 1.0;
        while n * t <= t_max {
            raw.push((n * t, (n * th).min(t_max)));
            if n * th >= t_max {
                break;
            }
            n += 1.0;
        }
    }
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut pos: Vec<(f64, f64)> = Vec::new();
    for iv in raw {
        match pos.last_mut() {
            Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
            _ => pos.push(iv),
        }
    }
    let mut intervals: Vec<(f64, f64)> = pos.iter().rev().map(|&(a, b)| (-b, -a)).collect();
    intervals.extend(pos);
    Ok(PeriodBands { intervals })
}

/// Return time of the lifted flow around a volume-preserving orbit from `(0, Ξ0)`.
///
/// Along the orbit `1 − Ξ0(x)² = (1 − Ξ0²) ρ̂(x)/ρ̂(0)`, so the time is
/// `∫_0^T dx / √(1 − kρ̂(x))` with `k = (1 − Ξ0²)/ρ̂(0)`; `None` when `Ξ0` reaches 0
/// before a full turn (`k sup ρ̂ ≥ 1`).
pub fn return_time(orbit: &CharacteristicOrbit, xi0: f64) -> Option<f64> {
    let rho = orbit.rho_hat_interp()?;
    if xi0 == 0.0 || xi0.abs() > 1.0 {
        return None;
    }
    let k = (1.0 - xi0 * xi0) / rho.eval(0.0);
    let samples = orbit.rho_hat.as_ref()?;
    let sup = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if k * sup >= 1.0 {
        return None;
    }
    let t = Composite::new(16, 256).integrate(0.0, orbit.period, |x| 1.0 / libm::sqrt(1.0 - k * rho.eval(x)));
    Some(t)
}
