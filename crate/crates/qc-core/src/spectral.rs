//! Spectra of the sR Laplacian on the built-in models and the trace
//! functionals built from them.
//!
//! The oracle route reduces each model to families of tridiagonal problems
//! (trig_torus) or to closed forms (heisenberg_circle). Grid spectra are
//! produced by `qclab` and wrapped in the same [`SpectrumResult`].

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::geometry::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Oracle,
    Grid,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectralError {
    UnsupportedModel(&'static str),
    OutOfRange { lambda: f64, lambda_max: f64 },
    TailDominates { value: f64, tail: f64 },
    NoConvergence { iterations: usize },
    InvalidArgument(&'static str),
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::UnsupportedModel(m) => write!(f, "no oracle spectrum for model {m}"),
            SpectralError::OutOfRange { lambda, lambda_max } => {
                write!(f, "λ = {lambda} exceeds the certified bound {lambda_max}")
            }
            SpectralError::TailDominates { value, tail } => {
                write!(f, "spectral tail bound {tail:.3e} exceeds 10% of value {value:.3e}")
            }
            SpectralError::NoConvergence { iterations } => {
                write!(f, "eigensolver did not converge in {iterations} iterations")
            }
            SpectralError::InvalidArgument(s) => write!(f, "invalid argument: {s}"),
        }
    }
}

/// Sorted distinct eigenvalues with multiplicities, complete up to `lambda_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub lambda_max: f64,
    pub provenance: Provenance,
}

/// Relative gap below which two computed eigenvalues are merged.
const MERGE_TOL: f64 = 1e-10;

impl SpectrumResult {
    /// Builds a result from unsorted `(value, multiplicity)` pairs, dropping values above
    /// `lambda_max` and merging numerically equal values.
    pub fn from_pairs(mut pairs: Vec<(f64, usize)>, lambda_max: f64, provenance: Provenance) -> Self {
        pairs.retain(|p| p.0 <= lambda_max && p.1 > 0);
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut eigenvalues: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        for (v, m) in pairs {
            match eigenvalues.last() {
                Some(&last) if (v - last).abs() <= MERGE_TOL * v.abs().max(1.0) => {
                    *multiplicities.last_mut().unwrap() += m;
                }
                _ => {
                    eigenvalues.push(v);
                    multiplicities.push(m);
                }
            }
        }
        SpectrumResult { eigenvalues, multiplicities, lambda_max, provenance }
    }

    /// Total number of eigenvalues counted with multiplicity.
    pub fn total(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// The first `n` eigenvalues repeated by multiplicity.
    pub fn expanded(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n.min(self.total()));
        for (v, &m) in self.eigenvalues.iter().zip(&self.multiplicities) {
            for _ in 0..m {
                if out.len() == n {
                    return out;
                }
                out.push(*v);
            }
        }
        out
    }

    /// Restriction to `λ ≤ lambda_max`.
    pub fn truncated(&self, lambda_max: f64) -> SpectrumResult {
        let k = self.eigenvalues.partition_point(|&v| v <= lambda_max);
        SpectrumResult {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            multiplicities: self.multiplicities[..k].to_vec(),
            lambda_max: lambda_max.min(self.lambda_max),
            provenance: self.provenance,
        }
    }
}

// ---------------------------------------------------------------- tridiagonal

/// Number of eigenvalues `< x` of the symmetric tridiagonal matrix (Sturm count).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues `≤ upper` of a symmetric tridiagonal matrix, by bisection.
pub fn tridiagonal_eigenvalues_below(diag: &[f64], off: &[f64], upper: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    // Gershgorin lower bound
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
    }
    let hi_total = upper + 1e-12 * upper.abs().max(1.0);
    let m = sturm_count(diag, off, hi_total);
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let (mut a, mut b) = (lo - 1.0, hi_total);
        // shrink to the k-th eigenvalue: count(a) <= k < count(b)
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b || (b - a) <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                break;
            }
            if sturm_count(diag, off, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

// ---------------------------------------------------------------- trig torus

/// Eigenvalues `≤ upper` of `-∂² + 4π²r² sin²(2πs)` on the unit circle for `r² = r2`.
///
/// In the basis `e^{2πiks}` the potential is `2π²r² - π²r²(e^{4πis} + e^{-4πis})`, which
/// couples `k` to `k ± 2`: even and odd `k` form two tridiagonal chains.
pub fn trig_fibre_eigenvalues(r2: f64, upper: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for parity in 0..2 {
        let chain = trig_fibre_chain(r2, upper, parity);
        out.extend(tridiagonal_eigenvalues_below(&chain.diag, &chain.off, upper));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Fourier chain `k ≡ parity (mod 2)` of the fibre operator `−∂3² + 4π²r² sin²(2πx3)`:
/// diagonal `4π²k² + 2π²r²`, coupling `−π²r²` between `k` and `k ± 2`.
#[derive(Clone, Debug)]
pub struct FibreChain {
    pub ks: Vec<i64>,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Truncated long enough that eigenvalues below `upper` are unaffected.
pub fn trig_fibre_chain(r2: f64, upper: f64, parity: i64) -> FibreChain {
    let r = libm::sqrt(r2);
    let kmax = 1.5 * libm::sqrt(upper.max(0.0)) / (2.0 * PI) + 6.0 * libm::sqrt(r) + 20.0;
    let half = libm::ceil(kmax / 2.0) as i64;
    let ks: Vec<i64> = (-half..=half).map(|j| 2 * j + parity).collect();
    let diag: Vec<f64> = ks.iter().map(|&k| 4.0 * PI * PI * (k * k) as f64 + 2.0 * PI * PI * r2).collect();
    let off = alloc::vec![-PI * PI * r2; ks.len() - 1];
    FibreChain { ks, diag, off }
}

/// Number of `(m1, m2) ∈ ℤ²` with `m1² + m2² = n`.
fn lattice_reps(n: u64, table: &[u32]) -> u32 {
    table[n as usize]
}

fn two_square_table(nmax: u64) -> Vec<u32> {
    let mut t = alloc::vec![0u32; nmax as usize + 1];
    let m = libm::sqrt(nmax as f64) as i64 + 1;
    for a in -m..=m {
        for b in -m..=m {
            let n = (a * a + b * b) as u64;
            if n <= nmax {
                t[n as usize] += 1;
            }
        }
    }
    t
}

fn trig_torus_spectrum(lambda_max: f64) -> SpectrumResult {
    let mut pairs: Vec<(f64, usize)> = Vec::new();
    // The fibre ground energy is nondecreasing in r (the potential is pointwise
    // nondecreasing), so the first r² with no fibre eigenvalue below λ_max ends the scan.
    let mut nmax: u64 = 64;
    let mut table = two_square_table(nmax);
    let mut n: u64 = 0;
    loop {
        if n > nmax {
            nmax *= 2;
            table = two_square_table(nmax);
        }
        let reps = lattice_reps(n, &table);
        if reps == 0 {
            n += 1;
            continue;
        }
        let fibre = trig_fibre_eigenvalues(n as f64, lambda_max);
        if fibre.is_empty() {
            break;
        }
        for mu in fibre {
            let mmax = libm::floor(libm::sqrt(((lambda_max - mu) / (4.0 * PI * PI)).max(0.0))) as i64;
            for m0 in 0..=mmax {
                let v = 4.0 * PI * PI * (m0 * m0) as f64 + mu;
                if v <= lambda_max {
                    let mult = if m0 == 0 { 1 } else { 2 };
                    pairs.push((v, mult * reps as usize));
                }
            }
        }
        n += 1;
    }
    SpectrumResult::from_pairs(pairs, lambda_max, Provenance::Oracle)
}

/// Eigenvalue of `-∂x3² + 4π²m0² + 4π²(m1 sin 2πx3 - m2 cos 2πx3)²`, the restriction of the
/// trig_torus Laplacian to the Fourier mode `(m0, m1, m2)`: all eigenvalues `≤ upper`.
pub fn trig_torus_mode_eigenvalues(m: [i64; 3], upper: f64) -> Vec<f64> {
    let shift = 4.0 * PI * PI * (m[0] * m[0]) as f64;
    let r2 = (m[1] * m[1] + m[2] * m[2]) as f64;
    trig_fibre_eigenvalues(r2, upper - shift).into_iter().map(|v| v + shift).collect()
}

// ---------------------------------------------------------------- heisenberg circle

fn heisenberg_circle_spectrum(lambda_max: f64) -> SpectrumResult {
    let mut pairs: Vec<(f64, usize)> = Vec::new();
    let c = 4.0 * PI * PI;
    let m0max = libm::floor(libm::sqrt(lambda_max / c)) as i64;
    for m0 in -m0max..=m0max {
        let base = c * (m0 * m0) as f64;
        let rest = lambda_max - base;
        if rest < 0.0 {
            continue;
        }
        // n = 0: the abelian quotient T², eigenvalue 4π²(m1² + m2²)
        let mm = libm::floor(libm::sqrt(rest / c)) as i64;
        for m1 in -mm..=mm {
            for m2 in -mm..=mm {
                let v = base + c * (m1 * m1 + m2 * m2) as f64;
                if v <= lambda_max {
                    pairs.push((v, 1));
                }
            }
        }
        // n ≠ 0: Landau levels 2π|n|(2k+1), multiplicity |n|
        let nmax = libm::floor(rest / (2.0 * PI)) as i64;
        for n in 1..=nmax {
            let mut k = 0i64;
            loop {
                let v = base + 2.0 * PI * n as f64 * (2 * k + 1) as f64;
                if v > lambda_max {
                    break;
                }
                pairs.push((v, 2 * n as usize));
                k += 1;
            }
        }
    }
    SpectrumResult::from_pairs(pairs, lambda_max, Provenance::Oracle)
}

/// Semi-analytic spectrum of a built-in model, complete up to `lambda_max`.
pub fn oracle_spectrum(model: &Model, lambda_max: f64) -> Result<SpectrumResult, SpectralError> {
    if !(lambda_max >= 0.0) {
        return Err(SpectralError::InvalidArgument("lambda_max must be nonnegative"));
    }
    match model {
        Model::TrigTorus => Ok(trig_torus_spectrum(lambda_max)),
        Model::HeisenbergCircle => Ok(heisenberg_circle_spectrum(lambda_max)),
        Model::MappingTorus(_) => Err(SpectralError::UnsupportedModel("mapping_torus")),
    }
}

// ---------------------------------------------------------------- functionals

/// `N(λ)`: eigenvalues `≤ λ` counted with multiplicity.
pub fn counting_function(spec: &SpectrumResult, lambda: f64) -> Result<usize, SpectralError> {
    if lambda > spec.lambda_max {
        return Err(SpectralError::OutOfRange { lambda, lambda_max: spec.lambda_max });
    }
    let k = spec.eigenvalues.partition_point(|&v| v <= lambda);
    Ok(spec.multiplicities[..k].iter().sum())
}

/// Weyl exponent `Q/2` for the quasi-contact growth vector (2,3,4), `Q = 5`.
pub const WEYL_EXPONENT: f64 = 2.5;

/// Constant `C` with `N(λ) ≤ C λ^{5/2}` used to bound spectral tails beyond `λ_max`:
/// twice the largest observed ratio on `[λ_max/2, λ_max]`.
pub fn tail_constant(spec: &SpectrumResult) -> f64 {
    let lm = spec.lambda_max;
    let mut best: f64 = 0.0;
    let mut cum = 0usize;
    for (v, &m) in spec.eigenvalues.iter().zip(&spec.multiplicities) {
        cum += m;
        if *v >= lm / 2.0 {
            best = best.max(cum as f64 / libm::pow(*v, WEYL_EXPONENT));
        }
    }
    best = best.max(cum as f64 / libm::pow(lm.max(1.0), WEYL_EXPONENT));
    2.0 * best
}

/// `Γ(a, y)` for half-integer `a ≥ 1/2`.
pub fn upper_gamma_half(a2: u32, y: f64) -> f64 {
    // a = a2 / 2, a2 odd
    assert!(a2 % 2 == 1);
    let mut a = 0.5;
    let mut g = libm::sqrt(PI) * libm::erfc(libm::sqrt(y));
    while a2 as f64 / 2.0 > a + 0.25 {
        g = a * g + libm::pow(y, a) * libm::exp(-y);
        a += 1.0;
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceValue {
    pub value: f64,
    /// Bound on the contribution of eigenvalues above `λ_max`.
    pub tail_bound: f64,
}

/// `Σ mult·e^{-tλ}` over the computed spectrum, with a tail bound from `N(λ) ≤ Cλ^{5/2}`.
pub fn heat_trace(spec: &SpectrumResult, t: f64) -> Result<TraceValue, SpectralError> {
    if !(t > 0.0) {
        return Err(SpectralError::InvalidArgument("t must be positive"));
    }
    let value: f64 = spec
        .eigenvalues
        .iter()
        .zip(&spec.multiplicities)
        .map(|(v, &m)| m as f64 * libm::exp(-t * v))
        .sum();
    // Σ_{λ>Λ} e^{-tλ} ≤ ∫_Λ^∞ t e^{-tλ} N(λ) dλ ≤ C t^{-5/2} Γ(7/2, tΛ)
    let c = tail_constant(spec);
    let tail_bound = c * libm::pow(t, -WEYL_EXPONENT) * upper_gamma_half(7, t * spec.lambda_max);
    if tail_bound > 0.1 * value {
        return Err(SpectralError::TailDominates { value, tail: tail_bound });
    }
    Ok(TraceValue { value, tail_bound })
}

/// Richardson-type extrapolation of `t^{5/2}·tr e^{-tΔ}` to `t = 0`: least-squares fit of
/// `c0 + c1 t + … + c_d t^d` over the given times. Returns `c0`.
pub fn heat_extrapolate(spec: &SpectrumResult, times: &[f64], degree: usize) -> Result<f64, SpectralError> {
    if times.len() <= degree {
        return Err(SpectralError::InvalidArgument("need more times than the fit degree"));
    }
    let mut ys = Vec::with_capacity(times.len());
    for &t in times {
        ys.push(libm::pow(t, WEYL_EXPONENT) * heat_trace(spec, t)?.value);
    }
    let coef = polyfit(times, &ys, degree);
    Ok(coef[0])
}

/// Least-squares polynomial fit via the normal equations on scaled abscissae.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let n = degree + 1;
    let mut ata = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut aty = nalgebra::DVector::<f64>::zeros(n);
    for (x, y) in xs.iter().zip(ys) {
        let u = x / scale;
        let pw: Vec<f64> = (0..n).map(|k| libm::pow(u, k as f64)).collect();
        for i in 0..n {
            aty[i] += pw[i] * y;
            for j in 0..n {
                ata[(i, j)] += pw[i] * pw[j];
            }
        }
    }
    let sol = ata.lu().solve(&aty).unwrap_or_else(|| nalgebra::DVector::zeros(n));
    (0..n).map(|k| sol[k] / libm::pow(scale, k as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylFit {
    /// Leading coefficient of `N(λ) ≈ C λ^{5/2} + D λ²`.
    pub leading: f64,
    pub subleading: f64,
    /// Mean of `N(λ)/λ^{5/2}` over the sample points.
    pub cesaro_ratio: f64,
}

/// Fits `N(λ) = Cλ^{5/2} + Dλ²` on `samples` log-spaced points of `[lo, hi]`.
pub fn weyl_fit(spec: &SpectrumResult, lo: f64, hi: f64, samples: usize) -> Result<WeylFit, SpectralError> {
    if !(lo > 0.0 && hi > lo) || samples < 3 {
        return Err(SpectralError::InvalidArgument("need 0 < lo < hi and at least 3 samples"));
    }
    let mut ata = [[0.0f64; 2]; 2];
    let mut aty = [0.0f64; 2];
    let mut ratio = 0.0;
    for i in 0..samples {
        let lam = lo * libm::pow(hi / lo, i as f64 / (samples - 1) as f64);
        let n = counting_function(spec, lam)? as f64;
        // scaled so both columns are O(1)
        let row = [libm::pow(lam / hi, 2.5), libm::pow(lam / hi, 2.0)];
        for a in 0..2 {
            aty[a] += row[a] * n;
            for b in 0..2 {
                ata[a][b] += row[a] * row[b];
            }
        }
        ratio += n / libm::pow(lam, 2.5);
    }
    let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    let c = (aty[0] * ata[1][1] - aty[1] * ata[0][1]) / det;
    let d = (ata[0][0] * aty[1] - ata[1][0] * aty[0]) / det;
    Ok(WeylFit {
        leading: c / libm::pow(hi, 2.5),
        subleading: d / (hi * hi),
        cesaro_ratio: ratio / samples as f64,
    })
}

/// Built-in window pairs `(θ, θ̌)` with `θ̌(s) = (2π)^{-1}∫e^{its}θ(t)dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    /// `θ(t) = exp(-(t - centre)²/(2σ²))`, `θ̌(s) = σ/√(2π)·e^{i·centre·s}·e^{-σ²s²/2}`.
    Gaussian { sigma: f64, centre: f64 },
}

impl Window {
    pub fn theta(&self, t: f64) -> f64 {
        match *self {
            Window::Gaussian { sigma, centre } => libm::exp(-(t - centre) * (t - centre) / (2.0 * sigma * sigma)),
        }
    }

    /// `θ̌(s)` as `(re, im)`.
    pub fn check(&self, s: f64) -> (f64, f64) {
        match *self {
            Window::Gaussian { sigma, centre } => {
                let m = sigma / libm::sqrt(2.0 * PI) * libm::exp(-0.5 * sigma * sigma * s * s);
                (m * libm::cos(centre * s), m * libm::sin(centre * s))
            }
        }
    }

    /// `|θ̌(s)|`, even and nonincreasing in `|s|`.
    pub fn check_modulus(&self, s: f64) -> f64 {
        match *self {
            Window::Gaussian { sigma, .. } => sigma / libm::sqrt(2.0 * PI) * libm::exp(-0.5 * sigma * sigma * s * s),
        }
    }

    /// Smallest and largest `t` where `θ` exceeds `1e-12` of its peak.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            Window::Gaussian { sigma, centre } => {
                let w = sigma * libm::sqrt(2.0 * 12.0 * core::f64::consts::LN_10);
                (centre - w, centre + w)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveValue {
    pub re: f64,
    pub im: f64,
    pub tail_bound: f64,
}

impl WaveValue {
    pub fn modulus(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

/// `Σ mult·θ̌(√λ_j - λ)` over the computed spectrum, with a tail bound.
pub fn smoothed_wave_trace(spec: &SpectrumResult, window: &Window, lambda: f64) -> Result<WaveValue, SpectralError> {
    let (mut re, mut im) = (0.0, 0.0);
    for (v, &m) in spec.eigenvalues.iter().zip(&spec.multiplicities) {
        let (a, b) = window.check(libm::sqrt(v.max(0.0)) - lambda);
        re += m as f64 * a;
        im += m as f64 * b;
    }
    let s0 = libm::sqrt(spec.lambda_max);
    if s0 <= lambda {
        return Err(SpectralError::InvalidArgument("λ must lie below √λ_max"));
    }
    // With g(s) = |θ̌(s - λ)| decreasing on s ≥ s0 and N(s²) ≤ C s⁵:
    // Σ_{√λ_j > s0} g ≤ ∫_{s0}^∞ (-g'(s)) C s⁵ ds.
    let c = tail_constant(spec);
    let g = |s: f64| window.check_modulus(s - lambda);
    let h = 1e-3;
    let mut tail = 0.0;
    let mut s = s0;
    loop {
        let d = (g(s) - g(s + h)) * c * libm::pow(s + 0.5 * h, 5.0);
        tail += d;
        s += h;
        if g(s) * c * libm::pow(s, 5.0) < 1e-30 || s > s0 + 1e4 {
            break;
        }
    }
    tail += g(s) * c * libm::pow(s, 5.0);
    let value = libm::hypot(re, im);
    if tail > 0.1 * value.max(f64::MIN_POSITIVE) && tail > 1e-12 {
        return Err(SpectralError::TailDominates { value, tail });
    }
    Ok(WaveValue { re, im, tail_bound: tail })
}

/// Weyl-law leading constant `P(X)/(24π)` for `N(λ)/λ^{5/2}`.
pub fn weyl_constant_stated(popp_volume: f64) -> f64 {
    popp_volume / (24.0 * PI)
}

/// `P(X)/(60π)`, the constant implied by Karamata's theorem and the heat constant `P(X)/(32√π)`.
pub fn weyl_constant_from_heat(popp_volume: f64) -> f64 {
    popp_volume / (60.0 * PI)
}

/// Heat-trace constant `P(X)/(32√π)` for `t^{5/2} tr e^{-tΔ}`.
pub fn heat_constant(popp_volume: f64) -> f64 {
    popp_volume / (32.0 * libm::sqrt(PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_counts_diagonal() {
        let d = [1.0, 2.0, 3.0];
        let o = [0.0, 0.0];
        assert_eq!(sturm_count(&d, &o, 2.5), 2);
        let e = tridiagonal_eigenvalues_below(&d, &o, 10.0);
        assert!((e[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_half_integer() {
        // Γ(7/2, 0) = 15√π/8
        assert!((upper_gamma_half(7, 0.0) - 15.0 * libm::sqrt(PI) / 8.0).abs() < 1e-12);
        // Γ(3/2, y) = √π/2 erfc(√y) + √y e^{-y}
        let y = 2.3;
        let want = libm::sqrt(PI) / 2.0 * libm::erfc(libm::sqrt(y)) + libm::sqrt(y) * libm::exp(-y);
        assert!((upper_gamma_half(3, y) - want).abs() < 1e-14);
    }
}
