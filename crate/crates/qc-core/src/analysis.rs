//! Microlocal Weyl averages `E(b)`, variances `V(b)` for multiplication
//! observables, and the nilpotent heat-kernel constants (Mehler, Landau).

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::quadrature::Composite;
use crate::spectral::{trig_fibre_chain, trig_fibre_eigenvalues};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalysisError {
    OutOfRange { lambda: f64, certified: f64 },
    TailDominates { tail: f64, tol: f64 },
    InvalidArgument(&'static str),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::OutOfRange { lambda, certified } => {
                write!(f, "λ = {lambda} beyond the certified window {certified}")
            }
            AnalysisError::TailDominates { tail, tol } => write!(f, "tail bound {tail:.3e} exceeds {tol:.3e}"),
            AnalysisError::InvalidArgument(s) => write!(f, "invalid argument: {s}"),
        }
    }
}

/// `(1/(4π^{3/2})) |2ξ3| / sinh|2ξ3|`.
pub fn mehler_diagonal(xi3: f64) -> f64 {
    let x = (2.0 * xi3).abs();
    let ratio = if x < 1e-4 { 1.0 - x * x / 6.0 } else { x / libm::sinh(x) };
    ratio / (4.0 * libm::pow(PI, 1.5))
}

/// `(1/2π) ∫ mehler_diagonal(ξ3) dξ3` by Gauss–Legendre on `[0, 24]` (the rest is below 1e−18).
pub fn mehler_heat_constant() -> f64 {
    let half = Composite::new(20, 48).integrate(0.0, 24.0, mehler_diagonal);
    2.0 * half / (2.0 * PI)
}

/// `1/(32√π)`.
pub fn nilpotent_heat_constant() -> f64 {
    1.0 / (32.0 * libm::sqrt(PI))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `(|ξ3|/π) Σ_{k≥0} f(2|ξ3|(2k+1))`.
///
/// `integral_from(s) = ∫_s^∞ f` bounds the tail, assuming `|f|` is nonincreasing past the
/// cut. At `ξ3 = 0` the sum becomes the Riemann integral `(1/4π)∫_0^∞ f`.
pub fn landau_density(
    f: impl Fn(f64) -> f64,
    integral_from: impl Fn(f64) -> f64,
    xi3: f64,
    tol: f64,
) -> Result<LandauValue, AnalysisError> {
    let a = xi3.abs();
    if a == 0.0 {
        return Ok(LandauValue { value: integral_from(0.0) / (4.0 * PI), tail_bound: 0.0 });
    }
    let mut sum = 0.0;
    let mut k = 0usize;
    loop {
        let s = 2.0 * a * (2 * k + 1) as f64;
        sum += f(s);
        // Σ_{j>k} f(s_j) ≤ (1/(4a)) ∫_{s_k}^∞ f for nonincreasing f
        let tail = a / PI * integral_from(s).abs() / (4.0 * a);
        if tail <= tol {
            return Ok(LandauValue { value: a / PI * sum, tail_bound: tail });
        }
        k += 1;
        if k > 10_000_000 {
            return Err(AnalysisError::TailDominates { tail, tol });
        }
    }
}

/// `⟨bφ_j, φ_j⟩_μ = Σ_n w_n b_n φ_j(n)²` for real, μ-orthonormal grid vectors.
pub fn matrix_elements(eigvecs: &[Vec<f64>], weights: &[f64], b: &[f64]) -> Vec<f64> {
    eigvecs
        .iter()
        .map(|v| v.iter().zip(weights).zip(b).map(|((p, w), bb)| w * bb * p * p).sum())
        .collect()
}

/// `∫ b dν` for the normalised measure with the given node weights.
pub fn weighted_average(weights: &[f64], b: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    weights.iter().zip(b).map(|(w, v)| w * v).sum::<f64>() / total
}

fn check_window(lambda_grid: &[f64], certified: f64) -> Result<(), AnalysisError> {
    for &l in lambda_grid {
        if l > certified {
            return Err(AnalysisError::OutOfRange { lambda: l, certified });
        }
    }
    Ok(())
}

/// Running `(1/N(λ)) Σ_{λ_j ≤ λ} elements_j` at each grid value; `eigenvalues` ascending.
/// `NaN` where `N(λ) = 0`.
pub fn cesaro_expectation(
    eigenvalues: &[f64],
    elements: &[f64],
    lambda_grid: &[f64],
    certified: f64,
) -> Result<Vec<f64>, AnalysisError> {
    running_mean(eigenvalues, elements, lambda_grid, certified, |e| e)
}

/// Running `(1/N(λ)) Σ_{λ_j ≤ λ} |elements_j − e_value|²`.
pub fn variance(
    eigenvalues: &[f64],
    elements: &[f64],
    lambda_grid: &[f64],
    certified: f64,
    e_value: f64,
) -> Result<Vec<f64>, AnalysisError> {
    running_mean(eigenvalues, elements, lambda_grid, certified, |e| (e - e_value) * (e - e_value))
}

fn running_mean(
    eigenvalues: &[f64],
    elements: &[f64],
    lambda_grid: &[f64],
    certified: f64,
    g: impl Fn(f64) -> f64,
) -> Result<Vec<f64>, AnalysisError> {
    if eigenvalues.len() != elements.len() {
        return Err(AnalysisError::InvalidArgument("eigenvalues and elements differ in length"));
    }
    check_window(lambda_grid, certified)?;
    let mut out = Vec::with_capacity(lambda_grid.len());
    for &l in lambda_grid {
        let n = eigenvalues.partition_point(|&e| e <= l);
        let s: f64 = elements[..n].iter().map(|&e| g(e)).sum();
        out.push(if n == 0 { f64::NAN } else { s / n as f64 });
    }
    Ok(out)
}

/// Mean of `b` over `(x0, x1, x2)` as a Fourier series in `x3`: `b̂_d`, `|d| ≤ K`.
#[derive(Clone, Debug, PartialEq)]
pub struct FibreObservable {
    /// `(re, im)` of `b̂_d` at index `d + K`.
    pub coeffs: Vec<(f64, f64)>,
    pub bandwidth: usize,
}

impl FibreObservable {
    /// Samples `b` on a uniform grid (`n_base` per base axis, `n3` along `x3`). Exact for
    /// trigonometric polynomials below the grid Nyquist frequencies; rounding-level
    /// coefficients are set to zero.
    pub fn from_fn(b: impl Fn([f64; 4]) -> f64, n_base: usize, n3: usize) -> Self {
        let nb = n_base.max(1);
        let mut mean = alloc::vec![0.0; n3];
        for (j, m) in mean.iter_mut().enumerate() {
            let x3 = j as f64 / n3 as f64;
            let mut s = 0.0;
            for a in 0..nb {
                for c in 0..nb {
                    for e in 0..nb {
                        s += b([a as f64 / nb as f64, c as f64 / nb as f64, e as f64 / nb as f64, x3]);
                    }
                }
            }
            *m = s / (nb * nb * nb) as f64;
        }
        Self::from_samples(&mean)
    }

    /// From uniform samples of the base mean along `x3`.
    pub fn from_samples(mean: &[f64]) -> Self {
        let n3 = mean.len();
        let k = (n3 / 2).saturating_sub(1);
        let mut coeffs = Vec::with_capacity(2 * k + 1);
        for d in -(k as i64)..=(k as i64) {
            if d == 0 {
                coeffs.push((mean.iter().sum::<f64>() / n3 as f64, 0.0));
                continue;
            }
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in mean.iter().enumerate() {
                let th = -2.0 * PI * (d * j as i64) as f64 / n3 as f64;
                let (s, c) = libm::sincos(th);
                re += v * c;
                im += v * s;
            }
            coeffs.push((re / n3 as f64, im / n3 as f64));
        }
        let scale = coeffs.iter().map(|(a, b)| libm::hypot(*a, *b)).fold(0.0, f64::max);
        for c in coeffs.iter_mut() {
            if libm::hypot(c.0, c.1) < 1e-13 * scale {
                *c = (0.0, 0.0);
            }
        }
        FibreObservable { coeffs, bandwidth: k }
    }

    pub fn coefficient(&self, d: i64) -> (f64, f64) {
        if d.unsigned_abs() as usize > self.bandwidth {
            return (0.0, 0.0);
        }
        self.coeffs[(d + self.bandwidth as i64) as usize]
    }

    /// `∫ b dx` (the normalised Popp mass on the trig torus, whose density is constant).
    pub fn mean(&self) -> f64 {
        self.coefficient(0).0
    }
}

/// `e^{2πi(m0x0 + m1x1 + m2x2)} ψ(x3)` with `ψ(x3) = Σ_j c_j e^{−ik_jφ} e^{2πik_j x3}`,
/// `φ = atan2(m2, m1)`, `c` a real eigenvector of the fibre chain.
#[derive(Clone, Debug)]
pub struct TrigEigenfunction {
    pub eigenvalue: f64,
    pub m: [i64; 3],
    /// Index into [`TrigEigenbasis::chains`].
    pub chain: usize,
    /// Column of that chain's eigenvector matrix.
    pub column: usize,
}

#[derive(Clone, Debug)]
pub struct ChainVectors {
    pub r2: i64,
    pub ks: Vec<i64>,
    pub values: Vec<f64>,
    /// Column-major eigenvectors, `ks.len()` entries each.
    pub vectors: Vec<Vec<f64>>,
}

/// Separable orthonormal eigenbasis of the trig-torus Laplacian up to `lambda_max`.
#[derive(Clone, Debug)]
pub struct TrigEigenbasis {
    pub lambda_max: f64,
    pub chains: Vec<ChainVectors>,
    /// Ascending in eigenvalue.
    pub functions: Vec<TrigEigenfunction>,
}

fn chain_eigen(r2: i64, upper: f64, parity: i64) -> ChainVectors {
    let chain = trig_fibre_chain(r2 as f64, upper, parity);
    let n = chain.ks.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = chain.diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = chain.off[i];
            m[(i + 1, i)] = chain.off[i];
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= upper).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    ChainVectors {
        r2,
        ks: chain.ks,
        values: idx.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: idx.iter().map(|&i| eig.eigenvectors.column(i).iter().cloned().collect()).collect(),
    }
}

pub fn trig_eigenbasis(lambda_max: f64) -> TrigEigenbasis {
    let mut chains = Vec::new();
    let mut functions = Vec::new();
    let mut n: i64 = 0;
    // the fibre ground energy is nondecreasing in r²
    while trig_fibre_eigenvalues(n as f64, lambda_max).first().is_some() {
        let reps: Vec<(i64, i64)> = {
            let m = libm::sqrt(n as f64) as i64 + 1;
            let mut v = Vec::new();
            for m1 in -m..=m {
                let rest = n - m1 * m1;
                if rest < 0 {
                    continue;
                }
                let m2 = libm::round(libm::sqrt(rest as f64)) as i64;
                if m2 * m2 == rest {
                    v.push((m1, m2));
                    if m2 != 0 {
                        v.push((m1, -m2));
                    }
                }
            }
            v
        };
        if !reps.is_empty() {
            for parity in 0..2 {
                let cv = chain_eigen(n, lambda_max, parity);
                let ci = chains.len();
                for (col, &mu) in cv.values.iter().enumerate() {
                    let m0_max = libm::floor(libm::sqrt(((lambda_max - mu) / (4.0 * PI * PI)).max(0.0))) as i64;
                    for m0 in -m0_max..=m0_max {
                        let ev = mu + 4.0 * PI * PI * (m0 * m0) as f64;
                        if ev > lambda_max {
                            continue;
                        }
                        for &(m1, m2) in &reps {
                            functions.push(TrigEigenfunction { eigenvalue: ev, m: [m0, m1, m2], chain: ci, column: col });
                        }
                    }
                }
                chains.push(cv);
            }
        }
        n += 1;
    }
    functions.sort_by(|a, b| a.eigenvalue.partial_cmp(&b.eigenvalue).unwrap());
    TrigEigenbasis { lambda_max, chains, functions }
}

impl TrigEigenbasis {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.functions.iter().map(|f| f.eigenvalue).collect()
    }

    /// `⟨bφ, φ⟩` for one basis function; only the base mean of `b` contributes.
    pub fn element(&self, f: &TrigEigenfunction, b: &FibreObservable) -> f64 {
        let ch = &self.chains[f.chain];
        let c = &ch.vectors[f.column];
        let phi = libm::atan2(f.m[2] as f64, f.m[1] as f64);
        let b0 = b.coefficient(0).0;
        let mut norm = 0.0;
        let mut s = 0.0;
        for cj in c {
            norm += cj * cj;
            s += cj * cj * b0;
        }
        // D = k_j − k_l = 2·(index shift); the term is c_j c_l e^{−iDφ} b̂_{−D}
        let n = c.len();
        for shift in 1..n {
            let d = 2 * shift as i64;
            if d as usize > b.bandwidth {
                break;
            }
            let corr: f64 = (0..n - shift).map(|i| c[i] * c[i + shift]).sum();
            for dd in [d, -d] {
                let (br, bi) = b.coefficient(-dd);
                if br == 0.0 && bi == 0.0 {
                    continue;
                }
                let (sn, cs) = libm::sincos(-(dd as f64) * phi);
                s += corr * (cs * br - sn * bi);
            }
        }
        s / norm
    }

    pub fn elements(&self, b: &FibreObservable) -> Vec<f64> {
        self.functions.iter().map(|f| self.element(f, b)).collect()
    }

    /// `φ(x)` (complex) evaluated directly from its definition.
    pub fn evaluate(&self, f: &TrigEigenfunction, x: [f64; 4]) -> (f64, f64) {
        let ch = &self.chains[f.chain];
        let c = &ch.vectors[f.column];
        let phi = libm::atan2(f.m[2] as f64, f.m[1] as f64);
        let base = 2.0 * PI * (f.m[0] as f64 * x[0] + f.m[1] as f64 * x[1] + f.m[2] as f64 * x[2]);
        let (mut re, mut im) = (0.0, 0.0);
        for (k, cj) in ch.ks.iter().zip(c) {
            let (s, co) = libm::sincos(base + 2.0 * PI * *k as f64 * x[3] - *k as f64 * phi);
            re += cj * co;
            im += cj * s;
        }
        (re, im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QeReport {
    pub lambda_grid: Vec<f64>,
    pub counts: Vec<usize>,
    pub e_running: Vec<f64>,
    pub v_running: Vec<f64>,
    /// `∫ b dν_Popp`.
    pub target: f64,
}

/// Running `E_λ(b)` and `V_λ(b)` (centred at the target) on the trig torus.
pub fn trig_qe_report(
    basis: &TrigEigenbasis,
    b: &FibreObservable,
    lambda_grid: &[f64],
) -> Result<QeReport, AnalysisError> {
    let ev = basis.eigenvalues();
    let el = basis.elements(b);
    let target = b.mean();
    let e_running = cesaro_expectation(&ev, &el, lambda_grid, basis.lambda_max)?;
    let v_running = variance(&ev, &el, lambda_grid, basis.lambda_max, target)?;
    let counts = lambda_grid.iter().map(|&l| ev.partition_point(|&e| e <= l)).collect();
    Ok(QeReport { lambda_grid: lambda_grid.to_vec(), counts, e_running, v_running, target })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mehler_at_zero_and_even() {
        assert_eq!(mehler_diagonal(0.0), 1.0 / (4.0 * libm::pow(PI, 1.5)));
        assert_eq!(mehler_diagonal(0.7), mehler_diagonal(-0.7));
    }

    #[test]
    fn window_check() {
        let r = cesaro_expectation(&[1.0, 2.0], &[1.0, 1.0], &[3.0], 2.5);
        assert!(matches!(r, Err(AnalysisError::OutOfRange { .. })));
    }
}
