//! Hermite transforms and Landau-level quantization on a discretised `ℝ⁴` model.
//!
//! Fields live on `(x0, x1, x2, x3)` with `x0, x2, x3` periodic on `[0, 1)` and `x1` on
//! `[-L, L)`. Only the positive frequencies `ξ3 = 2πn`, `1 ≤ n < N3/2`, carry data; the
//! zero mode, the negative half and the Nyquist bin are filtered out.
//!
//! Inner products: `⟨u, w⟩ = h/(N0 N2 N3) Σ u w̄` on 4-D fields (`h` the `x1` step) and
//! the plain mean on 3-D fields. Analysis and synthesis are exact adjoints of each other
//! for these inner products.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use qc_core::hermite::{scaled_hermite_functions, x1_half_width};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, PartialEq)]
pub enum HermiteError {
    InvalidGrid(String),
    LevelOutOfRange { k: usize, k_max: usize },
    ShapeMismatch,
    UnsupportedSymbol(String),
}

impl fmt::Display for HermiteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HermiteError::InvalidGrid(s) => write!(f, "invalid Hermite grid: {s}"),
            HermiteError::LevelOutOfRange { k, k_max } => write!(f, "Landau level {k} above k_max = {k_max}"),
            HermiteError::ShapeMismatch => write!(f, "field shape does not match the grid"),
            HermiteError::UnsupportedSymbol(s) => write!(f, "symbol outside the separable class: {s}"),
        }
    }
}

impl std::error::Error for HermiteError {}

/// Samples on the `(x0, x1, x2, x3)` grid, index `((i0·M + i1)·N2 + i2)·N3 + i3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field4 {
    pub shape: [usize; 4],
    pub data: Vec<Complex64>,
}

/// Samples on the `(x0, x2, x3)` grid, index `(i0·N2 + i2)·N3 + i3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field3 {
    pub shape: [usize; 3],
    pub data: Vec<Complex64>,
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[Complex64], s: f64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

/// Grid, `x1` window and the table of `h_k(x1, ξ3)` for every positive `ξ3` bin.
pub struct HermiteGrid {
    pub k_max: usize,
    /// `[N0, M, N2, N3]`.
    pub shape: [usize; 4],
    pub half_width: f64,
    pub step: f64,
    pub x1: Vec<f64>,
    /// `ξ3 = 2πn` for the positive bins `n = 1, …, N3/2 - 1`.
    pub xi: Vec<f64>,
    /// `table[b][k·M + j] = h_k(x1_j, xi[b])` for `k ≤ k_max + 1`.
    table: Vec<Vec<f64>>,
    fwd3: Arc<dyn Fft<f64>>,
    inv3: Arc<dyn Fft<f64>>,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for HermiteGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermiteGrid")
            .field("k_max", &self.k_max)
            .field("shape", &self.shape)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl HermiteGrid {
    /// `shape = [N0, M, N2, N3]`; `L` from `x1_half_width(k_max, 2π, 2π(N3/2 - 1))`.
    pub fn new(k_max: usize, shape: [usize; 4]) -> Result<Self, HermiteError> {
        let [n0, m, n2, n3] = shape;
        if n0 == 0 || n2 == 0 {
            return Err(HermiteError::InvalidGrid("N0 and N2 must be positive".into()));
        }
        if m < 8 || m % 2 == 1 {
            return Err(HermiteError::InvalidGrid(format!("x1 node count {m} must be even and at least 8")));
        }
        if n3 < 4 || n3 % 2 == 1 {
            return Err(HermiteError::InvalidGrid(format!("N3 = {n3} must be even and at least 4")));
        }
        let xi: Vec<f64> = (1..n3 / 2).map(|n| 2.0 * PI * n as f64).collect();
        let half_width = x1_half_width(k_max, xi[0], xi[xi.len() - 1]);
        let step = 2.0 * half_width / m as f64;
        let x1: Vec<f64> = (0..m).map(|j| -half_width + j as f64 * step).collect();
        let table = xi
            .iter()
            .map(|&x| {
                let mut t = vec![0.0; (k_max + 2) * m];
                for (j, &y) in x1.iter().enumerate() {
                    for (k, v) in scaled_hermite_functions(k_max + 1, y, x).into_iter().enumerate() {
                        t[k * m + j] = v;
                    }
                }
                t
            })
            .collect();
        let mut p = FftPlanner::new();
        Ok(HermiteGrid {
            k_max,
            shape,
            half_width,
            step,
            x1,
            xi,
            table,
            fwd3: p.plan_fft_forward(n3),
            inv3: p.plan_fft_inverse(n3),
            fwd1: p.plan_fft_forward(m),
            inv1: p.plan_fft_inverse(m),
        })
    }

    fn shape3(&self) -> [usize; 3] {
        [self.shape[0], self.shape[2], self.shape[3]]
    }

    fn hk(&self, bin: usize, k: usize) -> &[f64] {
        let m = self.shape[1];
        &self.table[bin][k * m..(k + 1) * m]
    }

    fn check_level(&self, k: usize, extra: usize) -> Result<(), HermiteError> {
        if k > self.k_max + extra {
            return Err(HermiteError::LevelOutOfRange { k, k_max: self.k_max });
        }
        Ok(())
    }

    fn check4(&self, u: &Field4) -> Result<(), HermiteError> {
        if u.shape != self.shape || u.data.len() != self.shape.iter().product::<usize>() {
            return Err(HermiteError::ShapeMismatch);
        }
        Ok(())
    }

    fn check3(&self, v: &Field3) -> Result<(), HermiteError> {
        if v.shape != self.shape3() || v.data.len() != self.shape3().iter().product::<usize>() {
            return Err(HermiteError::ShapeMismatch);
        }
        Ok(())
    }

    pub fn zeros4(&self) -> Field4 {
        Field4 { shape: self.shape, data: vec![Complex64::new(0.0, 0.0); self.shape.iter().product()] }
    }

    pub fn zeros3(&self) -> Field3 {
        let s = self.shape3();
        Field3 { shape: s, data: vec![Complex64::new(0.0, 0.0); s.iter().product()] }
    }

    pub fn field4_from_fn(&self, f: impl Fn([f64; 4]) -> Complex64) -> Field4 {
        let [n0, m, n2, n3] = self.shape;
        let mut out = self.zeros4();
        for i0 in 0..n0 {
            for i1 in 0..m {
                for i2 in 0..n2 {
                    for i3 in 0..n3 {
                        let x = [i0 as f64 / n0 as f64, self.x1[i1], i2 as f64 / n2 as f64, i3 as f64 / n3 as f64];
                        out.data[((i0 * m + i1) * n2 + i2) * n3 + i3] = f(x);
                    }
                }
            }
        }
        out
    }

    pub fn field3_from_fn(&self, f: impl Fn([f64; 3]) -> Complex64) -> Field3 {
        let [n0, n2, n3] = self.shape3();
        let mut out = self.zeros3();
        for i0 in 0..n0 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    out.data[(i0 * n2 + i2) * n3 + i3] = f([i0 as f64 / n0 as f64, i2 as f64 / n2 as f64, i3 as f64 / n3 as f64]);
                }
            }
        }
        out
    }

    pub fn inner4(&self, u: &Field4, w: &Field4) -> Complex64 {
        let s: Complex64 = u.data.iter().zip(&w.data).map(|(a, b)| a * b.conj()).sum();
        s * self.step / (self.shape[0] * self.shape[2] * self.shape[3]) as f64
    }

    pub fn norm4(&self, u: &Field4) -> f64 {
        self.inner4(u, u).re.max(0.0).sqrt()
    }

    pub fn inner3(&self, v: &Field3, w: &Field3) -> Complex64 {
        let s: Complex64 = v.data.iter().zip(&w.data).map(|(a, b)| a * b.conj()).sum();
        s / v.data.len() as f64
    }

    pub fn norm3(&self, v: &Field3) -> f64 {
        self.inner3(v, v).re.max(0.0).sqrt()
    }

    /// Fourier coefficients in `x3` of every contiguous `x3` line (`u = Σ û_n e^{2πinx3}`).
    fn x3_forward(&self, data: &mut [Complex64]) {
        let n3 = self.shape[3];
        for line in data.chunks_mut(n3) {
            self.fwd3.process(line);
            line.iter_mut().for_each(|c| *c /= n3 as f64);
        }
    }

    fn x3_inverse(&self, data: &mut [Complex64]) {
        for line in data.chunks_mut(self.shape[3]) {
            self.inv3.process(line);
        }
    }

    /// Keeps the bins `1 ≤ n < N3/2` of a 4-D field.
    pub fn positive_part4(&self, u: &Field4) -> Field4 {
        let mut out = u.clone();
        self.x3_forward(&mut out.data);
        self.filter(&mut out.data);
        self.x3_inverse(&mut out.data);
        out
    }

    pub fn positive_part3(&self, v: &Field3) -> Field3 {
        let mut out = v.clone();
        self.x3_forward(&mut out.data);
        self.filter(&mut out.data);
        self.x3_inverse(&mut out.data);
        out
    }

    fn filter(&self, hat: &mut [Complex64]) {
        let n3 = self.shape[3];
        for line in hat.chunks_mut(n3) {
            for (j, c) in line.iter_mut().enumerate() {
                if j == 0 || j >= n3 / 2 {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// `H_k^* u`: per positive frequency, the `x1` inner product against `h_k(·, ξ3)`.
    pub fn analysis(&self, u: &Field4, k: usize) -> Result<Field3, HermiteError> {
        self.check4(u)?;
        self.check_level(k, 1)?;
        let [n0, m, n2, n3] = self.shape;
        let mut hat = u.data.clone();
        self.x3_forward(&mut hat);
        let mut out = self.zeros3();
        for i0 in 0..n0 {
            for i2 in 0..n2 {
                for (b, _) in self.xi.iter().enumerate() {
                    let n = b + 1;
                    let h = self.hk(b, k);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i1, hv) in h.iter().enumerate() {
                        acc += hat[((i0 * m + i1) * n2 + i2) * n3 + n] * *hv;
                    }
                    out.data[(i0 * n2 + i2) * n3 + n] = acc * self.step;
                }
            }
        }
        self.x3_inverse(&mut out.data);
        Ok(out)
    }

    /// `H_k v`: each positive frequency of `v` times `h_k(x1, ξ3)`.
    pub fn synthesis(&self, v: &Field3, k: usize) -> Result<Field4, HermiteError> {
        self.check3(v)?;
        self.check_level(k, 1)?;
        let [n0, m, n2, n3] = self.shape;
        let mut hat = v.data.clone();
        self.x3_forward(&mut hat);
        let mut out = self.zeros4();
        for i0 in 0..n0 {
            for i2 in 0..n2 {
                for (b, _) in self.xi.iter().enumerate() {
                    let n = b + 1;
                    let c = hat[(i0 * n2 + i2) * n3 + n];
                    for (i1, hv) in self.hk(b, k).iter().enumerate() {
                        out.data[((i0 * m + i1) * n2 + i2) * n3 + n] = c * *hv;
                    }
                }
            }
        }
        self.x3_inverse(&mut out.data);
        Ok(out)
    }

    /// Applies `op(ξ3, line)` to every `x1` line of every positive frequency; the other
    /// bins are zeroed.
    fn fibre_map(&self, u: &Field4, op: impl Fn(f64, &mut [Complex64])) -> Result<Field4, HermiteError> {
        self.check4(u)?;
        let [n0, m, n2, n3] = self.shape;
        let mut hat = u.data.clone();
        self.x3_forward(&mut hat);
        let mut out = self.zeros4();
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for i0 in 0..n0 {
            for i2 in 0..n2 {
                for (b, &xi) in self.xi.iter().enumerate() {
                    let n = b + 1;
                    for (i1, c) in line.iter_mut().enumerate() {
                        *c = hat[((i0 * m + i1) * n2 + i2) * n3 + n];
                    }
                    op(xi, &mut line);
                    for (i1, c) in line.iter().enumerate() {
                        out.data[((i0 * m + i1) * n2 + i2) * n3 + n] = *c;
                    }
                }
            }
        }
        self.x3_inverse(&mut out.data);
        Ok(out)
    }

    /// Spectral `∂x1^order` of one line (Nyquist zeroed for odd orders).
    fn dx1(&self, line: &[Complex64], order: u32) -> Vec<Complex64> {
        let m = self.shape[1];
        let mut w = line.to_vec();
        self.fwd1.process(&mut w);
        for (j, c) in w.iter_mut().enumerate() {
            let kk = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
            let kappa = PI * kk / self.half_width;
            let f = if order % 2 == 1 && j == m / 2 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, kappa).powu(order) };
            *c *= f / m as f64;
        }
        self.inv1.process(&mut w);
        w
    }

    /// `Ω^W = ξ3 x1² - ξ3^{-1} ∂x1²` per positive frequency.
    pub fn omega_apply(&self, u: &Field4) -> Result<Field4, HermiteError> {
        self.fibre_map(u, |xi, line| {
            let d2 = self.dx1(line, 2);
            for (j, c) in line.iter_mut().enumerate() {
                let x = self.x1[j];
                *c = *c * (xi * x * x) - d2[j] / xi;
            }
        })
    }

    /// Raising operator `ξ3 x1 - ∂x1`: `H_k v ↦ H_{k+1}[(2(k+1)ξ3)^{1/2} v]`.
    pub fn raising(&self, u: &Field4) -> Result<Field4, HermiteError> {
        self.ladder(u, -1.0)
    }

    /// Lowering operator `ξ3 x1 + ∂x1`: `H_k v ↦ H_{k-1}[(2kξ3)^{1/2} v]`, zero on level 0.
    pub fn lowering(&self, u: &Field4) -> Result<Field4, HermiteError> {
        self.ladder(u, 1.0)
    }

    fn ladder(&self, u: &Field4, sign: f64) -> Result<Field4, HermiteError> {
        self.fibre_map(u, |xi, line| {
            let d1 = self.dx1(line, 1);
            for (j, c) in line.iter_mut().enumerate() {
                *c = *c * (xi * self.x1[j]) + d1[j] * sign;
            }
        })
    }

    /// Fourier multiplier `f(ξ3)` in `x3` on the positive bins, zero elsewhere.
    pub fn xi_multiplier(&self, v: &Field3, f: impl Fn(f64) -> f64) -> Field3 {
        let n3 = self.shape[3];
        let mut hat = v.data.clone();
        self.x3_forward(&mut hat);
        for line in hat.chunks_mut(n3) {
            for (j, c) in line.iter_mut().enumerate() {
                *c *= if j >= 1 && j < n3 / 2 { f(self.xi[j - 1]) } else { 0.0 };
            }
        }
        self.x3_inverse(&mut hat);
        Field3 { shape: v.shape, data: hat }
    }

    /// `a^H u = Σ_{k ≤ k_max} H_k a_k^W H_k^* u` for `a(ω; x0, x2, x3, ξ3) = m(x)·s(ω, ξ3)`,
    /// with `a_k = a((2k+1)/ξ3; ·)` and `a_k^W = ½(m S_k + S_k m)`, `S_k` the `x3` Fourier
    /// multiplier `s((2k+1)/ξ3, ξ3)`.
    ///
    /// Separability is read off the samples of `a` over all represented levels,
    /// frequencies and grid points; `UnsupportedSymbol` if they are not of rank one.
    pub fn landau_quantize(&self, symbol: impl Fn(f64, [f64; 3], f64) -> f64, u: &Field4) -> Result<Field4, HermiteError> {
        self.check4(u)?;
        let (m, s) = self.separate(&symbol)?;
        let mut out = self.zeros4();
        for k in 0..=self.k_max {
            let v = self.analysis(u, k)?;
            let sk = &s[k];
            let sv = self.xi_multiplier(&v, |xi| sk[self.bin_of(xi)]);
            let msv: Vec<Complex64> = sv.data.iter().zip(&m).map(|(a, b)| a * *b).collect();
            let mv = Field3 { shape: v.shape, data: v.data.iter().zip(&m).map(|(a, b)| a * *b).collect() };
            let smv = self.xi_multiplier(&mv, |xi| sk[self.bin_of(xi)]);
            let ak = Field3 { shape: v.shape, data: msv.iter().zip(&smv.data).map(|(a, b)| (a + b) * 0.5).collect() };
            let w = self.synthesis(&ak, k)?;
            out.data.iter_mut().zip(&w.data).for_each(|(o, x)| *o += x);
        }
        Ok(out)
    }

    fn bin_of(&self, xi: f64) -> usize {
        (xi / (2.0 * PI)).round() as usize - 1
    }

    /// `(m on the 3-D grid, s[k][bin])` with `a = m·s` on every sample.
    #[allow(clippy::type_complexity)]
    fn separate(&self, a: &impl Fn(f64, [f64; 3], f64) -> f64) -> Result<(Vec<f64>, Vec<Vec<f64>>), HermiteError> {
        let [n0, n2, n3] = self.shape3();
        let pts: Vec<[f64; 3]> = (0..n0 * n2 * n3)
            .map(|i| {
                let (i3, r) = (i % n3, i / n3);
                [(r / n2) as f64 / n0 as f64, (r % n2) as f64 / n2 as f64, i3 as f64 / n3 as f64]
            })
            .collect();
        let fibres: Vec<(usize, usize)> = (0..=self.k_max).flat_map(|k| (0..self.xi.len()).map(move |b| (k, b))).collect();
        let eval = |(k, b): (usize, usize), x: [f64; 3]| {
            let xi = self.xi[b];
            a((2 * k + 1) as f64 / xi, x, xi)
        };
        let samples: Vec<Vec<f64>> = fibres.iter().map(|&f| pts.iter().map(|&x| eval(f, x)).collect()).collect();
        let (mut fs, mut xs, mut peak) = (0, 0, 0.0f64);
        for (i, row) in samples.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(HermiteError::UnsupportedSymbol("non-finite symbol value".into()));
                }
                if v.abs() > peak {
                    (fs, xs, peak) = (i, j, v.abs());
                }
            }
        }
        let mut s = vec![vec![0.0; self.xi.len()]; self.k_max + 1];
        let m: Vec<f64> = if peak == 0.0 { vec![0.0; pts.len()] } else { samples[fs].clone() };
        if peak == 0.0 {
            return Ok((m, s));
        }
        let a_star = samples[fs][xs];
        for (i, &(k, b)) in fibres.iter().enumerate() {
            s[k][b] = samples[i][xs] / a_star;
            for (j, v) in samples[i].iter().enumerate() {
                if (v - s[k][b] * m[j]).abs() > 1e-12 * peak {
                    return Err(HermiteError::UnsupportedSymbol(format!(
                        "a(ω, x, ξ3) is not m(x)·s(ω, ξ3) (level {k}, ξ3 = {:.4})",
                        self.xi[b]
                    )));
                }
            }
        }
        Ok((m, s))
    }

    /// `(Σ_k ‖(2k+1)^{-s2/2} ⟨ξ3⟩^{s1+s2/2} H_k^* u‖²)^{1/2}` over `k ≤ k_max`.
    pub fn anisotropic_norm(&self, u: &Field4, s1: f64, s2: f64) -> Result<f64, HermiteError> {
        let mut total = 0.0;
        for k in 0..=self.k_max {
            let v = self.analysis(u, k)?;
            let w = self.xi_multiplier(&v, |xi| (1.0 + xi * xi).powf((s1 + s2 / 2.0) / 2.0));
            total += ((2 * k + 1) as f64).powf(-s2) * self.norm3(&w).powi(2);
        }
        Ok(total.sqrt())
    }

    /// Random field with coefficients at every positive bin (uniform in the unit square).
    pub fn random_field3(&self, rng: &mut ChaCha8Rng) -> Field3 {
        let n3 = self.shape[3];
        let mut v = self.zeros3();
        for line in v.data.chunks_mut(n3) {
            for c in line[1..n3 / 2].iter_mut() {
                *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        self.x3_inverse(&mut v.data);
        v
    }
}

/// Worst residuals of the transform identities over `k ≤ k_max`, each relative to the
/// norm of the input field.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteReport {
    pub k_max: usize,
    pub shape: [usize; 4],
    pub half_width: f64,
    /// `max |h Σ_j h_k(x_j, ξ3)² - 1|`.
    pub basis_normalization: f64,
    /// `max_{k≠l} |⟨H_k v, H_l w⟩| / (‖v‖‖w‖)`.
    pub orthogonality: f64,
    /// `max_k ‖H_k^* H_k v - v‖ / ‖v‖`.
    pub analysis_synthesis: f64,
    /// `max_k ‖Ω^W H_k v - (2k+1) H_k v‖ / ‖v‖`.
    pub omega: f64,
    /// `max_{k<k_max} ‖R H_k v - H_{k+1}[(2(k+1)ξ3)^{1/2} v]‖ / ‖(2(k+1)ξ3)^{1/2} v‖`.
    pub raising: f64,
    /// Same for the lowering operator, `1 ≤ k ≤ k_max`.
    pub lowering: f64,
    /// `‖L H_0 v‖ / ‖v‖`.
    pub lowering_ground: f64,
    /// `|Σ_k ‖H_k^* u‖² - ‖u‖²| / ‖u‖²` for `u = Σ_k H_k v_k`.
    pub parseval: f64,
    /// `|⟨a^H u, w⟩ - ⟨u, a^H w⟩| / (‖u‖‖w‖ max|a|)` for a real separable symbol.
    pub quantize_symmetry: f64,
    /// `‖1^H u - u‖ / ‖u‖`.
    pub quantize_identity: f64,
    /// `‖(ξ3 ω)^H u - Ω^W u‖ / ‖Ω^W u‖`.
    pub quantize_omega: f64,
}

impl HermiteReport {
    /// `(name, value, threshold)` for every residual with an acceptance bound.
    pub fn checks(&self) -> Vec<(&'static str, f64, f64)> {
        vec![
            ("basis_normalization", self.basis_normalization, 1e-8),
            ("orthogonality", self.orthogonality, 1e-8),
            ("analysis_synthesis", self.analysis_synthesis, 1e-8),
            ("omega", self.omega, 1e-6),
            ("raising", self.raising, 1e-6),
            ("lowering", self.lowering, 1e-6),
            ("lowering_ground", self.lowering_ground, 1e-8),
            ("parseval", self.parseval, 1e-6),
            ("quantize_symmetry", self.quantize_symmetry, 1e-8),
            ("quantize_identity", self.quantize_identity, 1e-8),
            ("quantize_omega", self.quantize_omega, 1e-6),
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|(_, v, t)| v <= t)
    }
}

/// Runs the identity suite on `grid` with random band-limited fields from `seed`.
pub fn verify_identities(grid: &HermiteGrid, seed: u64) -> Result<HermiteReport, HermiteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = grid.k_max;
    let m = grid.shape[1];
    let mut basis_normalization: f64 = 0.0;
    for b in 0..grid.xi.len() {
        for k in 0..=kmax {
            let n: f64 = grid.hk(b, k).iter().map(|v| v * v).sum::<f64>() * grid.step;
            basis_normalization = basis_normalization.max((n - 1.0).abs());
        }
    }
    debug_assert_eq!(grid.hk(0, 0).len(), m);

    let v = grid.random_field3(&mut rng);
    let w = grid.random_field3(&mut rng);
    let (nv, nw) = (grid.norm3(&v), grid.norm3(&w));
    let hv: Vec<Field4> = (0..=kmax).map(|k| grid.synthesis(&v, k)).collect::<Result<_, _>>()?;
    let hw: Vec<Field4> = (0..=kmax).map(|k| grid.synthesis(&w, k)).collect::<Result<_, _>>()?;
    let mut orthogonality: f64 = 0.0;
    for k in 0..=kmax {
        for l in 0..=kmax {
            if k != l {
                orthogonality = orthogonality.max(grid.inner4(&hv[k], &hw[l]).norm() / (nv * nw));
            }
        }
    }

    let (mut analysis_synthesis, mut omega, mut raising, mut lowering): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..=kmax {
        let back = grid.analysis(&hv[k], k)?;
        analysis_synthesis = analysis_synthesis.max(grid.norm3(&Field3 { shape: v.shape, data: sub(&back.data, &v.data) }) / nv);
        let om = grid.omega_apply(&hv[k])?;
        let want = scale(&hv[k].data, (2 * k + 1) as f64);
        omega = omega.max(grid.norm4(&Field4 { shape: grid.shape, data: sub(&om.data, &want) }) / nv);
        if k < kmax {
            let coef = grid.xi_multiplier(&v, |xi| (2.0 * (k + 1) as f64 * xi).sqrt());
            let want = grid.synthesis(&coef, k + 1)?;
            let got = grid.raising(&hv[k])?;
            raising = raising.max(grid.norm4(&Field4 { shape: grid.shape, data: sub(&got.data, &want.data) }) / grid.norm3(&coef));
        }
        if k >= 1 {
            let coef = grid.xi_multiplier(&v, |xi| (2.0 * k as f64 * xi).sqrt());
            let want = grid.synthesis(&coef, k - 1)?;
            let got = grid.lowering(&hv[k])?;
            lowering = lowering.max(grid.norm4(&Field4 { shape: grid.shape, data: sub(&got.data, &want.data) }) / grid.norm3(&coef));
        }
    }
    let lowering_ground = grid.norm4(&grid.lowering(&hv[0])?) / nv;

    // u = Σ_k H_k v_k with independent random v_k
    let mut u = grid.zeros4();
    for k in 0..=kmax {
        let vk = grid.random_field3(&mut rng);
        let s = grid.synthesis(&vk, k)?;
        u.data.iter_mut().zip(&s.data).for_each(|(a, b)| *a += b);
    }
    let nu2 = grid.norm4(&u).powi(2);
    let mut sum = 0.0;
    for k in 0..=kmax {
        sum += grid.norm3(&grid.analysis(&u, k)?).powi(2);
    }
    let parseval = (sum - nu2).abs() / nu2;

    let mut u2 = grid.zeros4();
    for k in 0..=kmax {
        let vk = grid.random_field3(&mut rng);
        let s = grid.synthesis(&vk, k)?;
        u2.data.iter_mut().zip(&s.data).for_each(|(a, b)| *a += b);
    }
    let sym = |om: f64, x: [f64; 3], xi: f64| {
        (1.0 + 0.5 * (2.0 * PI * x[2]).cos() + 0.3 * (2.0 * PI * x[0]).sin()) * (xi * om / (1.0 + om) + 0.5)
    };
    let mut amax: f64 = 0.0;
    for k in 0..=kmax {
        for &xi in &grid.xi {
            amax = amax.max(1.8 * (xi * ((2 * k + 1) as f64 / xi) / (1.0 + (2 * k + 1) as f64 / xi) + 0.5));
        }
    }
    let au = grid.landau_quantize(sym, &u)?;
    let au2 = grid.landau_quantize(sym, &u2)?;
    let (nu, nu2n) = (nu2.sqrt(), grid.norm4(&u2));
    let quantize_symmetry = (grid.inner4(&au, &u2) - grid.inner4(&u, &au2)).norm() / (nu * nu2n * amax);
    let one = grid.landau_quantize(|_, _, _| 1.0, &u)?;
    let quantize_identity = grid.norm4(&Field4 { shape: grid.shape, data: sub(&one.data, &u.data) }) / nu;
    let qo = grid.landau_quantize(|om, _, xi| xi * om, &u)?;
    let direct = grid.omega_apply(&u)?;
    let quantize_omega = grid.norm4(&Field4 { shape: grid.shape, data: sub(&qo.data, &direct.data) }) / grid.norm4(&direct);

    Ok(HermiteReport {
        k_max: kmax,
        shape: grid.shape,
        half_width: grid.half_width,
        basis_normalization,
        orthogonality,
        analysis_synthesis,
        omega,
        raising,
        lowering,
        lowering_ground,
        parseval,
        quantize_symmetry,
        quantize_identity,
        quantize_omega,
    })
}

