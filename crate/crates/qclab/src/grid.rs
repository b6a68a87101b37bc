//! Fourier-spectral discretisation of the sR Laplacian on periodic grids.
//!
//! The operator is assembled in divergence form,
//! `Δf = μ^{-1} Σ_j U_j^T (μ U_j f)`, with `U_j = Σ_k e_j^k ∂_k` and spectral
//! derivatives whose Nyquist coefficient is zeroed. The discrete derivative is then
//! exactly antisymmetric, so `Δ` is exactly symmetric and nonnegative in the
//! μ-weighted inner product and kills constants. Nyquist modes are projected out of
//! the trial space (they would otherwise be spurious zero modes).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use qc_core::geometry::{GeometryError, Model, QuasiContactStructure};
use qc_core::spectral::{Provenance, SpectrumResult};
use rustfft::{Fft, FftPlanner};

use crate::lobpcg::{lobpcg, EigenPairs, LobpcgOptions, SymOperator};

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    InvalidSize(usize),
    UnsupportedModel(&'static str),
    Geometry(GeometryError),
    NoConvergence { iterations: usize, residual: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::InvalidSize(n) => write!(f, "grid size {n} per axis is below 8 or odd"),
            GridError::UnsupportedModel(m) => write!(f, "grid route not available for {m}"),
            GridError::Geometry(e) => write!(f, "geometry: {e}"),
            GridError::NoConvergence { iterations, residual } => {
                write!(f, "eigensolver stalled after {iterations} iterations (residual {residual:.2e})")
            }
        }
    }
}

impl std::error::Error for GridError {}

impl From<GeometryError> for GridError {
    fn from(e: GeometryError) -> Self {
        GridError::Geometry(e)
    }
}

/// Volume `μ` the Laplacian is symmetric against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Volume {
    Popp,
    Lebesgue,
}

/// Signed Fourier index of DFT bin `j` on `n` points; the Nyquist bin maps to `n/2`.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Line-wise FFT machinery on an `n0 × n1 × n2 × n3` grid (x0 fastest).
#[derive(Clone)]
pub struct Fft4 {
    pub n: [usize; 4],
    fwd: [Arc<dyn Fft<f64>>; 4],
    inv: [Arc<dyn Fft<f64>>; 4],
}

impl fmt::Debug for Fft4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fft4({:?})", self.n)
    }
}

impl Fft4 {
    pub fn new(n: [usize; 4]) -> Self {
        let mut p = FftPlanner::new();
        Fft4 {
            n,
            fwd: n.map(|m| p.plan_fft_forward(m)),
            inv: n.map(|m| p.plan_fft_inverse(m)),
        }
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn stride(&self, axis: usize) -> usize {
        self.n[..axis].iter().product()
    }

    /// Applies the Fourier multiplier `mult(k)` along `axis` to complex data in place.
    pub fn axis_multiplier(&self, data: &mut [Complex<f64>], axis: usize, mult: impl Fn(i64) -> Complex<f64>) {
        let m = self.n[axis];
        let stride = self.stride(axis);
        let table: Vec<Complex<f64>> = (0..m).map(|j| mult(wavenumber(j, m)) / m as f64).collect();
        let mut line = vec![Complex::new(0.0, 0.0); m];
        let total = self.len();
        let block = stride * m;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[base + j * stride];
                }
                self.fwd[axis].process(&mut line);
                for (c, t) in line.iter_mut().zip(&table) {
                    *c *= t;
                }
                self.inv[axis].process(&mut line);
                for (j, c) in line.iter().enumerate() {
                    data[base + j * stride] = *c;
                }
            }
        }
    }

    /// Spectral `∂_axis` of a real grid function with the Nyquist coefficient zeroed.
    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let m = self.n[axis] as i64;
        let mut c: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.axis_multiplier(&mut c, axis, |k| {
            if 2 * k.abs() == m {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, 2.0 * PI * k as f64)
            }
        });
        c.into_iter().map(|v| v.re).collect()
    }

    /// Removes every Fourier coefficient with a Nyquist index in some axis.
    pub fn project(&self, f: &mut [f64]) {
        let mut c: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        for axis in 0..4 {
            let m = self.n[axis] as i64;
            self.axis_multiplier(&mut c, axis, |k| Complex::new(if 2 * k.abs() == m { 0.0 } else { 1.0 }, 0.0));
        }
        for (v, c) in f.iter_mut().zip(c) {
            *v = c.re;
        }
    }

    /// `(σ - Σ_k ∂_k²)^{-1}` on the Nyquist-free subspace.
    pub fn shifted_inverse_laplacian(&self, f: &mut [f64], sigma: f64) {
        let mut c: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        // separable multipliers do not compose to a resolvent, so transform all axes
        // forward, scale, and transform back
        let total = self.len();
        for axis in 0..4 {
            self.forward_axis(&mut c, axis);
        }
        for (idx, v) in c.iter_mut().enumerate() {
            let mut rest = idx;
            let mut k2 = 0.0;
            let mut nyq = false;
            for axis in 0..4 {
                let m = self.n[axis];
                let k = wavenumber(rest % m, m);
                rest /= m;
                nyq |= 2 * k.unsigned_abs() as usize == m;
                k2 += (k * k) as f64;
            }
            *v = if nyq { Complex::new(0.0, 0.0) } else { *v / (sigma + 4.0 * PI * PI * k2) / total as f64 };
        }
        for axis in 0..4 {
            self.inverse_axis(&mut c, axis);
        }
        for (v, c) in f.iter_mut().zip(c) {
            *v = c.re;
        }
    }

    fn forward_axis(&self, data: &mut [Complex<f64>], axis: usize) {
        self.raw_axis(data, axis, true)
    }

    fn inverse_axis(&self, data: &mut [Complex<f64>], axis: usize) {
        self.raw_axis(data, axis, false)
    }

    fn raw_axis(&self, data: &mut [Complex<f64>], axis: usize, forward: bool) {
        let m = self.n[axis];
        let stride = self.stride(axis);
        let mut line = vec![Complex::new(0.0, 0.0); m];
        let block = stride * m;
        for start in (0..self.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[base + j * stride];
                }
                if forward {
                    self.fwd[axis].process(&mut line);
                } else {
                    self.inv[axis].process(&mut line);
                }
                for (j, c) in line.iter().enumerate() {
                    data[base + j * stride] = *c;
                }
            }
        }
    }

    /// Grid point of linear index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 4] {
        let mut rest = idx;
        let mut x = [0.0; 4];
        for axis in 0..4 {
            let m = self.n[axis];
            x[axis] = (rest % m) as f64 / m as f64;
            rest /= m;
        }
        x
    }
}

/// Matrix-free sR Laplacian on a periodic grid.
#[derive(Clone, Debug)]
pub struct GridOperator {
    pub fft: Fft4,
    /// Frame coefficients `e_j^k` per node.
    pub frame: Vec<[[f64; 4]; 3]>,
    /// Density of `μ` against `dx` per node.
    pub mu: Vec<f64>,
    /// `div_μ(e_j)` per node, from the model's exact partials.
    pub div_mu: Option<Vec<[f64; 3]>>,
}

impl GridOperator {
    /// Operator for explicit frame and density functions (no analytic divergence).
    pub fn from_fns(
        n: [usize; 4],
        frame: impl Fn([f64; 4]) -> [[f64; 4]; 3],
        mu: impl Fn([f64; 4]) -> f64,
    ) -> Result<Self, GridError> {
        check_sizes(n)?;
        let fft = Fft4::new(n);
        let pts: Vec<[f64; 4]> = (0..fft.len()).map(|i| fft.point(i)).collect();
        Ok(GridOperator {
            frame: pts.iter().map(|&x| frame(x)).collect(),
            mu: pts.iter().map(|&x| mu(x)).collect(),
            fft,
            div_mu: None,
        })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Quadrature weights `μ(x)/|grid|` of the μ-inner product.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.mu.iter().map(|m| m / n).collect()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.len() as f64;
        f.iter().zip(g).zip(&self.mu).map(|((a, b), m)| a * b * m).sum::<f64>() / n
    }

    /// `U_j f` for each frame field.
    pub fn frame_derivatives(&self, f: &[f64]) -> [Vec<f64>; 3] {
        let grad: [Vec<f64>; 4] = core::array::from_fn(|k| self.fft.derivative(f, k));
        core::array::from_fn(|j| {
            (0..self.len())
                .map(|i| (0..4).map(|k| self.frame[i][j][k] * grad[k][i]).sum())
                .collect()
        })
    }

    /// Stiffness action `K f = Σ_j U_j^T diag(μ) U_j f` (no projection).
    pub fn stiffness(&self, f: &[f64]) -> Vec<f64> {
        let u = self.frame_derivatives(f);
        let mut out = vec![0.0; self.len()];
        for k in 0..4 {
            let h: Vec<f64> = (0..self.len())
                .map(|i| self.mu[i] * (0..3).map(|j| self.frame[i][j][k] * u[j][i]).sum::<f64>())
                .collect();
            let d = self.fft.derivative(&h, k);
            for (o, v) in out.iter_mut().zip(d) {
                *o -= v;
            }
        }
        out
    }

    /// `Δf = μ^{-1} P K P f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut g = f.to_vec();
        self.fft.project(&mut g);
        let mut k = self.stiffness(&g);
        self.fft.project(&mut k);
        k.iter().zip(&self.mu).map(|(v, m)| v / m).collect()
    }

    /// `Σ_j [-U_j²f - div_μ(e_j)·U_j f]` with the analytic divergences.
    pub fn apply_frame_form(&self, f: &[f64]) -> Option<Vec<f64>> {
        let div = self.div_mu.as_ref()?;
        let u = self.frame_derivatives(f);
        let mut out = vec![0.0; self.len()];
        for j in 0..3 {
            let grad: [Vec<f64>; 4] = core::array::from_fn(|k| self.fft.derivative(&u[j], k));
            for i in 0..self.len() {
                let uu: f64 = (0..4).map(|k| self.frame[i][j][k] * grad[k][i]).sum();
                out[i] -= uu + div[i][j] * u[j][i];
            }
        }
        Some(out)
    }
}

fn check_sizes(n: [usize; 4]) -> Result<(), GridError> {
    for &m in &n {
        if m < 8 || m % 2 == 1 {
            return Err(GridError::InvalidSize(m));
        }
    }
    Ok(())
}

/// Assembles the grid Laplacian of a periodic model against `volume`.
pub fn assemble_grid_laplacian(qc: &QuasiContactStructure, volume: Volume, n: [usize; 4]) -> Result<GridOperator, GridError> {
    if qc.model == Model::HeisenbergCircle {
        return Err(GridError::UnsupportedModel("heisenberg_circle"));
    }
    check_sizes(n)?;
    let fft = Fft4::new(n);
    let len = fft.len();
    let (mut frame, mut mu, mut div) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
    for i in 0..len {
        let p = qc.point(fft.point(i))?;
        frame.push(p.frame);
        match volume {
            Volume::Popp => {
                mu.push(p.popp_density.v);
                div.push(p.popp_divergence());
            }
            Volume::Lebesgue => {
                mu.push(1.0);
                div.push(p.frame_div);
            }
        }
    }
    Ok(GridOperator { fft, frame, mu, div_mu: Some(div) })
}

/// Adapter exposing `P K P` with mass `P diag(μ) P` to the eigensolver.
pub struct GridEigenproblem<'a> {
    pub op: &'a GridOperator,
    pub shift: f64,
}

impl SymOperator for GridEigenproblem<'_> {
    fn dim(&self) -> usize {
        self.op.len()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.op.len() as f64;
        let mut x = x.to_vec();
        self.op.fft.project(&mut x);
        let mut k = self.op.stiffness(&x);
        self.op.fft.project(&mut k);
        k.iter_mut().for_each(|v| *v /= n);
        k
    }
    fn mass(&self, x: &[f64]) -> Vec<f64> {
        let n = self.op.len() as f64;
        let mut x = x.to_vec();
        self.op.fft.project(&mut x);
        let mut m: Vec<f64> = x.iter().zip(&self.op.mu).map(|(a, b)| a * b / n).collect();
        self.op.fft.project(&mut m);
        m
    }
    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut z = r.to_vec();
        let mbar = self.op.mu.iter().sum::<f64>() / self.op.len() as f64;
        self.op.fft.shifted_inverse_laplacian(&mut z, self.shift);
        z.iter_mut().for_each(|v| *v *= self.op.len() as f64 / mbar);
        z
    }
    fn project(&self, x: &mut [f64]) {
        self.op.fft.project(x);
    }
}

/// Lowest `count` eigenpairs of the grid operator.
pub fn lowest_eigenpairs(op: &GridOperator, count: usize, tol: f64, seed: u64) -> Result<EigenPairs, GridError> {
    let prob = GridEigenproblem { op, shift: 4.0 * PI * PI };
    let opts = LobpcgOptions { tol, max_iter: 500, extra: count.div_ceil(2).max(8), seed };
    lobpcg(&prob, count, &opts).map_err(|e| GridError::NoConvergence { iterations: e.iterations, residual: e.residual })
}

// ---------------------------------------------------------------- exact sector solvers

/// Dense Hermitian eigenvalues.
fn hermitian_eigenvalues(m: DMatrix<Complex<f64>>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Grid eigenvalues of an `x3`-only model in the Fourier sector `(m0, m1, m2)`.
///
/// The grid operator maps `e^{2πi m·x'} g(x3)` into the same sector, so its
/// restriction is the `(n3-1) × (n3-1)` Hermitian matrix `Q^H Σ_j U_j^H W U_j Q`
/// against `Q^H W Q`, with `Q` the non-Nyquist Fourier columns in `x3`.
pub fn x3_sector_eigenvalues(
    frame: &[[[f64; 4]; 3]],
    mu: &[f64],
    m: [i64; 3],
) -> Vec<f64> {
    let n = mu.len();
    let modes: Vec<i64> = (0..n).map(|j| wavenumber(j, n)).filter(|k| 2 * k.abs() != n as i64).collect();
    let d = modes.len();
    let x3 = |a: usize| a as f64 / n as f64;
    // columns of U_j Q and of Q on the grid
    let q = DMatrix::<Complex<f64>>::from_fn(n, d, |a, c| Complex::from_polar(1.0, 2.0 * PI * modes[c] as f64 * x3(a)));
    let mut stiff = DMatrix::<Complex<f64>>::zeros(d, d);
    for j in 0..3 {
        let u = DMatrix::<Complex<f64>>::from_fn(n, d, |a, c| {
            let e = &frame[a][j];
            let phase = q[(a, c)];
            let tang = 2.0 * PI * (m[0] as f64 * e[0] + m[1] as f64 * e[1] + m[2] as f64 * e[2]);
            phase * Complex::new(0.0, tang + 2.0 * PI * modes[c] as f64 * e[3])
        });
        let wu = DMatrix::<Complex<f64>>::from_fn(n, d, |a, c| u[(a, c)] * mu[a]);
        stiff += u.adjoint() * wu;
    }
    let wq = DMatrix::<Complex<f64>>::from_fn(n, d, |a, c| q[(a, c)] * mu[a]);
    let mass = q.adjoint() * wq;
    // reduce the generalized problem with the Cholesky factor of the mass matrix
    let chol = nalgebra::Cholesky::new(mass).expect("positive density");
    let l = chol.l();
    let linv = l.clone().try_inverse().expect("invertible Cholesky factor");
    let c = &linv * stiff * linv.adjoint();
    let c = (&c + c.adjoint()) * Complex::new(0.5, 0.0);
    hermitian_eigenvalues(c)
}

/// Grid spectrum of trig_torus on an `n^4` grid, complete below `lambda_cut`.
///
/// Every non-Nyquist sector of the grid is visited. `e1 = ∂x0` is the only frame field
/// with an `x0` component, so the `m0` dependence is the exact shift `4π²m0²`.
pub fn trig_grid_spectrum(qc: &QuasiContactStructure, n: usize, lambda_cut: f64) -> Result<SpectrumResult, GridError> {
    if qc.model != Model::TrigTorus {
        return Err(GridError::UnsupportedModel(qc.model.name()));
    }
    check_sizes([n; 4])?;
    let mut frame = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for a in 0..n {
        let p = qc.point([0.0, 0.0, 0.0, a as f64 / n as f64])?;
        frame.push(p.frame);
        mu.push(p.popp_density.v);
    }
    let half = n as i64 / 2 - 1;
    let mut pairs: Vec<(f64, usize)> = Vec::new();
    for m1 in -half..=half {
        for m2 in -half..=half {
            let base = x3_sector_eigenvalues(&frame, &mu, [0, m1, m2]);
            for m0 in -half..=half {
                let shift = 4.0 * PI * PI * (m0 * m0) as f64;
                if shift > lambda_cut {
                    continue;
                }
                for &v in &base {
                    // m0 only enters through e1 = ∂x0, which is orthogonal to the rest
                    let w = v + shift;
                    if w <= lambda_cut {
                        pairs.push((w, 1));
                    }
                }
            }
        }
    }
    Ok(SpectrumResult::from_pairs(pairs, lambda_cut, Provenance::Grid))
}

/// Grid spectrum of heisenberg_circle on the twisted sectors, complete below `lambda_cut`.
///
/// Fourier modes `e^{2πi(m0 x0 + n x3)}` decouple. For `n = 0` the sector is the flat
/// torus in `(x0, x1, x2)`. For `n ≠ 0` the `x2`-modes `k` (non-Nyquist, `|k| < n_grid/2`)
/// split into residue classes mod `|n|`; the quasi-periodicity `c_k(x1 + 1) = c_{k-n}(x1)`
/// unrolls each class into one function on a line of `n_grid` nodes per unit length,
/// on which `-∂² + 4π²(j - n y)²` is discretised spectrally (wrapping at the far ends,
/// where the truncated modes live).
pub fn heisenberg_grid_spectrum(n_grid: usize, lambda_cut: f64) -> Result<SpectrumResult, GridError> {
    check_sizes([n_grid; 4])?;
    let half = n_grid as i64 / 2 - 1;
    let c = 4.0 * PI * PI;
    let mut pairs: Vec<(f64, usize)> = Vec::new();
    // n = 0: exact Fourier eigenvalues of the flat torus
    for m0 in -half..=half {
        for m1 in -half..=half {
            for m2 in -half..=half {
                let v = c * (m0 * m0 + m1 * m1 + m2 * m2) as f64;
                if v <= lambda_cut {
                    pairs.push((v, 1));
                }
            }
        }
    }
    for n in (-half..=half).filter(|&n| n != 0) {
        let na = n.unsigned_abs() as i64;
        if 2.0 * PI * na as f64 > lambda_cut {
            continue;
        }
        for j in 0..na {
            let ls: Vec<i64> = (-(2 * half + 1)..=(2 * half + 1)).filter(|l| (j + n * l).abs() <= half).collect();
            let base = chain_eigenvalues(n_grid, n, j, &ls, lambda_cut);
            for m0 in -half..=half {
                let shift = c * (m0 * m0) as f64;
                for &v in &base {
                    if v + shift <= lambda_cut {
                        pairs.push((v + shift, 1));
                    }
                }
            }
        }
    }
    Ok(SpectrumResult::from_pairs(pairs, lambda_cut, Provenance::Grid))
}

/// Eigenvalues `≤ cut` of one unrolled chain.
fn chain_eigenvalues(n_grid: usize, n: i64, j: i64, ls: &[i64], cut: f64) -> Vec<f64> {
    // y = x1 - l with x1 on the grid: the cells l (sorted decreasingly in -l) tile a line
    let mut ys: Vec<f64> = Vec::new();
    let mut cells: Vec<i64> = ls.to_vec();
    cells.sort_by_key(|l| -l);
    for &l in &cells {
        for a in 0..n_grid {
            ys.push(a as f64 / n_grid as f64 - l as f64);
        }
    }
    let len = ys.len();
    let period = len as f64 / n_grid as f64;
    // spectral -∂² on the periodic line of length `period` is circulant
    let col: Vec<f64> = (0..len)
        .map(|d| {
            (0..len)
                .map(|q| wavenumber(q, len))
                .filter(|k| 2 * k.unsigned_abs() as usize != len)
                .map(|k| (2.0 * PI * k as f64 / period).powi(2) * (2.0 * PI * (k * d as i64) as f64 / len as f64).cos())
                .sum::<f64>()
                / len as f64
        })
        .collect();
    let mut lap = DMatrix::<f64>::from_fn(len, len, |a, b| col[(a + len - b) % len]);
    for (a, &y) in ys.iter().enumerate() {
        lap[(a, a)] += 4.0 * PI * PI * (j as f64 - n as f64 * y).powi(2);
    }
    let mut v: Vec<f64> = lap.symmetric_eigenvalues().iter().copied().filter(|&v| v <= cut).collect();
    v.sort_by(f64::total_cmp);
    v
}
