//! Block LOBPCG for `A x = λ B x` with `A` symmetric, `B` symmetric positive definite
//! on the trial subspace.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn mass(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
    /// Projection onto the trial subspace.
    fn project(&self, _x: &mut [f64]) {}
}

#[derive(Clone, Copy, Debug)]
pub struct LobpcgOptions {
    /// Relative residual `‖Ax - θBx‖ / (max(|θ|, 1)‖Bx‖)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Guard vectors carried beyond the requested count.
    pub extra: usize,
    pub seed: u64,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        LobpcgOptions { tol: 1e-8, max_iter: 500, extra: 4, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `B`-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stalled {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(u, v)| *u += a * v);
}

/// A block of vectors with their `A`- and `B`-images.
#[derive(Clone, Default)]
struct Triple {
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    bv: Vec<Vec<f64>>,
}

impl Triple {
    fn from_vectors<O: SymOperator>(op: &O, v: Vec<Vec<f64>>) -> Self {
        let av = v.iter().map(|x| op.apply(x)).collect();
        let bv = v.iter().map(|x| op.mass(x)).collect();
        Triple { v, av, bv }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    fn push(&mut self, v: Vec<f64>, av: Vec<f64>, bv: Vec<f64>) {
        self.v.push(v);
        self.av.push(av);
        self.bv.push(bv);
    }

    /// Columns `Σ_{i ∈ rows} coef[(i, j)] · self[i]`.
    fn combine(&self, coef: &DMatrix<f64>, rows: std::ops::Range<usize>) -> Triple {
        let n = self.v.first().map_or(0, |v| v.len());
        let mut out = Triple::default();
        for j in 0..coef.ncols() {
            let (mut v, mut av, mut bv) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for i in rows.clone() {
                let c = coef[(i, j)];
                if c != 0.0 {
                    axpy(&mut v, c, &self.v[i]);
                    axpy(&mut av, c, &self.av[i]);
                    axpy(&mut bv, c, &self.bv[i]);
                }
            }
            out.push(v, av, bv);
        }
        out
    }
}

/// Appends the columns of `extra` to the `B`-orthonormal `basis` (Gram-Schmidt with one
/// reorthogonalisation), dropping columns that keep less than `1e-10` of their norm.
/// Images of columns that lost most of their norm are recomputed, since the
/// accumulated ones carry the cancellation error.
fn extend_orthonormal<O: SymOperator>(op: &O, basis: &mut Triple, extra: Triple) {
    for k in 0..extra.len() {
        let (mut v, mut av, mut bv) = (extra.v[k].clone(), extra.av[k].clone(), extra.bv[k].clone());
        let n0 = dot(&v, &bv).max(0.0).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            let coef: Vec<f64> = basis.bv.iter().map(|b| dot(b, &v)).collect();
            for (i, c) in coef.iter().enumerate() {
                axpy(&mut v, -c, &basis.v[i]);
                axpy(&mut av, -c, &basis.av[i]);
                axpy(&mut bv, -c, &basis.bv[i]);
            }
        }
        let nrm = dot(&v, &bv).max(0.0).sqrt();
        if nrm <= 1e-10 * n0 {
            continue;
        }
        if nrm < 1e-3 * n0 {
            av = op.apply(&v);
            bv = op.mass(&v);
        }
        for x in [&mut v, &mut av, &mut bv] {
            x.iter_mut().for_each(|a| *a /= nrm);
        }
        basis.push(v, av, bv);
    }
}

fn residual(av: &[f64], bv: &[f64], theta: f64) -> (Vec<f64>, f64) {
    let r: Vec<f64> = av.iter().zip(bv).map(|(a, b)| a - theta * b).collect();
    let bn = dot(bv, bv).sqrt();
    let rel = dot(&r, &r).sqrt() / (theta.abs().max(1.0) * bn.max(f64::MIN_POSITIVE));
    (r, rel)
}

/// Lowest `count` eigenpairs.
pub fn lobpcg<O: SymOperator>(op: &O, count: usize, opts: &LobpcgOptions) -> Result<EigenPairs, Stalled> {
    let n = op.dim();
    let bs = (count + opts.extra).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<Vec<f64>> = (0..bs)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            op.project(&mut v);
            v
        })
        .collect();
    let mut x = Triple::default();
    extend_orthonormal(op, &mut x, Triple::from_vectors(op, start));
    let mut w = Triple::default();
    let mut p = Triple::default();
    let mut theta = vec![0.0; bs];
    for it in 0..=opts.max_iter {
        // Rayleigh-Ritz on the B-orthonormalised span[X, W, P]
        let nx = x.len();
        let mut basis = x;
        extend_orthonormal(op, &mut basis, std::mem::take(&mut w));
        extend_orthonormal(op, &mut basis, std::mem::take(&mut p));
        let dim = basis.len();
        let h = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (dot(&basis.v[i], &basis.av[j]) + dot(&basis.v[j], &basis.av[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let m = bs.min(dim);
        let mut y = DMatrix::zeros(dim, m);
        for (c, &i) in order.iter().take(m).enumerate() {
            theta[c] = eig.eigenvalues[i];
            y.set_column(c, &eig.eigenvectors.column(i));
        }
        x = basis.combine(&y, 0..dim);
        p = basis.combine(&y, nx..dim);
        if it % 20 == 19 {
            x = Triple::from_vectors(op, x.v);
        }
        let mut r_block = Vec::with_capacity(m);
        let mut res = vec![0.0; m];
        for c in 0..m {
            let (r, rel) = residual(&x.av[c], &x.bv[c], theta[c]);
            res[c] = rel;
            r_block.push(r);
        }
        let worst = res[..count].iter().cloned().fold(0.0, f64::max);
        if worst <= opts.tol {
            let fresh = Triple::from_vectors(op, x.v[..count].to_vec());
            let residuals = (0..count).map(|c| residual(&fresh.av[c], &fresh.bv[c], theta[c]).1).collect();
            return Ok(EigenPairs { values: theta[..count].to_vec(), vectors: fresh.v, residuals, iterations: it });
        }
        if it == opts.max_iter {
            return Err(Stalled { iterations: it, residual: worst });
        }
        // W and P only for the unconverged columns
        let active: Vec<usize> = (0..m).filter(|&c| res[c] > 0.1 * opts.tol).collect();
        p = Triple {
            v: active.iter().map(|&c| p.v[c].clone()).collect(),
            av: active.iter().map(|&c| p.av[c].clone()).collect(),
            bv: active.iter().map(|&c| p.bv[c].clone()).collect(),
        };
        let wv = active
            .iter()
            .map(|&c| {
                let mut z = op.precondition(&r_block[c]);
                op.project(&mut z);
                z
            })
            .collect();
        w = Triple::from_vectors(op, wv);
    }
    unreachable!()
}

/// Dense symmetric matrix as an operator (testing and small problems).
pub struct DenseOperator(pub DMatrix<f64>);

impl SymOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.0 * v).iter().copied().collect()
    }
}
