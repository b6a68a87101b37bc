//! Pointwise and integrated invariants of a 4D quasi-contact structure:
//! characteristic field `Z`, Popp scaling `a_g = f·a`, Reeb field `R`,
//! Popp density and `A = ½ da_g(R, Z)`.

pub mod models;

use crate::real::{seed2, Dual, Real};
use core::fmt;
pub use models::{FrameEval, MappingTorusParams, Model};

/// `|ω|` below this means `da|_E` has dropped rank.
pub const RANK_TOL: f64 = 1e-4;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometryError {
    DegenerateRank { x: [f64; 4], norm: f64 },
    SingularSystem { x: [f64; 4] },
    NotAnnihilated { x: [f64; 4], residual: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::DegenerateRank { x, norm } => {
                write!(f, "da|_E has rank < 2 at {x:?} (|ω| = {norm:.3e})")
            }
            GeometryError::SingularSystem { x } => {
                write!(f, "Reeb system is not uniquely solvable at {x:?}")
            }
            GeometryError::NotAnnihilated { x, residual } => {
                write!(f, "a(e_i) = {residual:.3e} at {x:?}")
            }
        }
    }
}

/// A vector field given by coefficient functions, differentiable through [`Real`].
pub trait VectorFieldSpec {
    fn coeffs<S: Real>(&self, x: [S; 4]) -> [S; 4];
}

/// `[v, w]^k = v^j ∂_j w^k - w^j ∂_j v^k` at `x`.
pub fn lie_bracket<V: VectorFieldSpec, W: VectorFieldSpec>(v: &V, w: &W, x: [f64; 4]) -> [f64; 4] {
    let xs: [Dual<f64>; 4] = core::array::from_fn(|k| Dual::var(x[k], k));
    let vv = v.coeffs(xs);
    let ww = w.coeffs(xs);
    core::array::from_fn(|k| {
        (0..4).map(|j| vv[j].v * ww[k].g[j] - ww[j].v * vv[k].g[j]).sum()
    })
}

/// Frame field `e_{index+1}` of a model, as a [`VectorFieldSpec`].
pub struct FrameField<'a> {
    pub model: &'a Model,
    pub index: usize,
}

impl VectorFieldSpec for FrameField<'_> {
    fn coeffs<S: Real>(&self, x: [S; 4]) -> [S; 4] {
        self.model.eval(x).frame[self.index]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiContactStructure {
    pub model: Model,
    /// `sign det[Z, R, b1, b2]` in coordinates; equivalently the sign of
    /// `Z*∧a_g∧da_g` against `dx0∧dx1∧dx2∧dx3`.
    pub orientation: i8,
}

impl QuasiContactStructure {
    pub fn new(model: Model) -> Self {
        QuasiContactStructure { model, orientation: 1 }
    }

    pub fn with_orientation(model: Model, orientation: i8) -> Self {
        QuasiContactStructure { model, orientation: if orientation < 0 { -1 } else { 1 } }
    }

    /// Frame with its frame rotated by `θ` in the `(e2, e3)` plane.
    pub fn rotated_frame(&self, theta: f64) -> RotatedFrame {
        RotatedFrame { qc: *self, theta }
    }

    pub fn point(&self, x: [f64; 4]) -> Result<PointGeometry<f64>, GeometryError> {
        let ev = self.model.eval(seed2(x));
        pointwise(ev, x, self.orientation)
    }

    /// Pointwise data one derivative level deeper (gradients of `R`, `A`, ...).
    pub fn point_jet(&self, x: [f64; 4]) -> Result<PointGeometry<Dual<f64>>, GeometryError> {
        let ev = self.model.eval(seed3(x));
        pointwise(ev, x, self.orientation)
    }

    pub fn characteristic_field(&self, x: [f64; 4]) -> Result<[f64; 4], GeometryError> {
        Ok(self.point(x)?.z())
    }

    pub fn popp_data(&self) -> PoppData<'_> {
        PoppData { qc: self }
    }
}

/// A structure evaluated with `(e2, e3) → (cos θ e2 + sin θ e3, -sin θ e2 + cos θ e3)`.
#[derive(Clone, Copy, Debug)]
pub struct RotatedFrame {
    pub qc: QuasiContactStructure,
    pub theta: f64,
}

impl RotatedFrame {
    pub fn point(&self, x: [f64; 4]) -> Result<PointGeometry<f64>, GeometryError> {
        let mut ev = self.qc.model.eval(seed2(x));
        let (s, c) = (libm::sin(self.theta), libm::cos(self.theta));
        let (e2, e3) = (ev.frame[1], ev.frame[2]);
        for j in 0..4 {
            ev.frame[1][j] = e2[j] * c + e3[j] * s;
            ev.frame[2][j] = e3[j] * c - e2[j] * s;
        }
        pointwise(ev, x, self.qc.orientation)
    }
}

fn seed3(x: [f64; 4]) -> [Dual<Dual<Dual<f64>>>; 4] {
    core::array::from_fn(|k| {
        let inner = seed2(x)[k];
        let mut g = [Dual::<Dual<f64>>::cst(0.0); 4];
        g[k] = Dual::<Dual<f64>>::cst(1.0);
        Dual { v: inner, g }
    })
}

/// Everything computed at one point. Scalars of type `T` are plain values for
/// `T = f64`; `Dual<T>` fields additionally carry a coordinate gradient.
#[derive(Clone, Copy, Debug)]
pub struct PointGeometry<T> {
    pub x: [f64; 4],
    pub frame: [[T; 4]; 3],
    /// Euclidean divergence `∂_j e_i^j` of each frame field.
    pub frame_div: [T; 3],
    pub a: [T; 4],
    /// `da(∂_j, ∂_k)`.
    pub da: [[T; 4]; 4],
    /// Frame components of the kernel vector `ω` of `da(e_i, e_j)`.
    pub omega: [T; 3],
    /// Popp scale `f` with `a_g = f a` (also `ρ̂`), with gradient.
    pub f: Dual<T>,
    /// Unit characteristic field, with gradient.
    pub z_field: [Dual<T>; 4],
    pub b1: [T; 4],
    pub b2: [T; 4],
    /// `[b1, b2]` for the orthonormal frame of `(L^E)^⊥`.
    pub b_bracket: [T; 4],
    pub reeb: [T; 4],
    /// Popp density against `dx`, with gradient (wedge formula).
    pub popp_density: Dual<T>,
    /// `1 / |det[Z, R, b1, b2]|`, an independent route to the density.
    pub popp_density_det: T,
    /// `da_g(R, Z)`.
    pub da_rz: T,
    /// Covector `L_Z a_g`.
    pub lz_ag: [T; 4],
    /// Density of `L_Z μ_Popp` against `dx`.
    pub lz_mu: T,
    /// `max_i |a(e_i)|`.
    pub annihilation_residual: f64,
}

impl<T: Real> PointGeometry<T> {
    pub fn z(&self) -> [f64; 4] {
        self.z_field.map(|c| c.v.val())
    }
    pub fn a_fn(&self) -> T {
        self.da_rz * 0.5
    }
    /// `div_μ(e_i) = div(e_i) + e_i(ln ρ)` for the Popp density.
    pub fn popp_divergence(&self) -> [T; 3] {
        let rho = self.popp_density;
        core::array::from_fn(|i| {
            let mut d = self.frame_div[i];
            for j in 0..4 {
                d = d + self.frame[i][j] * rho.g[j] / rho.v;
            }
            d
        })
    }
}

fn dot<T: Real>(u: &[T; 4], v: &[T; 4]) -> T {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3]
}

fn two_form<T: Real>(d: &[[T; 4]; 4], u: &[T; 4], v: &[T; 4]) -> T {
    let mut s = T::zero();
    for j in 0..4 {
        for k in 0..4 {
            s = s + d[j][k] * u[j] * v[k];
        }
    }
    s
}

fn cross3<T: Real>(u: &[T; 3], v: &[T; 3]) -> [T; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn frame_to_coords<T: Real>(c: &[T; 3], e: &[[T; 4]; 3]) -> [T; 4] {
    core::array::from_fn(|j| c[0] * e[0][j] + c[1] * e[1][j] + c[2] * e[2][j])
}

fn det3<T: Real>(m: [[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Determinant of the 4×4 matrix with the given columns.
pub fn det4<T: Real>(cols: [[T; 4]; 4]) -> T {
    let mut s = T::zero();
    for r in 0..4 {
        let minor: [[T; 3]; 3] = core::array::from_fn(|i| {
            let row = if i < r { i } else { i + 1 };
            core::array::from_fn(|j| cols[j + 1][row])
        });
        let term = cols[0][r] * det3(minor);
        s = if r % 2 == 0 { s + term } else { s - term };
    }
    s
}

/// `(α∧β∧ω)(∂0, ∂1, ∂2, ∂3)` for one-forms `α, β` and a two-form with components `ω_jk`.
fn wedge_112<T: Real>(al: &[T; 4], be: &[T; 4], om: &[[T; 4]; 4]) -> T {
    let mut s = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let mut rest = (0..4).filter(|&k| k != i && k != j);
            let (k, l) = (rest.next().unwrap(), rest.next().unwrap());
            let perm = [i, j, k, l];
            let mut inv = 0;
            for p in 0..4 {
                for q in p + 1..4 {
                    if perm[p] > perm[q] {
                        inv += 1;
                    }
                }
            }
            let term = al[i] * be[j] * om[k][l];
            s = if inv % 2 == 0 { s + term } else { s - term };
        }
    }
    s
}

fn abs_dual<T: Real>(d: Dual<T>) -> Dual<T> {
    if d.v.val() < 0.0 {
        -d
    } else {
        d
    }
}

/// Solves `M r = rhs` (rows given) by Gaussian elimination with partial pivoting on values.
fn solve4<T: Real>(mut m: [[T; 4]; 4], mut rhs: [T; 4]) -> Option<[T; 4]> {
    let scale = m.iter().flatten().map(|v| v.val().abs()).fold(0.0, f64::max).max(1.0);
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&i, &j| m[i][col].val().abs().partial_cmp(&m[j][col].val().abs()).unwrap())
            .unwrap();
        if m[piv][col].val().abs() < PIVOT_TOL * scale {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..4 {
            let fac = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] = m[r][c] - fac * m[col][c];
            }
            rhs[r] = rhs[r] - fac * rhs[col];
        }
    }
    let mut out = [T::zero(); 4];
    for r in (0..4).rev() {
        let mut acc = rhs[r];
        for c in r + 1..4 {
            acc = acc - m[r][c] * out[c];
        }
        out[r] = acc / m[r][r];
    }
    Some(out)
}

fn pointwise<T: Real>(
    ev: FrameEval<Dual<Dual<T>>>,
    x: [f64; 4],
    orientation: i8,
) -> Result<PointGeometry<T>, GeometryError> {
    // Coefficients with one derivative level (`.v`) and their partials (`.g[k]`).
    let e: [[Dual<T>; 4]; 3] = ev.frame.map(|row| row.map(|c| c.v));
    let de: [[[Dual<T>; 4]; 4]; 3] = ev.frame.map(|row| row.map(|c| c.g));
    let a: [Dual<T>; 4] = ev.a.map(|c| c.v);
    let da: [[Dual<T>; 4]; 4] =
        core::array::from_fn(|j| core::array::from_fn(|k| ev.a[k].g[j] - ev.a[j].g[k]));

    let annihilation_residual =
        e.iter().map(|ei| dot(ei, &a).val().abs()).fold(0.0, f64::max);
    if annihilation_residual > 1e-10 {
        return Err(GeometryError::NotAnnihilated { x, residual: annihilation_residual });
    }

    let m = |i: usize, j: usize| two_form(&da, &e[i], &e[j]);
    let omega = [m(1, 2), m(2, 0), m(0, 1)];
    let norm = (omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]).sqrt();
    if norm.val() < RANK_TOL {
        return Err(GeometryError::DegenerateRank { x, norm: norm.val() });
    }
    let f = norm.recip();
    let w = omega.map(|c| c / norm);

    // Orthonormal (b1, b2) in frame components with b1 × b2 = ω̂, so da(b1, b2) = |ω| > 0.
    let k = (0..3)
        .min_by(|&i, &j| w[i].val().abs().partial_cmp(&w[j].val().abs()).unwrap())
        .unwrap();
    let mut h = [Dual::<T>::zero(); 3];
    h[k] = Dual::one();
    let hw = w[k];
    let raw: [Dual<T>; 3] = core::array::from_fn(|i| h[i] - w[i] * hw);
    let rn = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
    let c1 = raw.map(|v| v / rn);
    let c2 = cross3(&w, &c1);
    let z0 = frame_to_coords(&w, &e);
    let b1 = frame_to_coords(&c1, &e);
    let b2 = frame_to_coords(&c2, &e);

    let b_bracket: [T; 4] = core::array::from_fn(|kk| {
        let mut s = T::zero();
        for j in 0..4 {
            s = s + b1[j].v * b2[kk].g[j] - b2[j].v * b1[kk].g[j];
        }
        s
    });

    // Reeb system rows.
    let fv = f.v;
    let df = f.g;
    let av = a.map(|c| c.v);
    let dav: [[T; 4]; 4] = da.map(|r| r.map(|c| c.v));
    let b1v = b1.map(|c| c.v);
    let b2v = b2.map(|c| c.v);
    let row_for = |b: &[T; 4]| -> [T; 4] {
        let dfb = dot(&df, b);
        core::array::from_fn(|j| {
            let mut s = T::zero();
            for kk in 0..4 {
                s = s + dav[j][kk] * b[kk];
            }
            fv * s - dfb * av[j]
        })
    };
    let normal: [T; 4] = core::array::from_fn(|r| {
        let minor: [[T; 3]; 3] = core::array::from_fn(|i| {
            let row = if i < r { i } else { i + 1 };
            [b1v[row], b2v[row], b_bracket[row]]
        });
        let d = det3(minor);
        if r % 2 == 0 {
            d
        } else {
            -d
        }
    });
    let rows = [av.map(|c| c * fv), row_for(&b1v), row_for(&b2v), normal];
    let reeb = solve4(rows, [T::one(), T::zero(), T::zero(), T::zero()])
        .ok_or(GeometryError::SingularSystem { x })?;

    let z0v = z0.map(|c| c.v);
    let det = det4([z0v, reeb, b1v, b2v]);
    let sign = if (det.val() > 0.0) == (orientation > 0) { 1.0 } else { -1.0 };
    let z_field = z0.map(|c| c * sign);
    let zv = z_field.map(|c| c.v);
    let popp_density_det = (det * sign).recip();

    // μ = f² β∧a∧da with β(Z) = 1.
    let zz = dot(&z_field, &z_field);
    let beta = z_field.map(|c| c / zz);
    let popp_density = abs_dual(wedge_112(&beta, &a, &da) * f * f);

    let dfz = dot(&df, &zv);
    let da_rz = two_form(&dav, &reeb, &zv) * fv - dfz * dot(&av, &reeb);
    let lz_ag: [T; 4] = core::array::from_fn(|j| {
        let mut s = T::zero();
        for kk in 0..4 {
            s = s + zv[kk] * dav[kk][j];
        }
        s * fv + dfz * av[j]
    });
    let div_z = (0..4).fold(T::zero(), |acc, j| acc + z_field[j].g[j]);
    let z_rho = (0..4).fold(T::zero(), |acc, j| acc + zv[j] * popp_density.g[j]);
    let lz_mu = z_rho + popp_density.v * div_z;

    let frame_div: [T; 3] =
        core::array::from_fn(|i| (0..4).fold(T::zero(), |acc, j| acc + de[i][j][j].v));

    Ok(PointGeometry {
        x,
        frame: e.map(|r| r.map(|c| c.v)),
        frame_div,
        a: av,
        da: dav,
        omega: omega.map(|c| c.v),
        f,
        z_field,
        b1: b1v,
        b2: b2v,
        b_bracket,
        reeb,
        popp_density,
        popp_density_det,
        da_rz,
        lz_ag,
        lz_mu,
        annihilation_residual,
    })
}

/// `ρ a_g([Z, R])` at `ρ = 1`: the Hamilton-derivative condition of the equivalence list,
/// computed from an actual bracket rather than the identity `a_g([Z,R]) = da_g(R,Z)`.
pub fn reeb_bracket_term(qc: &QuasiContactStructure, x: [f64; 4]) -> Result<f64, GeometryError> {
    let p = qc.point_jet(x)?;
    let z = p.z_field.map(|c| c.v);
    let r = p.reeb;
    let br: [f64; 4] = core::array::from_fn(|j| {
        let mut s = 0.0;
        for k in 0..4 {
            s += z[k].v * r[j].g[k] - r[k].v * z[j].g[k];
        }
        s
    });
    let fa: [f64; 4] = core::array::from_fn(|j| p.f.v.v * p.a[j].v);
    Ok(dot(&fa, &br))
}

/// Popp invariants as functions on X.
pub struct PoppData<'a> {
    pub qc: &'a QuasiContactStructure,
}

impl PoppData<'_> {
    pub fn scale(&self, x: [f64; 4]) -> Result<f64, GeometryError> {
        Ok(self.qc.point(x)?.f.v)
    }
    pub fn rho_hat(&self, x: [f64; 4]) -> Result<f64, GeometryError> {
        self.scale(x)
    }
    pub fn z(&self, x: [f64; 4]) -> Result<[f64; 4], GeometryError> {
        Ok(self.qc.point(x)?.z())
    }
    pub fn reeb(&self, x: [f64; 4]) -> Result<[f64; 4], GeometryError> {
        Ok(self.qc.point(x)?.reeb)
    }
    pub fn popp_density(&self, x: [f64; 4]) -> Result<f64, GeometryError> {
        Ok(self.qc.point(x)?.popp_density.v)
    }
    pub fn a_fn(&self, x: [f64; 4]) -> Result<f64, GeometryError> {
        Ok(self.qc.point(x)?.a_fn())
    }
}

/// Uniform sample lattice `n^4` on `[0,1)^4`.
pub fn lattice(n: usize) -> impl Iterator<Item = [f64; 4]> {
    let h = 1.0 / n as f64;
    (0..n * n * n * n).map(move |idx| {
        let i = [idx % n, (idx / n) % n, (idx / (n * n)) % n, idx / (n * n * n)];
        i.map(|v| v as f64 * h)
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvarianceReport {
    pub max_da_rz: f64,
    pub max_lz_ag: f64,
    pub max_lz_mu: f64,
    pub max_h_rho: f64,
    /// `max |L_Z μ + 2 da_g(R,Z) μ|`. Since `ι_Z μ = a_g∧da_g` and
    /// `L_Z a_g = -da_g(R,Z) a_g`, the Popp volume scales at twice the rate of `a_g`.
    pub max_mu_identity: f64,
    /// `max |L_Z μ + da_g(R,Z) μ|` (the relation with rate 1; nonzero when not volume preserving).
    pub max_mu_rate_one: f64,
    /// `max |L_Z a_g + da_g(R,Z) a_g|`.
    pub max_ag_identity: f64,
    pub max_reeb_residual: f64,
    pub max_annihilation: f64,
    pub max_unit_z: f64,
    pub volume_preserving: bool,
}

pub const VOLUME_TOL: f64 = 1e-10;

pub fn invariance_report(
    qc: &QuasiContactStructure,
    points: impl IntoIterator<Item = [f64; 4]>,
) -> Result<InvarianceReport, GeometryError> {
    let mut rep = InvarianceReport::default();
    for x in points {
        let p = qc.point(x)?;
        let fa = p.a.map(|c| c * p.f.v);
        rep.max_da_rz = rep.max_da_rz.max(p.da_rz.abs());
        let lz = p.lz_ag.iter().map(|v| v.abs()).fold(0.0, f64::max);
        rep.max_lz_ag = rep.max_lz_ag.max(lz);
        rep.max_lz_mu = rep.max_lz_mu.max(p.lz_mu.abs());
        rep.max_h_rho = rep.max_h_rho.max(reeb_bracket_term(qc, x)?.abs());
        rep.max_mu_identity =
            rep.max_mu_identity.max((p.lz_mu + 2.0 * p.da_rz * p.popp_density.v).abs());
        rep.max_mu_rate_one =
            rep.max_mu_rate_one.max((p.lz_mu + p.da_rz * p.popp_density.v).abs());
        let agi = (0..4).map(|j| (p.lz_ag[j] + p.da_rz * fa[j]).abs()).fold(0.0, f64::max);
        rep.max_ag_identity = rep.max_ag_identity.max(agi);
        let z = p.z();
        let res = [
            dot(&fa, &p.reeb) - 1.0,
            reeb_residual(&p, &p.b1),
            reeb_residual(&p, &p.b2),
        ];
        let rr = res.iter().map(|v| v.abs()).fold(0.0, f64::max);
        rep.max_reeb_residual = rep.max_reeb_residual.max(rr);
        rep.max_annihilation = rep.max_annihilation.max(p.annihilation_residual);
        // |Z| in the frame metric: Z = Σ c_i e_i with Σ c_i² = 1.
        let c = frame_components(&p.frame, &z);
        let unit = (c.iter().map(|v| v * v).sum::<f64>() - 1.0).abs();
        rep.max_unit_z = rep.max_unit_z.max(unit);
    }
    rep.volume_preserving = rep.max_da_rz <= VOLUME_TOL;
    Ok(rep)
}

/// `da_g(R, b)` for `b` in `(L^E)^⊥`.
fn reeb_residual(p: &PointGeometry<f64>, b: &[f64; 4]) -> f64 {
    let dfb = dot(&p.f.g, b);
    p.f.v * two_form(&p.da, &p.reeb, b) - dfb * dot(&p.a, &p.reeb)
}

/// Least-squares frame components of a vector lying in `E`.
pub fn frame_components(frame: &[[f64; 4]; 3], v: &[f64; 4]) -> [f64; 3] {
    let g: [[f64; 3]; 3] =
        core::array::from_fn(|i| core::array::from_fn(|j| dot(&frame[i], &frame[j])));
    let rhs: [f64; 3] = core::array::from_fn(|i| dot(&frame[i], v));
    let m = nalgebra::Matrix3::from_fn(|i, j| g[i][j]);
    let r = nalgebra::Vector3::from_fn(|i, _| rhs[i]);
    let sol = m.lu().solve(&r).unwrap_or_else(nalgebra::Vector3::zeros);
    [sol[0], sol[1], sol[2]]
}

/// Periodic trapezoidal quadrature of the Popp density on an `n^4` lattice.
pub fn integrate_popp(qc: &QuasiContactStructure, n: usize) -> Result<f64, GeometryError> {
    let mut s = 0.0;
    for x in lattice(n) {
        s += qc.point(x)?.popp_density.v;
    }
    Ok(s / (n * n * n * n) as f64)
}
