//! Built-in quasi-contact models on [0,1)^4.
//!
//! Each model returns its frame `e1, e2, e3` (declared orthonormal) and the
//! one-form `a` in coordinates, generically over [`Real`] so the same code
//! yields exact partials under dual-number evaluation.

use crate::real::Real;
use core::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Frame and one-form at a point: `frame[i][j]` is the `∂_j`-coefficient of `e_{i+1}`.
#[derive(Clone, Copy, Debug)]
pub struct FrameEval<S> {
    pub frame: [[S; 4]; 3],
    pub a: [S; 4],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappingTorusParams {
    /// Slope of the contact Hamiltonian at the centre (expansion rate of the flow there).
    pub kappa: f64,
    /// Radius of the bump support in the T³ factor.
    pub eps: f64,
    /// Centre in (x1, x2, x3).
    pub centre: [f64; 3],
}

impl Default for MappingTorusParams {
    fn default() -> Self {
        MappingTorusParams { kappa: 2.0, eps: 0.3, centre: [0.5, 0.5, 0.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    /// `S¹ × T³` with `E = span(∂x0, -sin ∂x1 + cos ∂x2, ∂x3)`, `a = cos dx1 + sin dx2`
    /// (angles `2πx3`).
    TrigTorus,
    /// `S¹ × (Γ\H)`: `e1 = ∂x0, e2 = ∂x1, e3 = ∂x2 - x1 ∂x3`, `a = dx3 + x1 dx2`.
    /// Coefficients are periodic only up to the lattice twist
    /// `(x1, x2, x3) ~ (x1 + 1, x2, x3 - x2)`.
    HeisenbergCircle,
    /// `S¹ × T³` with `E = ker α ⊕ ℝ(∂x0 + X_φ)` for a compactly supported contact
    /// Hamiltonian `φ`, whose flow expands near the centre.
    MappingTorus(MappingTorusParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::TrigTorus => "trig_torus",
            Model::HeisenbergCircle => "heisenberg_circle",
            Model::MappingTorus(_) => "mapping_torus",
        }
    }

    pub fn from_name(name: &str) -> Option<Model> {
        match name {
            "trig_torus" => Some(Model::TrigTorus),
            "heisenberg_circle" => Some(Model::HeisenbergCircle),
            "mapping_torus" => Some(Model::MappingTorus(MappingTorusParams::default())),
            _ => None,
        }
    }

    /// Coordinates the frame, the one-form and the Popp density do not depend on.
    pub fn invariant_axes(&self) -> [bool; 4] {
        match self {
            Model::TrigTorus => [true, true, true, false],
            Model::HeisenbergCircle => [true, false, true, true],
            Model::MappingTorus(_) => [true, false, false, false],
        }
    }

    pub fn eval<S: Real>(&self, x: [S; 4]) -> FrameEval<S> {
        match self {
            Model::TrigTorus => trig_torus(x),
            Model::HeisenbergCircle => heisenberg_circle(x),
            Model::MappingTorus(p) => mapping_torus(p, x),
        }
    }
}

fn trig_torus<S: Real>(x: [S; 4]) -> FrameEval<S> {
    let z = S::zero();
    let o = S::one();
    let th = x[3] * TAU;
    let (s, c) = (th.sin(), th.cos());
    FrameEval {
        frame: [[o, z, z, z], [z, -s, c, z], [z, z, z, o]],
        a: [z, c, s, z],
    }
}

fn heisenberg_circle<S: Real>(x: [S; 4]) -> FrameEval<S> {
    let z = S::zero();
    let o = S::one();
    FrameEval {
        frame: [[o, z, z, z], [z, o, z, z], [z, z, o, -x[1]]],
        a: [z, z, x[1], o],
    }
}

/// C³ bump: 1 on [0, 1/2], smoothstep down to 0 at 1.
fn bump<S: Real>(r: S) -> S {
    let rv = r.val();
    if rv <= 0.5 {
        return S::one();
    }
    if rv >= 1.0 {
        return S::zero();
    }
    let t = r * 2.0 - 1.0;
    let t4 = t.powi(4);
    // 1 - (35 t^4 - 84 t^5 + 70 t^6 - 20 t^7)
    let p = t4 * (((t * -20.0 + 70.0) * t - 84.0) * t + 35.0);
    -p + 1.0
}

/// Contact Hamiltonian `φ = κ (x1 - c1) χ(|x - c| / ε)` on T³ (minimum image).
fn hamiltonian<S: Real>(p: &MappingTorusParams, x: [S; 4]) -> S {
    let mut d = [S::zero(); 3];
    let mut r2 = 0.0;
    for i in 0..3 {
        let raw = x[i + 1].val() - p.centre[i];
        let shift = libm::floor(raw + 0.5);
        d[i] = x[i + 1] - (p.centre[i] + shift);
        r2 += (raw - shift) * (raw - shift);
    }
    let lin = d[0] * p.kappa;
    let rv = libm::sqrt(r2) / p.eps;
    if rv <= 0.5 {
        return lin;
    }
    if rv >= 1.0 {
        return S::zero();
    }
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() / p.eps;
    lin * bump(r)
}

/// Gradient of the Hamiltonian as a tuple of scalars of the same kind, obtained by
/// evaluating it one derivative level deeper.
fn hamiltonian_with_grad<S: Real>(p: &MappingTorusParams, x: [S; 4]) -> (S, [S; 4]) {
    use crate::real::Dual;
    let xs: [Dual<S>; 4] = core::array::from_fn(|k| Dual::var(x[k], k));
    let h = hamiltonian(p, xs);
    (h.v, h.g)
}

fn mapping_torus<S: Real>(p: &MappingTorusParams, x: [S; 4]) -> FrameEval<S> {
    let z = S::zero();
    let o = S::one();
    let th = x[3] * TAU;
    let (s, c) = (th.sin(), th.cos());
    let (phi, dphi) = hamiltonian_with_grad(p, x);
    // X_φ = φ R_α + (∂3 φ / 2π) u - (u(φ) / 2π) ∂3, R_α = c∂1 + s∂2, u = -s∂1 + c∂2
    let u_phi = -s * dphi[1] + c * dphi[2];
    let p3 = dphi[3] / TAU;
    let h = [
        z,
        phi * c - p3 * s,
        phi * s + p3 * c,
        -u_phi / TAU,
    ];
    FrameEval {
        frame: [[o, h[1], h[2], h[3]], [z, -s, c, z], [z, z, z, o]],
        a: [-phi, c, s, z],
    }
}

/// The contact Hamiltonian of the mapping-torus model (plain evaluation).
pub fn mapping_torus_hamiltonian(p: &MappingTorusParams, x: [f64; 4]) -> f64 {
    hamiltonian(p, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_smooth_at_joins() {
        let h = 1e-7;
        for &r0 in &[0.5, 1.0] {
            let l = bump(r0 - h);
            let rr = bump(r0 + h);
            assert!((l - rr).abs() < 1e-6);
        }
        assert_eq!(bump(0.2), 1.0);
        assert_eq!(bump(1.2), 0.0);
        assert!((bump(0.75) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_form_annihilates_frame() {
        for m in [
            Model::TrigTorus,
            Model::HeisenbergCircle,
            Model::MappingTorus(MappingTorusParams::default()),
        ] {
            for &x in &[[0.1, 0.2, 0.3, 0.4], [0.0, 0.5, 0.45, 0.03], [0.9, 0.6, 0.4, 0.95]] {
                let f = m.eval(x);
                for e in f.frame.iter() {
                    let s: f64 = (0..4).map(|j| e[j] * f.a[j]).sum();
                    assert!(s.abs() < 1e-12, "{} {:?}", m.name(), x);
                }
            }
        }
    }
}
