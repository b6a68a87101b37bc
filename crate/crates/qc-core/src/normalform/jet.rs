//! Graded jets in `(ξ̂0, z, z̄)` with base-polynomial coefficients, and the
//! Poisson bracket in the canonical pairs `(x0, ξ̂0)`, `(x1, ξ̂1)`, `(x2, ξ̂2)`
//! with `z = x1 + iξ̂1`, so that `{z, z̄} = −2i`.

use alloc::collections::BTreeMap;
use core::fmt;
use num_bigint::BigInt;
use num_rational::BigRational;

use super::field::Qi;
use super::poly::{BasePoly, X0, X2, XI2};

/// Powers `(a, b, c)` of `ξ̂0, z, z̄`.
pub type Mono = [u32; 3];

pub fn grading(m: &Mono) -> u32 {
    2 * m[0] + m[1] + m[2]
}

/// Invariant under the `Ω = zz̄` rotation and free of `ξ̂0`.
pub fn is_invariant(m: &Mono) -> bool {
    m[0] == 0 && m[1] == m[2]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSymbol {
    pub terms: BTreeMap<Mono, BasePoly>,
    /// Largest grading stored.
    pub n_max: u32,
    /// Largest power of `ε` stored.
    pub eps_order: u32,
}

impl JetSymbol {
    pub fn new(n_max: u32, eps_order: u32) -> Self {
        JetSymbol { terms: BTreeMap::new(), n_max, eps_order }
    }

    pub fn empty_like(&self) -> Self {
        JetSymbol::new(self.n_max, self.eps_order)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `p·ξ̂0^a z^b z̄^c`; returns `false` (dropping it) if the grading exceeds `n_max`.
    pub fn add_term(&mut self, m: Mono, p: &BasePoly) -> bool {
        let p = p.truncate_eps(self.eps_order);
        if p.is_zero() {
            return true;
        }
        if grading(&m) > self.n_max {
            return false;
        }
        let entry = self.terms.entry(m).or_default();
        entry.add_assign(&p);
        if entry.is_zero() {
            self.terms.remove(&m);
        }
        true
    }

    pub fn coefficient(&self, m: Mono) -> BasePoly {
        self.terms.get(&m).cloned().unwrap_or_default()
    }

    pub fn add(&self, o: &JetSymbol) -> JetSymbol {
        let mut out = self.clone();
        for (m, p) in &o.terms {
            out.add_term(*m, p);
        }
        out
    }

    pub fn sub(&self, o: &JetSymbol) -> JetSymbol {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> JetSymbol {
        let mut out = self.clone();
        for p in out.terms.values_mut() {
            *p = p.neg();
        }
        out
    }

    pub fn scale(&self, c: &Qi) -> JetSymbol {
        let mut out = self.empty_like();
        for (m, p) in &self.terms {
            out.add_term(*m, &p.scale(c));
        }
        out
    }

    /// Product, truncated; the flag reports whether nonzero terms were dropped for grading.
    pub fn mul_checked(&self, o: &JetSymbol) -> (JetSymbol, bool) {
        let mut out = self.empty_like();
        let mut overflow = false;
        for (m1, p1) in &self.terms {
            for (m2, p2) in &o.terms {
                let m = [m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2]];
                if grading(&m) > self.n_max {
                    if !p1.mul(p2, self.eps_order).is_zero() {
                        overflow = true;
                    }
                    continue;
                }
                out.add_term(m, &p1.mul(p2, self.eps_order));
            }
        }
        (out, overflow)
    }

    pub fn mul(&self, o: &JetSymbol) -> JetSymbol {
        self.mul_checked(o).0
    }

    /// `∂/∂ξ̂0`, `∂/∂z`, `∂/∂z̄` for `slot = 0, 1, 2`.
    fn d_fibre(&self, slot: usize) -> JetSymbol {
        let mut out = JetSymbol::new(2 * self.n_max, self.eps_order);
        for (m, p) in &self.terms {
            if m[slot] == 0 {
                continue;
            }
            let mut n = *m;
            n[slot] -= 1;
            let k = Qi::new(BigRational::from_integer(BigInt::from(m[slot])), BigRational::default());
            out.add_term(n, &p.scale(&k));
        }
        out
    }

    fn d_base(&self, var: usize) -> JetSymbol {
        let mut out = JetSymbol::new(2 * self.n_max, self.eps_order);
        for (m, p) in &self.terms {
            out.add_term(*m, &p.derivative(var));
        }
        out
    }

    /// Terms of grading exactly `n`.
    pub fn grading_part(&self, n: u32) -> JetSymbol {
        self.filter(|m| grading(m) == n)
    }

    pub fn filter(&self, keep: impl Fn(&Mono) -> bool) -> JetSymbol {
        let mut out = self.empty_like();
        for (m, p) in &self.terms {
            if keep(m) {
                out.terms.insert(*m, p.clone());
            }
        }
        out
    }

    pub fn with_n_max(&self, n_max: u32) -> JetSymbol {
        let mut out = JetSymbol::new(n_max, self.eps_order);
        for (m, p) in &self.terms {
            out.add_term(*m, p);
        }
        out
    }

    pub fn min_grading(&self) -> Option<u32> {
        self.terms.keys().map(grading).min()
    }

    /// `r̄_{abc} = r_{acb}` for every stored monomial.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(m, p)| self.coefficient([m[0], m[2], m[1]]) == p.conj())
            && self.terms.keys().all(|m| self.terms.contains_key(&[m[0], m[2], m[1]]))
    }
}

/// `{f, g}` with truncation; the flag reports dropped nonzero terms of grading `> n_max`.
pub fn poisson_bracket_checked(f: &JetSymbol, g: &JetSymbol) -> (JetSymbol, bool) {
    let n_max = f.n_max.min(g.n_max);
    let eps = f.eps_order.min(g.eps_order);
    let cap = 2 * n_max;
    let wide = |j: JetSymbol| JetSymbol { n_max: cap, eps_order: eps, ..j };
    let mut out = JetSymbol::new(cap, eps);
    // (x0, ξ̂0)
    out = out.add(&wide(f.d_base(X0)).mul(&g.d_fibre(0)));
    out = out.sub(&wide(f.d_fibre(0)).mul(&g.d_base(X0)));
    // (x2, ξ̂2)
    out = out.add(&wide(f.d_base(X2)).mul(&g.d_base(XI2)));
    out = out.sub(&wide(f.d_base(XI2)).mul(&g.d_base(X2)));
    // (z, z̄) with {z, z̄} = -2i
    let zz = wide(f.d_fibre(1)).mul(&g.d_fibre(2)).sub(&wide(f.d_fibre(2)).mul(&g.d_fibre(1)));
    out = out.add(&zz.scale(&Qi::new(BigRational::default(), BigRational::from_integer(BigInt::from(-2)))));
    let overflow = out.terms.keys().any(|m| grading(m) > n_max);
    (out.with_n_max(n_max), overflow)
}

pub fn poisson_bracket(f: &JetSymbol, g: &JetSymbol) -> JetSymbol {
    poisson_bracket_checked(f, g).0
}

/// `exp(ad_g) f = Σ_k ad_g^k f / k!` with `ad_g f = {g, f}`. The series is cut when a term
/// vanishes; `None` if it has not terminated after `limit` terms.
pub fn exp_ad(g: &JetSymbol, f: &JetSymbol, limit: usize) -> Option<JetSymbol> {
    let mut sum = f.clone();
    let mut term = f.clone();
    for k in 1..=limit {
        term = poisson_bracket(g, &term);
        if term.is_zero() {
            return Some(sum);
        }
        let inv_k = Qi::from_ratio(1, k as i64);
        term = term.scale(&inv_k);
        sum = sum.add(&term);
    }
    None
}

impl fmt::Display for JetSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "xi0^{} z^{} zb^{} : {}", m[0], m[1], m[2], p)?;
        }
        Ok(())
    }
}
