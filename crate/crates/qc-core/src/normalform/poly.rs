//! Polynomials over `ℚ(i)` in the base variables `(ε, x0, x2, x̂3, ξ̂2)`.

use alloc::collections::BTreeMap;
use core::fmt;
use num_bigint::BigInt;
use num_rational::BigRational;

use super::field::Qi;

pub const EPS: usize = 0;
pub const X0: usize = 1;
pub const X2: usize = 2;
pub const X3: usize = 3;
pub const XI2: usize = 4;
pub const BASE_VARS: [&str; 5] = ["eps", "x0", "x2", "x3", "xi2"];

pub type Exps = [u32; 5];

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BasePoly {
    pub terms: BTreeMap<Exps, Qi>,
}

impl BasePoly {
    pub fn zero() -> Self {
        BasePoly::default()
    }

    pub fn constant(c: Qi) -> Self {
        let mut p = BasePoly::zero();
        p.add_term([0; 5], c);
        p
    }

    pub fn monomial(e: Exps, c: Qi) -> Self {
        let mut p = BasePoly::zero();
        p.add_term(e, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Exps, c: Qi) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_default();
        *entry += &c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &BasePoly) -> BasePoly {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }

    pub fn add_assign(&mut self, o: &BasePoly) {
        for (e, c) in &o.terms {
            self.add_term(*e, c.clone());
        }
    }

    pub fn neg(&self) -> BasePoly {
        BasePoly { terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect() }
    }

    pub fn sub(&self, o: &BasePoly) -> BasePoly {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Qi) -> BasePoly {
        let mut out = BasePoly::zero();
        for (e, v) in &self.terms {
            out.add_term(*e, v * c);
        }
        out
    }

    /// Product with all terms of `ε`-degree above `eps_order` dropped.
    pub fn mul(&self, o: &BasePoly, eps_order: u32) -> BasePoly {
        let mut out = BasePoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                if e1[EPS] + e2[EPS] > eps_order {
                    continue;
                }
                let e: Exps = core::array::from_fn(|k| e1[k] + e2[k]);
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn derivative(&self, var: usize) -> BasePoly {
        let mut out = BasePoly::zero();
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut f = *e;
            f[var] -= 1;
            out.add_term(f, c.scale(&BigRational::from_integer(BigInt::from(e[var]))));
        }
        out
    }

    /// `∫_0^{x0} p dx0`.
    pub fn integrate_x0(&self) -> BasePoly {
        let mut out = BasePoly::zero();
        for (e, c) in &self.terms {
            let mut f = *e;
            f[X0] += 1;
            out.add_term(f, c.scale(&BigRational::new(BigInt::from(1), BigInt::from(f[X0]))));
        }
        out
    }

    pub fn truncate_eps(&self, eps_order: u32) -> BasePoly {
        BasePoly { terms: self.terms.iter().filter(|(e, _)| e[EPS] <= eps_order).map(|(e, c)| (*e, c.clone())).collect() }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.keys().any(|e| e[var] > 0)
    }

    pub fn constant_term(&self) -> Qi {
        self.terms.get(&[0; 5]).cloned().unwrap_or_default()
    }

    /// Part of `ε`-degree exactly `k`.
    pub fn eps_part(&self, k: u32) -> BasePoly {
        BasePoly { terms: self.terms.iter().filter(|(e, _)| e[EPS] == k).map(|(e, c)| (*e, c.clone())).collect() }
    }

    pub fn conj(&self) -> BasePoly {
        BasePoly { terms: self.terms.iter().map(|(e, c)| (*e, c.conj())).collect() }
    }

    /// `1/p` as a power series in `ε` up to `eps_order`, if the `ε⁰` part is a nonzero constant.
    pub fn eps_inverse(&self, eps_order: u32) -> Option<BasePoly> {
        let lead = self.eps_part(0);
        if lead.terms.len() != 1 || !lead.terms.contains_key(&[0; 5]) {
            return None;
        }
        let c0inv = lead.constant_term().inv()?;
        // 1/(c0 + q) = Σ_j (-q)^j / c0^{j+1}, q = O(ε)
        let q = self.sub(&lead);
        let mq = q.neg().scale(&c0inv);
        let mut term = BasePoly::constant(c0inv.clone());
        let mut sum = term.clone();
        for _ in 0..eps_order {
            term = term.mul(&mq, eps_order);
            if term.is_zero() {
                break;
            }
            sum.add_assign(&term);
        }
        Some(sum)
    }

    pub fn eval_f64(&self, vals: [f64; 5]) -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = 1.0;
            for k in 0..5 {
                m *= libm::pow(vals[k], e[k] as f64);
            }
            let (a, b) = c.to_f64();
            re += a * m;
            im += b * m;
        }
        (re, im)
    }
}

impl fmt::Display for BasePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for k in 0..5 {
                match e[k] {
                    0 => {}
                    1 => write!(f, "*{}", BASE_VARS[k])?,
                    n => write!(f, "*{}^{n}", BASE_VARS[k])?,
                }
            }
        }
        Ok(())
    }
}
