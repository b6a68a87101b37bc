//! Formal Birkhoff normal form of a symbol `ξ̂0² + 2ρ̂ zz̄ + εP` in the graded
//! jet algebra: the generator `g` with `exp(ad_g)` removing every monomial that
//! is not a function of `zz̄` below the truncation grading.
//!
//! Coefficients are exact polynomials over `ℚ(i)` in `(ε, x0, x2, x̂3, ξ̂2)`,
//! truncated only in the `ε`-order. Every correction's side effects are one
//! `ε`-order higher than the correction itself, which is what makes the
//! iteration terminate.

mod field;
mod jet;
mod poly;

use core::fmt;

pub use field::Qi;
pub use jet::{exp_ad, grading, is_invariant, poisson_bracket, poisson_bracket_checked, JetSymbol, Mono};
pub use poly::{BasePoly, Exps, BASE_VARS, EPS, X0, X2, X3, XI2};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BnfError {
    /// The `ε⁰` part of `ρ̂` is not a nonzero constant.
    NonInvertibleRho,
    /// `ρ̂` depends on `x0`; the homological solution would not close.
    RhoDependsOnX0,
    /// Leading part is not `ξ̂0² + 2ρ̂ zz̄` (grading-2 terms other than `zz̄`, or `ξ̂0²` not 1 + O(ε)).
    InvalidLeading(&'static str),
    /// A term outside the leading block carries no power of `ε`.
    UntaggedPerturbation { mono: Mono },
    /// A non-invariant monomial of grading `grading` survived the correction passes.
    ResonanceLeak { grading: u32 },
}

impl fmt::Display for BnfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BnfError::NonInvertibleRho => write!(f, "ρ̂ must be a nonzero constant plus O(ε)"),
            BnfError::RhoDependsOnX0 => write!(f, "ρ̂ must not depend on x0"),
            BnfError::InvalidLeading(s) => write!(f, "leading part is not ξ̂0² + 2ρ̂zz̄: {s}"),
            BnfError::UntaggedPerturbation { mono } => {
                write!(f, "term xi0^{} z^{} zb^{} has an ε⁰ part outside the leading block", mono[0], mono[1], mono[2])
            }
            BnfError::ResonanceLeak { grading } => {
                write!(f, "non-invariant terms persist at grading {grading}")
            }
        }
    }
}

/// Monomial of the leading `ξ̂0²`; grading 4, since `ξ̂0` has weight 2.
pub const XI0_SQ: Mono = [2, 0, 0];

/// `ξ̂0² + 2ρ̂ zz̄`.
pub fn leading_block(rho: &BasePoly, n_max: u32, eps_order: u32) -> JetSymbol {
    let mut j = JetSymbol::new(n_max.max(4), eps_order);
    j.add_term(XI0_SQ, &BasePoly::constant(Qi::one()));
    j.add_term([0, 1, 1], &rho.scale(&Qi::from_int(2)));
    j
}

/// Reads `ρ̂` off the `zz̄` coefficient and checks the preconditions.
pub fn extract_rho(sym: &JetSymbol) -> Result<BasePoly, BnfError> {
    if sym.n_max < 4 {
        return Err(BnfError::InvalidLeading("truncation below the grading of ξ̂0²"));
    }
    for (m, _) in &sym.terms {
        if grading(m) < 2 || (grading(m) == 2 && *m != [0, 1, 1]) {
            return Err(BnfError::InvalidLeading("only 2ρ̂zz̄ may have grading ≤ 2"));
        }
    }
    if sym.coefficient(XI0_SQ).eps_part(0) != BasePoly::constant(Qi::one()) {
        return Err(BnfError::InvalidLeading("coefficient of ξ̂0² must be 1 + O(ε)"));
    }
    let rho = sym.coefficient([0, 1, 1]).scale(&Qi::from_ratio(1, 2));
    if rho.eps_inverse(sym.eps_order).is_none() {
        return Err(BnfError::NonInvertibleRho);
    }
    if rho.depends_on(X0) {
        return Err(BnfError::RhoDependsOnX0);
    }
    for (m, p) in &sym.terms {
        if grading(m) > 2 && *m != XI0_SQ && !p.eps_part(0).is_zero() {
            return Err(BnfError::UntaggedPerturbation { mono: *m });
        }
    }
    Ok(rho)
}

/// Generator removing the given non-invariant monomials at leading order:
/// `s_abc = r_abc / (4i(b−c)ρ̂)` for `b ≠ c`, and for `b = c`, `a ≥ 1` the term
/// `S ξ̂0^{a−1}(zz̄)^b` with `S = −½∫_0^{x0} r_abb`.
pub fn solve_homological(part: &JetSymbol, rho_inv: &BasePoly) -> JetSymbol {
    let mut g = part.empty_like();
    for (m, r) in &part.terms {
        let [a, b, c] = *m;
        if b != c {
            // 1/(4i(b−c)) = −i/(4(b−c))
            let k = Qi::i().scale(&num_rational::BigRational::new((-1).into(), (4 * (b as i64 - c as i64)).into()));
            g.add_term(*m, &r.mul(rho_inv, part.eps_order).scale(&k));
        } else if a >= 1 {
            g.add_term([a - 1, b, b], &r.integrate_x0().scale(&Qi::from_ratio(-1, 2)));
        }
    }
    g
}

fn series_limit(sym: &JetSymbol) -> usize {
    (sym.eps_order + sym.n_max + 4) as usize
}

fn conjugate(g: &JetSymbol, sym: &JetSymbol) -> JetSymbol {
    // every generator term is O(ε), so each bracket raises the ε-order and the series ends
    exp_ad(g, sym, series_limit(sym)).expect("exp-ad series terminates for O(ε) generators")
}

/// Non-invariant part of grading `n`, not counting the leading `ξ̂0²`.
pub fn non_invariant(sym: &JetSymbol, n: u32) -> JetSymbol {
    let mut part = sym.filter(|m| grading(m) == n && !is_invariant(m));
    if n == grading(&XI0_SQ) {
        part.add_term(XI0_SQ, &BasePoly::constant(-Qi::one()));
    }
    part
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub g_increment: JetSymbol,
    /// Invariant grading-`N` part after the step (`(zz̄)^{N/2}` terms; zero for odd `N`).
    pub r_increment: JetSymbol,
    pub next: JetSymbol,
}

/// Removes the non-invariant grading-`n` part of `current`. The generator is refined until
/// the grading-`n` part is clean; at most `ε`-order + 1 refinements are needed.
pub fn bnf_step(current: &JetSymbol, n: u32) -> Result<StepResult, BnfError> {
    let rho = extract_rho(current)?;
    let rho_inv = rho.eps_inverse(current.eps_order).ok_or(BnfError::NonInvertibleRho)?;
    let mut g = current.empty_like();
    for _ in 0..=current.eps_order + 1 {
        let next = conjugate(&g, current);
        let part = non_invariant(&next, n);
        if part.is_zero() {
            let r_increment = next.filter(|m| grading(m) == n && is_invariant(m));
            return Ok(StepResult { g_increment: g, r_increment, next });
        }
        g = g.add(&solve_homological(&part, &rho_inv));
    }
    Err(BnfError::ResonanceLeak { grading: n })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnfResult {
    /// Accumulated generator `g`.
    pub generator: JetSymbol,
    /// Invariant part of grading `3 ≤ N < N_max`: functions of `zz̄` and the base.
    pub remainder: JetSymbol,
    /// Grading `N_max` part of the conjugated symbol.
    pub residual: JetSymbol,
    /// `exp(ad_g)(initial)`.
    pub normalized: JetSymbol,
    pub rho_hat: BasePoly,
    /// Number of homological solves performed.
    pub passes: usize,
}

/// Normal form below grading `n_max`: repeatedly conjugates the initial symbol by the
/// accumulated generator and solves the homological equation at the lowest grading
/// where a non-invariant monomial remains.
pub fn birkhoff_normal_form(initial: &JetSymbol, n_max: u32) -> Result<BnfResult, BnfError> {
    let work = initial.with_n_max(n_max);
    let rho = extract_rho(&work)?;
    let rho_inv = rho.eps_inverse(work.eps_order).ok_or(BnfError::NonInvertibleRho)?;
    let mut g = work.empty_like();
    let limit = ((n_max as usize) * (work.eps_order as usize + 1) + 1) * 2;
    let mut passes = 0;
    loop {
        let cur = conjugate(&g, &work);
        let lowest = (3..n_max).find(|&n| !non_invariant(&cur, n).is_zero());
        match lowest {
            None => {
                let remainder = cur.filter(|m| is_invariant(m) && grading(m) >= 3 && grading(m) < n_max);
                let residual = cur.filter(|m| grading(m) >= n_max);
                return Ok(BnfResult { generator: g, remainder, residual, normalized: cur, rho_hat: rho, passes });
            }
            Some(n) => {
                if passes >= limit {
                    return Err(BnfError::ResonanceLeak { grading: n });
                }
                g = g.add(&solve_homological(&non_invariant(&cur, n), &rho_inv));
                passes += 1;
            }
        }
    }
}
