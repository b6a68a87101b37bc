use num_rational::BigRational;
use proptest::prelude::*;
use qc_core::normalform::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

// ---------------------------------------------------------------- real-coordinate oracle
// Variables: ε, x0, ξ0, x1, ξ1, x2, ξ2, x3.
type RExp = [u32; 8];
#[derive(Clone, Debug, Default, PartialEq)]
struct RPoly(BTreeMap<RExp, Qi>);

const R_EPS: usize = 0;
const PAIRS: [(usize, usize); 3] = [(1, 2), (3, 4), (5, 6)];

impl RPoly {
    fn add_term(&mut self, e: RExp, c: Qi) {
        if c.is_zero() {
            return;
        }
        let v = self.0.entry(e).or_default();
        *v += &c;
        if v.is_zero() {
            self.0.remove(&e);
        }
    }
    fn grading(e: &RExp) -> u32 {
        2 * e[2] + e[3] + e[4]
    }
    fn add(&self, o: &RPoly) -> RPoly {
        let mut r = self.clone();
        for (e, c) in &o.0 {
            r.add_term(*e, c.clone());
        }
        r
    }
    fn mul(&self, o: &RPoly, n_max: u32, k: u32) -> RPoly {
        let mut r = RPoly::default();
        for (e1, c1) in &self.0 {
            for (e2, c2) in &o.0 {
                let e: RExp = std::array::from_fn(|i| e1[i] + e2[i]);
                if e[R_EPS] <= k && Self::grading(&e) <= n_max {
                    r.add_term(e, c1 * c2);
                }
            }
        }
        r
    }
    fn d(&self, v: usize) -> RPoly {
        let mut r = RPoly::default();
        for (e, c) in &self.0 {
            if e[v] > 0 {
                let mut f = *e;
                f[v] -= 1;
                r.add_term(f, c * &Qi::from_int(e[v] as i64));
            }
        }
        r
    }
    fn scale(&self, c: &Qi) -> RPoly {
        let mut r = RPoly::default();
        for (e, v) in &self.0 {
            r.add_term(*e, v * c);
        }
        r
    }
    fn bracket(&self, o: &RPoly, n_max: u32, k: u32) -> RPoly {
        let mut r = RPoly::default();
        for (x, xi) in PAIRS {
            r = r.add(&self.d(x).mul(&o.d(xi), n_max, k));
            r = r.add(&self.d(xi).mul(&o.d(x), n_max, k).scale(&Qi::from_int(-1)));
        }
        r
    }
}

fn var(i: usize, c: Qi) -> RPoly {
    let mut e = [0; 8];
    e[i] = 1;
    let mut p = RPoly::default();
    p.add_term(e, c);
    p
}

fn one() -> RPoly {
    let mut p = RPoly::default();
    p.add_term([0; 8], Qi::one());
    p
}

fn to_real(j: &JetSymbol) -> RPoly {
    let big = 64;
    let k = j.eps_order;
    let z = var(3, Qi::one()).add(&var(4, Qi::i()));
    let zb = var(3, Qi::one()).add(&var(4, -Qi::i()));
    let mut out = RPoly::default();
    for (m, p) in &j.terms {
        let mut t = RPoly::default();
        for (e, c) in &p.terms {
            t.add_term([e[EPS], e[X0], 0, 0, 0, e[X2], e[XI2], e[X3]], c.clone());
        }
        for _ in 0..m[0] {
            t = t.mul(&var(2, Qi::one()), big, k);
        }
        for _ in 0..m[1] {
            t = t.mul(&z, big, k);
        }
        for _ in 0..m[2] {
            t = t.mul(&zb, big, k);
        }
        out = out.add(&t);
    }
    out
}

/// `x1 = (z + z̄)/2`, `ξ1 = (z − z̄)/(2i)`; returns coefficients on `ξ0^a z^b z̄^c`.
fn from_real(p: &RPoly, k: u32) -> BTreeMap<(u32, u32, u32), BTreeMap<RExp, Qi>> {
    // represent in a ring with slots [ε, x0, ξ0, z, z̄, x2, ξ2, x3]
    let half = Qi::from_ratio(1, 2);
    let x1 = var(3, half.clone()).add(&var(4, half.clone()));
    let mhi = Qi::i().scale(&BigRational::new((-1).into(), 2.into())); // 1/(2i) = -i/2
    let xi1 = var(3, mhi.clone()).add(&var(4, -mhi));
    let mut out: BTreeMap<(u32, u32, u32), BTreeMap<RExp, Qi>> = BTreeMap::new();
    for (e, c) in &p.0 {
        let mut t = one().scale(c);
        for _ in 0..e[3] {
            t = t.mul(&x1, 1000, k);
        }
        for _ in 0..e[4] {
            t = t.mul(&xi1, 1000, k);
        }
        for (f, v) in &t.0 {
            let key = (e[2], f[3], f[4]);
            let base: RExp = [e[0], e[1], 0, 0, 0, e[5], e[6], e[7]];
            let slot = out.entry(key).or_default();
            let s = slot.entry(base).or_default();
            *s += v;
            if s.is_zero() {
                slot.remove(&base);
            }
        }
    }
    out.retain(|_, v| !v.is_empty());
    out
}

fn oracle_conjugate(g: &JetSymbol, h: &JetSymbol, n_max: u32) -> RPoly {
    let k = h.eps_order;
    let gr = to_real(g);
    let mut term = to_real(h);
    // truncate the input itself
    term.0.retain(|e, _| RPoly::grading(e) <= n_max && e[R_EPS] <= k);
    let mut sum = term.clone();
    for j in 1..40 {
        term = gr.bracket(&term, n_max, k).scale(&Qi::from_ratio(1, j));
        if term.0.is_empty() {
            return sum;
        }
        sum = sum.add(&term);
    }
    panic!("oracle series did not terminate");
}

fn assert_normal_below(g: &JetSymbol, h: &JetSymbol, n_max: u32) {
    let conj = oracle_conjugate(g, h, n_max);
    let back = from_real(&conj, h.eps_order);
    for ((a, b, c), coeffs) in &back {
        let gr = 2 * a + b + c;
        let mut coeffs = coeffs.clone();
        if (*a, *b, *c) == (2, 0, 0) {
            let s = coeffs.entry([0; 8]).or_default();
            *s += &-Qi::one();
            if s.is_zero() {
                coeffs.remove(&[0; 8]);
            }
        }
        if gr < n_max && gr >= 3 && !coeffs.is_empty() {
            let invariant = *a == 0 && b == c;
            assert!(invariant, "non-invariant ξ0^{a} z^{b} zb^{c} survives: {coeffs:?}");
        }
    }
}

// ---------------------------------------------------------------- helpers

fn c(p: i64, q: i64) -> Qi {
    Qi::from_ratio(p, q)
}

fn mono(e: [u32; 5], q: Qi) -> BasePoly {
    BasePoly::monomial(e, q)
}

fn leading(rho: &BasePoly, n_max: u32, k: u32) -> JetSymbol {
    leading_block(rho, n_max, k)
}

#[test]
fn bracket_eigenvalue_on_monomials() {
    let rho = BasePoly::constant(c(3, 2));
    let mut omega = JetSymbol::new(10, 2);
    omega.add_term([0, 1, 1], &rho.scale(&Qi::from_int(2)));
    for (b, cc) in [(2u32, 1u32), (3, 0), (1, 4), (2, 2)] {
        let mut m = JetSymbol::new(10, 2);
        m.add_term([0, b, cc], &BasePoly::constant(Qi::one()));
        let br = poisson_bracket(&omega, &m);
        // {2ρ̂ zz̄, z^b z̄^c} = 4iρ̂(b−c) z^b z̄^c
        let want = Qi::i().scale(&BigRational::from_integer((4 * (b as i64 - cc as i64)).into())) ;
        let want = &want * &c(3, 2);
        assert_eq!(br.coefficient([0, b, cc]), BasePoly::constant(want));
        assert_eq!(br.terms.len(), if b == cc { 0 } else { 1 });
    }
    // canonical pairing {x0, ξ̂0}
    let mut x0 = JetSymbol::new(4, 1);
    x0.add_term([0, 0, 0], &mono([0, 1, 0, 0, 0], Qi::one()));
    let mut xi0 = JetSymbol::new(4, 1);
    xi0.add_term([1, 0, 0], &BasePoly::constant(Qi::one()));
    assert_eq!(poisson_bracket(&x0, &xi0).coefficient([0, 0, 0]), BasePoly::constant(Qi::one()));
}

#[test]
fn single_cubic_perturbation() {
    let rho = BasePoly::constant(c(3, 2));
    let mut h = leading(&rho, 8, 2);
    h.add_term([0, 2, 1], &mono([1, 0, 0, 0, 0], Qi::one()));
    let st = bnf_step(&h, 3).unwrap();
    // ε / (4iρ̂) = -iε/6 for ρ̂ = 3/2
    let want = mono([1, 0, 0, 0, 0], &Qi::i() * &c(-1, 6));
    assert_eq!(st.g_increment.coefficient([0, 2, 1]), want);
    assert_eq!(st.g_increment.terms.len(), 1);
    assert!(st.next.grading_part(3).is_zero());
    assert!(st.r_increment.is_zero());
}

#[test]
fn quartic_invariant_goes_to_remainder() {
    let rho = BasePoly::constant(Qi::one());
    let mut h = leading(&rho, 8, 2);
    let e = mono([1, 0, 0, 0, 0], c(5, 7));
    h.add_term([0, 2, 2], &e);
    let st = bnf_step(&h, 4).unwrap();
    assert!(st.g_increment.is_zero());
    assert_eq!(st.r_increment.coefficient([0, 2, 2]), e);
    let res = birkhoff_normal_form(&h, 8).unwrap();
    assert!(res.generator.is_zero());
    assert_eq!(res.remainder.coefficient([0, 2, 2]), e);
}

#[test]
fn already_normal_is_fixed() {
    let rho = BasePoly::constant(c(2, 1)).add(&mono([1, 0, 1, 0, 0], Qi::one()));
    let h = leading(&rho, 8, 2);
    for n in 3..8 {
        let st = bnf_step(&h, n).unwrap();
        assert!(st.g_increment.is_zero() && st.r_increment.is_zero());
        assert_eq!(st.next, h);
    }
}

#[test]
fn integral_branch() {
    let rho = BasePoly::constant(Qi::one());
    let mut h = leading(&rho, 8, 2);
    // ε ξ̂0 zz̄ with r = ε(1 + x0)
    let r = mono([1, 0, 0, 0, 0], Qi::one()).add(&mono([1, 1, 0, 0, 0], Qi::one()));
    h.add_term([1, 1, 1], &r);
    let st = bnf_step(&h, 4).unwrap();
    // S = -½∫_0^{x0} r = -½ε(x0 + x0²/2)
    let s = mono([1, 1, 0, 0, 0], c(-1, 2)).add(&mono([1, 2, 0, 0, 0], c(-1, 4)));
    assert_eq!(st.g_increment.coefficient([0, 1, 1]), s);
    assert!(non_invariant(&st.next, 4).is_zero());
    let res = birkhoff_normal_form(&h, 8).unwrap();
    assert_normal_below(&res.generator, &h, 8);
}


/// Real perturbation: for each (a,b,c) with b ≥ c a random coefficient r, and r̄ at (a,c,b).
fn random_real_perturbation(rng: &mut ChaCha8Rng, n_max: u32, k: u32, min_grading: u32) -> JetSymbol {
    let mut p = JetSymbol::new(n_max, k);
    for a in 0..=n_max / 2 {
        for b in 0..=n_max {
            for cc in 0..=b {
                let m = [a, b, cc];
                let g = grading(&m);
                if g < min_grading || g >= n_max || rng.gen_bool(0.6) {
                    continue;
                }
                let mut poly = BasePoly::zero();
                for _ in 0..rng.gen_range(1..3) {
                    let e = [1, rng.gen_range(0..2), rng.gen_range(0..2), rng.gen_range(0..2), rng.gen_range(0..2)];
                    let re = c(rng.gen_range(-5..=5), rng.gen_range(1..=4));
                    let im = if b == cc { Qi::zero() } else { &c(rng.gen_range(-5..=5), rng.gen_range(1..=4)) * &Qi::i() };
                    poly.add_term(e, &re + &im);
                }
                p.add_term(m, &poly);
                if b != cc {
                    p.add_term([a, cc, b], &poly.conj());
                }
            }
        }
    }
    p
}

#[test]
fn random_perturbation_exact_to_grading_8() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n_max, k) = (8, 2);
    let rho = BasePoly::constant(c(3, 2)).add(&mono([1, 0, 1, 0, 0], c(1, 3))).add(&mono([1, 0, 0, 0, 2], Qi::one()));
    let mut h = leading(&rho, n_max, k).add(&random_real_perturbation(&mut rng, n_max, k, 3));
    // make sure the ∫_0^{x0} branch is hit
    h.add_term([1, 1, 1], &mono([1, 1, 1, 0, 0], c(2, 3)));
    h.add_term([2, 0, 0], &mono([1, 2, 0, 0, 0], c(-1, 5)));
    assert!(h.is_real());
    let res = birkhoff_normal_form(&h, n_max).unwrap();
    for n in 3..n_max {
        assert!(non_invariant(&res.normalized, n).is_zero(), "grading {n}");
    }
    assert!(res.generator.is_real() && res.remainder.is_real());
    let mut omega = JetSymbol::new(n_max, k);
    omega.add_term([0, 1, 1], &BasePoly::constant(Qi::one()));
    assert!(poisson_bracket(&omega, &res.remainder).is_zero());
    // both branches: some generator term with b ≠ c, some with b = c
    assert!(res.generator.terms.keys().any(|m| m[1] != m[2]));
    assert!(res.generator.terms.keys().any(|m| m[1] == m[2]));
    assert_normal_below(&res.generator, &h, n_max);
}

#[test]
fn preconditions() {
    let mut h = leading(&BasePoly::constant(Qi::one()), 6, 1);
    h.add_term([0, 2, 1], &BasePoly::constant(Qi::one()));
    assert!(matches!(birkhoff_normal_form(&h, 6), Err(BnfError::UntaggedPerturbation { .. })));
    let mut bad = JetSymbol::new(6, 1);
    bad.add_term([0, 1, 1], &BasePoly::constant(Qi::one()));
    assert!(matches!(extract_rho(&bad), Err(BnfError::InvalidLeading(_))));
    let zero = leading(&BasePoly::zero(), 6, 1);
    assert_eq!(extract_rho(&zero), Err(BnfError::NonInvertibleRho));
}

fn small_jet() -> impl Strategy<Value = JetSymbol> {
    prop::collection::vec(((0u32..2, 0u32..3, 0u32..3), (0u32..2, 0u32..2, 0u32..2, 0u32..2), -3i64..=3, -3i64..=3), 1..5)
        .prop_map(|v| {
            // wide enough that no product or bracket below is truncated
            let mut j = JetSymbol::new(40, 6);
            for ((a, b, cc), (e, x0, x2, xi2), re, im) in v {
                let q = &Qi::from_int(re) + &(&Qi::from_int(im) * &Qi::i());
                j.add_term([a, b, cc], &BasePoly::monomial([e, x0, x2, 0, xi2], q));
            }
            j
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bracket_antisymmetric_and_leibniz(f in small_jet(), g in small_jet(), h in small_jet()) {
        prop_assert!(poisson_bracket(&f, &f).is_zero());
        prop_assert_eq!(poisson_bracket(&f, &g), poisson_bracket(&g, &f).neg());
        // {f, gh} = {f, g}h + g{f, h}
        let lhs = poisson_bracket(&f, &g.mul(&h));
        let rhs = poisson_bracket(&f, &g).mul(&h).add(&g.mul(&poisson_bracket(&f, &h)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_grading_bound(f in small_jet(), g in small_jet()) {
        let (b, _) = poisson_bracket_checked(&f, &g);
        if let (Some(p), Some(q), Some(r)) = (f.min_grading(), g.min_grading(), b.min_grading()) {
            prop_assert!(r + 2 >= p + q);
        }
    }

    #[test]
    fn step_preserves_lower_gradings(seed in 0u64..1000, n in 3u32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = BasePoly::constant(Qi::from_int(2)).add(&BasePoly::monomial([1, 0, 0, 0, 1], Qi::one()));
        let h = leading_block(&rho, 7, 2).add(&random_real_perturbation(&mut rng, 7, 2, n));
        let st = bnf_step(&h, n).unwrap();
        for (m, p) in &h.terms {
            if grading(m) < n {
                prop_assert_eq!(&st.next.coefficient(*m), p);
            }
        }
        prop_assert!(non_invariant(&st.next, n).is_zero());
        prop_assert!(st.g_increment.is_real());
    }
}
