use core::f64::consts::PI;
use proptest::prelude::*;
use qc_core::dynamics::*;
use qc_core::geometry::{MappingTorusParams, Model, QuasiContactStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trig() -> QuasiContactStructure {
    QuasiContactStructure::new(Model::TrigTorus)
}

fn mapping() -> QuasiContactStructure {
    QuasiContactStructure::new(Model::MappingTorus(MappingTorusParams::default()))
}

fn close(a: &BlowupState, b: &BlowupState, tol: f64) -> bool {
    (a.xi0 - b.xi0).abs() <= tol && (0..4).all(|k| (a.x[k] - b.x[k]).abs() <= tol)
}

#[test]
fn endpoints_are_invariant() {
    for qc in [trig(), mapping()] {
        for sign in [1.0, -1.0] {
            let s0 = BlowupState { x: [0.1, 0.45, 0.52, 0.05], xi0: sign };
            let s = zhat_flow(&qc, &s0, 0.7).unwrap();
            assert_eq!(s.xi0, sign);
        }
    }
    // on the trig torus Z is the unit field along x0
    let qc = trig();
    let s = zhat_flow(&qc, &BlowupState { x: [0.2, 0.3, 0.4, 0.5], xi0: -1.0 }, 0.25).unwrap();
    let z = qc.eval([0.2, 0.3, 0.4, 0.5]).unwrap().0;
    for k in 0..4 {
        assert!((s.x[k] - ([0.2, 0.3, 0.4, 0.5][k] - 0.25 * z[k])).abs() < 1e-12);
    }
}

#[test]
fn volume_preserving_moves_at_constant_speed() {
    let qc = trig();
    let s0 = BlowupState { x: [0.3, 0.1, 0.7, 0.2], xi0: 0.37 };
    let (z, a) = qc.eval(s0.x).unwrap();
    assert!(a.abs() < 1e-12);
    let s = zhat_flow(&qc, &s0, 2.5).unwrap();
    assert!((s.xi0 - 0.37).abs() < 1e-14);
    for k in 0..4 {
        assert!((s.x[k] - (s0.x[k] + 2.5 * 0.37 * z[k])).abs() < 1e-10);
    }
}

/// Random `A(x) = a0 + Σ a_k cos(2πkx/T + φ_k)` and its antiderivative.
struct RandomA {
    t: f64,
    a0: f64,
    modes: Vec<(f64, f64)>,
}

impl RandomA {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let t = rng.gen_range(0.5..2.0);
        let a0 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(-0.5..0.5) };
        let modes = (0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))).collect();
        RandomA { t, a0, modes }
    }
    fn a(&self, x: f64) -> f64 {
        let w = 2.0 * PI / self.t;
        self.a0 + self.modes.iter().enumerate().map(|(k, (c, p))| c * ((k + 1) as f64 * w * x + p).cos()).sum::<f64>()
    }
    fn big_f(&self, x: f64) -> f64 {
        let w = 2.0 * PI / self.t;
        self.a0 * x
            + self
                .modes
                .iter()
                .enumerate()
                .map(|(k, (c, p))| c * ((k + 1) as f64 * w * x + p).sin() / ((k + 1) as f64 * w))
                .sum::<f64>()
    }
}

/// Plain RK4 on `(x, Ξ, I)` in the original variables, as an independent reference.
fn rk4_reference(a: &RandomA, x0: f64, xi0: f64, t: f64, steps: usize) -> (f64, f64, f64) {
    let f = |y: [f64; 3]| [y[1], -a.a(y[0]) * (1.0 - y[1] * y[1]), a.a(y[0])];
    let h = t / steps as f64;
    let mut y = [x0, xi0, 0.0];
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]));
        let k3 = f(std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]));
        let k4 = f(std::array::from_fn(|i| y[i] + h * k3[i]));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    (y[0], y[1], y[2])
}

#[test]
fn closed_form_on_random_orbits() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let ra = RandomA::new(&mut rng);
        let xi0 = rng.gen_range(-0.99..0.99);
        let x0 = rng.gen_range(0.0..ra.t);
        let t = rng.gen_range(0.1..3.0);
        let field = OrbitField { a: |x: f64| ra.a(x) };
        let s0 = BlowupState { x: [x0, 0.0, 0.0, 0.0], xi0 };
        let (s, int_a) =
            zhat_flow_with_integral(&field, &s0, t, |st| Ok(ra.a(st.x[0])), &FlowOptions::default()).unwrap();
        worst[0] = worst[0].max((s.xi0 - closed_form_xi0(xi0, int_a)).abs());
        // first integral 1 − Ξ² = (1 − Ξ0²) e^{2(F(x) − F(x0))}, no time integral involved
        let fi = (1.0 - xi0 * xi0) * (2.0 * (ra.big_f(s.x[0]) - ra.big_f(x0))).exp();
        worst[1] = worst[1].max((1.0 - s.xi0 * s.xi0 - fi).abs());
        let (xr, xir, ir) = rk4_reference(&ra, x0, xi0, t, 20000);
        worst[2] = worst[2].max((xr - s.x[0]).abs().max((xir - s.xi0).abs()).max((ir - int_a).abs()));
    }
    assert!(worst[0] < 1e-8, "closed form {worst:?}");
    assert!(worst[1] < 1e-8, "first integral {worst:?}");
    assert!(worst[2] < 1e-8, "reference {worst:?}");
}

#[test]
fn semigroup_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for qc in [trig(), mapping()] {
        for _ in 0..10 {
            let s0 = BlowupState {
                x: std::array::from_fn(|_| rng.gen_range(0.0..1.0)),
                xi0: rng.gen_range(-1.0..1.0),
            };
            let (t1, t2) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let direct = zhat_flow(&qc, &s0, t1 + t2).unwrap();
            let split = zhat_flow(&qc, &zhat_flow(&qc, &s0, t1).unwrap(), t2).unwrap();
            assert!(close(&direct, &split, 1e-8), "{direct:?} vs {split:?}");
        }
    }
}

#[test]
fn measure_invariance() {
    let rep = measure_invariance_check(&trig(), 1.0, 64, 1.0).unwrap();
    assert!(rep.max_divergence <= 1e-8 && rep.max_drift <= 1e-8, "{rep:?}");
    // the identity also holds where L_Z μ ≠ 0
    let mt = measure_invariance_check(&mapping(), 1.0, 64, 0.5).unwrap();
    assert!(mt.max_divergence <= 1e-8 && mt.max_drift <= 1e-8, "{mt:?}");
    let control = measure_invariance_check(&mapping(), 2.0, 64, 0.5).unwrap();
    assert!(control.max_divergence > 0.1 && control.max_drift > 1e-2, "{control:?}");
}

#[test]
fn birkhoff_averages() {
    let qc = trig();
    let s0 = BlowupState { x: [0.1, 0.3, 0.6, 0.8], xi0: 0.4 };
    assert!((birkhoff_average(&qc, |_| 1.0, &s0, 3.0).unwrap() - 1.0).abs() < 1e-12);
    // independent of the flowed coordinate x0 (and Ξ0 is constant here)
    let b = |s: &BlowupState| (2.0 * PI * s.x[1]).sin() + s.x[2] * s.xi0;
    assert!((birkhoff_average(&qc, b, &s0, 2.0).unwrap() - b(&s0)).abs() < 1e-10);
    // orbit average of cos²(2πx0) + x1 is 1/2 + x1(s0); the space average would be 1
    let z0 = qc.eval(s0.x).unwrap().0[0];
    let period = 1.0 / (s0.xi0 * z0).abs();
    let obs = |s: &BlowupState| (2.0 * PI * s.x[0]).cos().powi(2) + s.x[1];
    let avg = birkhoff_average(&qc, obs, &s0, 20.0 * period).unwrap();
    assert!((avg - (0.5 + s0.x[1])).abs() < 1e-9, "{avg}");
    assert!((avg - 1.0).abs() > 0.1);
}

#[test]
fn hat_t_conventions() {
    let flat = CharacteristicOrbit::from_rho_hat(1.0, vec![1.0; 32]);
    assert_eq!(hat_t(&flat), f64::INFINITY);
    let a: Vec<f64> = (0..64).map(|j| 0.3 + (2.0 * PI * j as f64 / 64.0).cos()).collect();
    let nvp = CharacteristicOrbit::from_a_samples(1.5, a);
    assert!(!nvp.is_volume_preserving());
    assert_eq!(hat_t(&nvp), 1.5);
}

/// `∫_0^s sin²(πt/T)/(1 + cos²(πt/T)) dt = (T/π)(−u + √2 atan(tan u/√2))`, `u = πs/T < π/2`,
/// and `T(√2 − 1)` over a full period.
fn cos2_partial(t: f64, s: f64) -> f64 {
    let u = PI * s / t;
    let r2 = 2f64.sqrt();
    if u <= 0.5 * PI {
        t / PI * (-u + r2 * (u.tan() / r2).atan())
    } else {
        t * (r2 - 1.0) - cos2_partial(t, t - s)
    }
}

#[test]
fn hat_t_cos_squared() {
    let t = 1.3;
    let rho: Vec<f64> = (0..48).map(|j| (PI * j as f64 / 48.0).cos().powi(2)).collect();
    let orbit = CharacteristicOrbit::from_rho_hat(t, rho);
    let per = t * (2f64.sqrt() - 1.0);
    assert!((cos2_partial(t, t) - per).abs() < 1e-14);
    let m = (t / per).floor();
    let rem = t - m * per;
    let (mut lo, mut hi) = (0.0, t);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cos2_partial(t, mid) >= rem {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let oracle = m * t + 0.5 * (lo + hi);
    let got = hat_t(&orbit);
    assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    // frozen: two full periods plus a remainder
    assert!((oracle - 3.203_416_295_017).abs() < 1e-9, "{oracle}");
}

#[test]
fn bands_unbounded_hat_t() {
    let b = period_spectrum(&[(1.0, f64::INFINITY)], 10.0).unwrap();
    assert_eq!(b.intervals, vec![(-10.0, -1.0), (1.0, 10.0)]);
}

#[test]
fn bands_merge_from_n_equal_5() {
    let b = period_spectrum(&[(1.0, 1.2)], 12.0).unwrap();
    let pos: Vec<_> = b.positive().cloned().collect();
    assert_eq!(pos, vec![(1.0, 1.2), (2.0, 2.4), (3.0, 3.5999999999999996), (4.0, 4.8), (5.0, 12.0)]);
    assert!(!b.contains(4.9) && b.contains(5.9) && b.contains(-6.0));
}

#[test]
fn model_characteristics() {
    let orbit = characteristic_orbit(&trig(), [0.0, 0.2, 0.4, 0.6], 32).unwrap();
    assert!(orbit.is_volume_preserving());
    assert_eq!(hat_t(&orbit), f64::INFINITY);
    // the zero of the contact Hamiltonian field: Z = ∂x0 there, A ≠ 0 along the orbit
    let mt = characteristic_orbit(&mapping(), [0.0, 0.5, 0.5, 0.0], 32).unwrap();
    assert!((mt.period - 1.0).abs() < 1e-12);
    assert!(!mt.is_volume_preserving() && mt.a_integral().abs() > 0.1);
    assert_eq!(hat_t(&mt), mt.period);
}

#[test]
fn return_time_matches_flow() {
    let t = 1.0;
    let a = |x: f64| 0.4 * (2.0 * PI * x).cos() - 0.2 * (4.0 * PI * x).sin();
    let samples: Vec<f64> = (0..64).map(|j| a(j as f64 / 64.0)).collect();
    let orbit = CharacteristicOrbit::from_a_samples(t, samples);
    assert!(orbit.is_volume_preserving());
    let rho = orbit.rho_hat.as_ref().unwrap();
    assert!((rho.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-3);
    let field = OrbitField { a };
    for xi0 in [0.9, 0.6, -0.7] {
        let r = return_time(&orbit, xi0).unwrap();
        let s = zhat_flow(&field, &BlowupState { x: [0.0; 4], xi0 }, r).unwrap();
        assert!((s.x[0].abs() - t).abs() < 1e-8 && (s.xi0 - xi0).abs() < 1e-8, "{s:?} at {r}");
    }
    // near the separatrix the return time exceeds T̂ from the periodic-ρ̂ formula
    let k_max = 1.0 / rho[0];
    let xi_crit = (1.0 - 1.0 / k_max).max(0.0).sqrt();
    let near = return_time(&orbit, xi_crit + 1e-9).unwrap();
    assert!(near > hat_t(&orbit));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ratio_monotone_for_nonnegative_a(a0 in 0.3f64..1.0, c in -0.3f64..0.3, xi0 in -0.95f64..0.95) {
        let field = OrbitField { a: move |x: f64| a0 + c * (2.0 * PI * x).cos() };
        let times: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
        let traj = zhat_trajectory(&field, &BlowupState { x: [0.0; 4], xi0 }, &times).unwrap();
        let mut prev = (1.0 - xi0) / (1.0 + xi0);
        for s in traj {
            prop_assert!(s.xi0.abs() <= 1.0);
            let r = (1.0 - s.xi0) / (1.0 + s.xi0);
            prop_assert!(r >= prev * (1.0 - 1e-12));
            prev = r;
        }
    }

    #[test]
    fn bands_symmetric_and_monotone(t1 in 0.5f64..2.0, f1 in 1.0f64..1.5, t2 in 0.5f64..2.0, f2 in 1.0f64..1.5) {
        let one = period_spectrum(&[(t1, t1 * f1)], 15.0).unwrap();
        let both = period_spectrum(&[(t1, t1 * f1), (t2, t2 * f2)], 15.0).unwrap();
        let other = period_spectrum(&[(t2, t2 * f2)], 15.0).unwrap();
        for &(a, b) in &both.intervals {
            prop_assert!(both.contains(-a) && both.contains(-b));
        }
        for k in 0..600 {
            let t = -15.0 + 0.05 * k as f64;
            prop_assert_eq!(both.contains(t), one.contains(t) || other.contains(t));
        }
    }
}
