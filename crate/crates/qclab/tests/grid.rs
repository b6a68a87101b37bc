use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use qc_core::geometry::{Model, QuasiContactStructure};
use qc_core::spectral::oracle_spectrum;
use qclab::grid::*;
use qclab::lobpcg::{lobpcg, DenseOperator, LobpcgOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trig() -> QuasiContactStructure {
    QuasiContactStructure::new(Model::TrigTorus)
}

fn mapping() -> QuasiContactStructure {
    QuasiContactStructure::new(Model::from_name("mapping_torus").unwrap())
}

fn random_field(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max)
}

#[test]
fn constants_are_annihilated() {
    for qc in [trig(), mapping()] {
        let op = assemble_grid_laplacian(&qc, Volume::Popp, [8; 4]).unwrap();
        let out = op.apply(&vec![1.0; op.len()]);
        assert!(out.iter().all(|v| v.abs() < 1e-10), "{}", qc.model.name());
    }
}

#[test]
fn symmetric_and_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for qc in [trig(), mapping()] {
        for vol in [Volume::Popp, Volume::Lebesgue] {
            let op = assemble_grid_laplacian(&qc, vol, [8; 4]).unwrap();
            for _ in 0..100 {
                let v = random_field(op.len(), &mut rng);
                let w = random_field(op.len(), &mut rng);
                let (av, aw) = (op.apply(&v), op.apply(&w));
                let nv = op.inner(&v, &v).sqrt();
                let nw = op.inner(&w, &w).sqrt();
                let asym = (op.inner(&av, &w) - op.inner(&v, &aw)).abs();
                assert!(asym <= 1e-10 * nv * nw * op.inner(&av, &av).sqrt().max(1.0), "{asym}");
                assert!(op.inner(&av, &v) >= -1e-10 * nv * nv);
            }
        }
    }
}

#[test]
fn flat_frame_fourier_modes() {
    let flat = |_x: [f64; 4]| [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
    let op = GridOperator::from_fns([8; 4], flat, |_| 1.0).unwrap();
    for m in [[1i64, 0, 0, 0], [1, 2, -1, 0], [0, 3, 3, 2]] {
        let f: Vec<f64> = (0..op.len())
            .map(|i| {
                let x = op.fft.point(i);
                (2.0 * PI * (0..4).map(|k| m[k] as f64 * x[k]).sum::<f64>()).cos()
            })
            .collect();
        let want = 4.0 * PI * PI * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
        let out = op.apply(&f);
        for (o, v) in out.iter().zip(&f) {
            assert!((o - want * v).abs() < 1e-9 * want.max(1.0));
        }
    }
    // functions of x3 alone (7 non-Nyquist modes) are annihilated, then 4π² with
    // multiplicity 6·7
    let res = lowest_eigenpairs(&op, 12, 1e-9, 1).unwrap();
    assert!(res.values[..7].iter().all(|v| v.abs() < 1e-8), "{:?}", res.values);
    for v in &res.values[7..] {
        assert!((v - 4.0 * PI * PI).abs() < 1e-6, "{:?}", res.values);
    }
}

#[test]
fn trig_sector_is_the_reduced_operator() {
    // -∂² + 4π²m0² + 4π²(m1 sin 2πx3 - m2 cos 2πx3)² on the x3 circle, dense Fourier oracle
    let qc = trig();
    let n = 32;
    let pts: Vec<_> = (0..n).map(|a| qc.point([0.0, 0.0, 0.0, a as f64 / n as f64]).unwrap()).collect();
    let frame: Vec<_> = pts.iter().map(|p| p.frame).collect();
    let mu: Vec<_> = pts.iter().map(|p| p.popp_density.v).collect();
    for m in [[0i64, 0, 0], [1, 2, -1], [2, 0, 3]] {
        let got = x3_sector_eigenvalues(&frame, &mu, m);
        let shifted = x3_sector_eigenvalues(&frame, &mu, [0, m[1], m[2]]);
        for (a, b) in got.iter().zip(&shifted) {
            assert!((a - b - 4.0 * PI * PI * (m[0] * m[0]) as f64).abs() < 1e-8 * a.max(1.0));
        }
        // dense matrix in the continuum Fourier basis
        let kmax = 40i64;
        let d = (2 * kmax + 1) as usize;
        let r2 = (m[1] * m[1] + m[2] * m[2]) as f64;
        let mut h = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            let k = i as i64 - kmax;
            h[(i, i)] = 4.0 * PI * PI * ((k * k + m[0] * m[0]) as f64 + r2 / 2.0);
            if i + 2 < d {
                // the phase of the cos(4πx3 - 2φ) term does not change the spectrum
                h[(i, i + 2)] = -PI * PI * r2;
                h[(i + 2, i)] = -PI * PI * r2;
            }
        }
        let mut want: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want).take(6) {
            assert!((a - b).abs() < 1e-8 * b.max(1.0), "{m:?}: {a} vs {b}");
        }
    }
}

#[test]
fn sector_solver_matches_full_grid_operator() {
    let qc = trig();
    let op = assemble_grid_laplacian(&qc, Volume::Popp, [8; 4]).unwrap();
    let full = lowest_eigenpairs(&op, 20, 1e-9, 2).unwrap();
    let sect = trig_grid_spectrum(&qc, 8, 200.0).unwrap().expanded(20);
    assert!(max_rel_err(&full.values, &sect) < 1e-7, "{:?}\n{:?}", full.values, sect);
    // μ-orthonormal eigenvectors
    for i in 0..20 {
        for j in 0..20 {
            let ip = op.inner(&full.vectors[i], &full.vectors[j]);
            assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
    }
}

#[test]
fn frame_form_agrees_with_divergence_form() {
    let qc = trig();
    let op = assemble_grid_laplacian(&qc, Volume::Popp, [16; 4]).unwrap();
    let f: Vec<f64> = (0..op.len())
        .map(|i| {
            let x = op.fft.point(i);
            (2.0 * PI * (x[1] + 2.0 * x[3])).sin() * (2.0 * PI * x[0]).cos() + (2.0 * PI * x[2]).cos()
        })
        .collect();
    let a = op.apply(&f);
    let b = op.apply_frame_form(&f).unwrap();
    assert!(max_rel_err(&a, &b) < 1e-9);
    // mapping_torus: the C³ cutoff limits the agreement to algebraic convergence
    let qc = mapping();
    let l2 = |n: usize| {
        let op = assemble_grid_laplacian(&qc, Volume::Popp, [n; 4]).unwrap();
        let f: Vec<f64> = (0..op.len()).map(|i| (2.0 * PI * op.fft.point(i)[1]).sin()).collect();
        let a = op.apply(&f);
        let b = op.apply_frame_form(&f).unwrap();
        (a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    };
    let (e16, e24) = (l2(16), l2(24));
    assert!(e24 < 0.5 * e16, "{e16} {e24}");
}

#[test]
fn trig_grid_matches_oracle() {
    let qc = trig();
    let oracle = oracle_spectrum(&Model::TrigTorus, 400.0).unwrap().expanded(20);
    assert_eq!(oracle.len(), 20);
    let e16 = max_rel_err(&trig_grid_spectrum(&qc, 16, 400.0).unwrap().expanded(20), &oracle);
    let e32 = max_rel_err(&trig_grid_spectrum(&qc, 32, 400.0).unwrap().expanded(20), &oracle);
    assert!(e16 < 0.02, "{e16}");
    assert!(e32 < 0.005, "{e32}");
    assert!(e32 <= e16);
}

#[test]
fn heisenberg_grid_matches_oracle() {
    let oracle = oracle_spectrum(&Model::HeisenbergCircle, 80.0).unwrap().expanded(20);
    assert_eq!(oracle.len(), 20);
    let e16 = max_rel_err(&heisenberg_grid_spectrum(16, 80.0).unwrap().expanded(20), &oracle);
    let e32 = max_rel_err(&heisenberg_grid_spectrum(32, 80.0).unwrap().expanded(20), &oracle);
    assert!(e16 < 0.02, "{e16}");
    assert!(e32 < 0.005, "{e32}");
}

#[test]
fn lobpcg_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 300;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0 + i as f64 * 0.05;
        for _ in 0..3 {
            let j = rng.gen_range(0..n);
            let v = rng.gen_range(-0.5..0.5);
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
    }
    let mut dense: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    dense.sort_by(f64::total_cmp);
    let res = lobpcg(&DenseOperator(m), 10, &LobpcgOptions { tol: 1e-10, max_iter: 2000, extra: 6, seed: 1 }).unwrap();
    for (a, b) in res.values.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn mapping_torus_grid_eigenpairs() {
    let op = assemble_grid_laplacian(&mapping(), Volume::Popp, [8; 4]).unwrap();
    let res = lowest_eigenpairs(&op, 6, 1e-8, 4).unwrap();
    assert!(res.values[0].abs() < 1e-7);
    assert!(res.residuals.iter().all(|&r| r <= 1e-8));
    assert!(res.values.windows(2).all(|w| w[0] <= w[1] + 1e-9));
}

#[test]
fn invalid_sizes_and_models() {
    assert_eq!(assemble_grid_laplacian(&trig(), Volume::Popp, [6, 8, 8, 8]).unwrap_err(), GridError::InvalidSize(6));
    let h = QuasiContactStructure::new(Model::HeisenbergCircle);
    assert!(matches!(assemble_grid_laplacian(&h, Volume::Popp, [8; 4]), Err(GridError::UnsupportedModel(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn spectrum_is_provenance_independent(cut in 50.0f64..300.0) {
        // functionals only see the SpectrumResult
        let qc = trig();
        let g = trig_grid_spectrum(&qc, 8, cut).unwrap();
        prop_assert!(g.eigenvalues.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.eigenvalues.iter().all(|&v| v <= cut));
        prop_assert_eq!(qc_core::spectral::counting_function(&g, cut).unwrap(), g.total());
    }
}
