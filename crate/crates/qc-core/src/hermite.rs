//! L²-normalized Hermite functions and their `ξ3`-scaled versions
//! `h_k(x1, ξ3) = |ξ3|^{1/4} h_k(|ξ3|^{1/2} x1)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// `h_k(u)` via the normalized three-term recurrence
/// `h_{k+1} = √(2/(k+1)) u h_k − √(k/(k+1)) h_{k−1}`.
pub fn hermite_function(k: usize, u: f64) -> f64 {
    let mut out = [0.0; 1];
    hermite_sweep(k, u, |j, v| {
        if j == k {
            out[0] = v;
        }
    });
    out[0]
}

/// `h_0(u), …, h_{k_max}(u)`.
pub fn hermite_functions(k_max: usize, u: f64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; k_max + 1];
    hermite_sweep(k_max, u, |j, v| out[j] = v);
    out
}

fn hermite_sweep(k_max: usize, u: f64, mut emit: impl FnMut(usize, f64)) {
    // For large |u| the Gaussian underflows before the polynomial grows; run the
    // recurrence on a rescaled pair and apply the Gaussian in log form.
    let mut log_scale = -0.5 * u * u - 0.25 * libm::log(PI);
    let mut prev = 0.0;
    let mut cur = 1.0;
    emit(0, cur * libm::exp(log_scale));
    for k in 0..k_max {
        let next = libm::sqrt(2.0 / (k + 1) as f64) * u * cur - libm::sqrt(k as f64 / (k + 1) as f64) * prev;
        prev = cur;
        cur = next;
        let m = cur.abs();
        if m > 1e100 {
            prev /= m;
            cur /= m;
            log_scale += libm::log(m);
        }
        emit(k + 1, cur * libm::exp(log_scale));
    }
}

/// `|ξ3|^{1/4} h_k(|ξ3|^{1/2} x1)` for all `k ≤ k_max`.
pub fn scaled_hermite_functions(k_max: usize, x1: f64, xi3: f64) -> Vec<f64> {
    let s = libm::sqrt(xi3.abs());
    let mut v = hermite_functions(k_max, s * x1);
    let w = libm::sqrt(s);
    for x in v.iter_mut() {
        *x *= w;
    }
    v
}

pub fn scaled_hermite(k: usize, x1: f64, xi3: f64) -> f64 {
    let s = libm::sqrt(xi3.abs());
    libm::sqrt(s) * hermite_function(k, s * x1)
}

/// Half-width of the `x1` interval: `√(2(2k_max+1)/ξ_min) + 6/√ξ_max`.
pub fn x1_half_width(k_max: usize, xi_min: f64, xi_max: f64) -> f64 {
    libm::sqrt(2.0 * (2 * k_max + 1) as f64 / xi_min) + 6.0 / libm::sqrt(xi_max)
}
