//! Reference implementations used to check the library from the outside.
#![allow(dead_code)]

use std::f64::consts::{LN_2, PI};

use num_bigint::BigUint;
use ptdep_core::{to_unit_square, PairedSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn factorial(m: u64) -> BigUint {
    (1..=m).fold(BigUint::from(1u32), |acc, k| acc * k)
}

/// `Γ(m) = (m - 1)!` for a positive integer `m`.
pub fn gamma_int(m: u64) -> BigUint {
    assert!(m >= 1);
    factorial(m - 1)
}

/// Natural log of a big integer, keeping the leading 64 bits.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64_digits().first().copied().unwrap_or(0);
    (top as f64).ln() + shift as f64 * LN_2
}

/// Exact per-cell ratio for integer `a`: numerator and denominator are
/// products of factorials, so the only rounding is in the two final logs.
pub fn exact_log_bj(counts: [u64; 4], a: u64) -> f64 {
    let [n0, n1, n2, n3] = counts;
    let n = n0 + n1 + n2 + n3;
    let g = gamma_int;
    let mut num = g(n0 + n2 + 2 * a) * g(n1 + n3 + 2 * a) * g(n0 + n1 + 2 * a) * g(n2 + n3 + 2 * a);
    num *= g(4 * a);
    let mut den = g(n + 4 * a);
    for ni in counts {
        den *= g(ni + a);
    }
    for _ in 0..4 {
        num *= g(a);
        den *= g(2 * a);
    }
    big_ln(&num) - big_ln(&den)
}

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// Normal CDF by composite Simpson integration of the density from 0.
pub fn cdf_by_quadrature(z: f64) -> f64 {
    let panels = 20_000;
    let h = z / panels as f64;
    let mut s = std_normal_pdf(0.0) + std_normal_pdf(z);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * std_normal_pdf(i as f64 * h);
    }
    0.5 + s * h / 3.0
}

/// Lower tail `Φ(-x)` for `x > 0` from the continued fraction of the Mills
/// ratio, `φ(x) / (x + 1/(x + 2/(x + 3/(x + ...))))`.
pub fn lower_tail_continued_fraction(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut d = x;
    for k in (1..=300).rev() {
        d = x + k as f64 / d;
    }
    std_normal_pdf(x) / d
}

/// Log Bayes factor computed by binning every point directly at each level
/// with `floor(u 2^k)`, independent of the recursive tree.
pub fn grid_log_bf(sample: &PairedSample, c: f64, depth_cap: usize) -> (f64, Vec<f64>) {
    let pts = to_unit_square(sample).unwrap();
    let mut levels = Vec::new();
    for k in 1..=depth_cap {
        let side = (1u64 << (k - 1)) as f64;
        let mut cells: std::collections::HashMap<(u64, u64), [u64; 4]> = Default::default();
        for (&u, &v) in pts.u.iter().zip(&pts.v) {
            let (pu, pv) = ((u * side).floor() as u64, (v * side).floor() as u64);
            let (cu, cv) = (
                (u * 2.0 * side).floor() as u64,
                (v * 2.0 * side).floor() as u64,
            );
            let digit = (cu - 2 * pu) + 2 * (cv - 2 * pv);
            cells.entry((pu, pv)).or_default()[digit as usize] += 1;
        }
        let a = c * (k * k) as f64;
        let mut keys: Vec<_> = cells.keys().copied().collect();
        keys.sort();
        let bk: f64 = keys.iter().map(|key| ln_gamma_log_bj(cells[key], a)).sum();
        if cells.values().all(|q| q.iter().sum::<u64>() < 2) {
            break;
        }
        levels.push(bk);
    }
    (levels.iter().sum(), levels)
}

/// Per-cell term as a ratio of marginal likelihoods: two Beta-binomial
/// splits under independence against a Dirichlet-multinomial split.
pub fn ln_gamma_log_bj(q: [u64; 4], a: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let n: u64 = q.iter().sum();
    if n < 2 {
        return 0.0;
    }
    let ln_beta = |p: f64, r: f64| ln_gamma(p) + ln_gamma(r) - ln_gamma(p + r);
    let f = |m: u64| m as f64;
    let two_a = 2.0 * a;
    let m0_x = ln_beta(f(q[0] + q[2]) + two_a, f(q[1] + q[3]) + two_a) - ln_beta(two_a, two_a);
    let m0_y = ln_beta(f(q[0] + q[1]) + two_a, f(q[2] + q[3]) + two_a) - ln_beta(two_a, two_a);
    let ln_mbeta = |alpha: [f64; 4]| {
        alpha.iter().map(|&t| ln_gamma(t)).sum::<f64>() - ln_gamma(alpha.iter().sum())
    };
    let m1 = ln_mbeta(q.map(|ni| f(ni) + a)) - ln_mbeta([a; 4]);
    m0_x + m0_y - m1
}

/// Correlated Gaussian pairs with a random correlation; ties have
/// probability zero.
pub fn random_sample(n: usize, seed: u64) -> PairedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho: f64 = rng.random_range(-0.9..0.9);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        x.push(a);
        y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    PairedSample::new(x, y).unwrap()
}
