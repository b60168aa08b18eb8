//! Shared helpers for integration tests.
#![allow(dead_code)]

use ellhyp::C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for reproducible sampling in tests.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative difference |a - b| / max(|a|, |b|, floor).
pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

pub fn assert_close(a: C64, b: C64, tol: f64, what: &str) {
    let err = rel_err(a, b);
    assert!(err <= tol, "{what}: rel err {err:.3e} > {tol:.1e} (a = {a}, b = {b})");
}

/// Random point in the rectangle [-0.5, 0.5] x [0, Im(tau)] shifted to be
/// generic (used as a fundamental-parallelogram sample for theta tests).
pub fn random_u(rng: &mut ChaCha8Rng, tau_im: f64) -> C64 {
    C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.01..tau_im.max(0.02)))
}

/// Random complex number with modulus in [lo, hi] and uniform phase.
pub fn random_modulus(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> C64 {
    let r = rng.gen_range(lo..hi);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    C64::new(r * phi.cos(), r * phi.sin())
}
