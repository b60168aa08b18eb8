//! Tests for q-Pochhammer products, short theta functions, and Jacobi theta
//! functions, including the classical identities they satisfy.

mod common;

use common::{assert_close, random_u, rel_err, rng};
use ellhyp::theta::{
    jacobi_theta, qpochhammer_infinite, theta1, theta1_multi, theta1_pm, theta_char, theta_pm,
    theta_short, Nome, TauParam, ThetaChar,
};
use ellhyp::C64;
use rand::Rng;

const PI: f64 = std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn nome_011() -> Nome {
    Nome::new(c(0.11, 0.0), 1e-16).unwrap()
}

fn tau_05i() -> TauParam {
    TauParam::new(c(0.0, 0.5)).unwrap()
}

/// Brute-force truncated product oracle for (z;p)_inf.
fn qpoch_oracle(z: C64, p: C64, terms: usize) -> C64 {
    let mut prod = c(1.0, 0.0);
    let mut zp = z;
    for _ in 0..terms {
        prod *= c(1.0, 0.0) - zp;
        zp *= p;
    }
    prod
}

#[test]
fn qpochhammer_at_zero_is_one() {
    assert_eq!(qpochhammer_infinite(c(0.0, 0.0), &nome_011()).unwrap(), c(1.0, 0.0));
}

#[test]
fn qpochhammer_at_one_vanishes() {
    let v = qpochhammer_infinite(c(1.0, 0.0), &nome_011()).unwrap();
    assert!(v.norm() < 1e-15, "got {v}");
}

#[test]
fn qpochhammer_matches_direct_product() {
    let z = c(0.5, 0.0);
    let v = qpochhammer_infinite(z, &nome_011()).unwrap();
    let oracle = qpoch_oracle(z, c(0.11, 0.0), 30);
    assert_close(v, oracle, 1e-14, "qpochhammer vs 30-term product");
}

#[test]
fn qpochhammer_rejects_nonfinite() {
    assert!(qpochhammer_infinite(c(f64::NAN, 0.0), &nome_011()).is_err());
}

#[test]
fn nome_validation() {
    assert!(Nome::new(c(1.2, 0.0), 1e-12).is_err());
    assert!(Nome::new(c(0.5, 0.0), 1e-6).is_err());
    assert!(Nome::new(c(0.5, 0.0), 0.0).is_err());
}

#[test]
fn theta_short_vanishes_at_one() {
    let v = theta_short(c(1.0, 0.0), &nome_011()).unwrap();
    assert!(v.norm() < 1e-15);
}

#[test]
fn theta_short_inversion_symmetry() {
    // theta(p/z; p) = theta(z; p): at p = 0.11, z = 0.5 pairs with z = 0.22.
    let nome = nome_011();
    let a = theta_short(c(0.5, 0.0), &nome).unwrap();
    let b = theta_short(c(0.22, 0.0), &nome).unwrap();
    assert_close(a, b, 1e-14, "theta(z) vs theta(p/z)");
}

#[test]
fn theta_short_at_minus_one_matches_oracle() {
    let nome = nome_011();
    let v = theta_short(c(-1.0, 0.0), &nome).unwrap();
    let p = c(0.11, 0.0);
    let oracle = qpoch_oracle(c(-1.0, 0.0), p, 30) * qpoch_oracle(-p, p, 30);
    assert!(v.im.abs() < 1e-15 && v.re > 0.0, "expected positive real, got {v}");
    assert_close(v, oracle, 1e-14, "theta(-1) vs product oracle");
}

#[test]
fn theta_short_rejects_zero() {
    assert!(theta_short(c(0.0, 0.0), &nome_011()).is_err());
}

#[test]
fn theta_char_odd_at_origin() {
    let tau = tau_05i();
    let v = theta_char(ThetaChar::new(1, 1).unwrap(), c(0.0, 0.0), tau).unwrap();
    assert!(v.norm() < 1e-14, "theta_11(0) = {v}");
}

#[test]
fn theta1_quasi_period_one() {
    let tau = tau_05i();
    let u = c(0.3, 0.1);
    let lhs = theta1(u + c(1.0, 0.0), tau).unwrap();
    let rhs = -theta1(u, tau).unwrap();
    assert_close(lhs, rhs, 1e-13, "theta1(u+1) = -theta1(u)");
}

#[test]
fn theta1_triple_product_cross_check() {
    // theta1(u) = i p^{1/8} e^{-pi i u} (p;p)_inf theta(e^{2 pi i u}; p).
    let tau = tau_05i();
    let p = tau.nome();
    let nome = Nome::with_default_eps(p).unwrap();
    let u = c(0.3, 0.0);
    let lhs = theta1(u, tau).unwrap();
    let rhs = C64::i()
        * p.powf(0.125)
        * (-C64::i() * PI * u).exp()
        * qpochhammer_infinite(p, &nome).unwrap()
        * theta_short((C64::i() * 2.0 * PI * u).exp(), &nome).unwrap();
    assert_close(lhs, rhs, 1e-13, "triple product at u = 0.3");
}

#[test]
fn jacobi_theta_listed_relations() {
    let tau = TauParam::new(c(0.0, 0.6)).unwrap();
    let u = c(0.2, 0.0);
    let t2 = jacobi_theta(2, u, tau).unwrap();
    let t1_shift = theta1(u + c(0.5, 0.0), tau).unwrap();
    assert_close(t2, t1_shift, 1e-13, "theta2(u) = theta1(u + 1/2)");

    let tau = tau_05i();
    let u = c(0.1, 0.05);
    let t4 = jacobi_theta(4, u, tau).unwrap();
    let rhs = -C64::i()
        * (C64::i() * PI * (tau.tau / 4.0 + u)).exp()
        * theta1(u + tau.tau / 2.0, tau).unwrap();
    assert_close(t4, rhs, 1e-13, "theta4(u) = -i e^{pi i tau/4 + pi i u} theta1(u + tau/2)");

    let t3 = jacobi_theta(3, u, tau).unwrap();
    let rhs3 = (C64::i() * PI * (tau.tau / 4.0 + u)).exp()
        * theta1(u + c(0.5, 0.0) + tau.tau / 2.0, tau).unwrap();
    assert_close(t3, rhs3, 1e-13, "theta3 relation to theta1");
}

#[test]
fn jacobi_theta3_series_oracle() {
    // theta3(0 | 0.5i) = sum_k e^{pi i tau k^2} = sum_k e^{-pi k^2 / 2}.
    let tau = tau_05i();
    let v = jacobi_theta(3, c(0.0, 0.0), tau).unwrap();
    let mut oracle = 1.0f64;
    for k in 1..40 {
        oracle += 2.0 * (-PI * (k * k) as f64 / 2.0).exp();
    }
    assert_close(v, c(oracle, 0.0), 1e-15, "theta3(0) vs direct series");
}

#[test]
fn jacobi_theta_rejects_bad_index() {
    assert!(jacobi_theta(0, c(0.1, 0.0), tau_05i()).is_err());
    assert!(jacobi_theta(5, c(0.1, 0.0), tau_05i()).is_err());
}

#[test]
fn theta_pm_cases() {
    let nome = nome_011();
    // x = y = 1: both factors are theta(1) = 0.
    let v = theta_pm(c(1.0, 0.0), c(1.0, 0.0), &nome).unwrap();
    assert!(v.norm() < 1e-14);

    // y = 1 collapses the pair to theta(x)^2.
    let x = c(0.5, 0.0);
    let v = theta_pm(x, c(1.0, 0.0), &nome).unwrap();
    let t = theta_short(x, &nome).unwrap();
    assert_close(v, t * t, 1e-14, "theta_pm(x, 1) = theta(x)^2");

    // Generic point against the two separate products.
    let (x, y) = (c(0.4, 0.0), c(0.0, 0.7));
    let v = theta_pm(x, y, &nome).unwrap();
    let oracle = theta_short(x * y, &nome).unwrap() * theta_short(x / y, &nome).unwrap();
    assert_close(v, oracle, 1e-15, "theta_pm generic");

    assert!(theta_pm(c(0.0, 0.0), c(1.0, 0.0), &nome).is_err());
}

#[test]
fn theta1_triple_product_random_points() {
    let tau = tau_05i();
    let p = tau.nome();
    let nome = Nome::with_default_eps(p).unwrap();
    let pp = qpochhammer_infinite(p, &nome).unwrap();
    let mut r = rng(11);
    for _ in 0..50 {
        let u = random_u(&mut r, 0.5);
        let lhs = theta1(u, tau).unwrap();
        let rhs = C64::i()
            * p.powf(0.125)
            * (-C64::i() * PI * u).exp()
            * pp
            * theta_short((C64::i() * 2.0 * PI * u).exp(), &nome).unwrap();
        assert_close(lhs, rhs, 1e-12, "triple product");
    }
}

#[test]
fn theta1_quasi_periodicity_random_points() {
    let tau = tau_05i();
    let mut r = rng(12);
    for _ in 0..50 {
        let u = random_u(&mut r, 0.5);
        let base = theta1(u, tau).unwrap();
        let shift1 = theta1(u + c(1.0, 0.0), tau).unwrap();
        assert_close(shift1, -base, 1e-12, "theta1(u+1)");
        let shift_tau = theta1(u + tau.tau, tau).unwrap();
        let factor = -(-C64::i() * PI * (tau.tau + 2.0 * u)).exp();
        assert_close(shift_tau, factor * base, 1e-12, "theta1(u+tau)");
    }
}

#[test]
fn theta1_duplication_random_points() {
    let tau = tau_05i();
    let p = tau.nome();
    let nome = Nome::with_default_eps(p).unwrap();
    let pp = qpochhammer_infinite(p, &nome).unwrap();
    let prefactor = C64::i() * p.powf(0.125) / (pp * pp * pp);
    let mut r = rng(13);
    for _ in 0..50 {
        let u = random_u(&mut r, 0.5);
        let lhs = theta1(2.0 * u, tau).unwrap();
        let rhs = prefactor
            * theta1_multi(
                &[
                    u,
                    u + c(0.5, 0.0),
                    u + tau.tau / 2.0,
                    u - (c(1.0, 0.0) + tau.tau) / 2.0,
                ],
                tau,
            )
            .unwrap();
        assert_close(lhs, rhs, 1e-12, "duplication");
    }
}

#[test]
fn theta1_addition_formula_random_points() {
    // theta1(u±x, v±y) - theta1(u±y, v±x) = theta1(x±y, u±v).
    let tau = tau_05i();
    let mut r = rng(14);
    for _ in 0..50 {
        let (u, v, x, y) = (
            random_u(&mut r, 0.5),
            random_u(&mut r, 0.5),
            random_u(&mut r, 0.5),
            random_u(&mut r, 0.5),
        );
        let lhs = theta1_pm(u, x, tau).unwrap() * theta1_pm(v, y, tau).unwrap()
            - theta1_pm(u, y, tau).unwrap() * theta1_pm(v, x, tau).unwrap();
        let rhs = theta1_pm(x, y, tau).unwrap() * theta1_pm(u, v, tau).unwrap();
        let scale = lhs.norm().max(rhs.norm()).max(1e-30);
        assert!(
            (lhs - rhs).norm() / scale <= 1e-12,
            "add-add residual {} at u={u} v={v} x={x} y={y}",
            (lhs - rhs).norm() / scale
        );
    }
}

#[test]
fn theta_short_addition_formula_random_points() {
    // theta(u x^±, v y^±; p) - theta(u y^±, v x^±; p) = (v/x) theta(x y^±, u v^±; p).
    let nome = nome_011();
    let mut r = rng(15);
    for _ in 0..50 {
        let m = |r: &mut rand_chacha::ChaCha8Rng| {
            let rad = r.gen_range(0.5..1.5);
            let phi = r.gen_range(0.0..std::f64::consts::TAU);
            C64::new(rad * phi.cos(), rad * phi.sin())
        };
        let (u, v, x, y) = (m(&mut r), m(&mut r), m(&mut r), m(&mut r));
        let lhs = theta_pm(u, x, &nome).unwrap() * theta_pm(v, y, &nome).unwrap()
            - theta_pm(u, y, &nome).unwrap() * theta_pm(v, x, &nome).unwrap();
        let rhs = (v / x) * theta_pm(x, y, &nome).unwrap() * theta_pm(u, v, &nome).unwrap();
        let scale = lhs.norm().max(rhs.norm()).max(1e-30);
        assert!(
            (lhs - rhs).norm() / scale <= 1e-12,
            "add-mult residual {}",
            (lhs - rhs).norm() / scale
        );
    }
}

#[test]
fn theta1_jacobi_identity_random_points() {
    // 2 theta1(b - B/2 each) = theta1(b each) + theta1(b + 1/2 each)
    //   + e^{pi i (tau + B)} (theta1(b + tau/2 each) - theta1(b + 1/2 + tau/2 each)),
    // with B = b1 + b2 + b3 + b4 and products over the four entries.
    let tau = tau_05i();
    let mut r = rng(16);
    for _ in 0..50 {
        let b: Vec<C64> = (0..4).map(|_| random_u(&mut r, 0.5)).collect();
        let big_b: C64 = b.iter().sum();
        let prod_shift = |s: C64| -> C64 {
            let shifted: Vec<C64> = b.iter().map(|&bk| bk + s).collect();
            theta1_multi(&shifted, tau).unwrap()
        };
        let lhs = 2.0 * prod_shift(-big_b / 2.0);
        let rhs = prod_shift(c(0.0, 0.0))
            + prod_shift(c(0.5, 0.0))
            + (C64::i() * PI * (tau.tau + big_b)).exp()
                * (prod_shift(tau.tau / 2.0) - prod_shift(c(0.5, 0.0) + tau.tau / 2.0));
        let scale = lhs.norm().max(rhs.norm()).max(1e-30);
        assert!(
            (lhs - rhs).norm() / scale <= 1e-12,
            "jacobi identity residual {}",
            (lhs - rhs).norm() / scale
        );
    }
}

#[test]
fn theta_char_series_is_symmetric_truncation() {
    // Same value whether computed directly or via the theta1 wrapper.
    let tau = tau_05i();
    let u = c(0.27, 0.13);
    let direct = -theta_char(ThetaChar::new(1, 1).unwrap(), u, tau).unwrap();
    let wrapped = theta1(u, tau).unwrap();
    assert_eq!(direct, wrapped);
    assert!(rel_err(direct, wrapped) == 0.0);
}
