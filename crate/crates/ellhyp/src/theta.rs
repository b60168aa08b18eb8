//! q-Pochhammer products, short theta functions, and Jacobi theta functions.
//!
//! Provides:
//!
//! - `qpochhammer_infinite(z, p)` = prod_{j>=0} (1 - z p^j)
//! - `theta_short(z, p)` = (z;p)_inf (p/z;p)_inf
//! - `theta_char(ab, u, tau)` = sum_k e^{pi i tau (k+a/2)^2} e^{2 pi i (k+a/2)(u+b/2)}
//! - `jacobi_theta(k, u, tau)` for theta_1..theta_4
//! - `theta_pm(x, y, p)` = theta(xy;p) theta(x/y;p)
//!
//! All evaluation is double-precision complex. Infinite products and series
//! are truncated by a geometric tail bound against the tolerance carried by
//! [`Nome`] (or a fixed series tolerance for the theta series), never by a
//! fixed term count.

use crate::{C64, Error, Result};

/// Relative truncation tolerance for theta series summation.
const SERIES_EPS: f64 = 1e-16;

/// Hard cap on theta-series half-length; never reached for Im(tau) bounded
/// away from zero at desk scale.
const SERIES_MAX_TERMS: usize = 4096;

/// A base `p` with `|p| < 1` together with a truncation tolerance for
/// infinite products built on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nome {
    pub p: C64,
    pub eps: f64,
}

impl Nome {
    /// Construct a nome, validating `|p| < 1` and `eps` in `(0, 1e-8]`.
    pub fn new(p: C64, eps: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::invalid("nome p must be finite"));
        }
        if p.norm() >= 1.0 {
            return Err(Error::invalid(format!("|p| = {} must be < 1", p.norm())));
        }
        if !(eps > 0.0 && eps <= 1e-8) {
            return Err(Error::invalid(format!("eps = {eps} must lie in (0, 1e-8]")));
        }
        Ok(Nome { p, eps })
    }

    /// Nome with the default tolerance 1e-15.
    pub fn with_default_eps(p: C64) -> Result<Self> {
        Nome::new(p, 1e-15)
    }
}

/// Half-period ratio `tau` with `Im(tau) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauParam {
    pub tau: C64,
}

impl TauParam {
    pub fn new(tau: C64) -> Result<Self> {
        if !tau.is_finite() || tau.im <= 0.0 {
            return Err(Error::invalid(format!("Im(tau) = {} must be > 0", tau.im)));
        }
        Ok(TauParam { tau })
    }

    /// The multiplicative nome p = e^{2 pi i tau}.
    pub fn nome(&self) -> C64 {
        (C64::i() * std::f64::consts::TAU * self.tau).exp()
    }
}

/// Theta characteristics (a, b), each 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaChar {
    pub a: u8,
    pub b: u8,
}

impl ThetaChar {
    pub fn new(a: u8, b: u8) -> Result<Self> {
        if a > 1 || b > 1 {
            return Err(Error::invalid("theta characteristics must be 0 or 1"));
        }
        Ok(ThetaChar { a, b })
    }
}

/// Infinite product (z;p)_inf = prod_{j>=0} (1 - z p^j).
///
/// Truncated at the first j where the geometric tail bound
/// |z| |p|^j / (1 - |p|) drops below the nome tolerance.
pub fn qpochhammer_infinite(z: C64, nome: &Nome) -> Result<C64> {
    if !z.is_finite() {
        return Err(Error::invalid("qpochhammer argument must be finite"));
    }
    let pn = nome.p.norm();
    if z.norm() == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let mut prod = C64::new(1.0, 0.0);
    let mut zp = z; // z * p^j
    let tail_scale = 1.0 / (1.0 - pn);
    let mut j = 0usize;
    loop {
        if zp.norm() * tail_scale < nome.eps {
            break;
        }
        prod *= C64::new(1.0, 0.0) - zp;
        zp *= nome.p;
        j += 1;
        if j > 100_000 {
            return Err(Error::invalid("qpochhammer failed to converge"));
        }
    }
    Ok(prod)
}

/// Product (t1;p)_inf ... (tk;p)_inf.
pub fn qpochhammer_multi(ts: &[C64], nome: &Nome) -> Result<C64> {
    let mut prod = C64::new(1.0, 0.0);
    for &t in ts {
        prod *= qpochhammer_infinite(t, nome)?;
    }
    Ok(prod)
}

/// Short theta function theta(z;p) = (z;p)_inf (p/z;p)_inf.
pub fn theta_short(z: C64, nome: &Nome) -> Result<C64> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::invalid(
            "theta_short requires nonzero finite z (essential singularity at 0)",
        ));
    }
    Ok(qpochhammer_infinite(z, nome)? * qpochhammer_infinite(nome.p / z, nome)?)
}

/// Product theta(z1;p)...theta(zk;p).
pub fn theta_short_multi(zs: &[C64], nome: &Nome) -> Result<C64> {
    let mut prod = C64::new(1.0, 0.0);
    for &z in zs {
        prod *= theta_short(z, nome)?;
    }
    Ok(prod)
}

/// theta(x y^±; p) = theta(xy;p) theta(x/y;p).
pub fn theta_pm(x: C64, y: C64, nome: &Nome) -> Result<C64> {
    if x.norm() == 0.0 || y.norm() == 0.0 {
        return Err(Error::invalid("theta_pm requires nonzero arguments"));
    }
    Ok(theta_short(x * y, nome)? * theta_short(x / y, nome)?)
}

/// Theta function with characteristics:
/// theta_{ab}(u) = sum_{k in Z} e^{pi i tau (k+a/2)^2} e^{2 pi i (k+a/2)(u+b/2)}.
///
/// Summed outward from k = 0 in paired +/-k order for cancellation
/// stability, truncated when a pair's magnitude falls below
/// SERIES_EPS * (|partial sum| + 1) twice in a row.
pub fn theta_char(ch: ThetaChar, u: C64, tau: TauParam) -> Result<C64> {
    let pi = std::f64::consts::PI;
    let a = ch.a as f64;
    let b = ch.b as f64;
    let term = |k: i64| -> C64 {
        let m = k as f64 + a / 2.0;
        let phase = C64::i() * pi * (tau.tau * m * m + 2.0 * m * (u + b / 2.0));
        phase.exp()
    };
    // Index pairing covering Z exactly once: for a = 0 the pairs are
    // (n, -n) with n = 0 counted once; for a = 1 they are (n, -n-1).
    let mut sum = C64::new(0.0, 0.0);
    let mut small_pairs = 0usize;
    for n in 0..SERIES_MAX_TERMS as i64 {
        let mut pair = C64::new(0.0, 0.0);
        pair += term(n);
        let mirror = -n - ch.a as i64;
        if mirror != n {
            pair += term(mirror);
        }
        sum += pair;
        if pair.norm() < SERIES_EPS * (sum.norm() + 1.0) {
            small_pairs += 1;
            if small_pairs >= 2 {
                return Ok(sum);
            }
        } else {
            small_pairs = 0;
        }
    }
    Err(Error::invalid("theta_char series failed to converge"))
}

/// Standard Jacobi theta functions theta_1..theta_4 via their
/// characteristics: theta_1 = -theta_{11}, theta_2 = theta_{10},
/// theta_3 = theta_{00}, theta_4 = theta_{01}.
pub fn jacobi_theta(k: u8, u: C64, tau: TauParam) -> Result<C64> {
    match k {
        1 => Ok(-theta_char(ThetaChar { a: 1, b: 1 }, u, tau)?),
        2 => theta_char(ThetaChar { a: 1, b: 0 }, u, tau),
        3 => theta_char(ThetaChar { a: 0, b: 0 }, u, tau),
        4 => theta_char(ThetaChar { a: 0, b: 1 }, u, tau),
        _ => Err(Error::invalid(format!("jacobi_theta index {k} outside 1..4"))),
    }
}

/// theta_1(u | tau).
pub fn theta1(u: C64, tau: TauParam) -> Result<C64> {
    jacobi_theta(1, u, tau)
}

/// theta_1(u_1, ..., u_k) = theta_1(u_1) ... theta_1(u_k).
pub fn theta1_multi(us: &[C64], tau: TauParam) -> Result<C64> {
    let mut prod = C64::new(1.0, 0.0);
    for &u in us {
        prod *= theta1(u, tau)?;
    }
    Ok(prod)
}

/// theta_1(x ± y) = theta_1(x + y) theta_1(x - y).
pub fn theta1_pm(x: C64, y: C64, tau: TauParam) -> Result<C64> {
    Ok(theta1(x + y, tau)? * theta1(x - y, tau)?)
}
