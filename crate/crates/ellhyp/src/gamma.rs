//! The elliptic gamma function Gamma_{p,q} and the modified elliptic gamma
//! function G(u; omega).
//!
//! Gamma_{p,q}(z) = prod_{j,k>=0} (1 - z^{-1} p^{j+1} q^{k+1}) / (1 - z p^j q^k)
//!
//! satisfies the shift equations Gamma(qz) = theta(z;p) Gamma(z) and
//! Gamma(pz) = theta(z;q) Gamma(z), the reflection equation
//! Gamma(z) Gamma(pq/z) = 1, and a duplication formula.
//!
//! G(u; omega) combines two gamma functions over modular-transformed bases and
//! stays well defined when the base q = e^{2 pi i omega1/omega2} sits on the
//! unit circle; both of its product representations are exposed for
//! cross-checking.

use crate::theta::{theta_short, Nome};
use crate::{C64, Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Guard distance (in relative factor magnitude) from gamma poles.
pub const POLE_EPS: f64 = 1e-8;

/// Largest argument modulus ratio for which the logarithmic series is used;
/// beyond it the double product is evaluated directly.
const SERIES_RATIO_MAX: f64 = 0.85;

/// The two bases (p, q) with |p|, |q| < 1 plus a truncation tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasePair {
    pub p: C64,
    pub q: C64,
    pub eps: f64,
}

impl BasePair {
    pub fn new(p: C64, q: C64, eps: f64) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::invalid("bases must be finite"));
        }
        if p.norm() >= 1.0 || q.norm() >= 1.0 {
            return Err(Error::invalid(format!(
                "|p| = {}, |q| = {} must both be < 1",
                p.norm(),
                q.norm()
            )));
        }
        if !(eps > 0.0 && eps <= 1e-8) {
            return Err(Error::invalid(format!("eps = {eps} must lie in (0, 1e-8]")));
        }
        Ok(BasePair { p, q, eps })
    }

    /// Base pair with the default tolerance 1e-15.
    pub fn with_default_eps(p: C64, q: C64) -> Result<Self> {
        BasePair::new(p, q, 1e-15)
    }

    /// The canonical desk-scale bases p = 0.11, q = 0.23 used repo-wide.
    pub fn canonical() -> Self {
        BasePair::with_default_eps(C64::new(0.11, 0.0), C64::new(0.23, 0.0)).unwrap()
    }

    /// Nome view of p for short-theta evaluation.
    pub fn nome_p(&self) -> Nome {
        Nome { p: self.p, eps: self.eps }
    }

    /// Nome view of q for short-theta evaluation.
    pub fn nome_q(&self) -> Nome {
        Nome { p: self.q, eps: self.eps }
    }

    /// Bases with p and q exchanged.
    pub fn swapped(&self) -> Self {
        BasePair { p: self.q, q: self.p, eps: self.eps }
    }
}

/// Gamma_{p,q}(z) via the logarithmic series
/// ln Gamma = sum_{n>=1} (z^n - (pq/z)^n) / (n (1-p^n)(1-q^n)),
/// valid when max(|z|, |pq/z|) < 1.
fn gamma_pq_series(z: C64, bases: &BasePair) -> C64 {
    let ratio = z.norm().max((bases.p * bases.q / z).norm());
    let mut sum = C64::new(0.0, 0.0);
    let mut zn = z;
    let mut wn = bases.p * bases.q / z;
    let mut pn = bases.p;
    let mut qn = bases.q;
    let one = C64::new(1.0, 0.0);
    let tail_scale = 1.0 / ((1.0 - bases.p.norm()) * (1.0 - bases.q.norm()) * (1.0 - ratio));
    let mut n = 1usize;
    loop {
        sum += (zn - wn) / ((one - pn) * (one - qn) * n as f64);
        if (zn.norm() + wn.norm()) * tail_scale / (n as f64) < bases.eps {
            break;
        }
        zn *= z;
        wn *= bases.p * bases.q / z;
        pn *= bases.p;
        qn *= bases.q;
        n += 1;
        if n > 100_000 {
            break;
        }
    }
    sum.exp()
}

/// Gamma_{p,q}(z) via the truncated double product, accumulated in log space.
fn gamma_pq_product(z: C64, bases: &BasePair) -> Result<C64> {
    let pn = bases.p.norm();
    let qn = bases.q.norm();
    let zn = z.norm();
    let zin = 1.0 / zn;
    let scale = zn.max(zin * pn * qn);
    // Stop indices from the geometric tail bound on the log-residual.
    let bound = |base: f64| -> usize {
        let t = bases.eps * (1.0 - pn) * (1.0 - qn) / scale.max(1e-300);
        if t >= 1.0 {
            1
        } else {
            (t.ln() / base.ln()).ceil() as usize + 1
        }
    };
    let jmax = bound(pn.max(1e-300));
    let kmax = bound(qn.max(1e-300));
    let mut log_sum = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut pj = C64::new(1.0, 0.0);
    for _j in 0..jmax {
        let mut pjqk = pj;
        for _k in 0..kmax {
            let den = one - z * pjqk;
            if den.norm() < POLE_EPS {
                return Err(Error::PoleProximity {
                    context: "gamma_pq denominator factor".into(),
                    point: z,
                });
            }
            let num = one - bases.p * bases.q * pjqk / z;
            log_sum += num.ln() - den.ln();
            pjqk *= bases.q;
        }
        pj *= bases.p;
    }
    Ok(log_sum.exp())
}

/// The standard elliptic gamma function Gamma_{p,q}(z).
///
/// Arguments are first walked into the series convergence band with the
/// shift equations Gamma(z) = Gamma(qz)/theta(z;p) (for large |z|) and
/// Gamma(z) = theta(z/q;p) Gamma(z/q) (for small |z|), so only a short
/// theta product separates any admissible z from the fast series; the
/// double product remains as a fallback.
pub fn gamma_pq(z: C64, bases: &BasePair) -> Result<C64> {
    if !z.is_finite() || z.norm() == 0.0 {
        return Err(Error::invalid("gamma_pq requires nonzero finite z"));
    }
    let ratio = |z: C64| z.norm().max((bases.p * bases.q / z).norm());
    if ratio(z) <= SERIES_RATIO_MAX {
        return Ok(gamma_pq_series(z, bases));
    }
    // Pick the larger base as the shift direction; too-small bases make the
    // walk ineffective, so fall back to the double product there.
    let (shift, theta_nome) = if bases.q.norm() >= bases.p.norm() {
        (bases.q, bases.nome_p())
    } else {
        (bases.p, bases.nome_q())
    };
    if shift.norm() < 0.02 {
        return gamma_pq_product(z, bases);
    }
    let mut w = z;
    let mut log_prefactor = C64::new(0.0, 0.0);
    for _ in 0..200 {
        if ratio(w) <= SERIES_RATIO_MAX {
            return Ok(log_prefactor.exp() * gamma_pq_series(w, bases));
        }
        if w.norm() > SERIES_RATIO_MAX {
            // Gamma(w) = Gamma(shift * w) / theta(w; other base).
            let th = theta_short(w, &theta_nome)?;
            if th.norm() < POLE_EPS {
                return Err(Error::PoleProximity {
                    context: "gamma_pq shift reduction hit a theta zero".into(),
                    point: z,
                });
            }
            log_prefactor -= th.ln();
            w *= shift;
        } else {
            // Gamma(w) = theta(w/shift; other base) * Gamma(w/shift).
            w /= shift;
            log_prefactor += theta_short(w, &theta_nome)?.ln();
        }
    }
    gamma_pq_product(z, bases)
}

/// Gamma_{p,q}(t z^±) = Gamma_{p,q}(tz) Gamma_{p,q}(t/z).
pub fn gamma_pm(t: C64, z: C64, bases: &BasePair) -> Result<C64> {
    Ok(gamma_pq(t * z, bases)? * gamma_pq(t / z, bases)?)
}

/// Product Gamma_{p,q}(t_1) ... Gamma_{p,q}(t_k).
pub fn gamma_multi(ts: &[C64], bases: &BasePair) -> Result<C64> {
    let mut prod = C64::new(1.0, 0.0);
    for &t in ts {
        prod *= gamma_pq(t, bases)?;
    }
    Ok(prod)
}

/// 1 / Gamma_{p,q}(z^{±2}) = theta(z^2; p) theta(q z^2; q).
///
/// Follows from the reflection equation and the p-shift equation; stays
/// stable for |z| = 1 where the gamma series does not converge.
pub fn inv_gamma_pm2(z: C64, bases: &BasePair) -> Result<C64> {
    let z2 = z * z;
    Ok(theta_short(z2, &bases.nome_p())? * theta_short(bases.q * z2, &bases.nome_q())?)
}

/// Exact second Bernoulli combination
/// B_{2,2}(u; w1, w2) = u^2/(w1 w2) - u/w1 - u/w2 + w1/(6 w2) + w2/(6 w1) + 1/2.
pub fn bernoulli_b22(u: C64, w1: C64, w2: C64) -> Result<C64> {
    if w1.norm() == 0.0 || w2.norm() == 0.0 {
        return Err(Error::invalid("bernoulli_b22 requires nonzero periods"));
    }
    Ok(u * u / (w1 * w2) - u / w1 - u / w2 + w1 / (6.0 * w2) + w2 / (6.0 * w1)
        + C64::new(0.5, 0.0))
}

/// Quasi-periods (w1, w2, w3) with their six derived bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaTriple {
    pub w1: C64,
    pub w2: C64,
    pub w3: C64,
    pub eps: f64,
}

impl OmegaTriple {
    pub fn new(w1: C64, w2: C64, w3: C64) -> Result<Self> {
        let t = OmegaTriple { w1, w2, w3, eps: 1e-15 };
        for (name, w) in [("w1", w1), ("w2", w2), ("w3", w3)] {
            if !w.is_finite() || w.norm() == 0.0 {
                return Err(Error::invalid(format!("period {name} must be finite nonzero")));
            }
        }
        if t.base_p().norm() >= 1.0 || t.base_r().norm() >= 1.0 {
            return Err(Error::InvalidRegime(format!(
                "derived bases |p| = {}, |r| = {} must be < 1",
                t.base_p().norm(),
                t.base_r().norm()
            )));
        }
        Ok(t)
    }

    pub fn base_q(&self) -> C64 {
        (C64::i() * TWO_PI * self.w1 / self.w2).exp()
    }
    pub fn base_p(&self) -> C64 {
        (C64::i() * TWO_PI * self.w3 / self.w2).exp()
    }
    pub fn base_r(&self) -> C64 {
        (C64::i() * TWO_PI * self.w3 / self.w1).exp()
    }
    pub fn base_q_tilde(&self) -> C64 {
        (-C64::i() * TWO_PI * self.w2 / self.w1).exp()
    }
    pub fn base_p_tilde(&self) -> C64 {
        (-C64::i() * TWO_PI * self.w2 / self.w3).exp()
    }
    pub fn base_r_tilde(&self) -> C64 {
        (-C64::i() * TWO_PI * self.w1 / self.w3).exp()
    }

    /// Periods with w1 and w2 exchanged.
    pub fn swapped12(&self) -> Result<Self> {
        OmegaTriple::new(self.w2, self.w1, self.w3)
    }

    fn sum(&self) -> C64 {
        self.w1 + self.w2 + self.w3
    }
}

/// Odd cubic P with P(u + (w1+w2+w3)/2) = u (u^2 - (w1^2+w2^2+w3^2)/4) / (3 w1 w2 w3),
/// evaluated by shifting: v = u - (w1+w2+w3)/2.
pub fn cubic_p(u: C64, omega: &OmegaTriple) -> Result<C64> {
    let v = u - omega.sum() / 2.0;
    let s2 = omega.w1 * omega.w1 + omega.w2 * omega.w2 + omega.w3 * omega.w3;
    Ok(v * (v * v - s2 / 4.0) / (3.0 * omega.w1 * omega.w2 * omega.w3))
}

/// First representation of G(u; omega):
/// Gamma_{p,q}(e^{2 pi i u/w2}) Gamma_{q~,r}(r e^{-2 pi i u/w1}).
///
/// Requires |q| < 1 and |q~| < 1.
pub fn modified_gamma_g_first(u: C64, omega: &OmegaTriple) -> Result<C64> {
    let q = omega.base_q();
    let qt = omega.base_q_tilde();
    if q.norm() >= 1.0 - 1e-12 {
        return Err(Error::InvalidRegime(format!(
            "first representation needs |q| < 1, got {}",
            q.norm()
        )));
    }
    if qt.norm() >= 1.0 {
        return Err(Error::InvalidRegime(format!(
            "first representation needs |q~| < 1, got {}",
            qt.norm()
        )));
    }
    let bases1 = BasePair::new(omega.base_p(), q, omega.eps)?;
    let bases2 = BasePair::new(qt, omega.base_r(), omega.eps)?;
    let z1 = (C64::i() * TWO_PI * u / omega.w2).exp();
    let z2 = omega.base_r() * (-C64::i() * TWO_PI * u / omega.w1).exp();
    Ok(gamma_pq(z1, &bases1)? * gamma_pq(z2, &bases2)?)
}

/// Second representation of G(u; omega):
/// e^{-pi i P(u)} Gamma_{r~,p~}(e^{-2 pi i u/w3}).
///
/// Requires |r~| < 1 and |p~| < 1; remains valid on |q| = 1.
pub fn modified_gamma_g_second(u: C64, omega: &OmegaTriple) -> Result<C64> {
    let rt = omega.base_r_tilde();
    let pt = omega.base_p_tilde();
    if rt.norm() >= 1.0 || pt.norm() >= 1.0 {
        return Err(Error::InvalidRegime(format!(
            "second representation needs |r~|, |p~| < 1, got {}, {}",
            rt.norm(),
            pt.norm()
        )));
    }
    let bases = BasePair::new(rt, pt, omega.eps)?;
    let z = (-C64::i() * TWO_PI * u / omega.w3).exp();
    let prefactor = (-C64::i() * PI * cubic_p(u, omega)?).exp();
    Ok(prefactor * gamma_pq(z, &bases)?)
}

/// The modified elliptic gamma function G(u; omega).
///
/// Dispatches on the derived base q = e^{2 pi i w1/w2}: strictly inside the
/// unit circle the first representation is used; within 1e-12 of the circle
/// (or outside it) the second representation takes over.
pub fn modified_gamma_g(u: C64, omega: &OmegaTriple) -> Result<C64> {
    let qn = omega.base_q().norm();
    if (qn - 1.0).abs() < 1e-12 || qn > 1.0 {
        modified_gamma_g_second(u, omega)
    } else {
        match modified_gamma_g_first(u, omega) {
            Ok(v) => Ok(v),
            Err(Error::InvalidRegime(_)) => modified_gamma_g_second(u, omega),
            Err(e) => Err(e),
        }
    }
}
