//! Elliptic hypergeometric integrals and the relations they satisfy.
//!
//! Provides:
//!
//! - `I^(m)` contour integrals over the unit circle and the elliptic beta
//!   integral's closed 15-factor product (m = 0);
//! - the V-function (m = 1) with its three E7-type parameter transformations;
//! - the Bailey-chain recursion step relating `I^(1)` to `I^(0)`;
//! - contiguous three-term relations for the V-function and the elliptic
//!   hypergeometric equation in both its symmetrized and operator forms;
//! - the epsilon parametrization of the difference operator with its
//!   conjugate under the contour inner product.
//!
//! Each relation is exposed as a residual: the terms of the identity are
//! assembled and |sum| / max |term| is returned.

use crate::gamma::{gamma_pm, gamma_pq, inv_gamma_pm2, BasePair};
use crate::quad::{kappa_contour_integral, QuadratureResult, QuadratureSpec};
use crate::theta::{theta_pm, theta_short, theta_short_multi};
use crate::{residual_of_terms, C64, Error, Result};

/// Relative tolerance on balancing-condition validation.
pub const BALANCE_TOL: f64 = 1e-12;

/// Default pole clearance demanded of integral parameters.
pub const DEFAULT_MARGIN: f64 = 0.05;

fn check_balancing(t: &[C64], target: C64, what: &str) -> Result<()> {
    let prod: C64 = t.iter().product();
    let rel = (prod - target).norm() / target.norm().max(1e-300);
    if rel > BALANCE_TOL {
        return Err(Error::BalancingViolated(format!(
            "{what}: product {prod} differs from {target} by rel {rel:.2e}"
        )));
    }
    Ok(())
}

fn check_margins(t: &[C64], delta: f64, what: &str) -> Result<()> {
    for (j, tj) in t.iter().enumerate() {
        if tj.norm() > 1.0 - delta {
            return Err(Error::invalid(format!(
                "{what}: |t_{}| = {} exceeds 1 - {delta}",
                j + 1,
                tj.norm()
            )));
        }
    }
    Ok(())
}

/// Parameters of the integral `I^(m)`: 2m+6 complex values with
/// balancing product (pq)^{m+1} and all moduli at least `delta` away
/// from the contour.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedParams {
    pub m: usize,
    pub t: Vec<C64>,
    pub bases: BasePair,
}

impl BalancedParams {
    pub fn new(m: usize, t: Vec<C64>, bases: BasePair, delta: f64) -> Result<Self> {
        if t.len() != 2 * m + 6 {
            return Err(Error::invalid(format!(
                "I^({m}) needs {} parameters, got {}",
                2 * m + 6,
                t.len()
            )));
        }
        let target = (bases.p * bases.q).powu(m as u32 + 1);
        check_balancing(&t, target, "balanced parameters")?;
        check_margins(&t, delta, "balanced parameters")?;
        Ok(BalancedParams { m, t, bases })
    }

    /// Principal-branch epsilon of the Bailey recursion built from the last
    /// four parameters: sqrt(t_{2m+3} t_{2m+4} t_{2m+5} t_{2m+6} / pq).
    /// Defined for m >= 1 (these are the parameters integrated out when
    /// descending to I^(m-1)).
    pub fn bailey_epsilon(&self) -> Result<C64> {
        if self.m == 0 {
            return Err(Error::invalid("bailey_epsilon needs m >= 1"));
        }
        let n = self.t.len();
        let prod: C64 = self.t[n - 4..].iter().product();
        Ok((prod / (self.bases.p * self.bases.q)).sqrt())
    }
}

/// The V-function integrand kernel
/// Delta(z, t) = prod_j Gamma(t_j z^±) / Gamma(z^{±2}).
pub fn integrand_kernel(t: &[C64], bases: &BasePair, z: C64) -> Result<C64> {
    let mut prod = inv_gamma_pm2(z, bases)?;
    for &tj in t {
        prod *= gamma_pm(tj, z, bases)?;
    }
    Ok(prod)
}

/// I^(m)(t) = kappa int_T prod_j Gamma(t_j z^±)/Gamma(z^{±2}) dz/z.
pub fn ihm_integral(params: &BalancedParams, spec: &QuadratureSpec) -> Result<QuadratureResult> {
    check_margins(&params.t, spec.delta_margin, "ihm_integral")?;
    let t = params.t.clone();
    let bases = params.bases;
    kappa_contour_integral(&move |z| integrand_kernel(&t, &bases, z), &bases, spec)
}

/// Closed form of the elliptic beta integral:
/// I^(0)(t_1..t_6) = prod_{j<k} Gamma(t_j t_k), requiring prod t_j = pq.
pub fn elliptic_beta_closed(t: &[C64], bases: &BasePair) -> Result<C64> {
    if t.len() != 6 {
        return Err(Error::invalid("elliptic beta integral takes 6 parameters"));
    }
    check_balancing(t, bases.p * bases.q, "elliptic beta integral")?;
    let mut prod = C64::new(1.0, 0.0);
    for j in 0..6 {
        for k in (j + 1)..6 {
            prod *= gamma_pq(t[j] * t[k], bases)?;
        }
    }
    Ok(prod)
}

/// V(t_1..t_8) = I^(1)(t), requiring prod t_j = (pq)^2.
pub fn v_function(t: &[C64], bases: &BasePair, spec: &QuadratureSpec) -> Result<QuadratureResult> {
    if t.len() != 8 {
        return Err(Error::invalid("v_function takes 8 parameters"));
    }
    let params = BalancedParams::new(1, t.to_vec(), *bases, spec.delta_margin)?;
    ihm_integral(&params, spec)
}

/// V evaluated on a parameter vector with selected slots rescaled, without
/// re-checking the original balancing (the rescalings preserve it when the
/// scales multiply to one).
fn v_shifted(
    t: &[C64],
    shifts: &[(usize, C64)],
    bases: &BasePair,
    spec: &QuadratureSpec,
) -> Result<C64> {
    let mut s = t.to_vec();
    for &(idx, scale) in shifts {
        s[idx] *= scale;
    }
    Ok(v_function(&s, bases, spec)?.value)
}

/// Residual of the Bailey recursion step at m = 0: compares the direct
/// V-function quadrature against the contour integral of the closed-form
/// elliptic beta integral with parameters (t_1..t_4, e w, e w^{-1}),
/// e = sqrt(t_5 t_6 t_7 t_8 / pq).
pub fn bailey_step_residual(
    t: &[C64],
    bases: &BasePair,
    outer_spec: &QuadratureSpec,
) -> Result<f64> {
    if t.len() != 8 {
        return Err(Error::invalid("bailey_step_residual takes 8 parameters"));
    }
    let params = BalancedParams::new(1, t.to_vec(), *bases, outer_spec.delta_margin)?;
    let eps: C64 = params.bailey_epsilon()?;
    for &tk in &t[4..8] {
        if (tk / eps).norm() >= 1.0 - outer_spec.delta_margin {
            return Err(Error::invalid(format!(
                "bailey_step_residual: |t_k / eps| = {} too close to the contour",
                (tk / eps).norm()
            )));
        }
    }
    let lhs = v_function(t, bases, outer_spec)?.value;

    let mut prefactor = 1.0 / gamma_pq(eps * eps, bases)?;
    for k in 4..8 {
        for l in (k + 1)..8 {
            prefactor *= gamma_pq(t[k] * t[l], bases)?;
        }
    }
    let t_owned = t.to_vec();
    let bases_owned = *bases;
    let integral = kappa_contour_integral(
        &move |w| {
            let mut val = inv_gamma_pm2(w, &bases_owned)?;
            for &tk in &t_owned[4..8] {
                val *= gamma_pm(tk / eps, w, &bases_owned)?;
            }
            let inner = [
                t_owned[0],
                t_owned[1],
                t_owned[2],
                t_owned[3],
                eps * w,
                eps / w,
            ];
            val *= elliptic_beta_closed(&inner, &bases_owned)?;
            Ok(val)
        },
        bases,
        outer_spec,
    )?;
    let rhs = prefactor * integral.value;
    Ok((lhs - rhs).norm() / lhs.norm().max(1e-300))
}

/// Which of the three V-function symmetry transformations to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum E7Transform {
    /// t -> (e t_1..e t_4, e^{-1} t_5..e^{-1} t_8), e = sqrt(t_5 t_6 t_7 t_8/pq).
    First,
    /// t -> (sqrt(T)/t_1..sqrt(T)/t_4, sqrt(U)/t_5..sqrt(U)/t_8),
    /// T = t_1 t_2 t_3 t_4, U = t_5 t_6 t_7 t_8.
    Second,
    /// t -> sqrt(pq)/t elementwise.
    Third,
}

/// Apply one of the three transformations, returning the image parameters
/// and the gamma-product prefactor with V(t) = prefactor * V(t').
pub fn e7_transform(
    t: &[C64],
    which: E7Transform,
    bases: &BasePair,
    delta: f64,
) -> Result<(Vec<C64>, C64)> {
    if t.len() != 8 {
        return Err(Error::invalid("e7_transform takes 8 parameters"));
    }
    check_balancing(t, (bases.p * bases.q).powu(2), "e7_transform")?;
    let (image, prefactor) = match which {
        E7Transform::First => {
            let u: C64 = t[4..8].iter().product();
            let eps = (u / (bases.p * bases.q)).sqrt();
            let mut pre = C64::new(1.0, 0.0);
            for k in 0..4 {
                for l in (k + 1)..4 {
                    pre *= gamma_pq(t[k] * t[l], bases)?;
                    pre *= gamma_pq(t[k + 4] * t[l + 4], bases)?;
                }
            }
            let image: Vec<C64> = (0..8)
                .map(|j| if j < 4 { eps * t[j] } else { t[j] / eps })
                .collect();
            (image, pre)
        }
        E7Transform::Second => {
            let big_t: C64 = t[..4].iter().product();
            let big_u: C64 = t[4..8].iter().product();
            let (st, su) = (big_t.sqrt(), big_u.sqrt());
            let mut pre = C64::new(1.0, 0.0);
            for j in 0..4 {
                for k in 0..4 {
                    pre *= gamma_pq(t[j] * t[k + 4], bases)?;
                }
            }
            let image: Vec<C64> = (0..8)
                .map(|j| if j < 4 { st / t[j] } else { su / t[j] })
                .collect();
            (image, pre)
        }
        E7Transform::Third => {
            let root = (bases.p * bases.q).sqrt();
            let mut pre = C64::new(1.0, 0.0);
            for j in 0..8 {
                for k in (j + 1)..8 {
                    pre *= gamma_pq(t[j] * t[k], bases)?;
                }
            }
            let image: Vec<C64> = t.iter().map(|&s| root / s).collect();
            (image, pre)
        }
    };
    for (j, ij) in image.iter().enumerate() {
        if ij.norm() > 1.0 - delta {
            return Err(Error::InadmissibleImage(format!(
                "transformed |t_{}| = {} exceeds 1 - {delta}",
                j + 1,
                ij.norm()
            )));
        }
    }
    Ok((image, prefactor))
}

/// Residual of the three-term contiguous relation
/// t_7 theta(t_8 t_7^±;p) V(q t_6) - t_6 theta(t_8 t_6^±;p) V(q t_7)
///   = t_7 theta(t_6 t_7^±;p) V(q t_8),
/// with balancing prod t_j = p^2 q.
pub fn contiguous_c1_residual(
    t: &[C64],
    bases: &BasePair,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if t.len() != 8 {
        return Err(Error::invalid("contiguous_c1_residual takes 8 parameters"));
    }
    check_balancing(t, bases.p * bases.p * bases.q, "three-term contiguous relation")?;
    let np = bases.nome_p();
    let q = bases.q;
    let terms = [
        t[6] * theta_pm(t[7], t[6], &np)? * v_shifted(t, &[(5, q)], bases, spec)?,
        -t[5] * theta_pm(t[7], t[5], &np)? * v_shifted(t, &[(6, q)], bases, spec)?,
        -t[6] * theta_pm(t[5], t[6], &np)? * v_shifted(t, &[(7, q)], bases, spec)?,
    ];
    Ok(residual_of_terms(&terms))
}

/// Residual of the doubly-shifted three-term relation with balancing
/// prod t_j = p^2:
/// t_6 theta(t_7/t_8) prod_{k<=5} theta(t_6 t_k) V(q t_7, q t_8)
///  - t_7 theta(t_6/t_8) prod theta(t_7 t_k) V(q t_6, q t_8)
///  = t_6 theta(t_7/t_6) prod theta(t_8 t_k) V(q t_6, q t_7).
pub fn eq2_residual(t: &[C64], bases: &BasePair, spec: &QuadratureSpec) -> Result<f64> {
    if t.len() != 8 {
        return Err(Error::invalid("eq2_residual takes 8 parameters"));
    }
    check_balancing(t, bases.p * bases.p, "doubly-shifted contiguous relation")?;
    let np = bases.nome_p();
    let q = bases.q;
    let prod5 = |s: C64| -> Result<C64> {
        let args: Vec<C64> = t[..5].iter().map(|&tk| s * tk).collect();
        theta_short_multi(&args, &np)
    };
    let terms = [
        t[5] * theta_short(t[6] / t[7], &np)?
            * prod5(t[5])?
            * v_shifted(t, &[(6, q), (7, q)], bases, spec)?,
        -t[6]
            * theta_short(t[5] / t[7], &np)?
            * prod5(t[6])?
            * v_shifted(t, &[(5, q), (7, q)], bases, spec)?,
        -t[5]
            * theta_short(t[6] / t[5], &np)?
            * prod5(t[7])?
            * v_shifted(t, &[(5, q), (6, q)], bases, spec)?,
    ];
    Ok(residual_of_terms(&terms))
}

/// Residual of the four-term contiguous relation with balancing (pq)^2:
/// theta(t_7 t_6^±/q)/theta(t_8 t_6^±) V(t_7/q, q t_8) - V(t)
///  = B V(t_5/q, q t_6) - C V(t),
/// where B and C are the displayed theta-quotient coefficients.
pub fn key_cont_residual(t: &[C64], bases: &BasePair, spec: &QuadratureSpec) -> Result<f64> {
    if t.len() != 8 {
        return Err(Error::invalid("key_cont_residual takes 8 parameters"));
    }
    check_balancing(t, (bases.p * bases.q).powu(2), "four-term contiguous relation")?;
    let np = bases.nome_p();
    let q = bases.q;
    let qinv = 1.0 / q;

    let v_t = v_function(t, bases, spec)?.value;
    let v_78 = v_shifted(t, &[(6, qinv), (7, q)], bases, spec)?;
    let v_56 = v_shifted(t, &[(4, qinv), (5, q)], bases, spec)?;

    let a_coef = theta_pm(t[6] / q, t[5], &np)? / theta_pm(t[7], t[5], &np)?;

    let mut b_coef = theta_short_multi(
        &[t[6] / (q * t[5]), t[4] * t[7] / q, q * t[7] / t[6]],
        &np,
    )? / (theta_pm(t[7], t[5], &np)? * theta_short(q * t[5] / t[4], &np)?);
    for j in 0..4 {
        b_coef *= theta_short(t[4] * t[j] / q, &np)? / theta_short(t[6] * t[j] / q, &np)?;
    }

    let mut c_coef = theta_short_multi(&[q * t[7] / t[6], t[6] / t[4]], &np)?
        / theta_short_multi(&[t[7] / t[5], q * t[5] / t[4]], &np)?;
    for j in 0..4 {
        c_coef *= theta_short(t[5] * t[j], &np)? / theta_short(t[6] * t[j] / q, &np)?;
    }

    let terms = [a_coef * v_78, -v_t, -b_coef * v_56, c_coef * v_t];
    Ok(residual_of_terms(&terms))
}

/// The symmetrizing potential
/// A(t;p) = theta(t_8/(q t_6), t_6 t_8, t_6/t_8) / theta(t_8/t_7, t_7/(q t_8), t_7 t_8/q)
///          * prod_{j<=5} theta(t_7 t_j/q) / theta(t_6 t_j).
pub fn potential_a(t: &[C64], bases: &BasePair) -> Result<C64> {
    let np = bases.nome_p();
    let q = bases.q;
    let mut val = theta_short_multi(&[t[7] / (q * t[5]), t[5] * t[7], t[5] / t[7]], &np)?
        / theta_short_multi(&[t[7] / t[6], t[6] / (q * t[7]), t[6] * t[7] / q], &np)?;
    for j in 0..5 {
        val *= theta_short(t[6] * t[j] / q, &np)? / theta_short(t[5] * t[j], &np)?;
    }
    Ok(val)
}

/// Residual of the symmetrized elliptic hypergeometric equation
/// A(t) [theta(t_7 t_6^±/q)/theta(t_8 t_6^±) V(t_7/q, q t_8) - V(t)]
///  + (t_7 <-> t_8) + V(t) = 0, with balancing (pq)^2.
pub fn eh_residual(t: &[C64], bases: &BasePair, spec: &QuadratureSpec) -> Result<f64> {
    if t.len() != 8 {
        return Err(Error::invalid("eh_residual takes 8 parameters"));
    }
    check_balancing(t, (bases.p * bases.q).powu(2), "elliptic hypergeometric equation")?;
    let np = bases.nome_p();
    let q = bases.q;
    let qinv = 1.0 / q;

    let v_t = v_function(t, bases, spec)?.value;

    let mut swapped = t.to_vec();
    swapped.swap(6, 7);

    let a78 = potential_a(t, bases)?;
    let ratio78 = theta_pm(t[6] / q, t[5], &np)? / theta_pm(t[7], t[5], &np)?;
    let v78 = v_shifted(t, &[(6, qinv), (7, q)], bases, spec)?;

    let a87 = potential_a(&swapped, bases)?;
    let ratio87 = theta_pm(t[7] / q, t[5], &np)? / theta_pm(t[6], t[5], &np)?;
    let v87 = v_shifted(t, &[(6, q), (7, qinv)], bases, spec)?;

    let terms = [
        a78 * ratio78 * v78,
        -a78 * v_t,
        a87 * ratio87 * v87,
        -a87 * v_t,
        v_t,
    ];
    Ok(residual_of_terms(&terms))
}

/// Shift-operator coefficient
/// a(t_1..t_8) = theta(t_8/(q t_6), t_6 t_8, t_6/t_8) / theta(t_8/t_7, t_7/(q t_8))
///               * prod_{k<=5} theta(t_7 t_k/q).
pub fn coeff_a(t: &[C64], bases: &BasePair) -> Result<C64> {
    let np = bases.nome_p();
    let q = bases.q;
    let mut val = theta_short_multi(&[t[7] / (q * t[5]), t[5] * t[7], t[5] / t[7]], &np)?
        / theta_short_multi(&[t[7] / t[6], t[6] / (q * t[7])], &np)?;
    for k in 0..5 {
        val *= theta_short(t[6] * t[k] / q, &np)?;
    }
    Ok(val)
}

/// Scalar term kappa(t_1..t_8) = theta(t_7 t_8/q) prod_{k<=5} theta(t_6 t_k).
pub fn coeff_kappa(t: &[C64], bases: &BasePair) -> Result<C64> {
    let np = bases.nome_p();
    let mut val = theta_short(t[6] * t[7] / bases.q, &np)?;
    for k in 0..5 {
        val *= theta_short(t[5] * t[k], &np)?;
    }
    Ok(val)
}

/// The three scalar slots of the difference operator
/// D(t) = a(..t_7,t_8)(T_{x,q} - 1) + a(..t_8,t_7)(T_{x,q}^{-1} - 1) + kappa(t):
/// (coefficient of T, coefficient of T^{-1}, scalar term of the identity slot).
pub fn d_operator_coeffs(t: &[C64], bases: &BasePair) -> Result<(C64, C64, C64)> {
    let a_plus = coeff_a(t, bases)?;
    let mut swapped = t.to_vec();
    swapped.swap(6, 7);
    let a_minus = coeff_a(&swapped, bases)?;
    let kappa = coeff_kappa(t, bases)?;
    Ok((a_plus, a_minus, kappa - a_plus - a_minus))
}

/// U(t) = V(t) / Gamma(t_7 t_6^±, t_8 t_6^±).
pub fn u_function(t: &[C64], bases: &BasePair, spec: &QuadratureSpec) -> Result<C64> {
    let v = v_function(t, bases, spec)?.value;
    let divisor = gamma_pq(t[6] * t[5], bases)?
        * gamma_pq(t[6] / t[5], bases)?
        * gamma_pq(t[7] * t[5], bases)?
        * gamma_pq(t[7] / t[5], bases)?;
    Ok(v / divisor)
}

/// Full parameter vector (t_1..t_6, c/x, c x) for the operator form.
pub fn t_with_x(t6: &[C64], c: C64, x: C64) -> Vec<C64> {
    let mut t = t6.to_vec();
    t.push(c / x);
    t.push(c * x);
    t
}

/// Residual of the operator form D(t) U(t) = 0 with t_7 = c/x, t_8 = c x,
/// where the shift T_{x,q} sends x -> qx (so t_7 -> t_7/q, t_8 -> q t_8).
/// Normalized by the sum of single-term magnitudes.
pub fn eheq_residual(
    t6: &[C64],
    c: C64,
    x: C64,
    bases: &BasePair,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if t6.len() != 6 {
        return Err(Error::invalid("eheq_residual takes 6 free parameters"));
    }
    let t = t_with_x(t6, c, x);
    check_balancing(&t, (bases.p * bases.q).powu(2), "operator-form equation")?;
    let (a_plus, a_minus, _) = d_operator_coeffs(&t, bases)?;
    let kappa = coeff_kappa(&t, bases)?;
    if theta_short(t[7] / t[6], &bases.nome_p())?.norm() < 1e-10 {
        return Err(Error::DegenerateCoefficient("theta(t_8/t_7) ~ 0".into()));
    }
    let u0 = u_function(&t, bases, spec)?;
    let u_plus = u_function(&t_with_x(t6, c, bases.q * x), bases, spec)?;
    let u_minus = u_function(&t_with_x(t6, c, x / bases.q), bases, spec)?;
    let terms = [
        a_plus * u_plus,
        -a_plus * u0,
        a_minus * u_minus,
        -a_minus * u0,
        kappa * u0,
    ];
    let sum: C64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|v| v.norm()).sum::<f64>().max(1e-300);
    Ok(sum.norm() / scale)
}

fn replace_34(t: &[C64], t3: C64, t4: C64) -> Vec<C64> {
    let mut s = t.to_vec();
    s[2] = t3;
    s[3] = t4;
    s
}

/// Residual of the displayed evaluation of D(t') U(t) / theta(t_3/t_3', t_3/t_4')
/// as a combination of U(t_5/q, q t_6) and U(t); t' replaces (t_3, t_4) with
/// (t_3', t_4') at fixed product. Requires t in the operator form with
/// t_7 = c/x, t_8 = c x.
pub fn key_eheq_residual(
    t6: &[C64],
    c: C64,
    x: C64,
    t3p: C64,
    t4p: C64,
    bases: &BasePair,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (lhs, term1, term2) = key_eheq_parts(t6, c, x, t3p, t4p, bases, spec)?;
    Ok(residual_of_terms(&[lhs, -term1, -term2]))
}

/// The three pieces of the auxiliary-parameter relation: the operator side
/// D(t') U(t) / theta(t_3/t_3', t_3/t_4'), the coefficient of the shifted
/// U(t_5/q, q t_6), and the coefficient of U(t) (each with its value of U
/// multiplied in). The relation states lhs = term1 + term2.
pub fn key_eheq_parts(
    t6: &[C64],
    c: C64,
    x: C64,
    t3p: C64,
    t4p: C64,
    bases: &BasePair,
    spec: &QuadratureSpec,
) -> Result<(C64, C64, C64)> {
    if t6.len() != 6 {
        return Err(Error::invalid("key_eheq_residual takes 6 free parameters"));
    }
    let t = t_with_x(t6, c, x);
    check_balancing(&t, (bases.p * bases.q).powu(2), "auxiliary-parameter relation")?;
    let rel = (t[2] * t[3] - t3p * t4p).norm() / (t[2] * t[3]).norm().max(1e-300);
    if rel > BALANCE_TOL {
        return Err(Error::invalid("key_eheq_residual needs t_3 t_4 = t_3' t_4'"));
    }
    let np = bases.nome_p();
    let q = bases.q;
    let denom = theta_short_multi(&[t[2] / t3p, t[2] / t4p], &np)?;
    if denom.norm() < 1e-10 {
        return Err(Error::DegenerateCoefficient(
            "theta(t_3/t_3', t_3/t_4') ~ 0 (degenerate auxiliary parameters)".into(),
        ));
    }

    // Left side: D(t') U(t) via three quadratures in the x-shifts.
    let tp = replace_34(&t, t3p, t4p);
    let (a_plus, a_minus, _) = d_operator_coeffs(&tp, bases)?;
    let kappa = coeff_kappa(&tp, bases)?;
    let u0 = u_function(&t, bases, spec)?;
    let u_plus = u_function(&t_with_x(t6, c, q * x), bases, spec)?;
    let u_minus = u_function(&t_with_x(t6, c, x / q), bases, spec)?;
    let lhs = (a_plus * (u_plus - u0) + a_minus * (u_minus - u0) + kappa * u0) / denom;

    // Right side, first term: coefficient of U(t_5/q, q t_6).
    let mut shifted56 = t.clone();
    shifted56[4] /= q;
    shifted56[5] *= q;
    let u56 = u_function(&shifted56, bases, spec)?;
    let mut r1 = t[3]
        * t[5]
        * theta_short_multi(
            &[t[2] * t[3] * t[6] * t[7] / (q * q), t[6] * t[5], t[7] * t[5], t[6] * t[7] / q],
            &np,
        )?
        / theta_short_multi(
            &[
                t[2] * t[6] / q,
                t[2] * t[7] / q,
                t[3] * t[6] / q,
                t[3] * t[7] / q,
                q * t[5] / t[4],
            ],
            &np,
        )?;
    for j in [0usize, 1, 2, 3, 6, 7] {
        r1 *= theta_short(t[4] * t[j] / q, &np)?;
    }
    let term1 = r1 * u56;

    // Right side, second term: coefficient of U(t).
    let mut front = theta_short(q * t[5] / t[7], &np)?
        / theta_short_multi(&[t[2] * t[7] / q, q / (t[3] * t[7])], &np)?;
    for j in 0..4 {
        front *= theta_short(t[5] * t[j], &np)?;
    }
    let inner = theta_short_multi(
        &[t[5] * t[7], t[6] / t[4], t[4] * t[6] / q, t[2] * t[3] * t[6] * t[7] / (q * q)],
        &np,
    )? / theta_short_multi(&[q * t[5] / t[4], t[2] * t[6] / q, t[3] * t[6] / q], &np)?
        - theta_short_multi(&[t[6] * t[7] / q, t[4] * t[5], t[2] * t[3] * t[5] * t[7] / q], &np)?
            / theta_short_multi(&[t[2] * t[5], t[3] * t[5]], &np)?;
    let term2 = -front * inner * u0;
    Ok((lhs, term1, term2))
}

/// Per-slot residual of the operator identity
/// D(t') - [theta(t_3/t_3', t_3/t_4')/theta(t_3/t_3'', t_3/t_4'')] D(t'')
///   = (t_3/t_3') [theta(t_3'/t_3'', t_3'/t_4'')/theta(t_3/t_3'', t_3/t_4'')] D(t),
/// which is scalar in each of the three operator slots; returns the maximum
/// of the three coefficient residuals. No integration involved.
pub fn op_ident_residual(
    t6: &[C64],
    c: C64,
    x: C64,
    t3p: C64,
    t4p: C64,
    t3pp: C64,
    t4pp: C64,
    bases: &BasePair,
) -> Result<f64> {
    if t6.len() != 6 {
        return Err(Error::invalid("op_ident_residual takes 6 free parameters"));
    }
    let t = t_with_x(t6, c, x);
    for (a, b) in [(t3p, t4p), (t3pp, t4pp)] {
        let rel = (t[2] * t[3] - a * b).norm() / (t[2] * t[3]).norm().max(1e-300);
        if rel > BALANCE_TOL {
            return Err(Error::invalid("op_ident_residual needs matching products t_3 t_4"));
        }
    }
    let np = bases.nome_p();
    let den = theta_short_multi(&[t[2] / t3pp, t[2] / t4pp], &np)?;
    if den.norm() < 1e-10 || (t3pp - t3p).norm() < 1e-12 {
        return Err(Error::DegenerateCoefficient(
            "auxiliary parameter choices coincide or hit a theta zero".into(),
        ));
    }
    let lam2 = theta_short_multi(&[t[2] / t3p, t[2] / t4p], &np)? / den;
    let lam3 = (t[2] / t3p) * theta_short_multi(&[t3p / t3pp, t3p / t4pp], &np)? / den;

    let cp = d_operator_coeffs(&replace_34(&t, t3p, t4p), bases)?;
    let cpp = d_operator_coeffs(&replace_34(&t, t3pp, t4pp), bases)?;
    let ct = d_operator_coeffs(&t, bases)?;
    let mut worst = 0.0f64;
    for (wp, wpp, wt) in [(cp.0, cpp.0, ct.0), (cp.1, cpp.1, ct.1), (cp.2, cpp.2, ct.2)] {
        let r = residual_of_terms(&[wp, -lam2 * wpp, -lam3 * wt]);
        worst = worst.max(r);
    }
    Ok(worst)
}

/// The epsilon parametrization of the operator form: 8 parameters with
/// balancing prod eps_k = p^2 q^2.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonParams {
    pub eps: [C64; 8],
    pub bases: BasePair,
}

impl EpsilonParams {
    pub fn new(eps: [C64; 8], bases: BasePair) -> Result<Self> {
        check_balancing(&eps, (bases.p * bases.q).powu(2), "epsilon parameters")?;
        Ok(EpsilonParams { eps, bases })
    }

    /// Map from the t-parametrization: eps_k = q/(c t_k) for k = 1..5,
    /// eps_6 = c t_6 p^4, eps_8 = c/t_6, eps_7 = eps_8/q.
    pub fn from_t(t6: &[C64], c: C64, bases: BasePair) -> Result<Self> {
        if t6.len() != 6 {
            return Err(Error::invalid("from_t takes 6 free parameters"));
        }
        let q = bases.q;
        let p4 = bases.p.powu(4);
        let e8 = c / t6[5];
        let eps = [
            q / (c * t6[0]),
            q / (c * t6[1]),
            q / (c * t6[2]),
            q / (c * t6[3]),
            q / (c * t6[4]),
            c * t6[5] * p4,
            e8 / q,
            e8,
        ];
        EpsilonParams::new(eps, bases)
    }

    /// Inverse map: t_k = q/(c eps_k) for k = 1..5, t_6 = c/eps_8, with
    /// c = sqrt(eps_6 eps_8)/p^2 (principal branch).
    pub fn to_t(&self) -> (Vec<C64>, C64) {
        let c = (self.eps[5] * self.eps[7]).sqrt() / self.bases.p.powu(2);
        let mut t = Vec::with_capacity(6);
        for k in 0..5 {
            t.push(self.bases.q / (c * self.eps[k]));
        }
        t.push(c / self.eps[7]);
        (t, c)
    }

    /// A(x) = prod_k theta(eps_k x; p) / theta(x^2, q x^2; p).
    pub fn coeff_big_a(&self, x: C64) -> Result<C64> {
        let np = self.bases.nome_p();
        let mut num = C64::new(1.0, 0.0);
        for &e in &self.eps {
            num *= theta_short(e * x, &np)?;
        }
        let den = theta_short_multi(&[x * x, self.bases.q * x * x], &np)?;
        if den.norm() < 1e-12 * num.norm().max(1.0) {
            return Err(Error::PoleProximity {
                context: "coefficient denominator theta(x^2, q x^2)".into(),
                point: x,
            });
        }
        Ok(num / den)
    }

    /// nu = prod_{k<=6} theta(eps_k eps_8/q; p).
    pub fn coeff_nu(&self) -> Result<C64> {
        let np = self.bases.nome_p();
        let args: Vec<C64> =
            (0..6).map(|k| self.eps[k] * self.eps[7] / self.bases.q).collect();
        theta_short_multi(&args, &np)
    }

    /// alpha(x) = prod_k Gamma(eps_k x^±), the conjugating weight.
    pub fn weight_alpha(&self, x: C64) -> Result<C64> {
        let mut prod = C64::new(1.0, 0.0);
        for &e in &self.eps {
            prod *= gamma_pm(e, x, &self.bases)?;
        }
        Ok(prod)
    }
}

/// Apply D_x(eps) = A(x)(T_{x,q} - 1) + A(x^{-1})(T_{x,q}^{-1} - 1) + nu
/// to a function at the point x.
pub fn dx_operator_apply<F>(eps: &EpsilonParams, f: &F, x: C64) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let q = eps.bases.q;
    let fx = f(x)?;
    Ok(eps.coeff_big_a(x)? * (f(q * x)? - fx)
        + eps.coeff_big_a(1.0 / x)? * (f(x / q)? - fx)
        + eps.coeff_nu()? * fx)
}

/// Apply the conjugate operator D_x^*(eps) = alpha(x) D_x(eps) alpha(x)^{-1}.
pub fn dx_conjugate_apply<F>(eps: &EpsilonParams, f: &F, x: C64) -> Result<C64>
where
    F: Fn(C64) -> Result<C64>,
{
    let eps_clone = eps.clone();
    let g = move |y: C64| -> Result<C64> { Ok(f(y)? / eps_clone.weight_alpha(y)?) };
    Ok(eps.weight_alpha(x)? * dx_operator_apply(eps, &g, x)?)
}
