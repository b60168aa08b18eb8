//! Trapezoidal contour quadrature on the unit circle with node doubling.
//!
//! For a function analytic in an annulus around |z| = 1 the equispaced
//! trapezoidal rule converges exponentially in the node count, so the driver
//! simply doubles nodes (reusing previous evaluations) until two successive
//! averages agree to the requested relative tolerance.
//!
//! The normalization is `circle_mean(f) = (1/2 pi i) int_T f(z) dz/z`, i.e.
//! the plain average of f over the nodes e^{2 pi i k/N}.

use rayon::prelude::*;

use crate::gamma::BasePair;
use crate::theta::qpochhammer_infinite;
use crate::{C64, Error, Result};

/// Node counts at or above this threshold are evaluated in parallel.
const PAR_THRESHOLD: usize = 512;

/// Controls for unit-circle trapezoidal quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Initial node count; a power of two, at least 64.
    pub n0: usize,
    /// Maximum node count.
    pub n_max: usize,
    /// Relative tolerance on successive doublings.
    pub rtol: f64,
    /// Minimum pole clearance from |z| = 1 demanded of integrand parameters.
    pub delta_margin: f64,
}

impl QuadratureSpec {
    pub fn new(n0: usize, n_max: usize, rtol: f64, delta_margin: f64) -> Result<Self> {
        if n0 < 64 || !n0.is_power_of_two() {
            return Err(Error::invalid("n0 must be a power of two >= 64"));
        }
        if n_max > 1 << 20 || n_max < n0 {
            return Err(Error::invalid("n_max must satisfy n0 <= n_max <= 2^20"));
        }
        if !(1e-14..=1e-2).contains(&rtol) {
            return Err(Error::invalid("rtol must lie in [1e-14, 1e-2]"));
        }
        if !(delta_margin > 0.0 && delta_margin < 0.5) {
            return Err(Error::invalid("delta_margin must lie in (0, 0.5)"));
        }
        Ok(QuadratureSpec { n0, n_max, rtol, delta_margin })
    }

    /// Outer-integral defaults: n0 = 256, n_max = 16384, rtol = 1e-11.
    pub fn default_outer() -> Self {
        QuadratureSpec { n0: 256, n_max: 16384, rtol: 1e-11, delta_margin: 0.05 }
    }

    /// Reduced spec for inner integrals of nested quadratures.
    pub fn default_inner() -> Self {
        QuadratureSpec { n0: 256, n_max: 4096, rtol: 1e-8, delta_margin: 0.05 }
    }
}

/// Outcome of one adaptive quadrature run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: C64,
    /// |value_N - value_{N/2}| / max(|value_N|, 1e-300).
    pub error_estimate: f64,
    pub nodes_used: usize,
    pub converged: bool,
}

/// Deterministic pairwise summation (fixed association order).
fn pairwise_sum(values: &[C64]) -> C64 {
    match values.len() {
        0 => C64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

fn eval_nodes<F>(f: &F, nodes: &[C64]) -> Result<Vec<C64>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let values: Vec<Result<C64>> = if nodes.len() >= PAR_THRESHOLD {
        nodes.par_iter().map(|&z| f(z)).collect()
    } else {
        nodes.iter().map(|&z| f(z)).collect()
    };
    let mut out = Vec::with_capacity(nodes.len());
    for (z, v) in nodes.iter().zip(values) {
        let v = v?;
        if !v.is_finite() {
            return Err(Error::IntegrandFailure {
                context: "non-finite integrand value".into(),
                node: *z,
            });
        }
        out.push(v);
    }
    Ok(out)
}

/// Average of f over N equispaced nodes on |z| = 1, doubling N from
/// `spec.n0` until successive averages agree to `spec.rtol` or `spec.n_max`
/// is reached. Equals (1/2 pi i) int_T f(z) dz/z for annulus-analytic f.
pub fn circle_mean<F>(f: &F, spec: &QuadratureSpec) -> Result<QuadratureResult>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let node = |k: usize, n: usize| -> C64 {
        let angle = std::f64::consts::TAU * k as f64 / n as f64;
        C64::new(angle.cos(), angle.sin())
    };

    let mut n = spec.n0;
    let initial: Vec<C64> = (0..n).map(|k| node(k, n)).collect();
    let mut total = pairwise_sum(&eval_nodes(f, &initial)?);
    let mut mean = total / n as f64;
    let mut error_estimate = f64::INFINITY;

    while n < spec.n_max {
        let doubled = 2 * n;
        // New nodes are the odd positions of the doubled grid.
        let fresh: Vec<C64> = (0..n).map(|k| node(2 * k + 1, doubled)).collect();
        total += pairwise_sum(&eval_nodes(f, &fresh)?);
        n = doubled;
        let new_mean = total / n as f64;
        error_estimate = (new_mean - mean).norm() / new_mean.norm().max(1e-300);
        mean = new_mean;
        if error_estimate < spec.rtol {
            return Ok(QuadratureResult {
                value: mean,
                error_estimate,
                nodes_used: n,
                converged: true,
            });
        }
    }
    Ok(QuadratureResult { value: mean, error_estimate, nodes_used: n, converged: false })
}

/// kappa = (p;p)_inf (q;q)_inf / (4 pi i).
pub fn kappa_factor(bases: &BasePair) -> Result<C64> {
    let pp = qpochhammer_infinite(bases.p, &bases.nome_p())?;
    let qq = qpochhammer_infinite(bases.q, &bases.nome_q())?;
    Ok(pp * qq / (C64::i() * 4.0 * std::f64::consts::PI))
}

/// kappa int_T f(z) dz/z computed as ((p;p)_inf (q;q)_inf / 2) * circle_mean(f).
pub fn kappa_contour_integral<F>(
    f: &F,
    bases: &BasePair,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let pp = qpochhammer_infinite(bases.p, &bases.nome_p())?;
    let qq = qpochhammer_infinite(bases.q, &bases.nome_q())?;
    let mut result = circle_mean(f, spec)?;
    result.value *= pp * qq / 2.0;
    Ok(result)
}

/// True iff every parameter satisfies |t_j| <= 1 - delta, keeping the
/// gamma-factor poles clear of an annulus around the contour.
pub fn pole_margin_check(params: &[C64], delta: f64) -> bool {
    params.iter().all(|t| t.norm() <= 1.0 - delta)
}
