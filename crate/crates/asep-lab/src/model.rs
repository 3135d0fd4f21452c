//! Shared domain types and the scalar special functions of the model:
//! the two-point factor `U`, the jump-rate symbol `eps`, tau-Pochhammer
//! symbols and the Gaussian (tau-)binomial coefficient.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::{Error, Result};

/// Validated ASEP parameters with the derived quantities used everywhere.
///
/// `p` is the left-jump probability, `q = 1 - p` the right-jump probability,
/// `rho` the Bernoulli density of the initial data on positive sites,
/// `tau = p/q`, `gamma = q - p` and `alpha = (1 - rho)/rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsepParams {
    pub p: f64,
    pub q: f64,
    pub rho: f64,
    pub tau: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl AsepParams {
    /// Build parameters from `(p, rho)`. Requires `0 < p < 1/2` (so that
    /// `gamma > 0` and `0 < tau < 1`) and `0 < rho <= 1`.
    pub fn new(p: f64, rho: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::InvalidP(p));
        }
        if p >= 0.5 {
            return Err(Error::GammaNotPositive(p));
        }
        if !rho.is_finite() || rho <= 0.0 || rho > 1.0 {
            return Err(Error::InvalidRho(rho));
        }
        let q = 1.0 - p;
        Ok(Self {
            p,
            q,
            rho,
            tau: p / q,
            gamma: q - p,
            alpha: (1.0 - rho) / rho,
        })
    }
}

/// The event `x_m(t) = x, ..., x_{m+L-1}(t) = x + L - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockQuery {
    /// Block length `L >= 1`.
    pub l: usize,
    /// Site where the block starts.
    pub x: i64,
    /// Index (from the left, starting at 1) of the particle heading the block.
    pub m: usize,
    /// Time, `t >= 0`.
    pub t: f64,
}

impl BlockQuery {
    pub fn new(l: usize, x: i64, m: usize, t: f64) -> Result<Self> {
        if l < 1 {
            return Err(Error::InvalidQuery("block length L must be >= 1".into()));
        }
        if m < 1 {
            return Err(Error::InvalidQuery("particle index m must be >= 1".into()));
        }
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidQuery(format!("time must be finite and >= 0, got {t}")));
        }
        Ok(Self { l, x, m, t })
    }
}

/// Which evaluator produced a probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactTheorem1,
    JrepLemma,
    MonteCarlo,
    LimitLaw,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::ExactTheorem1 => "exact-theorem1",
            Method::JrepLemma => "jrep-lemma",
            Method::MonteCarlo => "monte-carlo",
            Method::LimitLaw => "limit-law",
        };
        f.write_str(s)
    }
}

/// A probability value with provenance and convergence diagnostics.
///
/// `error` is the standard error for Monte Carlo estimates and the reported
/// convergence gap for quadrature-based evaluators.
#[derive(Debug, Clone)]
pub struct ProbabilityResult {
    pub value: f64,
    pub method: Method,
    pub error: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// `U(z, z') = (p + q z z' - z) / (z' - z)`.
pub fn u_factor(z: Complex64, zp: Complex64, params: &AsepParams) -> Result<Complex64> {
    let den = zp - z;
    if den.norm() <= 1e-12 * (1.0 + z.norm().max(zp.norm())) {
        return Err(Error::PoleAtCoincidence);
    }
    Ok((params.p + params.q * z * zp - z) / den)
}

/// `eps(z) = p/z + q z - 1`, the symbol governing the time dependence.
/// Identically `q (z - 1)(z - tau) / z`.
pub fn eps_rate(z: Complex64, params: &AsepParams) -> Result<Complex64> {
    if z.norm() <= 1e-300 {
        return Err(Error::DomainError("eps(0) is singular".into()));
    }
    Ok(params.p / z + params.q * z - 1.0)
}

/// Finite tau-Pochhammer symbol `(a; tau)_m = prod_{j=0}^{m-1} (1 - a tau^j)`.
pub fn tau_pochhammer(a: Complex64, tau: f64, m: usize) -> Complex64 {
    let mut value = Complex64::new(1.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    for _ in 0..m {
        value *= 1.0 - a * pow;
        pow *= tau;
    }
    value
}

/// Infinite tau-Pochhammer `(a; tau)_inf`, truncated once `|a| tau^n < 1e-16`.
///
/// Returns the truncated product together with a rigorous relative bound on
/// the discarded tail: the remaining factors satisfy
/// `|prod (1 - a tau^n) - 1| <= s e^s` with `s = |a| tau^N / (1 - tau)`.
pub fn tau_pochhammer_inf(a: Complex64, tau: f64) -> (Complex64, f64) {
    assert!(
        tau > 0.0 && tau < 1.0,
        "infinite Pochhammer requires 0 < tau < 1"
    );
    let mut value = Complex64::new(1.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    let mut n = 0usize;
    while a.norm() * pow.norm() >= 1e-16 && n < 10_000 {
        value *= 1.0 - a * pow;
        pow *= tau;
        n += 1;
    }
    let s = a.norm() * pow.norm() / (1.0 - tau);
    (value, s * s.exp())
}

/// Gaussian binomial coefficient `[n m]_tau = prod_{i=1}^{m} (1 - tau^{n-m+i}) / (1 - tau^i)`.
///
/// Returns 0 for `m > n` by convention.
pub fn tau_binomial(n: u64, m: u64, tau: f64) -> f64 {
    if m > n {
        return 0.0;
    }
    let mut value = 1.0;
    for i in 1..=m {
        value *= (1.0 - tau.powi((n - m + i) as i32)) / (1.0 - tau.powi(i as i32));
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;
    use proptest::prelude::*;

    #[test]
    fn params_derived_fields() {
        let p = AsepParams::new(0.3, 0.8).unwrap();
        assert_eq!(p.q, 0.7);
        assert!((p.tau - 3.0 / 7.0).abs() < 1e-15);
        assert!((p.gamma - 0.4).abs() < 1e-15);
        assert!((p.alpha - 0.25).abs() < 1e-15);
        // recomputation matches stored values bit-for-bit
        assert_eq!(p.tau, p.p / p.q);
        assert_eq!(p.gamma, p.q - p.p);
        assert_eq!(p.alpha, (1.0 - p.rho) / p.rho);
    }

    #[test]
    fn params_rho_one_kills_alpha() {
        let p = AsepParams::new(0.3, 1.0).unwrap();
        assert_eq!(p.alpha, 0.0);
    }

    #[test]
    fn params_rejects_bad_inputs() {
        assert!(matches!(AsepParams::new(0.5, 0.8), Err(Error::GammaNotPositive(_))));
        assert!(matches!(AsepParams::new(0.0, 0.8), Err(Error::InvalidP(_))));
        assert!(matches!(AsepParams::new(-0.1, 0.8), Err(Error::InvalidP(_))));
        assert!(matches!(AsepParams::new(0.3, 0.0), Err(Error::InvalidRho(_))));
        assert!(matches!(AsepParams::new(0.3, 1.2), Err(Error::InvalidRho(_))));
    }

    #[test]
    fn u_factor_examples() {
        let p = AsepParams::new(0.3, 0.8).unwrap();
        let u = u_factor(C::new(0.0, 0.0), C::new(2.0, 0.0), &p).unwrap();
        assert!((u - C::new(0.15, 0.0)).norm() < 1e-15);
        // U(1, zp) = q for any zp != 1
        let u = u_factor(C::new(1.0, 0.0), C::new(0.4, 0.7), &p).unwrap();
        assert!((u - C::new(p.q, 0.0)).norm() < 1e-14);
        assert!(u_factor(C::new(0.5, 0.2), C::new(0.5, 0.2), &p).is_err());
    }

    #[test]
    fn eps_rate_examples() {
        let p = AsepParams::new(0.3, 0.8).unwrap();
        assert!(eps_rate(C::new(1.0, 0.0), &p).unwrap().norm() < 1e-15);
        assert!(eps_rate(C::new(p.tau, 0.0), &p).unwrap().norm() < 1e-15);
        let e = eps_rate(C::new(2.0, 0.0), &p).unwrap();
        assert!((e - C::new(0.55, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(tau_pochhammer(C::new(0.7, 0.0), 0.5, 0), C::new(1.0, 0.0));
        let v = tau_pochhammer(C::new(0.5, 0.0), 0.5, 2);
        assert!((v - C::new(0.375, 0.0)).norm() < 1e-15);
        assert_eq!(tau_pochhammer(C::new(0.0, 0.0), 0.5, 7), C::new(1.0, 0.0));
        let (vi, bound) = tau_pochhammer_inf(C::new(0.0, 0.0), 0.5);
        assert_eq!(vi, C::new(1.0, 0.0));
        assert!(bound < 1e-15);
    }

    #[test]
    fn tau_binomial_examples() {
        assert_eq!(tau_binomial(5, 0, 0.3), 1.0);
        assert!((tau_binomial(2, 1, 0.5) - 1.5).abs() < 1e-15);
        assert_eq!(tau_binomial(3, 4, 0.5), 0.0);
        // tau -> 1 recovers the classical binomial coefficient (the exact
        // value at tau = 0.9999 sits 1.1e-3 below 6)
        assert!((tau_binomial(4, 2, 0.9999) - 6.0).abs() < 2e-3);
        assert!((tau_binomial(4, 2, 0.99999) - 6.0).abs() < 2e-4);
    }

    #[test]
    fn q_pascal_identity() {
        for &tau in &[0.1, 0.5, 0.9] {
            for n in 2..=12u64 {
                for m in 1..n {
                    let lhs = tau_binomial(n, m, tau);
                    let rhs = tau.powi(m as i32) * tau_binomial(n - 1, m, tau)
                        + tau_binomial(n - 1, m - 1, tau);
                    assert!(
                        (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0),
                        "q-Pascal failed at n={n} m={m} tau={tau}"
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pochhammer_splits(re in -0.9f64..0.9, im in -0.9f64..0.9,
                             tau in 0.05f64..0.95, m in 0usize..10, k in 0usize..10) {
            let a = C::new(re, im);
            let lhs = tau_pochhammer(a, tau, m + k);
            let rhs = tau_pochhammer(a, tau, m)
                * tau_pochhammer(a * tau.powi(m as i32), tau, k);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }

        #[test]
        fn eps_factored_form(re in -2.0f64..2.0, im in -2.0f64..2.0, p in 0.05f64..0.45) {
            let params = AsepParams::new(p, 1.0).unwrap();
            let z = C::new(re, im);
            prop_assume!(z.norm() > 1e-3);
            let lhs = eps_rate(z, &params).unwrap();
            let rhs = params.q * (z - 1.0) * (z - params.tau) / z;
            prop_assert!((lhs - rhs).norm() <= 1e-13 * lhs.norm().max(1.0));
        }

        #[test]
        fn u_clears_denominator(a in -2.0f64..2.0, b in -2.0f64..2.0,
                                c in -2.0f64..2.0, d in -2.0f64..2.0, p in 0.05f64..0.45) {
            let params = AsepParams::new(p, 1.0).unwrap();
            let z = C::new(a, b);
            let zp = C::new(c, d);
            prop_assume!((z - zp).norm() > 1e-3);
            let u = u_factor(z, zp, &params).unwrap();
            let resid = u * (zp - z) + z - params.p - params.q * z * zp;
            prop_assert!(resid.norm() <= 1e-13 * (1.0 + u.norm() * (zp - z).norm()));
        }
    }
}
