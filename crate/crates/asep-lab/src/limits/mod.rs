//! KPZ-regime limit laws: scaling constants, the Airy function, the
//! Tracy-Widom determinants `F2` and `F1^2`, the Gaussian law, the three
//! block-density limit formulas and the conditional block-probability ratio.

mod airy;
mod tw;

pub use airy::airy;
pub use tw::{airy_kernel_asymmetry, f1sq, f2};

use crate::model::AsepParams;
use crate::{Error, Result};

/// Scaling constants at `m = sigma t`.
///
/// `c1 = -1 + 2 sqrt(sigma)` and `c2 = sigma^{-1/6} (1 - sqrt(sigma))^{2/3}`
/// govern the `t^{1/3}` regime; `c1' = sigma/rho + rho - 1` and
/// `c2' = rho^{-1} sqrt((1-rho)(sigma - rho^2))` the Gaussian regime
/// (present when `sigma >= rho^2` and `rho < 1`). `xi` is the saddle point
/// `-sqrt(sigma)/(1 - sqrt(sigma))` and `c3 = sigma^{-1/6}(1-sqrt(sigma))^{5/3}`,
/// both exposed for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConstants {
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1p: Option<f64>,
    pub c2p: Option<f64>,
    pub xi: f64,
    pub c3: f64,
}

pub fn scaling(sigma: f64, rho: f64) -> Result<ScalingConstants> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::DomainError(format!(
            "sigma must lie in (0,1), got {sigma}"
        )));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::DomainError(format!("rho must lie in (0,1], got {rho}")));
    }
    let rs = sigma.sqrt();
    let c1 = -1.0 + 2.0 * rs;
    let c2 = sigma.powf(-1.0 / 6.0) * (1.0 - rs).powf(2.0 / 3.0);
    let c3 = sigma.powf(-1.0 / 6.0) * (1.0 - rs).powf(5.0 / 3.0);
    let xi = -rs / (1.0 - rs);
    let (c1p, c2p) = if rho < 1.0 && sigma >= rho * rho {
        (
            Some(sigma / rho + rho - 1.0),
            Some(((1.0 - rho) * (sigma - rho * rho)).sqrt() / rho),
        )
    } else {
        (None, None)
    };
    Ok(ScalingConstants {
        sigma,
        c1,
        c2,
        c1p,
        c2p,
        xi,
        c3,
    })
}

/// Which of the three limit laws applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitCase {
    /// `sigma < rho^2`: Tracy-Widom `F2` density.
    Airy2,
    /// `sigma = rho^2`, `rho < 1`: derivative of `F1(s)^2`.
    Airy1Sq,
    /// `sigma > rho^2`, `rho < 1`: Gaussian density.
    Gaussian,
}

impl std::fmt::Display for LimitCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LimitCase::Airy2 => "airy2",
            LimitCase::Airy1Sq => "airy1sq",
            LimitCase::Gaussian => "gaussian",
        })
    }
}

/// A limit-law prediction for `P_{L,rho}(x, ceil(sigma t), t/gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPrediction {
    pub case: LimitCase,
    pub s: f64,
    pub density_value: f64,
    pub prefactor: f64,
    pub power: f64,
}

/// Width of the band around `sigma = rho^2` treated as the critical case.
pub const CASE2_TIE_BAND: f64 = 1e-9;

/// The limit-law density prediction at site `x`, time scale `t`.
pub fn theorem2_density(
    params: &AsepParams,
    sigma: f64,
    l: usize,
    t: f64,
    x: f64,
) -> Result<LimitPrediction> {
    assert!(l >= 1);
    if t <= 0.0 {
        return Err(Error::DomainError("t must be positive".into()));
    }
    let sc = scaling(sigma, params.rho)?;
    let rho2 = params.rho * params.rho;
    let diff = sigma - rho2;
    let sig_pow = sigma.powf((l as f64 - 1.0) / 2.0);
    if diff.abs() < CASE2_TIE_BAND {
        if params.rho >= 1.0 {
            return Err(Error::DomainError(
                "sigma = rho^2 with rho = 1 has no limit formula".into(),
            ));
        }
        let s = (x - sc.c1 * t) / (sc.c2 * t.powf(1.0 / 3.0));
        let prefactor = sig_pow / sc.c2;
        let density = prefactor * f1sq_derivative(s)? * t.powf(-1.0 / 3.0);
        Ok(LimitPrediction {
            case: LimitCase::Airy1Sq,
            s,
            density_value: density,
            prefactor,
            power: -1.0 / 3.0,
        })
    } else if diff < 0.0 {
        let s = (x - sc.c1 * t) / (sc.c2 * t.powf(1.0 / 3.0));
        let prefactor = sig_pow / sc.c2;
        let density = prefactor * f2_derivative(s)? * t.powf(-1.0 / 3.0);
        Ok(LimitPrediction {
            case: LimitCase::Airy2,
            s,
            density_value: density,
            prefactor,
            power: -1.0 / 3.0,
        })
    } else {
        if params.rho >= 1.0 {
            return Err(Error::DomainError(
                "sigma > rho^2 requires rho < 1".into(),
            ));
        }
        let c1p = sc.c1p.expect("present when sigma > rho^2, rho < 1");
        let c2p = sc.c2p.expect("present when sigma > rho^2, rho < 1");
        let s = (x - c1p * t) / (c2p * t.sqrt());
        let prefactor = sig_pow / c2p;
        let density = prefactor * gaussian_g_prime(s) * t.powf(-0.5);
        Ok(LimitPrediction {
            case: LimitCase::Gaussian,
            s,
            density_value: density,
            prefactor,
            power: -0.5,
        })
    }
}

/// The limiting conditional probability that the m-th particle heads a
/// block of length `L` given its position: `sigma^{(L-1)/2}`.
pub fn corollary_ratio(sigma: f64, l: usize) -> f64 {
    assert!(sigma > 0.0 && sigma < 1.0 && l >= 1);
    sigma.powf((l as f64 - 1.0) / 2.0)
}

/// Central difference with one Richardson step, `h = 1e-3`.
fn richardson_derivative(f: impl Fn(f64) -> Result<f64>, s: f64) -> Result<f64> {
    let h = 1e-3;
    let d1 = (f(s + h)? - f(s - h)?) / (2.0 * h);
    let d2 = (f(s + h / 2.0)? - f(s - h / 2.0)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `F2'(s)` by finite differences of the determinant evaluator.
pub fn f2_derivative(s: f64) -> Result<f64> {
    richardson_derivative(f2, s)
}

/// `(F1^2)'(s)` by finite differences of the determinant evaluator.
pub fn f1sq_derivative(s: f64) -> Result<f64> {
    richardson_derivative(f1sq, s)
}

/// Standard normal distribution function.
pub fn gaussian_g(s: f64) -> f64 {
    0.5 * erfc(-s / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn gaussian_g_prime(s: f64) -> f64 {
    (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Complementary error function to near machine precision: Maclaurin series
/// for small arguments, Legendre continued fraction (modified Lentz) beyond.
fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.2 {
        return 1.0 - erf_series(x);
    }
    if x > 26.7 {
        return 0.0;
    }
    // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
    // evaluated by modified Lentz with partial numerators a_j = (j-1)/2 for
    // j >= 2 (a_1 = 1) and constant denominators x
    let tiny = 1e-300;
    let mut f = tiny;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..200 {
        let a = if j == 1 { 1.0 } else { (j - 1) as f64 / 2.0 };
        d = x + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = x + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() * f
}

fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut acc = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        acc += add;
        if add.abs() < 1e-18 * acc.abs() {
            break;
        }
    }
    acc * 2.0 / std::f64::consts::PI.sqrt()
}
