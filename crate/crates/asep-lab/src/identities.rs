//! Numerical verification of the exactly solvable nested w-integrals over
//! `Gamma_{0,tau}` and the mu-integral of the infinite Pochhammer symbol.
//! Each operation returns the quadrature value together with its closed
//! form, so agreement can be asserted at will; these identities pin down
//! the contour conventions the evaluators in [`crate::exact`] and
//! [`crate::jrep`] depend on.

use num_complex::Complex64;

use crate::contours::{circle_grid, Circle, Contour, QuadratureGrid};
use crate::model::tau_pochhammer_inf;
use crate::{Error, Result};

/// Level radii for the identity integrands.
///
/// These integrands carry no singularities tied to `p = tau/(1+tau)`, so the
/// circles can be much larger than the Theorem-1 family. Base radius
/// `min(tau/4, (1-tau)/2)` keeps the circle pairs disjoint and keeps the
/// level-1 tau-circle away from the point 1, whose image `tau * w` would
/// otherwise land on the inner tau-circles; shrink factor `tau/2` keeps the
/// moving poles `tau * w_outer` and `w_inner / tau` -- whose pinch residues
/// reach 1e6 -- at relative distance 2 from every circle, which the default
/// 64 nodes resolve to ~1e-13. Radii this large also matter for roundoff:
/// the `(w - tau)^{-(L-j+1)}` factors grow like inverse powers of the radii.
pub fn identity_gamma_radii(l: usize, tau: f64) -> Vec<f64> {
    let r1 = (tau / 4.0).min((1.0 - tau) / 2.0);
    (0..l).map(|i| r1 * (tau / 2.0).powi(i as i32)).collect()
}

fn identity_gamma_grids(l: usize, tau: f64, n: usize) -> Vec<QuadratureGrid> {
    identity_gamma_radii(l, tau)
        .into_iter()
        .map(|r| {
            Contour {
                components: vec![
                    Circle::new(Complex64::new(0.0, 0.0), r),
                    Circle::new(Complex64::new(tau, 0.0), r),
                ],
            }
            .grid(n)
        })
        .collect()
}

/// Affine transformation `w -> a w + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: Complex64,
    pub b: Complex64,
}

impl AffineMap {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        Self { a, b }
    }

    pub fn constant(b: Complex64) -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            b,
        }
    }

    pub fn apply(&self, w: Complex64) -> Complex64 {
        self.a * w + self.b
    }
}

/// Nested contour integral over the given per-level grids (outermost first),
/// summed in a fixed odometer order. The terms cancel by up to fifteen
/// orders of magnitude in the vanishing identities, so the accumulation is
/// compensated.
fn nested_integral(
    grids: &[QuadratureGrid],
    integrand: impl Fn(&[Complex64]) -> Complex64,
) -> Result<Complex64> {
    let l = grids.len();
    let sizes: Vec<usize> = grids.iter().map(|g| g.len()).collect();
    let total: usize = sizes.iter().product();
    let mut w = vec![Complex64::new(0.0, 0.0); l];
    let mut acc = crate::linalg::NeumaierSum::default();
    for flat in 0..total {
        let mut rem = flat;
        let mut weight = Complex64::new(1.0, 0.0);
        for k in (0..l).rev() {
            let a = rem % sizes[k];
            rem /= sizes[k];
            w[k] = grids[k].nodes[a];
            weight *= grids[k].weights[a];
        }
        let v = integrand(&w);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::QuadratureFailure("nested w-integrand"));
        }
        acc.add(weight * v);
    }
    Ok(acc.value())
}

/// `F_L(w) = prod_j (w_j - 1)^{L-j} / (w_j (w_j - tau)^{L-j+1})
///          * prod_{i<j} (w_i - w_j)/(tau w_i - w_j)`
fn f_l(w: &[Complex64], tau: f64) -> Complex64 {
    let l = w.len();
    let mut v = Complex64::new(1.0, 0.0);
    for (jj, wj) in w.iter().enumerate() {
        let pw = (l - jj - 1) as i32;
        v *= (wj - 1.0).powi(pw) / (wj * (wj - tau).powi(pw + 1));
    }
    for i in 0..l {
        for j in i + 1..l {
            v *= (w[i] - w[j]) / (tau * w[i] - w[j]);
        }
    }
    v
}

fn check_point_clear(point: Complex64, tau: f64, levels: usize) -> Result<()> {
    let radii = identity_gamma_radii(levels, tau);
    let r1 = radii[0];
    for r in radii {
        for center in [Complex64::new(0.0, 0.0), Complex64::new(tau, 0.0)] {
            if (point - center).norm() < r + 2.0 * r1 {
                return Err(Error::ThetaTooClose);
            }
        }
    }
    Ok(())
}

/// General affine w-integral: numeric nested quadrature of
/// `Phi_L = F_L(w) prod_j phi_j(w_j) / (theta - w_j)` against the closed form
/// `prod_j phi_j(tau^{j-1} theta) / (theta^L (theta - tau)^L tau^{L^2 - L})`.
pub fn w_integral_general(
    phis: &[AffineMap],
    theta: Complex64,
    tau: f64,
    n: usize,
) -> Result<(Complex64, Complex64)> {
    let l = phis.len();
    assert!(l >= 1, "need at least one affine map");
    check_point_clear(theta, tau, l)?;
    let grids = identity_gamma_grids(l, tau, n);
    let numeric = nested_integral(&grids, |w| {
        let mut v = f_l(w, tau);
        for (phi, wj) in phis.iter().zip(w) {
            v *= phi.apply(*wj) / (theta - wj);
        }
        v
    })?;
    Ok((numeric, w_integral_general_closed(phis, theta, tau)))
}

fn w_integral_general_closed(phis: &[AffineMap], theta: Complex64, tau: f64) -> Complex64 {
    let l = phis.len();
    let mut v = 1.0
        / (theta.powi(l as i32)
            * (theta - tau).powi(l as i32)
            * tau.powi((l * l - l) as i32));
    for (j, phi) in phis.iter().enumerate() {
        v *= phi.apply(tau.powi(j as i32) * theta);
    }
    v
}

/// Same integrand as [`w_integral_general`] evaluated on caller-supplied
/// level radii. Exists so the nesting-order sensitivity of the identity can
/// be demonstrated: radii that do not decrease (inner contours not inside
/// outer ones) change which cross-factor poles are enclosed and break the
/// closed form.
pub fn w_integral_general_with_radii(
    phis: &[AffineMap],
    theta: Complex64,
    tau: f64,
    n: usize,
    radii: &[f64],
) -> Result<Complex64> {
    let l = phis.len();
    assert_eq!(radii.len(), l, "one radius per level");
    let grids: Vec<QuadratureGrid> = radii
        .iter()
        .map(|&r| {
            Contour {
                components: vec![
                    Circle::new(Complex64::new(0.0, 0.0), r),
                    Circle::new(Complex64::new(tau, 0.0), r),
                ],
            }
            .grid(n)
        })
        .collect();
    nested_integral(&grids, |w| {
        let mut v = f_l(w, tau);
        for (phi, wj) in phis.iter().zip(w) {
            v *= phi.apply(*wj) / (theta - wj);
        }
        v
    })
}

/// `integral F_L(w) w_1/(w_1 xi - tau) dw = -((1-tau)...(1-tau^{L-1})/tau^{L^2})
///  xi^{L-1}/(1-xi)^L`.
pub fn w_integral_block_sum(
    xi: Complex64,
    tau: f64,
    l: usize,
    n: usize,
) -> Result<(Complex64, Complex64)> {
    assert!(l >= 1);
    if xi.norm() < 1e-12 || (xi - 1.0).norm() < 1e-12 {
        return Err(Error::DomainError("xi must avoid 0 and 1".into()));
    }
    // the integrand pole sits at w_1 = tau/xi
    check_point_clear(tau / xi, tau, l)?;
    let grids = identity_gamma_grids(l, tau, n);
    let numeric = nested_integral(&grids, |w| {
        f_l(w, tau) * w[0] / (w[0] * xi - tau)
    })?;
    let mut pref = Complex64::new(1.0, 0.0);
    for k in 1..l {
        pref *= 1.0 - tau.powi(k as i32);
    }
    let closed = -pref / tau.powi((l * l) as i32) * xi.powi(l as i32 - 1)
        / (1.0 - xi).powi(l as i32);
    Ok((numeric, closed))
}

/// `integral F_L(w) prod_j (w_j alpha^{-1} + tau)/(w_j eta - tau) dw
///  = prod_{j=1}^{L} (alpha eta + tau^{j-1}) / (alpha^L (eta-1)^L tau^{L^2})`.
pub fn w_integral_case3(
    eta: Complex64,
    alpha: f64,
    tau: f64,
    l: usize,
    n: usize,
) -> Result<(Complex64, Complex64)> {
    assert!(l >= 1);
    if alpha <= 0.0 {
        return Err(Error::DomainError("alpha must be positive".into()));
    }
    if (eta - 1.0).norm() < 1e-12 || eta.norm() < 1e-12 {
        return Err(Error::DomainError("eta must avoid 0 and 1".into()));
    }
    check_point_clear(tau / eta, tau, l)?;
    let inv_alpha = 1.0 / alpha;
    let grids = identity_gamma_grids(l, tau, n);
    let numeric = nested_integral(&grids, |w| {
        let mut v = f_l(w, tau);
        for wj in w {
            v *= (wj * inv_alpha + tau) / (wj * eta - tau);
        }
        v
    })?;
    let mut num = Complex64::new(1.0, 0.0);
    for j in 1..=l {
        num *= alpha * eta + tau.powi(j as i32 - 1);
    }
    let closed =
        num / (alpha.powi(l as i32) * (eta - 1.0).powi(l as i32) * tau.powi((l * l) as i32));
    Ok((numeric, closed))
}

/// The pure `F_L` integral vanishes for every `L >= 1`.
///
/// The target here is absolute (the closed form is 0) and the terms cancel
/// to below the f64 product-roundoff floor at small tau, so each term is
/// evaluated in double-double arithmetic.
pub fn w_integral_zero(tau: f64, l: usize, n: usize) -> Result<Complex64> {
    use crate::dd::{unit_root, CDd, Dd};
    assert!(l >= 1);
    assert!(n.is_power_of_two() && (8..=4096).contains(&n));
    let radii = identity_gamma_radii(l, tau);
    let tau_dd = CDd {
        re: Dd::from(tau),
        im: Dd::default(),
    };
    let one = CDd::from(Complex64::new(1.0, 0.0));
    // Nodes built in double-double precision from exact roots of unity:
    // ordinary f64 node coordinates carry O(eps) phase noise that couples to
    // the ~1e6 near-pole Fourier amplitudes of this integrand and leaves an
    // n-independent ~1e-10 bias, well above the cancellation target.
    struct Node {
        w: CDd,
        shifted: CDd, // w - tau
        weight: CDd,
    }
    let inv_n = 1.0 / n as f64; // exact, n is a power of two
    let levels: Vec<Vec<Node>> = radii
        .iter()
        .map(|&r| {
            let r_dd = CDd {
                re: Dd::from(r),
                im: Dd::default(),
            };
            let scale = CDd {
                re: Dd::from(inv_n),
                im: Dd::default(),
            };
            let mut nodes = Vec::with_capacity(2 * n);
            for center in [CDd::default(), tau_dd] {
                for j in 0..n {
                    let offset = r_dd.mul(unit_root(j, n));
                    let w = center.add(offset);
                    nodes.push(Node {
                        w,
                        shifted: w.sub(tau_dd),
                        weight: offset.mul(scale),
                    });
                }
            }
            // on the tau-circle the shift is the offset itself, exactly
            for (j, node) in nodes.iter_mut().enumerate().skip(n) {
                node.shifted = r_dd.mul(unit_root(j - n, n));
            }
            nodes
        })
        .collect();
    let sizes: Vec<usize> = levels.iter().map(|lvl| lvl.len()).collect();
    let total: usize = sizes.iter().product();
    let mut acc = CDd::default();
    let mut idx = vec![0usize; l];
    for flat in 0..total {
        let mut rem = flat;
        let mut term = one;
        for k in (0..l).rev() {
            idx[k] = rem % sizes[k];
            rem /= sizes[k];
            term = term.mul(levels[k][idx[k]].weight);
        }
        for (jj, level) in levels.iter().enumerate() {
            let node = &level[idx[jj]];
            let pw = l - jj - 1;
            let mut den = node.w.mul(node.shifted);
            for _ in 0..pw {
                den = den.mul(node.shifted);
                term = term.mul(node.w.sub(one));
            }
            term = term.div(den);
        }
        for i in 0..l {
            for j in i + 1..l {
                let wi = levels[i][idx[i]].w;
                let wj = levels[j][idx[j]].w;
                term = term.mul(wi.sub(wj));
                term = term.div(tau_dd.mul(wi).sub(wj));
            }
        }
        acc = acc.add(term);
        if !acc.re.hi.is_finite() || !acc.im.hi.is_finite() {
            return Err(Error::QuadratureFailure("F_L zero integrand"));
        }
    }
    Ok(acc.to_complex())
}

/// The generalized integral `V_{L,k}` with the extra factor
/// `prod_j (theta - w_j)/(tau^k theta - w_j)`, against its product closed form
/// `prod_j phi_j(tau^{k+j-1} theta) / (theta^L tau^{kL+L^2} (tau^{k-1} theta - 1)^L)`.
pub fn v_recursion(
    phis: &[AffineMap],
    theta: Complex64,
    tau: f64,
    k: usize,
    n: usize,
) -> Result<(Complex64, Complex64)> {
    let l = phis.len();
    assert!(l >= 1);
    check_point_clear(theta, tau, l)?;
    check_point_clear(tau.powi(k as i32) * theta, tau, l)?;
    let tk_theta = tau.powi(k as i32) * theta;
    let grids = identity_gamma_grids(l, tau, n);
    let numeric = nested_integral(&grids, |w| {
        let mut v = f_l(w, tau);
        for (phi, wj) in phis.iter().zip(w) {
            v *= phi.apply(*wj) / (theta - wj);
            v *= (theta - wj) / (tk_theta - wj);
        }
        v
    })?;
    let mut closed = 1.0
        / (theta.powi(l as i32)
            * tau.powi((k * l + l * l) as i32)
            * (tau.powi(k as i32 - 1) * theta - 1.0).powi(l as i32));
    for (j, phi) in phis.iter().enumerate() {
        closed *= phi.apply(tau.powi((k + j) as i32) * theta);
    }
    Ok((numeric, closed))
}

/// `integral (tau^L mu; tau)_inf dmu/mu^L` over a small circle about 0:
/// the coefficient of `mu^{L-1}` in the entire function `(tau^L mu; tau)_inf`,
/// in closed form `(-1)^{L-1} tau^{(L-1)(3L-2)/2} / ((1-tau)...(1-tau^{L-1}))`.
pub fn mu_integral(l: usize, tau: f64, n: usize) -> (Complex64, Complex64) {
    assert!(l >= 1);
    let grid = circle_grid(Complex64::new(0.0, 0.0), 1.0, n);
    let mut numeric = Complex64::new(0.0, 0.0);
    for (mu, w) in grid.nodes.iter().zip(&grid.weights) {
        let (poch, _) = tau_pochhammer_inf(tau.powi(l as i32) * mu, tau);
        numeric += w * poch / mu.powi(l as i32);
    }
    let mut den = 1.0;
    for k in 1..l {
        den *= 1.0 - tau.powi(k as i32);
    }
    let sign = if (l - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let expo = ((l - 1) * (3 * l - 2) / 2) as i32;
    let closed = Complex64::new(sign * tau.powi(expo) / den, 0.0);
    (numeric, closed)
}
