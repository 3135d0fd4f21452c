//! Circles, multi-circle contours and periodic-trapezoid quadrature grids.
//!
//! All grids fold the global `1/(2 pi i)` normalization into their weights,
//! so `integrate(f, grid)` returns the normalized contour integral directly.
//! On a circle the trapezoid rule is spectrally accurate for integrands
//! analytic in an annulus around it, and it is exact on Laurent monomials
//! `z^k` for `|k| < n`, which is what makes residue extraction cheap.

use num_complex::Complex64;

use crate::{Error, Result};

/// A counterclockwise circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Self {
        assert!(radius > 0.0, "circle radius must be positive");
        Self { center, radius }
    }

    /// Signed distance from `z` to this circle (negative inside).
    pub fn distance(&self, z: Complex64) -> f64 {
        (z - self.center).norm() - self.radius
    }

    pub fn grid(&self, n: usize) -> QuadratureGrid {
        circle_grid(self.center, self.radius, n)
    }
}

/// A contour made of disjoint counterclockwise circles.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub components: Vec<Circle>,
}

impl Contour {
    pub fn grid(&self, n_per_circle: usize) -> QuadratureGrid {
        let mut grid = QuadratureGrid {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        for c in &self.components {
            let g = c.grid(n_per_circle);
            grid.nodes.extend(g.nodes);
            grid.weights.extend(g.weights);
        }
        grid
    }
}

/// Discretized contour: nodes plus trapezoid weights with `1/(2 pi i)` folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Equispaced trapezoid grid on a circle. `weights[j] = (node_j - center)/n`,
/// which is exactly `dz/(2 pi i)` for the n-point trapezoid rule.
pub fn circle_grid(center: Complex64, radius: f64, n: usize) -> QuadratureGrid {
    assert!(radius > 0.0, "circle radius must be positive");
    assert!(n >= 8 && n.is_power_of_two(), "node count must be a power of two >= 8");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let offset = Complex64::from_polar(radius, theta);
        nodes.push(center + offset);
        weights.push(offset / n as f64);
    }
    QuadratureGrid { nodes, weights }
}

/// Base radius for the `Gamma_{0,tau}` circle pairs.
///
/// The level-1 circles about 0 and tau must stay clear of every fixed
/// singularity of the integrands they are used with: the point `p = tau/(1+tau)`
/// (zeros of `q z - p` and the two-point factors), the image point `tau^2`
/// of the tau-circle under `w -> tau w`, and each other. A quarter of the
/// smallest such distance keeps the nearest singularity at relative distance
/// >= 4 from every circle, so the trapezoid error decays like `4^{-n}`.
pub fn gamma_base_radius(tau: f64) -> f64 {
    let d = (tau * tau / (1.0 + tau)).min(tau * (1.0 - tau)).min(tau / 2.0);
    d / 4.0
}

/// Nested `Gamma_{0,tau}` grids for an `L`-fold contour integral.
///
/// Level `i` (1-based) consists of circles of radius `r_1 (tau/4)^{i-1}`
/// about 0 and about tau, each carrying `n` nodes, so deeper levels are
/// well inside shallower ones. The shrink factor `tau/4` keeps the moving
/// poles `tau * w_outer` (and their Theorem-1 analogues) at relative
/// distance >= 4 from every circle for all `0 < tau < 1`; a fixed shrink
/// ratio independent of tau would put them on the circles near `tau = 1/2`.
pub fn nested_gamma_grids(l: usize, tau: f64, n: usize) -> Vec<QuadratureGrid> {
    nested_gamma_grids_clamped(l, tau, n, f64::INFINITY)
}

/// Same as [`nested_gamma_grids`] with an additional cap on the base radius,
/// for integrands with extra poles near the circles (see [`crate::jrep`]).
pub fn nested_gamma_grids_clamped(
    l: usize,
    tau: f64,
    n: usize,
    max_base_radius: f64,
) -> Vec<QuadratureGrid> {
    assert!(l >= 1, "need at least one contour level");
    assert!(tau > 0.0 && tau < 1.0, "tau must lie in (0,1)");
    let r1 = gamma_base_radius(tau).min(max_base_radius);
    let shrink = tau / 4.0;
    (0..l)
        .map(|i| {
            let r = r1 * shrink.powi(i as i32);
            let contour = Contour {
                components: vec![
                    Circle::new(Complex64::new(0.0, 0.0), r),
                    Circle::new(Complex64::new(tau, 0.0), r),
                ],
            };
            contour.grid(n)
        })
        .collect()
}

/// Level radii matching [`nested_gamma_grids`], for pole-clearance checks.
pub fn nested_gamma_radii(l: usize, tau: f64) -> Vec<f64> {
    let r1 = gamma_base_radius(tau);
    (0..l).map(|i| r1 * (tau / 4.0).powi(i as i32)).collect()
}

/// `sum f(node) * weight` over the grid: the `1/(2 pi i)`-normalized contour
/// integral, up to spectral-accuracy error.
pub fn integrate(f: impl Fn(Complex64) -> Complex64, grid: &QuadratureGrid) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for (z, w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(*z);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::QuadratureFailure("integrand"));
        }
        total += v * w;
    }
    Ok(total)
}
