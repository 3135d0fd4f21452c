//! Nystrom discretization of the integral operators on the circle `C_R`
//! and Fredholm determinants `det(I - lambda K)` evaluated from the
//! discretized operator's spectrum (with an LU fallback).

use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;

use crate::contours::{circle_grid, QuadratureGrid};
use crate::linalg;
use crate::model::AsepParams;
use crate::{Error, Result};

/// Radius of the operator contour `C_R`.
///
/// `R` must enclose the fixed singularities (1, tau, `1 - rho(1-tau)`, the
/// tiny `z_j` circles) and keep the kernel's xi'-pole locus
/// `xi' = (xi - p)/(q xi)` strictly inside. The locus has maximal modulus
/// `1/q + p/(q R)`, giving the quadratic bound `R* = (1 + sqrt(1+4pq))/(2q)`;
/// a 50% margin over it keeps the pole at a healthy distance without letting
/// `R^x` blow up matrix entries at the site offsets the evaluators use.
pub fn c_r_radius(params: &AsepParams) -> f64 {
    let r_star = (1.0 + (1.0 + 4.0 * params.p * params.q).sqrt()) / (2.0 * params.q);
    (1.5 * r_star).max(2.0)
}

/// Trapezoid grid on `C_R` with `n` nodes.
pub fn c_r_grid(params: &AsepParams, n: usize) -> QuadratureGrid {
    circle_grid(Complex64::new(0.0, 0.0), c_r_radius(params), n)
}

/// Kernel `K_x(xi, xi') = xi^x e^{eps(xi) t} / (p + q xi xi' - xi)`.
pub fn kernel_kx(
    x: i64,
    t: f64,
    params: AsepParams,
) -> impl Fn(Complex64, Complex64) -> Complex64 {
    move |xi, xip| {
        let eps = params.p / xi + params.q * xi - 1.0;
        xi.powi(x as i32) * (eps * t).exp() / (params.p + params.q * xi * xip - xi)
    }
}

/// Kernel `K_{x,rho} = q K_x(xi,xi') rho (xi - tau) / (xi - 1 + rho(1 - tau))`.
pub fn kernel_kx_rho(
    x: i64,
    t: f64,
    params: AsepParams,
) -> impl Fn(Complex64, Complex64) -> Complex64 {
    let base = kernel_kx(x, t, params);
    move |xi, xip| {
        base(xi, xip) * params.q * params.rho * (xi - params.tau)
            / (xi - 1.0 + params.rho * (1.0 - params.tau))
    }
}

/// Kernel `K_{L,x,rho}(xi, xi'; z) = K_{x,rho}(xi,xi') prod_j U(z_j, xi)`.
pub fn kernel_klx_rho(
    x: i64,
    t: f64,
    z: Vec<Complex64>,
    params: AsepParams,
) -> impl Fn(Complex64, Complex64) -> Complex64 {
    let base = kernel_kx_rho(x, t, params);
    move |xi, xip| {
        let mut u = Complex64::new(1.0, 0.0);
        for zj in &z {
            u *= (params.p + params.q * zj * xi - zj) / (xi - zj);
        }
        base(xi, xip) * u
    }
}

/// Reject grids whose nodes come within `tol` of any of the given poles.
pub fn check_grid_clear(
    grid: &QuadratureGrid,
    poles: &[Complex64],
    tol: f64,
    what: &'static str,
) -> Result<()> {
    for node in &grid.nodes {
        for pole in poles {
            if (node - pole).norm() < tol {
                return Err(Error::GridHitsPole { what, tol });
            }
        }
    }
    Ok(())
}

/// Weighted Nystrom matrix of `K_{x,rho}` on `grid`:
/// entry `(i,j) = K_{x,rho}(xi_i, xi_j) * w_j`, with pole-proximity checks.
pub fn kx_rho_matrix(
    x: i64,
    t: f64,
    params: &AsepParams,
    grid: &QuadratureGrid,
) -> Result<Array2<Complex64>> {
    let n = grid.len();
    let rho_pole = Complex64::new(1.0 - params.rho * (1.0 - params.tau), 0.0);
    check_grid_clear(grid, &[rho_pole], 1e-8, "xi = 1 - rho(1-tau)")?;
    let kernel = kernel_kx_rho(x, t, *params);
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        let xi = grid.nodes[i];
        for j in 0..n {
            let den = params.p + params.q * xi * grid.nodes[j] - xi;
            if den.norm() < 1e-8 {
                return Err(Error::GridHitsPole {
                    what: "p + q xi xi' - xi",
                    tol: 1e-8,
                });
            }
            let v = kernel(xi, grid.nodes[j]) * grid.weights[j];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::QuadratureFailure("K_{x,rho} matrix entry"));
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// A Nystrom-discretized integral operator with its (lazily computed,
/// cached) eigenvalue spectrum.
pub struct DiscretizedKernel {
    grid: QuadratureGrid,
    matrix: Array2<Complex64>,
    spectrum: OnceLock<std::result::Result<Vec<Complex64>, String>>,
}

impl DiscretizedKernel {
    /// Discretize `kernel` on `grid`: matrix entry `(i,j) = kernel(node_i, node_j) * w_j`.
    pub fn discretize(
        kernel: impl Fn(Complex64, Complex64) -> Complex64,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        let n = grid.len();
        let mut matrix = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let v = kernel(grid.nodes[i], grid.nodes[j]) * grid.weights[j];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::QuadratureFailure("kernel matrix entry"));
                }
                matrix[(i, j)] = v;
            }
        }
        Ok(Self {
            grid: grid.clone(),
            matrix,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_matrix(grid: QuadratureGrid, matrix: Array2<Complex64>) -> Self {
        Self {
            grid,
            matrix,
            spectrum: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues of the weighted matrix; computed once, shared afterwards.
    pub fn spectrum(&self) -> Result<&[Complex64]> {
        let cached = self
            .spectrum
            .get_or_init(|| linalg::eigenvalues(&self.matrix).map_err(|e| e.to_string()));
        match cached {
            Ok(v) => Ok(v),
            Err(e) => Err(Error::EigenFailure(e.clone())),
        }
    }

    /// `det(I - lambda K)` from the cached spectrum, `prod_i (1 - lambda nu_i)`.
    /// Falls back to the LU route if the eigensolver failed.
    pub fn fredholm_det(&self, lambda: Complex64) -> Complex64 {
        match self.spectrum() {
            Ok(spec) => spec.iter().map(|nu| 1.0 - lambda * nu).product(),
            Err(_) => self.fredholm_det_lu(lambda),
        }
    }

    /// `det(I - lambda K)` by LU factorization of `I - lambda * matrix`.
    pub fn fredholm_det_lu(&self, lambda: Complex64) -> Complex64 {
        let n = self.dim();
        let flat: Vec<Complex64> = self.matrix.iter().copied().collect();
        let mut scratch = Vec::new();
        linalg::det_id_minus_scaled(lambda, &flat, n, &mut scratch)
    }
}

/// Low-rank factorization `K ~ U V^H` of a weighted kernel matrix, truncated
/// at relative singular value `rel_cut`. `det(I - c D K) = det(I_r - c V^H D U)`
/// turns the per-contour-point determinants of the exact evaluator into
/// rank-sized problems.
pub struct CompressedKernel {
    u: Vec<Complex64>,  // n x r, row-major
    vh: Vec<Complex64>, // r x n, row-major
    n: usize,
    rank: usize,
}

impl CompressedKernel {
    pub fn compress(matrix: &Array2<Complex64>, rel_cut: f64) -> Result<Self> {
        let n = matrix.nrows();
        let (u, s, vh) = linalg::svd(matrix)?;
        let smax = s.first().copied().unwrap_or(0.0);
        let rank = s.iter().take_while(|&&sv| sv > rel_cut * smax).count().max(1);
        // fold the singular values into U
        let mut uf = vec![Complex64::new(0.0, 0.0); n * rank];
        for i in 0..n {
            for k in 0..rank {
                uf[i * rank + k] = u[(i, k)] * s[k];
            }
        }
        let mut vf = vec![Complex64::new(0.0, 0.0); rank * n];
        for k in 0..rank {
            for j in 0..n {
                vf[k * n + j] = vh[(k, j)];
            }
        }
        Ok(Self {
            u: uf,
            vh: vf,
            n,
            rank,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `W = V^H diag(d) U`, written row-major into `out` (length `rank^2`).
    pub fn core_with_row_scale(&self, d: &[Complex64], out: &mut [Complex64]) {
        let (n, r) = (self.n, self.rank);
        debug_assert_eq!(d.len(), n);
        debug_assert_eq!(out.len(), r * r);
        out.fill(Complex64::new(0.0, 0.0));
        for i in 0..n {
            let di = d[i];
            if di.norm_sqr() == 0.0 {
                continue;
            }
            let urow = &self.u[i * r..(i + 1) * r];
            for a in 0..r {
                let f = self.vh[a * n + i] * di;
                let orow = &mut out[a * r..(a + 1) * r];
                for b in 0..r {
                    orow[b] += f * urow[b];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::integrate;
    use num_complex::Complex64 as C;

    const ORIGIN: C = C::new(0.0, 0.0);

    fn params() -> AsepParams {
        AsepParams::new(0.2, 0.8).unwrap()
    }

    #[test]
    fn kernel_algebraic_identities() {
        let pr = params();
        let kx = kernel_kx(3, 1.5, pr);
        let xi = C::new(1.1, 0.4);
        let xip = C::new(-0.7, 0.9);
        // K_x * (p + q xi xi' - xi) = xi^x e^{eps t}
        let lhs = kx(xi, xip) * (pr.p + pr.q * xi * xip - xi);
        let eps = pr.p / xi + pr.q * xi - 1.0;
        let rhs = xi.powi(3) * (eps * 1.5).exp();
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());

        // t = 0, x = 0 reduces to 1/(p + q xi xi' - xi)
        let k0 = kernel_kx(0, 0.0, pr);
        let v = k0(xi, xip) * (pr.p + pr.q * xi * xip - xi);
        assert!((v - C::new(1.0, 0.0)).norm() < 1e-14);

        // at xi = 1 the numerator is 1 for any t since eps(1) = 0
        let kt = kernel_kx(5, 7.3, pr);
        let one = C::new(1.0, 0.0);
        let v = kt(one, xip) * (pr.p + pr.q * one * xip - one);
        assert!((v - one).norm() < 1e-13);
    }

    #[test]
    fn rho_factor_matches_display() {
        let pr = params();
        let xi = C::new(0.9, 0.5);
        let xip = C::new(-1.2, 0.3);
        let ratio = kernel_kx_rho(2, 0.7, pr)(xi, xip) / kernel_kx(2, 0.7, pr)(xi, xip);
        let expect = pr.q * pr.rho * (xi - pr.tau) / (xi - 1.0 + pr.rho * (1.0 - pr.tau));
        assert!((ratio - expect).norm() < 1e-13 * expect.norm());

        // rho = 1: the denominator becomes xi - tau, so the factor is q exactly
        let p1 = AsepParams::new(0.2, 1.0).unwrap();
        let ratio = kernel_kx_rho(2, 0.7, p1)(xi, xip) / kernel_kx(2, 0.7, p1)(xi, xip);
        assert!((ratio - C::new(p1.q, 0.0)).norm() < 1e-13);

        // kernel vanishes at xi = tau
        let v = kernel_kx_rho(2, 0.7, pr)(C::new(pr.tau, 0.0), xip);
        assert!(v.norm() < 1e-13);
    }

    #[test]
    fn klx_rho_product_structure() {
        let pr = params();
        let xi = C::new(1.3, -0.2);
        let xip = C::new(0.4, 1.0);
        // empty z list: identical to K_{x,rho}
        let k0 = kernel_klx_rho(4, 0.3, vec![], pr)(xi, xip);
        let base = kernel_kx_rho(4, 0.3, pr)(xi, xip);
        assert!((k0 - base).norm() < 1e-15 * base.norm());

        // L=1: kernel vanishes at the root of the U numerator
        let z1 = C::new(0.05, 0.02);
        let root = (z1 - pr.p) / (pr.q * z1);
        let v = kernel_klx_rho(4, 0.3, vec![z1], pr)(root, xip);
        assert!(v.norm() < 1e-10);

        // product over permuted z equals product over original order
        let z = vec![C::new(0.03, 0.01), C::new(0.26, -0.02), C::new(0.01, 0.0)];
        let mut zrev = z.clone();
        zrev.reverse();
        let a = kernel_klx_rho(4, 0.3, z, pr)(xi, xip);
        let b = kernel_klx_rho(4, 0.3, zrev, pr)(xi, xip);
        assert!((a - b).norm() < 1e-14 * a.norm());
    }

    #[test]
    fn zero_kernel_determinant_is_one() {
        let grid = circle_grid(ORIGIN, 1.0, 16);
        let dk = DiscretizedKernel::discretize(|_, _| C::new(0.0, 0.0), &grid).unwrap();
        for &l in &[0.0, 1.0, -3.5] {
            assert!((dk.fredholm_det(C::new(l, 0.0)) - C::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn rank_one_determinant() {
        // kernel a(xi) b(xi') with a = 1, b = 1/xi' on the unit circle:
        // det(I - lambda K) = 1 - lambda * (contour integral of 1/xi) = 1 - lambda
        let grid = circle_grid(ORIGIN, 1.0, 32);
        let dk = DiscretizedKernel::discretize(|_, xip| 1.0 / xip, &grid).unwrap();
        let lam = C::new(0.37, -1.2);
        let det = dk.fredholm_det(lam);
        assert!((det - (1.0 - lam)).norm() < 1e-12);
        // sanity: the trace integral itself is 1
        let tr = integrate(|z| 1.0 / z, &grid).unwrap();
        assert!((tr - C::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn spectrum_and_lu_routes_agree() {
        let pr = params();
        let grid = c_r_grid(&pr, 32);
        let m = kx_rho_matrix(2, 1.0, &pr, &grid).unwrap();
        let dk = DiscretizedKernel::from_matrix(grid, m);
        for &(re, im) in &[(0.9, 0.0), (-2.0, 1.5), (4.0, -4.0), (16.0, 2.0)] {
            let lam = C::new(re, im);
            let a = dk.fredholm_det(lam);
            let b = dk.fredholm_det_lu(lam);
            assert!(
                (a - b).norm() <= 1e-9 * a.norm().max(1.0),
                "spectrum route {a} vs LU route {b} at lambda {lam}"
            );
        }
    }

    #[test]
    fn determinant_is_polynomial_of_degree_n() {
        // evaluate at n+1 points, interpolate, test at fresh points; det(0) = 1
        let pr = params();
        let grid = c_r_grid(&pr, 8);
        let m = kx_rho_matrix(1, 0.4, &pr, &grid).unwrap();
        let dk = DiscretizedKernel::from_matrix(grid, m);
        let n = dk.dim();
        assert!((dk.fredholm_det(ORIGIN) - C::new(1.0, 0.0)).norm() < 1e-12);

        let sample: Vec<C> = (0..=n)
            .map(|k| C::from_polar(2.0, 2.0 * std::f64::consts::PI * k as f64 / (n + 1) as f64))
            .collect();
        let values: Vec<C> = sample.iter().map(|&l| dk.fredholm_det(l)).collect();
        // Newton divided differences
        let mut coef = values.clone();
        for j in 1..=n {
            for i in (j..=n).rev() {
                coef[i] = (coef[i] - coef[i - 1]) / (sample[i] - sample[i - j]);
            }
        }
        let eval = |x: C| {
            let mut acc = coef[n];
            for i in (0..n).rev() {
                acc = acc * (x - sample[i]) + coef[i];
            }
            acc
        };
        for &(re, im) in &[(0.3, 0.8), (-1.1, 0.2), (1.7, -1.7)] {
            let x = C::new(re, im);
            let direct = dk.fredholm_det(x);
            let interp = eval(x);
            assert!(
                (direct - interp).norm() <= 1e-8 * direct.norm().max(1.0),
                "degree-{n} interpolation mismatch at {x}: {direct} vs {interp}"
            );
        }
    }

    #[test]
    fn radius_robustness() {
        // det(I - lambda K_{x,rho}) on C_R and C_{1.2 R} agree (analyticity in R)
        let pr = params();
        let lam = C::new(3.0, 1.0);
        let r = c_r_radius(&pr);
        let mut dets = Vec::new();
        for radius in [r, 1.2 * r] {
            let grid = circle_grid(ORIGIN, radius, 64);
            let m = kx_rho_matrix(3, 1.0, &pr, &grid).unwrap();
            let dk = DiscretizedKernel::from_matrix(grid, m);
            dets.push(dk.fredholm_det(lam));
        }
        assert!(
            (dets[0] - dets[1]).norm() <= 1e-8 * dets[0].norm().max(1.0),
            "radius robustness violated: {} vs {}",
            dets[0],
            dets[1]
        );
    }

    #[test]
    fn doubling_grid_stabilizes_determinant() {
        let pr = params();
        let lam = C::new(2.0, -1.0);
        let mut vals = Vec::new();
        for n in [64, 128] {
            let grid = c_r_grid(&pr, n);
            let m = kx_rho_matrix(4, 1.0, &pr, &grid).unwrap();
            let dk = DiscretizedKernel::from_matrix(grid, m);
            vals.push(dk.fredholm_det(lam));
        }
        assert!((vals[0] - vals[1]).norm() < 1e-8 * vals[0].norm().max(1.0));
    }

    #[test]
    fn compression_reproduces_determinants() {
        let pr = params();
        let grid = c_r_grid(&pr, 32);
        let m = kx_rho_matrix(2, 0.5, &pr, &grid).unwrap();
        let n = grid.len();
        let comp = CompressedKernel::compress(&m, 1e-15).unwrap();
        assert!(comp.rank() <= n);

        // det(I - c D K) via full LU vs compressed core
        let d: Vec<C> = (0..n)
            .map(|i| C::new(1.0 + 0.1 * (i as f64).sin(), 0.05 * (i as f64).cos()))
            .collect();
        let c = C::new(1.7, 0.4);
        let mut full = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                full[i * n + j] = d[i] * m[(i, j)];
            }
        }
        let mut scratch = Vec::new();
        let det_full = linalg::det_id_minus_scaled(c, &full, n, &mut scratch);
        let r = comp.rank();
        let mut core = vec![C::new(0.0, 0.0); r * r];
        comp.core_with_row_scale(&d, &mut core);
        let det_comp = linalg::det_id_minus_scaled(c, &core, r, &mut scratch);
        assert!(
            (det_full - det_comp).norm() <= 1e-10 * det_full.norm().max(1.0),
            "full {det_full} vs compressed {det_comp}"
        );
    }
}
