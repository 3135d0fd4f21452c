//! Thin linear-algebra layer: hand-rolled LU determinants for the hot loops
//! (no allocation beyond one scratch buffer, row-major, partial pivoting)
//! and LAPACK-backed eigenvalues / SVD via `ndarray-linalg` for the rest.

use ndarray::Array2;
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex64;

use crate::{Error, Result};

/// Neumaier compensated accumulator for complex sums whose terms cancel by
/// many orders of magnitude.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: Complex64,
    comp: Complex64,
}

impl NeumaierSum {
    fn add_f64(s: &mut f64, c: &mut f64, v: f64) {
        let t = *s + v;
        if s.abs() >= v.abs() {
            *c += (*s - t) + v;
        } else {
            *c += (v - t) + *s;
        }
        *s = t;
    }

    pub fn add(&mut self, v: Complex64) {
        Self::add_f64(&mut self.sum.re, &mut self.comp.re, v.re);
        Self::add_f64(&mut self.sum.im, &mut self.comp.im, v.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

/// Determinant of a complex matrix given as a row-major slice of dimension
/// `n * n`. The buffer is destroyed. Partial pivoting.
pub(crate) fn det_in_place(a: &mut [Complex64], n: usize) -> Complex64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let mut pivot = k;
        let mut best = a[k * n + k].norm_sqr();
        for r in k + 1..n {
            let v = a[r * n + k].norm_sqr();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != k {
            for c in 0..n {
                a.swap(k * n + c, pivot * n + c);
            }
            det = -det;
        }
        let pv = a[k * n + k];
        det *= pv;
        let inv = 1.0 / pv;
        for r in k + 1..n {
            let factor = a[r * n + k] * inv;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for c in k + 1..n {
                let v = a[k * n + c];
                a[r * n + c] -= factor * v;
            }
        }
    }
    det
}

/// `det(I - scale * m)` for a row-major `n x n` slice, using `scratch` as the
/// working buffer (resized as needed).
pub(crate) fn det_id_minus_scaled(
    scale: Complex64,
    m: &[Complex64],
    n: usize,
    scratch: &mut Vec<Complex64>,
) -> Complex64 {
    scratch.clear();
    scratch.extend_from_slice(m);
    for v in scratch.iter_mut() {
        *v = -scale * *v;
    }
    for i in 0..n {
        scratch[i * n + i] += 1.0;
    }
    det_in_place(scratch, n)
}

/// Determinant of `I - M` for a real row-major matrix (used by the Airy
/// kernel determinants, which are real).
pub(crate) fn det_id_minus_real(m: &[f64], n: usize) -> f64 {
    let mut a: Vec<f64> = m.iter().map(|v| -v).collect();
    for i in 0..n {
        a[i * n + i] += 1.0;
    }
    let mut det = 1.0;
    for k in 0..n {
        let mut pivot = k;
        let mut best = a[k * n + k].abs();
        for r in k + 1..n {
            let v = a[r * n + k].abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != k {
            for c in 0..n {
                a.swap(k * n + c, pivot * n + c);
            }
            det = -det;
        }
        let pv = a[k * n + k];
        det *= pv;
        for r in k + 1..n {
            let factor = a[r * n + k] / pv;
            if factor == 0.0 {
                continue;
            }
            for c in k + 1..n {
                a[r * n + c] -= factor * a[k * n + c];
            }
        }
    }
    det
}

/// Eigenvalues of a square complex matrix (LAPACK zgeev).
pub(crate) fn eigenvalues(m: &Array2<Complex64>) -> Result<Vec<Complex64>> {
    let (eigs, _) = m
        .eig()
        .map_err(|e| Error::EigenFailure(e.to_string()))?;
    Ok(eigs.to_vec())
}

/// Thin SVD of a complex matrix (LAPACK zgesvd): returns `(u, s, v_h)`.
pub(crate) fn svd(m: &Array2<Complex64>) -> Result<(Array2<Complex64>, Vec<f64>, Array2<Complex64>)> {
    let (u, s, vh) = m
        .svd(true, true)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    Ok((
        u.ok_or_else(|| Error::Linalg("missing U factor".into()))?,
        s.to_vec(),
        vh.ok_or_else(|| Error::Linalg("missing V^H factor".into()))?,
    ))
}
