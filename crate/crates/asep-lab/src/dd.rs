//! Minimal double-double arithmetic (error-free transforms with FMA) for
//! the few contour sums whose terms cancel below the f64 product-roundoff
//! floor. Only the operations those sums need.

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let e = a.mul_add(b, -p);
    Dd { hi: p, lo: e }
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let err = b - (s - a);
    Dd { hi: s, lo: err }
}

impl Dd {
    pub fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        quick_two_sum(s.hi, lo)
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        quick_two_sum(p.hi, lo)
    }

    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q0 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from(q0)));
        let q1 = r.hi / other.hi;
        quick_two_sum(q0, q1)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Complex number with double-double components.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub fn from(z: num_complex::Complex64) -> Self {
        CDd {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    pub fn add(self, o: CDd) -> CDd {
        CDd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    pub fn sub(self, o: CDd) -> CDd {
        CDd {
            re: self.re.sub(o.re),
            im: self.im.sub(o.im),
        }
    }

    pub fn mul(self, o: CDd) -> CDd {
        CDd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn div(self, o: CDd) -> CDd {
        let den = o.re.mul(o.re).add(o.im.mul(o.im));
        let num = self.mul(CDd {
            re: o.re,
            im: Dd {
                hi: -o.im.hi,
                lo: -o.im.lo,
            },
        });
        CDd {
            re: num.re.div(den),
            im: num.im.div(den),
        }
    }

    pub fn to_complex(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// `(cos, sin)` of `2 pi / 2^k` as double-double pairs, k = 0..12.
/// k <= 2 are exact; the rest were generated with 40-digit arithmetic.
const ROOTS: [(f64, f64, f64, f64); 13] = [
    (1.0, 0.0, 0.0, 0.0),
    (-1.0, 0.0, 0.0, 0.0),
    (0.0, 0.0, 1.0, 0.0),
    (
        0.7071067811865476,
        -4.833646656726457e-17,
        0.7071067811865476,
        -4.833646656726457e-17,
    ),
    (
        0.9238795325112867,
        1.7645047084336677e-17,
        0.3826834323650898,
        -1.0050772696461588e-17,
    ),
    (
        0.9807852804032304,
        1.8546939997825006e-17,
        0.19509032201612828,
        -7.991079068461731e-18,
    ),
    (
        0.9951847266721969,
        -4.248691367830441e-17,
        0.0980171403295606,
        -1.634582362244256e-18,
    ),
    (
        0.9987954562051724,
        -1.2291693337075465e-17,
        0.049067674327418015,
        -6.79610372051828e-19,
    ),
    (
        0.9996988186962042,
        -2.985148640379975e-17,
        0.024541228522912288,
        -9.186849012577878e-20,
    ),
    (
        0.9999247018391445,
        3.793108251266801e-17,
        0.012271538285719925,
        6.919790764028317e-19,
    ),
    (
        0.9999811752826011,
        3.3568103522895585e-17,
        0.006135884649154475,
        9.054525748247493e-20,
    ),
    (
        0.9999952938095762,
        -1.966806428532219e-17,
        0.003067956762965976,
        1.2690279085455925e-19,
    ),
    (
        0.9999988234517019,
        3.067881716126108e-17,
        0.0015339801862847657,
        -1.0467712971596958e-19,
    ),
];

/// `e^{2 pi i j / n}` in double-double precision, for `n` a power of two
/// up to 4096, via binary decomposition of `j` over the frozen root table.
pub(crate) fn unit_root(j: usize, n: usize) -> CDd {
    debug_assert!(n.is_power_of_two() && n <= 1 << 12);
    let k_n = n.trailing_zeros() as usize;
    let mut result = CDd {
        re: Dd::from(1.0),
        im: Dd::from(0.0),
    };
    let mut jj = j % n;
    let mut bit = 0usize;
    while jj > 0 {
        if jj & 1 == 1 {
            let (ch, cl, sh, sl) = ROOTS[k_n - bit];
            result = result.mul(CDd {
                re: Dd { hi: ch, lo: cl },
                im: Dd { hi: sh, lo: sl },
            });
        }
        jj >>= 1;
        bit += 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_recovers_cancelled_digits() {
        // (1 + 1e-17) - 1 is 0 in f64 but representable as a Dd sum
        let a = Dd::from(1.0).add(Dd::from(1e-17));
        let b = a.sub(Dd::from(1.0));
        assert!((b.to_f64() - 1e-17).abs() < 1e-25);
    }

    #[test]
    fn dd_mult_div_roundtrip() {
        let a = Dd::from(std::f64::consts::PI);
        let b = Dd::from(std::f64::consts::E);
        let c = a.mul(b).div(b);
        assert!((c.to_f64() - std::f64::consts::PI).abs() < 1e-30);
    }

    #[test]
    fn unit_roots_lie_on_the_circle() {
        for &(j, n) in &[(1usize, 64usize), (17, 128), (333, 1024), (63, 64)] {
            let r = unit_root(j, n);
            let norm2 = r.re.mul(r.re).add(r.im.mul(r.im));
            assert!((norm2.to_f64() - 1.0).abs() < 1e-30, "j={j} n={n}");
            let expect = num_complex::Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * j as f64 / n as f64,
            );
            assert!((r.to_complex() - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn complex_dd_matches_f64_at_leading_order() {
        use num_complex::Complex64 as C;
        let x = C::new(0.3, -0.7);
        let y = C::new(-1.2, 0.4);
        let got = CDd::from(x).mul(CDd::from(y)).to_complex();
        assert!((got - x * y).norm() < 1e-16 * (x * y).norm());
        let got = CDd::from(x).div(CDd::from(y)).to_complex();
        assert!((got - x / y).norm() < 1e-15 * (x / y).norm());
    }
}
