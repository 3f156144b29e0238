//! Truncated Taylor polynomials used for curve and stream-tube derivative tables.

use std::ops::{Add, Mul, Neg, Sub};

use crate::field::{Component, FieldJet};

/// Univariate polynomial truncated after degree 3.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Series(pub [f64; 4]);

impl Series {
    pub const ZERO: Series = Series([0.0; 4]);

    pub fn constant(c: f64) -> Self {
        Series([c, 0.0, 0.0, 0.0])
    }

    /// The identity `x`.
    pub fn var() -> Self {
        Series([0.0, 1.0, 0.0, 0.0])
    }

    pub fn scale(self, k: f64) -> Self {
        Series(self.0.map(|c| c * k))
    }

    pub fn recip(self) -> Self {
        let a = self.0;
        let b0 = 1.0 / a[0];
        let b1 = -a[1] * b0 * b0;
        let b2 = -(a[1] * b1 + a[2] * b0) * b0;
        let b3 = -(a[1] * b2 + a[2] * b1 + a[3] * b0) * b0;
        Series([b0, b1, b2, b3])
    }

    /// Antiderivative with zero constant term; the degree-3 input coefficient is dropped.
    pub fn integral(self) -> Self {
        let a = self.0;
        Series([0.0, a[0], a[1] / 2.0, a[2] / 3.0])
    }

    /// `[f, f', f'', f''']` at the expansion point.
    pub fn derivs(self) -> [f64; 4] {
        let a = self.0;
        [a[0], a[1], 2.0 * a[2], 6.0 * a[3]]
    }

    pub fn from_derivs(d: [f64; 4]) -> Self {
        Series([d[0], d[1], d[2] / 2.0, d[3] / 6.0])
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, o: Series) -> Series {
        Series([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, o: Series) -> Series {
        self + (-o)
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(-1.0)
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, o: Series) -> Series {
        let (a, b) = (self.0, o.0);
        Series([
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
            a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0],
        ])
    }
}

impl Mul<f64> for Series {
    type Output = Series;
    fn mul(self, k: f64) -> Series {
        self.scale(k)
    }
}

/// Composes one jet component with increments `(dr, dz, dt)` that vanish at the
/// expansion point. Coefficients up to degree 2 are exact.
pub fn compose_jet(j: &FieldJet, c: Component, dr: Series, dz: Series, dt: Series) -> Series {
    let g = |v: &crate::field::CylVec| v.get(c);
    Series::constant(g(&j.value))
        + dr * g(&j.d_r)
        + dz * g(&j.d_z)
        + dt * g(&j.d_t)
        + dr * dr * (0.5 * g(&j.d_rr))
        + dr * dz * g(&j.d_rz)
        + dz * dz * (0.5 * g(&j.d_zz))
        + dr * dt * g(&j.d_rt)
        + dz * dt * g(&j.d_zt)
        + dt * dt * (0.5 * g(&j.d_tt))
}

/// Number of monomials of total degree at most 3 in three variables.
pub const POLY3_LEN: usize = 20;

/// Trivariate polynomial truncated after total degree 3.
///
/// Variables are ordered `(x, y, w)`; coefficient `[i][j][k]` multiplies `x^i y^j w^k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Poly3 {
    c: [[[f64; 4]; 4]; 4],
}

impl Poly3 {
    pub const ZERO: Poly3 = Poly3 { c: [[[0.0; 4]; 4]; 4] };

    pub fn constant(v: f64) -> Self {
        let mut p = Self::ZERO;
        p.c[0][0][0] = v;
        p
    }

    /// The coordinate polynomial for variable `axis` (0, 1 or 2).
    pub fn var(axis: usize) -> Self {
        let mut p = Self::ZERO;
        let mut e = [0; 3];
        e[axis] = 1;
        p.c[e[0]][e[1]][e[2]] = 1.0;
        p
    }

    pub fn exponents() -> impl Iterator<Item = (usize, usize, usize)> {
        (0..4).flat_map(|i| (0..4 - i).flat_map(move |j| (0..4 - i - j).map(move |k| (i, j, k))))
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize) -> f64 {
        if i + j + k > 3 {
            0.0
        } else {
            self.c[i][j][k]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, k: usize, v: f64) {
        assert!(i + j + k <= 3, "degree above 3");
        self.c[i][j][k] = v;
    }

    /// Partial derivative `d^i_x d^j_y d^k_w` at the origin.
    pub fn deriv(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeff(i, j, k) * fact(i) * fact(j) * fact(k)
    }

    pub fn set_deriv(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.set_coeff(i, j, k, v / (fact(i) * fact(j) * fact(k)));
    }

    pub fn scale(mut self, s: f64) -> Self {
        for (i, j, k) in Self::exponents() {
            self.c[i][j][k] *= s;
        }
        self
    }

    /// Substitutes `x -> q`, where `q` has no constant term.
    pub fn compose_x(&self, q: &Poly3) -> Poly3 {
        debug_assert!(q.c[0][0][0] == 0.0);
        let mut pow = [Poly3::constant(1.0), *q, Poly3::ZERO, Poly3::ZERO];
        pow[2] = *q * *q;
        pow[3] = pow[2] * *q;
        let mut out = Poly3::ZERO;
        for (i, j, k) in Self::exponents() {
            let a = self.c[i][j][k];
            if a != 0.0 {
                out = out + pow[i] * (Poly3::monomial(0, j, k) * a);
            }
        }
        out
    }

    fn monomial(i: usize, j: usize, k: usize) -> Self {
        let mut p = Self::ZERO;
        p.c[i][j][k] = 1.0;
        p
    }

    /// Given `p(x, y, w)` with `p(0,0,0) = 0` and `d_x p != 0`, returns `q(s, y, w)`
    /// solving `p(q, y, w) = s` through degree 3.
    pub fn invert_x(&self) -> Poly3 {
        let p1 = self.c[1][0][0];
        let s = Poly3::var(0);
        let mut nonlinear = *self;
        nonlinear.c[1][0][0] = 0.0;
        let mut q = s * (1.0 / p1);
        for _ in 0..3 {
            q = (s - nonlinear.compose_x(&q)) * (1.0 / p1);
        }
        q
    }
}

fn fact(n: usize) -> f64 {
    [1.0, 1.0, 2.0, 6.0][n]
}

impl Add for Poly3 {
    type Output = Poly3;
    fn add(mut self, o: Poly3) -> Poly3 {
        for (i, j, k) in Self::exponents() {
            self.c[i][j][k] += o.c[i][j][k];
        }
        self
    }
}

impl Sub for Poly3 {
    type Output = Poly3;
    fn sub(self, o: Poly3) -> Poly3 {
        self + o.scale(-1.0)
    }
}

impl Mul<f64> for Poly3 {
    type Output = Poly3;
    fn mul(self, s: f64) -> Poly3 {
        self.scale(s)
    }
}

impl Mul for Poly3 {
    type Output = Poly3;
    fn mul(self, o: Poly3) -> Poly3 {
        let mut out = Poly3::ZERO;
        for (i, j, k) in Self::exponents() {
            let a = self.c[i][j][k];
            if a == 0.0 {
                continue;
            }
            for (p, q, r) in Self::exponents() {
                if i + j + k + p + q + r <= 3 {
                    out.c[i + p][j + q][k + r] += a * o.c[p][q][r];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_reciprocal_and_integral() {
        // 1 / (1 - x) = 1 + x + x^2 + x^3
        let s = Series([1.0, -1.0, 0.0, 0.0]).recip();
        assert_eq!(s, Series([1.0, 1.0, 1.0, 1.0]));
        let e = Series([1.0, 1.0, 0.5, 1.0 / 6.0]);
        assert_eq!(e.integral(), Series([0.0, 1.0, 0.5, 1.0 / 6.0]));
        assert_eq!(Series::from_derivs([1.0, 2.0, 6.0, 24.0]), Series([1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn poly3_has_twenty_monomials() {
        assert_eq!(Poly3::exponents().count(), POLY3_LEN);
    }

    #[test]
    fn poly3_product_truncates() {
        let x = Poly3::var(0);
        let y = Poly3::var(1);
        let p = (x + y) * (x + y) * (x + y) * (x + y);
        assert_eq!(p, Poly3::ZERO);
        let q = (x + y) * (x - y);
        assert_eq!(q.coeff(2, 0, 0), 1.0);
        assert_eq!(q.coeff(0, 2, 0), -1.0);
        assert_eq!(q.coeff(1, 1, 0), 0.0);
    }

    #[test]
    fn inversion_of_exponential_map() {
        // p(x, y) = (e^x - 1)(1 + y); inverse in x is ln(1 + s/(1+y))
        let x = Poly3::var(0);
        let y = Poly3::var(1);
        let ex = x + x * x * 0.5 + x * x * x * (1.0 / 6.0);
        let p = ex * (Poly3::constant(1.0) + y);
        let q = p.invert_x();
        // d_s q = 1 at origin, d_s^2 q = -1, d_s^3 q = 2, d_s d_y q = -1
        assert!((q.deriv(1, 0, 0) - 1.0).abs() < 1e-14);
        assert!((q.deriv(2, 0, 0) + 1.0).abs() < 1e-14);
        assert!((q.deriv(3, 0, 0) - 2.0).abs() < 1e-14);
        assert!((q.deriv(1, 1, 0) + 1.0).abs() < 1e-14);
        assert!((q.deriv(1, 2, 0) - 2.0).abs() < 1e-14);
        assert!((q.deriv(2, 1, 0) - 2.0).abs() < 1e-14);
        let back = p.compose_x(&q);
        for (i, j, k) in Poly3::exponents() {
            let want = if (i, j, k) == (1, 0, 0) { 1.0 } else { 0.0 };
            assert!((back.coeff(i, j, k) - want).abs() < 1e-14, "{i}{j}{k}");
        }
    }
}
