//! Oscillating-gradient pipe flow.
//!
//! The axial profile is the real part of
//! `p_o / (i N) * (1 - J0(k r) / J0(k R)) * e^(i N t)` with `k = i^(3/2) sqrt(N / nu)`.
//! Writing `q = (k / 2)^2 = -i N / (4 nu)` and expanding `J0` in powers of `q r^2`,
//! the bracket divided by `i N` becomes
//! `(1 / (4 nu J0(kR))) * sum_{m >= 1} (-q)^(m-1) (R^(2m) - r^(2m)) / (m!)^2`,
//! which stays well-conditioned as `N -> 0` and reduces to Poiseuille there.
//! Supported range: Womersley number `R sqrt(N / nu) <= 20`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const SERIES_RTOL: f64 = 1e-14;
const MAX_TERMS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Womersley {
    pub p_o: f64,
    pub n: f64,
    pub nu: f64,
    pub radius: f64,
    /// `p_o / (4 nu J0(k R))`
    prefactor: Complex64,
    /// `-q`
    minus_q: Complex64,
}

impl Womersley {
    pub fn new(p_o: f64, n: f64, nu: f64, radius: f64) -> Result<Self> {
        if !(nu > 0.0) || !(radius > 0.0) || !(n >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Womersley needs nu > 0, radius > 0, N >= 0 (got nu={nu}, radius={radius}, N={n})"
            )));
        }
        let minus_q = Complex64::new(0.0, n / (4.0 * nu));
        let j0_wall = bessel_j0_series(minus_q * (radius * radius));
        let prefactor = Complex64::new(p_o / (4.0 * nu), 0.0) / j0_wall;
        let w = Self { p_o, n, nu, radius, prefactor, minus_q };
        if w.womersley_number() > 20.0 {
            return Err(Error::InvalidParameter(format!(
                "Womersley number {} above supported range (<= 20)",
                w.womersley_number()
            )));
        }
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.p_o, self.n, self.nu, self.radius).map(|_| ())
    }

    /// `alpha = R sqrt(N / nu)`.
    pub fn womersley_number(&self) -> f64 {
        self.radius * (self.n / self.nu).sqrt()
    }

    /// Complex radial shape `S(r)` (and its `r`-derivatives) with
    /// `v_z = Re[prefactor * S(r) * e^(i N t)]`.
    fn shape(&self, r: f64, dr: u32) -> Complex64 {
        let r2 = self.radius * self.radius;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut coef = Complex64::new(1.0, 0.0); // (-q)^(m-1) / (m!)^2
        let mut wall_pow = 1.0; // R^(2m)
        for m in 1..MAX_TERMS {
            let mf = m as f64;
            coef /= mf * mf;
            wall_pow *= r2;
            let p = 2 * m as i32;
            // d^dr/dr^dr (R^(2m) - r^(2m))
            let term_r = if dr == 0 {
                wall_pow - r.powi(p)
            } else {
                let mut fall = 1.0;
                for j in 0..dr as i32 {
                    fall *= (p - j) as f64;
                }
                if fall == 0.0 {
                    0.0
                } else {
                    -fall * r.powi(p - dr as i32)
                }
            };
            let term = coef * term_r;
            sum += term;
            if m > 3 && term.norm() <= SERIES_RTOL * sum.norm().max(f64::MIN_POSITIVE) {
                break;
            }
            coef *= self.minus_q;
        }
        sum
    }

    /// `d^dr/dr^dr d^dt/dt^dt v_z(r, t)`.
    pub fn axial(&self, r: f64, t: f64, dr: u32, dt: u32) -> f64 {
        let phase = Complex64::new(0.0, self.n * t).exp();
        let mut time_factor = Complex64::new(1.0, 0.0);
        for _ in 0..dt {
            time_factor *= Complex64::new(0.0, self.n);
        }
        (self.prefactor * self.shape(r, dr) * phase * time_factor).re
    }
}

/// `J0(z)` where `z^2 / 4 = -x`, i.e. `sum_m x^m / (m!)^2`.
fn bessel_j0_series(x: Complex64) -> Complex64 {
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for m in 1..MAX_TERMS {
        let mf = m as f64;
        term = term * x / (mf * mf);
        sum += term;
        if term.norm() <= SERIES_RTOL * sum.norm() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_series_matches_real_bessel_values() {
        // J0(1) = 0.7651976865579666, J0(2.5) = -0.048383776468197996
        for (z, want) in [(1.0f64, 0.7651976865579666), (2.5, -0.048_383_776_468_198)] {
            let got = bessel_j0_series(Complex64::new(-z * z / 4.0, 0.0));
            assert!((got.re - want).abs() < 1e-14 && got.im == 0.0);
        }
    }

    #[test]
    fn no_slip_at_wall() {
        let w = Womersley::new(1.0, 4.0, 1.0, 1.0).unwrap();
        for t in [0.0, 0.3, 1.7] {
            assert!(w.axial(1.0, t, 0, 0).abs() < 1e-14);
        }
    }

    #[test]
    fn small_frequency_limit_is_poiseuille() {
        let w = Womersley::new(2.0, 1e-6, 0.5, 1.0).unwrap();
        for r in [0.0, 0.3, 0.8] {
            let poiseuille = 2.0 / (4.0 * 0.5) * (1.0 - r * r);
            let v = w.axial(r, 0.0, 0, 0);
            assert!((v - poiseuille).abs() <= 1e-4 * poiseuille, "{v} vs {poiseuille}");
        }
    }

    #[test]
    fn momentum_balance_holds() {
        let w = Womersley::new(1.0, 4.0, 1.0, 1.0).unwrap();
        for &(r, t) in &[(0.2, 0.1), (0.5, 0.9), (0.85, 2.3)] {
            let lhs = w.axial(r, t, 0, 1) - w.nu * (w.axial(r, t, 2, 0) + w.axial(r, t, 1, 0) / r);
            assert!((lhs - (4.0f64 * t).cos()).abs() < 1e-10, "r={r} t={t}: {lhs}");
        }
    }

    #[test]
    fn rejects_out_of_range_frequency() {
        assert!(Womersley::new(1.0, 500.0, 1.0, 1.0).is_err());
        assert!(Womersley::new(1.0, 1.0, 0.0, 1.0).is_err());
    }
}
