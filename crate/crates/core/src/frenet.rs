//! Frenet-Serret frames along axis-length curves.
//!
//! [`frame_explicit`] assembles curvature, torsion and `d_s kappa` from the
//! `z`-derivatives of `R` and `Theta`. [`frame_numeric`] is an independent
//! check that differences the embedded curve `phi(s)` directly.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lagrange::{ArcCurve, AxisLengthCurve, CurveDerivs};

/// Frame, curvature, torsion and arc derivative of curvature at one point.
///
/// `b = sigma * (tau x n)` with `sigma` chosen so that `torsion >= 0`.
/// Degenerate (straight) points carry `n` along the radial direction, zero
/// torsion and zero `ds_kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrenetData {
    pub tau: Vector3<f64>,
    pub n: Vector3<f64>,
    pub b: Vector3<f64>,
    pub kappa: f64,
    pub torsion: f64,
    pub ds_kappa: f64,
    pub sigma: f64,
    pub degenerate: bool,
}

impl FrenetData {
    pub fn require_regular(self, floor: f64) -> Result<Self> {
        if self.degenerate {
            Err(Error::Degenerate { kappa: self.kappa, floor })
        } else {
            Ok(self)
        }
    }

    /// Torsion with the sign of the right-handed frame `tau x n`.
    pub fn signed_torsion(&self) -> f64 {
        self.sigma * self.torsion
    }
}

/// `1e-9` per unit curve length.
pub fn kappa_floor(curve_length: f64) -> f64 {
    1e-9 / curve_length.max(f64::MIN_POSITIVE)
}

fn basis(theta: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (s, c) = theta.sin_cos();
    (Vector3::new(c, s, 0.0), Vector3::new(-s, c, 0.0), Vector3::z())
}

/// Straight-segment frame: `n` is the radial direction made normal to `tau`.
fn straight_frame(tau: Vector3<f64>, e_r: Vector3<f64>, kappa: f64) -> FrenetData {
    let mut n = e_r - tau * tau.dot(&e_r);
    if n.norm() < 1e-12 {
        n = Vector3::y() - tau * tau.y;
    }
    let n = n.normalize();
    FrenetData { tau, n, b: tau.cross(&n), kappa, torsion: 0.0, ds_kappa: 0.0, sigma: 1.0, degenerate: true }
}

/// `d_z Phi`, `d_z^2 Phi` and `d_z^3 Phi` in Cartesian components.
pub fn phi_derivatives(d: &CurveDerivs) -> [Vector3<f64>; 3] {
    let (e_r, e_t, e_z) = basis(d.theta[0]);
    let [r, r1, r2, r3] = d.r;
    let [_, t1, t2, t3] = d.theta;
    let a = r2 - r * t1 * t1;
    let b = r * t2 + 2.0 * r1 * t1;
    let da = r3 - r1 * t1 * t1 - 2.0 * r * t1 * t2;
    let db = r1 * t2 + r * t3 + 2.0 * r2 * t1 + 2.0 * r1 * t2;
    [
        e_r * r1 + e_t * (r * t1) + e_z,
        e_r * a + e_t * b,
        e_r * (da - b * t1) + e_t * (db + a * t1),
    ]
}

/// Frame from a derivative table.
pub fn frame_from_derivs(d: &CurveDerivs, kappa_floor: f64) -> FrenetData {
    let [p1, p2, p3] = phi_derivatives(d);
    let q = p1.norm_squared();
    let w = p1.dot(&p2);
    let zp = q.sqrt().recip();
    let zpp = -w / (q * q);
    let p2sq = p2.norm_squared();
    let kappa2 = p2sq * zp.powi(4) + 2.0 * w * zp * zp * zpp + q * zpp * zpp;
    let kappa = kappa2.max(0.0).sqrt();
    let tau = p1 * zp;
    if !(kappa >= kappa_floor) {
        return straight_frame(tau, basis(d.theta[0]).0, kappa);
    }
    let n = (p2 * (zp * zp) + p1 * zpp) / kappa;
    let cross = p1.cross(&p2);
    let signed = cross.dot(&p3) / cross.norm_squared();
    let sigma = if signed < 0.0 { -1.0 } else { 1.0 };
    let dk2 = 2.0 * p2.dot(&p3) / (q * q) - 4.0 * p2sq * w / q.powi(3) - 2.0 * w * (p2sq + p1.dot(&p3)) / q.powi(3)
        + 6.0 * w.powi(3) / q.powi(4);
    FrenetData {
        tau,
        n,
        b: tau.cross(&n) * sigma,
        kappa,
        torsion: signed.abs(),
        ds_kappa: zp * dk2 / (2.0 * kappa),
        sigma,
        degenerate: false,
    }
}

/// Frame at axis length `z` from the curve's derivative tables.
pub fn frame_explicit<C: AxisLengthCurve>(curve: &C, z: f64) -> Result<FrenetData> {
    let (a, b) = curve.z_range();
    let d = curve.derivs_at(z)?;
    Ok(frame_from_derivs(&d, kappa_floor(b - a)))
}

fn stencil_derivs(p: &[Vector3<f64>; 5], h: f64) -> [Vector3<f64>; 3] {
    let [m2, m1, c, p1, p2] = *p;
    [
        (-p2 + p1 * 8.0 - m1 * 8.0 + m2) / (12.0 * h),
        (-p2 + p1 * 16.0 - c * 30.0 + m1 * 16.0 - m2) / (12.0 * h * h),
        (p2 - p1 * 2.0 + m1 * 2.0 - m2) / (2.0 * h.powi(3)),
    ]
}

/// Curve derivatives `phi', phi'', phi'''` at arc length `s` by Richardson-refined
/// five-point differences with outer step `h`.
pub fn arc_derivatives<C: AxisLengthCurve>(arc: &ArcCurve<C>, s: f64, h: f64) -> Result<[Vector3<f64>; 3]> {
    if !(h > 0.0) || s - 2.0 * h < 0.0 || s + 2.0 * h > arc.length() {
        return Err(Error::InsufficientSpan(s));
    }
    let pts: Vec<Vector3<f64>> = (-4..=4).map(|k| arc.point(s + 0.5 * h * k as f64)).collect::<Result<_>>()?;
    let coarse = stencil_derivs(&[pts[0], pts[2], pts[4], pts[6], pts[8]], h);
    let fine = stencil_derivs(&[pts[2], pts[3], pts[4], pts[5], pts[6]], 0.5 * h);
    Ok([
        (fine[0] * 16.0 - coarse[0]) / 15.0,
        (fine[1] * 16.0 - coarse[1]) / 15.0,
        (fine[2] * 4.0 - coarse[2]) / 3.0,
    ])
}

/// Frame at arc length `s` by finite differences of the embedded curve.
pub fn frame_numeric<C: AxisLengthCurve>(arc: &ArcCurve<C>, s: f64, h: f64) -> Result<FrenetData> {
    let [d1, d2, d3] = arc_derivatives(arc, s, h)?;
    let floor = kappa_floor(arc.length());
    let q = d1.norm_squared();
    let c = d1.cross(&d2);
    let kappa = c.norm() / q.powf(1.5);
    let tau = d1.normalize();
    if !(kappa >= floor) {
        let theta = arc.curve().state_at(arc.z_at(s)?)?[1];
        return Ok(straight_frame(tau, basis(theta).0, kappa));
    }
    let n = (d2 - tau * tau.dot(&d2)).normalize();
    let signed = c.dot(&d3) / c.norm_squared();
    let sigma = if signed < 0.0 { -1.0 } else { 1.0 };
    let dc = d1.cross(&d3);
    let ds_kappa = c.dot(&dc) / c.norm() * q.powf(-1.5) - 1.5 * c.norm() * q.powf(-2.5) * 2.0 * d1.dot(&d2);
    Ok(FrenetData {
        tau,
        n,
        b: tau.cross(&n) * sigma,
        kappa,
        torsion: signed.abs(),
        ds_kappa: ds_kappa / q.sqrt(),
        sigma,
        degenerate: false,
    })
}

/// Coordinate matrices of the moving frame at normal offsets `(r_bar, z_bar)`.
///
/// Rows of `forward` give `d_theta_bar x`, `d_r_bar x`, `d_z_bar x` in the
/// `(tau, n, b)` basis; `inverse` is its exact inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameMatrices {
    pub forward: Matrix3<f64>,
    pub inverse: Matrix3<f64>,
}

pub fn moving_frame_matrices(kappa: f64, torsion: f64, r_bar: f64, z_bar: f64) -> Result<FrameMatrices> {
    let a = 1.0 - kappa * r_bar;
    if !(a > 0.0) {
        return Err(Error::TubeViolation(a));
    }
    let forward = Matrix3::new(a, -z_bar * torsion, r_bar * torsion, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    let inverse =
        Matrix3::new(1.0 / a, z_bar * torsion / a, -r_bar * torsion / a, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    Ok(FrameMatrices { forward, inverse })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticRegime {
    /// `d_s kappa ~ R Theta' Theta''`.
    Breakdown,
    /// `d_s kappa ~ R Theta'''`.
    Blowup,
}

/// Leading-order near-axis expression for `d_s kappa` in the given regime.
pub fn ds_kappa_asymptotic<C: AxisLengthCurve>(curve: &C, z: f64, regime: AsymptoticRegime) -> Result<f64> {
    let d = curve.derivs_at(z)?;
    Ok(match regime {
        AsymptoticRegime::Breakdown => d.r[0] * d.theta[1] * d.theta[2],
        AsymptoticRegime::Blowup => d.r[0] * d.theta[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fixture, Waveform};
    use crate::lagrange::{arc_length_reparam, axis_length_reparam, integrate_streamline, integrate_trajectory, Seed};

    fn helix_curve(r0: f64, span: f64) -> crate::lagrange::AxisCurve<Fixture> {
        let f = Fixture::RigidHelixFlow { omega: 2.0, w: 1.0 };
        let tr = integrate_trajectory(&f, Seed::new(r0, 0.0, 0.0), (0.0, span), 1e-12).unwrap();
        axis_length_reparam(&tr, f, 1e-12).unwrap()
    }

    #[test]
    fn helix_closed_forms() {
        let c = helix_curve(0.5, 2.0);
        let f = frame_explicit(&c, 1.0).unwrap();
        assert!((f.kappa - 1.0).abs() < 1e-12);
        assert!((f.torsion - 1.0).abs() < 1e-12);
        assert!(f.ds_kappa.abs() < 1e-12);
        assert!(!f.degenerate);
        for (u, v) in [(f.tau, f.n), (f.n, f.b), (f.tau, f.b)] {
            assert!(u.dot(&v).abs() < 1e-12);
        }
        // right-handed helix has positive torsion without flipping
        assert_eq!(f.sigma, 1.0);
    }

    #[test]
    fn helix_numeric_oracle() {
        let c = helix_curve(0.5, 2.0);
        let arc = arc_length_reparam(&c).unwrap();
        let s = arc.s_at(1.0).unwrap();
        let f = frame_numeric(&arc, s, 1e-3).unwrap();
        assert!((f.kappa - 1.0).abs() < 1e-6, "{}", f.kappa);
        assert!((f.torsion - 1.0).abs() < 1e-6, "{}", f.torsion);
        assert!(f.ds_kappa.abs() < 1e-5, "{}", f.ds_kappa);
    }

    #[test]
    fn straight_tube_is_degenerate() {
        let tube = Fixture::StraightTube { g: Waveform::Const { value: 1.0 } };
        let c = integrate_streamline(&tube, 0.3, 0.0, (0.0, 1.0), 1e-10).unwrap();
        let f = frame_explicit(&c, 0.5).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.kappa, 0.0);
        assert!(matches!(f.require_regular(1e-9), Err(Error::Degenerate { .. })));
        assert!((f.n - Vector3::x()).norm() < 1e-15);
    }

    #[test]
    fn near_axis_curvature_law() {
        let c = helix_curve(1e-3, 1.0);
        let f = frame_explicit(&c, 0.5).unwrap();
        assert!((f.kappa / 1e-3 - 4.0).abs() / 4.0 < 1e-5);
    }

    #[test]
    fn stagnation_cross_validation() {
        let fx = Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 };
        let tr = integrate_trajectory(&fx, Seed::new(1.0, 0.0, 1.0), (0.0, 1.0), 1e-12).unwrap();
        let c = axis_length_reparam(&tr, &fx, 1e-12).unwrap();
        let arc = arc_length_reparam(&c).unwrap();
        for z in [1.3, 1.8, 2.3] {
            let s = arc.s_at(z).unwrap();
            let e = frame_explicit(&c, z).unwrap();
            let n = frame_numeric(&arc, s, 1e-2).unwrap();
            assert!((e.kappa - n.kappa).abs() < 1e-5 * e.kappa, "{z}: {} {}", e.kappa, n.kappa);
            assert!((e.torsion - n.torsion).abs() < 1e-5 * e.torsion.abs().max(1e-3), "{} {}", e.torsion, n.torsion);
            assert!((e.ds_kappa - n.ds_kappa).abs() < 1e-5 * e.ds_kappa.abs().max(1e-3), "{} {}", e.ds_kappa, n.ds_kappa);
        }
    }

    #[test]
    fn circle_limit() {
        let f = Fixture::RigidHelixFlow { omega: 1.0, w: 1e-6 };
        let tr = integrate_trajectory(&f, Seed::new(0.5, 0.0, 0.0), (0.0, 1.0), 1e-12).unwrap();
        let c = axis_length_reparam(&tr, &f, 1e-12).unwrap();
        let fr = frame_explicit(&c, 5e-7).unwrap();
        assert!((fr.kappa - 2.0).abs() < 1e-10);
        assert!(fr.torsion < 1e-5);
    }

    #[test]
    fn frame_matrix_examples() {
        let m = moving_frame_matrices(0.0, 0.0, 0.3, -0.2).unwrap();
        assert_eq!(m.forward, Matrix3::identity());
        let m = moving_frame_matrices(1.0, 2.0, 0.5, 0.0).unwrap();
        assert_eq!(m.forward.row(0), Matrix3::new(0.5, 0.0, 1.0, 0., 0., 0., 0., 0., 0.).row(0));
        assert_eq!(m.inverse.row(0), Matrix3::new(2.0, 0.0, -2.0, 0., 0., 0., 0., 0., 0.).row(0));
        assert!((m.forward * m.inverse - Matrix3::identity()).norm() < 1e-15);
        let m = moving_frame_matrices(3.0, -1.0, 0.0, 0.0).unwrap();
        assert_eq!(m.inverse, Matrix3::identity());
        assert!(matches!(moving_frame_matrices(2.0, 0.0, 0.5, 0.0), Err(Error::TubeViolation(_))));
    }

    /// `R = r0`, `Theta = theta(z)` given by a cubic, with exact tables.
    struct Synthetic {
        r0: f64,
        c: [f64; 4],
    }

    impl AxisLengthCurve for Synthetic {
        fn z_range(&self) -> (f64, f64) {
            (-1.0, 1.0)
        }
        fn state_at(&self, z: f64) -> Result<[f64; 3]> {
            let c = self.c;
            Ok([self.r0, c[0] + z * (c[1] + z * (c[2] + z * c[3])), 0.0])
        }
        fn derivs_at(&self, z: f64) -> Result<CurveDerivs> {
            let c = self.c;
            Ok(CurveDerivs {
                z,
                r: [self.r0, 0.0, 0.0, 0.0],
                theta: [
                    self.state_at(z)?[1],
                    c[1] + 2.0 * c[2] * z + 3.0 * c[3] * z * z,
                    2.0 * c[2] + 6.0 * c[3] * z,
                    6.0 * c[3],
                ],
                t: [0.0; 4],
            })
        }
    }

    #[test]
    fn blowup_regime_dominates_for_cubic_twist() {
        let eps = 1e-2;
        for r0 in [1e-2, 1e-3] {
            let c = Synthetic { r0, c: [0.0, 0.0, 0.0, eps] };
            let asym = ds_kappa_asymptotic(&c, 0.0, AsymptoticRegime::Blowup).unwrap();
            assert!((asym - 6.0 * eps * r0).abs() < 1e-18);
            // at z = 0 Theta' = 0: the curve is momentarily straight; sample nearby
            let z = 0.05;
            let full = frame_explicit(&c, z).unwrap().ds_kappa;
            let asym = ds_kappa_asymptotic(&c, z, AsymptoticRegime::Blowup).unwrap();
            assert!((full - asym).abs() < 0.05 * asym.abs(), "{r0}: {full} vs {asym}");
        }
    }

    #[test]
    fn breakdown_regime_leading_order() {
        let (a, b) = (2.0, 0.05);
        let mut prev = f64::INFINITY;
        for r0 in [1e-2, 1e-3, 1e-4] {
            let c = Synthetic { r0, c: [0.0, a, b, 0.0] };
            let full = frame_explicit(&c, 0.0).unwrap().ds_kappa;
            let asym = ds_kappa_asymptotic(&c, 0.0, AsymptoticRegime::Breakdown).unwrap();
            assert!((asym - r0 * a * 2.0 * b).abs() < 1e-15);
            // differentiating kappa ~ R Theta'^2 gives twice the regime expression,
            // up to the relative size of Theta'' against Theta'^2
            let limit = 2.0 / (1.0 + 4.0 * b * b / a.powi(4)).sqrt();
            assert!((limit - 2.0).abs() < 1e-3);
            let err = (full / asym - limit).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-6, "{prev}");
    }

    #[test]
    fn orientation_flip_keeps_curvature() {
        let right = Synthetic { r0: 0.5, c: [0.0, 2.0, 0.1, 0.0] };
        let left = Synthetic { r0: 0.5, c: [0.0, -2.0, -0.1, 0.0] };
        let fr = frame_explicit(&right, 0.2).unwrap();
        let fl = frame_explicit(&left, 0.2).unwrap();
        assert!((fr.kappa - fl.kappa).abs() < 1e-14);
        assert!((fr.torsion - fl.torsion).abs() < 1e-14);
        assert_eq!(fr.sigma, -fl.sigma);
    }
}
