//! Axisymmetric velocity fields and the kinematic quantities built on them.
//!
//! Every field is described by its cylindrical components `(v_r, v_theta, v_z)`
//! as functions of `(r, z, t)`. Fields expose value jets (partials up to order
//! two, optionally three in space) which feed the trajectory, frame and
//! reconstruction machinery.

mod deriv;
mod fixtures;
mod grid;
mod womersley;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use deriv::{fd_jet, fd_step, richardson_d1, richardson_d2, FdField};
pub use fixtures::{EvenPoly, Fixture, Waveform, FIXTURE_NAMES};
pub use grid::{GridData, GridField};
pub use womersley::Womersley;

use crate::error::{Error, Result};

/// Cylindrical velocity (or acceleration) components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CylVec {
    pub v_r: f64,
    pub v_theta: f64,
    pub v_z: f64,
}

impl CylVec {
    pub const ZERO: CylVec = CylVec { v_r: 0.0, v_theta: 0.0, v_z: 0.0 };

    pub const fn new(v_r: f64, v_theta: f64, v_z: f64) -> Self {
        Self { v_r, v_theta, v_z }
    }

    pub fn norm(&self) -> f64 {
        (self.v_r * self.v_r + self.v_theta * self.v_theta + self.v_z * self.v_z).sqrt()
    }

    pub fn dot(&self, other: &CylVec) -> f64 {
        self.v_r * other.v_r + self.v_theta * other.v_theta + self.v_z * other.v_z
    }

    pub fn max_abs(&self) -> f64 {
        self.v_r.abs().max(self.v_theta.abs()).max(self.v_z.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.v_r.is_finite() && self.v_theta.is_finite() && self.v_z.is_finite()
    }

    /// Rotates the components at azimuth `theta` into Cartesian `(x, y, z)`.
    pub fn to_cartesian(&self, theta: f64) -> nalgebra::Vector3<f64> {
        let (s, c) = theta.sin_cos();
        nalgebra::Vector3::new(
            self.v_r * c - self.v_theta * s,
            self.v_r * s + self.v_theta * c,
            self.v_z,
        )
    }

    pub fn get(&self, component: Component) -> f64 {
        match component {
            Component::R => self.v_r,
            Component::Theta => self.v_theta,
            Component::Z => self.v_z,
        }
    }
}

impl Add for CylVec {
    type Output = CylVec;
    fn add(self, o: CylVec) -> CylVec {
        CylVec::new(self.v_r + o.v_r, self.v_theta + o.v_theta, self.v_z + o.v_z)
    }
}

impl Sub for CylVec {
    type Output = CylVec;
    fn sub(self, o: CylVec) -> CylVec {
        CylVec::new(self.v_r - o.v_r, self.v_theta - o.v_theta, self.v_z - o.v_z)
    }
}

impl Mul<f64> for CylVec {
    type Output = CylVec;
    fn mul(self, k: f64) -> CylVec {
        CylVec::new(self.v_r * k, self.v_theta * k, self.v_z * k)
    }
}

impl Neg for CylVec {
    type Output = CylVec;
    fn neg(self) -> CylVec {
        self * -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    R,
    Theta,
    Z,
}

/// Third spatial partials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThirdJet {
    pub d_rrr: CylVec,
    pub d_rrz: CylVec,
    pub d_rzz: CylVec,
    pub d_zzz: CylVec,
}

/// Value and partial derivatives of a field at one `(r, z, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldJet {
    pub value: CylVec,
    pub d_r: CylVec,
    pub d_z: CylVec,
    pub d_t: CylVec,
    pub d_rr: CylVec,
    pub d_rz: CylVec,
    pub d_zz: CylVec,
    pub d_rt: CylVec,
    pub d_zt: CylVec,
    pub d_tt: CylVec,
    pub third: Option<ThirdJet>,
}

impl FieldJet {
    /// Second-order Taylor expansion of one component about the jet point,
    /// for increments `(dr, dz, dt)`.
    pub fn taylor2(&self, c: Component, dr: f64, dz: f64, dt: f64) -> f64 {
        let g = |v: &CylVec| v.get(c);
        g(&self.value)
            + g(&self.d_r) * dr
            + g(&self.d_z) * dz
            + g(&self.d_t) * dt
            + 0.5 * g(&self.d_rr) * dr * dr
            + g(&self.d_rz) * dr * dz
            + 0.5 * g(&self.d_zz) * dz * dz
            + g(&self.d_rt) * dr * dt
            + g(&self.d_zt) * dz * dt
            + 0.5 * g(&self.d_tt) * dt * dt
    }
}

/// A smooth axisymmetric velocity field.
///
/// Implementations must be pure: repeated calls with the same arguments return
/// identical results, and evaluation is safe from any number of threads.
pub trait FlowField: Send + Sync {
    fn name(&self) -> &str;

    fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec>;

    fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet>;

    /// Characteristic radius used for axis thresholds and nondimensionalization.
    fn length_scale(&self) -> f64 {
        1.0
    }

    /// True when `d_t u` vanishes identically.
    fn is_steady(&self) -> bool {
        false
    }

    /// True when the field is an exact incompressible Euler solution.
    fn is_euler(&self) -> bool {
        false
    }

    /// Whether `jet(.., want_third = true)` can succeed.
    fn has_third_order(&self) -> bool {
        true
    }

    /// Largest radius for which the field is defined, if bounded.
    fn max_radius(&self) -> Option<f64> {
        None
    }
}

impl<F: FlowField + ?Sized> FlowField for &F {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec> {
        (**self).eval(r, z, t)
    }
    fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet> {
        (**self).jet(r, z, t, want_third)
    }
    fn length_scale(&self) -> f64 {
        (**self).length_scale()
    }
    fn is_steady(&self) -> bool {
        (**self).is_steady()
    }
    fn is_euler(&self) -> bool {
        (**self).is_euler()
    }
    fn has_third_order(&self) -> bool {
        (**self).has_third_order()
    }
    fn max_radius(&self) -> Option<f64> {
        (**self).max_radius()
    }
}

impl<F: FlowField + ?Sized> FlowField for std::sync::Arc<F> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec> {
        (**self).eval(r, z, t)
    }
    fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet> {
        (**self).jet(r, z, t, want_third)
    }
    fn length_scale(&self) -> f64 {
        (**self).length_scale()
    }
    fn is_steady(&self) -> bool {
        (**self).is_steady()
    }
    fn is_euler(&self) -> bool {
        (**self).is_euler()
    }
    fn has_third_order(&self) -> bool {
        (**self).has_third_order()
    }
    fn max_radius(&self) -> Option<f64> {
        (**self).max_radius()
    }
}

/// Radius below which singular `1/r` terms switch to their axis limits.
pub fn axis_threshold(field: &dyn FlowField) -> f64 {
    1e-8 * field.length_scale()
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r < 0.0 {
        Err(Error::NegativeRadius(r))
    } else {
        Ok(())
    }
}

/// Axisymmetric divergence `d_r v_r + v_r / r + d_z v_z`.
///
/// On the axis the limit `2 d_r v_r + d_z v_z` is used.
pub fn divergence(field: &dyn FlowField, r: f64, z: f64, t: f64) -> Result<f64> {
    check_radius(r)?;
    let j = field.jet(r, z, t, false)?;
    Ok(divergence_from_jet(&j, r, axis_threshold(field)))
}

pub fn divergence_from_jet(j: &FieldJet, r: f64, axis_eps: f64) -> f64 {
    let hoop = if r < axis_eps { j.d_r.v_r } else { j.value.v_r / r };
    j.d_r.v_r + hoop + j.d_z.v_z
}

/// Material acceleration `A = d_t u + (u . grad) u` in cylindrical components.
pub fn acceleration(field: &dyn FlowField, r: f64, z: f64, t: f64) -> Result<CylVec> {
    check_radius(r)?;
    let j = field.jet(r, z, t, false)?;
    Ok(acceleration_from_jet(&j, r, axis_threshold(field)))
}

pub fn acceleration_from_jet(j: &FieldJet, r: f64, axis_eps: f64) -> CylVec {
    let u = j.value;
    // v_theta / r, replaced by d_r v_theta on the axis.
    let swirl_rate = if r < axis_eps { j.d_r.v_theta } else { u.v_theta / r };
    CylVec::new(
        j.d_t.v_r + u.v_r * j.d_r.v_r + u.v_z * j.d_z.v_r - u.v_theta * swirl_rate,
        j.d_t.v_theta + u.v_r * j.d_r.v_theta + u.v_z * j.d_z.v_theta + u.v_r * swirl_rate,
        j.d_t.v_z + u.v_r * j.d_r.v_z + u.v_z * j.d_z.v_z,
    )
}

/// Output of [`pressure_compatibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureCompatibility {
    pub a_theta: f64,
    pub curl_mismatch: f64,
}

/// Checks whether `-A` can be a pressure gradient: `A_theta = 0` and
/// `d_z A_r - d_r A_z = 0`.
pub fn pressure_compatibility(
    field: &dyn FlowField,
    r: f64,
    z: f64,
    t: f64,
) -> Result<PressureCompatibility> {
    check_radius(r)?;
    let j = field.jet(r, z, t, false)?;
    let eps = axis_threshold(field);
    let a = acceleration_from_jet(&j, r, eps);
    let u = j.value;

    // d_z (v_theta^2 / r) = 2 v_theta d_z v_theta / r
    let swirl_rate = if r < eps { j.d_r.v_theta } else { u.v_theta / r };
    let dz_ar = j.d_zt.v_r
        + j.d_z.v_r * j.d_r.v_r
        + u.v_r * j.d_rz.v_r
        + j.d_z.v_z * j.d_z.v_r
        + u.v_z * j.d_zz.v_r
        - 2.0 * swirl_rate * j.d_z.v_theta;
    let dr_az = j.d_rt.v_z
        + j.d_r.v_r * j.d_r.v_z
        + u.v_r * j.d_rr.v_z
        + j.d_r.v_z * j.d_z.v_z
        + u.v_z * j.d_rz.v_z;
    Ok(PressureCompatibility { a_theta: a.v_theta, curl_mismatch: dz_ar - dr_az })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_rotation_keeps_norm() {
        let v = CylVec::new(0.3, -1.2, 0.7);
        for k in 0..8 {
            let c = v.to_cartesian(k as f64 * 0.9);
            assert!((c.norm() - v.norm()).abs() < 1e-14);
            assert_eq!(c.z, 0.7);
        }
    }

    #[test]
    fn negative_radius_is_rejected() {
        let f = Fixture::RigidHelixFlow { omega: 1.0, w: 1.0 };
        assert_eq!(divergence(&f, -0.1, 0.0, 0.0), Err(Error::NegativeRadius(-0.1)));
        assert!(matches!(acceleration(&f, -1.0, 0.0, 0.0), Err(Error::NegativeRadius(_))));
    }
}
