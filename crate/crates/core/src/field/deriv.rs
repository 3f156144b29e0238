//! Finite-difference derivative engine.
//!
//! Central tensor-product stencils, extrapolated once (Richardson) from steps
//! `h` and `h/2`. Fields are extended to `r < 0` by axis parity, so stencils
//! never need one-sided variants near the axis.

use std::ops::{Add, Mul, Sub};

use super::{CylVec, FieldJet, FlowField, ThirdJet};
use crate::error::Result;

/// Step for a Richardson-extrapolated central stencil of total order `order`.
///
/// Balances the O(h^4) truncation of the extrapolated stencil against the
/// O(eps / h^order) round-off.
pub fn fd_step(order: u32, scale: f64) -> f64 {
    let h = f64::EPSILON.powf(1.0 / (order as f64 + 4.0));
    h.max(1e-7) * scale
}

/// `(offset, weight)` pairs of the central stencil for a derivative of the
/// given order with unit step.
fn stencil(order: u32) -> &'static [(f64, f64)] {
    match order {
        0 => &[(0.0, 1.0)],
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        _ => panic!("stencil order {order} not supported"),
    }
}

fn tensor_stencil<T, F>(f: &F, x: [f64; 3], orders: [u32; 3], h: [f64; 3]) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(f64, f64, f64) -> Result<T>,
{
    let mut acc: Option<T> = None;
    for &(oa, wa) in stencil(orders[0]) {
        for &(ob, wb) in stencil(orders[1]) {
            for &(oc, wc) in stencil(orders[2]) {
                let v = f(x[0] + oa * h[0], x[1] + ob * h[1], x[2] + oc * h[2])? * (wa * wb * wc);
                acc = Some(match acc {
                    Some(a) => a + v,
                    None => v,
                });
            }
        }
    }
    let scale = h[0].powi(orders[0] as i32) * h[1].powi(orders[1] as i32) * h[2].powi(orders[2] as i32);
    Ok(acc.expect("non-empty stencil") * (1.0 / scale))
}

/// Mixed partial `d^a/dx0^a d^b/dx1^b d^c/dx2^c` of `f` at `x`, with per-axis
/// scales used to size the steps.
pub fn mixed_partial<T, F>(f: &F, x: [f64; 3], orders: [u32; 3], scales: [f64; 3]) -> Result<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    F: Fn(f64, f64, f64) -> Result<T>,
{
    let total: u32 = orders.iter().sum();
    let h = [fd_step(total, scales[0]), fd_step(total, scales[1]), fd_step(total, scales[2])];
    let coarse = tensor_stencil(f, x, orders, h)?;
    if total == 0 {
        return Ok(coarse);
    }
    let fine = tensor_stencil(f, x, orders, [h[0] * 0.5, h[1] * 0.5, h[2] * 0.5])?;
    Ok((fine * 4.0 - coarse) * (1.0 / 3.0))
}

/// First derivative of a scalar function by an extrapolated central difference.
pub fn richardson_d1<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Second derivative of a scalar function by an extrapolated central difference.
pub fn richardson_d2<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    let f0 = f(x)?;
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - 2.0 * f0 + f(x - h)?) / (h * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Evaluates `f` with axis parity: `(v_r, v_theta)` are odd in `r`, `v_z` even.
fn with_parity<F>(f: &F, r: f64, z: f64, t: f64) -> Result<CylVec>
where
    F: Fn(f64, f64, f64) -> Result<CylVec>,
{
    if r < 0.0 {
        let v = f(-r, z, t)?;
        Ok(CylVec::new(-v.v_r, -v.v_theta, v.v_z))
    } else {
        f(r, z, t)
    }
}

/// Builds a full jet of `f` at `(r, z, t)` by finite differences.
pub fn fd_jet<F>(
    f: F,
    r: f64,
    z: f64,
    t: f64,
    length_scale: f64,
    time_scale: f64,
    want_third: bool,
) -> Result<FieldJet>
where
    F: Fn(f64, f64, f64) -> Result<CylVec>,
{
    let g = |r: f64, z: f64, t: f64| with_parity(&f, r, z, t);
    let x = [r, z, t];
    let s = [length_scale, length_scale, time_scale];
    let p = |o: [u32; 3]| mixed_partial::<CylVec, _>(&g, x, o, s);
    let third = if want_third {
        Some(ThirdJet {
            d_rrr: p([3, 0, 0])?,
            d_rrz: p([2, 1, 0])?,
            d_rzz: p([1, 2, 0])?,
            d_zzz: p([0, 3, 0])?,
        })
    } else {
        None
    };
    Ok(FieldJet {
        value: g(r, z, t)?,
        d_r: p([1, 0, 0])?,
        d_z: p([0, 1, 0])?,
        d_t: p([0, 0, 1])?,
        d_rr: p([2, 0, 0])?,
        d_rz: p([1, 1, 0])?,
        d_zz: p([0, 2, 0])?,
        d_rt: p([1, 0, 1])?,
        d_zt: p([0, 1, 1])?,
        d_tt: p([0, 0, 2])?,
        third,
    })
}

/// A field given by a closure, differentiated numerically.
///
/// Useful for synthetic flows that have no hand-written jet.
pub struct FdField<F> {
    name: String,
    f: F,
    length_scale: f64,
    time_scale: f64,
    steady: bool,
    euler: bool,
}

impl<F> FdField<F>
where
    F: Fn(f64, f64, f64) -> CylVec + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f, length_scale: 1.0, time_scale: 1.0, steady: false, euler: false }
    }

    pub fn with_scales(mut self, length: f64, time: f64) -> Self {
        self.length_scale = length;
        self.time_scale = time;
        self
    }

    pub fn steady(mut self, steady: bool) -> Self {
        self.steady = steady;
        self
    }

    pub fn euler(mut self, euler: bool) -> Self {
        self.euler = euler;
        self
    }
}

impl<F> FlowField for FdField<F>
where
    F: Fn(f64, f64, f64) -> CylVec + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec> {
        super::check_radius(r)?;
        Ok((self.f)(r, z, t))
    }

    fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet> {
        super::check_radius(r)?;
        fd_jet(|r, z, t| Ok((self.f)(r, z, t)), r, z, t, self.length_scale, self.time_scale, want_third)
    }

    fn length_scale(&self) -> f64 {
        self.length_scale
    }

    fn is_steady(&self) -> bool {
        self.steady
    }

    fn is_euler(&self) -> bool {
        self.euler
    }
}
