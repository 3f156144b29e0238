//! Particle trajectories, axis-length curves and arc-length reparametrization.
//!
//! Trajectories are integrated in time. Axis-length curves are integrated in
//! `z` with state `(R, Theta, t)`; for streamlines `t` is frozen. Derivative
//! tables along axis-length curves come from truncated Taylor series built by
//! Picard iteration on second-order field jets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{axis_threshold, Component, FlowField};
use crate::numerics::{fornberg_weights, gk15, integrate};
use crate::ode::{dopri5, dopri5_step, OdeOptions, Solution};
use crate::series::{compose_jet, Series};

/// Samples per span used to cap the integrator step.
const MIN_SAMPLES: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seed {
    pub r0: f64,
    pub theta0: f64,
    pub z0: f64,
}

impl Seed {
    pub fn new(r0: f64, theta0: f64, z0: f64) -> Self {
        Self { r0, theta0, z0 }
    }
}

/// A point on a particle path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub z: f64,
}

impl PathPoint {
    pub fn cartesian(&self) -> nalgebra::Vector3<f64> {
        let (s, c) = self.theta.sin_cos();
        nalgebra::Vector3::new(self.r * c, self.r * s, self.z)
    }
}

/// Particle path `t -> (R*, Theta*, Z*)` with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: Seed,
    pub t0: f64,
    pub field: String,
    pub on_axis: bool,
    /// State `[R, Theta, Z]` as a function of `t`.
    pub solution: Solution<3>,
    /// `LeftDomain` when the path exited the field domain before `t_span.1`.
    pub exit: Option<Error>,
}

impl Trajectory {
    pub fn samples(&self) -> Vec<PathPoint> {
        self.solution
            .xs
            .iter()
            .zip(&self.solution.ys)
            .map(|(&t, y)| PathPoint { t, r: y[0], theta: y[1], z: y[2] })
            .collect()
    }

    pub fn t_end(&self) -> f64 {
        self.solution.x_last()
    }

    pub fn at(&self, t: f64) -> Option<PathPoint> {
        self.solution.eval(t).map(|y| PathPoint { t, r: y[0].max(0.0), theta: y[1], z: y[2] })
    }

    /// Errors with the recorded exit if the path did not reach the requested end.
    pub fn complete(&self) -> Result<&Self> {
        match &self.exit {
            Some(e) => Err(e.clone()),
            None => Ok(self),
        }
    }

    pub fn is_z_increasing(&self) -> bool {
        self.solution.ys.windows(2).all(|w| w[1][2] > w[0][2])
    }
}

fn trajectory_rhs<'a, F: FlowField>(field: &'a F, on_axis: bool) -> impl FnMut(f64, &[f64; 3]) -> Result<[f64; 3]> + 'a {
    let eps = axis_threshold(field);
    move |t, y| {
        let (r, z) = (if on_axis { 0.0 } else { y[0] }, y[2]);
        if r < eps {
            let j = field.jet(r, z, t, false)?;
            let v = j.value;
            Ok([if on_axis { 0.0 } else { v.v_r }, j.d_r.v_theta, v.v_z])
        } else {
            let v = field.eval(r, z, t)?;
            Ok([v.v_r, v.v_theta / r, v.v_z])
        }
    }
}

/// Integrates `dR/dt = v_r`, `dTheta/dt = v_theta / R`, `dZ/dt = v_z` from `t_span.0`.
pub fn integrate_trajectory<F: FlowField>(field: &F, seed: Seed, t_span: (f64, f64), ode_tol: f64) -> Result<Trajectory> {
    check_tol(ode_tol)?;
    if t_span.1 < t_span.0 {
        return Err(Error::InvalidParameter("backward-time integration is not supported".into()));
    }
    field.eval(seed.r0, seed.z0, t_span.0)?;
    let on_axis = seed.r0 < axis_threshold(field);
    let r0 = if on_axis { 0.0 } else { seed.r0 };
    let span = t_span.1 - t_span.0;
    let opts = OdeOptions::with_tol(ode_tol).h_max(span / MIN_SAMPLES);
    let solution = dopri5(trajectory_rhs(field, on_axis), t_span.0, [r0, seed.theta0, seed.z0], t_span.1, &opts)?;
    let exit = solution.stopped_at.map(|t| Error::LeftDomain { t });
    Ok(Trajectory { seed, t0: t_span.0, field: field.name().to_string(), on_axis, solution, exit })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("ode_tol must be positive, got {tol}")))
    }
}

/// Values and `z`-derivatives (orders 0..=3) of `R`, `Theta` and `t` at one station.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CurveDerivs {
    pub z: f64,
    pub r: [f64; 4],
    pub theta: [f64; 4],
    pub t: [f64; 4],
}

impl CurveDerivs {
    /// `|d_z Phi|`.
    pub fn speed_z(&self) -> f64 {
        let (rp, rt) = (self.r[1], self.r[0] * self.theta[1]);
        (1.0 + rp * rp + rt * rt).sqrt()
    }
}

/// A curve parametrized by axis length `z`, `Phi(z) = R e_r(Theta) + z e_z`.
pub trait AxisLengthCurve {
    fn z_range(&self) -> (f64, f64);

    /// `(R, Theta, t)` at `z`.
    fn state_at(&self, z: f64) -> Result<[f64; 3]>;

    fn derivs_at(&self, z: f64) -> Result<CurveDerivs>;

    fn speed_z(&self, z: f64) -> Result<f64> {
        Ok(self.derivs_at(z)?.speed_z())
    }

    /// Stations at which cumulative arc length is tabulated.
    fn z_nodes(&self) -> Vec<f64> {
        let (a, b) = self.z_range();
        (0..=64).map(|i| a + (b - a) * i as f64 / 64.0).collect()
    }

    fn point(&self, z: f64) -> Result<nalgebra::Vector3<f64>> {
        let [r, th, _] = self.state_at(z)?;
        Ok(nalgebra::Vector3::new(r * th.cos(), r * th.sin(), z))
    }
}

impl<C: AxisLengthCurve + ?Sized> AxisLengthCurve for &C {
    fn z_range(&self) -> (f64, f64) {
        (**self).z_range()
    }
    fn state_at(&self, z: f64) -> Result<[f64; 3]> {
        (**self).state_at(z)
    }
    fn derivs_at(&self, z: f64) -> Result<CurveDerivs> {
        (**self).derivs_at(z)
    }
    fn speed_z(&self, z: f64) -> Result<f64> {
        (**self).speed_z(z)
    }
    fn z_nodes(&self) -> Vec<f64> {
        (**self).z_nodes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    /// Frozen-time streamline.
    Streamline { t: f64 },
    /// Particle path with `t = Z*^{-1}(z)`.
    Trajectory,
}

/// Axis-length streamline or trajectory with its field.
#[derive(Debug, Clone)]
pub struct AxisCurve<F> {
    field: F,
    pub kind: CurveKind,
    pub seed: Seed,
    pub t0: f64,
    pub on_axis: bool,
    /// State `[R, Theta, t]` as a function of `z`.
    pub solution: Solution<3>,
    pub exit: Option<Error>,
    axis_step: f64,
}

fn axis_rhs<'a, F: FlowField>(field: &'a F, kind: CurveKind, on_axis: bool) -> impl FnMut(f64, &[f64; 3]) -> Result<[f64; 3]> + 'a {
    let eps = axis_threshold(field);
    move |z, y| {
        let t = match kind {
            CurveKind::Streamline { t } => t,
            CurveKind::Trajectory => y[2],
        };
        let r = if on_axis { 0.0 } else { y[0] };
        let (v_r, swirl_rate, v_z) = if r < eps {
            let j = field.jet(r, z, t, false)?;
            (if on_axis { 0.0 } else { j.value.v_r }, j.d_r.v_theta, j.value.v_z)
        } else {
            let v = field.eval(r, z, t)?;
            (v.v_r, v.v_theta / r, v.v_z)
        };
        if !(v_z > 0.0) {
            return Err(Error::NotUnilateral { r, z, t, v_z });
        }
        let dt = match kind {
            CurveKind::Streamline { .. } => 0.0,
            CurveKind::Trajectory => 1.0 / v_z,
        };
        Ok([v_r / v_z, swirl_rate / v_z, dt])
    }
}

impl<F: FlowField> AxisCurve<F> {
    /// Integrates `d_z R = v_r / v_z`, `R d_z Theta = v_theta / v_z` (and
    /// `d_z t = 1 / v_z` for trajectories) from `seed.z0` to `z_end`.
    pub fn integrate(field: F, seed: Seed, t0: f64, kind: CurveKind, z_end: f64, ode_tol: f64) -> Result<Self> {
        check_tol(ode_tol)?;
        if !(z_end > seed.z0) {
            return Err(Error::InvalidParameter(format!("z span must be increasing, got [{}, {z_end}]", seed.z0)));
        }
        field.eval(seed.r0, seed.z0, t0)?;
        let on_axis = seed.r0 < axis_threshold(&field);
        let r0 = if on_axis { 0.0 } else { seed.r0 };
        let span = z_end - seed.z0;
        let opts = OdeOptions::with_tol(ode_tol).h_max(span / MIN_SAMPLES);
        let solution = dopri5(axis_rhs(&field, kind, on_axis), seed.z0, [r0, seed.theta0, t0], z_end, &opts)?;
        let exit = solution.stopped_at.map(|z| Error::LeftDomain { t: z });
        Ok(Self { field, kind, seed, t0, on_axis, solution, exit, axis_step: 1e-3 * span })
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn samples(&self) -> Vec<PathPoint> {
        self.solution
            .xs
            .iter()
            .zip(&self.solution.ys)
            .map(|(&z, y)| PathPoint { t: y[2], r: y[0], theta: y[1], z })
            .collect()
    }

    /// Cheap dense-output state, accurate to the integration tolerance.
    pub fn dense_state(&self, z: f64) -> Option<[f64; 3]> {
        self.solution.eval(z)
    }

    fn series_off_axis(&self, z0: f64, y: [f64; 3]) -> Result<CurveDerivs> {
        let [r0, th0, t0] = y;
        let j = self.field.jet(r0, z0, t0, false)?;
        let traj = matches!(self.kind, CurveKind::Trajectory);
        let dz = Series::var();
        let mut dr = Series::ZERO;
        let mut dt = Series::ZERO;
        for _ in 0..3 {
            let vr = compose_jet(&j, Component::R, dr, dz, dt);
            let inv = compose_jet(&j, Component::Z, dr, dz, dt).recip();
            let next_dr = (vr * inv).integral();
            if traj {
                dt = inv.integral();
            }
            dr = next_dr;
        }
        let vt = compose_jet(&j, Component::Theta, dr, dz, dt);
        let vz = compose_jet(&j, Component::Z, dr, dz, dt);
        let rate = vt * ((Series::constant(r0) + dr) * vz).recip();
        Ok(CurveDerivs {
            z: z0,
            r: (Series::constant(r0) + dr).derivs(),
            theta: (Series::constant(th0) + rate.integral()).derivs(),
            t: (Series::constant(t0) + dt).derivs(),
        })
    }

    /// Axis value of `Theta'` and `Theta''`, plus `t`-derivatives, from one jet.
    fn axis_low_orders(&self, z: f64, t: f64) -> Result<([f64; 3], [f64; 3])> {
        let j = self.field.jet(0.0, z, t, false)?;
        let (a, b) = (j.d_r.v_theta, j.value.v_z);
        if !(b > 0.0) {
            return Err(Error::NotUnilateral { r: 0.0, z, t, v_z: b });
        }
        let tp = if matches!(self.kind, CurveKind::Trajectory) { 1.0 / b } else { 0.0 };
        let da = j.d_rz.v_theta + j.d_rt.v_theta * tp;
        let db = j.d_z.v_z + j.d_t.v_z * tp;
        let tpp = if tp != 0.0 { -db / (b * b) } else { 0.0 };
        Ok(([a / b, (da * b - a * db) / (b * b), 0.0], [tp, tpp, 0.0]))
    }

    fn derivs_on_axis(&self, z: f64, y: [f64; 3]) -> Result<CurveDerivs> {
        let (th, tt) = self.axis_low_orders(z, y[2])?;
        // Theta''' by five-point differencing of Theta'' along the curve.
        let (lo, hi) = self.z_range();
        let h = self.axis_step;
        let shift = if z - 2.0 * h < lo {
            (lo - (z - 2.0 * h)) / h
        } else if z + 2.0 * h > hi {
            (hi - (z + 2.0 * h)) / h
        } else {
            0.0
        };
        let nodes: Vec<f64> = (-2..=2).map(|k| (z + (k as f64 + shift) * h).clamp(lo, hi)).collect();
        let w = fornberg_weights(z, &nodes, 1);
        let mut th3 = 0.0;
        let mut t3 = 0.0;
        for (zk, wk) in nodes.iter().zip(&w[1]) {
            let tk = self.state_at(*zk)?[2];
            let (a, b) = self.axis_low_orders(*zk, tk)?;
            th3 += wk * a[1];
            t3 += wk * b[1];
        }
        Ok(CurveDerivs {
            z,
            r: [0.0; 4],
            theta: [y[1], th[0], th[1], th3],
            t: [y[2], tt[0], tt[1], t3],
        })
    }
}

impl<F: FlowField> AxisLengthCurve for AxisCurve<F> {
    fn z_range(&self) -> (f64, f64) {
        (self.solution.x_first(), self.solution.x_last())
    }

    /// Re-integrates from the preceding step endpoint with four equal steps,
    /// so the result is smooth in `z` between stored samples.
    fn state_at(&self, z: f64) -> Result<[f64; 3]> {
        let k = self.solution.segment_index(z).ok_or(Error::OutOfDomain { r: f64::NAN, z, t: f64::NAN })?;
        let (z0, mut y) = (self.solution.xs[k], self.solution.ys[k]);
        if z == z0 {
            return Ok(y);
        }
        let mut rhs = axis_rhs(&self.field, self.kind, self.on_axis);
        let h = (z - z0) / 4.0;
        for i in 0..4 {
            y = dopri5_step(&mut rhs, z0 + i as f64 * h, &y, h)?;
        }
        if self.on_axis {
            y[0] = 0.0;
        }
        Ok(y)
    }

    fn derivs_at(&self, z: f64) -> Result<CurveDerivs> {
        let y = self.state_at(z)?;
        if self.on_axis || y[0] < axis_threshold(&self.field) {
            self.derivs_on_axis(z, y)
        } else {
            self.series_off_axis(z, y)
        }
    }

    fn speed_z(&self, z: f64) -> Result<f64> {
        let y = self.state_at(z)?;
        let d = axis_rhs(&self.field, self.kind, self.on_axis)(z, &y)?;
        let r = if self.on_axis { 0.0 } else { y[0] };
        Ok((1.0 + d[0] * d[0] + (r * d[1]).powi(2)).sqrt())
    }

    fn z_nodes(&self) -> Vec<f64> {
        self.solution.xs.clone()
    }
}

/// Frozen-time streamline through `(r0_tilde, z_span.0)`.
pub fn integrate_streamline<F: FlowField>(
    field: F,
    r0_tilde: f64,
    t_frozen: f64,
    z_span: (f64, f64),
    ode_tol: f64,
) -> Result<AxisCurve<F>> {
    AxisCurve::integrate(
        field,
        Seed::new(r0_tilde, 0.0, z_span.0),
        t_frozen,
        CurveKind::Streamline { t: t_frozen },
        z_span.1,
        ode_tol,
    )
}

/// Reparametrizes a unilateral trajectory by axis length.
pub fn axis_length_reparam<F: FlowField>(traj: &Trajectory, field: F, ode_tol: f64) -> Result<AxisCurve<F>> {
    if !traj.is_z_increasing() {
        let (i, y) = traj
            .solution
            .ys
            .windows(2)
            .enumerate()
            .find(|(_, w)| w[1][2] <= w[0][2])
            .map(|(i, w)| (i, w[1]))
            .expect("non-increasing window exists");
        let t = traj.solution.xs[i + 1];
        let v_z = field.eval(y[0].max(0.0), y[2], t).map(|v| v.v_z).unwrap_or(f64::NAN);
        return Err(Error::NotUnilateral { r: y[0], z: y[2], t, v_z });
    }
    let z_end = traj.solution.ys.last().expect("trajectory has samples")[2];
    let seed = Seed::new(traj.seed.r0, traj.seed.theta0, traj.seed.z0);
    AxisCurve::integrate(field, seed, traj.t0, CurveKind::Trajectory, z_end, ode_tol)
}

/// A curve tabulated by arc length.
#[derive(Debug, Clone)]
pub struct ArcCurve<C> {
    curve: C,
    z_nodes: Vec<f64>,
    s_nodes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcSample {
    pub s: f64,
    pub z: f64,
    pub r: f64,
    pub theta: f64,
    pub z_prime: f64,
    pub z_second: f64,
}

/// Builds `s(z)` by adaptive quadrature of `|d_z Phi|`.
pub fn arc_length_reparam<C: AxisLengthCurve>(curve: C) -> Result<ArcCurve<C>> {
    let z_nodes = curve.z_nodes();
    let mut s_nodes = Vec::with_capacity(z_nodes.len());
    s_nodes.push(0.0);
    for w in z_nodes.windows(2) {
        let seg = integrate(|z| checked_speed(&curve, z), w[0], w[1], 1e-14 * (w[1] - w[0]))?;
        s_nodes.push(s_nodes.last().unwrap() + seg);
    }
    Ok(ArcCurve { curve, z_nodes, s_nodes })
}

fn checked_speed<C: AxisLengthCurve>(curve: &C, z: f64) -> Result<f64> {
    let v = curve.speed_z(z)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DegenerateSpeed(z))
    }
}

impl<C: AxisLengthCurve> ArcCurve<C> {
    pub fn curve(&self) -> &C {
        &self.curve
    }

    pub fn length(&self) -> f64 {
        *self.s_nodes.last().unwrap()
    }

    fn node_index(&self, z: f64) -> usize {
        self.z_nodes.partition_point(|&v| v <= z).saturating_sub(1).min(self.z_nodes.len().saturating_sub(2))
    }

    /// Arc length from the curve start to `z`.
    pub fn s_at(&self, z: f64) -> Result<f64> {
        let (a, b) = self.curve.z_range();
        if z < a || z > b {
            return Err(Error::OutOfDomain { r: f64::NAN, z, t: f64::NAN });
        }
        let k = self.node_index(z);
        let z0 = self.z_nodes[k];
        if z == z0 {
            return Ok(self.s_nodes[k]);
        }
        let (part, _) = gk15(&mut |x| checked_speed(&self.curve, x), z0, z)?;
        Ok(self.s_nodes[k] + part)
    }

    /// Inverts `s(z)`.
    pub fn z_at(&self, s: f64) -> Result<f64> {
        if s < 0.0 || s > self.length() * (1.0 + 1e-14) {
            return Err(Error::InsufficientSpan(s));
        }
        let k = self.s_nodes.partition_point(|&v| v <= s).saturating_sub(1).min(self.s_nodes.len() - 2);
        let (lo, hi) = (self.z_nodes[k], self.z_nodes[k + 1]);
        let scale = self.length().max(1.0);
        crate::numerics::monotone_root(
            |z| self.s_at(z),
            |z| checked_speed(&self.curve, z),
            s.min(self.length()),
            lo,
            hi,
            4.0 * f64::EPSILON * scale,
            2.0 * f64::EPSILON * scale,
        )
    }

    /// Embedded Cartesian point at arc length `s`.
    pub fn point(&self, s: f64) -> Result<nalgebra::Vector3<f64>> {
        self.curve.point(self.z_at(s)?)
    }

    /// `z'(s) = |d_z Phi|^{-1}`.
    pub fn z_prime(&self, z: f64) -> Result<f64> {
        Ok(1.0 / checked_speed(&self.curve, z)?)
    }

    /// `z''(s) = -(d_z Phi . d_z^2 Phi) / |d_z Phi|^4`.
    pub fn z_second(&self, z: f64) -> Result<f64> {
        let d = self.curve.derivs_at(z)?;
        Ok(z_second_from(&d))
    }

    pub fn samples(&self) -> Result<Vec<ArcSample>> {
        self.z_nodes
            .iter()
            .zip(&self.s_nodes)
            .map(|(&z, &s)| {
                let d = self.curve.derivs_at(z)?;
                Ok(ArcSample {
                    s,
                    z,
                    r: d.r[0],
                    theta: d.theta[0],
                    z_prime: 1.0 / d.speed_z(),
                    z_second: z_second_from(&d),
                })
            })
            .collect()
    }
}

/// Closed form `-(1+R'^2+(R Theta')^2)^{-2} (R'R'' + R Theta'(R'Theta' + R Theta''))`.
pub fn z_second_from(d: &CurveDerivs) -> f64 {
    let (r, r1, r2) = (d.r[0], d.r[1], d.r[2]);
    let (t1, t2) = (d.theta[1], d.theta[2]);
    let q = 1.0 + r1 * r1 + (r * t1).powi(2);
    -(r1 * r2 + r * t1 * (r1 * t1 + r * t2)) / (q * q)
}

/// Axis-aligned rectangle in the meridian plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub r: (f64, f64),
    pub z: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnilateralReport {
    pub ok: bool,
    pub min_v_z: f64,
    /// `(r, z)` of the smallest sampled `v_z` when not unilateral.
    pub witness: Option<(f64, f64)>,
}

/// Samples `v_z` on an `nr x nz` lattice covering `region` (edges included).
pub fn unilateral_check<F: FlowField>(field: &F, region: Region, t: f64, lattice: (usize, usize)) -> Result<UnilateralReport> {
    let (nr, nz) = (lattice.0.max(2), lattice.1.max(2));
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..nr {
        let r = region.r.0 + (region.r.1 - region.r.0) * i as f64 / (nr - 1) as f64;
        for k in 0..nz {
            let z = region.z.0 + (region.z.1 - region.z.0) * k as f64 / (nz - 1) as f64;
            let v = field.eval(r, z, t)?.v_z;
            if v < best.0 {
                best = (v, r, z);
            }
        }
    }
    let ok = best.0 > 0.0;
    Ok(UnilateralReport { ok, min_v_z: best.0, witness: (!ok).then_some((best.1, best.2)) })
}
