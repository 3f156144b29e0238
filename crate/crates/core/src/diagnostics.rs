//! Material speed derivative, moving-frame residuals, disturbance rates and
//! near-axis indicators.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{acceleration, fd_step, richardson_d1, CylVec, EvenPoly, FieldJet, FlowField, ThirdJet, Waveform};
use crate::frenet::{frame_explicit, FrenetData};
use crate::lagrange::{integrate_trajectory, AxisCurve, CurveKind, PathPoint, Seed};
use crate::numerics::integrate;
use crate::ode::{dopri5, OdeOptions};
use crate::reconstruct::{build_streamtube_map, TubeMap};
use crate::series::Poly3;

/// Thresholds and scale separations for the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub beta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
    /// Swirl-region threshold `|v_theta(x, 0)| > gamma`.
    pub gamma: f64,
    pub residual_tol: f64,
    /// Directional difference step relative to `min(1 / kappa, length scale)`.
    pub fd_step: f64,
    /// Speeds at or below this are treated as stagnant.
    pub speed_floor: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            beta: 10.0,
            eps1: 1e-3,
            eps2: 1e-1,
            delta: 1e-2,
            gamma: 1e-3,
            residual_tol: 1e-5,
            fd_step: 1e-4,
            speed_floor: 1e-8,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("beta", self.beta),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("residual_tol", self.residual_tol),
            ("fd_step", self.fd_step),
            ("speed_floor", self.speed_floor),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
        if !(self.eps1 < self.eps2) {
            return Err(Error::InvalidParameter("eps1 must be below eps2".into()));
        }
        Ok(())
    }

    /// Absolute directional step for a frame of curvature `kappa`.
    pub fn step_for(&self, kappa: f64, length_scale: f64) -> f64 {
        let radius = if kappa > 0.0 { (1.0 / kappa).min(length_scale) } else { length_scale };
        self.fd_step * radius
    }
}

fn cylindrical(x: &Vector3<f64>) -> (f64, f64, f64) {
    (x.x.hypot(x.y), x.y.atan2(x.x), x.z)
}

/// Material acceleration in Cartesian components at a Cartesian point.
pub fn acceleration_cartesian<F: FlowField>(field: &F, x: &Vector3<f64>, t: f64) -> Result<Vector3<f64>> {
    let (r, theta, z) = cylindrical(x);
    Ok(acceleration(field, r, z, t)?.to_cartesian(theta))
}

/// `D_t |u| = A . tau`; with `tau = None` the local direction `u / |u|` is used.
pub fn material_speed_derivative<F: FlowField>(
    field: &F,
    point: &PathPoint,
    tau: Option<Vector3<f64>>,
    speed_floor: f64,
) -> Result<f64> {
    let u = field.eval(point.r, point.z, point.t)?;
    let speed = u.norm();
    if !(speed > speed_floor) {
        return Err(Error::StagnantPoint(speed));
    }
    let a = acceleration(field, point.r, point.z, point.t)?;
    Ok(match tau {
        Some(tau) => a.to_cartesian(point.theta).dot(&tau),
        None => u.dot(&a) / speed,
    })
}

/// Moving-frame Euler identity residuals at one trajectory point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRecord {
    pub s: f64,
    pub z: f64,
    pub t: f64,
    pub kappa: f64,
    pub torsion: f64,
    pub ds_kappa: f64,
    pub speed: f64,
    pub dt_speed: f64,
    /// `(n . grad)(A . tau) - 3 kappa D_t|u| - d_s kappa |u|^2`.
    pub res_r: f64,
    /// `(b . grad)(A . tau) - T kappa |u|^2`.
    pub res_b: f64,
    /// `-(d_t A . n) / |u|`, the residual an unsteady Euler flow leaves in `res_r`.
    pub unsteady_r: f64,
    /// `-(d_t A . b) / |u|`.
    pub unsteady_b: f64,
    pub res_r_corrected: f64,
    pub res_b_corrected: f64,
    /// `max(1, kappa |u|^2, |d_s kappa| |u|^2)`.
    pub scale: f64,
    pub degenerate: bool,
}

impl ResidualRecord {
    pub fn max_abs(&self) -> f64 {
        self.res_r.abs().max(self.res_b.abs())
    }

    pub fn max_abs_corrected(&self) -> f64 {
        self.res_r_corrected.abs().max(self.res_b_corrected.abs())
    }
}

/// Residuals of `3 kappa D_t|u| + d_s kappa |u|^2 = d_rbar D_t|u|` and
/// `T kappa |u|^2 = d_zbar D_t|u|`, differentiating `A . tau` with `tau` and time frozen.
pub fn frame_residuals<F: FlowField>(field: &F, s: f64, point: &PathPoint, frame: &FrenetData, h: f64) -> Result<ResidualRecord> {
    if 1.0 - frame.kappa * h <= 0.5 {
        return Err(Error::StepTooLarge(h));
    }
    let x = point.cartesian();
    let t = point.t;
    let speed = field.eval(point.r, point.z, t)?.norm();
    if !(speed > 0.0) {
        return Err(Error::StagnantPoint(speed));
    }
    let tau = frame.tau;
    let along = |d: Vector3<f64>| richardson_d1(|xi| Ok(acceleration_cartesian(field, &(x + d * xi), t)?.dot(&tau)), 0.0, h);
    let f_n = along(frame.n)?;
    let f_b = along(frame.b)?;
    let dt_speed = acceleration_cartesian(field, &x, t)?.dot(&tau);

    let h_t = fd_step(1, field.length_scale() / speed);
    let dt_a = |d: Vector3<f64>| richardson_d1(|s| Ok(acceleration_cartesian(field, &x, s)?.dot(&d)), t, h_t);
    let (unsteady_r, unsteady_b) = if field.is_steady() { (0.0, 0.0) } else { (-dt_a(frame.n)? / speed, -dt_a(frame.b)? / speed) };

    let u2 = speed * speed;
    let res_r = f_n - 3.0 * frame.kappa * dt_speed - frame.ds_kappa * u2;
    let res_b = f_b - frame.torsion * frame.kappa * u2;
    Ok(ResidualRecord {
        s,
        z: point.z,
        t,
        kappa: frame.kappa,
        torsion: frame.torsion,
        ds_kappa: frame.ds_kappa,
        speed,
        dt_speed,
        res_r,
        res_b,
        unsteady_r,
        unsteady_b,
        res_r_corrected: res_r - unsteady_r,
        res_b_corrected: res_b - unsteady_b,
        scale: 1f64.max(frame.kappa * u2).max(frame.ds_kappa.abs() * u2),
        degenerate: frame.degenerate,
    })
}

/// Rates of departure from a bundle of straight stream tubes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisturbanceRates {
    pub r0_tilde: f64,
    pub z: f64,
    pub t: f64,
    pub l0: f64,
    pub lx: f64,
    pub lt: f64,
}

/// `R~` derivatives made dimensionless: increments in units of the length and
/// time scales, values in units of length.
fn dimensionless(p: &Poly3, length: f64, time: f64) -> Poly3 {
    let mut out = Poly3::ZERO;
    for (k, j, i) in Poly3::exponents() {
        let f = length.powi((j + k) as i32 - 1) * time.powi(i as i32);
        out.set_coeff(k, j, i, p.coeff(k, j, i) * f);
    }
    out
}

/// `L0`, `Lx` and `Lt` at `(r0_tilde, z, t)`; derivatives of `R~^{-1}` come from
/// series reversion of the Taylor table.
pub fn disturbance_rates<M: TubeMap>(map: &M, r0_tilde: f64, z: f64, t: f64) -> Result<DisturbanceRates> {
    map.check_time_resolved()?;
    let sc = map.scales();
    let mut p = dimensionless(&map.taylor(r0_tilde, z, t)?, sc.length, sc.time);
    let d1 = p.deriv(1, 0, 0);
    if !(d1 > 0.0) {
        return Err(Error::DegenerateTube(d1));
    }
    p.set_coeff(0, 0, 0, 0.0);
    let q = p.invert_x();

    let mut lx = 0.0;
    let mut lt = 0.0;
    for (k, j, i) in Poly3::exponents() {
        let (fwd, inv) = (p.deriv(k, j, i).abs(), q.deriv(k, j, i).abs());
        let n = i + j + k;
        if i == 0 && n >= 1 && (j, k) != (0, 1) {
            lx += fwd + inv;
        }
        if (1..=2).contains(&i) {
            if (2..=3).contains(&n) {
                lt += fwd;
            }
            if n <= 2 {
                lt += inv;
            }
        }
    }
    Ok(DisturbanceRates { r0_tilde, z, t, l0: d1 + 1.0 / d1, lx, lt })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorStatus {
    Ok,
    NoSwirl,
    Trivial,
}

/// Near-axis breakdown indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakdownIndicator {
    pub z: f64,
    pub t: f64,
    pub probe_h: f64,
    /// `d_r v_theta(0, z, t) / v_z(0, z, t)`.
    pub theta_prime_axis: f64,
    /// `kappa / probe_h` on the trajectory through `(probe_h, z)`.
    pub curvature_ratio: f64,
    /// Second difference of `A . u / |u|` in `r` over `{0, h, 2h}`.
    pub d2_dt_speed: f64,
    /// `d2_dt_speed / theta_prime_axis^2`; absent without swirl.
    pub match_ratio: Option<f64>,
    pub status: IndicatorStatus,
}

fn speed_rate<F: FlowField>(field: &F, r: f64, z: f64, t: f64) -> Result<f64> {
    let u = field.eval(r, z, t)?;
    Ok(u.dot(&acceleration(field, r, z, t)?) / u.norm())
}

pub fn near_axis_breakdown_indicator<F: FlowField>(field: &F, z: f64, t: f64, probe_h: f64, speed_floor: f64) -> Result<BreakdownIndicator> {
    let j = field.jet(0.0, z, t, false)?;
    let v_z = j.value.v_z;
    if !(v_z > speed_floor) {
        return Err(Error::StagnantAxis(v_z));
    }
    let theta_prime_axis = j.d_r.v_theta / v_z;

    let length = field.length_scale();
    let curve = AxisCurve::integrate(field, Seed::new(probe_h, 0.0, z), t, CurveKind::Trajectory, z + 1e-2 * length, 1e-12)?;
    let frame = frame_explicit(&curve, z)?;
    let curvature_ratio = frame.kappa / probe_h;

    let d = [0.0, probe_h, 2.0 * probe_h].map(|r| speed_rate(field, r, z, t));
    let d2_dt_speed = (d[2].clone()? - 2.0 * d[1].clone()? + d[0].clone()?) / (probe_h * probe_h);

    let swirl_floor = 1e-9 / length;
    let (match_ratio, status) = if theta_prime_axis.abs() <= swirl_floor {
        (None, IndicatorStatus::NoSwirl)
    } else {
        let th2 = theta_prime_axis * theta_prime_axis;
        let status = if d2_dt_speed.abs() <= 1e-6 * th2 * v_z * v_z { IndicatorStatus::Trivial } else { IndicatorStatus::Ok };
        (Some(d2_dt_speed / th2), status)
    };
    Ok(BreakdownIndicator { z, t, probe_h, theta_prime_axis, curvature_ratio, d2_dt_speed, match_ratio, status })
}

/// On-axis swirl mixing and twist-rate indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupIndicator {
    pub z: f64,
    pub t: f64,
    pub theta_prime_axis: f64,
    pub theta_ppp_axis_proxy: f64,
    /// `|d_z d_r v_theta(0, z, t)|`.
    pub swirl_mix_d_zr: f64,
    /// `|d_z d_r^2 v_theta(0, z, t)|`.
    pub swirl_mix_d_zrr: f64,
    /// `|Theta'''| / (|Theta' Theta''| + floor)`; large values mark the cubic-twist regime.
    pub dominance: f64,
}

/// Uses the axis trajectory through `(0, z)` at time `t` and differences
/// `Theta'(z) = d_r v_theta / v_z` along it.
pub fn blowup_indicator<F: FlowField>(field: &F, z: f64, t: f64) -> Result<BlowupIndicator> {
    if !field.has_third_order() {
        return Err(Error::ThirdOrderUnavailable);
    }
    let j = field.jet(0.0, z, t, true)?;
    let third = j.third.ok_or(Error::ThirdOrderUnavailable)?;
    let length = field.length_scale();
    let h = 1e-2 * length;

    let axis_time = |z1: f64| -> Result<f64> {
        if z1 == z {
            return Ok(t);
        }
        let rhs = |zz: f64, y: &[f64; 1]| {
            let v_z = field.eval(0.0, zz, y[0])?.v_z;
            if !(v_z > 0.0) {
                return Err(Error::NotUnilateral { r: 0.0, z: zz, t: y[0], v_z });
            }
            Ok([1.0 / v_z])
        };
        let sol = dopri5(rhs, z, [t], z1, &OdeOptions::with_tol(1e-13))?;
        if let Some(at) = sol.stopped_at {
            return Err(Error::OutOfDomain { r: 0.0, z: at, t });
        }
        Ok(sol.ys.last().unwrap()[0])
    };
    let theta_p = |z1: f64| -> Result<f64> {
        let jj = field.jet(0.0, z1, axis_time(z1)?, false)?;
        Ok(jj.d_r.v_theta / jj.value.v_z)
    };
    let g: Vec<f64> = (-2..=2).map(|k| theta_p(z + k as f64 * h)).collect::<Result<_>>()?;
    let tp = g[2];
    let tpp = (-g[4] + 8.0 * g[3] - 8.0 * g[1] + g[0]) / (12.0 * h);
    let tppp = (-g[4] + 16.0 * g[3] - 30.0 * g[2] + 16.0 * g[1] - g[0]) / (12.0 * h * h);
    let floor = 1e-12 / length.powi(3);
    Ok(BlowupIndicator {
        z,
        t,
        theta_prime_axis: tp,
        theta_ppp_axis_proxy: tppp,
        swirl_mix_d_zr: j.d_rz.v_theta.abs(),
        swirl_mix_d_zrr: third.d_rrz.v_theta.abs(),
        dominance: tppp.abs() / ((tp * tpp).abs() + floor),
    })
}

/// `a = int v_z^2 dA / (int v_z dA)^2` over the disc of the given radius.
pub fn momentum_flux_ratio<F: FlowField>(field: &F, z: f64, t: f64, radius: Option<f64>, quad_tol: f64) -> Result<f64> {
    let radius = radius
        .or_else(|| field.max_radius())
        .ok_or_else(|| Error::InvalidParameter("cross-section radius required for unbounded fields".into()))?;
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let area = std::f64::consts::PI * radius * radius;
    let flux = 2.0 * std::f64::consts::PI * integrate(|r| Ok(field.eval(r, z, t)?.v_z * r), 0.0, radius, quad_tol)?;
    let mom = 2.0 * std::f64::consts::PI * integrate(|r| Ok(field.eval(r, z, t)?.v_z.powi(2) * r), 0.0, radius, quad_tol)?;
    if !(flux.abs() > 1e-14 * area) {
        return Err(Error::ZeroFlux(flux));
    }
    Ok(mom / (flux * flux))
}

/// Inflow-parametrized family
/// `v_r = -beta(t) r / 2`, `v_theta = swirl r`, `v_z = U_s(r) + U_o(r) g(t) + beta(t) z`
/// with `beta = strain g(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflowFamily {
    pub u_s: EvenPoly,
    pub u_o: EvenPoly,
    pub g: Waveform,
    pub strain: f64,
    pub swirl: f64,
}

impl InflowFamily {
    /// Inlet profile `U_s(r) + U_o(r) g(t)`.
    pub fn inlet(&self, r: f64, t: f64) -> f64 {
        self.u_s.derivs(r)[0] + self.u_o.derivs(r)[0] * self.g.value(t)
    }
}

impl FlowField for InflowFamily {
    fn name(&self) -> &str {
        "InflowFamily"
    }

    fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec> {
        if r < 0.0 {
            return Err(Error::NegativeRadius(r));
        }
        let g = self.g.value(t);
        let beta = self.strain * g;
        Ok(CylVec::new(-0.5 * beta * r, self.swirl * r, self.inlet(r, t) + beta * z))
    }

    fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet> {
        let value = self.eval(r, z, t)?;
        let g = self.g.derivs(t);
        let (s, o) = (self.u_s.derivs(r), self.u_o.derivs(r));
        let b = g.map(|x| self.strain * x);
        let vz = |k: usize| s[k] + o[k] * g[0];
        Ok(FieldJet {
            value,
            d_r: CylVec::new(-0.5 * b[0], self.swirl, vz(1)),
            d_z: CylVec::new(0.0, 0.0, b[0]),
            d_t: CylVec::new(-0.5 * b[1] * r, 0.0, o[0] * g[1] + b[1] * z),
            d_rr: CylVec::new(0.0, 0.0, vz(2)),
            d_rz: CylVec::default(),
            d_zz: CylVec::default(),
            d_rt: CylVec::new(-0.5 * b[1], 0.0, o[1] * g[1]),
            d_zt: CylVec::new(0.0, 0.0, b[1]),
            d_tt: CylVec::new(-0.5 * b[2] * r, 0.0, o[0] * g[2] + b[2] * z),
            third: want_third.then(|| ThirdJet { d_rrr: CylVec::new(0.0, 0.0, vz(3)), ..ThirdJet::default() }),
        })
    }

    fn is_steady(&self) -> bool {
        self.g.is_constant()
    }
}

/// Settings for [`pulsatile_monitor`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub r0_nodes: Vec<f64>,
    pub z_span: (f64, f64),
    /// Half-width of the time stencil around each monitored time.
    pub delta_t: f64,
    pub ode_tol: f64,
    /// Seeds with `|v_theta(x, t_0)| <= gamma` are skipped.
    pub gamma: Option<f64>,
    pub thresholds: ThresholdConfig,
}

/// Extremes over the tracked particles at one monitored time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorSample {
    pub t: f64,
    pub max_l0: f64,
    pub max_lx: f64,
    pub max_lt: f64,
    pub max_abs_res: f64,
    pub tracked: usize,
    pub skipped: usize,
}

fn skippable(e: &Error) -> bool {
    matches!(e, Error::LeftDomain { .. } | Error::OutOfDomain { .. } | Error::OutsideTubeRange { .. })
}

/// Tracks seeds released at `t_grid[0]` and records, at each monitored time, the
/// largest disturbance rates and frame residuals along their paths.
pub fn pulsatile_monitor(family: &InflowFamily, seeds: &[Seed], t_grid: &[f64], cfg: &MonitorConfig) -> Result<Vec<MonitorSample>> {
    let Some(&t_start) = t_grid.first() else {
        return Ok(Vec::new());
    };
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("t grid must be strictly increasing".into()));
    }
    let active: Vec<Seed> = seeds
        .iter()
        .copied()
        .filter(|s| match cfg.gamma {
            Some(gamma) => family.eval(s.r0, s.z0, t_start).map(|u| u.v_theta.abs() > gamma).unwrap_or(false),
            None => true,
        })
        .collect();
    let filtered = seeds.len() - active.len();
    let length = family.length_scale();

    t_grid
        .par_iter()
        .map(|&t| {
            let nodes = [t - cfg.delta_t, t, t + cfg.delta_t];
            let map = build_streamtube_map(family, &cfg.r0_nodes, cfg.z_span, &nodes, cfg.ode_tol)?;
            let mut sample = MonitorSample { t, max_l0: 0.0, max_lx: 0.0, max_lt: 0.0, max_abs_res: 0.0, tracked: 0, skipped: filtered };
            for seed in &active {
                let step = || -> Result<(f64, f64, f64, f64)> {
                    let p = if t == t_start {
                        PathPoint { t, r: seed.r0, theta: seed.theta0, z: seed.z0 }
                    } else {
                        let traj = integrate_trajectory(family, *seed, (t_start, t), cfg.ode_tol)?;
                        traj.complete()?;
                        traj.at(t).ok_or(Error::LeftDomain { t })?
                    };
                    let r0 = map.invert(p.r, p.z, t)?;
                    let rates = disturbance_rates(&map, r0, p.z, t)?;
                    let z_end = (p.z + 0.05 * (cfg.z_span.1 - cfg.z_span.0)).min(cfg.z_span.1);
                    if !(z_end > p.z) {
                        return Err(Error::OutOfDomain { r: p.r, z: p.z, t });
                    }
                    let curve = AxisCurve::integrate(family, Seed::new(p.r, p.theta, p.z), t, CurveKind::Trajectory, z_end, cfg.ode_tol)?;
                    let frame = frame_explicit(&curve, p.z)?;
                    let h = cfg.thresholds.step_for(frame.kappa, length);
                    let res = frame_residuals(family, 0.0, &p, &frame, h)?;
                    Ok((rates.l0, rates.lx, rates.lt, res.max_abs()))
                };
                match step() {
                    Ok((l0, lx, lt, res)) => {
                        sample.max_l0 = sample.max_l0.max(l0);
                        sample.max_lx = sample.max_lx.max(lx);
                        sample.max_lt = sample.max_lt.max(lt);
                        sample.max_abs_res = sample.max_abs_res.max(res);
                        sample.tracked += 1;
                    }
                    Err(e) if skippable(&e) => sample.skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(sample)
        })
        .collect()
}
