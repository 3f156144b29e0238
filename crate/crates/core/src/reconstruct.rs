//! Stream-tube maps and the velocity reconstructions built on them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{axis_threshold, FlowField};
use crate::lagrange::{integrate_streamline, AxisCurve, AxisLengthCurve};
use crate::numerics::{fornberg_weights, integrate, monotone_root, nearest_window, SplineAxis};
use crate::ode::{dopri5, OdeOptions};
use crate::series::Poly3;

/// Reference scales used to make derivative sums dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scales {
    pub length: f64,
    pub time: f64,
    pub u_ref: f64,
}

/// Anything that can supply the local Taylor table of `R~(r0, z, t)`.
pub trait TubeMap {
    /// Degree-3 Taylor polynomial of `R~` about `(r0, z, t)` in the increments
    /// `(d r0, d z, d t)`.
    fn taylor(&self, r0: f64, z: f64, t: f64) -> Result<Poly3>;

    fn scales(&self) -> Scales;

    /// Errors when time derivatives cannot be resolved.
    fn check_time_resolved(&self) -> Result<()> {
        Ok(())
    }
}

impl<M: TubeMap + ?Sized> TubeMap for &M {
    fn taylor(&self, r0: f64, z: f64, t: f64) -> Result<Poly3> {
        (**self).taylor(r0, z, t)
    }
    fn scales(&self) -> Scales {
        (**self).scales()
    }
    fn check_time_resolved(&self) -> Result<()> {
        (**self).check_time_resolved()
    }
}

/// A map given in closed form through its Taylor tables.
pub struct PolyTubeMap<G> {
    pub table: G,
    pub scales: Scales,
}

impl<G: Fn(f64, f64, f64) -> Poly3> TubeMap for PolyTubeMap<G> {
    fn taylor(&self, r0: f64, z: f64, t: f64) -> Result<Poly3> {
        Ok((self.table)(r0, z, t))
    }
    fn scales(&self) -> Scales {
        self.scales
    }
}

/// Tabulated family of frozen-time streamlines `R~(r0, z, t)` seeded on the inlet plane.
#[derive(Debug, Clone)]
pub struct StreamTubeMap<F> {
    r0_nodes: Vec<f64>,
    t_nodes: Vec<f64>,
    z_span: (f64, f64),
    /// Indexed `[ti * nr + ri]`.
    curves: Vec<AxisCurve<F>>,
    spline: SplineAxis,
    steady: bool,
    scales: Scales,
    field_name: String,
}

/// Inlet radii `r_max * (x + x^2) / 2` with `x = i / (n - 1)`, denser near the axis.
pub fn clustered_nodes(n: usize, r_max: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            r_max * 0.5 * (x + x * x)
        })
        .collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

/// Integrates one streamline per `(r0, t)` node from `z_span.0` to `z_span.1`.
pub fn build_streamtube_map<F>(field: F, r0_nodes: &[f64], z_span: (f64, f64), t_nodes: &[f64], ode_tol: f64) -> Result<StreamTubeMap<F>>
where
    F: FlowField + Clone + Send + Sync,
{
    if r0_nodes.len() < 5 || r0_nodes[0] != 0.0 || !strictly_increasing(r0_nodes) {
        return Err(Error::InvalidParameter(
            "r0 nodes must start at 0, increase strictly and number at least 5".into(),
        ));
    }
    if t_nodes.is_empty() || !strictly_increasing(t_nodes) {
        return Err(Error::InvalidParameter("t nodes must be non-empty and strictly increasing".into()));
    }
    let nr = r0_nodes.len();
    let jobs: Vec<(usize, usize)> = (0..t_nodes.len()).flat_map(|ti| (0..nr).map(move |ri| (ti, ri))).collect();
    let curves = jobs
        .par_iter()
        .map(|&(ti, ri)| {
            let c = integrate_streamline(field.clone(), r0_nodes[ri], t_nodes[ti], z_span, ode_tol)?;
            match &c.exit {
                Some(e) => Err(e.clone()),
                None => Ok(c),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let r_max = r0_nodes[nr - 1];
    let mut u_ref = 0.0;
    for &t in t_nodes {
        let flux = integrate(|r| Ok(field.eval(r, z_span.0, t)?.v_z * r), 0.0, r_max, 1e-12 * r_max * r_max)?;
        u_ref += 2.0 * flux / (r_max * r_max) / t_nodes.len() as f64;
    }
    if !(u_ref > 0.0) {
        return Err(Error::ZeroFlux(u_ref));
    }
    let map = StreamTubeMap {
        r0_nodes: r0_nodes.to_vec(),
        t_nodes: t_nodes.to_vec(),
        z_span,
        curves,
        spline: SplineAxis::new(r0_nodes.to_vec())?,
        steady: field.is_steady(),
        scales: Scales { length: r_max, time: r_max / u_ref, u_ref },
        field_name: field.name().to_string(),
    };
    map.check_ordering()?;
    Ok(map)
}

impl<F: FlowField> StreamTubeMap<F> {
    pub fn r0_nodes(&self) -> &[f64] {
        &self.r0_nodes
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn z_span(&self) -> (f64, f64) {
        self.z_span
    }

    /// Inlet plane; `R~(r0, z_in, t) = r0`.
    pub fn z_in(&self) -> f64 {
        self.z_span.0
    }

    pub fn field_name(&self) -> &str {
        &self.field_name
    }

    pub fn curve(&self, ti: usize, ri: usize) -> &AxisCurve<F> {
        &self.curves[ti * self.r0_nodes.len() + ri]
    }

    fn check_ordering(&self) -> Result<()> {
        let nr = self.r0_nodes.len();
        for ti in 0..self.t_nodes.len() {
            for k in 0..=16 {
                let z = self.z_span.0 + (self.z_span.1 - self.z_span.0) * k as f64 / 16.0;
                let mut prev = -1.0;
                for ri in 0..nr {
                    let v = self.curve(ti, ri).dense_state(z).map(|y| y[0]).unwrap_or(f64::NAN);
                    if !(v > prev) {
                        return Err(Error::SeedSpacingTooCoarse { r0: self.r0_nodes[ri], z, value: v - prev });
                    }
                    prev = v;
                }
                for &r0 in &self.r0_nodes {
                    let d = self.taylor_at(r0, z, self.t_nodes[ti])?.deriv(1, 0, 0);
                    if !(d > 0.0) {
                        return Err(Error::SeedSpacingTooCoarse { r0, z, value: d });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_z(&self, z: f64) -> Result<()> {
        if z < self.z_span.0 || z > self.z_span.1 {
            return Err(Error::OutOfDomain { r: f64::NAN, z, t: f64::NAN });
        }
        Ok(())
    }

    /// `(node index, weights for d_t^0 .. d_t^2)` over the time window for `t`.
    fn time_weights(&self, t: f64) -> Result<Vec<(usize, [f64; 3])>> {
        let nt = self.t_nodes.len();
        if nt == 1 || self.steady {
            let i = nearest_window(&self.t_nodes, t, 1).start;
            return Ok(vec![(i, [1.0, 0.0, 0.0])]);
        }
        let (lo, hi) = (self.t_nodes[0], self.t_nodes[nt - 1]);
        if t < lo || t > hi {
            return Err(Error::OutOfDomain { r: f64::NAN, z: f64::NAN, t });
        }
        let win = nearest_window(&self.t_nodes, t, nt.min(4));
        let order = (win.len() - 1).min(2);
        let w = fornberg_weights(t, &self.t_nodes[win.clone()], order);
        Ok(win
            .enumerate()
            .map(|(m, i)| (i, std::array::from_fn(|o| if o <= order { w[o][m] } else { 0.0 })))
            .collect())
    }

    /// `R~` and its `z`-derivatives at a node curve.
    fn node_series(&self, ti: usize, ri: usize, z: f64) -> Result<[f64; 4]> {
        Ok(self.curve(ti, ri).derivs_at(z)?.r)
    }

    fn taylor_at(&self, r0: f64, z: f64, t: f64) -> Result<Poly3> {
        self.check_z(z)?;
        let r_max = self.r0_nodes[self.r0_nodes.len() - 1];
        if r0 < 0.0 || r0 > r_max * (1.0 + 1e-12) {
            return Err(Error::OutsideTubeRange { r: r0, z, r_max });
        }
        // odd reflection across the axis gives centred stencils near r0 = 0
        let nr = self.r0_nodes.len();
        let ext: Vec<(f64, usize, f64)> = (1..nr)
            .rev()
            .map(|i| (-self.r0_nodes[i], i, -1.0))
            .chain((0..nr).map(|i| (self.r0_nodes[i], i, 1.0)))
            .collect();
        let xs: Vec<f64> = ext.iter().map(|e| e.0).collect();
        let win = nearest_window(&xs, r0, 5);
        let wr = fornberg_weights(r0, &xs[win.clone()], 3);
        let tw = self.time_weights(t)?;

        let mut d = [[[0.0; 4]; 4]; 3];
        for (ti, wt) in &tw {
            for (m, e) in ext[win.clone()].iter().enumerate() {
                let s = self.node_series(*ti, e.1, z)?;
                for i in 0..3 {
                    for j in 0..4 {
                        for k in 0..4 - j {
                            if i + j + k <= 3 {
                                d[i][j][k] += wt[i] * wr[k][m] * e.2 * s[j];
                            }
                        }
                    }
                }
            }
        }
        let mut p = Poly3::ZERO;
        for (k, j, i) in Poly3::exponents() {
            if i <= 2 {
                p.set_deriv(k, j, i, d[i][j][k]);
            }
        }
        Ok(p)
    }

    fn node_values(&self, z: f64, t: f64) -> Result<Vec<f64>> {
        let tw = self.time_weights(t)?;
        let nr = self.r0_nodes.len();
        let mut v = vec![0.0; nr];
        for (ti, wt) in &tw {
            for (ri, slot) in v.iter_mut().enumerate() {
                *slot += wt[0] * self.curve(*ti, ri).state_at(z)?[0];
            }
        }
        Ok(v)
    }

    /// Solves `R~(r0, z, t) = r` on the cubic spline through the node values.
    pub fn invert(&self, r: f64, z: f64, t: f64) -> Result<f64> {
        self.check_z(z)?;
        let v = self.node_values(z, t)?;
        let r_max = v[v.len() - 1];
        if r < 0.0 || r > r_max * (1.0 + 1e-12) {
            return Err(Error::OutsideTubeRange { r, z, r_max });
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let dot = |w: Vec<f64>| w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let r0_max = self.r0_nodes[self.r0_nodes.len() - 1];
        monotone_root(
            |x| Ok(dot(self.spline.weights(x, 0))),
            |x| Ok(dot(self.spline.weights(x, 1))),
            r.min(r_max),
            0.0,
            r0_max,
            1e-15 * r0_max,
            1e-13 * r_max,
        )
    }
}

impl<F: FlowField> TubeMap for StreamTubeMap<F> {
    fn taylor(&self, r0: f64, z: f64, t: f64) -> Result<Poly3> {
        self.taylor_at(r0, z, t)
    }

    fn scales(&self) -> Scales {
        self.scales
    }

    fn check_time_resolved(&self) -> Result<()> {
        if !self.steady && self.t_nodes.len() < 3 {
            return Err(Error::InsufficientTimeNodes { needed: 3, have: self.t_nodes.len() });
        }
        Ok(())
    }
}

/// `rho = 2 r0 / d_r0 (R~^2)`, with the axis limit `1 / (d_r0 R~)^2`.
pub fn inflow_propagation<M: TubeMap>(map: &M, r0_tilde: f64, z: f64, t: f64) -> Result<f64> {
    let p = map.taylor(r0_tilde, z, t)?;
    rho_from(&p, r0_tilde, map.scales().length)
}

fn rho_from(p: &Poly3, r0: f64, length: f64) -> Result<f64> {
    let (r, dr) = (p.deriv(0, 0, 0), p.deriv(1, 0, 0));
    if r0 <= 1e-8 * length {
        if !(dr > 0.0) {
            return Err(Error::DegenerateTube(dr));
        }
        return Ok(1.0 / (dr * dr));
    }
    let d_sq = 2.0 * r * dr;
    if !(d_sq > 0.0) {
        return Err(Error::DegenerateTube(d_sq));
    }
    Ok(2.0 * r0 / d_sq)
}

/// Solves `R~(r0, z, t) = r` for `r0`.
pub fn invert_streamtube<F: FlowField>(map: &StreamTubeMap<F>, r: f64, z: f64, t: f64) -> Result<f64> {
    map.invert(r, z, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructedVelocity {
    pub v_z: f64,
    pub v_r: f64,
    pub r0_tilde: f64,
    pub rho: f64,
}

/// `v_z = rho U_in(r0)` and `v_r = d_z R~ v_z` at the inlet radius `r0 = R~^{-1}(r)`.
pub fn reconstruct_velocity<F, U>(map: &StreamTubeMap<F>, u_in: U, r: f64, z: f64, t: f64) -> Result<ReconstructedVelocity>
where
    F: FlowField,
    U: Fn(f64, f64) -> f64,
{
    let r0 = map.invert(r, z, t)?;
    let p = map.taylor(r0, z, t)?;
    let rho = rho_from(&p, r0, map.scales.length)?;
    let v_z = rho * u_in(r0, t);
    Ok(ReconstructedVelocity { v_z, v_r: p.deriv(0, 1, 0) * v_z, r0_tilde: r0, rho })
}

fn radial_rate<F: FlowField>(field: &F, r: f64, z: f64, t: f64, on_axis: bool) -> Result<(f64, f64, f64)> {
    if on_axis || r < axis_threshold(field) {
        let j = field.jet(r.max(0.0), z, t, false)?;
        Ok((if on_axis { 0.0 } else { j.value.v_r }, j.value.v_z, j.d_r.v_r))
    } else {
        let v = field.eval(r, z, t)?;
        Ok((v.v_r, v.v_z, v.v_r / r))
    }
}

/// Swirl carried along the path from `(r0, z0)` at time 0:
/// `v_theta(r0, z0, 0) exp(-int_0^t v_r / R* dt')`.
pub fn vtheta_gronwall<F: FlowField>(field: &F, r0: f64, z0: f64, t: f64, ode_tol: f64) -> Result<f64> {
    let on_axis = r0 < axis_threshold(field);
    let v0 = field.eval(r0, z0, 0.0)?.v_theta;
    let rhs = |s: f64, y: &[f64; 3]| {
        let (v_r, v_z, rate) = radial_rate(field, y[0], y[1], s, on_axis)?;
        Ok([v_r, v_z, -rate])
    };
    let sol = dopri5(rhs, 0.0, [if on_axis { 0.0 } else { r0 }, z0, 0.0], t, &OdeOptions::with_tol(ode_tol))?;
    if let Some(at) = sol.stopped_at {
        return Err(Error::LeftDomain { t: at });
    }
    Ok(v0 * sol.ys.last().unwrap()[2].exp())
}

/// Meridian Lagrangian deformation `D phi_2D` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deformation2D {
    pub t: f64,
    pub dr_dr0: f64,
    pub dr_dz0: f64,
    pub dz_dr0: f64,
    pub dz_dz0: f64,
    pub det: f64,
    /// `exp(-int_0^t v_r / R* dt')`.
    pub det_law: f64,
}

/// Integrates the variational system of the meridian flow alongside the path.
pub fn deformation_2d<F: FlowField>(field: &F, r0: f64, z0: f64, t: f64, ode_tol: f64) -> Result<Deformation2D> {
    let on_axis = r0 < axis_threshold(field);
    let rhs = |s: f64, y: &[f64; 7]| {
        let r = if on_axis { 0.0 } else { y[0] };
        let j = field.jet(r, y[1], s, false)?;
        let (v_r, v_z, rate) = radial_rate(field, r, y[1], s, on_axis)?;
        let (a, b, c, d) = (y[2], y[3], y[4], y[5]);
        let (jrr, jrz, jzr, jzz) = (j.d_r.v_r, j.d_z.v_r, j.d_r.v_z, j.d_z.v_z);
        Ok([
            v_r,
            v_z,
            jrr * a + jrz * c,
            jrr * b + jrz * d,
            jzr * a + jzz * c,
            jzr * b + jzz * d,
            -rate,
        ])
    };
    let y0 = [if on_axis { 0.0 } else { r0 }, z0, 1.0, 0.0, 0.0, 1.0, 0.0];
    let sol = dopri5(rhs, 0.0, y0, t, &OdeOptions::with_tol(ode_tol))?;
    if let Some(at) = sol.stopped_at {
        return Err(Error::LeftDomain { t: at });
    }
    let y = sol.ys.last().unwrap();
    Ok(Deformation2D {
        t,
        dr_dr0: y[2],
        dr_dz0: y[3],
        dz_dr0: y[4],
        dz_dz0: y[5],
        det: y[2] * y[5] - y[3] * y[4],
        det_law: y[6].exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fixture, Waveform};

    fn stagnation() -> Fixture {
        Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 }
    }

    #[test]
    fn stagnation_map_closed_form() {
        let f = stagnation();
        let map = build_streamtube_map(&f, &clustered_nodes(11, 1.0), (1.0, 2.0), &[0.0, 0.5, 1.0], 1e-12).unwrap();
        for r0 in [0.0, 0.05, 0.33, 0.8, 1.0] {
            let p = map.taylor(r0, 2.0, 0.5).unwrap();
            assert!((p.deriv(0, 0, 0) - r0 / 2f64.sqrt()).abs() < 1e-11);
            assert!((p.deriv(1, 0, 0) - 0.5f64.sqrt()).abs() < 1e-10);
            // d_z R = -r0 z^{-3/2} / 2
            assert!((p.deriv(0, 1, 0) + 0.5 * r0 * 2f64.powf(-1.5)).abs() < 1e-10);
            assert!(p.deriv(2, 0, 0).abs() < 1e-9);
            assert!(p.deriv(0, 0, 1).abs() < 1e-9);
            let rho = inflow_propagation(&map, r0, 2.0, 0.5).unwrap();
            assert!((rho - 2.0).abs() < 1e-9, "{r0}: {rho}");
        }
        assert!((map.invert(0.5, 2.0, 0.0).unwrap() - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(map.invert(0.0, 1.5, 0.0).unwrap(), 0.0);
        assert!(matches!(map.invert(0.9, 2.0, 0.0), Err(Error::OutsideTubeRange { .. })));
    }

    #[test]
    fn inversion_hits_nodes() {
        let f = Fixture::Poiseuille { p_s: 4.0, nu: 1.0, ell: 1.0, radius: 1.0 };
        let nodes = clustered_nodes(9, 0.9);
        let map = build_streamtube_map(&f, &nodes, (0.0, 1.0), &[0.0], 1e-10).unwrap();
        for &r0 in &nodes {
            assert!((map.invert(r0, 0.7, 0.0).unwrap() - r0).abs() < 1e-12);
        }
        assert!((map.invert(0.3, 0.4, 0.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_round_trip() {
        let f = stagnation();
        let map = build_streamtube_map(&f, &clustered_nodes(11, 1.0), (1.0, 2.0), &[0.0], 1e-12).unwrap();
        let v = reconstruct_velocity(&map, |_, _| 1.0, 0.5, 2.0, 0.0).unwrap();
        assert!((v.v_z - 2.0).abs() < 1e-9);
        assert!((v.v_r + 0.25).abs() < 1e-9);
    }

    #[test]
    fn time_nodes_required_for_unsteady_rates() {
        let f = Fixture::StraightTube { g: Waveform::Sinusoid { mean: 2.0, amplitude: 1.0, n: 1.0 } };
        let map = build_streamtube_map(&f, &clustered_nodes(6, 1.0), (0.0, 1.0), &[0.0, 1.0], 1e-10).unwrap();
        assert_eq!(map.check_time_resolved(), Err(Error::InsufficientTimeNodes { needed: 3, have: 2 }));
        let steady = Fixture::RigidHelixFlow { omega: 1.0, w: 1.0 };
        let map = build_streamtube_map(&steady, &clustered_nodes(6, 1.0), (0.0, 1.0), &[0.0], 1e-10).unwrap();
        assert!(map.check_time_resolved().is_ok());
    }

    #[test]
    fn builder_rejects_bad_nodes() {
        let f = stagnation();
        assert!(build_streamtube_map(&f, &[0.1, 0.2, 0.3, 0.4, 0.5], (1.0, 2.0), &[0.0], 1e-8).is_err());
        assert!(build_streamtube_map(&f, &[0.0, 0.2, 0.1, 0.4, 0.5], (1.0, 2.0), &[0.0], 1e-8).is_err());
        assert!(matches!(
            build_streamtube_map(&f, &clustered_nodes(6, 1.0), (-1.0, 1.0), &[0.0], 1e-8),
            Err(Error::NotUnilateral { .. })
        ));
    }

    #[test]
    fn gronwall_swirl_transport() {
        let f = stagnation();
        let v = vtheta_gronwall(&f, 0.5, 1.0, 1.0, 1e-12).unwrap();
        assert!((v - 0.5 * 0.5f64.exp()).abs() < 1e-10);
        let helix = Fixture::RigidHelixFlow { omega: 2.0, w: 1.0 };
        assert!((vtheta_gronwall(&helix, 0.4, 0.0, 3.0, 1e-10).unwrap() - 0.8).abs() < 1e-14);
        let tube = Fixture::StraightTube { g: Waveform::Const { value: 1.0 } };
        assert_eq!(vtheta_gronwall(&tube, 0.4, 0.0, 1.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn stagnation_deformation() {
        let f = stagnation();
        let d = deformation_2d(&f, 0.5, 1.0, 0.5, 1e-12).unwrap();
        assert!((d.dr_dr0 - (-0.25f64).exp()).abs() < 1e-10);
        assert!((d.dz_dz0 - 0.5f64.exp()).abs() < 1e-10);
        assert!(d.dr_dz0.abs() < 1e-14 && d.dz_dr0.abs() < 1e-14);
        assert!((d.det - 0.25f64.exp()).abs() < 1e-10);
        assert!((d.det_law - 0.25f64.exp()).abs() < 1e-10);
        let d0 = deformation_2d(&f, 0.5, 1.0, 0.0, 1e-12).unwrap();
        assert_eq!((d0.det, d0.dr_dr0, d0.dz_dz0), (1.0, 1.0, 1.0));
    }

    #[test]
    fn shear_has_unit_determinant() {
        let f = Fixture::Poiseuille { p_s: 4.0, nu: 1.0, ell: 1.0, radius: 1.0 };
        let d = deformation_2d(&f, 0.5, 0.0, 2.0, 1e-10).unwrap();
        assert!((d.det - 1.0).abs() < 1e-12);
        // shear makes the off-diagonal entry grow linearly
        assert!((d.dz_dr0 + 2.0 * 0.5 * 2.0).abs() < 1e-9);
    }
}
