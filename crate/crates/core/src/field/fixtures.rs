//! Closed-form fixture fields.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_radius, CylVec, FieldJet, FlowField, GridField, ThirdJet, Womersley};
use crate::error::{Error, Result};

/// Scalar time signal `g(t)` with three derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    Const { value: f64 },
    Ramp { start: f64, slope: f64 },
    Sinusoid { mean: f64, amplitude: f64, n: f64 },
    /// Smooth pulses `base + amplitude * sum_j exp(-((t - t_j) / width)^2)`.
    #[serde(alias = "spike-train")]
    SpikeTrain { base: f64, amplitude: f64, width: f64, times: Vec<f64> },
}

impl Waveform {
    /// `[g, g', g'', g''']` at `t`.
    pub fn derivs(&self, t: f64) -> [f64; 4] {
        match self {
            Waveform::Const { value } => [*value, 0.0, 0.0, 0.0],
            Waveform::Ramp { start, slope } => [start + slope * t, *slope, 0.0, 0.0],
            Waveform::Sinusoid { mean, amplitude, n } => {
                let (s, c) = (n * t).sin_cos();
                [
                    mean + amplitude * s,
                    amplitude * n * c,
                    -amplitude * n * n * s,
                    -amplitude * n * n * n * c,
                ]
            }
            Waveform::SpikeTrain { base, amplitude, width, times } => {
                let mut out = [*base, 0.0, 0.0, 0.0];
                for tj in times {
                    let x = (t - tj) / width;
                    let e = amplitude * (-x * x).exp();
                    out[0] += e;
                    out[1] += -2.0 * x * e / width;
                    out[2] += (4.0 * x * x - 2.0) * e / (width * width);
                    out[3] += (-8.0 * x * x * x + 12.0 * x) * e / (width * width * width);
                }
                out
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivs(t)[0]
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Waveform::Const { .. } => true,
            Waveform::Ramp { slope, .. } => *slope == 0.0,
            Waveform::Sinusoid { amplitude, n, .. } => *amplitude == 0.0 || *n == 0.0,
            Waveform::SpikeTrain { amplitude, times, .. } => *amplitude == 0.0 || times.is_empty(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Waveform::SpikeTrain { width, times, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter(format!("spike width must be positive, got {width}")));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParameter("spike-train times must be strictly increasing".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Even polynomial profile `f(r) = sum_k c_k r^(2k)`; smooth across the axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvenPoly {
    pub coeffs: Vec<f64>,
}

impl EvenPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `[f, f', f'', f''']` at `r`.
    pub fn derivs(&self, r: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, &c) in self.coeffs.iter().enumerate() {
            let p = 2 * k as i32;
            // d^j r^p = p (p-1) ... (p-j+1) r^(p-j)
            let mut fall = 1.0;
            for (j, slot) in out.iter_mut().enumerate() {
                let e = p - j as i32;
                if fall == 0.0 {
                    break;
                }
                *slot += c * fall * if e >= 0 { r.powi(e) } else { 0.0 };
                fall *= e as f64;
            }
        }
        out
    }
}

/// The built-in fields.
#[derive(Debug, Clone)]
pub enum Fixture {
    /// `u = (0, 0, g(t))`.
    StraightTube { g: Waveform },
    /// `u = (0, 0, f(r))`, steady with constant pressure.
    ShearFlow { profile: EvenPoly },
    /// `v_theta = omega r`, `v_z = w`.
    RigidHelixFlow { omega: f64, w: f64 },
    /// `v_r = -alpha r / 2`, `v_z = alpha z`, `v_theta = omega0 e^(alpha t) r`.
    StagnationSwirl { alpha: f64, omega0: f64 },
    /// `v_z = p_s / (4 nu ell) (radius^2 - r^2)`.
    Poiseuille { p_s: f64, nu: f64, ell: f64, radius: f64 },
    Womersley(Womersley),
    Gridded(Arc<GridField>),
}

pub const FIXTURE_NAMES: [&str; 7] = [
    "StraightTube",
    "ShearFlow",
    "RigidHelixFlow",
    "StagnationSwirl",
    "Poiseuille",
    "Womersley",
    "Gridded",
];

impl Fixture {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Fixture::StraightTube { g } => g.validate(),
            Fixture::Poiseuille { nu, ell, radius, .. } => {
                positive("nu", *nu)?;
                positive("ell", *ell)?;
                positive("radius", *radius)
            }
            Fixture::Womersley(w) => w.validate(),
            _ => Ok(()),
        }
    }

    fn domain_check(&self, r: f64, z: f64, t: f64) -> Result<()> {
        check_radius(r)?;
        if let Some(rmax) = self.max_radius() {
            if r > rmax * (1.0 + 1e-12) {
                return Err(Error::OutOfDomain { r, z, t });
            }
        }
        Ok(())
    }
}

impl FlowField for Fixture {
    fn name(&self) -> &str {
        match self {
            Fixture::StraightTube { .. } => FIXTURE_NAMES[0],
            Fixture::ShearFlow { .. } => FIXTURE_NAMES[1],
            Fixture::RigidHelixFlow { .. } => FIXTURE_NAMES[2],
            Fixture::StagnationSwirl { .. } => FIXTURE_NAMES[3],
            Fixture::Poiseuille { .. } => FIXTURE_NAMES[4],
            Fixture::Womersley(_) => FIXTURE_NAMES[5],
            Fixture::Gridded(_) => FIXTURE_NAMES[6],
        }
    }

    fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec> {
        if let Fixture::Gridded(g) = self {
            return g.eval(r, z, t);
        }
        self.domain_check(r, z, t)?;
        Ok(match self {
            Fixture::StraightTube { g } => CylVec::new(0.0, 0.0, g.value(t)),
            Fixture::ShearFlow { profile } => CylVec::new(0.0, 0.0, profile.derivs(r)[0]),
            Fixture::RigidHelixFlow { omega, w } => CylVec::new(0.0, omega * r, *w),
            Fixture::StagnationSwirl { alpha, omega0 } => {
                CylVec::new(-0.5 * alpha * r, omega0 * (alpha * t).exp() * r, alpha * z)
            }
            Fixture::Poiseuille { p_s, nu, ell, radius } => {
                CylVec::new(0.0, 0.0, p_s / (4.0 * nu * ell) * (radius * radius - r * r))
            }
            Fixture::Womersley(w) => CylVec::new(0.0, 0.0, w.axial(r, t, 0, 0)),
            Fixture::Gridded(_) => unreachable!(),
        })
    }

    fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet> {
        if let Fixture::Gridded(g) = self {
            return g.jet(r, z, t, want_third);
        }
        self.domain_check(r, z, t)?;
        let z3 = |v_z: f64| CylVec::new(0.0, 0.0, v_z);
        let mut j = FieldJet { value: self.eval(r, z, t)?, ..FieldJet::default() };
        let mut third = ThirdJet::default();
        match self {
            Fixture::StraightTube { g } => {
                let d = g.derivs(t);
                j.d_t = z3(d[1]);
                j.d_tt = z3(d[2]);
            }
            Fixture::ShearFlow { profile } => {
                let d = profile.derivs(r);
                j.d_r = z3(d[1]);
                j.d_rr = z3(d[2]);
                third.d_rrr = z3(d[3]);
            }
            Fixture::RigidHelixFlow { omega, .. } => {
                j.d_r = CylVec::new(0.0, *omega, 0.0);
            }
            Fixture::StagnationSwirl { alpha, omega0 } => {
                let w = omega0 * (alpha * t).exp();
                j.d_r = CylVec::new(-0.5 * alpha, w, 0.0);
                j.d_z = z3(*alpha);
                j.d_t = CylVec::new(0.0, alpha * w * r, 0.0);
                j.d_rt = CylVec::new(0.0, alpha * w, 0.0);
                j.d_tt = CylVec::new(0.0, alpha * alpha * w * r, 0.0);
            }
            Fixture::Poiseuille { p_s, nu, ell, .. } => {
                let c = p_s / (4.0 * nu * ell);
                j.d_r = z3(-2.0 * c * r);
                j.d_rr = z3(-2.0 * c);
            }
            Fixture::Womersley(w) => {
                j.d_r = z3(w.axial(r, t, 1, 0));
                j.d_t = z3(w.axial(r, t, 0, 1));
                j.d_rr = z3(w.axial(r, t, 2, 0));
                j.d_rt = z3(w.axial(r, t, 1, 1));
                j.d_tt = z3(w.axial(r, t, 0, 2));
                third.d_rrr = z3(w.axial(r, t, 3, 0));
            }
            Fixture::Gridded(_) => unreachable!(),
        }
        if want_third {
            j.third = Some(third);
        }
        Ok(j)
    }

    fn length_scale(&self) -> f64 {
        match self {
            Fixture::Poiseuille { radius, .. } => *radius,
            Fixture::Womersley(w) => w.radius,
            Fixture::Gridded(g) => g.length_scale(),
            _ => 1.0,
        }
    }

    fn is_steady(&self) -> bool {
        match self {
            Fixture::StraightTube { g } => g.is_constant(),
            Fixture::ShearFlow { .. } | Fixture::RigidHelixFlow { .. } | Fixture::Poiseuille { .. } => true,
            Fixture::StagnationSwirl { alpha, omega0 } => *omega0 == 0.0 || *alpha == 0.0,
            Fixture::Womersley(w) => w.n == 0.0 || w.p_o == 0.0,
            Fixture::Gridded(g) => g.is_steady(),
        }
    }

    fn is_euler(&self) -> bool {
        matches!(
            self,
            Fixture::StraightTube { .. }
                | Fixture::ShearFlow { .. }
                | Fixture::RigidHelixFlow { .. }
                | Fixture::StagnationSwirl { .. }
        )
    }

    fn has_third_order(&self) -> bool {
        !matches!(self, Fixture::Gridded(_))
    }

    fn max_radius(&self) -> Option<f64> {
        match self {
            Fixture::Poiseuille { radius, .. } => Some(*radius),
            Fixture::Womersley(w) => Some(w.radius),
            Fixture::Gridded(g) => g.max_radius(),
            _ => None,
        }
    }
}
