//! Fixture catalogue for `list-fixtures` and `describe`.

use std::fmt::Write as _;

use efl_core::field::FIXTURE_NAMES;
use efl_core::{Fixture, FlowField};

pub fn formula(name: &str) -> Option<&'static str> {
    Some(match name {
        "StraightTube" => "u = (0, 0, g(t)); a bundle of straight tubes driven by a waveform",
        "ShearFlow" => "u = (0, 0, f(r)) with f an even polynomial; steady, constant pressure",
        "RigidHelixFlow" => "v_theta = omega r, v_z = W; helical paths of curvature r omega^2 / (r^2 omega^2 + W^2)",
        "StagnationSwirl" => "v_r = -alpha r / 2, v_theta = omega0 e^(alpha t) r, v_z = alpha z",
        "Poiseuille" => "v_z = p_s / (4 nu ell) (R^2 - r^2); steady pipe flow under a constant pressure gradient",
        "Womersley" => "v_z = Re[p_o / (i N) (1 - J0(k r) / J0(k R)) e^(i N t)], k = i^(3/2) sqrt(N / nu)",
        "Gridded" => "tabulated (v_r, v_theta, v_z) on a tensor grid in (r, z, t), cubic-spline interpolated",
        _ => return None,
    })
}

pub fn list_fixtures() -> String {
    let mut out = String::new();
    for name in FIXTURE_NAMES {
        let _ = writeln!(out, "{name:<16} {}", formula(name).unwrap_or_default());
    }
    out
}

/// Description of one fixture; `field` supplies concrete parameters when available.
pub fn describe(name: &str, field: Option<&Fixture>) -> Option<String> {
    let f = formula(name)?;
    let mut out = format!("{name}\n  {f}\n");
    if let Some(field) = field {
        let _ = writeln!(out, "  parameters: {field:?}");
        let _ = writeln!(out, "  length scale: {}", field.length_scale());
        let _ = writeln!(out, "  steady: {}, exact Euler: {}", field.is_steady(), field.is_euler());
        if let Fixture::Womersley(w) = field {
            let _ = writeln!(out, "  Womersley number alpha = R sqrt(N / nu) = {}", w.womersley_number());
        }
    }
    Some(out)
}

/// Parameters used by `describe` when no config is given.
pub fn default_fixture(name: &str) -> Option<Fixture> {
    use efl_core::field::EvenPoly;
    use efl_core::{Waveform, Womersley};
    Some(match name {
        "StraightTube" => Fixture::StraightTube { g: Waveform::Const { value: 1.0 } },
        "ShearFlow" => Fixture::ShearFlow { profile: EvenPoly::new(vec![1.0, -0.5]) },
        "RigidHelixFlow" => Fixture::RigidHelixFlow { omega: 2.0, w: 1.0 },
        "StagnationSwirl" => Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 },
        "Poiseuille" => Fixture::Poiseuille { p_s: 4.0, nu: 1.0, ell: 1.0, radius: 1.0 },
        "Womersley" => Fixture::Womersley(Womersley::new(1.0, 4.0, 1.0, 1.0).ok()?),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_has_seven_entries() {
        assert_eq!(list_fixtures().lines().count(), 7);
    }

    #[test]
    fn womersley_number_is_reported() {
        let f = default_fixture("Womersley").unwrap();
        let text = describe("Womersley", Some(&f)).unwrap();
        assert!(text.contains("= 2\n"), "{text}");
        assert!(describe("Nope", None).is_none());
    }
}
