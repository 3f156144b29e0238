use efl_core::field::{fd_jet, Component, EvenPoly};
use efl_core::{divergence, momentum_flux_ratio, pressure_compatibility, CylVec, Fixture, FlowField, Waveform, Womersley};
use proptest::prelude::*;

fn euler_fixtures() -> Vec<Fixture> {
    vec![
        Fixture::StraightTube { g: Waveform::Sinusoid { mean: 2.0, amplitude: 0.7, n: 3.0 } },
        Fixture::ShearFlow { profile: EvenPoly::new(vec![1.0, -0.4, 0.1]) },
        Fixture::RigidHelixFlow { omega: 2.0, w: 1.0 },
        Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 },
    ]
}

fn all_fixtures() -> Vec<Fixture> {
    let mut v = euler_fixtures();
    v.push(Fixture::Poiseuille { p_s: 4.0, nu: 1.0, ell: 1.0, radius: 1.0 });
    v.push(Fixture::Womersley(Womersley::new(1.0, 4.0, 1.0, 1.0).unwrap()));
    v
}

const COMPONENTS: [Component; 3] = [Component::R, Component::Theta, Component::Z];

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

proptest! {
    #[test]
    fn fixtures_are_divergence_free(r in 0.0..0.95f64, z in 0.1..2.0f64, t in 0.0..2.0f64) {
        for f in all_fixtures() {
            prop_assert!(divergence(&f, r, z, t).unwrap().abs() <= 1e-10, "{}", f.name());
        }
    }

    #[test]
    fn axis_parity(z in 0.1..2.0f64, t in 0.0..2.0f64) {
        for f in all_fixtures() {
            let v = f.eval(0.0, z, t).unwrap();
            prop_assert_eq!(v.v_r, 0.0);
            prop_assert_eq!(v.v_theta, 0.0);
        }
    }

    #[test]
    fn analytic_jets_match_differences(r in 0.05..0.9f64, z in 0.2..1.5f64, t in 0.0..1.5f64) {
        for f in all_fixtures() {
            let exact = f.jet(r, z, t, false).unwrap();
            let fd = fd_jet(|r, z, t| f.eval(r, z, t), r, z, t, 1.0, 1.0, false).unwrap();
            let pairs = [
                (exact.d_r, fd.d_r), (exact.d_z, fd.d_z), (exact.d_t, fd.d_t),
                (exact.d_rr, fd.d_rr), (exact.d_rz, fd.d_rz), (exact.d_zz, fd.d_zz),
                (exact.d_rt, fd.d_rt), (exact.d_zt, fd.d_zt), (exact.d_tt, fd.d_tt),
            ];
            for (a, b) in pairs {
                for c in COMPONENTS {
                    prop_assert!(close(a.get(c), b.get(c), 1e-6, 1e-7), "{}: {:?} vs {:?}", f.name(), a, b);
                }
            }
        }
    }

    #[test]
    fn euler_fixtures_admit_a_pressure(r in 0.0..0.95f64, z in 0.1..2.0f64, t in 0.0..1.0f64) {
        for f in euler_fixtures() {
            let pc = pressure_compatibility(&f, r, z, t).unwrap();
            prop_assert!(pc.a_theta.abs() <= 1e-8 && pc.curl_mismatch.abs() <= 1e-8, "{}: {:?}", f.name(), pc);
        }
    }

    #[test]
    fn flux_ratio_is_scale_invariant(c in 0.1..10.0f64) {
        let f = Fixture::Poiseuille { p_s: 4.0, nu: 1.0, ell: 1.0, radius: 1.0 };
        let scaled = efl_core::field::FdField::new("scaled", move |r: f64, _z, _t| CylVec::new(0.0, 0.0, c * (1.0 - r * r)));
        let a = momentum_flux_ratio(&f, 0.0, 0.0, None, 1e-12).unwrap();
        let b = momentum_flux_ratio(&scaled, 0.0, 0.0, Some(1.0), 1e-12).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn womersley_is_flagged_as_non_euler() {
    let f = Fixture::Womersley(Womersley::new(1.0, 4.0, 1.0, 1.0).unwrap());
    let worst = (0..20)
        .map(|k| pressure_compatibility(&f, 0.5, 0.0, 0.1 * k as f64).unwrap().curl_mismatch.abs())
        .fold(0.0, f64::max);
    assert!(worst > 1e-3);
}
