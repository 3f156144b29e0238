use std::sync::OnceLock;

use efl_core::numerics::integrate;
use efl_core::series::Poly3;
use efl_core::{
    build_streamtube_map, clustered_nodes, disturbance_rates, inflow_propagation, reconstruct_velocity, Fixture, FlowField,
    PolyTubeMap, Scales, StreamTubeMap, TubeMap,
};
use proptest::prelude::*;

fn stagnation_map() -> &'static StreamTubeMap<Fixture> {
    static MAP: OnceLock<StreamTubeMap<Fixture>> = OnceLock::new();
    MAP.get_or_init(|| {
        let f = Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 };
        build_streamtube_map(f, &clustered_nodes(13, 1.0), (1.0, 2.0), &[0.0, 0.5, 1.0], 1e-12).unwrap()
    })
}

fn helix_map() -> &'static StreamTubeMap<Fixture> {
    static MAP: OnceLock<StreamTubeMap<Fixture>> = OnceLock::new();
    MAP.get_or_init(|| {
        let f = Fixture::RigidHelixFlow { omega: 3.0, w: 1.0 };
        build_streamtube_map(f, &clustered_nodes(9, 1.0), (0.0, 1.0), &[0.0], 1e-10).unwrap()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn l0_is_at_least_two(d1 in 1e-3..1e3f64, c in coeffs()) {
        let table = move |_r0: f64, _z: f64, _t: f64| {
            let mut p = Poly3::ZERO;
            for ((i, j, k), v) in Poly3::exponents().zip(c.iter()) {
                p.set_coeff(i, j, k, *v);
            }
            p.set_coeff(1, 0, 0, d1);
            p
        };
        let map = PolyTubeMap { table, scales: Scales { length: 1.0, time: 1.0, u_ref: 1.0 } };
        let d = disturbance_rates(&map, 0.5, 0.0, 0.0).unwrap();
        prop_assert!(d.l0 >= 2.0 - 1e-9);
        if (d.l0 - 2.0).abs() <= 1e-9 {
            prop_assert!((d1 - 1.0).abs() <= 1e-3);
        }
        prop_assert!(d.lx.is_finite() && d.lt.is_finite() && d.lx >= 0.0 && d.lt >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn stagnation_round_trip(r in 0.0..0.7f64, z in 1.0..2.0f64, t in 0.0..1.0f64) {
        let map = stagnation_map();
        let f = Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 };
        let v = reconstruct_velocity(map, |_, _| 1.0, r, z, t).unwrap();
        let exact = f.eval(r, z, t).unwrap();
        prop_assert!((v.v_z - exact.v_z).abs() <= 1e-6 * exact.v_z.abs());
        prop_assert!((v.v_r - exact.v_r).abs() <= 1e-6 * exact.v_r.abs().max(1e-3));
        prop_assert!((v.rho - z).abs() <= 1e-8);
    }

    #[test]
    fn steady_fields_have_no_time_rate(r0 in 0.0..1.0f64, z in 0.0..1.0f64) {
        let d = disturbance_rates(helix_map(), r0, z, 0.0).unwrap();
        prop_assert!(d.lt <= 1e-9);
    }

    #[test]
    fn tube_flux_is_conserved(r0 in 0.1..1.0f64, z in 1.0..2.0f64) {
        let map = stagnation_map();
        let f = Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 };
        let r_out = map.taylor(r0, z, 0.5).unwrap().deriv(0, 0, 0);
        let inlet = integrate(|r| Ok(f.eval(r, 1.0, 0.5)?.v_z * r), 0.0, r0, 1e-13).unwrap();
        let outlet = integrate(|r| Ok(f.eval(r, z, 0.5)?.v_z * r), 0.0, r_out, 1e-13).unwrap();
        prop_assert!((inlet - outlet).abs() <= 1e-9 * inlet);
    }
}

#[test]
fn inversion_is_identity_on_nodes() {
    let map = stagnation_map();
    for &r0 in map.r0_nodes() {
        let r = map.taylor(r0, 1.7, 0.5).unwrap().deriv(0, 0, 0);
        assert!((map.invert(r, 1.7, 0.5).unwrap() - r0).abs() <= 1e-10);
    }
}

#[test]
fn rho_is_continuous_at_the_axis() {
    let map = stagnation_map();
    let axis = inflow_propagation(map, 0.0, 2.0, 0.0).unwrap();
    let p = map.taylor(0.0, 2.0, 0.0).unwrap();
    let slope_axis = -2.0 * p.deriv(2, 0, 0) / p.deriv(1, 0, 0).powi(3);
    let h = 1e-3;
    let slope = (inflow_propagation(map, h, 2.0, 0.0).unwrap() - axis) / h;
    assert!((axis - 2.0).abs() < 1e-9);
    assert!((slope - slope_axis).abs() < 1e-3);
}

#[test]
fn poiseuille_round_trip() {
    let f = Fixture::Poiseuille { p_s: 4.0, nu: 1.0, ell: 1.0, radius: 1.0 };
    let map = build_streamtube_map(&f, &clustered_nodes(9, 0.9), (0.0, 1.0), &[0.0], 1e-10).unwrap();
    for k in 0..20 {
        let r = 0.85 * k as f64 / 19.0;
        let v = reconstruct_velocity(&map, |r0, _| 1.0 - r0 * r0, r, 0.4, 0.0).unwrap();
        assert!((v.v_z - (1.0 - r * r)).abs() <= 1e-6 * (1.0 - r * r));
        assert!(v.v_r.abs() <= 1e-12);
    }
}

#[test]
fn l0_equals_two_for_unit_stretch() {
    let map = PolyTubeMap {
        table: |r0: f64, _z: f64, _t: f64| Poly3::constant(r0) + Poly3::var(0),
        scales: Scales { length: 1.0, time: 1.0, u_ref: 1.0 },
    };
    assert_eq!(disturbance_rates(&map, 0.3, 0.0, 0.0).unwrap().l0, 2.0);
}
