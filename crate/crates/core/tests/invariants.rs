use proptest::prelude::*;

use slds_core::fbm::{reanchor, sample_fbm, HurstParameter, TimeGrid};
use slds_core::lattice::{apply_a, apply_b, apply_bstar, eval_f, Boundary, LatticeVector, NonlinearitySpec};
use slds_core::noise::{ou_solution, stieltjes_exp_integral, NoiseField};

fn lattice(n: usize) -> impl Strategy<Value = LatticeVector> {
    prop::collection::vec(-10.0f64..10.0, 2 * n + 1).prop_map(|v| LatticeVector::from_values(v).unwrap())
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::ZeroPadding), Just(Boundary::Periodic)]
}

proptest! {
    #[test]
    fn bstar_is_the_adjoint_of_b((x, y) in (lattice(7), lattice(7)), b in boundary()) {
        let lhs = apply_bstar(&x, b).dot(&y);
        let rhs = x.dot(&apply_b(&y, b));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x.norm() * y.norm()));
    }

    #[test]
    fn a_is_positive_semidefinite(x in lattice(9), b in boundary()) {
        prop_assert!(apply_a(&x, b).dot(&x) >= -1e-12 * x.dot(&x));
    }

    #[test]
    fn a_is_symmetric((x, y) in (lattice(5), lattice(5)), b in boundary()) {
        let lhs = apply_a(&x, b).dot(&y);
        let rhs = x.dot(&apply_a(&y, b));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x.norm() * y.norm()));
    }

    #[test]
    fn factorization_holds_for_periodic_boundary(x in lattice(6)) {
        let p = Boundary::Periodic;
        let ax = apply_a(&x, p);
        prop_assert!(ax.distance(&apply_b(&apply_bstar(&x, p), p)) <= 1e-12 * (1.0 + x.norm()));
        prop_assert!(ax.distance(&apply_bstar(&apply_b(&x, p), p)) <= 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn cubic_is_one_sided_lipschitz((x, y) in (lattice(4), lattice(4))) {
        let f = NonlinearitySpec::cubic(1.0, 2.0).unwrap();
        let d = &x - &y;
        let df = &eval_f(&f, &x).unwrap() - &eval_f(&f, &y).unwrap();
        prop_assert!(d.dot(&df) <= -d.dot(&d) * (1.0 - 1e-12));
    }

    #[test]
    fn shifts_compose_exactly(seed in any::<u64>(), s in -40i64..40, t in -40i64..40) {
        let dt = 0.125;
        let h = HurstParameter::new(0.7).unwrap();
        let base = reanchor(&sample_fbm(200, h, dt, seed).unwrap(), 100.0 * dt).unwrap();
        let (s, t) = (s as f64 * dt, t as f64 * dt);
        let two = reanchor(&reanchor(&base, s).unwrap(), t).unwrap();
        let one = reanchor(&base, s + t).unwrap();
        prop_assert_eq!(two.grid(), one.grid());
        prop_assert_eq!(two.values(), one.values());
    }

    #[test]
    fn stieltjes_integral_is_linear_in_the_path(seed in any::<u64>(), c in -3.0f64..3.0) {
        let dt = 0.01;
        let h = HurstParameter::new(0.8).unwrap();
        let p = sample_fbm(100, h, dt, seed).unwrap();
        let scaled = slds_core::fbm::ScalarPath::from_values(*p.grid(), p.values().iter().map(|v| c * v).collect()).unwrap();
        let a = stieltjes_exp_integral(&p, 0.7, 0.0, 1.0).unwrap();
        let b = stieltjes_exp_integral(&scaled, 0.7, 0.0, 1.0).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn quiet_ou_is_pure_decay(u0 in lattice(3), lambda in 0.1f64..3.0) {
        let grid = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let traj = ou_solution(&u0, lambda, &NoiseField::zero(3, grid), &grid).unwrap();
        for (t, s) in traj.times().zip(&traj.states) {
            prop_assert!(s.distance(&(&u0 * (-lambda * t).exp())) <= 1e-12 * (1.0 + u0.norm()));
        }
    }
}

#[test]
fn lattice_vectors_roundtrip_through_serde() {
    let x = LatticeVector::from_fn(2, |i| i as f64 * 0.5);
    let json = serde_json::to_string(&x).unwrap();
    assert_eq!(json, "[-1.0,-0.5,0.0,0.5,1.0]");
    assert_eq!(serde_json::from_str::<LatticeVector>(&json).unwrap(), x);
    assert!(serde_json::from_str::<LatticeVector>("[1.0, 2.0]").is_err());
}
