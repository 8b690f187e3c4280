use rayon::prelude::*;

use slds_core::fbm::{HurstParameter, TimeGrid};
use slds_core::lattice::{Boundary, LatticeParams, LatticeVector, NonlinearitySpec};
use slds_core::noise::{build_noise_field, NoiseField};
use slds_core::seed;
use slds_core::solver::{
    a_priori_envelope, cocycle_check, gronwall_envelope, integrate, linear_oracle, Scheme, SolverConfig,
};
use slds_core::trajectory::{Representation, Trajectory};

/// Frozen after a pilot run on seeds 0..10 of master 31 (largest ratios
/// 0.123 for the Gronwall constant, 0.217 for the a-priori constant),
/// then doubled.
const C0: f64 = 0.25;
const M: f64 = 0.5;

const N: usize = 6;
const T_END: f64 = 4.0;
const DT: f64 = 0.01;

fn params() -> LatticeParams {
    LatticeParams::new(
        1.0,
        1.0,
        LatticeVector::from_fn(N, |i| 0.3 * (i as f64).cos()),
        LatticeVector::from_fn(N, |i| 1.0 / (1.0 + (i as f64).abs())),
        Boundary::ZeroPadding,
    )
    .unwrap()
}

struct Run {
    u0_norm: f64,
    field: NoiseField,
    traj: Trajectory,
}

fn run(master: u64) -> Run {
    let p = params();
    let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
    let grid = TimeGrid::new(0.0, DT, (T_END / DT) as usize).unwrap();
    let field = build_noise_field(&p, grid, HurstParameter::new(0.75).unwrap(), master).unwrap();
    let mut rng = seed::rng(master);
    let u0 = LatticeVector::from_fn(N, |_| 3.0 * rand::Rng::random_range(&mut rng, -1.0..1.0));
    let traj = integrate(&u0, &field, &p, &f, &SolverConfig::heun(DT, T_END).unwrap()).unwrap();
    Run {
        u0_norm: u0.norm(),
        field,
        traj,
    }
}

/// Smallest `c0` for which the Gronwall envelope covers `|v|` on this run.
fn gronwall_ratio(r: &Run) -> f64 {
    let p = params();
    let v = r.traj.with_representation(Representation::V, &r.field).unwrap();
    let w_sup = r.field.norms().into_iter().fold(0.0, f64::max);
    let unit = gronwall_envelope(0.0, p.lambda, 1.0, p.forcing.norm(), w_sup, 3.0, 1.0);
    v.times()
        .zip(&v.states)
        .skip(1)
        .map(|(t, s)| {
            let decay = (-p.lambda * t).exp();
            let scale = unit * (1.0 - decay) / (1.0 - (-p.lambda).exp());
            (s.norm() - r.u0_norm * decay).max(0.0) / scale
        })
        .fold(0.0, f64::max)
}

/// Smallest `M` for which the a-priori envelope covers `sup|u|`.
fn a_priori_ratio(r: &Run) -> f64 {
    let p = params();
    let (mut sum, mut pow_sum) = (0.0, 0.0);
    for s in r.field.sites() {
        let sigma = p.sigma.get(s.site);
        let sup = s.path.values().iter().map(|x| (sigma * x).abs()).fold(0.0, f64::max);
        sum += sup;
        pow_sum += sup.powi(3);
    }
    r.traj.sup_norm() / a_priori_envelope(1.0, r.u0_norm, sum, pow_sum, p.forcing.norm())
}

#[test]
fn pilot_constants_stay_below_frozen_values() {
    let pilot: Vec<(f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let r = run(seed::realization_seed(31, i));
            (gronwall_ratio(&r), a_priori_ratio(&r))
        })
        .collect();
    let g = pilot.iter().map(|p| p.0).fold(0.0, f64::max);
    let a = pilot.iter().map(|p| p.1).fold(0.0, f64::max);
    println!("pilot gronwall c0 = {g:.4}, a-priori M = {a:.4}");
    assert!(g <= C0 && a <= M);
}

#[test]
fn frozen_envelopes_hold_on_fresh_seeds() {
    let worst: (f64, f64) = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let r = run(seed::realization_seed(32, i));
            (gronwall_ratio(&r), a_priori_ratio(&r))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    assert!(worst.0 <= C0, "gronwall ratio {}", worst.0);
    assert!(worst.1 <= M, "a-priori ratio {}", worst.1);
}

#[test]
fn representations_interconvert() {
    let r = run(7);
    let v = r.traj.with_representation(Representation::V, &r.field).unwrap();
    let back = v.with_representation(Representation::U, &r.field).unwrap();
    assert!(back.max_distance(&r.traj) < 1e-12);
    assert_eq!(v.states[0], r.traj.states[0]);
}

#[test]
fn cocycle_residual_within_threshold_across_step_sizes() {
    let p = params();
    let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
    let u0 = LatticeVector::from_fn(N, |i| 0.5 + 0.1 * i as f64);
    let fine = build_noise_field(&p, TimeGrid::new(0.0, 2.5e-3, 800).unwrap(), HurstParameter::new(0.75).unwrap(), 41)
        .unwrap();
    for scheme in [Scheme::Euler, Scheme::Heun] {
        for factor in [4usize, 2, 1] {
            let field = if factor == 1 { fine.clone() } else { fine.coarsen(factor).unwrap() };
            let dt = field.grid().dt();
            let config = SolverConfig::new(scheme, dt, 2.0).unwrap();
            let r = cocycle_check(0.7, 1.3, &field, &u0, &p, &f, &config).unwrap();
            assert!(r.pass, "{scheme:?} dt={dt}: {r:?}");
        }
    }
}

#[test]
fn euler_is_first_order_and_heun_second_order_against_the_oracle() {
    let p = LatticeParams::new(
        1.0,
        1.0,
        LatticeVector::constant(N, 0.2),
        LatticeVector::constant(N, 0.7),
        Boundary::Periodic,
    )
    .unwrap();
    let f = NonlinearitySpec::linear(0.5).unwrap();
    let u0 = LatticeVector::from_fn(N, |i| (0.5 * i as f64).sin());
    let fine = build_noise_field(&p, TimeGrid::new(0.0, 1e-3, 2000).unwrap(), HurstParameter::new(0.7).unwrap(), 43)
        .unwrap();
    let errors = |scheme: Scheme| -> Vec<f64> {
        [4usize, 2, 1]
            .iter()
            .map(|&factor| {
                let field = if factor == 1 { fine.clone() } else { fine.coarsen(factor).unwrap() };
                let dt = field.grid().dt();
                let traj = integrate(&u0, &field, &p, &f, &SolverConfig::new(scheme, dt, 2.0).unwrap()).unwrap();
                traj.max_distance(&linear_oracle(&u0, &field, &p, &f, &traj.grid).unwrap())
            })
            .collect()
    };
    let euler = errors(Scheme::Euler);
    let heun = errors(Scheme::Heun);
    for w in euler.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..2.5).contains(&ratio), "euler ratio {ratio}");
    }
    for w in heun.windows(2) {
        assert!(w[0] / w[1] > 3.4, "heun ratio {}", w[0] / w[1]);
    }
}

#[test]
fn solver_refinement_uses_the_noise_path() {
    let p = params();
    let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
    let field = build_noise_field(&p, TimeGrid::new(0.0, 0.01, 200).unwrap(), HurstParameter::new(0.75).unwrap(), 44)
        .unwrap();
    let u0 = LatticeVector::constant(N, 1.0);
    let coarse = integrate(&u0, &field, &p, &f, &SolverConfig::heun(0.01, 2.0).unwrap()).unwrap();
    let fine = integrate(&u0, &field, &p, &f, &SolverConfig::heun(0.0025, 2.0).unwrap()).unwrap();
    let end_gap = coarse.final_state().distance(fine.final_state());
    assert_eq!(fine.states.len(), 801);
    assert!(end_gap < 0.05, "{end_gap}");
    assert!(integrate(&u0, &field, &p, &f, &SolverConfig::heun(0.004, 2.0).unwrap()).is_err());
}
