//! Fixed-seed Monte Carlo checks of estimator-level identities.

use eastwalk_core::env::sample_equilibrium;
use eastwalk_core::estimators::{
    combined_se, estimate_profile, estimate_u, estimate_velocity, reference_gap, ReplicaPlan,
    SegmentSetup,
};
use eastwalk_core::exact::truncated_kappa;
use eastwalk_core::graphical::{evolve, EventSchedule};
use eastwalk_core::perturbative::{estimate_kappa, first_order_profile, profile_horizon};
use eastwalk_core::rng::{derive_seed, seeded_rng};
use eastwalk_core::{EnvKind, EnvParams, Topology};

fn ring(kind: EnvKind, rho: f64, len: usize) -> EnvParams {
    EnvParams::new(kind, rho, Topology::Ring(len)).unwrap()
}

#[test]
fn equilibrium_is_preserved_by_the_dynamics() {
    for kind in [EnvKind::East, EnvKind::FA1f] {
        let env = ring(kind, 0.3, 16);
        let n = 10_000;
        let mut hits = 0u32;
        for i in 0..n {
            let seed = derive_seed(77, "stationarity", i);
            let init = sample_equilibrium(&env, &mut seeded_rng(seed)).unwrap();
            let schedule = EventSchedule::for_kind(seed, 5.0, 16, 0.3, kind).unwrap();
            let end = evolve(&init, kind, &schedule, &mut ()).unwrap();
            hits += u32::from(end.bits()[3]);
        }
        // the ring law is conditioned away from all-ones; the shift is ~1e-9
        let p = hits as f64 / n as f64;
        let se = (0.3 * 0.7 / n as f64).sqrt();
        assert!((p - 0.3).abs() < 3.0 * se, "{kind:?} {p}");
    }
}

#[test]
fn estimated_velocity_is_odd_in_epsilon() {
    let env = ring(EnvKind::East, 0.4, 128);
    let plan = ReplicaPlan::new(40, 11);
    let plus = estimate_velocity(&env, 0.2, 800.0, 100.0, &plan).unwrap();
    let minus = estimate_velocity(&env, -0.2, 800.0, 100.0, &plan).unwrap();
    assert!(
        (plus.value + minus.value).abs() < 3.0 * combined_se(&plus, &minus),
        "{plus:?} {minus:?}"
    );
}

#[test]
fn east_and_west_estimates_agree() {
    let plan = ReplicaPlan::new(40, 12);
    let east = estimate_velocity(&ring(EnvKind::East, 0.5, 128), 0.2, 800.0, 100.0, &plan).unwrap();
    let west = estimate_velocity(&ring(EnvKind::West, 0.5, 128), 0.2, 800.0, 100.0, &plan).unwrap();
    assert!((east.value - west.value).abs() < 3.0 * combined_se(&east, &west));
}

#[test]
fn velocity_is_stable_under_ring_doubling() {
    let plan = ReplicaPlan::new(40, 13);
    let small = estimate_velocity(&ring(EnvKind::East, 0.5, 128), 0.3, 1000.0, 200.0, &plan).unwrap();
    let large = estimate_velocity(&ring(EnvKind::East, 0.5, 256), 0.3, 1000.0, 200.0, &plan).unwrap();
    assert!(
        (small.value - large.value).abs() < 2.0 * combined_se(&small, &large),
        "{small:?} {large:?}"
    );
}

#[test]
fn standard_error_shrinks_on_budget_doubling() {
    let setup = SegmentSetup::new(0.5, 64).unwrap();
    let one = estimate_u(&setup, &[0.5], &ReplicaPlan::new(20_000, 14)).unwrap();
    let two = estimate_u(&setup, &[0.5], &ReplicaPlan::new(40_000, 14)).unwrap();
    let ratio = two.values[0].se / one.values[0].se;
    assert!((0.6..=0.85).contains(&ratio), "{ratio}");
}

#[test]
fn estimates_stay_in_range() {
    let env = ring(EnvKind::East, 0.5, 64);
    let p = estimate_profile(&env, 0.3, 16, 200.0, 20.0, &ReplicaPlan::new(20, 15)).unwrap();
    assert!(p.values.iter().all(|e| (0.0..=1.0).contains(&e.value)));
    let setup = SegmentSetup::new(0.3, 640).unwrap();
    let grid: Vec<f64> = (0..=10).map(f64::from).collect();
    let u = estimate_u(&setup, &grid, &ReplicaPlan::new(2000, 16)).unwrap();
    let floor = -0.3 * 0.7;
    assert!((u.values[0].value - floor).abs() < 1e-12);
    assert!(u.values.iter().all(|e| e.value >= floor - 1e-12 && e.value <= 0.0));
    assert!(u.values.windows(2).all(|w| w[0].value <= w[1].value + 1e-12));
}

#[test]
fn paired_replicas_are_unbiased_for_the_truncated_kappa() {
    let horizon = 5.0;
    let exact = truncated_kappa(EnvKind::East, 5, 0.5, horizon).unwrap();
    let est = estimate_kappa(&ring(EnvKind::East, 0.5, 5), horizon, &ReplicaPlan::new(200_000, 17))
        .unwrap()
        .value;
    assert!((est.value - exact).abs() < 4.0 * est.se, "{est:?} vs {exact}");
}

#[test]
fn first_order_profile_is_odd_and_spreads() {
    let rho = 0.3;
    let gap = reference_gap(EnvKind::East, rho).unwrap();
    let tu = profile_horizon(rho, gap);
    let setup = SegmentSetup::new(rho, (64.0 * tu) as usize).unwrap();
    let u = estimate_u(&setup, &[0.0, tu], &ReplicaPlan::new(2000, 18)).unwrap();
    let d: Vec<_> = (-5..=5)
        .map(|x| first_order_profile(&u, x, tu, gap).unwrap())
        .collect();
    for k in 0..=5 {
        assert_eq!(d[5 + k].value, -d[5 - k].value);
    }
    assert_eq!(d[5].value, 0.0);
    assert!(d[4].value > 0.0);
    for x in 2..=5 {
        assert!(d[5 + x].value.abs() <= d[6].value.abs() + 3.0 * d[5 + x].se);
    }
}
