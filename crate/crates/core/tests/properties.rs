use eastwalk_core::env::{constraint, flip_rate};
use eastwalk_core::exact::{
    build_env_generator, build_ew_generator, dot, exact_velocity, stationary_distribution,
    StateSpace,
};
use eastwalk_core::graphical::{apply_event_in_place, EventSchedule};
use eastwalk_core::perturbative::heat_kernel;
use eastwalk_core::rng::{hash4, unit_open};
use eastwalk_core::walkers::{coupled_run, local_drift, reflected_process, walker_rates};
use eastwalk_core::{EnvKind, EnvParams, JointProcess, SpinConfiguration, Topology};
use proptest::prelude::*;

fn constrained_kind() -> impl Strategy<Value = EnvKind> {
    prop_oneof![Just(EnvKind::East), Just(EnvKind::West), Just(EnvKind::FA1f)]
}

fn any_kind() -> impl Strategy<Value = EnvKind> {
    prop_oneof![
        Just(EnvKind::East),
        Just(EnvKind::West),
        Just(EnvKind::FA1f),
        (0.2f64..3.0).prop_map(|gamma| EnvKind::IndependentSpinFlip { gamma }),
    ]
}

fn ring_config(min: usize, max: usize) -> impl Strategy<Value = SpinConfiguration> {
    prop::collection::vec(0u8..=1, min..=max)
        .prop_map(|bits| {
            let l = bits.len();
            SpinConfiguration::new(bits, Topology::Ring(l)).unwrap()
        })
}

fn segment_config(min: usize, max: usize) -> impl Strategy<Value = SpinConfiguration> {
    prop::collection::vec(0u8..=1, min..=max).prop_map(|bits| {
        let l = bits.len();
        SpinConfiguration::new(bits, Topology::Segment(l)).unwrap()
    })
}

proptest! {
    #[test]
    fn flip_rates_are_bounded_and_gated(
        kind in constrained_kind(),
        config in ring_config(3, 24),
        site in 0usize..24,
        rho in 0.01f64..0.99,
    ) {
        let x = (site % config.len()) as i64;
        let r = flip_rate(kind, &config, x, rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r == 0.0, constraint(kind, &config, x).unwrap() == 0);
    }

    #[test]
    fn spin_flip_rate_is_gamma_at_half_density(
        gamma in 0.01f64..5.0,
        config in ring_config(3, 16),
        site in 0usize..16,
    ) {
        let x = (site % config.len()) as i64;
        let kind = EnvKind::IndependentSpinFlip { gamma };
        prop_assert!((flip_rate(kind, &config, x, 0.5).unwrap() - gamma).abs() < 1e-15);
    }

    #[test]
    fn east_and_west_constraints_mirror(
        config in prop_oneof![ring_config(3, 20), segment_config(3, 20)],
        site in 0usize..20,
    ) {
        let l = config.len();
        let x = site % l;
        let mirrored = config.reversed();
        prop_assert_eq!(
            constraint(EnvKind::West, &mirrored, (l - 1 - x) as i64).unwrap(),
            constraint(EnvKind::East, &config, x as i64).unwrap()
        );
    }

    #[test]
    fn unit_draws_stay_inside_the_open_interval(a in any::<u64>(), b in any::<u64>(), i in any::<u64>()) {
        let u = unit_open(hash4(a, b, i, 0));
        prop_assert!(u > 0.0 && u < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generators_are_reversible_with_zero_row_sums(
        kind in any_kind(),
        len in 3usize..8,
        rho in 0.05f64..0.95,
    ) {
        let g = build_env_generator(kind, len, rho).unwrap();
        let nu = g.space().product_measure(rho);
        prop_assert!(g.detailed_balance_defect(&nu) < 1e-12);
        prop_assert!(g.max_row_sum() < 1e-12);
        let ew = build_ew_generator(kind, len, rho, 0.17).unwrap();
        prop_assert!(ew.max_row_sum() < 1e-12);
        prop_assert!(ew.min_off_diagonal() > 0.0);
    }

    #[test]
    fn legal_rings_are_exactly_the_unconstrained_ones(
        kind in any_kind(),
        config in prop_oneof![ring_config(3, 32), segment_config(3, 32)],
        seed in any::<u64>(),
        rho in 0.05f64..0.95,
    ) {
        let schedule = EventSchedule::for_kind(seed, 5.0, config.len(), rho, kind).unwrap();
        let mut cursor = schedule.cursor();
        let mut state = config.clone();
        while let Some(ev) = cursor.next_event() {
            let c = constraint(kind, &state, ev.site as i64).unwrap();
            let before = state.bits()[ev.site];
            let out = apply_event_in_place(&mut state, kind, &ev);
            prop_assert_eq!(out.legal, c == 1);
            prop_assert_eq!(out.new_value, if c == 1 { ev.coin } else { before });
        }
    }

    #[test]
    fn shared_schedules_deliver_identical_clocks(
        seed in any::<u64>(),
        len in 1usize..40,
        rho in 0.05f64..0.95,
    ) {
        let schedule = EventSchedule::new(seed, 8.0, len, rho).unwrap();
        let a: Vec<_> = std::iter::from_fn({ let mut c = schedule.cursor(); move || c.next_event() }).collect();
        let b: Vec<_> = std::iter::from_fn({ let mut c = schedule.clone().cursor(); move || c.next_event() }).collect();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.windows(2).all(|w| w[0].time <= w[1].time));
        for site in 0..len {
            let mine: Vec<_> = a.iter().filter(|e| e.site == site).copied().collect();
            prop_assert_eq!(mine, schedule.site_events(site));
        }
    }

    #[test]
    fn walker_rates_sum_to_one(eps in -0.5f64..=0.5, occ in 0u8..=1) {
        let (r, l) = walker_rates(eps, occ).unwrap();
        prop_assert!((r + l - 1.0).abs() < 1e-15);
        prop_assert!((local_drift(eps, occ).unwrap() - (r - l)).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reflected_west_run_mirrors_the_east_run(
        seed in any::<u64>(),
        len in 3usize..40,
        rho in 0.1f64..0.9,
        eps in -0.5f64..=0.5,
    ) {
        let env = EnvParams::new(EnvKind::East, rho, Topology::Ring(len)).unwrap();
        let init = eastwalk_core::env::sample_equilibrium(
            &env,
            &mut eastwalk_core::rng::seeded_rng(seed ^ 0x5eed),
        ).unwrap();
        let (mut east, mut west) = reflected_process(&env, eps, 30.0, seed, &init).unwrap();
        loop {
            let a = east.step();
            let b = west.step();
            prop_assert_eq!(a.is_some(), b.is_some());
            if a.is_none() {
                break;
            }
            prop_assert_eq!(east.state().t, west.state().t);
            prop_assert_eq!(east.state().position(), -west.state().position());
        }
        prop_assert!(east.events() > 0);
    }

    #[test]
    fn front_stays_right_of_the_edge_walker(seed in any::<u64>(), rho in 0.2f64..0.8) {
        let run = coupled_run(rho, 1024, 1024 - 64, 15.0, seed).unwrap();
        prop_assert_eq!(run.invariant_violations, 0);
        for (&t, &f) in run.front.times.iter().zip(&run.front.positions) {
            prop_assert!(f as f64 >= run.walker.at(t) as f64 + 0.5 + 0.5 - 1e-9);
        }
    }

    #[test]
    fn exact_velocity_is_odd_and_orientation_free(
        kind in any_kind(),
        len in 3usize..8,
        rho in 0.1f64..0.9,
        eps in 0.0f64..=0.3,
    ) {
        let v = exact_velocity(kind, len, rho, eps).unwrap();
        prop_assert!((v + exact_velocity(kind, len, rho, -eps).unwrap()).abs() < 1e-10);
        if kind == EnvKind::East {
            prop_assert!((v - exact_velocity(EnvKind::West, len, rho, eps).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn cubic_remainder_stays_bounded(kind in any_kind(), len in 4usize..8, rho in 0.15f64..0.85) {
        prop_assume!((rho - 0.5f64).abs() > 0.05);
        // linear coefficient from the finite-ring law, which excludes the
        // frozen all-ones state for constrained kinds
        let space = StateSpace::for_kind(kind, len).unwrap();
        let mu0 = stationary_distribution(&build_ew_generator(kind, len, rho, 0.0).unwrap())
            .unwrap()
            .probabilities;
        let lin = 2.0 * (2.0 * dot(&mu0, &space.occupation(0)) - 1.0);
        let r: Vec<f64> = [0.01, 0.02, 0.04]
            .iter()
            .map(|&e| (exact_velocity(kind, len, rho, e).unwrap() - lin * e) / (e * e * e))
            .collect();
        let scale = r[0].abs().max(1e-6);
        prop_assert!(r.iter().all(|x| x.abs() <= 2.0 * scale + 1e-3), "{r:?}");
    }

    #[test]
    fn heat_kernel_is_symmetric_and_normalized(t in 0.0f64..60.0, y in 0i64..40) {
        let p = heat_kernel(t, y).unwrap();
        prop_assert!(p >= 0.0 && p <= 1.0);
        prop_assert!((p - heat_kernel(t, -y).unwrap()).abs() < 1e-12);
        let w = (t + 20.0 * t.sqrt() + 20.0) as i64;
        let total: f64 = (-w..=w).map(|z| heat_kernel(t, z).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn perturbed_laws_differ_under_reversal() {
    let g_plus = build_ew_generator(EnvKind::East, 6, 0.5, 0.1).unwrap();
    let g_minus = build_ew_generator(EnvKind::East, 6, 0.5, -0.1).unwrap();
    let plus = stationary_distribution(&g_plus).unwrap().probabilities;
    let minus = stationary_distribution(&g_minus).unwrap().probabilities;
    let tv: f64 = 0.5 * plus.iter().zip(&minus).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv > 1e-4, "{tv}");
}

#[test]
fn spin_flip_walker_started_frozen_runs_right() {
    // gamma tiny: the all-ones window essentially never refreshes
    let kind = EnvKind::IndependentSpinFlip { gamma: 1e-9 };
    let env = EnvParams::new(kind, 0.5, Topology::Ring(32)).unwrap();
    let ones = SpinConfiguration::filled(1, Topology::Ring(32)).unwrap();
    let mut p = JointProcess::new(&env, 0.5, 200.0, 3, Some(ones)).unwrap();
    p.run_until(200.0, &mut ());
    let x = p.state().position();
    assert!((x as f64 / 200.0 - 1.0).abs() < 0.25, "{x}");
}
