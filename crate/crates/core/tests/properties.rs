//! Property tests over the invariants of each module.

use fleetsim_core::analysis::{
    depot_term, frontier, grid_frontier, integer_envelope, load_factor, perfect_squares, tau_star, PlanningParams,
    VehicleRounding,
};
use fleetsim_core::engine::{depot_layout, Simulation};
use fleetsim_core::fleet::{decompose_times, update_battery, Activity, BatteryParams, Job, JobStatus, VehicleMode};
use fleetsim_core::geometry::{
    grid_layout, grid_multimedian, lloyd_weiszfeld, place_depots, zemel_lower_bound, LloydParams, Point, ServiceArea,
};
use fleetsim_core::policies::{Coordination, JobOrder, PolicyId, Timing};
use fleetsim_core::stats::{welch_warmup, WelchConfig};
use fleetsim_core::units::{Rate, Speed, TimeSpan};
use fleetsim_core::SystemConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn policy() -> impl Strategy<Value = PolicyId> {
    prop::sample::select(PolicyId::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_value_exceeds_zemel_and_decreases(side in 0.5f64..20.0, k in 1usize..12) {
        let area = ServiceArea::new(side).unwrap();
        let l = k * k;
        let h = grid_multimedian(&area, l);
        prop_assert!(h > zemel_lower_bound(area.area(), l));
        prop_assert!(grid_multimedian(&area, (k + 1) * (k + 1)) < h);
    }

    #[test]
    fn grid_layout_is_symmetric(side in 0.5f64..20.0, k in 1usize..8) {
        let area = ServiceArea::new(side).unwrap();
        let layout = grid_layout(&area, k);
        let key = |p: Point| ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64);
        let mut base: Vec<_> = layout.positions.iter().map(|&p| key(p)).collect();
        base.sort_unstable();
        let maps: [fn(f64, Point) -> Point; 3] = [
            |s, p| Point::new(s - p.x, p.y),
            |s, p| Point::new(p.x, s - p.y),
            |_, p| Point::new(p.y, p.x),
        ];
        for m in maps {
            let mut image: Vec<_> = layout.positions.iter().map(|&p| key(m(side, p))).collect();
            image.sort_unstable();
            prop_assert_eq!(&image, &base);
        }
        prop_assert!(layout.positions.iter().all(|&p| area.contains(p)));
    }

    #[test]
    fn numeric_placement_is_deterministic(seed in any::<u64>(), count in 2usize..6) {
        let area = ServiceArea::new(4.0).unwrap();
        let params = LloydParams { grid: 24, restarts: 2, ..LloydParams::default() };
        let a = lloyd_weiszfeld(&area, count, &params, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = lloyd_weiszfeld(&area, count, &params, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(&a, &b);
        prop_assert!(a.positions.iter().all(|&p| area.contains(p)));
        prop_assert!(a.h_l > zemel_lower_bound(16.0, count));
    }

    #[test]
    fn battery_stays_in_unit_interval(
        start in 0.0f64..=1.0,
        steps in prop::collection::vec((any::<bool>(), 0.0f64..30.0), 1..50),
    ) {
        let params = BatteryParams::default();
        let mut level = start;
        for (flying, dt) in steps {
            let activity = if flying { Activity::Flight } else { Activity::Charging };
            level = update_battery(level, dt, activity, &params).level;
            prop_assert!((0.0..=1.0).contains(&level));
        }
    }

    #[test]
    fn decomposition_sums_to_delivery_time(
        arrival in 0.0f64..1e4,
        gaps in (0.0f64..50.0, 0.0f64..50.0, 0.0f64..50.0),
    ) {
        let mut job = Job::new(0, Point::new(1.0, 1.0), arrival);
        job.t_assigned = Some(arrival + gaps.0);
        job.t_depot_ready = Some(arrival + gaps.0 + gaps.1);
        job.t_delivered = Some(arrival + gaps.0 + gaps.1 + gaps.2);
        job.status = JobStatus::Delivered;
        let st = decompose_times(&job).unwrap();
        prop_assert!(st.w >= 0.0 && st.r >= 0.0 && st.s >= 0.0);
        prop_assert_eq!(st.t, job.t_delivered.unwrap() - arrival);
        prop_assert!((st.w + st.r + st.s - st.t).abs() <= 1e-9 * st.t.max(1.0));
    }

    #[test]
    fn frontier_is_a_staircase_below_purchasable_configurations(
        side in 1.0f64..10.0,
        lambda in 0.05f64..3.0,
        nu in 10.0f64..120.0,
        alpha in 0.05f64..=1.0,
        c_v in 0.0f64..10_000.0,
        c_d in 0.0f64..50_000.0,
        strict in any::<bool>(),
    ) {
        let params = PlanningParams {
            area_km2: side * side,
            lambda: Rate::per_minute(lambda),
            speed: Speed::kmh(nu),
            alpha,
            cost_vehicle: c_v,
            cost_depot: c_d,
        };
        let rounding = if strict { VehicleRounding::Strict } else { VehicleRounding::Paper };
        let area = ServiceArea::new(side).unwrap();
        let points = grid_frontier(&params, 100, rounding).unwrap();
        // Treads shrink as depots are added, and the bound never drops.
        for w in points.windows(2) {
            prop_assert!(w[1].t_tread < w[0].t_tread);
            prop_assert!(w[1].i_min >= w[0].i_min - 1e-9 * w[1].i_min.abs().max(1.0));
        }
        let envelope = integer_envelope(&params, &points, |l| grid_multimedian(&area, l));
        for (p, e) in points.iter().zip(&envelope) {
            prop_assert!(p.i_min <= e.cost + 1e-9 * e.cost.max(1.0));
        }
        for l in perfect_squares(100) {
            let h = grid_multimedian(&area, l);
            if c_d > 0.0 {
                prop_assert!(depot_term(&params, h) < c_d * l as f64);
            }
        }
    }

    #[test]
    fn arbitrary_depot_sets_keep_the_staircase(
        set in prop::collection::btree_set(1usize..60, 1..12),
        c_v in 1.0f64..5000.0,
        c_d in 1.0f64..50_000.0,
    ) {
        let params = PlanningParams {
            area_km2: 16.0,
            lambda: Rate::per_minute(0.65),
            speed: Speed::kmh(30.0),
            alpha: 0.25,
            cost_vehicle: c_v,
            cost_depot: c_d,
        };
        let set: Vec<usize> = set.into_iter().collect();
        let h = |l: usize| 1.2 * zemel_lower_bound(16.0, l);
        let points = frontier(&params, &set, 100, VehicleRounding::Paper, h).unwrap();
        prop_assert_eq!(points.len(), set.len());
        for w in points.windows(2) {
            prop_assert!(w[1].i_min >= w[0].i_min);
        }
    }

    #[test]
    fn planning_quantities_do_not_depend_on_time_units(
        lambda in 0.01f64..5.0,
        nu in 5.0f64..150.0,
        c_v in 1.0f64..1e4,
        c_d in 1.0f64..1e5,
    ) {
        let per_min = PlanningParams {
            area_km2: 16.0,
            lambda: Rate::per_minute(lambda),
            speed: Speed::km_per_minute(nu / 60.0),
            alpha: 0.25,
            cost_vehicle: c_v,
            cost_depot: c_d,
        };
        let per_hour = PlanningParams { lambda: Rate::per_hour(lambda * 60.0), speed: Speed::kmh(nu), ..per_min };
        let a = tau_star(&per_min).as_minutes();
        let b = tau_star(&per_hour).as_minutes();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        let rho_min = load_factor(per_min.lambda, TimeSpan::minutes(3.0), 0.25, 10.0);
        let rho_hour = load_factor(per_hour.lambda, TimeSpan::hours(0.05), 0.25, 10.0);
        prop_assert!((rho_min - rho_hour).abs() <= 1e-12 * rho_min);
    }

    #[test]
    fn stationary_series_has_short_warmup(seed in any::<u64>(), level in 0.5f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 100;
        let series: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3000).map(|_| level * (0.8 + 0.4 * rng.gen::<f64>())).collect())
            .collect();
        let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
        let warm = welch_warmup(&refs, &WelchConfig { half_window: w, band: 0.05 }).unwrap();
        prop_assert!(warm.n_wu <= 2 * w + 1, "n_wu = {}", warm.n_wu);
    }
}

fn check_run(policy: PolicyId, vehicles: usize, depots: usize, seed: u64, steps: usize) -> Result<(), TestCaseError> {
    let cfg = SystemConfig::default().with_fleet(vehicles, depots);
    let layout = depot_layout(&cfg).unwrap();
    let mut sim = Simulation::new(&cfg, policy, &layout, seed).unwrap();
    let reach = cfg.speed().as_km_per_minute() * cfg.delta + 1e-9;
    let area = cfg.area().unwrap();
    for _ in 0..steps {
        let before: Vec<Point> = sim.vehicles().iter().map(|v| v.position).collect();
        let idle_before: Vec<bool> = sim
            .vehicles()
            .iter()
            .map(|v| !v.is_airborne() && v.assigned_job.is_none())
            .collect();
        let assigned_before: Vec<bool> = sim.jobs().iter().map(|j| j.t_assigned.is_some()).collect();
        sim.step();
        prop_assert!(sim.check_conservation());
        let mut holders = vec![0u8; sim.jobs().len()];
        for (v, p) in sim.vehicles().iter().zip(&before) {
            prop_assert!(v.position.dist(*p) <= reach);
            prop_assert!((0.0..=1.0).contains(&v.battery));
            prop_assert!(area.contains(v.position));
            if v.mode == VehicleMode::ToCustomer {
                prop_assert!(v.assigned_job.is_some());
            }
            if let Some(n) = v.assigned_job {
                holders[n] += 1;
            }
        }
        prop_assert!(holders.iter().all(|&h| h <= 1), "a job is held by two vehicles");
        // Plus policies: a vehicle idle at a depot that is assigned leaves at once.
        if policy.timing == Timing::Plus {
            for (n, j) in sim.jobs().iter().enumerate() {
                let fresh = j.t_assigned.is_some() && !assigned_before.get(n).copied().unwrap_or(false);
                if fresh && idle_before[j.vehicle_id.unwrap()] {
                    prop_assert_eq!(j.t_depot_ready, j.t_assigned);
                }
            }
        }
    }
    prop_assert!(sim.violations().is_empty());
    let counts = *sim.counts();
    prop_assert!(counts.min_battery_at_assignment >= cfg.battery_low);
    match policy.coordination() {
        Coordination::Randomized => prop_assert_eq!(counts.assortative_rounds, 0),
        Coordination::Assortative => prop_assert_eq!(counts.contentions, 0),
    }
    let jobs = sim.jobs();
    for (i, j) in jobs.iter().enumerate() {
        prop_assert_eq!(j.n, i);
        if i > 0 {
            prop_assert!(jobs[i - 1].t_arrival < j.t_arrival);
        }
        if j.is_delivered() {
            let st = decompose_times(j).unwrap();
            prop_assert!(st.w >= 0.0 && st.r >= 0.0 && st.s >= 0.0);
            prop_assert!((st.w + st.r + st.s - st.t).abs() <= cfg.delta);
        }
    }
    if policy.order == JobOrder::FirstJob {
        // Assignment order is arrival order.
        let stamps: Vec<f64> = jobs.iter().filter_map(|j| j.t_assigned).collect();
        prop_assert!(jobs.iter().map_while(|j| j.t_assigned).count() == stamps.len(), "a later job was assigned first");
        prop_assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulation_invariants(
        policy in policy(),
        vehicles in 1usize..10,
        depots in prop::sample::select(vec![1usize, 2, 4, 9]),
        seed in any::<u64>(),
    ) {
        check_run(policy, vehicles, depots, seed, 4000)?;
    }
}

#[test]
fn every_policy_pairs_order_and_coordination() {
    for p in PolicyId::ALL {
        let expected = match p.order {
            JobOrder::NearestJob => Coordination::Randomized,
            JobOrder::FirstJob => Coordination::Assortative,
        };
        assert_eq!(p.coordination(), expected);
    }
    assert_eq!(PolicyId::ALL.len(), 4);
}

#[test]
fn seeded_placement_is_bit_identical() {
    let area = ServiceArea::new(4.0).unwrap();
    for count in [2, 3] {
        let a = place_depots(&area, count, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = place_depots(&area, count, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
