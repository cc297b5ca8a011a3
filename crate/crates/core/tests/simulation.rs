use infofusion_core::fusion::{FusionConfig, StateDim};
use infofusion_core::gridmap::{clearance, is_free_point, is_free_segment};
use infofusion_core::metrics::{compute_metrics, sign_flips, variance};
use infofusion_core::mpc::MpcConfig;
use infofusion_core::planner::PlannerConfig;
use infofusion_core::pursuit::PursuitConfig;
use infofusion_core::sim::{run_scenario, ControllerKind, Outcome, Scenario, SimConfig};
use infofusion_core::{Obstacle, OccupancyGrid, Point, VehicleParams, VehicleState};

fn walls() -> OccupancyGrid {
    let mut g = OccupancyGrid::empty(40, 40, 1.0).unwrap();
    for r in 0..24 {
        g.set_occupied(14, r, true);
    }
    for r in 16..40 {
        g.set_occupied(27, r, true);
    }
    g
}

fn scenario(controller: ControllerKind, obstacles: Vec<Obstacle>, seed: u64) -> Scenario {
    Scenario {
        grid: walls(),
        start: VehicleState::new(5.0, 5.0, std::f64::consts::FRAC_PI_2, 0.0),
        goal: Point::new(35.0, 35.0),
        goal_tolerance: 1.0,
        obstacles,
        controller,
        vehicle: VehicleParams {
            v_max: 4.0,
            ..Default::default()
        },
        planner: PlannerConfig {
            max_iterations: 1500,
            clearance: 2.0,
            ..Default::default()
        },
        mpc: MpcConfig::default(),
        pursuit: PursuitConfig::default(),
        fusion: FusionConfig::default(),
        sim: SimConfig {
            max_steps: 1500,
            cruise_speed: 2.5,
            ..Default::default()
        },
        seed,
    }
}

fn movers() -> Vec<Obstacle> {
    vec![
        Obstacle::new(Point::new(20.0, 30.0), 0.6, Point::new(0.0, -0.5)).unwrap(),
        Obstacle::fixed(Point::new(33.0, 20.0), 0.8).unwrap(),
    ]
}

#[test]
fn runs_satisfy_result_invariants() {
    for k in [ControllerKind::MpcBasic, ControllerKind::Pursuit, ControllerKind::InfoFusion] {
        for seed in 0..2 {
            let sc = scenario(k, movers(), seed);
            let r = run_scenario(&sc).unwrap();
            let last = *r.trajectory.last();
            assert_eq!(r.elapsed_sim_time, r.steps_used as f64 * sc.sim.dt);
            assert_eq!(r.trajectory.len(), r.steps_used + 1);
            assert_eq!(r.controls.len(), r.steps_used);
            if r.outcome == Outcome::GoalReached {
                assert!(last.position().dist(sc.goal) <= sc.goal_tolerance);
            }
            // Re-scan clearance along the run with obstacles replayed.
            let mut obs = sc.initial_obstacles();
            let mut min_c = f64::INFINITY;
            for (i, s) in r.trajectory.states().iter().enumerate() {
                if i > 0 {
                    obs = obs
                        .iter()
                        .map(|o| infofusion_core::sim::advance_obstacle(o, sc.sim.dt, &sc.grid))
                        .collect();
                }
                min_c = min_c.min(clearance(
                    &sc.grid,
                    s.position(),
                    &obs,
                    sc.vehicle.footprint_radius,
                    sc.sim.clearance_search,
                ));
                if r.outcome == Outcome::Collision && i + 1 == r.trajectory.len() {
                    assert!(!is_free_point(&sc.grid, s.position(), &obs, sc.vehicle.footprint_radius));
                }
            }
            assert_eq!(min_c, r.min_clearance, "{k} seed {seed}");
        }
    }
}

#[test]
fn static_runs_do_not_tunnel() {
    for k in [ControllerKind::MpcBasic, ControllerKind::Pursuit, ControllerKind::InfoFusion] {
        let sc = scenario(k, vec![], 1);
        let r = run_scenario(&sc).unwrap();
        assert_eq!(r.outcome, Outcome::GoalReached, "{k}");
        for w in r.trajectory.states().windows(2) {
            assert!(is_free_segment(
                &sc.grid,
                w[0].position(),
                w[1].position(),
                &[],
                sc.vehicle.footprint_radius
            ));
        }
    }
}

#[test]
fn same_seed_same_run() {
    let sc = scenario(ControllerKind::InfoFusion, movers(), 4);
    let a = run_scenario(&sc).unwrap();
    let b = run_scenario(&sc).unwrap();
    assert_eq!(a, b);
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn gated_dimensions_follow_mpc() {
    let sc = scenario(ControllerKind::InfoFusion, movers(), 2);
    let r = run_scenario(&sc).unwrap();
    assert!(!r.mi_trace.is_empty());
    for rec in &r.mi_trace {
        for dim in StateDim::ALL {
            let d = rec.report.get(dim);
            assert_eq!(d.gated, d.nmi <= sc.fusion.threshold);
            if d.gated {
                assert_eq!(dim.get(&rec.fused_next).to_bits(), dim.get(&rec.mpc_next).to_bits());
            }
        }
    }
}

#[test]
fn metrics_examples() {
    let alternating: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    assert_eq!(sign_flips(&alternating), 9);
    assert_eq!(variance(&[0.4; 12]), 0.0);

    let sc = scenario(ControllerKind::MpcBasic, vec![], 0);
    let r = run_scenario(&sc).unwrap();
    let m = compute_metrics(&r);
    assert_eq!(m.outcome, r.outcome);
    assert_eq!(m.path_length, r.path_length);
    assert_eq!(m.min_clearance, r.min_clearance);
    assert!(m.mean_clearance >= m.min_clearance);
    assert_eq!(m.completion_time.is_some(), r.outcome == Outcome::GoalReached);
}
