use infofusion_core::gridmap::is_free_segment;
use infofusion_core::planner::{informed_sample, plan, shortcut_path, PlannerConfig};
use infofusion_core::{OccupancyGrid, Point};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn slalom() -> OccupancyGrid {
    let mut g = OccupancyGrid::empty(40, 40, 1.0).unwrap();
    for r in 0..28 {
        g.set_occupied(13, r, true);
    }
    for r in 12..40 {
        g.set_occupied(26, r, true);
    }
    g
}

fn cfg(seed: u64) -> PlannerConfig {
    PlannerConfig {
        max_iterations: 1500,
        rng_seed: seed,
        ..Default::default()
    }
}

#[test]
fn same_seed_same_plan() {
    let g = slalom();
    let (s, t) = (Point::new(3.0, 3.0), Point::new(37.0, 37.0));
    let a = plan(&g, &[], s, t, &cfg(11)).unwrap();
    let b = plan(&g, &[], s, t, &cfg(11)).unwrap();
    assert_eq!(a, b);
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn plans_are_valid_and_histories_monotone() {
    let g = slalom();
    let (s, t) = (Point::new(3.0, 3.0), Point::new(37.0, 37.0));
    for seed in 0..5 {
        let c = cfg(seed);
        let r = plan(&g, &[], s, t, &c).unwrap();
        assert_eq!(r.path[0], s);
        assert_eq!(*r.path.last().unwrap(), t);
        for w in r.path.windows(2) {
            assert!(is_free_segment(&g, w[0], w[1], &[], c.clearance), "seed {seed}");
        }
        assert!(r.cost_history.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 >= w[0].0));
        assert!((r.cost_history.last().unwrap().1 - r.cost).abs() < 1e-9);
    }
}

#[test]
fn shortcut_is_idempotent_on_plans() {
    let g = slalom();
    for seed in 0..3 {
        let c = cfg(seed);
        let r = plan(&g, &[], Point::new(3.0, 3.0), Point::new(37.0, 37.0), &c).unwrap();
        let once = shortcut_path(&r.path, &g, &[], c.clearance);
        let twice = shortcut_path(&once, &g, &[], c.clearance);
        assert_eq!(once, twice);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shortcut_is_idempotent(pts in proptest::collection::vec((1.5f64..38.5, 1.5f64..38.5), 2..12)) {
        let g = slalom();
        let path: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let once = shortcut_path(&path, &g, &[], 1.0);
        prop_assert_eq!(shortcut_path(&once, &g, &[], 1.0), once);
    }

    #[test]
    fn informed_samples_respect_focal_sum(
        sx in 0.0f64..50.0, sy in 0.0f64..50.0, gx in 0.0f64..50.0, gy in 0.0f64..50.0,
        slack in 0.0f64..30.0, seed in any::<u64>(),
    ) {
        let (s, t) = (Point::new(sx, sy), Point::new(gx, gy));
        let c_best = s.dist(t) + slack;
        let g = OccupancyGrid::empty(50, 50, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let p = informed_sample(s, t, c_best, &g.extent(), &mut rng).unwrap();
            prop_assert!(p.dist(s) + p.dist(t) <= c_best + 1e-9);
        }
    }
}
