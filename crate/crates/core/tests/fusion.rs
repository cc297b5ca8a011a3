use infofusion_core::fusion::{
    fuse_states, fusion_weights, mutual_information, normalized_mi, FusionConfig, StateDim,
};
use infofusion_core::vehicle::Trajectory;
use infofusion_core::VehicleState;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Joint-table MI from explicit probabilities, bins on the pooled range.
fn oracle_mi(xs: &[f64], ys: &[f64], bins: usize) -> f64 {
    let lo = xs.iter().chain(ys).cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().chain(ys).cloned().fold(f64::NEG_INFINITY, f64::max);
    let bin = |v: f64| {
        if hi <= lo {
            0
        } else {
            (((v - lo) / (hi - lo) * bins as f64).floor() as usize).min(bins - 1)
        }
    };
    let n = xs.len() as f64;
    let mut joint = vec![vec![0.0; bins]; bins];
    for (&x, &y) in xs.iter().zip(ys) {
        joint[bin(x)][bin(y)] += 1.0 / n;
    }
    let px: Vec<f64> = (0..bins).map(|i| joint[i].iter().sum()).collect();
    let py: Vec<f64> = (0..bins).map(|j| (0..bins).map(|i| joint[i][j]).sum()).collect();
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            if joint[i][j] > 0.0 {
                mi += joint[i][j] * (joint[i][j] / (px[i] * py[j])).log2();
            }
        }
    }
    mi.max(0.0)
}

fn seq_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            proptest::collection::vec(prop_oneof![-5.0f64..5.0, Just(0.0), Just(1.0)], n),
            proptest::collection::vec(prop_oneof![-5.0f64..5.0, Just(0.0), Just(1.0)], n),
        )
    })
}

fn traj_pair() -> impl Strategy<Value = (Trajectory, Trajectory)> {
    let state = || {
        (0.0f64..50.0, 0.0f64..50.0, -PI..PI, 0.0f64..10.0)
            .prop_map(|(x, y, t, v)| VehicleState::new(x, y, t, v))
    };
    (2usize..12).prop_flat_map(move |n| {
        (
            state(),
            proptest::collection::vec(state(), n),
            proptest::collection::vec(state(), n),
            0.0f64..1.0,
        )
            .prop_map(|(s0, a, b, mix)| {
                // Blend the second sequence toward the first so that some pairs agree.
                let b: Vec<VehicleState> = a
                    .iter()
                    .zip(&b)
                    .map(|(p, q)| {
                        VehicleState::new(
                            p.x + mix * (q.x - p.x),
                            p.y + mix * (q.y - p.y),
                            p.theta + mix * (q.theta - p.theta),
                            p.v + mix * (q.v - p.v),
                        )
                    })
                    .collect();
                let mut pa = vec![s0];
                pa.extend(a);
                let mut pb = vec![s0];
                pb.extend(b);
                (Trajectory::new(pa, 0.1).unwrap(), Trajectory::new(pb, 0.1).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mi_matches_joint_table((xs, ys) in seq_pair(), bins in 2usize..12) {
        let m = mutual_information(&xs, &ys, bins).unwrap();
        prop_assert!((m.mi - oracle_mi(&xs, &ys, bins)).abs() <= 1e-9);
    }

    #[test]
    fn mi_symmetry_and_bounds((xs, ys) in seq_pair()) {
        let a = mutual_information(&xs, &ys, 10).unwrap();
        let b = mutual_information(&ys, &xs, 10).unwrap();
        prop_assert!((a.mi - b.mi).abs() <= 1e-12);
        prop_assert!(a.mi >= 0.0);
        prop_assert!(a.mi <= a.h_x.min(a.h_y) + 1e-9);
        let nmi = normalized_mi(&xs, &ys, 10).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&nmi));
    }

    #[test]
    fn weights_are_a_partition(nmi in 0.0f64..=1.0) {
        let (w1, w2) = fusion_weights(nmi);
        prop_assert!((w1 + w2 - 1.0).abs() <= 1e-12);
        prop_assert!((w2 - nmi / (nmi + 1.0)).abs() <= 1e-12);
        prop_assert!((0.0..=0.5).contains(&w2));
        prop_assert!(w1 >= 0.5);
    }

    #[test]
    fn fusion_gates_and_stays_convex((p, m) in traj_pair(), threshold in prop_oneof![Just(0.85), 0.0f64..1.0]) {
        let cfg = FusionConfig { bins: 10, threshold };
        let (fused, report) = fuse_states(&p, &m, &cfg).unwrap();
        prop_assert_eq!(fused.first(), m.first());
        for dim in StateDim::ALL {
            let r = report.get(dim);
            prop_assert_eq!(r.gated, r.nmi <= threshold);
            for ((f, a), b) in fused.states().iter().zip(p.states()).zip(m.states()) {
                let (fv, av, bv) = (dim.get(f), dim.get(a), dim.get(b));
                if r.gated {
                    prop_assert_eq!(fv.to_bits(), bv.to_bits());
                } else if dim != StateDim::Theta {
                    prop_assert!(fv >= av.min(bv) - 1e-12 && fv <= av.max(bv) + 1e-12);
                }
            }
        }
    }
}
