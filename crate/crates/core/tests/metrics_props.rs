use std::collections::{BTreeMap, BTreeSet};

use artq_core::metrics::{auc, smooth_lengths, unique_targets, CoverageTrajectory};
use artq_core::TargetId;
use proptest::prelude::*;

fn trajectory(steps: &[bool], total: usize) -> CoverageTrajectory {
    let mut covered = 0;
    let points = steps
        .iter()
        .enumerate()
        .map(|(i, &hit)| {
            if hit && covered < total {
                covered += 1;
            }
            (i as u64 + 1, covered)
        })
        .collect();
    CoverageTrajectory {
        points,
        total_targets: total,
    }
}

proptest! {
    #[test]
    fn auc_is_normalized(steps in prop::collection::vec(any::<bool>(), 1..200), extra in 0u64..100) {
        let t = trajectory(&steps, 30);
        let horizon = t.executions() + extra;
        let full = auc(&t, 1.0, horizon).unwrap();
        let early = auc(&t, 0.2, horizon).unwrap();
        prop_assert!((0.0..=1.0).contains(&full));
        prop_assert!(early <= full);
    }

    #[test]
    fn dominance_orders_auc(a in prop::collection::vec(any::<bool>(), 2..150), b in prop::collection::vec(any::<bool>(), 2..150)) {
        let n = a.len().min(b.len());
        // pointwise maximum dominates both
        let ta = trajectory(&a[..n], 50);
        let tb = trajectory(&b[..n], 50);
        let upper = CoverageTrajectory {
            points: ta.points.iter().zip(&tb.points).map(|(p, q)| (p.0, p.1.max(q.1))).collect(),
            total_targets: 50,
        };
        let h = n as u64;
        prop_assert!(auc(&upper, 1.0, h).unwrap() >= auc(&ta, 1.0, h).unwrap());
        prop_assert!(auc(&upper, 1.0, h).unwrap() >= auc(&tb, 1.0, h).unwrap());
    }

    #[test]
    fn unique_targets_match_set_difference(sets in prop::collection::vec(prop::collection::btree_set(0u32..15, 0..10), 1..5)) {
        let covered: BTreeMap<usize, BTreeSet<TargetId>> = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.iter().map(|&t| TargetId(t)).collect()))
            .collect();
        let u = unique_targets(&covered);
        for (k, mine) in &covered {
            let others: BTreeSet<TargetId> = covered.iter().filter(|(o, _)| *o != k).flat_map(|(_, s)| s.iter().copied()).collect();
            prop_assert_eq!(u[k], mine.difference(&others).count());
        }
        let union: BTreeSet<_> = covered.values().flatten().collect();
        prop_assert!(u.values().sum::<usize>() <= union.len());
    }

    #[test]
    fn smoothing_window_one_is_identity(lengths in prop::collection::vec(1usize..50, 0..100)) {
        let s = smooth_lengths(&lengths, 1).unwrap();
        prop_assert!(s.iter().zip(&lengths).all(|(p, &l)| p.1 == l as f64));
    }
}

#[test]
fn linear_ramp_has_half_area() {
    let n = 400;
    let t = CoverageTrajectory {
        points: (1..=n).map(|i| (i, (i - 1) as usize)).collect(),
        total_targets: (n - 1) as usize,
    };
    let a = auc(&t, 1.0, n).unwrap();
    assert!((a - 0.5).abs() <= 1.0 / (2.0 * n as f64), "{a}");
}
