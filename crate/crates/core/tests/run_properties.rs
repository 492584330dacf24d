//! Whole-run invariants on small random scenarios, checked from the step log
//! with code independent of the monitors.

use proptest::prelude::*;

use swarmplan::geom::Aabb;
use swarmplan::sim::{read_log, run, SimConfig};
use swarmplan::world::{AgentModel, AgentTask, CommRange, EnvKind, GridWorld, ObstacleSet, Scenario};
use swarmplan::Point;

const RADIUS: f64 = 0.15;

fn scenario(blocks: &[(usize, usize)], tasks: &[(usize, usize)], range: CommRange) -> Option<Scenario> {
    let boxes = blocks
        .iter()
        .map(|&(x, y)| Aabb::from_center(Point::new(x as f64 * 0.5, y as f64 * 0.5), Point::splat(0.1)))
        .collect();
    let world = GridWorld::new(Point::zero(), 0.5, 7, 7, ObstacleSet::new(boxes).ok()?, RADIUS).ok()?;
    let agents = tasks.iter().map(|&(start, goal)| AgentTask { start, goal }).collect();
    Scenario::new(EnvKind::Custom, world, agents, AgentModel::default(), range, 0).ok()
}

fn distinct(v: &[usize]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.windows(2).all(|w| w[0] != w[1])
}

fn edge_distance(world: &GridWorld, p: Point) -> f64 {
    // Distance to the nearest horizontal or vertical grid line through a
    // pair of adjacent free vertices.
    let mut best = f64::INFINITY;
    for v in 0..world.vertex_count() {
        for &u in world.neighbors(v) {
            let (a, b) = (world.position(v), world.position(u));
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
            best = best.min((a + ab * t - p).norm());
        }
    }
    best
}

fn tasks_strategy() -> impl Strategy<Value = (Vec<(usize, usize)>, Vec<(usize, usize)>, bool)> {
    let blocks = prop::collection::vec((1usize..6, 1usize..6), 0..4);
    let agents = prop::sample::subsequence((0..49).collect::<Vec<_>>(), 6).prop_shuffle();
    (blocks, agents, any::<bool>()).prop_map(|(blocks, cells, finite)| {
        let tasks = (0..3).map(|i| (cells[i], cells[i + 3])).collect();
        (blocks, tasks, finite)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn random_runs_keep_every_invariant((blocks, tasks, finite) in tasks_strategy()) {
        let range = if finite { CommRange::finite(2.0).unwrap() } else { CommRange::INFINITE };
        let sc = scenario(&blocks, &tasks, range);
        prop_assume!(sc.is_some());
        let sc = sc.unwrap();
        let mut buf = Vec::new();
        let m = run(&sc, &SimConfig::default(), Some(&mut buf)).unwrap();
        prop_assert!(m.success, "{:?}", m);

        let records = read_log(buf.as_slice()).unwrap();
        let world = &sc.world;
        for r in &records {
            prop_assert!(r.violations.is_empty());
            let wps: Vec<usize> = r.agents.iter().map(|a| a.waypoint).collect();
            prop_assert!(distinct(&wps), "step {} waypoints {:?}", r.step, wps);
            let trajs: Vec<_> = r.agents.iter().map(|a| a.trajectory.to_trajectory().unwrap()).collect();
            for (i, a) in r.agents.iter().enumerate() {
                prop_assert!(edge_distance(world, a.subgoal) <= 1e-9);
                for b in &r.agents[i + 1..] {
                    prop_assert!((a.subgoal - b.subgoal).norm() >= 2.0 * RADIUS - 1e-9);
                }
            }
            // Separation and clearance on a grid finer than the monitor's.
            let steps = 50;
            let horizon = trajs[0].segments() as f64 * 0.2;
            let t0 = r.time;
            for s in 0..=steps {
                let t = t0 + horizon * s as f64 / steps as f64;
                let pts: Vec<Point> = trajs.iter().map(|tr| tr.evaluate(t).unwrap()).collect();
                for (i, p) in pts.iter().enumerate() {
                    prop_assert!(world.obstacles().signed_distance(*p) >= RADIUS - 1e-6);
                    for q in &pts[i + 1..] {
                        prop_assert!((*p - *q).norm() >= 2.0 * RADIUS - 1e-6);
                    }
                }
            }
        }
        let last = records.last().unwrap();
        for (a, t) in last.agents.iter().zip(&sc.agents) {
            prop_assert_eq!(a.waypoint, t.goal);
            prop_assert!((a.position - world.position(t.goal)).norm() <= 0.05);
        }
    }
}
