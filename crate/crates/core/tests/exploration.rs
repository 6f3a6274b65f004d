mod common;

use std::collections::BTreeSet;

use commcp::explore::{detect_frontiers, smooth, CellState, Field, OccupancyMap};
use commcp::scene::{Cell, CellKind, GridScene, Heading, Pose, SensorConfig};
use proptest::prelude::*;

use common::walled_scene;

fn free_cells(scene: &GridScene) -> Vec<Cell> {
    scene.cells().filter(|(_, k)| *k == CellKind::Free).map(|(c, _)| c).collect()
}

fn scenes() -> impl Strategy<Value = (GridScene, Vec<(usize, usize)>)> {
    (3usize..=10, 3usize..=10).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(prop::bool::weighted(0.25), w * h),
            prop::collection::vec((any::<usize>(), 0usize..4), 1..12),
        )
            .prop_filter_map("needs a free cell", move |(walls, poses)| {
                walls.iter().any(|b| !b).then(|| (walled_scene(w, h, &walls, &[]), poses))
            })
    })
}

fn pose_at(free: &[Cell], (pick, heading): (usize, usize)) -> Pose {
    Pose::new(free[pick % free.len()], Heading::ALL[heading])
}

/// Reference blur: pad by mirroring into an explicit array, then a direct
/// 2D weighted sum with unnormalized weights divided at the end.
fn blur_oracle(f: &Field, sigma: f64) -> Field {
    let (w, h) = (f.width() as i64, f.height() as i64);
    let r = (3.0 * sigma).ceil() as i64;
    let mirror = |i: i64, n: i64| -> i64 {
        let mut i = i;
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - i - 1;
            } else {
                return i;
            }
        }
    };
    let g = |k: i64| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp();
    let norm: f64 = (-r..=r).map(g).sum::<f64>().powi(2);
    let mut out = Field::zeros(f.width(), f.height());
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let c = Cell::new(mirror(x + dx, w) as i32, mirror(y + dy, h) as i32);
                    acc += g(dx) * g(dy) * f.get(c);
                }
            }
            out.set(Cell::new(x as i32, y as i32), acc / norm);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn update_order_does_not_matter((scene, poses) in scenes()) {
        let free = free_cells(&scene);
        let s = SensorConfig { fov_deg: 90.0, range: 3 };
        let reveals: Vec<BTreeSet<Cell>> = poses.iter().map(|&p| scene.reveal(pose_at(&free, p), s)).collect();
        let mut fwd = OccupancyMap::for_scene(&scene);
        for r in &reveals {
            fwd.update(r.iter().copied(), &scene);
        }
        let mut rev = OccupancyMap::for_scene(&scene);
        for r in reveals.iter().rev() {
            rev.update(r.iter().copied(), &scene);
            rev.update(r.iter().copied(), &scene);
        }
        prop_assert_eq!(&fwd, &rev);
        let union: BTreeSet<Cell> = reveals.iter().flatten().copied().collect();
        for (c, kind) in scene.cells() {
            let want = match (union.contains(&c), kind) {
                (false, _) => CellState::Unknown,
                (true, CellKind::Free) => CellState::FreeSeen,
                (true, CellKind::Wall) => CellState::WallSeen,
            };
            prop_assert_eq!(fwd.get(c), want);
        }
    }

    #[test]
    fn fully_observed_map_has_no_frontiers((scene, poses) in scenes()) {
        let free = free_cells(&scene);
        let s = SensorConfig { fov_deg: 90.0, range: 3 };
        let mut map = OccupancyMap::for_scene(&scene);
        for &p in &poses {
            map.update(scene.reveal(pose_at(&free, p), s), &scene);
        }
        let partial = detect_frontiers(&map).len();
        let all = SensorConfig { fov_deg: 360.0, range: 1 };
        for &c in &free {
            map.update(scene.reveal(Pose::new(c, Heading::N), all), &scene);
        }
        prop_assert!(detect_frontiers(&map).is_empty());
        prop_assert!(partial >= detect_frontiers(&map).len());
    }

    #[test]
    fn smoothing_matches_direct_sum(
        (w, h, data) in (1usize..9, 1usize..9).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), prop::collection::vec(0.0f64..5.0, w * h))
        }),
        sigma in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0, 3.0]),
    ) {
        let f = Field::from_vec(w, h, data);
        let got = smooth(&f, sigma);
        let want = blur_oracle(&f, sigma);
        for (a, b) in got.data().iter().zip(want.data()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{} vs {}", a, b);
        }
        prop_assert!((got.sum() - f.sum()).abs() <= 1e-9 * (1.0 + f.sum()));
    }
}
