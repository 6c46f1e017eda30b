//! Property tests for the grid-level building blocks, checked against the oracles.

use ctcpp::coverage_tree::CoverageTree;
use ctcpp::grid::{CellIndex, Mask, Tiling};
use ctcpp::occupancy::{
    close, closing, encode, extract_subregions, Label, ProbOccupancyGrid, Reading, Subregion,
    SymbolicMap,
};
use ctcpp::planner2d::cover_subregion;
use ctcpp::traversal::{expand_with_dummy, nearest_neighbor, solve, two_opt, WeightMatrix};
use ctcpp_oracles::{batch_log_odds, closing_exact, components_exact, tsp_exact, Raster};
use proptest::prelude::*;

fn labels(n: usize) -> impl Strategy<Value = Vec<Label>> {
    prop::collection::vec(
        prop_oneof![
            Just(Label::Unexplored),
            Just(Label::Safe),
            Just(Label::Threat)
        ],
        n,
    )
}

fn sym_map(nx: usize, ny: usize) -> impl Strategy<Value = SymbolicMap> {
    labels(nx * ny).prop_map(move |labels| SymbolicMap {
        nx,
        ny,
        labels,
        threat_threshold: 0.2,
    })
}

/// Safe-heavy maps so that subregions are large enough to be interesting.
fn safe_heavy(nx: usize, ny: usize) -> impl Strategy<Value = SymbolicMap> {
    prop::collection::vec(prop::bool::weighted(0.75), nx * ny).prop_map(move |safe| SymbolicMap {
        nx,
        ny,
        labels: safe
            .into_iter()
            .map(|s| if s { Label::Safe } else { Label::Threat })
            .collect(),
        threat_threshold: 0.2,
    })
}

fn raster_of(mask: &Mask) -> Raster {
    Raster::new(mask.nx, mask.ny, mask.cells.clone())
}

fn matrix(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..100.0f64, n * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sequential_updates_equal_batch_count(readings in prop::collection::vec(any::<bool>(), 0..400)) {
        let t = Tiling::new(25.0, 1, 1).unwrap();
        let l_occ = 0.002139;
        let mut g = ProbOccupancyGrid::<f64>::new(t, l_occ).unwrap();
        let cell = CellIndex::new(0, 0);
        for &occupied in &readings {
            g.update(&[Reading { cell, occupied }]).unwrap();
        }
        prop_assert_eq!(g.log_odds(cell), batch_log_odds(&readings, l_occ));
    }

    #[test]
    fn updates_commute(mut readings in prop::collection::vec((0usize..9, any::<bool>()), 0..200), seed in any::<u64>()) {
        let t = Tiling::new(25.0, 3, 3).unwrap();
        let ev: Vec<Reading> = readings.iter().map(|&(i, o)| Reading { cell: t.cell(i), occupied: o }).collect();
        let mut a = ProbOccupancyGrid::<f64>::new(t, 0.01).unwrap();
        a.update(&ev).unwrap();
        // Deterministic shuffle driven by the seed.
        let mut s = seed | 1;
        for k in (1..readings.len()).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            readings.swap(k, (s % (k as u64 + 1)) as usize);
        }
        let mut b = ProbOccupancyGrid::<f64>::new(t, 0.01).unwrap();
        for &(i, o) in &readings {
            b.update(&[Reading { cell: t.cell(i), occupied: o }]).unwrap();
        }
        for c in t.cells() {
            prop_assert_eq!(a.log_odds(c), b.log_odds(c));
        }
    }

    #[test]
    fn closing_matches_oracle(cells in prop::collection::vec(prop::bool::weighted(0.3), 18 * 18), radius in 0usize..3) {
        let mask = Mask { nx: 18, ny: 18, cells };
        let ours = closing(&mask, radius);
        prop_assert_eq!(raster_of(&ours), closing_exact(&raster_of(&mask), radius));
        prop_assert!(mask.is_subset_of(&ours));
        prop_assert_eq!(closing(&ours, radius), ours);
    }

    #[test]
    fn closed_threats_cover_raw_threats(net in prop::collection::vec(-400i64..400, 18 * 18), scanned in prop::collection::vec(any::<bool>(), 18 * 18)) {
        let t = Tiling::new(25.0, 18, 18).unwrap();
        let mut g = ProbOccupancyGrid::<f64>::new(t, 0.002139).unwrap();
        for (i, &n) in net.iter().enumerate() {
            let occupied = n > 0;
            let ev = vec![Reading { cell: t.cell(i), occupied }; n.unsigned_abs() as usize];
            g.update(&ev).unwrap();
        }
        let scanned = Mask { nx: 18, ny: 18, cells: scanned };
        let raw = encode(&g, &scanned, 0.2);
        let closed = encode(&close(&g, 3, 0.2).unwrap(), &scanned, 0.2);
        for c in t.cells() {
            if raw.get(c) == Label::Threat {
                prop_assert_eq!(closed.get(c), Label::Threat);
            }
        }
    }

    #[test]
    fn subregions_match_union_find(sym in sym_map(18, 18)) {
        let t = Tiling::new(25.0, 18, 18).unwrap();
        let ours: Vec<Vec<usize>> = extract_subregions(&sym, &t)
            .into_iter()
            .map(|r| { let mut v: Vec<usize> = r.cells.iter().map(|&c| t.index(c)).collect(); v.sort(); v })
            .collect();
        let safe = Raster::new(18, 18, sym.labels.iter().map(|&l| l == Label::Safe).collect());
        prop_assert_eq!(ours, components_exact(&safe));
        prop_assert_eq!(sym.count(Label::Safe) + sym.count(Label::Threat) + sym.count(Label::Unexplored), 324);
    }

    #[test]
    fn planner_covers_safely(sym in safe_heavy(12, 12)) {
        let t = Tiling::new(25.0, 12, 12).unwrap();
        for region in extract_subregions(&sym, &t) {
            let start = t.center(region.cells[0]);
            let plan = cover_subregion(&sym, &t, &region, start, 25.0).unwrap();
            let mut got = plan.covered.clone();
            got.sort();
            prop_assert_eq!(&got, &region.cells);
            for w in plan.waypoints.windows(2) {
                let steps = 50;
                for k in 0..=steps {
                    let f = k as f64 / steps as f64;
                    let (x, y) = (w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1]));
                    let c = t.cell_of(x, y).unwrap();
                    prop_assert_eq!(sym.get(c), Label::Safe);
                    prop_assert!(region.contains(c));
                }
            }
        }
    }

    #[test]
    fn planner_overhead_is_bounded_on_open_rectangles(nx in 1usize..15, ny in 1usize..15, sx in 0usize..15, sy in 0usize..15) {
        let t = Tiling::new(25.0, nx, ny).unwrap();
        let sym = SymbolicMap::filled(nx, ny, Label::Safe, 0.2);
        let region = Subregion::from_cells(t.cells().collect(), &t);
        let start = t.center(CellIndex::new(sx % nx, sy % ny));
        let plan = cover_subregion(&sym, &t, &region, start, 25.0).unwrap();
        prop_assert!(plan.length() <= 2.0 * region.len() as f64 * 25.0);
    }

    #[test]
    fn tsp_solver_is_valid_and_bounded(n in 3usize..=8, data in matrix(8)) {
        // Transition costs are symmetric, so the test matrices are too.
        let w = WeightMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { data[i.min(j) * 8 + i.max(j)] }).unwrap();
        let we = expand_with_dummy(&w);
        let run = solve(&we);
        let order = &run.tour.order;
        prop_assert_eq!(order.len(), n + 2);
        prop_assert_eq!(order[0], n);
        prop_assert_eq!(order[n + 1], n);
        prop_assert_eq!(order[1], 0);
        let mut seen = order[..=n].to_vec();
        seen.sort();
        prop_assert_eq!(seen, (0..=n).collect::<Vec<_>>());
        prop_assert_eq!(run.tour.cost, we.tour_cost(order));
        prop_assert!(run.tour.cost <= run.initial.cost);
        let mut last = run.initial.cost;
        for s in &run.swaps {
            prop_assert!(s.cost_after < last);
            last = s.cost_after;
        }
        let rows: Vec<Vec<f64>> = (0..=n).map(|i| (0..=n).map(|j| we.get(i, j)).collect()).collect();
        let exact = tsp_exact(&rows).unwrap().cost;
        prop_assert!(run.tour.cost >= exact * (1.0 - 1e-12));
    }

    #[test]
    fn tsp_order_is_scale_invariant(n in 3usize..=8, data in prop::collection::vec(1u32..1000, 64), c in 1u32..64) {
        // Integer weights and power-of-two scales keep every comparison exact.
        let w = WeightMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { data[i.min(j) * 8 + i.max(j)] as f64 }).unwrap();
        let scale = 2f64.powi(c as i32 % 12 - 6);
        let (a, b) = (expand_with_dummy(&w), expand_with_dummy(&w.scaled(scale)));
        let (na, nb) = (nearest_neighbor(&a), nearest_neighbor(&b));
        prop_assert_eq!(&na.order, &nb.order);
        prop_assert_eq!(two_opt(&a, &na).0.order, two_opt(&b, &nb).0.order);
    }

    #[test]
    fn tree_stays_consistent(ops in prop::collection::vec((any::<prop::sample::Index>(), 0usize..4), 1..40)) {
        let t = Tiling::new(25.0, 4, 4).unwrap();
        let region = || Subregion::from_cells(vec![CellIndex::new(0, 0)], &t);
        let mut tree = CoverageTree::init(region()).unwrap();
        let mut explored = 0;
        for (pick, kids) in ops {
            let unexplored = tree.unexplored();
            if unexplored.is_empty() {
                break;
            }
            let id = unexplored[pick.index(unexplored.len())];
            tree.mark_explored(id).unwrap();
            tree.add_children(id, (0..kids).map(|_| region()).collect()).unwrap();
            prop_assert!(tree.explored().len() > explored);
            explored = tree.explored().len();
            tree.check_invariants().unwrap();
            for n in tree.nodes() {
                if let Some(p) = n.parent {
                    prop_assert_eq!(tree.node(p).unwrap().level + 1, n.level);
                }
            }
        }
    }
}
