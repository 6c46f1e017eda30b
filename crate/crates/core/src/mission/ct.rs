//! The layered coverage-tree mission.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::motion::{EvidenceSink, Vehicle};
use super::route::{plan_route, supercover};
use super::{
    check_scene, ground_truth_navigable, CellVisit, MissionConfig, MissionEvent, MissionTrace,
    PlaneMaps, PlannerParams,
};
use crate::coverage_tree::{CoverageTree, NodeId, NodeState};
use crate::error::{Error, Result};
use crate::grid::{CellIndex, Mask, Tiling};
use crate::metrics::knn_outlier_filter;
use crate::occupancy::{
    close, compute_l_occ, encode, extract_navigable, extract_subregions, Label, ProbOccupancyGrid,
    Subregion, SymbolicMap,
};
use crate::planner2d::cover_subregion;
use crate::sensor::Pose;
use crate::terrain::{ground_truth_occupancy, Heightmap, PlaneStack};
use crate::traversal::plan_visits;

#[derive(Debug, Clone)]
pub struct CtOutcome {
    pub trace: MissionTrace,
    pub tree: CoverageTree,
    pub planes: PlaneStack,
    pub tiling: Tiling,
    pub maps: PlaneMaps,
    /// Ground-truth occupancy of each plane.
    pub truth: Vec<Mask>,
}

/// Result of finishing one node: the refreshed map of the plane below, the new
/// children and the planned visiting order of all unexplored nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub symbolic: Option<SymbolicMap>,
    pub children: Vec<NodeId>,
    /// Navigable components that already belong to a node or lie under no explored node.
    pub skipped: usize,
    pub sequence: Vec<NodeId>,
}

/// Marks `node` explored, turns the navigable components of the plane below into
/// children, and orders the unexplored nodes for the next visit.
///
/// A component becomes a child of the explored node on the node's level whose
/// footprint it overlaps most (lowest id on ties). Components overlapping a node that
/// already exists on the plane below are left alone, as are components that overlap
/// no explored footprint: they are still only partly observed.
pub fn expand_and_assign(
    tree: &mut CoverageTree,
    planes: &PlaneStack,
    tiling: &Tiling,
    node: NodeId,
    pom_below: Option<&ProbOccupancyGrid<f64>>,
    params: &PlannerParams,
) -> Result<Expansion> {
    tree.mark_explored(node)?;
    let level = tree.node(node)?.level;
    let mut children = Vec::new();
    let mut skipped = 0;
    let symbolic = match pom_below {
        Some(pom) if level + 1 < planes.len() => {
            let closed = close(pom, params.closing_element, params.threat_threshold)?;
            let sym = encode(&closed, &pom.scanned_mask(), params.threat_threshold);
            let components = extract_navigable(&sym, tiling, params.min_subregion_cells);

            let mut taken = vec![false; tiling.len()];
            let mut owner: Vec<Option<NodeId>> = vec![None; tiling.len()];
            for n in tree.nodes() {
                if n.level == level + 1 {
                    for &c in &n.subregion.cells {
                        taken[tiling.index(c)] = true;
                    }
                } else if n.level == level && n.state == NodeState::Explored {
                    for &c in &n.subregion.cells {
                        owner[tiling.index(c)] = Some(n.id);
                    }
                }
            }

            let mut assigned: Vec<(NodeId, Subregion)> = Vec::new();
            let mut tally: Vec<(NodeId, usize)> = Vec::new();
            for comp in components {
                if comp.cells.iter().any(|&c| taken[tiling.index(c)]) {
                    skipped += 1;
                    continue;
                }
                tally.clear();
                for &c in &comp.cells {
                    if let Some(id) = owner[tiling.index(c)] {
                        match tally.iter_mut().find(|(o, _)| *o == id) {
                            Some(slot) => slot.1 += 1,
                            None => tally.push((id, 1)),
                        }
                    }
                }
                let best = tally
                    .iter()
                    .copied()
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
                match best {
                    Some((parent, _)) => assigned.push((parent, comp)),
                    None => skipped += 1,
                }
            }
            assigned.sort_by_key(|(p, _)| *p);
            let mut i = 0;
            while i < assigned.len() {
                let parent = assigned[i].0;
                let mut group = Vec::new();
                while i < assigned.len() && assigned[i].0 == parent {
                    group.push(assigned[i].1.clone());
                    i += 1;
                }
                children.extend(tree.add_children(parent, group)?);
            }
            Some(sym)
        }
        _ => None,
    };
    let sequence = plan_visits(tree, planes, node, &tree.unexplored())?;
    Ok(Expansion {
        symbolic,
        children,
        skipped,
        sequence,
    })
}

/// Runs the coverage-tree mission over `hm` after validating `config`.
pub fn run_ct_cpp(config: &MissionConfig, hm: &Heightmap) -> Result<CtOutcome> {
    config.validate()?;
    run_ct_cpp_unvalidated(config, hm)
}

/// As [`run_ct_cpp`] but skips the plane-spacing limit, for negative controls.
pub fn run_ct_cpp_unvalidated(config: &MissionConfig, hm: &Heightmap) -> Result<CtOutcome> {
    config.validate_except_spacing()?;
    check_scene(config, hm)?;
    Mission::new(config, hm)?.run()
}

struct Mission<'a> {
    config: &'a MissionConfig,
    hm: &'a Heightmap,
    tiling: Tiling,
    planes: PlaneStack,
    truth: Vec<Mask>,
    pom: Vec<Option<ProbOccupancyGrid<f64>>>,
    sym: Vec<Option<SymbolicMap>>,
    covered: Vec<Mask>,
    visits: Vec<CellVisit>,
    events: Vec<MissionEvent>,
}

impl<'a> Mission<'a> {
    fn new(config: &'a MissionConfig, hm: &'a Heightmap) -> Result<Self> {
        let tiling = config.tiling()?;
        let planes = config.planes()?;
        let truth = (0..planes.len())
            .map(|l| ground_truth_occupancy(hm, planes.depth(l), &tiling))
            .collect::<Result<Vec<_>>>()?;
        let l_occ = compute_l_occ(
            &config.sonar,
            config.planner.lap_width,
            config.planner.delta_h,
            config.mission.speed,
        );
        let pom = (0..planes.len())
            .map(|l| {
                if l == 0 {
                    Ok(None)
                } else {
                    ProbOccupancyGrid::new(tiling, l_occ).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        // The surface is observed directly: its map is the closed ground truth.
        let surface = &ground_truth_navigable(hm, &planes, &tiling, &config.planner)?.closed[0];
        let mut sym0 = SymbolicMap::filled(
            tiling.nx,
            tiling.ny,
            Label::Safe,
            config.planner.threat_threshold,
        );
        for c in tiling.cells() {
            if surface.get(c) {
                sym0.set(c, Label::Threat);
            }
        }
        let mut sym = vec![None; planes.len()];
        sym[0] = Some(sym0);
        Ok(Self {
            config,
            hm,
            covered: vec![Mask::new(tiling.nx, tiling.ny); planes.len()],
            tiling,
            planes,
            truth,
            pom,
            sym,
            visits: Vec::new(),
            events: Vec::new(),
        })
    }

    fn sym(&self, level: usize) -> Result<&SymbolicMap> {
        self.sym[level]
            .as_ref()
            .ok_or_else(|| Error::Internal(format!("plane {level} has no map yet")))
    }

    /// Largest 4-connected part of a node that its plane's current map still calls safe.
    fn live_region(&self, tree: &CoverageTree, id: NodeId) -> Result<Option<Subregion>> {
        let node = tree.node(id)?;
        let sym = self.sym(node.level)?;
        let mut live = SymbolicMap::filled(
            self.tiling.nx,
            self.tiling.ny,
            Label::Threat,
            sym.threat_threshold,
        );
        for &c in &node.subregion.cells {
            if sym.get(c) == Label::Safe {
                live.set(c, Label::Safe);
            }
        }
        Ok(extract_subregions(&live, &self.tiling)
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b.cells[0].cmp(&a.cells[0]))))
    }

    fn run(mut self) -> Result<CtOutcome> {
        let p = &self.config.planner;
        let roots = extract_navigable(self.sym(0)?, &self.tiling, p.min_subregion_cells);
        let root = roots
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b.cells[0].cmp(&a.cells[0])))
            .ok_or_else(|| Error::Domain("the surface plane has no navigable region".into()))?;
        let entry = root
            .entry_cell(&self.tiling)
            .expect("navigable regions are non-empty");
        let mut tree = CoverageTree::init(root)?;
        let [x, y] = self.tiling.center(entry);
        let rng = ChaCha8Rng::seed_from_u64(self.config.mission.seed);
        let mut vehicle = Vehicle::new(
            self.hm,
            &self.config.sonar,
            self.config.mission.speed,
            self.config.mission.cloud_pitch,
            rng,
            Pose::new(x, y, self.planes.depth(0)),
        )?;

        let guard = self.tiling.len() * self.planes.len();
        let mut target = tree.root();
        let mut live = self.live_region(&tree, target)?;
        for iteration in 1.. {
            if iteration > guard {
                return Err(Error::Internal(format!(
                    "coverage loop exceeded {guard} iterations ({} nodes); the tree is not converging",
                    tree.node_count()
                )));
            }
            let level = tree.node(target)?.level;
            let total = tree.node(target)?.subregion.len();
            let kept = live.as_ref().map_or(0, Subregion::len);
            if kept < total {
                self.events.push(MissionEvent::CellsDropped {
                    t: vehicle.time(),
                    node: target,
                    cells: total - kept,
                });
            }
            if let Some(region) = &live {
                self.events.push(MissionEvent::CoverageStarted {
                    t: vehicle.time(),
                    node: target,
                    level,
                    cells: region.len(),
                });
                self.cover(&mut vehicle, region, level)?;
            }

            let below = self.pom.get(level + 1).and_then(Option::as_ref);
            let exp = expand_and_assign(&mut tree, &self.planes, &self.tiling, target, below, p)?;
            if let Some(sym) = exp.symbolic {
                self.sym[level + 1] = Some(sym);
            }
            self.events.push(MissionEvent::NodeCompleted {
                t: vehicle.time(),
                node: target,
                level,
                children: exp.children,
                sequence: exp.sequence.clone(),
            });
            let Some(&next) = exp.sequence.first() else {
                break;
            };
            live = self.live_region(&tree, next)?;
            if let Some(region) = &live {
                let entry = region
                    .entry_cell(&self.tiling)
                    .expect("live regions are non-empty");
                self.transit(&mut vehicle, &tree, target, next, entry)?;
            }
            target = next;
        }
        debug_assert!(tree.is_complete());
        self.events.push(MissionEvent::Finished {
            t: vehicle.time(),
            nodes: tree.node_count(),
        });

        let m = &self.config.mission;
        let points = knn_outlier_filter(&vehicle.cloud.points(), m.knn_k, m.knn_cutoff())?;
        let trace = MissionTrace {
            poses: vehicle.poses,
            points,
            raw_hit_count: vehicle.raw_hits,
            scan_count: vehicle.scans,
            covered: self.covered,
            visits: self.visits,
            events: self.events,
        };
        Ok(CtOutcome {
            trace,
            tree,
            planes: self.planes,
            tiling: self.tiling,
            maps: PlaneMaps {
                pom: self.pom,
                symbolic: self.sym,
            },
            truth: self.truth,
        })
    }

    /// Sweeps `region` on plane `level`, starting where the vehicle is.
    fn cover(&mut self, vehicle: &mut Vehicle<'_>, region: &Subregion, level: usize) -> Result<()> {
        let pose = vehicle.pose();
        let depth = self.planes.depth(level);
        let plan = cover_subregion(
            self.sym(level)?,
            &self.tiling,
            region,
            [pose.x, pose.y],
            self.config.planner.lap_width,
        )?;
        let t0 = vehicle.time();
        let step = self.tiling.cell_size / self.config.mission.speed;
        let sym = self.sym[level].as_ref().expect("checked above");
        for (k, &cell) in plan.cell_path.iter().enumerate() {
            self.visits.push(CellVisit {
                t: t0 + k as f64 * step,
                level,
                cell,
                label: sym.get(cell),
            });
        }
        for &c in &plan.covered {
            self.covered[level].set(c, true);
        }
        // Stop half a heightmap sample short of the cell edge: beyond it the seabed
        // surface already blends in the neighbouring cell's heights.
        let reach = (0.5 * (self.tiling.cell_size - self.config.scene.resolution)).max(0.0);
        for [x, y] in extend_lap_ends(&plan.waypoints, reach) {
            self.move_horizontal(vehicle, level, Pose::new(x, y, depth))?;
        }
        Ok(())
    }

    fn move_horizontal(&mut self, vehicle: &mut Vehicle<'_>, level: usize, to: Pose) -> Result<()> {
        let below = level + 1;
        let sink = match self.pom.get_mut(below) {
            Some(Some(grid)) => Some(EvidenceSink::new(
                self.planes.depth(below),
                &self.tiling,
                &self.truth[below],
                grid,
            )),
            _ => None,
        };
        vehicle.move_to(to, sink)
    }

    /// Ascends to the shallowest plane needed, crosses it on safe cells and descends
    /// into `entry` on the plane of node `to`.
    fn transit(
        &mut self,
        vehicle: &mut Vehicle<'_>,
        tree: &CoverageTree,
        from: NodeId,
        to: NodeId,
        entry: CellIndex,
    ) -> Result<()> {
        let from_level = self
            .planes
            .level_at_depth(vehicle.pose().depth)
            .unwrap_or(tree.node(from)?.level);
        let to_level = tree.node(to)?.level;
        let start = vehicle.pose();
        let mut found = None;
        for level in (0..=tree.common_ancestor_level(from, to)?.min(from_level)).rev() {
            if let Some(route) =
                plan_route(self.sym(level)?, &self.tiling, [start.x, start.y], entry)
            {
                found = Some((level, route));
                break;
            }
        }
        let (level, route) = found.ok_or_else(|| {
            Error::Internal(format!(
                "no safe route from node {from} to node {to} on any plane"
            ))
        })?;

        let here = self.cell_at(start)?;
        self.vertical(vehicle, here, level)?;
        let depth = self.planes.depth(level);
        for [x, y] in route {
            let a = vehicle.pose();
            let t0 = vehicle.time();
            let sym = self.sym[level]
                .as_ref()
                .expect("route was planned on this map");
            for cell in supercover(&self.tiling, [a.x, a.y], [x, y])
                .into_iter()
                .skip(1)
            {
                let [cx, cy] = self.tiling.center(cell);
                let along =
                    ((cx - a.x) * (x - a.x) + (cy - a.y) * (y - a.y)) / (x - a.x).hypot(y - a.y);
                let t = t0 + along.max(0.0) / self.config.mission.speed;
                self.visits.push(CellVisit {
                    t,
                    level,
                    cell,
                    label: sym.get(cell),
                });
            }
            self.move_horizontal(vehicle, level, Pose::new(x, y, depth))?;
        }
        self.vertical(vehicle, entry, to_level)
    }

    /// Straight vertical move to plane `level`, logging each plane crossed or reached.
    fn vertical(&mut self, vehicle: &mut Vehicle<'_>, cell: CellIndex, level: usize) -> Result<()> {
        let start = vehicle.pose();
        let target = self.planes.depth(level);
        let t0 = vehicle.time();
        let v = self.config.mission.speed;
        let crossed: Vec<usize> = if target > start.depth {
            (0..=level)
                .filter(|&l| self.planes.depth(l) > start.depth)
                .collect()
        } else {
            (level..self.planes.len())
                .rev()
                .filter(|&l| self.planes.depth(l) < start.depth)
                .collect()
        };
        for l in crossed {
            let label = self.sym(l)?.get(cell);
            let t = t0 + (self.planes.depth(l) - start.depth).abs() / v;
            self.visits.push(CellVisit {
                t,
                level: l,
                cell,
                label,
            });
        }
        vehicle.move_to(Pose::new(start.x, start.y, target), None)
    }

    fn cell_at(&self, pose: Pose) -> Result<CellIndex> {
        self.tiling.cell_of(pose.x, pose.y).ok_or_else(|| {
            Error::Internal(format!(
                "vehicle left the tiling at ({}, {})",
                pose.x, pose.y
            ))
        })
    }
}

/// Pushes the ends of every along-x lap out by `reach` towards the lap direction.
///
/// The fan is across-track, so a lap ending at a cell center leaves the far half of
/// that cell unseen. Each shifted turning point stays inside its own cell column, so
/// the path still only touches the cells of the original plan.
fn extend_lap_ends(waypoints: &[[f64; 2]], reach: f64) -> Vec<[f64; 2]> {
    let along_x = |a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        (dy.abs() < 1e-9 && dx.abs() > 1e-9).then(|| dx.signum())
    };
    let n = waypoints.len();
    (0..n)
        .map(|i| {
            let [x, y] = waypoints[i];
            let incoming = (i > 0)
                .then(|| along_x(waypoints[i - 1], waypoints[i]))
                .flatten();
            let outgoing = (i + 1 < n)
                .then(|| along_x(waypoints[i], waypoints[i + 1]))
                .flatten();
            let shift = match (incoming, outgoing) {
                (Some(a), Some(b)) if a == b => 0.0,
                (Some(a), _) => a * reach,
                (None, Some(b)) => -b * reach,
                (None, None) => 0.0,
            };
            [x + shift, y]
        })
        .collect()
}
