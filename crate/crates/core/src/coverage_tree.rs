//! The coverage tree: discovered subregions, one level per slicing plane.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellIndex, Tiling};
use crate::occupancy::Subregion;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeState {
    #[serde(rename = "U")]
    Unexplored,
    #[serde(rename = "E")]
    Explored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: NodeId,
    pub level: usize,
    pub subregion: Subregion,
    pub state: NodeState,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// Rooted tree of subregions. Node ids are dense and assigned in insertion order;
/// the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTree {
    nodes: Vec<TreeNode>,
}

impl CoverageTree {
    pub fn init(root_region: Subregion) -> Result<Self> {
        if root_region.is_empty() {
            return Err(Error::Domain("root region is empty".into()));
        }
        let root = TreeNode {
            id: 0,
            level: 0,
            subregion: root_region,
            state: NodeState::Unexplored,
            parent: None,
            children: Vec::new(),
        };
        Ok(Self { nodes: vec![root] })
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> Result<&TreeNode> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::Domain(format!("no node {id}")))
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn branch_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    pub fn unexplored(&self) -> Vec<NodeId> {
        self.ids_in(NodeState::Unexplored)
    }

    pub fn explored(&self) -> Vec<NodeId> {
        self.ids_in(NodeState::Explored)
    }

    fn ids_in(&self, state: NodeState) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.state == state)
            .map(|n| n.id)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.nodes.iter().all(|n| n.state == NodeState::Explored)
    }

    /// Attaches one unexplored child per subregion one level below `parent`.
    pub fn add_children(
        &mut self,
        parent: NodeId,
        subregions: Vec<Subregion>,
    ) -> Result<Vec<NodeId>> {
        let p = self.node(parent)?;
        if p.state != NodeState::Explored {
            return Err(Error::State(format!(
                "node {parent} must be explored before it can have children"
            )));
        }
        if subregions.iter().any(Subregion::is_empty) {
            return Err(Error::Domain("child subregion is empty".into()));
        }
        let level = p.level + 1;
        let mut ids = Vec::with_capacity(subregions.len());
        for subregion in subregions {
            let id = self.nodes.len();
            self.nodes.push(TreeNode {
                id,
                level,
                subregion,
                state: NodeState::Unexplored,
                parent: Some(parent),
                children: Vec::new(),
            });
            self.nodes[parent].children.push(id);
            ids.push(id);
        }
        Ok(ids)
    }

    pub fn mark_explored(&mut self, id: NodeId) -> Result<()> {
        let node = self
            .nodes
            .get_mut(id)
            .ok_or_else(|| Error::Domain(format!("no node {id}")))?;
        if node.state == NodeState::Explored {
            return Err(Error::State(format!("node {id} is already explored")));
        }
        node.state = NodeState::Explored;
        Ok(())
    }

    /// Lowest common ancestor, found by walking parent pointers.
    pub fn common_ancestor(&self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (mut a, mut b) = (self.node(a)?, self.node(b)?);
        while a.level > b.level {
            a = &self.nodes[a.parent.expect("non-root node has a parent")];
        }
        while b.level > a.level {
            b = &self.nodes[b.parent.expect("non-root node has a parent")];
        }
        while a.id != b.id {
            a = &self.nodes[a.parent.expect("levels agree, so both are non-root")];
            b = &self.nodes[b.parent.expect("levels agree, so both are non-root")];
        }
        Ok(a.id)
    }

    pub fn common_ancestor_level(&self, a: NodeId, b: NodeId) -> Result<usize> {
        Ok(self.nodes[self.common_ancestor(a, b)?].level)
    }

    /// Checks the single-root, single-parent, level and acyclicity properties.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Internal(msg));
        for n in &self.nodes {
            match n.parent {
                None if n.id != 0 => return fail(format!("node {} has no parent", n.id)),
                None if n.level != 0 => return fail("root is not at level 0".into()),
                Some(p) if p >= n.id => return fail(format!("node {} has later parent {p}", n.id)),
                Some(p) if self.nodes[p].level + 1 != n.level => {
                    return fail(format!(
                        "node {} at level {} under level {}",
                        n.id, n.level, self.nodes[p].level
                    ))
                }
                Some(p) if !self.nodes[p].children.contains(&n.id) => {
                    return fail(format!("node {} missing from its parent's children", n.id))
                }
                _ => {}
            }
            if n.subregion.is_empty() {
                return fail(format!("node {} has an empty subregion", n.id));
            }
        }
        let links: usize = self.nodes.iter().map(|n| n.children.len()).sum();
        if links != self.branch_count() {
            return fail(format!(
                "{links} child links for {} branches",
                self.branch_count()
            ));
        }
        Ok(())
    }

    pub fn to_records(&self) -> Vec<NodeRecord> {
        self.nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                level: n.level,
                state: n.state,
                centroid: n.subregion.centroid,
                parent: n.parent,
                cells: n.subregion.cells.iter().map(|c| [c.ix, c.iy]).collect(),
            })
            .collect()
    }

    /// Rebuilds a tree from exported records, recomputing centroids on `tiling`.
    pub fn from_records(records: &[NodeRecord], tiling: &Tiling) -> Result<Self> {
        let mut nodes: Vec<TreeNode> = Vec::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.id != i {
                return Err(Error::Parse(format!(
                    "node ids must be dense; found {} at position {i}",
                    r.id
                )));
            }
            let cells = r
                .cells
                .iter()
                .map(|&[ix, iy]| CellIndex::new(ix, iy))
                .collect();
            nodes.push(TreeNode {
                id: r.id,
                level: r.level,
                subregion: Subregion::from_cells(cells, tiling),
                state: r.state,
                parent: r.parent,
                children: Vec::new(),
            });
        }
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent {
                if p >= i {
                    return Err(Error::Parse(format!("node {i} refers to later parent {p}")));
                }
                nodes[p].children.push(i);
            }
        }
        let tree = Self { nodes };
        tree.check_invariants()
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(tree)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph coverage_tree {\n  node [shape=box];\n");
        for n in &self.nodes {
            let style = match n.state {
                NodeState::Explored => "solid",
                NodeState::Unexplored => "dashed",
            };
            let _ = writeln!(
                out,
                "  n{} [label=\"n{}^{} ({} cells)\", style={style}];",
                n.id,
                n.id,
                n.level,
                n.subregion.len()
            );
        }
        for n in &self.nodes {
            if let Some(p) = n.parent {
                let _ = writeln!(out, "  n{p} -> n{};", n.id);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Flat serialized form of a tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub level: usize,
    pub state: NodeState,
    pub centroid: [f64; 2],
    pub parent: Option<NodeId>,
    pub cells: Vec<[usize; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(t: &Tiling, cells: &[(usize, usize)]) -> Subregion {
        Subregion::from_cells(
            cells.iter().map(|&(x, y)| CellIndex::new(x, y)).collect(),
            t,
        )
    }

    fn full(t: &Tiling) -> Subregion {
        Subregion::from_cells(t.cells().collect(), t)
    }

    /// The two-level example tree: root, two level-1 nodes, three level-2 nodes.
    fn sample_tree() -> CoverageTree {
        let t = Tiling::new(25.0, 18, 18).unwrap();
        let mut tree = CoverageTree::init(full(&t)).unwrap();
        tree.mark_explored(0).unwrap();
        tree.add_children(
            0,
            vec![region(&t, &[(0, 0), (1, 0)]), region(&t, &[(10, 10)])],
        )
        .unwrap();
        tree.mark_explored(1).unwrap();
        tree.mark_explored(2).unwrap();
        tree.add_children(1, vec![region(&t, &[(0, 0)]), region(&t, &[(1, 0)])])
            .unwrap();
        tree.add_children(2, vec![region(&t, &[(10, 10)])]).unwrap();
        tree
    }

    #[test]
    fn init_gives_single_unexplored_root() {
        let t = Tiling::new(25.0, 18, 18).unwrap();
        let tree = CoverageTree::init(full(&t)).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert_eq!(tree.unexplored(), vec![0]);
        assert_eq!(tree.node(0).unwrap().level, 0);
        assert_eq!(tree.node(0).unwrap().subregion.len(), 324);
        assert!(matches!(
            CoverageTree::init(Subregion::from_cells(vec![], &t)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn children_require_explored_parent() {
        let t = Tiling::new(25.0, 18, 18).unwrap();
        let mut tree = CoverageTree::init(full(&t)).unwrap();
        let err = tree.add_children(0, vec![region(&t, &[(0, 0)])]);
        assert!(matches!(err, Err(Error::State(_))));
        tree.mark_explored(0).unwrap();
        assert!(tree.add_children(0, vec![]).unwrap().is_empty());
        assert_eq!(tree.node_count(), 1);
        assert!(matches!(tree.mark_explored(0), Err(Error::State(_))));
    }

    #[test]
    fn ancestors() {
        let tree = sample_tree();
        tree.check_invariants().unwrap();
        assert_eq!(tree.common_ancestor_level(1, 2).unwrap(), 0);
        assert_eq!(tree.common_ancestor_level(3, 1).unwrap(), 1);
        assert_eq!(tree.common_ancestor_level(3, 4).unwrap(), 1);
        assert_eq!(tree.common_ancestor_level(3, 5).unwrap(), 0);
        assert_eq!(tree.common_ancestor(5, 5).unwrap(), 5);
        assert!(tree.common_ancestor(0, 9).is_err());
    }

    #[test]
    fn explored_counts_move_together() {
        let mut tree = sample_tree();
        let (u, e) = (tree.unexplored().len(), tree.explored().len());
        tree.mark_explored(4).unwrap();
        assert_eq!(tree.unexplored().len(), u - 1);
        assert_eq!(tree.explored().len(), e + 1);
        for id in tree.unexplored() {
            tree.mark_explored(id).unwrap();
        }
        assert!(tree.is_complete());
    }

    #[test]
    fn records_round_trip() {
        let tree = sample_tree();
        let t = Tiling::new(25.0, 18, 18).unwrap();
        let json = serde_json::to_string(&tree.to_records()).unwrap();
        let back: Vec<NodeRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(CoverageTree::from_records(&back, &t).unwrap(), tree);
        assert!(tree.to_dot().contains("n2 -> n5;"));
    }
}
