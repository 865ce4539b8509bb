//! Incremental association tree over entity sets.
//!
//! Internal nodes are entity sets, leaves are their entities. Adding a set:
//!
//! 1. collect every set node whose entities intersect the new set
//!    (pre-order depth-first traversal),
//! 2. none: the new node hangs off the root,
//! 3. exactly one: the new node becomes its child,
//! 4. several: they are detached (with their subtrees), and they plus the
//!    new node are re-attached as adjacent children of their common father.
//!
//! Sets that share entities are also tracked in a union-find, and the root's
//! children are kept grouped by family so each shared-entity component
//! occupies one contiguous run of root branches.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::Serialize;

use crate::color::{self, Rgb};
use crate::error::{Error, Result};
use crate::extraction::{Entity, EntitySet, EntityType, TypeCounts};

/// Construction logs a warning above this many set nodes.
pub const NODE_WARN_LIMIT: usize = 200;

pub const ROOT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Root,
    Mes,
    Me,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: String,
    pub kind: NodeKind,
    /// Set members (mes nodes) or the single entity (me leaves).
    pub entities: Vec<Entity>,
    pub counts_by_type: TypeCounts,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationTree {
    nodes: Vec<TreeNode>,
    index: BTreeMap<String, usize>,
    insertion_log: Vec<String>,
    family: Vec<usize>,
}

impl Default for AssociationTree {
    fn default() -> Self {
        Self::new()
    }
}

/// Linear-RGB mix of type colors weighted by per-type counts; gray when empty.
pub fn node_color(counts: &TypeCounts) -> Rgb {
    let total = counts.total();
    if total == 0 {
        return color::neutral_gray();
    }
    Rgb::mix(
        counts
            .iter()
            .map(|(t, n)| (color::type_color(t), n as f64 / total as f64)),
    )
    .unwrap_or_else(color::neutral_gray)
}

pub fn leaf_id(mes_id: &str, e: &Entity) -> String {
    format!("{mes_id}#{}:{}", e.etype, e.normalized)
}

impl AssociationTree {
    pub fn new() -> Self {
        AssociationTree {
            nodes: vec![TreeNode {
                id: "root".into(),
                kind: NodeKind::Root,
                entities: Vec::new(),
                counts_by_type: TypeCounts::default(),
                parent: None,
                children: Vec::new(),
                color: color::neutral_gray(),
            }],
            index: BTreeMap::new(),
            insertion_log: Vec::new(),
            family: vec![ROOT],
        }
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_of(&self, mes_id: &str) -> Option<usize> {
        self.index.get(mes_id).copied()
    }

    pub fn insertion_log(&self) -> &[String] {
        &self.insertion_log
    }

    pub fn mes_count(&self) -> usize {
        self.index.len()
    }

    pub fn depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[i].parent {
            d += 1;
            i = p;
        }
        d
    }

    /// Path from `i` up to the root, `i` first.
    pub fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    /// The root child whose subtree holds `i` (`None` for the root itself).
    pub fn root_branch(&self, i: usize) -> Option<usize> {
        let path = self.ancestors(i);
        (path.len() >= 2).then(|| path[path.len() - 2])
    }

    fn find(&self, mut i: usize) -> usize {
        while self.family[i] != i {
            i = self.family[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.family[hi] = lo;
        }
    }

    /// Representative of the shared-entity family of a set node.
    pub fn family_of(&self, i: usize) -> usize {
        self.find(i)
    }

    /// Set nodes in depth-first pre-order.
    pub fn mes_preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![ROOT];
        while let Some(i) = stack.pop() {
            if self.nodes[i].kind == NodeKind::Mes {
                out.push(i);
            }
            for &c in self.nodes[i].children.iter().rev() {
                if self.nodes[c].kind != NodeKind::Me {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Pre-order scan for set nodes intersecting `entities`. Returns the hits
    /// and every set node checked, both in visit order.
    pub fn traverse_intersections(&self, entities: &[Entity]) -> (Vec<usize>, Vec<usize>) {
        let checked = self.mes_preorder();
        let hits = checked
            .iter()
            .copied()
            .filter(|&i| self.nodes[i].entities.iter().any(|e| entities.contains(e)))
            .collect();
        (hits, checked)
    }

    /// Deepest common ancestor of `nodes`, where an input that is itself the
    /// common ancestor is replaced by its parent; a single node maps to its
    /// parent. Falls back to the root.
    pub fn common_father(&self, nodes: &[usize]) -> Result<usize> {
        if nodes.is_empty() {
            return Err(Error::invalid("common father of an empty node list"));
        }
        if let Some(&bad) = nodes.iter().find(|&&i| i >= self.nodes.len()) {
            return Err(Error::not_found(format!("tree node {bad}")));
        }
        let mut common: Vec<usize> = self.ancestors(nodes[0]).into_iter().rev().collect();
        for &n in &nodes[1..] {
            let path: Vec<usize> = self.ancestors(n).into_iter().rev().collect();
            let shared = common.iter().zip(&path).take_while(|(a, b)| a == b).count();
            common.truncate(shared);
        }
        let mut lca = *common.last().unwrap_or(&ROOT);
        if nodes.contains(&lca) {
            lca = self.nodes[lca].parent.unwrap_or(ROOT);
        }
        Ok(lca)
    }

    fn detach(&mut self, i: usize) {
        if let Some(p) = self.nodes[i].parent.take() {
            self.nodes[p].children.retain(|&c| c != i);
        }
    }

    fn attach(&mut self, parent: usize, child: usize) {
        self.nodes[child].parent = Some(parent);
        self.nodes[parent].children.push(child);
    }

    fn regroup_root(&mut self) {
        let children = std::mem::take(&mut self.nodes[ROOT].children);
        let mut order: Vec<usize> = Vec::with_capacity(children.len());
        let mut families: Vec<usize> = Vec::new();
        for &c in &children {
            let f = self.find(c);
            if !families.contains(&f) {
                families.push(f);
            }
        }
        for f in families {
            order.extend(children.iter().copied().filter(|&c| self.find(c) == f));
        }
        self.nodes[ROOT].children = order;
    }

    /// Inserts one entity set. Errors if its id is already present.
    pub fn add_node(&mut self, set: &EntitySet) -> Result<usize> {
        if self.index.contains_key(&set.id) {
            return Err(Error::Conflict(format!("{} already in tree", set.id)));
        }
        let (hits, _) = self.traverse_intersections(&set.entities);

        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id: set.id.clone(),
            kind: NodeKind::Mes,
            entities: set.entities.clone(),
            counts_by_type: set.counts_by_type,
            parent: None,
            children: Vec::new(),
            color: node_color(&set.counts_by_type),
        });
        self.family.push(id);
        for e in &set.entities {
            let leaf = self.nodes.len();
            self.nodes.push(TreeNode {
                id: leaf_id(&set.id, e),
                kind: NodeKind::Me,
                entities: vec![e.clone()],
                counts_by_type: {
                    let mut c = TypeCounts::default();
                    c.add(e.etype, 1);
                    c
                },
                parent: None,
                children: Vec::new(),
                color: color::type_color(e.etype),
            });
            self.family.push(leaf);
            self.attach(id, leaf);
        }

        match hits.len() {
            0 => self.attach(ROOT, id),
            1 => self.attach(hits[0], id),
            _ => {
                let father = self.common_father(&hits)?;
                for &h in &hits {
                    self.detach(h);
                }
                for &h in &hits {
                    self.attach(father, h);
                }
                self.attach(father, id);
            }
        }
        for &h in &hits {
            self.union(h, id);
        }
        self.regroup_root();
        self.index.insert(set.id.clone(), id);
        self.insertion_log.push(set.id.clone());
        if self.index.len() == NODE_WARN_LIMIT + 1 {
            log::warn!(
                "association tree exceeds {NODE_WARN_LIMIT} set nodes; the view may be hard to read"
            );
        }
        Ok(id)
    }

    /// Leaf count per node (a childless node counts as one leaf).
    pub fn leaf_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![ROOT];
        while let Some(i) = stack.pop() {
            order.push(i);
            stack.extend(self.nodes[i].children.iter().copied());
        }
        for &i in order.iter().rev() {
            counts[i] = if self.nodes[i].children.is_empty() {
                1
            } else {
                self.nodes[i].children.iter().map(|&c| counts[c]).sum()
            };
        }
        counts
    }

    /// Angular extents proportional to leaf counts; angle at the extent midpoint.
    pub fn radial_layout(&self) -> RadialCoordinates {
        let leaves = self.leaf_counts();
        let mut points = vec![
            RadialPoint {
                id: String::new(),
                angle: 0.0,
                depth: 0,
                start: 0.0,
                end: 0.0,
            };
            self.nodes.len()
        ];
        let mut stack = vec![(ROOT, 0.0, TAU, 0usize)];
        while let Some((i, start, end, depth)) = stack.pop() {
            points[i] = RadialPoint {
                id: self.nodes[i].id.clone(),
                angle: (start + end) / 2.0,
                depth,
                start,
                end,
            };
            let total = leaves[i] as f64;
            let mut cursor = start;
            for &c in &self.nodes[i].children {
                let width = (end - start) * leaves[c] as f64 / total;
                stack.push((c, cursor, cursor + width, depth + 1));
                cursor += width;
            }
        }
        let mut order = Vec::with_capacity(points.len());
        let mut stack = vec![ROOT];
        while let Some(i) = stack.pop() {
            order.push(i);
            stack.extend(self.nodes[i].children.iter().rev().copied());
        }
        RadialCoordinates {
            nodes: order.into_iter().map(|i| points[i].clone()).collect(),
        }
    }

    pub fn export(&self) -> TreeExport {
        TreeExport {
            mes_count: self.mes_count(),
            insertion_log: self.insertion_log.clone(),
            root: self.export_node(ROOT),
            radial: self.radial_layout(),
        }
    }

    fn export_node(&self, i: usize) -> ExportNode {
        let n = &self.nodes[i];
        ExportNode {
            id: n.id.clone(),
            kind: n.kind,
            color: n.color,
            label: (n.kind == NodeKind::Me).then(|| n.entities[0].normalized.clone()),
            etype: (n.kind == NodeKind::Me).then(|| n.entities[0].etype),
            entities: (n.kind == NodeKind::Mes).then(|| n.entities.clone()),
            family: (n.kind == NodeKind::Mes).then(|| self.nodes[self.find(i)].id.clone()),
            children: n.children.iter().map(|&c| self.export_node(c)).collect(),
        }
    }
}

/// Fold of [`AssociationTree::add_node`] over `sets` from a bare root.
pub fn build_tree(sets: &[EntitySet]) -> Result<AssociationTree> {
    let mut tree = AssociationTree::new();
    for s in sets {
        tree.add_node(s)?;
    }
    Ok(tree)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialPoint {
    pub id: String,
    pub angle: f64,
    pub depth: usize,
    pub start: f64,
    pub end: f64,
}

/// Nodes in pre-order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialCoordinates {
    pub nodes: Vec<RadialPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportNode {
    pub id: String,
    pub kind: NodeKind,
    pub color: Rgb,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    pub etype: Option<EntityType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<Entity>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub children: Vec<ExportNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeExport {
    pub mes_count: usize,
    pub insertion_log: Vec<String>,
    pub root: ExportNode,
    pub radial: RadialCoordinates,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(id: &str, names: &[&str]) -> EntitySet {
        let entities: Vec<Entity> = names.iter().map(|n| Entity::new(*n, EntityType::Dis)).collect();
        let mut counts = TypeCounts::default();
        counts.add(EntityType::Dis, entities.len());
        EntitySet {
            id: id.into(),
            paragraph_id: id.into(),
            total: entities.len(),
            entities,
            counts_by_type: counts,
        }
    }

    fn mes_children(t: &AssociationTree, i: usize) -> Vec<String> {
        t.node(i)
            .children
            .iter()
            .filter(|&&c| t.node(c).kind == NodeKind::Mes)
            .map(|&c| t.node(c).id.clone())
            .collect()
    }

    #[test]
    fn empty_build_is_bare_root() {
        let t = build_tree(&[]).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert!(t.node(ROOT).children.is_empty());
    }

    #[test]
    fn single_set_has_entity_leaves() {
        let t = build_tree(&[set("A", &["a", "b"])]).unwrap();
        let a = t.node_of("A").unwrap();
        assert_eq!(t.node(ROOT).children, vec![a]);
        let leaves: Vec<&str> = t.node(a).children.iter().map(|&c| t.node(c).id.as_str()).collect();
        assert_eq!(leaves, vec!["A#dis:a", "A#dis:b"]);
    }

    #[test]
    fn hand_traced_examples() {
        let t = build_tree(&[set("A", &["a", "b"]), set("B", &["b", "c"]), set("C", &["x", "y"])]).unwrap();
        assert_eq!(mes_children(&t, ROOT), vec!["A", "C"]);
        assert_eq!(mes_children(&t, t.node_of("A").unwrap()), vec!["B"]);

        let t = build_tree(&[set("A", &["a", "b"]), set("Y", &["c", "d"])]).unwrap();
        assert_eq!(mes_children(&t, ROOT), vec!["A", "Y"]);

        let t = build_tree(&[set("A", &["a", "b"]), set("C", &["c", "d"]), set("D", &["b", "c"])]).unwrap();
        assert_eq!(mes_children(&t, ROOT), vec!["A", "C", "D"]);
    }

    #[test]
    fn traversal_is_preorder() {
        let t = build_tree(&[set("A", &["a", "b"]), set("B", &["b", "c"])]).unwrap();
        let (hits, checked) = t.traverse_intersections(&[Entity::new("b", EntityType::Dis)]);
        let ids: Vec<&str> = hits.iter().map(|&i| t.node(i).id.as_str()).collect();
        assert_eq!(ids, vec!["A", "B"]);
        assert_eq!(checked.len(), 2);
        let bare = AssociationTree::new();
        assert_eq!(bare.traverse_intersections(&[]), (vec![], vec![]));
    }

    #[test]
    fn common_father_conventions() {
        // root -> A -> B -> C (chain through shared entities)
        let t = build_tree(&[set("A", &["a"]), set("B", &["a", "b"]), set("C", &["b", "c"])]).unwrap();
        let (a, b, c) = (t.node_of("A").unwrap(), t.node_of("B").unwrap(), t.node_of("C").unwrap());
        assert_eq!(t.node(c).parent, Some(b));
        assert_eq!(t.common_father(&[c]).unwrap(), b);
        assert_eq!(t.common_father(&[b, c]).unwrap(), a);
        assert_eq!(t.common_father(&[a, c]).unwrap(), ROOT);
        let t2 = build_tree(&[set("X", &["x"]), set("Y", &["y"])]).unwrap();
        assert_eq!(t2.common_father(&[t2.node_of("X").unwrap(), t2.node_of("Y").unwrap()]).unwrap(), ROOT);
        assert!(t.common_father(&[999]).is_err());
        assert!(t.common_father(&[]).is_err());
    }

    #[test]
    fn duplicate_is_conflict() {
        let mut t = build_tree(&[set("A", &["a"])]).unwrap();
        assert!(matches!(t.add_node(&set("A", &["z"])), Err(Error::Conflict(_))));
        assert!(build_tree(&[set("A", &["a"]), set("A", &["a"])]).is_err());
    }

    #[test]
    fn detached_subtrees_stay_intact() {
        // A{a} with child B{a,b}; C{c}; then D{b,c} pulls B and C together.
        let t = build_tree(&[
            set("A", &["a"]),
            set("B", &["a", "b"]),
            set("E", &["b"]),
            set("C", &["c"]),
            set("D", &["e", "c", "b"]),
        ])
        .unwrap();
        for id in ["A", "B", "C", "D", "E"] {
            assert!(t.node_of(id).is_some());
        }
        assert_eq!(t.mes_preorder().len(), 5);
    }

    #[test]
    fn colors() {
        let mut s = set("A", &["a"]);
        assert_eq!(node_color(&s.counts_by_type), color::type_color(EntityType::Dis));
        s.counts_by_type = TypeCounts::default();
        assert_eq!(node_color(&s.counts_by_type), color::neutral_gray());

        let mut c = TypeCounts::default();
        c.add(EntityType::Dis, 2);
        c.add(EntityType::Sym, 1);
        c.add(EntityType::Bod, 1);
        let got = node_color(&c);
        let (d, y, b) = (
            color::type_color(EntityType::Dis),
            color::type_color(EntityType::Sym),
            color::type_color(EntityType::Bod),
        );
        let want = [
            0.5 * d.r + 0.25 * y.r + 0.25 * b.r,
            0.5 * d.g + 0.25 * y.g + 0.25 * b.g,
            0.5 * d.b + 0.25 * y.b + 0.25 * b.b,
        ];
        assert!((got.r - want[0]).abs() < 1e-12);
        assert!((got.g - want[1]).abs() < 1e-12);
        assert!((got.b - want[2]).abs() < 1e-12);
    }

    #[test]
    fn radial_extents() {
        let t = build_tree(&[set("A", &["a"]), set("B", &["b"])]).unwrap();
        let r = t.radial_layout();
        let a = r.nodes.iter().find(|p| p.id == "A").unwrap();
        let b = r.nodes.iter().find(|p| p.id == "B").unwrap();
        assert!((a.end - a.start - TAU / 2.0).abs() < 1e-12);
        assert!((b.end - b.start - TAU / 2.0).abs() < 1e-12);

        let t = build_tree(&[set("A", &["a"]), set("B", &["b", "c", "d"])]).unwrap();
        let r = t.radial_layout();
        let a = r.nodes.iter().find(|p| p.id == "A").unwrap();
        let b = r.nodes.iter().find(|p| p.id == "B").unwrap();
        assert!((a.end - a.start - TAU / 4.0).abs() < 1e-12);
        assert!((b.end - b.start - 3.0 * TAU / 4.0).abs() < 1e-12);

        let t = build_tree(&[set("A", &["a"])]).unwrap();
        let r = t.radial_layout();
        let angles: Vec<f64> = r.nodes.iter().map(|p| p.angle).collect();
        assert!(angles.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        let depths: Vec<usize> = r.nodes.iter().map(|p| p.depth).collect();
        assert_eq!(depths, vec![0, 1, 2]);
    }
}
