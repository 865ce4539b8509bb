//! Paragraph graph construction and size-bounded edge-cut partitioning.
//!
//! The partitioner is multilevel: heavy-edge matching coarsens the graph
//! (never merging past the part size bound), greedy graph growing builds an
//! initial partition on the coarsest level, and FM passes refine it on the
//! way back up. FM passes consider single-vertex moves and, when no move
//! improves the cut, pairwise swaps, so full parts can still exchange
//! vertices. Each pass rolls back to its best prefix, so refinement never
//! increases the cut.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::DocumentRecord;
use crate::error::{Error, Result};
use crate::extraction::EntitySet;
use crate::relations::SimilarityMatrix;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Intra,
    Similarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphVertex {
    pub id: String,
    pub document_id: String,
    pub entity_set_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphGraph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
    pub theta: f64,
}

impl ParagraphGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &GraphEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn to_weighted(&self) -> WeightedGraph {
        WeightedGraph::from_edges(
            self.vertices.len(),
            self.edges.iter().map(|e| (e.u, e.v, e.weight)),
        )
    }
}

/// How paragraphs of one document are linked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntraEdges {
    /// Consecutive paragraphs.
    #[default]
    Path,
    /// Every pair within a document.
    Clique,
}

/// Builds vertices for every paragraph of `docs`, intra-document edges of
/// weight 1 and cross-document similarity edges (similarity > `theta`)
/// weighted by similarity.
pub fn build_paragraph_graph(
    docs: &[&DocumentRecord],
    paragraph_similarities: &SimilarityMatrix,
    theta: f64,
    intra: IntraEdges,
) -> Result<ParagraphGraph> {
    if docs.is_empty() {
        return Err(Error::invalid("no documents selected"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta {theta} outside [0, 1]")));
    }
    let index = paragraph_similarities.index_map();
    let mut vertices = Vec::new();
    let mut matrix_pos = Vec::new();
    let mut edges = Vec::new();
    for doc in docs {
        let first = vertices.len();
        for pid in &doc.paragraph_ids {
            let pos = *index
                .get(pid.as_str())
                .ok_or_else(|| Error::not_found(format!("similarity row for {pid}")))?;
            matrix_pos.push(pos);
            vertices.push(GraphVertex {
                id: pid.clone(),
                document_id: doc.id.clone(),
                entity_set_id: EntitySet::id_for_paragraph(pid),
            });
        }
        let last = vertices.len();
        match intra {
            IntraEdges::Path => {
                for u in first..last.saturating_sub(1) {
                    edges.push(GraphEdge {
                        u,
                        v: u + 1,
                        weight: 1.0,
                        kind: EdgeKind::Intra,
                    });
                }
            }
            IntraEdges::Clique => {
                for u in first..last {
                    for v in u + 1..last {
                        edges.push(GraphEdge {
                            u,
                            v,
                            weight: 1.0,
                            kind: EdgeKind::Intra,
                        });
                    }
                }
            }
        }
    }
    for u in 0..vertices.len() {
        for v in u + 1..vertices.len() {
            if vertices[u].document_id == vertices[v].document_id {
                continue;
            }
            let s = paragraph_similarities.get(matrix_pos[u], matrix_pos[v]);
            if s > theta {
                edges.push(GraphEdge {
                    u,
                    v,
                    weight: s,
                    kind: EdgeKind::Similarity,
                });
            }
        }
    }
    Ok(ParagraphGraph {
        vertices,
        edges,
        theta,
    })
}

/// Undirected graph with vertex sizes and merged edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub vwgt: Vec<usize>,
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Unit vertex sizes. Parallel edges merge; self-loops are dropped.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize, f64)>>(n: usize, edges: I) -> Self {
        let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n];
        for (u, v, w) in edges {
            if u == v {
                continue;
            }
            *maps[u].entry(v).or_default() += w;
            *maps[v].entry(u).or_default() += w;
        }
        WeightedGraph::from_maps(vec![1; n], maps)
    }

    fn from_maps(vwgt: Vec<usize>, maps: Vec<HashMap<usize, f64>>) -> Self {
        let adj = maps
            .into_iter()
            .map(|m| {
                let mut row: Vec<(usize, f64)> = m.into_iter().collect();
                row.sort_unstable_by_key(|&(v, _)| v);
                row
            })
            .collect();
        WeightedGraph { vwgt, adj }
    }

    pub fn len(&self) -> usize {
        self.vwgt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vwgt.is_empty()
    }

    pub fn total_size(&self) -> usize {
        self.vwgt.iter().sum()
    }

    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u]
            .binary_search_by_key(&v, |&(x, _)| x)
            .map(|i| self.adj[u][i].1)
            .unwrap_or(0.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (u, v, w))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub part_of: Vec<usize>,
    pub parts: Vec<Vec<usize>>,
    pub max_size: usize,
    pub cut_weight: f64,
    pub seed: u64,
}

impl PartitionResult {
    fn from_assignment(g: &WeightedGraph, part_of: Vec<usize>, k: usize, max_size: usize, seed: u64) -> Self {
        let mut parts = vec![Vec::new(); k];
        for (v, &p) in part_of.iter().enumerate() {
            parts[p].push(v);
        }
        PartitionResult {
            cut_weight: cut_of(g, &part_of),
            part_of,
            parts,
            max_size,
            seed,
        }
    }

    /// Drops empty parts and numbers the rest by their lowest vertex.
    fn compacted(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.parts.len())
            .filter(|&p| !self.parts[p].is_empty())
            .collect();
        order.sort_by_key(|&p| self.parts[p][0]);
        let mut remap = vec![usize::MAX; self.parts.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        self.part_of.iter_mut().for_each(|p| *p = remap[*p]);
        self.parts = order.into_iter().map(|p| std::mem::take(&mut self.parts[p])).collect();
        self
    }

    pub fn export(&self, graph: &ParagraphGraph) -> PartitionExport {
        PartitionExport {
            parts: self
                .parts
                .iter()
                .map(|p| p.iter().map(|&v| graph.vertices[v].id.clone()).collect())
                .collect(),
            cut_weight: self.cut_weight,
            max_size: self.max_size,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionExport {
    pub parts: Vec<Vec<String>>,
    pub cut_weight: f64,
    pub max_size: usize,
    pub seed: u64,
}

pub(crate) fn cut_of(g: &WeightedGraph, part_of: &[usize]) -> f64 {
    g.edges()
        .filter(|&(u, v, _)| part_of[u] != part_of[v])
        .map(|(_, _, w)| w)
        .sum()
}

/// Total weight of edges whose endpoints lie in different parts.
/// `None` marks an unassigned vertex, which is an error.
pub fn edge_cut(graph: &ParagraphGraph, part_of: &[Option<usize>]) -> Result<f64> {
    if part_of.len() != graph.len() {
        return Err(Error::invalid(format!(
            "partition covers {} of {} vertices",
            part_of.len(),
            graph.len()
        )));
    }
    if let Some(v) = part_of.iter().position(Option::is_none) {
        return Err(Error::invalid(format!(
            "vertex {} is not assigned",
            graph.vertices[v].id
        )));
    }
    Ok(graph
        .edges
        .iter()
        .filter(|e| part_of[e.u] != part_of[e.v])
        .map(|e| e.weight)
        .sum())
}

/// Heavy-edge matching. Vertices are visited in a seeded random order and
/// matched to their heaviest unmatched neighbor, provided the merged size
/// stays within `max_vertex_size`. Returns the coarse graph and the
/// fine-to-coarse vertex map.
pub fn coarsen<R: Rng>(
    g: &WeightedGraph,
    max_vertex_size: usize,
    rng: &mut R,
) -> (WeightedGraph, Vec<usize>) {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    for &u in &order {
        if mate[u] != usize::MAX {
            continue;
        }
        let best = g.adj[u]
            .iter()
            .filter(|&&(v, _)| mate[v] == usize::MAX && g.vwgt[u] + g.vwgt[v] <= max_vertex_size)
            .fold(None::<(usize, f64)>, |acc, &(v, w)| match acc {
                Some((_, bw)) if bw >= w => acc,
                _ => Some((v, w)),
            });
        match best {
            Some((v, _)) => {
                mate[u] = v;
                mate[v] = u;
            }
            None => mate[u] = u,
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut vwgt = Vec::new();
    for u in 0..n {
        if map[u] != usize::MAX {
            continue;
        }
        let c = vwgt.len();
        map[u] = c;
        let m = mate[u];
        if m != u {
            map[m] = c;
            vwgt.push(g.vwgt[u] + g.vwgt[m]);
        } else {
            vwgt.push(g.vwgt[u]);
        }
    }
    let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); vwgt.len()];
    for (u, v, w) in g.edges() {
        let (cu, cv) = (map[u], map[v]);
        if cu != cv {
            *maps[cu].entry(cv).or_default() += w;
            *maps[cv].entry(cu).or_default() += w;
        }
    }
    (WeightedGraph::from_maps(vwgt, maps), map)
}

/// How the seed vertex of each growing region is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowSeed {
    /// Highest weighted degree, lowest index on ties.
    HighestDegree,
    /// Seeded random choice among unassigned vertices.
    Random(u64),
}

/// Greedy graph growing into `k` parts of size at most `max_size`.
pub fn initial_partition(
    g: &WeightedGraph,
    k: usize,
    max_size: usize,
    seeding: GrowSeed,
) -> Result<Vec<usize>> {
    let n = g.len();
    if k == 0 {
        return Err(Error::Infeasible("zero parts".into()));
    }
    if g.total_size() > k * max_size {
        return Err(Error::Infeasible(format!(
            "total size {} exceeds {k} × {max_size}",
            g.total_size()
        )));
    }
    if let Some(v) = (0..n).find(|&v| g.vwgt[v] > max_size) {
        return Err(Error::Infeasible(format!(
            "vertex {v} of size {} exceeds {max_size}",
            g.vwgt[v]
        )));
    }
    let mut rng = match seeding {
        GrowSeed::Random(s) => Some(ChaCha8Rng::seed_from_u64(s)),
        GrowSeed::HighestDegree => None,
    };
    let degree: Vec<f64> = (0..n).map(|u| g.weighted_degree(u)).collect();
    let mut part = vec![usize::MAX; n];
    let mut load = vec![0usize; k];
    // conn[v]: weight from v into the part currently being grown.
    let mut conn = vec![0.0; n];
    let mut unassigned = n;

    let pick_seed = |part: &[usize], rng: &mut Option<ChaCha8Rng>, room: usize| -> Option<usize> {
        let free: Vec<usize> = (0..n)
            .filter(|&v| part[v] == usize::MAX && g.vwgt[v] <= room)
            .collect();
        if free.is_empty() {
            return None;
        }
        Some(match rng {
            Some(r) => free[r.gen_range(0..free.len())],
            None => free
                .iter()
                .copied()
                .fold(free[0], |b, v| if degree[v] > degree[b] { v } else { b }),
        })
    };

    for p in 0..k {
        if unassigned == 0 {
            break;
        }
        conn.iter_mut().for_each(|c| *c = 0.0);
        // Fill each part up to the bound; when the frontier empties, reseed.
        loop {
            let room = max_size - load[p];
            let frontier_best = (0..n)
                .filter(|&v| part[v] == usize::MAX && conn[v] > 0.0 && g.vwgt[v] <= room)
                .map(|v| (v, 2.0 * conn[v] - degree[v]))
                .fold(None::<(usize, f64)>, |acc, x| match acc {
                    Some(b) if b.1 >= x.1 => Some(b),
                    _ => Some(x),
                });
            let next = match frontier_best {
                Some((v, _)) => Some(v),
                None => pick_seed(&part, &mut rng, room),
            };
            let Some(v) = next else { break };
            part[v] = p;
            load[p] += g.vwgt[v];
            unassigned -= 1;
            for &(u, w) in &g.adj[v] {
                conn[u] += w;
            }
            if load[p] == max_size {
                break;
            }
        }
    }
    // Leftovers go to the least-loaded part with room.
    let mut rest: Vec<usize> = (0..n).filter(|&v| part[v] == usize::MAX).collect();
    rest.sort_by_key(|&v| std::cmp::Reverse(g.vwgt[v]));
    for v in rest {
        let target = (0..k)
            .filter(|&p| load[p] + g.vwgt[v] <= max_size)
            .min_by_key(|&p| load[p])
            .ok_or_else(|| Error::Infeasible(format!("no part has room for vertex {v}")))?;
        part[v] = target;
        load[target] += g.vwgt[v];
    }
    Ok(part)
}

#[derive(Debug, Clone, Copy)]
enum Action {
    Move { v: usize, from: usize, to: usize },
    Swap { u: usize, v: usize, pu: usize, pv: usize },
}

struct FmState<'a> {
    g: &'a WeightedGraph,
    part: Vec<usize>,
    load: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// conn[v * k + p]: weight from v into part p.
    conn: Vec<f64>,
    k: usize,
    max_size: usize,
}

impl<'a> FmState<'a> {
    fn new(g: &'a WeightedGraph, part: Vec<usize>, k: usize, max_size: usize) -> Self {
        let n = g.len();
        let mut load = vec![0; k];
        let mut members = vec![Vec::new(); k];
        let mut conn = vec![0.0; n * k];
        for v in 0..n {
            load[part[v]] += g.vwgt[v];
            members[part[v]].push(v);
            for &(u, w) in &g.adj[v] {
                conn[v * k + part[u]] += w;
            }
        }
        FmState {
            g,
            part,
            load,
            members,
            conn,
            k,
            max_size,
        }
    }

    fn c(&self, v: usize, p: usize) -> f64 {
        self.conn[v * self.k + p]
    }

    fn relocate(&mut self, v: usize, to: usize) {
        let from = self.part[v];
        let k = self.k;
        self.part[v] = to;
        self.load[from] -= self.g.vwgt[v];
        self.load[to] += self.g.vwgt[v];
        let pos = self.members[from].iter().position(|&x| x == v).expect("member");
        self.members[from].swap_remove(pos);
        self.members[to].push(v);
        for &(u, w) in &self.g.adj[v] {
            self.conn[u * k + from] -= w;
            self.conn[u * k + to] += w;
        }
    }

    fn apply(&mut self, a: Action) {
        match a {
            Action::Move { v, to, .. } => self.relocate(v, to),
            Action::Swap { u, v, pu, pv } => {
                self.relocate(u, pv);
                self.relocate(v, pu);
            }
        }
    }

    fn undo(&mut self, a: Action) {
        match a {
            Action::Move { v, from, .. } => self.relocate(v, from),
            Action::Swap { u, v, pu, pv } => {
                self.relocate(u, pu);
                self.relocate(v, pv);
            }
        }
    }

    fn best_move(&self, locked: &[bool]) -> Option<(Action, f64)> {
        let mut best: Option<(Action, f64)> = None;
        for v in 0..self.g.len() {
            if locked[v] {
                continue;
            }
            let from = self.part[v];
            let internal = self.c(v, from);
            for to in 0..self.k {
                if to == from || self.c(v, to) <= 0.0 {
                    continue;
                }
                if self.load[to] + self.g.vwgt[v] > self.max_size {
                    continue;
                }
                let gain = self.c(v, to) - internal;
                if best.is_none_or(|(_, bg)| gain > bg + EPS) {
                    best = Some((Action::Move { v, from, to }, gain));
                }
            }
        }
        best
    }

    fn best_swap(&self, locked: &[bool]) -> Option<(Action, f64)> {
        let mut best: Option<(Action, f64)> = None;
        for u in 0..self.g.len() {
            if locked[u] {
                continue;
            }
            let pu = self.part[u];
            let gu_base = -self.c(u, pu);
            for pv in 0..self.k {
                if pv == pu || self.c(u, pv) <= 0.0 {
                    continue;
                }
                for &v in &self.members[pv] {
                    if locked[v] {
                        continue;
                    }
                    let (su, sv) = (self.g.vwgt[u], self.g.vwgt[v]);
                    if self.load[pu] - su + sv > self.max_size || self.load[pv] - sv + su > self.max_size {
                        continue;
                    }
                    let gain = gu_base + self.c(u, pv) + self.c(v, pu) - self.c(v, pv)
                        - 2.0 * self.g.edge_weight(u, v);
                    if best.is_none_or(|(_, bg)| gain > bg + EPS) {
                        best = Some((Action::Swap { u, v, pu, pv }, gain));
                    }
                }
            }
        }
        best
    }

    /// One FM pass with locking; keeps the best prefix. Returns the gain.
    fn pass(&mut self) -> f64 {
        let n = self.g.len();
        let mut locked = vec![false; n];
        let mut log: Vec<Action> = Vec::new();
        let (mut cum, mut best, mut best_len) = (0.0, 0.0, 0usize);
        let patience = 25.max(n / 4);
        while log.len() < n {
            let mv = self.best_move(&locked);
            let chosen = match mv {
                Some((a, g)) if g > EPS => Some((a, g)),
                _ => match (mv, self.best_swap(&locked)) {
                    (Some(m), Some(s)) => Some(if s.1 > m.1 + EPS { s } else { m }),
                    (m, s) => m.or(s),
                },
            };
            let Some((action, gain)) = chosen else { break };
            self.apply(action);
            match action {
                Action::Move { v, .. } => locked[v] = true,
                Action::Swap { u, v, .. } => {
                    locked[u] = true;
                    locked[v] = true;
                }
            }
            log.push(action);
            cum += gain;
            if cum > best + EPS {
                best = cum;
                best_len = log.len();
            }
            if log.len() - best_len > patience {
                break;
            }
        }
        for &a in log[best_len..].iter().rev() {
            self.undo(a);
        }
        best
    }
}

/// Per-pass record of a refinement run.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineTrace {
    pub part_of: Vec<usize>,
    /// Cut before the first pass, then after each pass.
    pub pass_cuts: Vec<f64>,
}

/// FM refinement of a feasible `k`-way assignment under the size bound.
pub fn refine_traced(g: &WeightedGraph, part_of: &[usize], k: usize, max_size: usize) -> Result<RefineTrace> {
    if part_of.len() != g.len() || part_of.iter().any(|&p| p >= k) {
        return Err(Error::invalid("assignment does not cover the graph"));
    }
    let mut state = FmState::new(g, part_of.to_vec(), k, max_size);
    if state.load.iter().any(|&l| l > max_size) {
        return Err(Error::Infeasible("input partition violates the size bound".into()));
    }
    let mut pass_cuts = vec![cut_of(g, &state.part)];
    loop {
        let gain = state.pass();
        pass_cuts.push(cut_of(g, &state.part));
        if gain <= EPS {
            break;
        }
    }
    Ok(RefineTrace {
        part_of: state.part,
        pass_cuts,
    })
}

pub fn refine(g: &WeightedGraph, partition: &PartitionResult) -> Result<PartitionResult> {
    let k = partition.parts.len().max(1);
    let t = refine_traced(g, &partition.part_of, k, partition.max_size)?;
    Ok(PartitionResult::from_assignment(g, t.part_of, k, partition.max_size, partition.seed))
}

fn restarts_for(n: usize) -> usize {
    match n {
        0..=32 => 16,
        33..=256 => 4,
        _ => 2,
    }
}

/// One multilevel run: coarsen, grow, refine on the way back up.
fn multilevel(g: &WeightedGraph, k: usize, max_size: usize, seeding: GrowSeed, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let mut levels: Vec<WeightedGraph> = vec![g.clone()];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    loop {
        let cur = levels.last().expect("non-empty");
        if cur.len() <= 2 * k {
            break;
        }
        let (coarse, map) = coarsen(cur, max_size, rng);
        // Stop when matching stalls.
        if coarse.len() * 20 > cur.len() * 19 {
            break;
        }
        levels.push(coarse);
        maps.push(map);
    }
    // Bin packing can fail on coarse sizes; fall back to finer levels.
    let mut level = levels.len() - 1;
    let mut part = loop {
        match initial_partition(&levels[level], k, max_size, seeding) {
            Ok(p) => break p,
            Err(e) if level == 0 => return Err(e),
            Err(_) => level -= 1,
        }
    };
    loop {
        part = refine_traced(&levels[level], &part, k, max_size)?.part_of;
        if level == 0 {
            return Ok(part);
        }
        let map = &maps[level - 1];
        part = map.iter().map(|&c| part[c]).collect();
        level -= 1;
    }
}

/// Partitions into `ceil(total_size / max_size)` parts of size at most
/// `max_size`, minimizing edge cut. Deterministic for a fixed seed.
pub fn partition_weighted(g: &WeightedGraph, max_size: usize, seed: u64) -> Result<PartitionResult> {
    if max_size == 0 {
        return Err(Error::invalid("max_size must be at least 1"));
    }
    let n = g.len();
    let k = g.total_size().div_ceil(max_size).max(1);
    if k == 1 {
        return Ok(PartitionResult::from_assignment(g, vec![0; n], 1, max_size, seed).compacted());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for trial in 0..restarts_for(n) {
        let seeding = if trial == 0 {
            GrowSeed::HighestDegree
        } else {
            GrowSeed::Random(rng.gen())
        };
        let part = multilevel(g, k, max_size, seeding, &mut rng)?;
        let cut = cut_of(g, &part);
        if best.as_ref().is_none_or(|(b, _)| cut < b - EPS) {
            best = Some((cut, part));
        }
    }
    let (_, part) = best.expect("at least one trial");
    Ok(PartitionResult::from_assignment(g, part, k, max_size, seed).compacted())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionOptions {
    /// Partition each connected component on its own.
    pub per_component: bool,
}

pub fn partition_graph(graph: &ParagraphGraph, max_size: usize, seed: u64) -> Result<PartitionResult> {
    partition_graph_with(graph, max_size, seed, PartitionOptions::default())
}

pub fn partition_graph_with(
    graph: &ParagraphGraph,
    max_size: usize,
    seed: u64,
    options: PartitionOptions,
) -> Result<PartitionResult> {
    let g = graph.to_weighted();
    if !options.per_component {
        return partition_weighted(&g, max_size, seed);
    }
    let comps = components(&g);
    let mut part_of = vec![0; g.len()];
    let mut next = 0;
    for comp in comps {
        let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let local = &local;
        let sub = WeightedGraph::from_edges(
            comp.len(),
            comp.iter().flat_map(|&u| {
                g.adj[u]
                    .iter()
                    .filter(move |&&(v, _)| u < v)
                    .map(move |&(v, w)| (local[&u], local[&v], w))
            }),
        );
        let r = partition_weighted(&sub, max_size, seed)?;
        for (i, &v) in comp.iter().enumerate() {
            part_of[v] = next + r.part_of[i];
        }
        next += r.parts.len();
    }
    Ok(PartitionResult::from_assignment(&g, part_of, next, max_size, seed).compacted())
}

fn components(g: &WeightedGraph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    for s in 0..g.len() {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < comp.len() {
            for &(v, _) in &g.adj[comp[i]] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> WeightedGraph {
        WeightedGraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1, 1.0)))
    }

    #[test]
    fn small_graph_single_part() {
        let r = partition_weighted(&path(4), 10, 0).unwrap();
        assert_eq!(r.parts.len(), 1);
        assert_eq!(r.cut_weight, 0.0);
    }

    #[test]
    fn path_of_four_pairs() {
        let r = partition_weighted(&path(4), 2, 0).unwrap();
        assert_eq!(r.cut_weight, 1.0);
        assert_eq!(r.parts, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn triangle_singletons() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let r = partition_weighted(&g, 1, 0).unwrap();
        assert_eq!(r.cut_weight, 3.0);
        assert_eq!(r.parts.len(), 3);
    }

    #[test]
    fn coarsen_pair_and_edgeless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (c, map) = coarsen(&path(2), 10, &mut rng);
        assert_eq!(c.vwgt, vec![2]);
        assert_eq!(map, vec![0, 0]);

        let g = WeightedGraph::from_edges(3, std::iter::empty());
        let (c, _) = coarsen(&g, 10, &mut rng);
        assert_eq!(c, g);
    }

    #[test]
    fn coarsen_path_preserves_size() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (c, _) = coarsen(&path(5), 10, &mut rng);
            assert!(c.len() <= 3, "{}", c.len());
            assert_eq!(c.total_size(), 5);
        }
    }

    #[test]
    fn coarsen_respects_size_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (c, _) = coarsen(&path(6), 1, &mut rng);
        assert_eq!(c.len(), 6);
    }

    #[test]
    fn initial_partition_cases() {
        let g = path(5);
        assert_eq!(initial_partition(&g, 1, 5, GrowSeed::HighestDegree).unwrap(), vec![0; 5]);

        let single = initial_partition(&g, 5, 1, GrowSeed::HighestDegree).unwrap();
        let mut s = single.clone();
        s.sort_unstable();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);

        assert!(matches!(
            initial_partition(&g, 2, 2, GrowSeed::HighestDegree),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn initial_partition_separates_cliques() {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        let g = WeightedGraph::from_edges(8, edges);
        let p = initial_partition(&g, 2, 4, GrowSeed::HighestDegree).unwrap();
        assert_eq!(cut_of(&g, &p), 0.0);
        assert!(p[..4].iter().all(|&x| x == p[0]));
        assert!(p[4..].iter().all(|&x| x == p[4]));
    }

    #[test]
    fn refine_fixes_interleaved_path() {
        let g = path(4);
        let t = refine_traced(&g, &[0, 1, 0, 1], 2, 2).unwrap();
        assert_eq!(t.pass_cuts[0], 3.0);
        assert_eq!(*t.pass_cuts.last().unwrap(), 1.0);
    }

    #[test]
    fn refine_keeps_optimal() {
        let g = path(4);
        let t = refine_traced(&g, &[0, 0, 1, 1], 2, 2).unwrap();
        assert_eq!(t.part_of, vec![0, 0, 1, 1]);
        assert_eq!(t.pass_cuts, vec![1.0, 1.0]);
    }

    #[test]
    fn refine_rejects_infeasible_input() {
        assert!(refine_traced(&path(3), &[0, 0, 0], 2, 2).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let edges: Vec<_> = (0..120)
            .map(|_| (rng.gen_range(0..40), rng.gen_range(0..40), rng.gen::<f64>()))
            .collect();
        let g = WeightedGraph::from_edges(40, edges);
        let a = partition_weighted(&g, 7, 42).unwrap();
        let b = partition_weighted(&g, 7, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.parts.iter().all(|p| p.len() <= 7));
    }

    fn doc(id: &str, n: usize) -> DocumentRecord {
        DocumentRecord {
            id: id.into(),
            title: String::new(),
            body: String::new(),
            paragraph_ids: (0..n).map(|i| format!("{id}:p{i}")).collect(),
            text_length: n,
            topic_id: None,
        }
    }

    fn sims(ids: &[String], pairs: &[(usize, usize, f64)]) -> SimilarityMatrix {
        let n = ids.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        for &(a, b, s) in pairs {
            values[a * n + b] = s;
            values[b * n + a] = s;
        }
        SimilarityMatrix {
            ids: ids.to_vec(),
            values,
        }
    }

    #[test]
    fn graph_single_document_path() {
        let d = doc("a", 4);
        let m = sims(&d.paragraph_ids, &[(0, 2, 1.0)]);
        let g = build_paragraph_graph(&[&d], &m, 1.0, IntraEdges::Path).unwrap();
        assert_eq!(g.edges_of_kind(EdgeKind::Intra).count(), 3);
        assert_eq!(g.edges_of_kind(EdgeKind::Similarity).count(), 0);

        let g = build_paragraph_graph(&[&d], &m, 0.5, IntraEdges::Clique).unwrap();
        assert_eq!(g.edges_of_kind(EdgeKind::Intra).count(), 6);
    }

    #[test]
    fn graph_cross_document_similarity() {
        let (a, b) = (doc("a", 2), doc("b", 1));
        let ids: Vec<String> = a.paragraph_ids.iter().chain(&b.paragraph_ids).cloned().collect();
        let m = sims(&ids, &[(0, 2, 0.9), (1, 2, 0.3), (0, 1, 0.95)]);
        let g = build_paragraph_graph(&[&a, &b], &m, 0.5, IntraEdges::Path).unwrap();
        let s: Vec<_> = g.edges_of_kind(EdgeKind::Similarity).collect();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].u, s[0].v, s[0].weight), (0, 2, 0.9));
    }

    #[test]
    fn graph_theta_zero_counts_positive_cross_pairs() {
        let (a, b) = (doc("a", 2), doc("b", 2));
        let ids: Vec<String> = a.paragraph_ids.iter().chain(&b.paragraph_ids).cloned().collect();
        let pairs = [(0, 2, 0.1), (0, 3, 0.2), (1, 2, -0.3), (1, 3, 0.4), (0, 1, 0.7), (2, 3, 0.6)];
        let m = sims(&ids, &pairs);
        let g = build_paragraph_graph(&[&a, &b], &m, 0.0, IntraEdges::Path).unwrap();
        let expected = (0..4)
            .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
            .filter(|&(i, j)| i / 2 != j / 2 && m.get(i, j) > 0.0)
            .count();
        assert_eq!(g.edges_of_kind(EdgeKind::Similarity).count(), expected);
        assert_eq!(expected, 3);
    }

    #[test]
    fn graph_rejects_bad_theta() {
        let d = doc("a", 1);
        let m = sims(&d.paragraph_ids, &[]);
        assert!(build_paragraph_graph(&[&d], &m, 1.5, IntraEdges::Path).is_err());
        assert!(build_paragraph_graph(&[], &m, 0.5, IntraEdges::Path).is_err());
    }

    #[test]
    fn edge_cut_examples() {
        let d = doc("a", 3);
        let mut m = sims(&d.paragraph_ids, &[]);
        m.ids = d.paragraph_ids.clone();
        let g = build_paragraph_graph(&[&d], &m, 1.0, IntraEdges::Clique).unwrap();
        assert_eq!(edge_cut(&g, &[Some(0), Some(0), Some(0)]).unwrap(), 0.0);
        assert_eq!(edge_cut(&g, &[Some(0), Some(1), Some(2)]).unwrap(), 3.0);
        assert!(edge_cut(&g, &[Some(0), None, Some(2)]).is_err());
        assert!(edge_cut(&g, &[Some(0)]).is_err());
    }

    #[test]
    fn per_component_partition() {
        // Two disjoint paths of 3; per-component with bound 3 keeps them whole.
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0)];
        let g = ParagraphGraph {
            vertices: (0..6)
                .map(|i| GraphVertex {
                    id: format!("p{i}"),
                    document_id: format!("d{}", i / 3),
                    entity_set_id: format!("mes:p{i}"),
                })
                .collect(),
            edges: edges
                .iter()
                .map(|&(u, v, weight)| GraphEdge {
                    u,
                    v,
                    weight,
                    kind: EdgeKind::Intra,
                })
                .collect(),
            theta: 0.5,
        };
        let r = partition_graph_with(&g, 3, 1, PartitionOptions { per_component: true }).unwrap();
        assert_eq!(r.cut_weight, 0.0);
        assert_eq!(r.parts, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }
}
