//! Node placement for the document space and the paragraph star map.
//!
//! The star map is a disc of radius `R` with nine type poles evenly spaced
//! on its boundary. Each star (paragraph) feels:
//!
//! - a link force of magnitude `‖F‖` along every intra-document edge,
//! - `‖F‖ · similarity` along every similarity edge above `θ`,
//! - a pole spring `Σ_j (num_j / num) · ‖F‖ · d̂_j` toward the type poles
//!   (zero for entity-free paragraphs),
//! - a collision push when two stars come within `r_i + r_j + padding`.
//!
//! Integration is explicit with a geometrically decaying step. After each
//! step, positions are clamped to the disc and residual overlaps are
//! projected out, so converged layouts are overlap-free.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color::{self, Rgb};
use crate::error::{Error, Result};
use crate::extraction::{EntityType, TypeCounts};
use crate::partition::{EdgeKind, ParagraphGraph, PartitionResult};
use crate::relations::SimilarityMatrix;

type V2 = [f64; 2];

fn sub(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn len(a: V2) -> f64 {
    a[0].hypot(a[1])
}

fn unit(a: V2) -> V2 {
    let l = len(a);
    if l > 0.0 {
        [a[0] / l, a[1] / l]
    } else {
        [0.0, 0.0]
    }
}

// ---------------------------------------------------------------------------
// Document space (3D)

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpaceParams {
    pub iterations: usize,
    pub initial_step: f64,
    pub decay: f64,
    /// Spring constant per unit similarity.
    pub attraction: f64,
    /// Total repulsion budget per node, split evenly over the other nodes.
    pub repulsion: f64,
    pub base_radius: f64,
}

impl Default for SpaceParams {
    fn default() -> Self {
        SpaceParams {
            iterations: 300,
            initial_step: 1.0,
            decay: 0.985,
            attraction: 0.1,
            repulsion: 1.0,
            base_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceNode {
    pub document_id: String,
    pub position: [f64; 3],
    pub radius: f64,
    pub topic_id: usize,
    pub topic_color_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceLink {
    pub source: String,
    pub target: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceLayout {
    pub nodes: Vec<SpaceNode>,
    pub links: Vec<SpaceLink>,
}

/// Seeded points on a sphere of radius `10 · cbrt(n)`; a single node sits at the origin.
pub fn initial_space_positions(n: usize, seed: u64) -> Vec<[f64; 3]> {
    if n <= 1 {
        return vec![[0.0; 3]; n];
    }
    let radius = 10.0 * (n as f64).cbrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let p: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let l = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if l > 1e-3 && l <= 1.0 {
                break [p[0] / l * radius, p[1] / l * radius, p[2] / l * radius];
            }
        })
        .collect()
}

fn median(xs: &[usize]) -> f64 {
    let mut v: Vec<usize> = xs.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return 1.0;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Input row for [`layout_space`].
#[derive(Debug, Clone)]
pub struct SpaceInput<'a> {
    pub document_id: &'a str,
    pub text_length: usize,
    pub topic_id: usize,
    pub topic_color_index: usize,
}

/// Force-directed 3D layout: similarity-weighted springs for pairs above
/// `theta`, constant-magnitude pairwise repulsion, fixed decaying schedule.
///
/// Constant-magnitude repulsion is the gradient of a convex function, so
/// with no links every pairwise distance is non-decreasing.
pub fn layout_space(
    docs: &[SpaceInput<'_>],
    doc_similarities: &SimilarityMatrix,
    theta: f64,
    seed: u64,
    params: &SpaceParams,
) -> Result<SpaceLayout> {
    let n = docs.len();
    if n == 0 {
        return Err(Error::invalid("no documents to lay out"));
    }
    let index = doc_similarities.index_map();
    let pos_in_matrix = docs
        .iter()
        .map(|d| {
            index
                .get(d.document_id)
                .copied()
                .ok_or_else(|| Error::not_found(format!("similarity row for {}", d.document_id)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut links = Vec::new();
    let mut springs: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let s = doc_similarities.get(pos_in_matrix[i], pos_in_matrix[j]);
            if s > theta {
                springs.push((i, j, s));
                links.push(SpaceLink {
                    source: docs[i].document_id.to_string(),
                    target: docs[j].document_id.to_string(),
                    similarity: s,
                });
            }
        }
    }
    let mut stiffness = vec![0.0; n];
    for &(i, j, s) in &springs {
        stiffness[i] += params.attraction * s;
        stiffness[j] += params.attraction * s;
    }
    let max_stiffness = stiffness.iter().cloned().fold(0.0, f64::max);
    let step_cap = if max_stiffness > 0.0 {
        0.5 / max_stiffness
    } else {
        f64::INFINITY
    };

    let mut pos = initial_space_positions(n, seed);
    let rep = if n > 1 {
        params.repulsion / (n - 1) as f64
    } else {
        0.0
    };
    let mut step = params.initial_step;
    let mut force = vec![[0.0f64; 3]; n];
    for _ in 0..params.iterations {
        force.iter_mut().for_each(|f| *f = [0.0; 3]);
        for i in 0..n {
            for j in i + 1..n {
                let d = [
                    pos[i][0] - pos[j][0],
                    pos[i][1] - pos[j][1],
                    pos[i][2] - pos[j][2],
                ];
                let l = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if l == 0.0 {
                    continue;
                }
                for a in 0..3 {
                    let f = rep * d[a] / l;
                    force[i][a] += f;
                    force[j][a] -= f;
                }
            }
        }
        for &(i, j, s) in &springs {
            for a in 0..3 {
                let f = params.attraction * s * (pos[j][a] - pos[i][a]);
                force[i][a] += f;
                force[j][a] -= f;
            }
        }
        let h = step.min(step_cap);
        for (p, f) in pos.iter_mut().zip(&force) {
            for a in 0..3 {
                p[a] += h * f[a];
            }
        }
        step *= params.decay;
    }
    let mut centroid = [0.0; 3];
    for p in &pos {
        for a in 0..3 {
            centroid[a] += p[a] / n as f64;
        }
    }
    let lengths: Vec<usize> = docs.iter().map(|d| d.text_length.max(1)).collect();
    let med = median(&lengths).max(1.0);
    let nodes = docs
        .iter()
        .zip(&pos)
        .zip(&lengths)
        .map(|((d, p), &l)| SpaceNode {
            document_id: d.document_id.to_string(),
            position: [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]],
            radius: params.base_radius * (l as f64 / med).cbrt(),
            topic_id: d.topic_id,
            topic_color_index: d.topic_color_index,
        })
        .collect();
    Ok(SpaceLayout { nodes, links })
}

// ---------------------------------------------------------------------------
// Star map (2D)

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkForce {
    /// Magnitude `‖F‖` regardless of distance.
    #[default]
    Constant,
    /// Magnitude `‖F‖ · distance / (r_i + r_j + padding)`.
    Spring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StarMapParams {
    pub boundary_radius: f64,
    pub unit_force: f64,
    /// Collision padding as a fraction of `R`.
    pub padding: f64,
    /// Star radius as a fraction of `R`.
    pub star_radius: f64,
    /// Convergence threshold on per-star displacement, as a fraction of `R`.
    pub tolerance: f64,
    pub max_iters: usize,
    pub link_force: LinkForce,
}

impl Default for StarMapParams {
    fn default() -> Self {
        StarMapParams {
            boundary_radius: 1.0,
            unit_force: 1.0,
            padding: 0.02,
            star_radius: 0.015,
            tolerance: 1e-3,
            max_iters: 2000,
            link_force: LinkForce::Constant,
        }
    }
}

const INITIAL_STEP: f64 = 0.1;
const STEP_DECAY: f64 = 0.99;
const COLLISION_CAP: f64 = 4.0;
const LUMINANCE_MIN: f64 = 0.3;
const LUMINANCE_MAX: f64 = 1.0;
const BRIGHTNESS_MIN: f64 = 0.35;
const BRIGHTNESS_MAX: f64 = 1.0;
const PROJECTION_SWEEPS: usize = 200;
/// Sweep budget of the final projection after the last step.
const POLISH_SWEEPS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub angle: f64,
    pub position: V2,
}

/// Nine poles at angles `2πj/9`, indexed by type code.
pub fn poles(boundary_radius: f64) -> Vec<Pole> {
    EntityType::ALL
        .iter()
        .map(|&t| {
            let angle = TAU * t.code() as f64 / 9.0;
            Pole {
                etype: t,
                angle,
                position: [boundary_radius * angle.cos(), boundary_radius * angle.sin()],
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarState {
    pub paragraph_id: String,
    pub vertex: usize,
    pub part: usize,
    pub position: V2,
    pub radius: f64,
    pub counts_by_type: TypeCounts,
    pub total: usize,
    pub force: V2,
    pub constellation_id: String,
    pub paragraph_index: usize,
    pub constellation_color: Rgb,
    pub brightness_level: f64,
    pub border_luminance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarLink {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarMapState {
    pub boundary_radius: f64,
    pub poles: Vec<Pole>,
    pub stars: Vec<StarState>,
    /// Edges among the stars, by star index.
    pub links: Vec<StarLink>,
    pub unit_force: f64,
    pub padding: f64,
    pub theta: f64,
    pub link_force: LinkForce,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutResult {
    pub positions: Vec<V2>,
    pub iterations_used: usize,
    pub max_residual: f64,
    pub converged: bool,
}

/// Per-star input for [`StarMapState::new`].
#[derive(Debug, Clone)]
pub struct StarSeed {
    pub paragraph_id: String,
    pub vertex: usize,
    pub part: usize,
    pub document_id: String,
    pub paragraph_index: usize,
    pub counts_by_type: TypeCounts,
}

impl StarMapState {
    /// Stars start at seeded positions inside the disc.
    pub fn new(
        seeds: Vec<StarSeed>,
        links: Vec<StarLink>,
        theta: f64,
        params: &StarMapParams,
        seed: u64,
    ) -> Result<Self> {
        if !(params.boundary_radius > 0.0 && params.unit_force > 0.0) {
            return Err(Error::invalid("boundary radius and unit force must be positive"));
        }
        let r = params.boundary_radius;
        let radius = params.star_radius * r;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spread = 0.9 * (r - radius);
        let stars = seeds
            .into_iter()
            .map(|s| {
                let position = loop {
                    let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                    if len(p) <= 1.0 {
                        break [p[0] * spread, p[1] * spread];
                    }
                };
                StarState {
                    total: s.counts_by_type.total(),
                    paragraph_id: s.paragraph_id,
                    vertex: s.vertex,
                    part: s.part,
                    position,
                    radius,
                    counts_by_type: s.counts_by_type,
                    force: [0.0; 2],
                    constellation_id: s.document_id,
                    paragraph_index: s.paragraph_index,
                    constellation_color: color::categorical(0),
                    brightness_level: 1.0,
                    border_luminance: 1.0,
                }
            })
            .collect();
        let mut state = StarMapState {
            boundary_radius: r,
            poles: poles(r),
            stars,
            links,
            unit_force: params.unit_force,
            padding: params.padding * r,
            theta,
            link_force: params.link_force,
            seed,
        };
        star_styles(&mut state.stars);
        Ok(state)
    }

    pub fn positions(&self) -> Vec<V2> {
        self.stars.iter().map(|s| s.position).collect()
    }
}

/// Builds the star map for the selected parts of a partitioned graph.
/// `counts[v]` holds the per-type entity counts of vertex `v`.
pub fn init_star_map(
    graph: &ParagraphGraph,
    partition: &PartitionResult,
    selected_parts: &[usize],
    counts: &[TypeCounts],
    params: &StarMapParams,
    seed: u64,
) -> Result<StarMapState> {
    if selected_parts.is_empty() {
        return Err(Error::invalid("no subgraphs selected"));
    }
    if let Some(&p) = selected_parts.iter().find(|&&p| p >= partition.parts.len()) {
        return Err(Error::not_found(format!("part {p}")));
    }
    if counts.len() != graph.len() {
        return Err(Error::invalid("entity counts not aligned with graph vertices"));
    }
    let mut vertices: Vec<usize> = selected_parts
        .iter()
        .flat_map(|&p| partition.parts[p].iter().copied())
        .collect();
    vertices.sort_unstable();
    vertices.dedup();
    let mut star_of = vec![usize::MAX; graph.len()];
    for (i, &v) in vertices.iter().enumerate() {
        star_of[v] = i;
    }
    let paragraph_index = |v: usize| {
        let doc = &graph.vertices[v].document_id;
        (0..v).filter(|&u| &graph.vertices[u].document_id == doc).count()
    };
    let seeds = vertices
        .iter()
        .map(|&v| StarSeed {
            paragraph_id: graph.vertices[v].id.clone(),
            vertex: v,
            part: partition.part_of[v],
            document_id: graph.vertices[v].document_id.clone(),
            paragraph_index: paragraph_index(v),
            counts_by_type: counts[v],
        })
        .collect();
    let links = graph
        .edges
        .iter()
        .filter(|e| star_of[e.u] != usize::MAX && star_of[e.v] != usize::MAX)
        .map(|e| StarLink {
            a: star_of[e.u],
            b: star_of[e.v],
            weight: e.weight,
            kind: e.kind,
        })
        .collect();
    StarMapState::new(seeds, links, graph.theta, params, seed)
}

/// Pole spring: `Σ_j (num_j / num) · ‖F‖ · d̂(position → V_j)`; zero when `num = 0`.
pub fn spring_force(position: V2, counts: &TypeCounts, poles: &[Pole], unit_force: f64) -> V2 {
    let total = counts.total();
    if total == 0 {
        return [0.0; 2];
    }
    let mut f = [0.0; 2];
    for (t, n) in counts.iter() {
        let d = unit(sub(poles[t.code()].position, position));
        let w = n as f64 / total as f64 * unit_force;
        f[0] += w * d[0];
        f[1] += w * d[1];
    }
    f
}

/// Deterministic separation direction for coincident stars.
fn tie_direction(i: usize, j: usize) -> V2 {
    let a = (i as f64 * 2.399_963_229_728_653) + (j as f64 * 0.618_033_988_749_895);
    [a.cos(), a.sin()]
}

/// Combined force per star. Accumulation order is fixed.
pub fn compute_forces(state: &StarMapState) -> Vec<V2> {
    let n = state.stars.len();
    let uf = state.unit_force;
    let mut forces = vec![[0.0; 2]; n];
    for l in &state.links {
        let (pa, pb) = (state.stars[l.a].position, state.stars[l.b].position);
        let d = sub(pb, pa);
        let dir = unit(d);
        let mag = match l.kind {
            EdgeKind::Intra => match state.link_force {
                LinkForce::Constant => uf,
                LinkForce::Spring => {
                    let rest = state.stars[l.a].radius + state.stars[l.b].radius + state.padding;
                    uf * len(d) / rest
                }
            },
            EdgeKind::Similarity => {
                if l.weight > state.theta {
                    uf * l.weight
                } else {
                    0.0
                }
            }
        };
        forces[l.a][0] += mag * dir[0];
        forces[l.a][1] += mag * dir[1];
        forces[l.b][0] -= mag * dir[0];
        forces[l.b][1] -= mag * dir[1];
    }
    for (f, s) in forces.iter_mut().zip(&state.stars) {
        let sp = spring_force(s.position, &s.counts_by_type, &state.poles, uf);
        f[0] += sp[0];
        f[1] += sp[1];
    }
    for i in 0..n {
        for j in i + 1..n {
            let (si, sj) = (&state.stars[i], &state.stars[j]);
            let reach = si.radius + sj.radius + state.padding;
            let d = sub(si.position, sj.position);
            let dist = len(d);
            if dist >= reach {
                continue;
            }
            let dir = if dist > 0.0 { unit(d) } else { tie_direction(i, j) };
            let mag = if state.padding > 0.0 {
                (uf * (reach - dist) / state.padding).min(COLLISION_CAP * uf)
            } else {
                COLLISION_CAP * uf
            };
            forces[i][0] += mag * dir[0];
            forces[i][1] += mag * dir[1];
            forces[j][0] -= mag * dir[0];
            forces[j][1] -= mag * dir[1];
        }
    }
    forces
}

fn clamp_to_disc(p: V2, limit: f64) -> V2 {
    let l = len(p);
    if l > limit && l > 0.0 {
        [p[0] / l * limit, p[1] / l * limit]
    } else {
        p
    }
}

/// Bucket grid over the disc for near-neighbour queries.
struct Grid {
    cell: f64,
    side: usize,
    origin: f64,
    buckets: Vec<Vec<usize>>,
}

impl Grid {
    fn new(boundary: f64, cell: f64) -> Self {
        let side = ((2.0 * boundary / cell).ceil() as usize).clamp(1, 1024);
        Grid {
            cell: 2.0 * boundary / side as f64,
            side,
            origin: -boundary,
            buckets: vec![Vec::new(); side * side],
        }
    }

    fn coord(&self, x: f64) -> usize {
        (((x - self.origin) / self.cell).floor().max(0.0) as usize).min(self.side - 1)
    }

    fn fill(&mut self, stars: &[StarState]) {
        for b in &mut self.buckets {
            b.clear();
        }
        for (i, s) in stars.iter().enumerate() {
            let (cx, cy) = (self.coord(s.position[0]), self.coord(s.position[1]));
            self.buckets[cy * self.side + cx].push(i);
        }
    }

    /// Indices above `i` in the 3x3 block around `p`, ascending.
    fn after(&self, i: usize, p: V2, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = (self.coord(p[0]), self.coord(p[1]));
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.side - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.side - 1) {
                out.extend(self.buckets[y * self.side + x].iter().copied().filter(|&j| j > i));
            }
        }
        out.sort_unstable();
    }
}

/// Gauss-Seidel pass over overlapping pairs until none overlaps by more than
/// `1e-8 R`.
fn project_overlaps(state: &mut StarMapState, sweeps: usize) {
    let n = state.stars.len();
    let r = state.boundary_radius;
    let tol = 1e-8 * r;
    let max_radius = state.stars.iter().map(|s| s.radius).fold(0.0, f64::max);
    if n < 2 || max_radius <= 0.0 {
        return;
    }
    // The margin keeps pairs visible after the small moves of late sweeps.
    let mut grid = Grid::new(r, 2.2 * max_radius);
    let mut near = Vec::new();
    for _ in 0..sweeps {
        grid.fill(&state.stars);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            grid.after(i, state.stars[i].position, &mut near);
            for &j in &near {
                let (pi, pj) = (state.stars[i].position, state.stars[j].position);
                let need = state.stars[i].radius + state.stars[j].radius;
                let d = sub(pi, pj);
                let dist = len(d);
                let overlap = need - dist;
                if overlap <= 0.0 {
                    continue;
                }
                worst = worst.max(overlap);
                let dir = if dist > 0.0 { unit(d) } else { tie_direction(i, j) };
                // Slight over-correction so float rounding lands on the feasible side.
                let half = 0.5 * overlap * (1.0 + 1e-9) + 0.25 * tol;
                let li = r - state.stars[i].radius;
                let lj = r - state.stars[j].radius;
                state.stars[i].position = clamp_to_disc([pi[0] + half * dir[0], pi[1] + half * dir[1]], li);
                state.stars[j].position = clamp_to_disc([pj[0] - half * dir[0], pj[1] - half * dir[1]], lj);
            }
        }
        if worst <= tol {
            break;
        }
    }
}

/// One explicit step. Returns the largest per-star displacement.
pub fn step(state: &mut StarMapState, step_size: f64) -> Result<f64> {
    if !(step_size > 0.0) {
        return Err(Error::invalid("step size must be positive"));
    }
    let forces = compute_forces(state);
    for (s, f) in state.stars.iter_mut().zip(&forces) {
        let finite = f.iter().chain(&s.position).all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite(s.paragraph_id.clone()));
        }
        s.force = *f;
    }
    let before = state.positions();
    let r = state.boundary_radius;
    for s in &mut state.stars {
        let p = [
            s.position[0] + step_size * s.force[0],
            s.position[1] + step_size * s.force[1],
        ];
        s.position = clamp_to_disc(p, r - s.radius);
    }
    project_overlaps(state, PROJECTION_SWEEPS);
    for s in &mut state.stars {
        s.force = [0.0; 2];
    }
    Ok(before
        .iter()
        .zip(&state.stars)
        .map(|(b, s)| len(sub(s.position, *b)))
        .fold(0.0, f64::max))
}

/// Integrates with step `0.1 R · 0.99^t` until every star moves less than
/// `tolerance` (absolute) or `max_iters` is reached, then settles any
/// remaining overlap with a longer projection.
pub fn solve(state: &mut StarMapState, tolerance: f64, max_iters: usize) -> Result<LayoutResult> {
    if !(tolerance > 0.0) || max_iters == 0 {
        return Err(Error::invalid("tolerance must be positive and max_iters at least 1"));
    }
    let mut h = INITIAL_STEP * state.boundary_radius;
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    while iters < max_iters {
        residual = step(state, h)?;
        iters += 1;
        if residual < tolerance {
            break;
        }
        h *= STEP_DECAY;
    }
    project_overlaps(state, POLISH_SWEEPS);
    Ok(LayoutResult {
        positions: state.positions(),
        iterations_used: iters,
        max_residual: residual,
        converged: residual < tolerance,
    })
}

/// Constellation hue per document, brightness ramp by paragraph order within
/// the constellation, border luminance from min-max normalized entity totals.
pub fn star_styles(stars: &mut [StarState]) {
    let mut docs: Vec<&str> = Vec::new();
    for s in stars.iter() {
        if !docs.contains(&s.constellation_id.as_str()) {
            docs.push(&s.constellation_id);
        }
    }
    let docs: Vec<String> = docs.into_iter().map(String::from).collect();
    let (lo, hi) = stars
        .iter()
        .map(|s| s.total)
        .fold((usize::MAX, 0), |(lo, hi), t| (lo.min(t), hi.max(t)));
    let mut levels = vec![0.0; stars.len()];
    for (ci, doc) in docs.iter().enumerate() {
        let mut members: Vec<usize> = (0..stars.len())
            .filter(|&i| &stars[i].constellation_id == doc)
            .collect();
        members.sort_by_key(|&i| stars[i].paragraph_index);
        let count = members.len() as f64;
        for (rank, &i) in members.iter().enumerate() {
            levels[i] = BRIGHTNESS_MIN + (BRIGHTNESS_MAX - BRIGHTNESS_MIN) * (rank as f64 + 0.5) / count;
            stars[i].constellation_color = color::categorical(ci);
        }
    }
    for (s, level) in stars.iter_mut().zip(levels) {
        s.brightness_level = level;
        s.border_luminance = if hi > lo {
            LUMINANCE_MIN + (LUMINANCE_MAX - LUMINANCE_MIN) * (s.total - lo) as f64 / (hi - lo) as f64
        } else {
            LUMINANCE_MAX
        };
    }
}

// ---------------------------------------------------------------------------
// Export

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleExport {
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub angle: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarExport {
    pub id: String,
    pub document_id: String,
    pub part: usize,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub total: usize,
    pub counts: TypeCounts,
    pub constellation_id: String,
    pub constellation_color: Rgb,
    pub brightness_level: f64,
    pub border_luminance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceNodeExport {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub radius: f64,
    pub topic: usize,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarMapExport {
    pub boundary_radius: f64,
    pub poles: Vec<PoleExport>,
    pub stars: Vec<StarExport>,
    pub constellation_lines: Vec<[String; 2]>,
    pub iterations_used: usize,
    pub max_residual: f64,
    pub converged: bool,
    pub seed: u64,
}

impl StarMapState {
    pub fn export(&self, result: &LayoutResult) -> StarMapExport {
        StarMapExport {
            boundary_radius: self.boundary_radius,
            poles: self
                .poles
                .iter()
                .map(|p| PoleExport {
                    etype: p.etype,
                    angle: p.angle,
                    x: p.position[0],
                    y: p.position[1],
                })
                .collect(),
            stars: self
                .stars
                .iter()
                .map(|s| StarExport {
                    id: s.paragraph_id.clone(),
                    document_id: s.constellation_id.clone(),
                    part: s.part,
                    x: s.position[0],
                    y: s.position[1],
                    radius: s.radius,
                    total: s.total,
                    counts: s.counts_by_type,
                    constellation_id: s.constellation_id.clone(),
                    constellation_color: s.constellation_color,
                    brightness_level: s.brightness_level,
                    border_luminance: s.border_luminance,
                })
                .collect(),
            constellation_lines: self
                .links
                .iter()
                .filter(|l| l.kind == EdgeKind::Intra)
                .map(|l| {
                    [
                        self.stars[l.a].paragraph_id.clone(),
                        self.stars[l.b].paragraph_id.clone(),
                    ]
                })
                .collect(),
            iterations_used: result.iterations_used,
            max_residual: result.max_residual,
            converged: result.converged,
            seed: self.seed,
        }
    }
}

impl SpaceLayout {
    pub fn export_nodes(&self) -> Vec<SpaceNodeExport> {
        self.nodes
            .iter()
            .map(|n| SpaceNodeExport {
                id: n.document_id.clone(),
                x: n.position[0],
                y: n.position[1],
                z: n.position[2],
                radius: n.radius,
                topic: n.topic_id,
                color: color::categorical(n.topic_color_index),
            })
            .collect()
    }
}
