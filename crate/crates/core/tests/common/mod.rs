//! Independent oracles shared by the integration and acceptance tests.
//! They use brute force or textbook definitions and none of the library's
//! internal algorithms.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use medlens_core::extraction::{Entity, EntitySet, EntityType, TypeCounts};
use medlens_core::layout::{StarLink, StarMapParams, StarMapState, StarSeed};
use medlens_core::partition::{EdgeKind, GraphEdge, GraphVertex, ParagraphGraph};
use medlens_core::tree::{AssociationTree, NodeKind, ROOT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wraps a plain edge list as a paragraph graph, one document per vertex.
pub fn graph_from_edges(n: usize, edges: &[(usize, usize, f64, EdgeKind)]) -> ParagraphGraph {
    ParagraphGraph {
        vertices: (0..n)
            .map(|i| GraphVertex {
                id: format!("v{i}"),
                document_id: format!("d{i}"),
                entity_set_id: format!("mes:v{i}"),
            })
            .collect(),
        edges: edges
            .iter()
            .map(|&(u, v, weight, kind)| GraphEdge { u, v, weight, kind })
            .collect(),
        theta: 0.5,
    }
}

/// Random simple graph with unit intra edges and fractional similarity edges.
pub fn random_mixed_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<(usize, usize, f64, EdgeKind)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                if rng.gen_bool(0.5) {
                    edges.push((u, v, 1.0, EdgeKind::Intra));
                } else {
                    edges.push((u, v, rng.gen_range(0.5..1.0), EdgeKind::Similarity));
                }
            }
        }
    }
    edges
}

/// Recount of crossing weight straight from the edge list.
pub fn recount_cut(edges: &[(usize, usize, f64, EdgeKind)], part_of: &[usize]) -> f64 {
    edges
        .iter()
        .filter(|e| part_of[e.0] != part_of[e.1])
        .map(|e| e.2)
        .sum()
}

/// Minimum cut over every assignment of `n` vertices to at most `k` blocks
/// of at most `max_size` vertices (restricted-growth enumeration).
pub fn exhaustive_min_cut(n: usize, edges: &[(usize, usize, f64, EdgeKind)], k: usize, max_size: usize) -> f64 {
    fn go(
        i: usize,
        n: usize,
        k: usize,
        max_size: usize,
        blocks: usize,
        assign: &mut Vec<usize>,
        load: &mut Vec<usize>,
        edges: &[(usize, usize, f64, EdgeKind)],
        best: &mut f64,
    ) {
        if i == n {
            *best = best.min(recount_cut(edges, assign));
            return;
        }
        for b in 0..(blocks + 1).min(k) {
            if load[b] == max_size {
                continue;
            }
            assign[i] = b;
            load[b] += 1;
            go(i + 1, n, k, max_size, blocks.max(b + 1), assign, load, edges, best);
            load[b] -= 1;
        }
    }
    let mut best = f64::INFINITY;
    go(0, n, k, max_size, 0, &mut vec![0; n], &mut vec![0; k], edges, &mut best);
    best
}

pub fn entity_set(id: &str, names: &[&str]) -> EntitySet {
    let mut entities: Vec<Entity> = Vec::new();
    for n in names {
        let e = Entity::new(*n, EntityType::Dis);
        if !entities.contains(&e) {
            entities.push(e);
        }
    }
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

/// Connected components of the "shares an entity" relation, by set id.
pub fn shared_entity_components(sets: &[EntitySet]) -> Vec<BTreeSet<String>> {
    let n = sets.len();
    let mut comp: Vec<usize> = (0..n).collect();
    // Label propagation until fixed point.
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                let share = sets[i].entities.iter().any(|e| sets[j].entities.contains(e));
                if share && comp[j] < comp[i] {
                    comp[i] = comp[j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: HashMap<usize, BTreeSet<String>> = HashMap::new();
    for (i, c) in comp.into_iter().enumerate() {
        groups.entry(c).or_default().insert(sets[i].id.clone());
    }
    let mut out: Vec<BTreeSet<String>> = groups.into_values().collect();
    out.sort();
    out
}

/// Size of the intersection of two entity lists, counted with sets.
pub fn intersection_size(a: &[Entity], b: &[Entity]) -> usize {
    let a: BTreeSet<(&str, EntityType)> = a.iter().map(|e| (e.normalized.as_str(), e.etype)).collect();
    let b: BTreeSet<(&str, EntityType)> = b.iter().map(|e| (e.normalized.as_str(), e.etype)).collect();
    a.intersection(&b).count()
}

/// Random entity sets over an alphabet of `alphabet` single-letter entities.
pub fn random_sets<R: Rng>(rng: &mut R, count: usize, alphabet: usize) -> Vec<EntitySet> {
    let letters: Vec<String> = (0..alphabet).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    (0..count)
        .map(|i| {
            let size = rng.gen_range(1..=3);
            let names: Vec<&str> = (0..size).map(|_| letters[rng.gen_range(0..alphabet)].as_str()).collect();
            entity_set(&format!("s{i:02}"), &names)
        })
        .collect()
}

/// `n` stars in documents of five paragraphs, path links inside each
/// document and a sprinkle of similarity links across documents.
pub fn star_fixture(n: usize, seed: u64, params: &StarMapParams) -> StarMapState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<StarSeed> = (0..n)
        .map(|i| {
            let mut c = TypeCounts::default();
            for _ in 0..rng.gen_range(0..6) {
                c.add(EntityType::ALL[rng.gen_range(0..9)], 1);
            }
            StarSeed {
                paragraph_id: format!("d{}:p{}", i / 5, i % 5),
                vertex: i,
                part: i / 10,
                document_id: format!("d{}", i / 5),
                paragraph_index: i % 5,
                counts_by_type: c,
            }
        })
        .collect();
    let mut links = Vec::new();
    for i in 0..n {
        if i % 5 != 4 && i + 1 < n {
            links.push(StarLink { a: i, b: i + 1, weight: 1.0, kind: EdgeKind::Intra });
        }
    }
    for _ in 0..n / 4 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a / 5 != b / 5 {
            links.push(StarLink {
                a: a.min(b),
                b: a.max(b),
                weight: rng.gen_range(0.5..1.0),
                kind: EdgeKind::Similarity,
            });
        }
    }
    StarMapState::new(seeds, links, 0.5, params, seed).unwrap()
}

/// Every inserted set appears exactly once, reachable from the root, with
/// exactly its entities as leaves.
pub fn assert_conserved(t: &AssociationTree, sets: &[EntitySet]) {
    let mut seen = BTreeSet::new();
    let mut stack = vec![ROOT];
    let mut visited = 0;
    while let Some(i) = stack.pop() {
        visited += 1;
        let node = t.node(i);
        if node.kind == NodeKind::Mes {
            assert!(seen.insert(node.id.clone()), "{} reachable twice", node.id);
            let leaves: Vec<_> = node
                .children
                .iter()
                .filter(|&&c| t.node(c).kind == NodeKind::Me)
                .map(|&c| t.node(c).entities[0].clone())
                .collect();
            assert_eq!(leaves, node.entities);
        }
        for &c in &node.children {
            assert_eq!(t.node(c).parent, Some(i));
            stack.push(c);
        }
    }
    assert_eq!(visited, t.nodes().len(), "detached nodes left behind");
    let want: BTreeSet<String> = sets.iter().map(|s| s.id.clone()).collect();
    assert_eq!(seen, want);
}

/// Families of root children must equal shared-entity components, each
/// family must own a contiguous run of root children, and every set must sit
/// under a root child of its own family.
pub fn assert_grouped(t: &AssociationTree, sets: &[EntitySet]) {
    let oracle = shared_entity_components(sets);
    let component_of = |id: &str| oracle.iter().position(|c| c.contains(id)).unwrap();

    for s in sets {
        let i = t.node_of(&s.id).unwrap();
        let branch = t.root_branch(i).unwrap();
        assert_eq!(
            component_of(&s.id),
            component_of(&t.node(branch).id),
            "{} sits in a branch of another component",
            s.id
        );
    }
    let roots: Vec<usize> = t.node(ROOT).children.clone();
    let comps: Vec<usize> = roots.iter().map(|&r| component_of(&t.node(r).id)).collect();
    let mut closed = BTreeSet::new();
    for w in 0..comps.len() {
        if w > 0 && comps[w] != comps[w - 1] {
            closed.insert(comps[w - 1]);
        }
        assert!(!closed.contains(&comps[w]), "component split across root runs: {comps:?}");
    }
    // Family labels agree with the oracle in both directions.
    for a in &roots {
        for b in &roots {
            let same_family = t.family_of(*a) == t.family_of(*b);
            let same_comp = component_of(&t.node(*a).id) == component_of(&t.node(*b).id);
            assert_eq!(same_family, same_comp);
        }
    }
}
