//! Constructors for the example families: diagonal graphs over a finite
//! group, Bisch-Haagerup coset graphs, biregular-tree balls, and parallel
//! multi-edges, each with its natural symmetry attached.

use crate::graph::{EdgeFile, GeneratorFile, GraphFile, GroupFile, WeightedGraph};
use crate::perm::{named_group, Perm, PermGroup};
use crate::scalars::{square_free_part, QScalar};
use crate::symmetry::{edge_map_from_vertex_map, GraphAut, RootedTreeOracle, SymmetryOracle};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuilderError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("graph construction failed: {0}")]
    Graph(String),
}

/// A constructed weighted graph with its symmetry and provenance tag.
#[derive(Debug, Clone)]
pub struct BuiltGraph {
    pub graph: WeightedGraph,
    pub oracle: SymmetryOracle,
    pub kind: String,
}

/// Diagonal graph of a finite group with generator list `g_1..g_{n+1}`,
/// the last of which must be the identity: two copies of `G` as vertices,
/// an edge `v+_h -> v-_{h g_i}` per element and generator, `mu = 1`,
/// left-multiplication action.
pub fn diagonal(group: &PermGroup, gens: &[Perm]) -> Result<BuiltGraph, BuilderError> {
    if gens.is_empty() || !gens.last().unwrap().is_identity() {
        return Err(BuilderError::InvalidParameters(
            "diagonal builder needs generators ending with the identity".into(),
        ));
    }
    for p in gens {
        if group.index_of(p).is_none() {
            return Err(BuilderError::InvalidParameters(
                "generator outside the ambient group".into(),
            ));
        }
    }
    let order = group.order();
    let even_names: Vec<String> = (0..order).map(|i| format!("p{}", i)).collect();
    let odd_names: Vec<String> = (0..order).map(|i| format!("m{}", i)).collect();

    // Edge list in (element, generator) order; labels disambiguate repeats.
    let mut edges = Vec::new();
    let mut edge_key: Vec<(usize, usize)> = Vec::new(); // (h index, gen index)
    let mut label_count: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for h in 0..order {
        for (gi, gen) in gens.iter().enumerate() {
            let target = group
                .index_of(&group.elements[h].compose(gen))
                .expect("group closed");
            let label = label_count.entry((h, target)).or_insert(0);
            *label += 1;
            edges.push((
                even_names[h].clone(),
                odd_names[target].clone(),
                *label,
                QScalar::one(),
            ));
            edge_key.push((h, gi));
        }
    }
    let delta = QScalar::from_int(gens.len() as i64);
    let graph = WeightedGraph::new(even_names, odd_names, edges, delta, Vec::new(), 1)
        .map_err(|e| BuilderError::Graph(e.to_string()))?;

    // Left multiplication k: v_h -> v_{k h}, edge (h, i) -> (k h, i).
    let edge_index: BTreeMap<(usize, usize), usize> = edge_key
        .iter()
        .enumerate()
        .map(|(idx, &(h, gi))| ((h, gi), idx))
        .collect();
    let mut auts = Vec::new();
    for k in &group.elements[1..] {
        // generators of the left action: one per group generator suffices,
        // but attaching every non-identity element keeps orbit closures
        // cheap for the small groups used here. Use only the groups'
        // generating set when it is known.
        let _ = k;
        break;
    }
    // Use a minimal generating set: all elements works but is wasteful;
    // take every element whose index is produced by composing previous ones
    // is overkill here — groups are tiny, so one generator per group element
    // of a generating set found greedily.
    let gen_elems = greedy_generators(group);
    for k in &gen_elems {
        let ki = group.index_of(k).unwrap();
        let mut vmap = vec![0u32; 2 * order];
        for h in 0..order {
            let kh = group.index_of(&group.elements[ki].compose(&group.elements[h])).unwrap();
            vmap[h] = kh as u32;
            vmap[order + h] = (order + kh) as u32;
        }
        let mut emap = vec![0u32; edge_key.len()];
        for (idx, &(h, gi)) in edge_key.iter().enumerate() {
            let kh = group.index_of(&group.elements[ki].compose(&group.elements[h])).unwrap();
            emap[idx] = edge_index[&(kh, gi)] as u32;
        }
        auts.push(GraphAut { vmap, emap });
    }
    Ok(BuiltGraph {
        graph,
        oracle: SymmetryOracle::explicit(auts),
        kind: "diagonal".into(),
    })
}

fn greedy_generators(group: &PermGroup) -> Vec<Perm> {
    let mut gens: Vec<Perm> = Vec::new();
    let mut span = PermGroup::closure(group.degree, &gens, group.order() + 1).unwrap();
    for p in &group.elements {
        if span.contains(p) {
            continue;
        }
        gens.push(p.clone());
        span = PermGroup::closure(group.degree, &gens, group.order() + 1).unwrap();
        if span.order() == group.order() {
            break;
        }
    }
    gens
}

/// Diagonal builder over a named group with generator list = the group's
/// standard generators plus the identity.
pub fn diagonal_named(name: &str) -> Result<BuiltGraph, BuilderError> {
    let (group, mut gens) = named_group(name)
        .ok_or_else(|| BuilderError::InvalidParameters(format!("unknown group `{}`", name)))?;
    gens.push(Perm::identity(group.degree));
    diagonal(&group, &gens)
}

/// The running example: diagonal graph of `Z/2` with generators `[g, e]`
/// (a 4-cycle with a free transitive action).
pub fn diagonal_z2() -> BuiltGraph {
    diagonal_named("Z2").expect("Z2 preset")
}

/// Bisch-Haagerup coset graph: `V+ = G/H`, `V- = G/K`, an edge per group
/// element `g` joining `gH` and `gK`, weight `sqrt(|K|/|H|)` on even-sourced
/// edges, left-multiplication action. `G` is the closure of `H` and `K`
/// inside the ambient group; `H` and `K` must intersect trivially.
pub fn bisch_haagerup(
    ambient: &PermGroup,
    h_gens: &[Perm],
    k_gens: &[Perm],
) -> Result<BuiltGraph, BuilderError> {
    let h = ambient
        .subgroup(h_gens)
        .map_err(BuilderError::InvalidParameters)?;
    let k = ambient
        .subgroup(k_gens)
        .map_err(BuilderError::InvalidParameters)?;
    for p in &h.elements {
        if !p.is_identity() && k.contains(p) {
            return Err(BuilderError::InvalidParameters(
                "H and K must intersect trivially".into(),
            ));
        }
    }
    let mut all_gens: Vec<Perm> = h_gens.to_vec();
    all_gens.extend_from_slice(k_gens);
    let g = ambient
        .subgroup(&all_gens)
        .map_err(BuilderError::InvalidParameters)?;

    build_bh_graph(&g, &h, &k, &all_gens, true)
}

/// Same graph with `mu` forced to 1: the counting criterion for
/// sphericality must fail on it (and the row-sum axiom does too).
pub fn bisch_haagerup_flat_mu(
    ambient: &PermGroup,
    h_gens: &[Perm],
    k_gens: &[Perm],
) -> Result<BuiltGraph, BuilderError> {
    let h = ambient
        .subgroup(h_gens)
        .map_err(BuilderError::InvalidParameters)?;
    let k = ambient
        .subgroup(k_gens)
        .map_err(BuilderError::InvalidParameters)?;
    let mut all_gens: Vec<Perm> = h_gens.to_vec();
    all_gens.extend_from_slice(k_gens);
    let g = ambient
        .subgroup(&all_gens)
        .map_err(BuilderError::InvalidParameters)?;
    build_bh_graph(&g, &h, &k, &all_gens, false)
}

fn build_bh_graph(
    g: &PermGroup,
    h: &PermGroup,
    k: &PermGroup,
    action_gens: &[Perm],
    weighted: bool,
) -> Result<BuiltGraph, BuilderError> {
    let h_reps = g.left_coset_reps(h);
    let k_reps = g.left_coset_reps(k);
    let coset_index = |reps: &[Perm], sub: &PermGroup, x: &Perm| -> usize {
        reps.iter()
            .position(|r| sub.contains(&r.inverse().compose(x)))
            .expect("coset rep exists")
    };
    let even_names: Vec<String> = (0..h_reps.len()).map(|i| format!("H{}", i)).collect();
    let odd_names: Vec<String> = (0..k_reps.len()).map(|i| format!("K{}", i)).collect();

    let hk = (h.order() * k.order()) as u64;
    let d = square_free_part(hk);
    let s = ((hk / d) as f64).sqrt().round() as i64;
    debug_assert_eq!((s * s) as u64 * d, hk);
    // mu = sqrt(|K|/|H|) = sqrt(|H||K|)/|H| = (s/|H|) sqrt(d)
    let mu = if weighted {
        if d == 1 {
            QScalar::from_ratio(s, h.order() as i64)
        } else {
            QScalar::sqrt_term(s, h.order() as i64, d).expect("square-free d")
        }
    } else {
        QScalar::one()
    };
    let delta = if weighted {
        if d == 1 {
            QScalar::from_int(s)
        } else {
            QScalar::sqrt_term(s, 1, d).expect("square-free d")
        }
    } else {
        QScalar::from_int(h.order() as i64)
    };

    let mut edges = Vec::new();
    let mut edge_pair: Vec<(usize, usize)> = Vec::new(); // (gH index, gK index) per edge = per group element
    for x in &g.elements {
        let src = coset_index(&h_reps, h, x);
        let tgt = coset_index(&k_reps, k, x);
        edges.push((
            even_names[src].clone(),
            odd_names[tgt].clone(),
            1,
            mu.clone(),
        ));
        edge_pair.push((src, tgt));
    }
    // distinct elements must give distinct (source, target) pairs
    {
        let mut seen = std::collections::BTreeSet::new();
        for p in &edge_pair {
            if !seen.insert(*p) {
                return Err(BuilderError::InvalidParameters(
                    "H and K must intersect trivially (duplicate edge)".into(),
                ));
            }
        }
    }
    let graph = WeightedGraph::new(
        even_names,
        odd_names,
        edges,
        delta,
        Vec::new(),
        if weighted { d } else { 1 },
    )
    .map_err(|e| BuilderError::Graph(e.to_string()))?;

    // Left multiplication by each generator.
    let mut auts = Vec::new();
    let n_even = h_reps.len();
    for p in action_gens {
        let mut vmap = vec![0u32; graph.vertex_count()];
        for (i, r) in h_reps.iter().enumerate() {
            vmap[i] = coset_index(&h_reps, h, &p.compose(r)) as u32;
        }
        for (j, r) in k_reps.iter().enumerate() {
            vmap[n_even + j] = (n_even + coset_index(&k_reps, k, &p.compose(r))) as u32;
        }
        let mut emap = vec![0u32; g.order()];
        for (idx, x) in g.elements.iter().enumerate() {
            let img = p.compose(x);
            let img_idx = g.index_of(&img).expect("closed");
            emap[idx] = img_idx as u32;
        }
        auts.push(GraphAut { vmap, emap });
    }
    Ok(BuiltGraph {
        graph,
        oracle: SymmetryOracle::explicit(auts),
        kind: "bisch_haagerup".into(),
    })
}

/// The worked example `G = S3`, `H = <(01)>`, `K = <(012)>`.
pub fn bisch_haagerup_s3() -> Result<BuiltGraph, BuilderError> {
    let (s3, _) = named_group("S3").unwrap();
    bisch_haagerup(
        &s3,
        &[Perm::from_cycles(3, &[&[0, 1]])],
        &[Perm::from_cycles(3, &[&[0, 1, 2]])],
    )
}

pub fn bisch_haagerup_s3_flat_mu() -> Result<BuiltGraph, BuilderError> {
    let (s3, _) = named_group("S3").unwrap();
    bisch_haagerup_flat_mu(
        &s3,
        &[Perm::from_cycles(3, &[&[0, 1]])],
        &[Perm::from_cycles(3, &[&[0, 1, 2]])],
    )
}

/// Ball of radius `radius` of the `(r+, r-)`-biregular tree, rooted at the
/// even vertex `o`; `mu = sqrt(r-/r+)` on even-sourced edges, modulus
/// `sqrt(r+ r-)`, boundary at the frontier, rooted canonical-form oracle.
pub fn biregular_tree(r_plus: usize, r_minus: usize, radius: usize) -> Result<BuiltGraph, BuilderError> {
    if r_plus < 2 || r_minus < 2 {
        return Err(BuilderError::InvalidParameters(
            "biregular tree needs degrees >= 2".into(),
        ));
    }
    if radius < 2 {
        return Err(BuilderError::InvalidParameters("radius must be >= 2".into()));
    }
    let mut even_names: Vec<String> = Vec::new();
    let mut odd_names: Vec<String> = Vec::new();
    let mut depth_of: Vec<usize> = Vec::new();
    let mut names_all: Vec<String> = Vec::new();
    let mut boundary = Vec::new();

    // BFS construction; vertex records (name, depth, even).
    struct Node {
        name: String,
        depth: usize,
        even: bool,
    }
    let mut nodes = vec![Node { name: "o".into(), depth: 0, even: true }];
    let mut edges_raw: Vec<(usize, usize)> = Vec::new(); // (even node, odd node) by node index
    let mut head = 0usize;
    while head < nodes.len() {
        let (depth, even, parent_idx) = (nodes[head].depth, nodes[head].even, head);
        head += 1;
        if depth < radius {
            let full_degree = if even { r_plus } else { r_minus };
            let children = if depth == 0 { full_degree } else { full_degree - 1 };
            for c in 0..children {
                let name = if depth == 0 {
                    format!("o.{}", c + 1)
                } else {
                    format!("{}.{}", nodes[parent_idx].name, c + 1)
                };
                nodes.push(Node { name, depth: depth + 1, even: !even });
                let child_idx = nodes.len() - 1;
                if even {
                    edges_raw.push((parent_idx, child_idx));
                } else {
                    edges_raw.push((child_idx, parent_idx));
                }
            }
        }
    }
    for n in &nodes {
        names_all.push(n.name.clone());
        depth_of.push(n.depth);
        if n.depth == radius {
            boundary.push(n.name.clone());
        }
        if n.even {
            even_names.push(n.name.clone());
        } else {
            odd_names.push(n.name.clone());
        }
    }

    let prod = (r_plus * r_minus) as u64;
    let d = square_free_part(prod);
    let s = ((prod / d) as f64).sqrt().round() as i64;
    debug_assert_eq!((s * s) as u64 * d, prod);
    let mu = if d == 1 {
        QScalar::from_ratio(s, r_plus as i64)
    } else {
        QScalar::sqrt_term(s, r_plus as i64, d).expect("square-free d")
    };
    let delta = if d == 1 {
        QScalar::from_int(s)
    } else {
        QScalar::sqrt_term(s, 1, d).expect("square-free d")
    };
    let edges: Vec<(String, String, u32, QScalar)> = edges_raw
        .iter()
        .map(|&(e, o)| (nodes[e].name.clone(), nodes[o].name.clone(), 1, mu.clone()))
        .collect();
    let graph = WeightedGraph::new(even_names, odd_names, edges, delta, boundary, d)
        .map_err(|e| BuilderError::Graph(e.to_string()))?;
    let root = graph.vertex_by_name("o").expect("root exists");
    Ok(BuiltGraph {
        graph,
        oracle: SymmetryOracle::RootedTree(RootedTreeOracle {
            root,
            r_plus,
            r_minus,
            radius,
        }),
        kind: "biregular_tree".into(),
    })
}

/// `n` parallel edges between one even and one odd vertex, `mu = 1`,
/// `delta = n`, with the trivial action attached.
pub fn multi_edge(n: usize) -> BuiltGraph {
    build_multi_edge(n, false).expect("multi-edge parameters are valid")
}

/// Same graph with the full edge-permutation group `S_n` acting.
pub fn multi_edge_with_sn(n: usize) -> Result<BuiltGraph, BuilderError> {
    build_multi_edge(n, true)
}

fn build_multi_edge(n: usize, with_sn: bool) -> Result<BuiltGraph, BuilderError> {
    if n == 0 {
        return Err(BuilderError::InvalidParameters("need n >= 1 edges".into()));
    }
    let edges: Vec<(String, String, u32, QScalar)> = (0..n)
        .map(|i| ("p0".to_string(), "m0".to_string(), (i + 1) as u32, QScalar::one()))
        .collect();
    let graph = WeightedGraph::new(
        vec!["p0".into()],
        vec!["m0".into()],
        edges,
        QScalar::from_int(n as i64),
        Vec::new(),
        1,
    )
    .map_err(|e| BuilderError::Graph(e.to_string()))?;
    let oracle = if with_sn && n >= 2 {
        let mut gens = Vec::new();
        // transposition of the first two edges
        let mut emap: Vec<u32> = (0..n as u32).collect();
        emap.swap(0, 1);
        gens.push(GraphAut { vmap: vec![0, 1], emap });
        if n > 2 {
            let emap: Vec<u32> = (0..n as u32).map(|i| (i + 1) % n as u32).collect();
            gens.push(GraphAut { vmap: vec![0, 1], emap });
        }
        SymmetryOracle::explicit(gens)
    } else {
        SymmetryOracle::trivial()
    };
    Ok(BuiltGraph { graph, oracle, kind: "multi_edge".into() })
}

/// Serialize a built graph (and its explicit generators, when present) to
/// the JSON file format.
pub fn to_graph_file(b: &BuiltGraph) -> GraphFile {
    let g = &b.graph;
    let edges = g
        .edges()
        .map(|e| {
            let (s, t, label) = g.edge(e);
            EdgeFile {
                id: g.edge_name(e).to_string(),
                source: g.vertex_name(s).to_string(),
                target: g.vertex_name(t).to_string(),
                label,
                mu: g.mu_plus(e).clone(),
            }
        })
        .collect();
    let group = match &b.oracle {
        SymmetryOracle::Explicit(action) if !action.gens.is_empty() => Some(GroupFile {
            generators: action
                .gens
                .iter()
                .map(|aut| GeneratorFile {
                    vertex_map: g
                        .vertices()
                        .map(|v| {
                            (
                                g.vertex_name(v).to_string(),
                                g.vertex_name(aut.apply_vertex(v)).to_string(),
                            )
                        })
                        .collect(),
                    edge_map: g
                        .edges()
                        .map(|e| {
                            (
                                g.edge_name(e).to_string(),
                                g.edge_name(aut.emap[e as usize]).to_string(),
                            )
                        })
                        .collect(),
                })
                .collect(),
        }),
        _ => None,
    };
    GraphFile {
        field_d: g.field_d(),
        even_vertices: g.even_vertices().map(|v| g.vertex_name(v).to_string()).collect(),
        odd_vertices: g.odd_vertices().map(|v| g.vertex_name(v).to_string()).collect(),
        edges,
        delta: g.delta().clone(),
        boundary: g
            .boundary()
            .iter()
            .map(|&v| g.vertex_name(v).to_string())
            .collect(),
        group,
    }
}

/// Oracle loaded from a graph file's generator list (label-preserving edge
/// maps derived when absent).
pub fn oracle_from_file(
    g: &WeightedGraph,
    file: &GraphFile,
) -> Result<SymmetryOracle, BuilderError> {
    let Some(group) = &file.group else {
        return Ok(SymmetryOracle::trivial());
    };
    let mut gens = Vec::new();
    for gen in &group.generators {
        let mut vmap = vec![0u32; g.vertex_count()];
        for v in g.vertices() {
            let name = g.vertex_name(v);
            let img = gen
                .vertex_map
                .get(name)
                .ok_or_else(|| BuilderError::InvalidParameters(format!("vertex `{}` unmapped", name)))?;
            vmap[v as usize] = g
                .vertex_by_name(img)
                .ok_or_else(|| BuilderError::InvalidParameters(format!("unknown vertex `{}`", img)))?;
        }
        let emap = if gen.edge_map.is_empty() {
            edge_map_from_vertex_map(g, &vmap)
                .map_err(|e| BuilderError::InvalidParameters(e.to_string()))?
        } else {
            let mut emap = vec![0u32; g.edge_count()];
            let by_name: BTreeMap<&str, u32> =
                g.edges().map(|e| (g.edge_name(e), e)).collect();
            for e in g.edges() {
                let name = g.edge_name(e);
                let img = gen.edge_map.get(name).ok_or_else(|| {
                    BuilderError::InvalidParameters(format!("edge `{}` unmapped", name))
                })?;
                emap[e as usize] = *by_name.get(img.as_str()).ok_or_else(|| {
                    BuilderError::InvalidParameters(format!("unknown edge `{}`", img))
                })?;
            }
            emap
        };
        gens.push(GraphAut { vmap, emap });
    }
    Ok(SymmetryOracle::explicit(gens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_weight;
    use crate::symmetry::validate_action;

    #[test]
    fn diagonal_z2_is_a_4_cycle() {
        let b = diagonal_z2();
        assert_eq!(b.graph.even_count(), 2);
        assert_eq!(b.graph.odd_count(), 2);
        assert_eq!(b.graph.edge_count(), 4);
        let rep = validate_weight(&b.graph).unwrap();
        assert_eq!(rep.delta, QScalar::from_int(2));
        validate_action(&b.graph, &b.oracle).unwrap();
    }

    #[test]
    fn bh_s3_shape_and_weights() {
        let b = bisch_haagerup_s3().unwrap();
        assert_eq!(b.graph.even_count(), 3);
        assert_eq!(b.graph.odd_count(), 2);
        assert_eq!(b.graph.edge_count(), 6);
        // each even vertex carries |H| = 2 edges, each odd |K| = 3
        for v in b.graph.even_vertices() {
            assert_eq!(b.graph.degree(v), 2);
        }
        for v in b.graph.odd_vertices() {
            assert_eq!(b.graph.degree(v), 3);
        }
        let rep = validate_weight(&b.graph).unwrap();
        assert_eq!(rep.delta, QScalar::sqrt_term(1, 1, 6).unwrap());
        for e in b.graph.edges() {
            assert_eq!(*b.graph.mu_plus(e), QScalar::sqrt_term(1, 2, 6).unwrap());
        }
        validate_action(&b.graph, &b.oracle).unwrap();
    }

    #[test]
    fn bh_needs_trivial_intersection() {
        let (s3, _) = named_group("S3").unwrap();
        let err = bisch_haagerup(
            &s3,
            &[Perm::from_cycles(3, &[&[0, 1]])],
            &[Perm::from_cycles(3, &[&[0, 1]])],
        );
        assert!(matches!(err, Err(BuilderError::InvalidParameters(_))));
    }

    #[test]
    fn tree_counts_and_weights() {
        let b = biregular_tree(3, 3, 3).unwrap();
        // |V| = 1 + 3 + 6 + 12
        assert_eq!(b.graph.vertex_count(), 22);
        validate_weight(&b.graph).unwrap();
        assert_eq!(*b.graph.delta(), QScalar::from_int(3));

        let b = biregular_tree(2, 8, 2).unwrap();
        validate_weight(&b.graph).unwrap();
        assert_eq!(*b.graph.delta(), QScalar::from_int(4));
        for e in b.graph.edges() {
            assert_eq!(*b.graph.mu_plus(e), QScalar::from_int(2));
        }
    }

    #[test]
    fn multi_edge_with_symmetry_validates() {
        let b = multi_edge_with_sn(4).unwrap();
        validate_weight(&b.graph).unwrap();
        validate_action(&b.graph, &b.oracle).unwrap();
    }

    #[test]
    fn builder_outputs_serialize_with_group() {
        let b = diagonal_z2();
        let f = to_graph_file(&b);
        assert!(f.group.is_some());
        let text = serde_json::to_string(&f).unwrap();
        let parsed = crate::graph::GraphFile::parse(&text).unwrap();
        let g = parsed.to_graph().unwrap();
        let oracle = oracle_from_file(&g, &parsed).unwrap();
        validate_action(&g, &oracle).unwrap();
    }
}
