//! Sparse-instance pipeline: BFS layering, tree decompositions, recursive
//! bag separators and exact solves on the resulting clusters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exact_free_energy, exact_ground, gibbs_state, reduced_density};
use crate::hamiltonian::{permute_factors, LocalHamiltonian};
use crate::linalg::kron_all;
use crate::rng::rng_from_seed;
use crate::state::DenseState;
use crate::threshold::WeightedGraph;

/// Largest cluster Hilbert dimension for ground-state solves.
pub const GS_CLUSTER_DIM: usize = 1 << 14;
/// Largest cluster Hilbert dimension for Gibbs-state solves.
pub const FE_CLUSTER_DIM: usize = 1 << 12;
/// Removed vertices are at most `SEPARATOR_CONST · (width + 1) · n / r`.
pub const SEPARATOR_CONST: f64 = 4.0;

/// Simple undirected graph with non-negative edge weights.
#[derive(Clone, Debug, Serialize)]
pub struct SparseGraph {
    pub n: usize,
    /// Sorted neighbour lists.
    pub adj: Vec<Vec<usize>>,
    /// Weight per edge `(u, v)` with `u < v`.
    pub weights: BTreeMap<(usize, usize), f64>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl SparseGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            if u != v {
                *weights.entry(key(u, v)).or_insert(0.0) += w.abs();
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in weights.keys() {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj.iter_mut().for_each(|a| a.sort_unstable());
        Ok(SparseGraph { n, adj, weights })
    }

    /// Interaction graph: each term adds its norm to every pair in its
    /// support.
    pub fn from_hamiltonian(h: &LocalHamiltonian) -> Self {
        let mut edges = Vec::new();
        for (t, &w) in h.terms().iter().zip(h.term_norms()) {
            for (i, &u) in t.support.iter().enumerate() {
                for &v in &t.support[i + 1..] {
                    edges.push((u, v, w));
                }
            }
        }
        Self::from_edges(h.n(), &edges).expect("supports are in range")
    }

    pub fn from_weighted(g: &WeightedGraph) -> Result<Self> {
        Self::from_edges(g.n, &g.edges)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.weights.keys().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.weights.len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn without_edges(&self, removed: &BTreeSet<(usize, usize)>) -> Self {
        let edges: Vec<_> = self
            .weights
            .iter()
            .filter(|(e, _)| !removed.contains(e))
            .map(|(&(u, v), &w)| (u, v, w))
            .collect();
        Self::from_edges(self.n, &edges).expect("subgraph of a valid graph")
    }

    /// Connected components of the subgraph induced on `alive`, each sorted,
    /// ordered by smallest vertex.
    pub fn components_within(&self, alive: &[bool]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if !alive[s] || seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if alive[v] && !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        self.components_within(&vec![true; self.n])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BakerLayering {
    pub kparam: usize,
    /// BFS root per component.
    pub roots: Vec<usize>,
    /// BFS depth of each vertex within its component.
    pub layer: Vec<usize>,
    /// Chosen offset per component.
    pub offsets: Vec<usize>,
    pub removed_edges: Vec<(usize, usize)>,
    pub removed_weight: f64,
    pub total_weight: f64,
    /// Components after removal.
    pub components: Vec<Vec<usize>>,
}

/// Deletes the edges between layers `j` and `j + 1` for `j ≡ offset`
/// (mod `kparam + 1`), per component, with the lightest offset.
pub fn baker_layering(g: &SparseGraph, kparam: usize, seed: u64) -> Result<BakerLayering> {
    let period = kparam + 1;
    let mut rng = rng_from_seed(seed);
    let mut layer = vec![0usize; g.n];
    let (mut roots, mut offsets, mut removed) = (Vec::new(), Vec::new(), Vec::new());
    for comp in g.components() {
        let root = comp[rng.random_range(0..comp.len())];
        roots.push(root);
        let mut seen = BTreeSet::from([root]);
        let mut queue = VecDeque::from([root]);
        layer[root] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &g.adj[u] {
                if seen.insert(v) {
                    layer[v] = layer[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut by_offset = vec![(0.0f64, Vec::new()); period];
        for &u in &comp {
            for &v in &g.adj[u] {
                if u < v && layer[u] != layer[v] {
                    let j = layer[u].min(layer[v]);
                    let slot = &mut by_offset[j % period];
                    slot.0 += g.weights[&(u, v)];
                    slot.1.push((u, v));
                }
            }
        }
        let best = (0..period)
            .min_by(|&a, &b| by_offset[a].0.total_cmp(&by_offset[b].0).then(a.cmp(&b)))
            .expect("period is positive");
        offsets.push(best);
        removed.append(&mut by_offset[best].1);
    }
    removed.sort_unstable();
    let removed_weight: f64 = removed.iter().map(|e| g.weights[e]).sum();
    let total_weight: f64 = g.weights.values().sum();
    if removed_weight > total_weight / period as f64 + 1e-12 * total_weight {
        return Err(Error::Internal(format!(
            "layering removed weight {removed_weight} above the averaging bound {}",
            total_weight / period as f64
        )));
    }
    let components = g.without_edges(&removed.iter().copied().collect()).components();
    Ok(BakerLayering {
        kparam,
        roots,
        layer,
        offsets,
        removed_edges: removed,
        removed_weight,
        total_weight,
        components,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    /// Tree edges between bag indices.
    pub tree: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn width(&self) -> isize {
        self.bags.iter().map(|b| b.len() as isize).max().unwrap_or(0) - 1
    }
}

/// Min-fill elimination (ties: fewer neighbours, then lower index).
pub fn tree_decompose_heuristic(g: &SparseGraph) -> TreeDecomposition {
    let n = g.n;
    let mut nbrs: Vec<BTreeSet<usize>> = g.adj.iter().map(|a| a.iter().copied().collect()).collect();
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut bags = Vec::with_capacity(n);
    let fill = |nb: &BTreeSet<usize>, nbrs: &[BTreeSet<usize>]| -> usize {
        let v: Vec<usize> = nb.iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in v.iter().enumerate() {
            for &b in &v[i + 1..] {
                if !nbrs[a].contains(&b) {
                    missing += 1;
                }
            }
        }
        missing
    };
    for _ in 0..n {
        let v = (0..n)
            .filter(|&u| !eliminated[u])
            .min_by_key(|&u| (fill(&nbrs[u], &nbrs), nbrs[u].len(), u))
            .expect("a vertex remains");
        let nb: Vec<usize> = nbrs[v].iter().copied().collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                nbrs[a].insert(b);
                nbrs[b].insert(a);
            }
        }
        for &a in &nb {
            nbrs[a].remove(&v);
        }
        eliminated[v] = true;
        bags.push((v, nb));
        order.push(v);
    }
    let mut position = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    // parent of bag i: the bag of its earliest-eliminated remaining neighbour
    let mut tree = Vec::new();
    let mut roots = Vec::new();
    for (i, (_, nb)) in bags.iter().enumerate() {
        match nb.iter().map(|&u| position[u]).min() {
            Some(p) => tree.push((i, p)),
            None => roots.push(i),
        }
    }
    for w in roots.windows(2) {
        tree.push((w[0], w[1]));
    }
    let bags = bags
        .into_iter()
        .map(|(v, mut nb)| {
            nb.push(v);
            nb.sort_unstable();
            nb
        })
        .collect();
    TreeDecomposition { bags, tree }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TdViolation {
    NotATree { bags: usize, edges: usize },
    BagVertexOutOfRange { bag: usize, vertex: usize },
    UncoveredVertex { vertex: usize },
    UncoveredEdge { u: usize, v: usize },
    DisconnectedOccurrences { vertex: usize },
}

fn is_tree(nodes: usize, edges: &[(usize, usize)]) -> bool {
    if nodes == 0 {
        return edges.is_empty();
    }
    if edges.len() != nodes - 1 {
        return false;
    }
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let nx = p[x];
            p[x] = r;
            x = nx;
        }
        r
    }
    for &(a, b) in edges {
        if a >= nodes || b >= nodes {
            return false;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Every violated property, each with a witness.
pub fn validate_tree_decomposition(g: &SparseGraph, td: &TreeDecomposition) -> Vec<TdViolation> {
    let mut out = Vec::new();
    let nb = td.bags.len();
    if !is_tree(nb, &td.tree) {
        out.push(TdViolation::NotATree { bags: nb, edges: td.tree.len() });
    }
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); g.n];
    for (i, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if v >= g.n {
                out.push(TdViolation::BagVertexOutOfRange { bag: i, vertex: v });
            } else {
                holders[v].push(i);
            }
        }
    }
    for (v, h) in holders.iter().enumerate() {
        if h.is_empty() {
            out.push(TdViolation::UncoveredVertex { vertex: v });
        }
    }
    for (u, v) in g.edges() {
        if !holders[u].iter().any(|&i| td.bags[i].contains(&v)) {
            out.push(TdViolation::UncoveredEdge { u, v });
        }
    }
    let mut tree_adj = vec![Vec::new(); nb];
    for &(a, b) in &td.tree {
        if a < nb && b < nb {
            tree_adj[a].push(b);
            tree_adj[b].push(a);
        }
    }
    for (v, h) in holders.iter().enumerate() {
        let Some(&start) = h.first() else { continue };
        let member: BTreeSet<usize> = h.iter().copied().collect();
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in &tree_adj[i] {
                if member.contains(&j) && seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        if seen.len() != member.len() {
            out.push(TdViolation::DisconnectedOccurrences { vertex: v });
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterPartition {
    pub n: usize,
    pub removed_edges: Vec<(usize, usize)>,
    pub removed_vertices: Vec<usize>,
    /// Components of the graph minus removed edges and vertices.
    pub clusters: Vec<Vec<usize>>,
    pub max_cluster: usize,
    pub width: isize,
    /// `SEPARATOR_CONST · (width + 1) · n / r`.
    pub separator_bound: f64,
}

impl ClusterPartition {
    /// Clusters plus one singleton per removed vertex.
    pub fn solve_units(&self) -> Vec<Vec<usize>> {
        let mut units = self.clusters.clone();
        units.extend(self.removed_vertices.iter().map(|&v| vec![v]));
        units.sort();
        units
    }

    /// Partition with every component of `g` as a cluster.
    pub fn trivial(g: &SparseGraph) -> Self {
        let clusters = g.components();
        ClusterPartition {
            n: g.n,
            removed_edges: Vec::new(),
            removed_vertices: Vec::new(),
            max_cluster: clusters.iter().map(Vec::len).max().unwrap_or(0),
            clusters,
            width: -1,
            separator_bound: 0.0,
        }
    }
}

fn largest_component(g: &SparseGraph, alive: &[bool]) -> usize {
    g.components_within(alive).iter().map(Vec::len).max().unwrap_or(0)
}

/// Removes balanced bag separators until every component has at most `r`
/// vertices. Each separator is pruned back to the vertices it needs.
pub fn recursive_separators(g: &SparseGraph, td: &TreeDecomposition, r: usize) -> Result<ClusterPartition> {
    let violations = validate_tree_decomposition(g, td);
    if !violations.is_empty() {
        return Err(Error::InvalidInput(format!("invalid tree decomposition: {violations:?}")));
    }
    let width = td.width();
    if (r as isize) < width + 1 {
        return Err(Error::Parameter(format!("cluster size {r} is below the bag size {}", width + 1)));
    }
    let mut alive = vec![true; g.n];
    let mut removed = Vec::new();
    let mut work = g.components();
    while let Some(comp) = work.pop() {
        if comp.len() <= r {
            continue;
        }
        let in_comp: BTreeSet<usize> = comp.iter().copied().collect();
        let mut local = vec![false; g.n];
        comp.iter().for_each(|&u| local[u] = true);
        let target = r.max(comp.len() / 2);
        let mut best: Option<(usize, usize, Vec<usize>)> = None;
        for bag in &td.bags {
            let sep: Vec<usize> = bag.iter().copied().filter(|u| in_comp.contains(u)).collect();
            if sep.is_empty() {
                continue;
            }
            let mut trial = local.clone();
            sep.iter().for_each(|&u| trial[u] = false);
            let worst = largest_component(g, &trial);
            let cand = (worst, sep.len(), sep);
            if best.as_ref().is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                best = Some(cand);
            }
        }
        let (_, _, mut sep) = best.ok_or_else(|| Error::Internal("component meets no bag".into()))?;
        let mut i = 0;
        while i < sep.len() && sep.len() > 1 {
            let mut trial = local.clone();
            sep.iter().enumerate().filter(|&(j, _)| j != i).for_each(|(_, &u)| trial[u] = false);
            if largest_component(g, &trial) <= target {
                sep.remove(i);
            } else {
                i += 1;
            }
        }
        for &u in &sep {
            alive[u] = false;
            local[u] = false;
            removed.push(u);
        }
        work.extend(g.components_within(&local));
    }
    removed.sort_unstable();
    let clusters = g.components_within(&alive);
    let separator_bound = SEPARATOR_CONST * (width + 1) as f64 * g.n as f64 / r as f64;
    if removed.len() as f64 > separator_bound {
        return Err(Error::Internal(format!(
            "separators removed {} vertices, above the bound {separator_bound}",
            removed.len()
        )));
    }
    Ok(ClusterPartition {
        n: g.n,
        removed_edges: Vec::new(),
        removed_vertices: removed,
        max_cluster: clusters.iter().map(Vec::len).max().unwrap_or(0),
        clusters,
        width,
        separator_bound,
    })
}

/// Layering followed by separators on the layered graph.
pub fn partition_pipeline(g: &SparseGraph, kparam: usize, r: usize, seed: u64) -> Result<(BakerLayering, TreeDecomposition, ClusterPartition)> {
    let layering = baker_layering(g, kparam, seed)?;
    let pruned = g.without_edges(&layering.removed_edges.iter().copied().collect());
    let td = tree_decompose_heuristic(&pruned);
    let mut part = recursive_separators(&pruned, &td, r)?;
    part.removed_edges = layering.removed_edges.clone();
    Ok((layering, td, part))
}

/// `H′`: the terms inside a single solve unit.
pub fn clustered_hamiltonian(h: &LocalHamiltonian, part: &ClusterPartition) -> (LocalHamiltonian, LocalHamiltonian) {
    let mut unit_of = vec![usize::MAX; h.n()];
    for (i, c) in part.solve_units().iter().enumerate() {
        c.iter().for_each(|&u| unit_of[u] = i);
    }
    let inside = |t: &crate::hamiltonian::LocalTerm| t.support.iter().all(|&u| unit_of[u] == unit_of[t.support[0]]);
    (h.filter_terms(|_, t| inside(t)), h.filter_terms(|_, t| !inside(t)))
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusteredState {
    pub clusters: Vec<Vec<usize>>,
    #[serde(skip)]
    pub states: Vec<DenseState>,
}

impl ClusteredState {
    /// `Tr[H σ]`, term by term from cluster marginals.
    pub fn energy(&self, h: &LocalHamiltonian) -> Result<f64> {
        let d = h.d();
        let mut unit_of = vec![(usize::MAX, 0); h.n()];
        for (i, c) in self.clusters.iter().enumerate() {
            for (j, &u) in c.iter().enumerate() {
                unit_of[u] = (i, j);
            }
        }
        let mut total = 0.0;
        for t in h.terms() {
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for &u in &t.support {
                let (c, j) = unit_of[u];
                if c == usize::MAX {
                    return Err(Error::InvalidInput(format!("site {u} belongs to no cluster")));
                }
                match groups.iter_mut().find(|g| g.0 == c) {
                    Some(g) => g.1.push(j),
                    None => groups.push((c, vec![j])),
                }
            }
            let blocks: Vec<_> = groups
                .iter()
                .map(|(c, sites)| reduced_density(&self.states[*c], self.clusters[*c].len(), d, sites))
                .collect();
            let grouped: Vec<usize> = groups.iter().flat_map(|(c, sites)| sites.iter().map(move |&j| self.clusters[*c][j])).collect();
            let perm: Vec<usize> = t
                .support
                .iter()
                .map(|u| grouped.iter().position(|x| x == u).expect("site is grouped"))
                .collect();
            let rho = permute_factors(&kron_all(&blocks), d, &perm);
            total += (&t.matrix * rho).trace().re;
        }
        Ok(total)
    }

    pub fn entropy(&self) -> f64 {
        self.states.iter().map(DenseState::entropy).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseCheck {
    /// `λ_min(H)` or `F(H)`.
    pub full: f64,
    /// `|full − (value for H′)|`, at most `budget` by Weyl.
    pub shift: f64,
    pub weyl_holds: bool,
    /// `value(σ) ≤ full + 2 · budget` (and `≥ full` for free energies).
    pub sandwich_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterSolution {
    /// Exact value for `H′` (ground energy or free energy).
    pub clustered_value: f64,
    /// `Tr[Hσ]` (ground) or `Tr[Hσ] − S(σ)/β` (free energy).
    pub value: f64,
    pub beta: Option<f64>,
    /// `Σ ‖h_e‖_∞` over dropped terms.
    pub budget: f64,
    pub dropped_terms: usize,
    pub cluster_values: Vec<f64>,
    pub state: ClusteredState,
    pub check: Option<SparseCheck>,
}

fn check_units(h: &LocalHamiltonian, units: &[Vec<usize>], cap: usize) -> Result<()> {
    for c in units {
        let dim = (h.d() as f64).powi(c.len() as i32);
        if dim > cap as f64 {
            return Err(Error::size(format!("cluster {c:?}"), dim as usize, cap));
        }
    }
    Ok(())
}

/// Largest instance checked against the full dense solve.
pub const CHECK_MAX_DIM: usize = 1 << 12;

fn solve(h: &LocalHamiltonian, part: &ClusterPartition, beta: Option<f64>) -> Result<ClusterSolution> {
    let units = part.solve_units();
    check_units(h, &units, if beta.is_some() { FE_CLUSTER_DIM } else { GS_CLUSTER_DIM })?;
    let (kept, dropped) = clustered_hamiltonian(h, part);
    let budget: f64 = dropped.term_norms().iter().sum();
    let solved: Vec<(f64, DenseState)> = units
        .par_iter()
        .map(|c| {
            let hc = kept.induced(c);
            match beta {
                None => exact_ground(&hc),
                Some(b) => gibbs_state(&hc, b),
            }
        })
        .collect::<Result<_>>()?;
    let cluster_values: Vec<f64> = solved.iter().map(|s| s.0).collect();
    let clustered_value: f64 = cluster_values.iter().sum();
    let state = ClusteredState {
        clusters: units,
        states: solved.into_iter().map(|s| s.1).collect(),
    };
    let energy = state.energy(h)?;
    let value = match beta {
        None => energy,
        Some(b) => energy - state.entropy() / b,
    };
    let small = (h.d() as f64).powi(h.n() as i32) <= CHECK_MAX_DIM as f64;
    let check = if small {
        let full = match beta {
            None => exact_ground(h)?.0,
            Some(b) => exact_free_energy(h, b)?,
        };
        let shift = (full - clustered_value).abs();
        let tol = 1e-9 * (1.0 + full.abs());
        let lower_ok = beta.is_none() || value >= full - tol;
        Some(SparseCheck {
            full,
            shift,
            weyl_holds: shift <= budget + tol,
            sandwich_holds: lower_ok && value <= full + 2.0 * budget + tol,
        })
    } else {
        None
    };
    Ok(ClusterSolution {
        clustered_value,
        value,
        beta,
        budget,
        dropped_terms: dropped.num_terms(),
        cluster_values,
        state,
        check,
    })
}

/// Exact ground states of the clusters of `H′`.
pub fn cluster_gs(h: &LocalHamiltonian, part: &ClusterPartition) -> Result<ClusterSolution> {
    solve(h, part, None)
}

/// Exact Gibbs states of the clusters of `H′`; removed vertices without
/// terms are free spins.
pub fn cluster_fe(h: &LocalHamiltonian, part: &ClusterPartition, beta: f64) -> Result<ClusterSolution> {
    solve(h, part, Some(beta))
}

/// Layering parameter and cluster size; unset fields follow from `eps`.
#[derive(Clone, Debug, Default)]
pub struct SparseOptions {
    pub kparam: Option<usize>,
    pub r: Option<usize>,
    /// Graph to partition instead of the interaction graph.
    pub graph: Option<SparseGraph>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseReport {
    pub eps: f64,
    pub kparam: usize,
    pub r: usize,
    /// `r` was lowered to the largest size the cluster solver accepts.
    pub r_capped: bool,
    /// `√(Δ / r)` for maximum degree `Δ`.
    pub implied_eps: f64,
    pub max_degree: usize,
    pub layering: BakerLayering,
    pub width: isize,
    pub partition: ClusterPartition,
    pub solution: ClusterSolution,
    pub seed: u64,
}

/// Layering, separators and cluster solves for a ground energy (`beta`
/// unset) or free energy.
pub fn sparse_solve(h: &LocalHamiltonian, eps: f64, beta: Option<f64>, seed: u64, opts: &SparseOptions) -> Result<SparseReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let g = match &opts.graph {
        Some(g) if g.n != h.n() => {
            return Err(Error::DimensionMismatch(format!("graph has {} vertices, instance has {}", g.n, h.n())));
        }
        Some(g) => g.clone(),
        None => SparseGraph::from_hamiltonian(h),
    };
    let max_degree = g.max_degree();
    let kparam = opts.kparam.unwrap_or(((1.0 / eps).ceil() as usize).saturating_sub(1).max(1));
    let cap_dim = if beta.is_some() { FE_CLUSTER_DIM } else { GS_CLUSTER_DIM };
    let cap = ((cap_dim as f64).ln() / (h.d() as f64).ln()).floor() as usize;
    let wanted = opts.r.unwrap_or_else(|| ((max_degree.max(1) as f64) / (eps * eps)).ceil() as usize);
    let r = wanted.min(cap).max(1);
    let (layering, td, partition) = partition_pipeline(&g, kparam, r, seed)?;
    let solution = solve(h, &partition, beta)?;
    Ok(SparseReport {
        eps,
        kparam,
        r,
        r_capped: r < wanted,
        implied_eps: (max_degree as f64 / r as f64).sqrt(),
        max_degree,
        layering,
        width: td.width(),
        partition,
        solution,
        seed,
    })
}
