//! Co-conflict graph and community detection.
//!
//! Two subreddits are linked when the sets of controversial authors holding
//! an anti-social home in each overlap in at least `min_common` authors; the
//! edge weight is the Jaccard coefficient of those sets. Communities come
//! from weighted Louvain (modularity maximization with deterministic, seeded
//! node visiting), scored by the boundary-edge fraction (mu) and the mean
//! local clustering coefficient.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::profiles::ControversialAuthor;

#[derive(Debug, Clone, PartialEq)]
pub struct CoConflictEdge {
    /// Endpoint names with `a < b`.
    pub a: String,
    pub b: String,
    /// Jaccard coefficient of the two anti-social author sets.
    pub weight: f64,
    pub common_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoConflictGraph {
    /// All conflict-graph nodes, sorted; isolated nodes are kept.
    pub nodes: Vec<String>,
    /// Sorted by (a, b).
    pub edges: Vec<CoConflictEdge>,
}

impl CoConflictGraph {
    pub fn from_parts(mut nodes: Vec<String>, mut edges: Vec<CoConflictEdge>) -> Self {
        nodes.sort();
        nodes.dedup();
        edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        CoConflictGraph { nodes, edges }
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect()
    }

    /// Neighbor sets by node index.
    fn adjacency_sets(&self) -> Vec<BTreeSet<usize>> {
        let idx = self.index();
        let mut adj = vec![BTreeSet::new(); self.nodes.len()];
        for e in &self.edges {
            let (a, b) = (idx[e.a.as_str()], idx[e.b.as_str()]);
            adj[a].insert(b);
            adj[b].insert(a);
        }
        adj
    }
}

pub fn jaccard(x: &BTreeSet<String>, y: &BTreeSet<String>) -> f64 {
    let common = x.intersection(y).count();
    let union = x.len() + y.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Build the co-conflict graph over the conflict graph's node set.
pub fn build_coconflict(
    controversial: &[ControversialAuthor],
    conflict_nodes: &BTreeSet<String>,
    min_common: u64,
) -> CoConflictGraph {
    // Anti-social author sets per conflict-graph node.
    let mut anti_sets: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for author in controversial {
        for sub in &author.antisocial_homes {
            if conflict_nodes.contains(sub) {
                anti_sets
                    .entry(sub.as_str())
                    .or_default()
                    .insert(author.author.as_str());
            }
        }
    }

    // Count common authors per pair by walking each author's targets, so
    // only pairs with overlap are ever touched.
    let mut common: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for author in controversial {
        let targets: Vec<&str> = author
            .antisocial_homes
            .iter()
            .map(String::as_str)
            .filter(|s| conflict_nodes.contains(*s))
            .collect();
        for i in 0..targets.len() {
            for j in (i + 1)..targets.len() {
                *common.entry((targets[i], targets[j])).or_insert(0) += 1;
            }
        }
    }

    let edges = common
        .into_iter()
        .filter(|&(_, c)| c >= min_common)
        .map(|((a, b), c)| {
            let union = anti_sets[a].len() + anti_sets[b].len() - c as usize;
            CoConflictEdge {
                a: a.to_string(),
                b: b.to_string(),
                weight: c as f64 / union as f64,
                common_count: c,
            }
        })
        .collect();

    CoConflictGraph::from_parts(conflict_nodes.iter().cloned().collect(), edges)
}

/// Largest connected component; among equal sizes, the one containing the
/// lexicographically smallest node. Nodes are already name-sorted, so the
/// first-seen component of maximal size is the right pick.
pub fn giant_component(graph: &CoConflictGraph) -> CoConflictGraph {
    if graph.nodes.is_empty() {
        return CoConflictGraph::default();
    }
    let adj = graph.adjacency_sets();
    let n = graph.nodes.len();
    let mut component = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut queue = vec![start];
        component[start] = id;
        let mut size = 0usize;
        while let Some(u) = queue.pop() {
            size += 1;
            for &v in &adj[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    queue.push(v);
                }
            }
        }
        sizes.push(size);
    }
    let best = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap();
    let keep: BTreeSet<&str> = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| component[*i] == best)
        .map(|(_, n)| n.as_str())
        .collect();
    CoConflictGraph::from_parts(
        keep.iter().map(|s| s.to_string()).collect(),
        graph
            .edges
            .iter()
            .filter(|e| keep.contains(e.a.as_str()))
            .cloned()
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Weighted Louvain
// ---------------------------------------------------------------------------

/// Internal weighted graph for the aggregation levels.
struct LouvainState {
    /// adj[u][v] = weight, symmetric, no self entries.
    adj: Vec<BTreeMap<usize, f64>>,
    /// Self-loop weight accumulated by aggregation.
    self_w: Vec<f64>,
    /// Weighted degree: neighbor weights plus twice the self-loop.
    degree: Vec<f64>,
    /// Original node ids contained in each supernode.
    members: Vec<Vec<usize>>,
    /// Sum of all degrees (2m).
    two_m: f64,
}

impl LouvainState {
    fn from_graph(graph: &CoConflictGraph) -> Self {
        let idx = graph.index();
        let n = graph.nodes.len();
        let mut adj = vec![BTreeMap::new(); n];
        for e in &graph.edges {
            let (a, b) = (idx[e.a.as_str()], idx[e.b.as_str()]);
            *adj[a].entry(b).or_insert(0.0) += e.weight;
            *adj[b].entry(a).or_insert(0.0) += e.weight;
        }
        let self_w = vec![0.0; n];
        let degree: Vec<f64> = adj
            .iter()
            .map(|m| m.values().sum::<f64>())
            .collect();
        let two_m = degree.iter().sum();
        LouvainState {
            adj,
            self_w,
            degree,
            members: (0..n).map(|i| vec![i]).collect(),
            two_m,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Q = sum_c [2 W_in(c)/2m - gamma (K_c/2m)^2] where W_in counts each
    /// internal edge once plus self-loops.
    ///
    /// Accumulation and summation run in a canonical order (nodes ascending,
    /// then communities by smallest member), so two labelings of the same
    /// partition produce bit-identical values.
    fn modularity(&self, node_to_comm: &[usize], gamma: f64) -> f64 {
        if self.two_m == 0.0 {
            return 0.0;
        }
        // (w_in, k_tot, smallest member) per community label.
        let mut acc: HashMap<usize, (f64, f64, usize)> = HashMap::new();
        for u in 0..self.len() {
            let c = node_to_comm[u];
            let entry = acc.entry(c).or_insert((0.0, 0.0, u));
            entry.0 += self.self_w[u];
            entry.1 += self.degree[u];
            entry.2 = entry.2.min(u);
            for (&v, &w) in &self.adj[u] {
                if node_to_comm[v] == c && u < v {
                    entry.0 += w;
                }
            }
        }
        let mut rows: Vec<(usize, f64, f64)> =
            acc.into_values().map(|(w_in, k, min)| (min, w_in, k)).collect();
        rows.sort_unstable_by_key(|r| r.0);
        rows.into_iter()
            .map(|(_, w_in, k)| 2.0 * w_in / self.two_m - gamma * (k / self.two_m).powi(2))
            .sum()
    }

    /// One local-move phase; mutates the assignment until no single move
    /// improves modularity. Returns whether anything moved.
    fn local_move(&self, node_to_comm: &mut [usize], gamma: f64, rng: &mut ChaCha8Rng) -> bool {
        let n = self.len();
        let mut comm_tot = vec![0.0; n];
        for u in 0..n {
            comm_tot[node_to_comm[u]] += self.degree[u];
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut moved_any = false;
        loop {
            let mut moves = 0usize;
            for &u in &order {
                let cur = node_to_comm[u];
                let k_u = self.degree[u];
                comm_tot[cur] -= k_u;

                // Weights from u to each neighboring community, in id order
                // so gain ties resolve to the smallest community id.
                let mut wmap: BTreeMap<usize, f64> = BTreeMap::new();
                for (&v, &w) in &self.adj[u] {
                    *wmap.entry(node_to_comm[v]).or_insert(0.0) += w;
                }
                let w_cur = wmap.get(&cur).copied().unwrap_or(0.0);

                let mut best = cur;
                let mut best_gain = 0.0;
                for (&c, &w_uc) in &wmap {
                    if c == cur {
                        continue;
                    }
                    let gain = 2.0 * (w_uc - w_cur) / self.two_m
                        - 2.0 * gamma * k_u * (comm_tot[c] - comm_tot[cur])
                            / (self.two_m * self.two_m);
                    if gain > best_gain {
                        best_gain = gain;
                        best = c;
                    }
                }

                comm_tot[best] += k_u;
                if best != cur {
                    node_to_comm[u] = best;
                    moves += 1;
                    moved_any = true;
                }
            }
            if moves == 0 {
                break;
            }
        }
        moved_any
    }

    /// Collapse communities into supernodes.
    fn aggregate(&self, node_to_comm: &[usize]) -> LouvainState {
        let mut ids: Vec<usize> = node_to_comm.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let remap: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let m = ids.len();

        let mut adj = vec![BTreeMap::new(); m];
        let mut self_w = vec![0.0; m];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
        for u in 0..self.len() {
            let cu = remap[&node_to_comm[u]];
            members[cu].extend(self.members[u].iter().copied());
            self_w[cu] += self.self_w[u];
            for (&v, &w) in &self.adj[u] {
                let cv = remap[&node_to_comm[v]];
                if cu == cv {
                    if u < v {
                        self_w[cu] += w;
                    }
                } else {
                    *adj[cu].entry(cv).or_insert(0.0) += w;
                }
            }
        }
        for list in &mut members {
            list.sort_unstable();
        }
        let degree: Vec<f64> = (0..m)
            .map(|c| adj[c].values().sum::<f64>() + 2.0 * self_w[c])
            .collect();
        LouvainState {
            adj,
            self_w,
            degree,
            members,
            two_m: self.two_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityPartition {
    /// Node -> community id. Ids are contiguous from 0, ordered by each
    /// community's lexicographically smallest member.
    pub assignment: BTreeMap<String, usize>,
    pub communities: Vec<BTreeSet<String>>,
    pub modularity: f64,
    /// Boundary-edge fraction per community.
    pub mu_scores: Vec<f64>,
    /// Mean local clustering coefficient per community.
    pub clustering: Vec<f64>,
}

/// Weighted Louvain: local moves to convergence, then graph aggregation,
/// repeated while a level improves modularity by more than `epsilon`.
/// Identical seeds produce identical partitions.
pub fn louvain(graph: &CoConflictGraph, seed: u64, gamma: f64, epsilon: f64) -> CommunityPartition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = LouvainState::from_graph(graph);
    let mut node_to_comm: Vec<usize> = (0..state.len()).collect();
    let mut best: Vec<Vec<usize>> = state.members.clone();
    let mut q_current = state.modularity(&node_to_comm, gamma);

    loop {
        let moved = state.local_move(&mut node_to_comm, gamma, &mut rng);
        if !moved {
            break;
        }
        let q_new = state.modularity(&node_to_comm, gamma);
        debug_assert!(q_new >= q_current - 1e-12, "local move decreased modularity");

        // Communities of original node ids at this level.
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (u, &c) in node_to_comm.iter().enumerate() {
            groups.entry(c).or_default().extend(state.members[u].iter().copied());
        }
        best = groups.into_values().collect();

        if q_new - q_current <= epsilon {
            break;
        }
        q_current = q_new;
        state = state.aggregate(&node_to_comm);
        node_to_comm = (0..state.len()).collect();
    }

    partition_from_groups(graph, best, gamma)
}

fn partition_from_groups(
    graph: &CoConflictGraph,
    groups: Vec<Vec<usize>>,
    gamma: f64,
) -> CommunityPartition {
    let mut communities: Vec<BTreeSet<String>> = groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| graph.nodes[i].clone()).collect())
        .collect();
    communities.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));

    let mut assignment = BTreeMap::new();
    for (id, community) in communities.iter().enumerate() {
        for node in community {
            assignment.insert(node.clone(), id);
        }
    }
    let q = modularity(graph, &communities, gamma);
    let mu_scores = communities.iter().map(|c| mu_score(c, graph)).collect();
    let clustering = communities
        .iter()
        .map(|c| clustering_coefficient(c, graph))
        .collect();
    CommunityPartition {
        assignment,
        communities,
        modularity: q,
        mu_scores,
        clustering,
    }
}

/// Weighted modularity of an explicit partition.
pub fn modularity(graph: &CoConflictGraph, communities: &[BTreeSet<String>], gamma: f64) -> f64 {
    let state = LouvainState::from_graph(graph);
    let idx = graph.index();
    let mut node_to_comm = vec![usize::MAX; graph.nodes.len()];
    for (c, community) in communities.iter().enumerate() {
        for node in community {
            let i = idx[node.as_str()];
            assert_eq!(node_to_comm[i], usize::MAX, "node in two communities");
            node_to_comm[i] = c;
        }
    }
    assert!(
        node_to_comm.iter().all(|&c| c != usize::MAX),
        "partition does not cover the graph"
    );
    state.modularity(&node_to_comm, gamma)
}

/// Fraction of the community's incident edges that cross its boundary
/// (unweighted).
pub fn mu_score(community: &BTreeSet<String>, graph: &CoConflictGraph) -> f64 {
    let mut incident = 0u64;
    let mut boundary = 0u64;
    for e in &graph.edges {
        let a_in = community.contains(&e.a);
        let b_in = community.contains(&e.b);
        if a_in || b_in {
            incident += 1;
            if a_in != b_in {
                boundary += 1;
            }
        }
    }
    if incident == 0 {
        log::warn!("community has no incident edges; mu-score reported as 0");
        return 0.0;
    }
    boundary as f64 / incident as f64
}

/// Mean local clustering coefficient over community members, neighborhoods
/// taken in the full graph; degree < 2 contributes 0.
pub fn clustering_coefficient(community: &BTreeSet<String>, graph: &CoConflictGraph) -> f64 {
    if community.is_empty() {
        return 0.0;
    }
    let idx = graph.index();
    let adj = graph.adjacency_sets();
    let mut sum = 0.0;
    for node in community {
        let Some(&u) = idx.get(node.as_str()) else {
            continue;
        };
        let neighbors: Vec<usize> = adj[u].iter().copied().collect();
        let d = neighbors.len();
        if d < 2 {
            continue;
        }
        let mut linked = 0u64;
        for i in 0..d {
            for j in (i + 1)..d {
                if adj[neighbors[i]].contains(&neighbors[j]) {
                    linked += 1;
                }
            }
        }
        sum += linked as f64 / (d * (d - 1) / 2) as f64;
    }
    sum / community.len() as f64
}
