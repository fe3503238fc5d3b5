//! Hop counting over a realized network.
//!
//! Anchor beacons are flooded centrally with a breadth-first search capped
//! at `K` hops. The number of neighbour relaxations performed stands in for
//! the number of beacon messages a distributed distance-vector exchange
//! would send.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Hop count, or `None` when the node is disconnected or more than `K`
/// hops away.
pub type Hops = Option<u32>;

const UNREACHED: u32 = u32::MAX;

/// Undirected simple graph stored as adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
    edges: usize,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Adjacency {
            neighbors: vec![Vec::new(); n],
            edges: 0,
        }
    }

    /// Builds a graph from unordered pairs. Duplicate pairs collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = Adjacency::new(n);
        for &(u, v) in edges {
            adj.add_edge(u, v)?;
        }
        Ok(adj)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        let n = self.len();
        if u >= n || v >= n {
            return Err(invalid(format!("edge ({u}, {v}) out of range for {n} nodes")));
        }
        if u == v {
            return Err(invalid(format!("self-loop on node {u}")));
        }
        if self.neighbors[u].contains(&v) {
            return Ok(false);
        }
        self.push_edge_unchecked(u, v);
        Ok(true)
    }

    /// Adds `u – v` assuming `u != v`, both in range, and not yet linked.
    pub(crate) fn push_edge_unchecked(&mut self, u: usize, v: usize) {
        self.neighbors[u].push(v);
        self.neighbors[v].push(u);
        self.edges += 1;
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            2.0 * self.edges as f64 / self.len() as f64
        }
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || core::mem::replace(&mut seen[p], true)) {
            return Err(invalid("permutation does not match the graph"));
        }
        let mut out = Adjacency::new(n);
        for u in 0..n {
            for &v in &self.neighbors[u] {
                if u < v {
                    out.push_edge_unchecked(perm[u], perm[v]);
                }
            }
        }
        Ok(out)
    }
}

/// Number of one-hop neighbours of `node`.
pub fn one_hop_degree(adj: &Adjacency, node: usize) -> Result<usize> {
    if node >= adj.len() {
        return Err(invalid(format!("node {node} out of range for {} nodes", adj.len())));
    }
    Ok(adj.degree(node))
}

/// Capped BFS. Returns raw distances (`UNREACHED` beyond the cap) and the
/// number of neighbour relaxations.
fn bfs(adj: &Adjacency, source: usize, max_hops: u32, dist: &mut Vec<u32>) -> u64 {
    dist.clear();
    dist.resize(adj.len(), UNREACHED);
    dist[source] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(source);
    let mut relaxations = 0u64;
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if du >= max_hops {
            continue;
        }
        for &v in adj.neighbors(u) {
            relaxations += 1;
            if dist[v] == UNREACHED {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    relaxations
}

fn check_source(adj: &Adjacency, source: usize, max_hops: u32) -> Result<()> {
    if source >= adj.len() {
        return Err(invalid(format!("source {source} out of range for {} nodes", adj.len())));
    }
    if max_hops == 0 {
        return Err(invalid("max hop count K must be >= 1"));
    }
    Ok(())
}

/// Minimum hop counts from `source`, truncated at `max_hops`.
pub fn hop_counts_from(adj: &Adjacency, source: usize, max_hops: u32) -> Result<Vec<Hops>> {
    check_source(adj, source, max_hops)?;
    let mut dist = Vec::new();
    bfs(adj, source, max_hops, &mut dist);
    Ok(dist.into_iter().map(to_hops).collect())
}

fn to_hops(d: u32) -> Hops {
    (d != UNREACHED).then_some(d)
}

/// Per-anchor hop counts to every node, plus the flooding cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopTable {
    pub anchors: Vec<usize>,
    /// `hops[a][v]`: hops from anchor `anchors[a]` to node `v`.
    pub hops: Vec<Vec<Hops>>,
    pub max_hops: u32,
    /// Neighbour relaxations summed over all anchor floods.
    pub messages: u64,
}

impl HopTable {
    pub fn hop(&self, anchor_slot: usize, node: usize) -> Hops {
        self.hops[anchor_slot][node]
    }

    /// Anchor-to-anchor hop matrix, indexed by anchor slot.
    pub fn anchor_hops(&self) -> Vec<Vec<Hops>> {
        self.hops
            .iter()
            .map(|row| self.anchors.iter().map(|&b| row[b]).collect())
            .collect()
    }
}

/// One capped BFS per anchor.
pub fn build_hop_table(adj: &Adjacency, anchors: &[usize], max_hops: u32) -> Result<HopTable> {
    if anchors.is_empty() {
        return Err(invalid("at least one anchor is required"));
    }
    let mut hops = Vec::with_capacity(anchors.len());
    let mut messages = 0;
    let mut dist = Vec::new();
    for &a in anchors {
        check_source(adj, a, max_hops)?;
        messages += bfs(adj, a, max_hops, &mut dist);
        hops.push(dist.iter().copied().map(to_hops).collect());
    }
    Ok(HopTable {
        anchors: anchors.to_vec(),
        hops,
        max_hops,
        messages,
    })
}

/// Dense all-pairs hop counts, capped at `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMatrix {
    n: usize,
    max_hops: u32,
    dist: Vec<u32>,
}

impl HopMatrix {
    /// One capped BFS from every node.
    pub fn from_adjacency(adj: &Adjacency, max_hops: u32) -> Result<Self> {
        if max_hops == 0 {
            return Err(invalid("max hop count K must be >= 1"));
        }
        let n = adj.len();
        let mut dist = Vec::with_capacity(n * n);
        let mut row = Vec::new();
        for s in 0..n {
            bfs(adj, s, max_hops, &mut row);
            dist.extend_from_slice(&row);
        }
        Ok(HopMatrix { n, max_hops, dist })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn max_hops(&self) -> u32 {
        self.max_hops
    }

    pub fn get(&self, i: usize, j: usize) -> Hops {
        to_hops(self.dist[i * self.n + j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::{realize_links, ConnectionModel};
    use crate::geometry::Region;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    fn path4() -> Adjacency {
        Adjacency::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    fn complete(n: usize) -> Adjacency {
        let mut adj = Adjacency::new(n);
        for i in 0..n {
            for j in i + 1..n {
                adj.add_edge(i, j).unwrap();
            }
        }
        adj
    }

    /// Unit-weight Floyd–Warshall, capped at `k` afterwards.
    fn floyd_warshall(adj: &Adjacency, k: u32) -> Vec<Vec<Hops>> {
        let n = adj.len();
        let inf = u64::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for u in 0..n {
            d[u][u] = 0;
            for &v in adj.neighbors(u) {
                d[u][v] = 1;
            }
        }
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][m] + d[m][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d.into_iter()
            .map(|row| row.into_iter().map(|x| (x <= k as u64).then_some(x as u32)).collect())
            .collect()
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Adjacency {
        let mut rng = substream(seed, 0);
        let mut adj = Adjacency::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    adj.add_edge(i, j).unwrap();
                }
            }
        }
        adj
    }

    #[test]
    fn path_graph() {
        assert_eq!(
            hop_counts_from(&path4(), 0, 10).unwrap(),
            vec![Some(0), Some(1), Some(2), Some(3)]
        );
        assert_eq!(
            hop_counts_from(&path4(), 0, 2).unwrap(),
            vec![Some(0), Some(1), Some(2), None]
        );
    }

    #[test]
    fn bad_arguments() {
        assert!(hop_counts_from(&path4(), 4, 3).is_err());
        assert!(hop_counts_from(&path4(), 0, 0).is_err());
        assert!(build_hop_table(&path4(), &[], 3).is_err());
        assert!(Adjacency::from_edges(3, &[(0, 0)]).is_err());
        assert!(Adjacency::from_edges(3, &[(0, 3)]).is_err());
        assert!(one_hop_degree(&path4(), 9).is_err());
    }

    #[test]
    fn duplicate_edges_collapse() {
        let adj = Adjacency::from_edges(3, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(adj.edge_count(), 1);
        assert_eq!(adj.degree(0), 1);
    }

    #[test]
    fn bfs_matches_floyd_warshall_on_random_graph() {
        let adj = random_graph(30, 0.1, 1);
        let fw = floyd_warshall(&adj, 4);
        for s in 0..30 {
            assert_eq!(hop_counts_from(&adj, s, 4).unwrap(), fw[s]);
        }
        let m = HopMatrix::from_adjacency(&adj, 4).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                assert_eq!(m.get(i, j), fw[i][j]);
            }
        }
    }

    #[test]
    fn hop_table_rows() {
        let t = build_hop_table(&path4(), &[0], 10).unwrap();
        assert_eq!(t.hops[0], hop_counts_from(&path4(), 0, 10).unwrap());
        // each node relaxes every incident edge once: 1 + 2 + 2 + 1
        assert_eq!(t.messages, 6);

        let k5 = complete(5);
        let t = build_hop_table(&k5, &[0, 3], 20).unwrap();
        assert!(t.hops.iter().flatten().all(|h| matches!(h, Some(0) | Some(1))));
        assert_eq!(t.anchor_hops(), vec![vec![Some(0), Some(1)], vec![Some(1), Some(0)]]);
    }

    #[test]
    fn degrees() {
        assert_eq!(one_hop_degree(&Adjacency::new(3), 1).unwrap(), 0);
        let k5 = complete(5);
        assert!((0..5).all(|u| one_hop_degree(&k5, u).unwrap() == 4));

        // Row sums of the dense adjacency matrix.
        let adj = random_graph(40, 0.2, 8);
        let mut matrix = vec![vec![0usize; 40]; 40];
        for u in 0..40 {
            for &v in adj.neighbors(u) {
                matrix[u][v] = 1;
            }
        }
        for u in 0..40 {
            assert_eq!(one_hop_degree(&adj, u).unwrap(), matrix[u].iter().sum::<usize>());
        }
    }

    #[test]
    fn message_count_is_linear_in_anchor_node_product() {
        // Fixed density (mean degree ~ 3π) while N grows: messages / (M N)
        // stays bounded by the mean degree.
        let model = ConnectionModel::rayleigh(1.0, 2.0).unwrap();
        let m = 8;
        for (i, n) in [100usize, 200, 300, 400, 500].into_iter().enumerate() {
            let region = Region::square(libm::sqrt(n as f64 / 3.0)).unwrap();
            let mut rng = substream(21, i as u64);
            let pts = region.sample_points(n, &mut rng);
            let adj = realize_links(&pts, &model, &mut rng).unwrap();
            let anchors: Vec<usize> = (0..m).collect();
            let t = build_hop_table(&adj, &anchors, 50).unwrap();
            let ratio = t.messages as f64 / (m * n) as f64;
            assert!(ratio <= adj.mean_degree() + 1e-9, "n = {n}: ratio {ratio}");
            assert!(ratio <= 3.0 * core::f64::consts::PI * 1.1, "n = {n}: ratio {ratio}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bfs_equals_floyd_warshall(n in 1usize..50, p in 0.0f64..0.3, k in 1u32..8, seed in any::<u64>()) {
            let adj = random_graph(n, p, seed);
            let fw = floyd_warshall(&adj, k);
            for s in 0..n {
                prop_assert_eq!(hop_counts_from(&adj, s, k).unwrap(), fw[s].clone());
            }
        }

        #[test]
        fn adjacent_nodes_differ_by_at_most_one(n in 2usize..50, p in 0.0f64..0.3, seed in any::<u64>()) {
            let adj = random_graph(n, p, seed);
            let t = build_hop_table(&adj, &[0, n - 1], 6).unwrap();
            for row in &t.hops {
                for u in 0..n {
                    for &v in adj.neighbors(u) {
                        if let (Some(a), Some(b)) = (row[u], row[v]) {
                            prop_assert!(a.abs_diff(b) <= 1);
                        }
                    }
                }
            }
        }

        #[test]
        fn relabeling_is_equivariant(n in 2usize..40, p in 0.0f64..0.3, seed in any::<u64>()) {
            let adj = random_graph(n, p, seed);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = substream(seed, 1);
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let relabeled = adj.permuted(&perm).unwrap();
            let before = hop_counts_from(&adj, 0, 10).unwrap();
            let after = hop_counts_from(&relabeled, perm[0], 10).unwrap();
            for v in 0..n {
                prop_assert_eq!(before[v], after[perm[v]]);
            }
        }
    }
}
