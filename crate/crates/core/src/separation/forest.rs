//! Block-cut forest of the support graph and partial-route extraction.

use std::collections::{BTreeSet, VecDeque};

use crate::cuts::PartialRoute;
use crate::instance::EdgeVector;

/// Edges below this value are left out of the support graph.
pub const SUPPORT_EPS: f64 = 1e-7;
const FLOW_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeKind {
    Block,
    Cut,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestNode {
    pub kind: NodeKind,
    /// Customers of the node (dummies removed); `[v]` for a cut vertex.
    pub customers: Vec<usize>,
    pub tree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestTree {
    pub nodes: Vec<usize>,
    /// x̄(0, V_+(T))
    pub depot_flow: f64,
}

#[derive(Debug, Clone)]
pub struct BlockCutForest {
    nodes: Vec<ForestNode>,
    adj: Vec<Vec<usize>>,
    trees: Vec<ForestTree>,
    cut_vertices: BTreeSet<usize>,
}

/// Biconnected components of an undirected graph as vertex lists; isolated vertices form their own block.
fn biconnected_blocks(nv: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut disc = vec![usize::MAX; nv];
    let mut low = vec![0usize; nv];
    let mut timer = 0;
    let mut blocks = Vec::new();
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..nv {
        if disc[root] != usize::MAX {
            continue;
        }
        if adj[root].is_empty() {
            disc[root] = timer;
            timer += 1;
            blocks.push(vec![root]);
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        // (vertex, parent, next neighbour index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        while let Some(top) = stack.last_mut() {
            let (u, parent, idx) = *top;
            if idx < adj[u].len() {
                top.2 += 1;
                let w = adj[u][idx];
                if disc[w] == usize::MAX {
                    edge_stack.push((u, w));
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, u, 0));
                } else if w != parent && disc[w] < disc[u] {
                    edge_stack.push((u, w));
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] >= disc[p] {
                        let mut block = BTreeSet::new();
                        while let Some((a, b)) = edge_stack.pop() {
                            block.insert(a);
                            block.insert(b);
                            if (a, b) == (p, u) {
                                break;
                            }
                        }
                        blocks.push(block.into_iter().collect());
                    }
                }
            }
        }
    }
    blocks
}

impl BlockCutForest {
    /// Forest over G̃: customer support edges plus a dummy leaf ṽ for each v with x̄_{0v} ≥ 1.
    pub fn build(x: &EdgeVector) -> Self {
        let n = x.n();
        // vertex ids: customers 1..=n, dummy of v at n + v; index 0 unused
        let nv = 2 * n + 1;
        let mut adj = vec![Vec::new(); nv];
        for (i, j, _) in x.support(SUPPORT_EPS) {
            if i != 0 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for v in 1..=n {
            if x.get(0, v) >= 1.0 - 1e-9 {
                adj[v].push(n + v);
                adj[n + v].push(v);
            }
        }
        let mut blocks = biconnected_blocks(nv, &adj);
        blocks.retain(|b| !(b.len() == 1 && (b[0] == 0 || b[0] > n)));
        let mut membership = vec![0usize; nv];
        for b in &blocks {
            for &v in b {
                membership[v] += 1;
            }
        }
        let cut_vertices: BTreeSet<usize> = (1..=n).filter(|&v| membership[v] >= 2).collect();

        let mut nodes = Vec::new();
        let mut cut_node = vec![usize::MAX; nv];
        for &c in &cut_vertices {
            cut_node[c] = nodes.len();
            nodes.push(ForestNode {
                kind: NodeKind::Cut,
                customers: vec![c],
                tree: 0,
            });
        }
        let mut adjf: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for b in &blocks {
            let id = nodes.len();
            nodes.push(ForestNode {
                kind: NodeKind::Block,
                customers: b.iter().copied().filter(|&v| v >= 1 && v <= n).collect(),
                tree: 0,
            });
            adjf.push(Vec::new());
            for &v in b {
                if cut_node[v] != usize::MAX {
                    adjf[id].push(cut_node[v]);
                    adjf[cut_node[v]].push(id);
                }
            }
        }
        for a in &mut adjf {
            a.sort_unstable();
        }

        let mut trees = Vec::new();
        let mut seen = vec![false; nodes.len()];
        for s in 0..nodes.len() {
            if seen[s] {
                continue;
            }
            let t = trees.len();
            let mut members = Vec::new();
            let mut queue = VecDeque::from([s]);
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                members.push(u);
                nodes[u].tree = t;
                for &w in &adjf[u] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            let mut customers = BTreeSet::new();
            for &u in &members {
                customers.extend(nodes[u].customers.iter().copied());
            }
            let depot_flow = customers.iter().map(|&v| x.get(0, v)).sum();
            trees.push(ForestTree {
                nodes: members,
                depot_flow,
            });
        }
        Self {
            nodes,
            adj: adjf,
            trees,
            cut_vertices,
        }
    }

    pub fn nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    pub fn trees(&self) -> &[ForestTree] {
        &self.trees
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    pub fn cut_vertices(&self) -> &BTreeSet<usize> {
        &self.cut_vertices
    }

    pub fn has_depot_flow_two(&self, tree: usize) -> bool {
        (self.trees[tree].depot_flow - 2.0).abs() <= FLOW_TOL
    }

    pub fn is_path(&self, tree: usize) -> bool {
        self.trees[tree]
            .nodes
            .iter()
            .all(|&u| self.adj[u].len() <= 2)
    }

    /// Trees with depot flow 2 that are not paths.
    pub fn path_violations(&self) -> usize {
        (0..self.trees.len())
            .filter(|&t| self.has_depot_flow_two(t) && !self.is_path(t))
            .count()
    }

    fn leaves(&self, tree: usize) -> Vec<usize> {
        self.trees[tree]
            .nodes
            .iter()
            .copied()
            .filter(|&u| self.adj[u].len() <= 1)
            .collect()
    }

    fn order_key(&self, u: usize) -> (usize, NodeKind, &[usize], usize) {
        let c = &self.nodes[u].customers;
        (
            c.first().copied().unwrap_or(usize::MAX),
            self.nodes[u].kind,
            c,
            u,
        )
    }

    fn path_between(&self, a: usize, b: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.nodes.len()];
        parent[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &w in &self.adj[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        let mut path = vec![b];
        let mut u = b;
        while u != a {
            u = parent[u];
            path.push(u);
        }
        path.reverse();
        path
    }

    fn partial_route_of(&self, path: &[usize]) -> Option<PartialRoute> {
        let mut sets = Vec::new();
        for &u in path {
            let node = &self.nodes[u];
            match node.kind {
                NodeKind::Cut => sets.push(node.customers.clone()),
                NodeKind::Block => {
                    let rest: Vec<usize> = node
                        .customers
                        .iter()
                        .copied()
                        .filter(|v| !self.cut_vertices.contains(v))
                        .collect();
                    if !rest.is_empty() {
                        sets.push(rest);
                    }
                }
            }
        }
        PartialRoute::new(sets).ok()
    }

    /// Partial routes along leaf-to-leaf paths; only depot-flow-2 trees unless `all_trees`.
    pub fn partial_routes(&self, all_trees: bool) -> Vec<PartialRoute> {
        let mut out = Vec::new();
        for t in 0..self.trees.len() {
            if !all_trees && !self.has_depot_flow_two(t) {
                continue;
            }
            let leaves = self.leaves(t);
            for (i, &a) in leaves.iter().enumerate() {
                for &b in &leaves[i..] {
                    let single = a == b;
                    if single && leaves.len() > 1 {
                        continue;
                    }
                    let (a, b) = if self.order_key(a) <= self.order_key(b) {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    if let Some(h) = self.partial_route_of(&self.path_between(a, b)) {
                        out.push(h);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Route, RoutingPlan};

    fn plan_x(n: usize, routes: &[&[usize]]) -> EdgeVector {
        RoutingPlan::new(routes.iter().map(|r| Route::new(r.to_vec())).collect()).encode(n)
    }

    fn sets(h: &PartialRoute) -> Vec<Vec<usize>> {
        h.sets().to_vec()
    }

    #[test]
    fn single_route_is_chain() {
        let x = plan_x(3, &[&[1, 2, 3]]);
        let f = BlockCutForest::build(&x);
        assert_eq!(f.trees().len(), 1);
        assert!(f.is_path(0));
        assert!(f.has_depot_flow_two(0));
        let hs = f.partial_routes(false);
        assert_eq!(hs.len(), 1);
        assert_eq!(sets(&hs[0]), vec![vec![1], vec![2], vec![3]]);
        assert_eq!(f.path_violations(), 0);
    }

    #[test]
    fn out_and_back_customer_is_singleton_tree() {
        let x = plan_x(3, &[&[2], &[1, 3]]);
        let f = BlockCutForest::build(&x);
        assert_eq!(f.trees().len(), 2);
        let hs = f.partial_routes(false);
        assert!(hs.iter().any(|h| sets(h) == vec![vec![2]]));
        assert!(hs.iter().any(|h| sets(h) == vec![vec![1], vec![3]]));
    }

    #[test]
    fn diamond_gives_unstructured_middle() {
        // depot-1, depot-6 full; 1 and 6 joined to 2..5 by half edges forming a 2-connected middle
        let n = 6;
        let mut x = EdgeVector::zeros(n);
        x.set(0, 1, 1.0);
        x.set(0, 6, 1.0);
        for v in 2..=5 {
            x.set(1, v, 0.25);
            x.set(6, v, 0.25);
        }
        for (a, b) in [(2, 3), (3, 4), (4, 5), (5, 2)] {
            x.set(a, b, 0.75);
        }
        let f = BlockCutForest::build(&x);
        assert_eq!(f.trees().len(), 1);
        assert!(f.is_path(0));
        let hs = f.partial_routes(false);
        assert_eq!(hs.len(), 1);
        assert_eq!(sets(&hs[0]), vec![vec![1], vec![2, 3, 4, 5], vec![6]]);
    }

    #[test]
    fn block_of_cut_vertices_is_skipped() {
        // 1 -- 2 -- 3 in a chain where the middle block {1,2} holds only cut vertices
        let x = plan_x(4, &[&[1, 2, 3, 4]]);
        let f = BlockCutForest::build(&x);
        let hs = f.partial_routes(false);
        assert_eq!(sets(&hs[0]), vec![vec![1], vec![2], vec![3], vec![4]]);
    }

    #[test]
    fn blocks_on_a_cycle() {
        let mut adj = vec![Vec::new(); 5];
        for (a, b) in [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)] {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut blocks = biconnected_blocks(5, &adj);
        blocks.sort();
        assert_eq!(blocks, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4]]);
    }

    #[test]
    fn star_tree_is_not_a_path() {
        // depot flow 2 but a customer joined to three others
        let n = 4;
        let mut x = EdgeVector::zeros(n);
        x.set(0, 2, 1.0);
        x.set(0, 3, 1.0);
        x.set(1, 2, 1.0);
        x.set(1, 3, 1.0);
        x.set(1, 4, 1.0);
        let f = BlockCutForest::build(&x);
        assert_eq!(f.path_violations(), 1);
        assert!(f.partial_routes(false).len() >= 3);
    }
}
