//! Support graphs of symmetric matrices: bipartiteness by two-coloring,
//! connected components, forest detection, and DOT export.
//!
//! The support graph has an edge `{i,j}` wherever an off-diagonal entry
//! exceeds the `eps_zero` threshold in absolute value. Entries at the
//! threshold become non-edges, which is the conservative direction for
//! bipartiteness: dropping edges never destroys it.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::matcore::SymMatrix;

/// Vertex side in a two-coloring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Left,
    Right,
}

/// A valid two-coloring: every edge joins a `Left` vertex to a `Right` one.
#[derive(Debug, Clone)]
pub struct TwoColoring {
    colors: Vec<Color>,
}

impl TwoColoring {
    pub fn color(&self, v: usize) -> Color {
        self.colors[v]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn left_vertices(&self) -> Vec<usize> {
        (0..self.colors.len())
            .filter(|&v| self.colors[v] == Color::Left)
            .collect()
    }

    pub fn right_vertices(&self) -> Vec<usize> {
        (0..self.colors.len())
            .filter(|&v| self.colors[v] == Color::Right)
            .collect()
    }
}

/// Result of the two-coloring decision procedure.
#[derive(Debug, Clone)]
pub enum ColoringOutcome {
    /// The graph is bipartite; the coloring is deterministic (BFS layering,
    /// lowest-index vertex of each component colored `Left`).
    Colored(TwoColoring),
    /// The graph is not bipartite; the witness is a closed walk of odd
    /// length whose edges all exist in the graph.
    OddCycle(Vec<usize>),
}

impl ColoringOutcome {
    pub fn coloring(&self) -> Option<&TwoColoring> {
        match self {
            ColoringOutcome::Colored(c) => Some(c),
            ColoringOutcome::OddCycle(_) => None,
        }
    }
}

/// Simple undirected graph on vertices `0..r` without self-loops.
#[derive(Debug, Clone)]
pub struct SupportGraph {
    r: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl SupportGraph {
    /// Support graph of `S`: edge `{i,j}` iff `|S[i][j]| > eps_zero`, `i ≠ j`.
    pub fn from_matrix(s: &SymMatrix, eps_zero: f64) -> Self {
        let r = s.dim();
        let mut edges = Vec::new();
        for i in 0..r {
            for j in (i + 1)..r {
                if s.entry(i, j).abs() > eps_zero {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edge_list(r, edges)
    }

    /// Builds a graph from explicit edges; pairs are normalized to `i < j`
    /// and deduplicated, self-loops are dropped.
    pub fn from_edges(r: usize, edges: &[(usize, usize)]) -> Self {
        let mut list: Vec<(usize, usize)> = edges
            .iter()
            .filter(|&&(i, j)| i != j && i < r && j < r)
            .map(|&(i, j)| if i < j { (i, j) } else { (j, i) })
            .collect();
        list.sort_unstable();
        list.dedup();
        Self::from_edge_list(r, list)
    }

    fn from_edge_list(r: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); r];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for neighbors in &mut adjacency {
            neighbors.sort_unstable();
        }
        SupportGraph {
            r,
            edges,
            adjacency,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.r
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` pairs with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Two-coloring by BFS layering. Deterministic: components are visited
    /// in order of their lowest-index vertex, which is colored `Left`.
    pub fn two_coloring(&self) -> ColoringOutcome {
        let mut colors: Vec<Option<Color>> = vec![None; self.r];
        let mut parent: Vec<usize> = (0..self.r).collect();
        for start in 0..self.r {
            if colors[start].is_some() {
                continue;
            }
            colors[start] = Some(Color::Left);
            parent[start] = start;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                let v_color = colors[v].expect("queued vertices are colored");
                let flipped = match v_color {
                    Color::Left => Color::Right,
                    Color::Right => Color::Left,
                };
                for &w in &self.adjacency[v] {
                    match colors[w] {
                        None => {
                            colors[w] = Some(flipped);
                            parent[w] = v;
                            queue.push_back(w);
                        }
                        Some(c) if c == v_color => {
                            return ColoringOutcome::OddCycle(self.odd_cycle(&parent, v, w));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        ColoringOutcome::Colored(TwoColoring {
            colors: colors.into_iter().map(|c| c.unwrap()).collect(),
        })
    }

    /// Reconstructs an odd closed walk from a same-color BFS conflict edge
    /// `(v, w)` using the BFS parent pointers.
    fn odd_cycle(&self, parent: &[usize], v: usize, w: usize) -> Vec<usize> {
        let path_to_root = |mut x: usize| {
            let mut path = vec![x];
            while parent[x] != x {
                x = parent[x];
                path.push(x);
            }
            path
        };
        let pv = path_to_root(v);
        let pw = path_to_root(w);
        // Trim the common tail so the two paths meet exactly once.
        let mut iv = pv.len();
        let mut iw = pw.len();
        while iv > 1 && iw > 1 && pv[iv - 2] == pw[iw - 2] {
            iv -= 1;
            iw -= 1;
        }
        let mut cycle: Vec<usize> = pv[..iv].to_vec();
        cycle.extend(pw[..iw - 1].iter().rev());
        cycle
    }

    pub fn is_bipartite(&self) -> bool {
        matches!(self.two_coloring(), ColoringOutcome::Colored(_))
    }

    /// Partition of `0..r` into maximal connected sets, each sorted, the
    /// list ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.r];
        let mut components = Vec::new();
        for start in 0..self.r {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut component = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        component.push(w);
                        queue.push_back(w);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    /// True iff every component satisfies `|edges| == |vertices| - 1`.
    pub fn is_forest(&self) -> bool {
        let components = self.connected_components();
        for component in components {
            let in_component: std::collections::HashSet<usize> =
                component.iter().copied().collect();
            let edge_count = self
                .edges
                .iter()
                .filter(|(i, _)| in_component.contains(i))
                .count();
            if edge_count != component.len() - 1 {
                return false;
            }
        }
        true
    }

    /// DOT rendering. Vertices are printed 1-based. When a coloring is
    /// given, the Left and Right classes are rendered as two ranks.
    pub fn to_dot(&self, coloring: Option<&TwoColoring>) -> String {
        let mut out = String::from("graph support {\n");
        if let Some(c) = coloring {
            let left: Vec<String> = c.left_vertices().iter().map(|v| (v + 1).to_string()).collect();
            let right: Vec<String> = c
                .right_vertices()
                .iter()
                .map(|v| (v + 1).to_string())
                .collect();
            if !left.is_empty() {
                let _ = writeln!(out, "  {{ rank=same; {}; }}", left.join("; "));
            }
            if !right.is_empty() {
                let _ = writeln!(out, "  {{ rank=same; {}; }}", right.join("; "));
            }
        }
        for v in 0..self.r {
            let _ = writeln!(out, "  {};", v + 1);
        }
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "  {} -- {};", i + 1, j + 1);
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{Permutation, ToleranceConfig};
    use proptest::prelude::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn path3() -> SupportGraph {
        SupportGraph::from_edges(3, &[(0, 1), (1, 2)])
    }

    #[test]
    fn support_graph_examples() {
        let s = SymMatrix::from_entries(2, &[1.0, 0.5, 0.5, 1.0], &tol()).unwrap();
        let g = SupportGraph::from_matrix(&s, tol().eps_zero);
        assert_eq!(g.edges(), &[(0, 1)]);

        let d = SymMatrix::from_entries(2, &[1.0, 0.0, 0.0, 2.0], &tol()).unwrap();
        assert_eq!(SupportGraph::from_matrix(&d, tol().eps_zero).edge_count(), 0);

        let p = SymMatrix::from_entries(
            3,
            &[1.0, 0.6, 0.0, 0.6, 1.0, 0.6, 0.0, 0.6, 1.0],
            &tol(),
        )
        .unwrap();
        let g = SupportGraph::from_matrix(&p, tol().eps_zero);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn two_coloring_path() {
        match path3().two_coloring() {
            ColoringOutcome::Colored(c) => {
                assert_eq!(c.colors(), &[Color::Left, Color::Right, Color::Left]);
            }
            ColoringOutcome::OddCycle(_) => panic!("path is bipartite"),
        }
    }

    #[test]
    fn two_coloring_triangle_witness() {
        let g = SupportGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        match g.two_coloring() {
            ColoringOutcome::Colored(_) => panic!("triangle is not bipartite"),
            ColoringOutcome::OddCycle(cycle) => {
                assert_eq!(cycle.len() % 2, 1);
                for k in 0..cycle.len() {
                    let a = cycle[k];
                    let b = cycle[(k + 1) % cycle.len()];
                    assert!(g.has_edge(a, b), "cycle edge ({a},{b}) missing");
                }
            }
        }
    }

    #[test]
    fn two_coloring_empty_graph_all_left() {
        let g = SupportGraph::from_edges(4, &[]);
        match g.two_coloring() {
            ColoringOutcome::Colored(c) => {
                assert!(c.colors().iter().all(|&c| c == Color::Left));
            }
            ColoringOutcome::OddCycle(_) => panic!("empty graph is bipartite"),
        }
    }

    #[test]
    fn connected_components_examples() {
        let g = SupportGraph::from_edges(3, &[(0, 1)]);
        assert_eq!(g.connected_components(), vec![vec![0, 1], vec![2]]);

        let g = SupportGraph::from_edges(2, &[]);
        assert_eq!(g.connected_components(), vec![vec![0], vec![1]]);

        assert_eq!(path3().connected_components(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn is_forest_examples() {
        assert!(path3().is_forest());
        let square = SupportGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        assert!(!square.is_forest());
        assert!(SupportGraph::from_edges(3, &[]).is_forest());
    }

    #[test]
    fn to_dot_examples() {
        let g = SupportGraph::from_edges(2, &[(0, 1)]);
        let dot = g.to_dot(None);
        assert!(dot.contains("1 -- 2"));

        let single = SupportGraph::from_edges(1, &[]);
        assert!(single.to_dot(None).contains("1;"));

        match path3().two_coloring() {
            ColoringOutcome::Colored(c) => {
                let dot = path3().to_dot(Some(&c));
                assert_eq!(dot.matches("rank=same").count(), 2);
                assert!(dot.contains("{ rank=same; 1; 3; }"));
                assert!(dot.contains("{ rank=same; 2; }"));
            }
            ColoringOutcome::OddCycle(_) => unreachable!(),
        }
    }

    #[test]
    fn block_shaped_graphs_two_color() {
        // Edges joining {0..n} to {n..2n} always admit a valid coloring.
        let n = 4;
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, n + j))).collect();
        let g = SupportGraph::from_edges(2 * n, &edges);
        assert!(g.is_bipartite());
    }

    proptest! {
        #[test]
        fn odd_cycle_witness_is_odd_and_real(
            r in 3usize..9,
            extra in proptest::collection::vec((0usize..9, 0usize..9), 0..12),
        ) {
            // A triangle plus arbitrary extra edges is never bipartite.
            let mut edges = vec![(0, 1), (1, 2), (0, 2)];
            edges.extend(extra.into_iter().map(|(a, b)| (a % r, b % r)));
            let g = SupportGraph::from_edges(r, &edges);
            match g.two_coloring() {
                ColoringOutcome::Colored(_) => prop_assert!(false, "graph contains a triangle"),
                ColoringOutcome::OddCycle(cycle) => {
                    prop_assert_eq!(cycle.len() % 2, 1);
                    for k in 0..cycle.len() {
                        prop_assert!(g.has_edge(cycle[k], cycle[(k + 1) % cycle.len()]));
                    }
                }
            }
        }

        #[test]
        fn coloring_is_valid_when_bipartite(
            r in 2usize..10,
            pairs in proptest::collection::vec((0usize..10, 0usize..10), 0..16),
        ) {
            let edges: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a % r, b % r)).collect();
            let g = SupportGraph::from_edges(r, &edges);
            if let ColoringOutcome::Colored(c) = g.two_coloring() {
                for &(i, j) in g.edges() {
                    prop_assert!(c.color(i) != c.color(j));
                }
            }
        }

        #[test]
        fn support_graph_commutes_with_relabeling(
            entries in proptest::collection::vec(-1.0f64..1.0, 25),
        ) {
            let m = nalgebra::DMatrix::from_row_slice(5, 5, &entries);
            let sym = 0.5 * (&m + m.transpose());
            let s = SymMatrix::from_dmatrix(sym, &ToleranceConfig::default()).unwrap();
            let perm = Permutation::new(vec![2, 0, 4, 1, 3]).unwrap();
            let permuted = s.permute_congruence(&perm).unwrap();

            let g_direct = SupportGraph::from_matrix(&permuted, 1e-10);
            let g_orig = SupportGraph::from_matrix(&s, 1e-10);
            let mut relabeled: Vec<(usize, usize)> = g_orig
                .edges()
                .iter()
                .map(|&(i, j)| {
                    let (a, b) = (perm.apply(i), perm.apply(j));
                    if a < b { (a, b) } else { (b, a) }
                })
                .collect();
            relabeled.sort_unstable();
            prop_assert_eq!(g_direct.edges(), &relabeled[..]);
        }
    }
}
