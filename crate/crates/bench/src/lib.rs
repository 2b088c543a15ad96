//! Fixture graphs shared by the criterion benches.

use kgs_core::KGraph;

/// Rank 1, one vertex, doubling edge.
pub fn rank_one_doubling() -> KGraph {
    KGraph::from_adjacency(vec![vec![vec![2]]]).unwrap()
}

/// Rank 2, one vertex, `A_1 = [2]`, `A_2 = [3]`.
pub fn rank_two_single_vertex() -> KGraph {
    KGraph::from_adjacency(vec![vec![vec![2]], vec![vec![3]]]).unwrap()
}

/// Rank 2, two vertices, all-ones and `2 I`.
pub fn rank_two_two_vertices() -> KGraph {
    KGraph::from_adjacency(vec![
        vec![vec![1, 1], vec![1, 1]],
        vec![vec![2, 0], vec![0, 2]],
    ])
    .unwrap()
}
