use std::cmp::Reverse;
use std::collections::BinaryHeap;

use proptest::prelude::*;

use jointnet_core::fixtures::{ieee118_config, ieee118_grid};
use jointnet_core::synthesis::{all_pairs_shortest, floyd_warshall, group_substations, substation_graph};

/// Single-source Dijkstra on an adjacency matrix. Non-negative floats order like their bit patterns.
fn dijkstra(w: &[Vec<f64>], s: usize) -> Vec<f64> {
    let n = w.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((0f64.to_bits(), s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if f64::from_bits(d) > dist[u] {
            continue;
        }
        for v in 0..n {
            if v != u && w[u][v].is_finite() {
                let nd = dist[u] + w[u][v];
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((nd.to_bits(), v)));
                }
            }
        }
    }
    dist
}

fn graph() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=30)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((any::<prop::sample::Index>(), 1u32..=50), n.saturating_sub(1)),
                proptest::collection::vec((0..n, 0..n, 1u32..=50), 0..=2 * n),
            )
        })
        .prop_map(|(n, tree, extra)| {
            let mut w = vec![vec![f64::INFINITY; n]; n];
            for (i, row) in w.iter_mut().enumerate() {
                row[i] = 0.0;
            }
            let mut add = |a: usize, b: usize, c: u32| {
                if a != b && (c as f64) < w[a][b] {
                    w[a][b] = c as f64;
                    w[b][a] = c as f64;
                }
            };
            for (i, (parent, c)) in tree.into_iter().enumerate() {
                add(i + 1, parent.index(i + 1), c);
            }
            for (a, b, c) in extra {
                add(a, b, c);
            }
            w
        })
}

proptest! {
    #[test]
    fn floyd_warshall_matches_dijkstra(w in graph()) {
        let d = floyd_warshall(&w);
        for (s, row) in d.iter().enumerate() {
            prop_assert_eq!(row, &dijkstra(&w, s));
        }
    }

    #[test]
    fn distances_are_symmetric_and_triangular(w in graph()) {
        let d = floyd_warshall(&w);
        let n = w.len();
        for i in 0..n {
            prop_assert_eq!(d[i][i], 0.0);
            for j in 0..n {
                prop_assert_eq!(d[i][j], d[j][i]);
                for k in 0..n {
                    prop_assert!(d[i][j] <= d[i][k] + d[k][j]);
                }
            }
        }
    }
}

#[test]
fn ieee118_substation_distances_match_dijkstra() {
    let g = ieee118_grid();
    let subs = group_substations(&g, &ieee118_config()).unwrap();
    assert_eq!(subs.len(), 109);
    let (ids, w) = substation_graph(&g, &subs);
    let d = all_pairs_shortest(&g, &subs).unwrap();
    for (i, a) in ids.iter().enumerate() {
        let oracle = dijkstra(&w, i);
        for (j, b) in ids.iter().enumerate() {
            assert!((d.between(*a, *b) - oracle[j]).abs() < 1e-9, "S{a}-S{b}");
        }
    }
}
