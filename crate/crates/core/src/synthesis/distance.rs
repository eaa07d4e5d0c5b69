use std::collections::BTreeMap;

use crate::grid::Grid;
use crate::network::Substation;
use crate::synthesis::SynthesisError;

/// All-pairs shortest-path distances (km) between substations.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    /// Substation id of each row/column.
    pub ids: Vec<u32>,
    pub d: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.ids.iter().position(|x| *x == id)
    }

    /// Distance between two substations by id. Panics on unknown ids.
    pub fn between(&self, a: u32, b: u32) -> f64 {
        let i = self.index_of(a).expect("unknown substation");
        let j = self.index_of(b).expect("unknown substation");
        self.d[i][j]
    }
}

/// Collapse the grid onto substations: one edge per adjacent pair, weighted
/// by the shortest connecting branch. Branches inside a substation vanish.
pub fn substation_graph(grid: &Grid, substations: &[Substation]) -> (Vec<u32>, Vec<Vec<f64>>) {
    let owner: BTreeMap<u32, usize> = substations
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.buses.iter().map(move |b| (*b, i)))
        .collect();
    let n = substations.len();
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in w.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for br in &grid.branches {
        let (a, b) = (owner[&br.from], owner[&br.to]);
        if a != b && br.length_km < w[a][b] {
            w[a][b] = br.length_km;
            w[b][a] = br.length_km;
        }
    }
    (substations.iter().map(|s| s.id).collect(), w)
}

/// Floyd-Warshall over a weight matrix (`INFINITY` = no edge).
pub fn floyd_warshall(w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = w.len();
    let mut d = w.to_vec();
    for k in 0..n {
        let row_k = d[k].clone();
        for row in d.iter_mut() {
            let dik = row[k];
            if dik.is_infinite() {
                continue;
            }
            for (dij, dkj) in row.iter_mut().zip(&row_k) {
                let via = dik + dkj;
                if via < *dij {
                    *dij = via;
                }
            }
        }
    }
    d
}

/// Shortest inter-substation distances; fails if the substation graph is disconnected.
pub fn all_pairs_shortest(grid: &Grid, substations: &[Substation]) -> Result<DistanceMatrix, SynthesisError> {
    let (ids, w) = substation_graph(grid, substations);
    let d = floyd_warshall(&w);
    let mut unreachable = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if d[i][j].is_infinite() {
                unreachable.push((ids[i], ids[j]));
            }
        }
    }
    if !unreachable.is_empty() {
        return Err(SynthesisError::Disconnected(unreachable));
    }
    Ok(DistanceMatrix { ids, d })
}

/// Number of distinct neighbouring substations.
pub(crate) fn degrees(grid: &Grid, substations: &[Substation]) -> Vec<usize> {
    let (_, w) = substation_graph(grid, substations);
    w.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().filter(|(j, x)| *j != i && x.is_finite()).count())
        .collect()
}
