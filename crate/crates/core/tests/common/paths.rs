//! Shortest paths by enumerating every simple path.

/// `edges` are directed `(src, dst, weight)`. Unreachable pairs stay `INF`.
pub fn all_pairs_by_enumeration(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![f64::INFINITY; n]; n];
    for (s, row) in out.iter_mut().enumerate() {
        let mut visited = vec![false; n];
        visited[s] = true;
        walk(s, 0.0, edges, &mut visited, row);
    }
    out
}

fn walk(at: usize, dist: f64, edges: &[(usize, usize, f64)], visited: &mut [bool], best: &mut [f64]) {
    if dist < best[at] {
        best[at] = dist;
    }
    for &(a, b, w) in edges {
        if a == at && !visited[b] {
            visited[b] = true;
            walk(b, dist + w, edges, visited, best);
            visited[b] = false;
        }
    }
}
