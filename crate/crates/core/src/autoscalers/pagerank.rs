/// Personalized PageRank over a directed graph with `n` nodes. Duplicate
/// edges count once; mass at nodes without out-edges is redistributed by
/// the personalization vector.
pub fn personalized_pagerank(
    n: usize,
    edges: &[(usize, usize)],
    personalization: &[f64],
    damping: f64,
    iterations: usize,
) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a < n && b < n && !adj[a].contains(&b) {
            adj[a].push(b);
        }
    }
    let total: f64 = personalization.iter().sum();
    let p: Vec<f64> = if total > 0.0 {
        personalization.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    let mut r = p.clone();
    let mut next = vec![0.0; n];
    for _ in 0..iterations {
        let mut dangling = 0.0;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (u, outs) in adj.iter().enumerate() {
            if outs.is_empty() {
                dangling += r[u];
                continue;
            }
            let share = r[u] / outs.len() as f64;
            for &v in outs {
                next[v] += share;
            }
        }
        for v in 0..n {
            next[v] = (1.0 - damping) * p[v] + damping * (next[v] + dangling * p[v]);
        }
        std::mem::swap(&mut r, &mut next);
    }
    r
}

/// Indices of the `k` highest ranks, ties to the lower index.
pub fn top_k(rank: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rank.len()).collect();
    idx.sort_by(|&a, &b| rank[b].total_cmp(&rank[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
