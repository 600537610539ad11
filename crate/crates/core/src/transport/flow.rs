//! Edmonds–Karp max-flow on a dense capacity matrix.

use std::collections::VecDeque;

/// Maximum flow value from `s` to `t`. Capacities below `floor` count as zero.
pub(crate) fn max_flow(mut cap: Vec<Vec<f64>>, s: usize, t: usize, floor: f64) -> f64 {
    let n = cap.len();
    let mut total = 0.0;
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for v in 0..n {
                if parent[v] == usize::MAX && cap[u][v] > floor {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = parent[v];
            push = push.min(cap[u][v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            cap[u][v] -= push;
            cap[v][u] += push;
            v = u;
        }
        total += push;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond() {
        let cap = vec![
            vec![0.0, 3.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0, 2.0],
            vec![0.0, 0.0, 0.0, 3.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ];
        assert!((max_flow(cap, 0, 3, 0.0) - 5.0).abs() < 1e-15);
    }
}
