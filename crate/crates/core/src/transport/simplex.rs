//! Transportation simplex (MODI) for dense balanced problems.

use crate::error::{Error, Result};

/// Optimal basic solution of a balanced transportation problem.
#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    pub cost: f64,
    /// Basic cells `(row, col, flow)`; exactly `m + n - 1` of them.
    pub basis: Vec<(usize, usize, f64)>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

const DEGENERATE_SWITCH: usize = 50;

/// Minimizes `sum c[i][j] x[i][j]` subject to row sums `a` and column sums `b`.
///
/// `a` and `b` must be strictly positive; `b` is rescaled to the mass of `a`.
pub(crate) fn solve(a: &[f64], b: &[f64], cost: impl Fn(usize, usize) -> f64) -> Result<TransportSolution> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::arg("transport problem with empty support"));
    }
    let c: Vec<f64> = (0..m * n).map(|k| cost(k / n, k % n)).collect();
    let scale = c.iter().fold(0.0f64, |s, &x| s.max(x.abs())).max(1.0);
    let rc_tol = 1e-12 * scale;

    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let b: Vec<f64> = b.iter().map(|&x| x * sa / sb).collect();

    // Northwest corner: a staircase path, hence a spanning tree of m + n - 1 cells.
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
    let (mut ra, mut rb) = (a.to_vec(), b.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = ra[i].min(rb[j]).max(0.0);
        basis.push((i, j, x));
        ra[i] -= x;
        rb[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(basis.len(), m + n - 1);

    let mut in_basis = vec![false; m * n];
    for &(i, j, _) in &basis {
        in_basis[i * n + j] = true;
    }
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut degenerate_run = 0usize;
    let max_iter = 50 * (m + n) * (m + n) + 1000;

    for _ in 0..max_iter {
        potentials(&basis, &c, m, n, &mut u, &mut v);
        let bland = degenerate_run >= DEGENERATE_SWITCH;
        let mut enter = None;
        let mut best = -rc_tol;
        'scan: for i in 0..m {
            for j in 0..n {
                if in_basis[i * n + j] {
                    continue;
                }
                let r = c[i * n + j] - u[i] - v[j];
                if r < best {
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = enter else {
            let cost = basis.iter().map(|&(i, j, x)| x * c[i * n + j]).sum();
            return Ok(TransportSolution { cost, basis, u, v });
        };

        let path = tree_path(&basis, m, n, ei, ej)?;
        // Cells along the path alternate -, +, -, ... starting next to row ei.
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &bidx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let (li, lj, x) = basis[bidx];
                let better = x < theta
                    || (x == theta && leave != usize::MAX && {
                        let (oi, oj, _) = basis[leave];
                        (li, lj) < (oi, oj)
                    });
                if better {
                    theta = x;
                    leave = bidx;
                }
            }
        }
        for (pos, &bidx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[bidx].2 = (basis[bidx].2 - theta).max(0.0);
            } else {
                basis[bidx].2 += theta;
            }
        }
        let (li, lj, _) = basis[leave];
        in_basis[li * n + lj] = false;
        in_basis[ei * n + ej] = true;
        basis[leave] = (ei, ej, theta);
        if theta <= 0.0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
    }
    Err(Error::Solver("transportation simplex hit its iteration cap".into()))
}

/// Solves `u[i] + v[j] = c[i][j]` on the basis tree with `u[0] = 0`.
fn potentials(basis: &[(usize, usize, f64)], c: &[f64], m: usize, n: usize, u: &mut [f64], v: &mut [f64]) {
    let adj = adjacency(basis, m, n);
    let mut seen = vec![false; m + n];
    let mut stack = vec![0usize];
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = stack.pop() {
        for &bidx in &adj[node] {
            let (i, j, _) = basis[bidx];
            let cij = c[i * n + j];
            if node < m {
                if !seen[m + j] {
                    v[j] = cij - u[i];
                    seen[m + j] = true;
                    stack.push(m + j);
                }
            } else if !seen[i] {
                u[i] = cij - v[j];
                seen[i] = true;
                stack.push(i);
            }
        }
    }
}

fn adjacency(basis: &[(usize, usize, f64)], m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m + n];
    for (k, &(i, j, _)) in basis.iter().enumerate() {
        adj[i].push(k);
        adj[m + j].push(k);
    }
    adj
}

/// Basis indices on the tree path from row `ei` to column `ej`, in order.
fn tree_path(basis: &[(usize, usize, f64)], m: usize, n: usize, ei: usize, ej: usize) -> Result<Vec<usize>> {
    let adj = adjacency(basis, m, n);
    let mut parent: Vec<Option<usize>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    let mut queue = std::collections::VecDeque::from([ei]);
    seen[ei] = true;
    let target = m + ej;
    while let Some(node) = queue.pop_front() {
        if node == target {
            break;
        }
        for &bidx in &adj[node] {
            let (i, j, _) = basis[bidx];
            let other = if node < m { m + j } else { i };
            if !seen[other] {
                seen[other] = true;
                parent[other] = Some(bidx);
                queue.push_back(other);
            }
        }
    }
    if !seen[target] {
        return Err(Error::Internal("transport basis is not a spanning tree".into()));
    }
    let mut path = Vec::new();
    let mut node = target;
    while node != ei {
        let bidx = parent[node].expect("parent on path");
        path.push(bidx);
        let (i, j, _) = basis[bidx];
        node = if node < m { m + j } else { i };
    }
    path.reverse();
    Ok(path)
}
