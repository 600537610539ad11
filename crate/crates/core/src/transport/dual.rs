//! Dense tableau simplex with Bland's rule, used for the Kantorovich dual.

use crate::error::{Error, Result};

/// Maximizes `c·x` subject to `A x <= b`, `x >= 0`, with `b >= 0` so the
/// origin is a feasible starting vertex. Returns `(x, value)`.
pub(crate) fn lp_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let nv = c.len();
    let nc = a.len();
    if b.iter().any(|&x| x < 0.0) {
        return Err(Error::Internal("lp_max needs a nonnegative right-hand side".into()));
    }
    let width = nv + nc + 1;
    // Rows 0..nc are constraints, row nc is the objective (stored as -c).
    let mut t = vec![0.0; (nc + 1) * width];
    for r in 0..nc {
        t[r * width..r * width + nv].copy_from_slice(&a[r]);
        t[r * width + nv + r] = 1.0;
        t[r * width + width - 1] = b[r];
    }
    for j in 0..nv {
        t[nc * width + j] = -c[j];
    }
    let mut basic: Vec<usize> = (nv..nv + nc).collect();
    let eps = 1e-12;
    let max_iter = 200 * (nv + nc) + 10_000;
    for _ in 0..max_iter {
        let obj = &t[nc * width..(nc + 1) * width];
        let Some(enter) = (0..width - 1).find(|&j| obj[j] < -eps) else {
            let mut x = vec![0.0; nv];
            for (r, &bv) in basic.iter().enumerate() {
                if bv < nv {
                    x[bv] = t[r * width + width - 1];
                }
            }
            let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            return Ok((x, value));
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..nc {
            let coef = t[r * width + enter];
            if coef > eps {
                let ratio = t[r * width + width - 1] / coef;
                let take = match leave {
                    None => true,
                    Some(l) => ratio < best - eps || (ratio <= best + eps && basic[r] < basic[l]),
                };
                if take {
                    best = best.min(ratio);
                    leave = Some(r);
                }
            }
        }
        let Some(pr) = leave else {
            return Err(Error::Solver("dual transport LP is unbounded".into()));
        };
        pivot(&mut t, width, nc + 1, pr, enter);
        basic[pr] = enter;
    }
    Err(Error::Solver("dual simplex hit its iteration cap".into()))
}

fn pivot(t: &mut [f64], width: usize, rows: usize, pr: usize, pc: usize) {
    let p = t[pr * width + pc];
    for j in 0..width {
        t[pr * width + j] /= p;
    }
    let prow: Vec<f64> = t[pr * width..(pr + 1) * width].to_vec();
    for r in 0..rows {
        if r == pr {
            continue;
        }
        let f = t[r * width + pc];
        if f != 0.0 {
            for j in 0..width {
                t[r * width + j] -= f * prow[j];
            }
            t[r * width + pc] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let (x, v) = lp_max(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((v - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(matches!(lp_max(&[1.0], &[vec![-1.0]], &[1.0]), Err(Error::Solver(_))));
    }
}
