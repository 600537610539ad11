use rayon::prelude::*;
use serde::Serialize;

use super::{cycles, DynMap};
use crate::error::{Error, Result};
use crate::lipgeometry::Nucleus;
use crate::transport::same_space;

/// Sup-deviation of ergodic averages from the invariant mean, as a function of `n`.
#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffReport {
    pub epsilon: f64,
    /// Least `N` with `deviation(n) ≤ ε` for every `N ≤ n ≤ n_max`; `None` if `deviation(n_max) > ε`.
    pub rate: Option<usize>,
    /// `curve[n - 1] = deviation(n)`.
    pub curve: Vec<f64>,
    pub n_max: usize,
}

impl BirkhoffReport {
    pub fn deviation(&self, n: usize) -> f64 {
        self.curve[n - 1]
    }
}

struct Orbit {
    tail: Vec<usize>,
    /// Cycle entered after the tail, starting at the entry point.
    cycle: Vec<usize>,
}

fn orbits(h: &DynMap, cycle: &[usize]) -> Vec<Orbit> {
    let n = h.table().len();
    let mut pos = vec![usize::MAX; n];
    for (k, &p) in cycle.iter().enumerate() {
        pos[p] = k;
    }
    (0..n)
        .map(|x| {
            let mut tail = Vec::new();
            let mut p = x;
            while pos[p] == usize::MAX {
                tail.push(p);
                p = h.apply(p);
            }
            let k = pos[p];
            let cycle = cycle[k..].iter().chain(&cycle[..k]).copied().collect();
            Orbit { tail, cycle }
        })
        .collect()
}

/// Deviation of `(1/n) Σ_{k<n} f(hᵏx)` from the cycle mean, in a form that is exactly
/// zero when the orbit has no tail and `n` is a multiple of the period.
fn orbit_deviation(f: &[f64], orbit: &Orbit, prefix: &[f64], n: usize) -> f64 {
    let p = orbit.cycle.len();
    let pf = p as f64;
    let total = prefix[p];
    let l = orbit.tail.len();
    if n <= l {
        let s: f64 = orbit.tail[..n].iter().map(|&q| f[q]).sum();
        return (s / n as f64 - total / pf).abs();
    }
    let tail_sum: f64 = orbit.tail.iter().map(|&q| f[q]).sum();
    let b = (n - l) % p;
    let num = pf * tail_sum + pf * prefix[b] - (l + b) as f64 * total;
    (num / (n as f64 * pf)).abs()
}

/// Uniform Birkhoff deviation over the nucleus and all starting points.
///
/// The supremum over traces reduces to point masses since the averages are affine in the state.
pub fn birkhoff_rate(h: &DynMap, nucleus: &Nucleus, eps: f64, n_max: usize) -> Result<BirkhoffReport> {
    if !(eps > 0.0) || n_max == 0 {
        return Err(Error::arg("need eps > 0 and n_max ≥ 1"));
    }
    if !same_space(h.space(), nucleus.space()) {
        return Err(Error::SpaceMismatch);
    }
    let rad = h.space().radius();
    if nucleus.r() < rad - crate::TOL.metric {
        return Err(Error::Precondition(format!(
            "nucleus radius {} is below the space radius {rad}",
            nucleus.r()
        )));
    }
    let cyc = cycles(h);
    if cyc.len() != 1 {
        return Err(Error::NotUniquelyErgodic { extremes: cyc.len() });
    }
    let orbits = orbits(h, &cyc[0]);
    let curve: Vec<f64> = (0..nucleus.len())
        .into_par_iter()
        .map(|k| {
            let f = nucleus.function(k);
            let mut worst = vec![0.0f64; n_max];
            for orbit in &orbits {
                let mut prefix = Vec::with_capacity(orbit.cycle.len() + 1);
                prefix.push(0.0);
                for &q in &orbit.cycle {
                    prefix.push(prefix.last().unwrap() + f[q]);
                }
                for (n, w) in worst.iter_mut().enumerate() {
                    *w = w.max(orbit_deviation(f, orbit, &prefix, n + 1));
                }
            }
            worst
        })
        .reduce(
            || vec![0.0; n_max],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    let rate = if curve[n_max - 1] > eps {
        None
    } else {
        let bad = curve.iter().rposition(|&d| d > eps);
        Some(bad.map_or(1, |i| i + 2))
    };
    Ok(BirkhoffReport {
        epsilon: eps,
        rate,
        curve,
        n_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rotation;
    use crate::lipgeometry::nucleus_net;
    use crate::metric_space::circle_net;
    use std::sync::Arc;

    fn brute_curve(h: &DynMap, nuc: &Nucleus, n_max: usize) -> Vec<f64> {
        let n = h.table().len();
        let mut curve = vec![0.0f64; n_max];
        for f in nuc.functions() {
            let mean = f.iter().sum::<f64>() / n as f64;
            for x in 0..n {
                let mut p = x;
                let mut s = 0.0;
                for k in 1..=n_max {
                    s += f[p];
                    p = h.apply(p);
                    curve[k - 1] = curve[k - 1].max((s / k as f64 - mean).abs());
                }
            }
        }
        curve
    }

    #[test]
    fn full_periods_vanish_and_match_simulation() {
        for q in [4, 6] {
            let x = Arc::new(circle_net(q, 1.0).unwrap());
            let h = rotation(&x, 1).unwrap();
            let nuc = nucleus_net(&x, 0.25, 0.1).unwrap();
            let rep = birkhoff_rate(&h, &nuc, 0.1, 5 * q).unwrap();
            for k in 1..=5 {
                assert_eq!(rep.deviation(k * q), 0.0);
            }
            let brute = brute_curve(&h, &nuc, 5 * q);
            for (a, b) in rep.curve.iter().zip(&brute) {
                assert!((a - b).abs() < 1e-12);
                assert!(*a <= 2.0 * nuc.r() + 1e-12);
            }
            let rate = rep.rate.unwrap();
            assert!(rep.deviation(rate) <= 0.1);
            if rate > 1 {
                assert!(rep.deviation(rate - 1) > 0.1);
            }
        }
    }

    #[test]
    fn tails_are_handled() {
        let x = Arc::new(circle_net(5, 1.0).unwrap());
        // 4 -> 0, 3 -> 4, cycle 0 -> 1 -> 2 -> 0
        let h = DynMap::from_table(x.clone(), vec![1, 2, 0, 4, 0]).unwrap();
        let nuc = Nucleus::from_functions(x.clone(), 0.5, 0.0, vec![vec![0.1, -0.05, 0.15, 0.3, 0.2]]).unwrap();
        let rep = birkhoff_rate(&h, &nuc, 0.05, 40).unwrap();
        let f = nuc.function(0);
        let mean = (f[0] + f[1] + f[2]) / 3.0;
        let traj = [3usize, 4, 0, 1, 2, 0, 1];
        let s: f64 = traj.iter().map(|&p| f[p]).sum();
        assert!(rep.deviation(7) >= (s / 7.0 - mean).abs() - 1e-15);
    }

    #[test]
    fn preconditions() {
        let x = Arc::new(circle_net(4, 1.0).unwrap());
        let nuc = nucleus_net(&x, 0.25, 0.1).unwrap();
        let two = rotation(&x, 2).unwrap();
        assert!(matches!(birkhoff_rate(&two, &nuc, 0.1, 8), Err(Error::NotUniquelyErgodic { extremes: 2 })));
        let small = Nucleus::from_functions(x.clone(), 0.1, 0.0, vec![vec![0.0; 4]]).unwrap();
        assert!(matches!(birkhoff_rate(&rotation(&x, 1).unwrap(), &small, 0.1, 8), Err(Error::Precondition(_))));
        let constant = Nucleus::from_functions(x.clone(), 0.25, 0.0, vec![vec![0.2; 4]]).unwrap();
        let rep = birkhoff_rate(&rotation(&x, 1).unwrap(), &constant, 0.1, 8).unwrap();
        assert!(rep.curve.iter().all(|&d| d == 0.0));
        assert_eq!(rep.rate, Some(1));
    }
}
