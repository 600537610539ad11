use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{cycles, DynMap};
use crate::distances::{decode, gh_start, pow, BoundKind, SearchBudget};
use crate::error::{Error, Result};
use crate::metric_space::{distortion, FiniteMetricSpace};

/// Which conditions a comparison map must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum EghMode {
    /// Almost equivariant, almost dense and almost isometric.
    #[default]
    WithIsometry,
    /// Almost equivariant and almost dense only.
    Literal,
}

/// Defects of the best map found in one direction.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionWitness {
    pub map: Vec<usize>,
    pub equivariance: f64,
    pub density: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EghReport {
    pub value: f64,
    pub kind: BoundKind,
    pub mode: EghMode,
    pub forward: DirectionWitness,
    pub backward: DirectionWitness,
}

/// Powers `h^{-n}, …, h^{n}`; `n` defaults to `2·|X|`.
pub fn z_window(h: &DynMap, n: Option<usize>) -> Result<Vec<DynMap>> {
    let n = n.unwrap_or(2 * h.space().len()) as i64;
    (-n..=n).map(|k| h.power(k)).collect()
}

/// The whole cyclic group generated by a bijection: `h^0, …, h^{q−1}` with `q` its order.
pub fn cyclic_window(h: &DynMap) -> Result<Vec<DynMap>> {
    if !h.is_bijective() {
        return Err(Error::arg("only bijections generate a finite cyclic group"));
    }
    let order = cycles(h).iter().map(Vec::len).fold(1usize, num_lcm);
    (0..order as i64).map(|k| h.power(k)).collect()
}

fn num_lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

struct Side<'a> {
    x: &'a FiniteMetricSpace,
    y: &'a FiniteMetricSpace,
    a1: &'a [DynMap],
    a2: &'a [DynMap],
    mode: EghMode,
}

impl Side<'_> {
    fn witness(&self, f: &[usize]) -> DirectionWitness {
        let mut equivariance: f64 = 0.0;
        for (g1, g2) in self.a1.iter().zip(self.a2) {
            let slack = g1.projection_error() + g2.projection_error();
            for p in 0..self.x.len() {
                let d = self.y.d(g2.apply(f[p]), f[g1.apply(p)]);
                equivariance = equivariance.max(d + slack);
            }
        }
        let density = (0..self.y.len())
            .map(|q| f.iter().map(|&v| self.y.d(q, v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        let distortion = distortion(self.x, self.y, f);
        DirectionWitness {
            map: f.to_vec(),
            equivariance,
            density,
            distortion,
        }
    }

    fn score(&self, w: &DirectionWitness) -> f64 {
        let base = w.equivariance.max(w.density);
        match self.mode {
            EghMode::WithIsometry => base.max(w.distortion),
            EghMode::Literal => base,
        }
    }

    fn best(&self, budget: &SearchBudget) -> (f64, DirectionWitness, bool) {
        let (nx, ny) = (self.x.len(), self.y.len());
        let total = pow(ny, nx);
        if total <= budget.max_maps {
            let (s, k) = (0..total as usize)
                .into_par_iter()
                .map(|k| (self.score(&self.witness(&decode(k as u128, nx, ny))), k))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("at least one map");
            return (s, self.witness(&decode(k as u128, nx, ny)), true);
        }
        let mut f = gh_start(self.x, self.y);
        let mut cur = self.score(&self.witness(&f));
        for _ in 0..budget.local_sweeps {
            let mut improved = false;
            for p in 0..nx {
                for v in 0..ny {
                    let old = f[p];
                    if old == v {
                        continue;
                    }
                    f[p] = v;
                    let s = self.score(&self.witness(&f));
                    if s < cur - 1e-15 {
                        cur = s;
                        improved = true;
                    } else {
                        f[p] = old;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (cur, self.witness(&f), false)
    }
}

/// Equivariant GH distance between two actions indexed by a common window.
///
/// Projection errors of analytic maps are added to every equivariance defect.
pub fn egh_distance(action1: &[DynMap], action2: &[DynMap], mode: EghMode, budget: &SearchBudget) -> Result<EghReport> {
    if action1.is_empty() || action2.is_empty() {
        return Err(Error::arg("window is empty"));
    }
    if action1.len() != action2.len() {
        return Err(Error::arg("windows must have the same length"));
    }
    let x1: &Arc<FiniteMetricSpace> = action1[0].space();
    let x2: &Arc<FiniteMetricSpace> = action2[0].space();
    if action1.iter().any(|g| !Arc::ptr_eq(g.space(), x1) && !g.space().same_as(x1))
        || action2.iter().any(|g| !Arc::ptr_eq(g.space(), x2) && !g.space().same_as(x2))
    {
        return Err(Error::SpaceMismatch);
    }
    let fwd = Side { x: x1, y: x2, a1: action1, a2: action2, mode };
    let bwd = Side { x: x2, y: x1, a1: action2, a2: action1, mode };
    let (a, forward, e1) = fwd.best(budget);
    let (b, backward, e2) = bwd.best(budget);
    Ok(EghReport {
        value: a.max(b),
        kind: if e1 && e2 { BoundKind::Exact } else { BoundKind::Upper },
        mode,
        forward,
        backward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{deform, rotation, Conjugator};
    use crate::metric_space::circle_net;

    fn circ(n: usize) -> Arc<FiniteMetricSpace> {
        Arc::new(circle_net(n, 1.0).unwrap())
    }

    #[test]
    fn identical_actions_are_at_zero() {
        let x = circ(5);
        let w = cyclic_window(&rotation(&x, 2).unwrap()).unwrap();
        assert_eq!(w.len(), 5);
        let r = egh_distance(&w, &w, EghMode::WithIsometry, &SearchBudget::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.kind, BoundKind::Exact);
    }

    #[test]
    fn relabeling_isometry_gives_zero() {
        let x = circ(6);
        let h = rotation(&x, 1).unwrap();
        // a reflection conjugates the rotation to its inverse
        let refl: Vec<usize> = (0..6).map(|i| (6 - i) % 6).collect();
        let h3 = deform(Conjugator::Points(&refl), &h).unwrap();
        let w1 = z_window(&h, Some(3)).unwrap();
        let w3 = z_window(&h3, Some(3)).unwrap();
        let r = egh_distance(&w1, &w3, EghMode::WithIsometry, &SearchBudget::default()).unwrap();
        assert!(r.value < 1e-12);
        assert_eq!(h3, rotation(&x, -1).unwrap());
    }

    #[test]
    fn periodic_z_window_matches_full_group() {
        let x = circ(4);
        let h = rotation(&x, 1).unwrap();
        let k = rotation(&x, 2).unwrap();
        let b = SearchBudget::default();
        let zh = z_window(&h, Some(4)).unwrap();
        let zk = z_window(&h, Some(4)).unwrap();
        assert_eq!(egh_distance(&zh, &zk, EghMode::WithIsometry, &b).unwrap().value, 0.0);
        let a = egh_distance(&z_window(&h, Some(4)).unwrap(), &z_window(&k, Some(4)).unwrap(), EghMode::WithIsometry, &b).unwrap();
        let c = egh_distance(&cyclic_window(&h).unwrap(), &(0..4).map(|i| k.power(i).unwrap()).collect::<Vec<_>>(), EghMode::WithIsometry, &b).unwrap();
        assert!((a.value - c.value).abs() < 1e-12);
    }

    #[test]
    fn literal_mode_never_exceeds_isometric_mode() {
        let x = circ(4);
        let y = Arc::new(circle_net(3, 1.0).unwrap());
        let wx = cyclic_window(&rotation(&x, 1).unwrap()).unwrap();
        let wy: Vec<DynMap> = (0..4).map(|i| rotation(&y, i).unwrap()).collect();
        let b = SearchBudget::default();
        let lit = egh_distance(&wx, &wy, EghMode::Literal, &b).unwrap();
        let iso = egh_distance(&wx, &wy, EghMode::WithIsometry, &b).unwrap();
        assert!(lit.value <= iso.value + 1e-15);
        assert!(iso.value > 0.0);
    }

    #[test]
    fn empty_or_mismatched_windows() {
        let x = circ(4);
        let w = cyclic_window(&rotation(&x, 1).unwrap()).unwrap();
        let b = SearchBudget::default();
        assert!(egh_distance(&[], &w, EghMode::Literal, &b).is_err());
        assert!(egh_distance(&w[..2], &w, EghMode::Literal, &b).is_err());
    }
}
