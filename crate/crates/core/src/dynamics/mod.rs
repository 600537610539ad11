//! Deterministic dynamics on finite metric spaces and their invariant simplices.

mod birkhoff;
mod crossed;
mod egh;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric_space::{circle_net, Embedding, FiniteMetricSpace};
use crate::transport::{hull_net, same_space, w1, Measure};

pub use birkhoff::{birkhoff_rate, BirkhoffReport};
pub use crossed::{crossed_product_seminorm, crossed_product_seminorm_dominated, CrossedMode};
pub use egh::{cyclic_window, egh_distance, z_window, EghMode, EghReport};

/// A total self-map of a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DynMap {
    space: Arc<FiniteMetricSpace>,
    map: Vec<usize>,
    /// Largest distance between an analytic image and its net projection (0 for tables).
    projection_error: f64,
}

impl DynMap {
    pub fn from_table(space: Arc<FiniteMetricSpace>, map: Vec<usize>) -> Result<Self> {
        if map.len() != space.len() || map.iter().any(|&v| v >= space.len()) {
            return Err(Error::arg("map must send every point into the space"));
        }
        Ok(DynMap {
            space,
            map,
            projection_error: 0.0,
        })
    }

    pub fn identity(space: Arc<FiniteMetricSpace>) -> Self {
        let map = (0..space.len()).collect();
        DynMap {
            space,
            map,
            projection_error: 0.0,
        }
    }

    /// Projects an analytic map of a circle or line onto the nearest net points.
    pub fn analytic(space: Arc<FiniteMetricSpace>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let (map, projection_error) = project(&space, &f)?;
        Ok(DynMap {
            space,
            map,
            projection_error,
        })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn table(&self) -> &[usize] {
        &self.map
    }

    pub fn projection_error(&self) -> f64 {
        self.projection_error
    }

    pub fn apply(&self, p: usize) -> usize {
        self.map[p]
    }

    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.map.len()];
        self.map.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DynMap) -> Result<DynMap> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(DynMap {
            space: Arc::clone(&self.space),
            map: other.map.iter().map(|&p| self.map[p]).collect(),
            projection_error: self.projection_error + other.projection_error,
        })
    }

    pub fn inverse(&self) -> Result<DynMap> {
        if !self.is_bijective() {
            return Err(Error::arg("map is not invertible"));
        }
        let mut inv = vec![0; self.map.len()];
        for (p, &v) in self.map.iter().enumerate() {
            inv[v] = p;
        }
        Ok(DynMap {
            space: Arc::clone(&self.space),
            map: inv,
            projection_error: self.projection_error,
        })
    }

    /// `h^k` for `k ≥ 0`, or a power of the inverse for `k < 0`.
    pub fn power(&self, k: i64) -> Result<DynMap> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut map: Vec<usize> = (0..self.map.len()).collect();
        for _ in 0..k.unsigned_abs() {
            map = map.iter().map(|&p| base.map[p]).collect();
        }
        Ok(DynMap {
            space: Arc::clone(&self.space),
            map,
            projection_error: self.projection_error * k.unsigned_abs() as f64,
        })
    }

    /// Largest `ρ(h(x), h(y)) − ρ(x, y)`; at most 0 for 1-Lipschitz maps.
    pub fn lipschitz_excess(&self) -> f64 {
        let x = &self.space;
        let mut worst = f64::NEG_INFINITY;
        for a in 0..x.len() {
            for b in a + 1..x.len() {
                worst = worst.max(x.d(self.map[a], self.map[b]) - x.d(a, b));
            }
        }
        worst.max(0.0)
    }
}

fn project(space: &FiniteMetricSpace, f: &dyn Fn(f64) -> f64) -> Result<(Vec<usize>, f64)> {
    match space.embedding() {
        Embedding::Circle { circumference, coords } => {
            let c = *circumference;
            let mut err: f64 = 0.0;
            let map = coords
                .iter()
                .map(|&x| {
                    let y = f(x).rem_euclid(c);
                    let (best, d) = nearest_on_circle(coords, c, y);
                    err = err.max(d);
                    best
                })
                .collect();
            Ok((map, err))
        }
        Embedding::Line { coords } => {
            let mut err: f64 = 0.0;
            let map = coords
                .iter()
                .map(|&x| {
                    let y = f(x);
                    let (best, d) = coords
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| (i, (c - y).abs()))
                        .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
                    err = err.max(d);
                    best
                })
                .collect();
            Ok((map, err))
        }
        Embedding::Abstract => Err(Error::arg("analytic maps need a circle or line embedding")),
    }
}

fn nearest_on_circle(coords: &[f64], c: f64, y: f64) -> (usize, f64) {
    coords
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let d = (p - y).abs();
            (i, d.min(c - d))
        })
        .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
}

fn equispaced_circle(x: &FiniteMetricSpace) -> Option<f64> {
    if let Embedding::Circle { circumference, coords } = x.embedding() {
        let n = coords.len() as f64;
        let ok = coords
            .iter()
            .enumerate()
            .all(|(i, &c)| (c - i as f64 * circumference / n).abs() <= 1e-9 * circumference);
        ok.then_some(*circumference)
    } else {
        None
    }
}

/// Rotation of an equispaced circle net by `steps` grid positions.
pub fn rotation(x: &Arc<FiniteMetricSpace>, steps: i64) -> Result<DynMap> {
    if equispaced_circle(x).is_none() {
        return Err(Error::arg("rotation needs a space built by circle_net"));
    }
    let n = x.len() as i64;
    let map = (0..n).map(|i| (i + steps).rem_euclid(n) as usize).collect();
    DynMap::from_table(Arc::clone(x), map)
}

/// `g_t(x) = x + (t/2) sin² x`, a homeomorphism of the circle of circumference π for `|t| < 2`.
pub fn sine_pluck(t: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x: f64| x + 0.5 * t * x.sin().powi(2)
}

/// How the conjugating map is given.
pub enum Conjugator<'a> {
    /// A bijection of net indices.
    Points(&'a [usize]),
    /// An analytic map projected onto the net.
    Analytic(&'a dyn Fn(f64) -> f64),
}

/// `g ∘ h ∘ g⁻¹` on the net.
///
/// An analytic `g` must project to a bijection of the net; otherwise the error
/// carries the smallest multiple of the net size (up to 16×) on which it does.
pub fn deform(g: Conjugator<'_>, h: &DynMap) -> Result<DynMap> {
    let x = &h.space;
    let (table, err) = match g {
        Conjugator::Points(p) => (p.to_vec(), 0.0),
        Conjugator::Analytic(f) => project(x, f)?,
    };
    let gmap = DynMap {
        space: Arc::clone(x),
        map: table,
        projection_error: err,
    };
    if gmap.map.len() != x.len() || gmap.map.iter().any(|&v| v >= x.len()) {
        return Err(Error::arg("conjugating map must send every point into the space"));
    }
    if !gmap.is_bijective() {
        let minimal_net_size = match (g, equispaced_circle(x)) {
            (Conjugator::Analytic(f), Some(c)) => (2..=16).map(|k| k * x.len()).find(|&n| {
                circle_net(n, c)
                    .ok()
                    .and_then(|net| project(&net, f).ok())
                    .is_some_and(|(m, _)| {
                        let mut seen = vec![false; n];
                        m.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
                    })
            }),
            _ => None,
        };
        return Err(Error::NonInvertibleProjection { minimal_net_size });
    }
    let ginv = gmap.inverse()?;
    let mut out = gmap.compose(h)?.compose(&ginv)?;
    out.projection_error = h.projection_error + 2.0 * err;
    Ok(out)
}

/// Extreme invariant measures of a deterministic map.
#[derive(Debug, Clone)]
pub struct InvariantSimplex {
    pub extremes: Vec<Measure>,
    /// Periodic cycles in order of their smallest point; `extremes[i]` is uniform on `cycles[i]`.
    pub cycles: Vec<Vec<usize>>,
}

impl InvariantSimplex {
    pub fn is_uniquely_ergodic(&self) -> bool {
        self.extremes.len() == 1
    }
}

/// Periodic cycles of the functional graph, each starting at its smallest point.
pub fn cycles(h: &DynMap) -> Vec<Vec<usize>> {
    let n = h.map.len();
    let mut on_cycle = vec![false; n];
    let mut state = vec![0u8; n];
    for s in 0..n {
        let mut path = Vec::new();
        let mut p = s;
        while state[p] == 0 {
            state[p] = 1;
            path.push(p);
            p = h.map[p];
        }
        if state[p] == 1 {
            let start = path.iter().position(|&q| q == p).unwrap();
            for &q in &path[start..] {
                on_cycle[q] = true;
            }
        }
        for &q in &path {
            state[q] = 2;
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if on_cycle[s] && !seen[s] {
            let mut cyc = vec![s];
            seen[s] = true;
            let mut p = h.map[s];
            while p != s {
                seen[p] = true;
                cyc.push(p);
                p = h.map[p];
            }
            out.push(cyc);
        }
    }
    out
}

/// Invariant measures of a deterministic map are exactly the mixtures of
/// uniform measures on its periodic cycles.
pub fn invariant_measures(h: &DynMap) -> InvariantSimplex {
    let cycles = cycles(h);
    let extremes = cycles
        .iter()
        .map(|c| Measure::uniform_on(Arc::clone(&h.space), c).expect("cycles are nonempty"))
        .collect();
    InvariantSimplex { extremes, cycles }
}

/// Hausdorff distance in `(Prob(X), W₁)` between grid nets of the two invariant simplices.
pub fn invariant_simplex_hausdorff(h1: &DynMap, h2: &DynMap, m: usize) -> Result<f64> {
    if !same_space(&h1.space, &h2.space) {
        return Err(Error::SpaceMismatch);
    }
    measure_set_hausdorff(&invariant_measures(h1).extremes, &invariant_measures(h2).extremes, m)
}

/// Hausdorff distance in W₁ between grid nets of two convex hulls.
pub fn measure_set_hausdorff(a: &[Measure], b: &[Measure], m: usize) -> Result<f64> {
    use rayon::prelude::*;
    let na = hull_net(a, m)?.measures;
    let nb = hull_net(b, m)?.measures;
    let x = Arc::clone(na[0].space());
    if !same_space(&x, nb[0].space()) {
        return Err(Error::SpaceMismatch);
    }
    let table: Vec<Vec<f64>> = na
        .par_iter()
        .map(|p| nb.iter().map(|q| w1(&x, p.weights(), q.weights())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(crate::metric_space::hausdorff_with(na.len(), nb.len(), |i, j| table[i][j]))
}
