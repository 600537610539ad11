use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::distances::{gap_for_maps, SimplexNet};
use crate::dynamics::{invariant_measures, measure_set_hausdorff, sine_pluck, DynMap};
use crate::error::{Error, Result};
use crate::metric_space::{distortion, FiniteMetricSpace};
use crate::transport::{w1_matrix, Measure};

/// One deterministic map per parameter value.
#[derive(Debug, Clone)]
pub struct DynField {
    pub thetas: Vec<f64>,
    pub maps: Vec<DynMap>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationFieldReport {
    pub angle: (u64, u64),
    pub net_size: usize,
    pub ts: Vec<f64>,
    /// Points in the union of all fibres.
    pub ambient_size: usize,
    pub extremes_per_fibre: Vec<usize>,
    /// Hausdorff distance in W₁ between invariant-simplex nets.
    pub d_hat: Vec<Vec<f64>>,
    /// Gap certified by the fibre map `(g_s∘g_t⁻¹)_*` on simplex nets of the extreme sets.
    pub gamma: Vec<Vec<f64>>,
    /// Distortion of `g_s∘g_t⁻¹` between the fibre point sets.
    pub map_distortion: Vec<Vec<f64>>,
    pub symmetric: bool,
    pub diagonal_zero: bool,
    /// Both tables are nondecreasing as `t` moves away from `s` along the grid.
    pub monotone: bool,
    #[serde(skip)]
    pub dynamics: DynField,
    #[serde(skip)]
    pub extremes: Vec<Vec<Measure>>,
}

fn monotone_away(table: &[Vec<f64>], tol: f64) -> bool {
    let n = table.len();
    (0..n).all(|s| {
        let right = (s + 1..n).collect::<Vec<_>>();
        let left = (0..s).rev().collect::<Vec<_>>();
        [right, left].iter().all(|side| {
            let mut prev = table[s][s];
            side.iter().all(|&t| {
                let ok = table[s][t] >= prev - tol;
                prev = table[s][t];
                ok
            })
        })
    })
}

/// Rotation by `p/q` of a circle of circumference π, deformed by `g_t(x) = x + (t/2) sin² x`.
///
/// Fibre `t` lives on the transported net `g_t(net)`, on which `g_t∘h∘g_t⁻¹` is exactly
/// the index rotation by `n·p/q`. All fibres are compared inside the union of their points.
/// `m` is the resolution of the simplex nets.
pub fn rotation_field(p: u64, q: u64, ts: &[f64], n: usize, m: usize) -> Result<RotationFieldReport> {
    if q == 0 || n == 0 || !(n as u64).is_multiple_of(q) {
        return Err(Error::arg("net size must be a positive multiple of the angle denominator"));
    }
    if ts.is_empty() || ts.iter().any(|t| !(t.abs() < 2.0)) {
        return Err(Error::arg("deformation parameters must satisfy |t| < 2"));
    }
    let steps = (n as u64 / q * p) as usize % n;
    let base: Vec<f64> = (0..n).map(|i| i as f64 * PI / n as f64).collect();
    let coords: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| base.iter().map(|&x| sine_pluck(t)(x).rem_euclid(PI)).collect())
        .collect();

    let key = |x: f64| (x * 1e12).round() as i64;
    let mut all: BTreeMap<i64, f64> = BTreeMap::new();
    for c in coords.iter().flatten() {
        all.entry(key(*c)).or_insert(*c);
    }
    let index: BTreeMap<i64, usize> = all.keys().enumerate().map(|(i, &k)| (k, i)).collect();
    let ambient = Arc::new(FiniteMetricSpace::circle_points(all.values().copied().collect(), PI)?);

    let mut maps = Vec::new();
    let mut extremes = Vec::new();
    for c in &coords {
        let fibre = Arc::new(FiniteMetricSpace::circle_points(c.clone(), PI)?);
        let h = DynMap::from_table(Arc::clone(&fibre), (0..n).map(|i| (i + steps) % n).collect())?;
        let simplex = invariant_measures(&h);
        let ext = simplex
            .cycles
            .iter()
            .map(|cyc| {
                let pts: Vec<usize> = cyc.iter().map(|&i| index[&key(c[i])]).collect();
                Measure::uniform_on(Arc::clone(&ambient), &pts)
            })
            .collect::<Result<Vec<_>>>()?;
        maps.push(h);
        extremes.push(ext);
    }

    let boundaries: Vec<SimplexNet> = extremes
        .par_iter()
        .map(|ext| {
            let w = w1_matrix(ext)?;
            let labels = (0..ext.len()).map(|k| format!("orbit {k}")).collect();
            SimplexNet::grid(Arc::new(FiniteMetricSpace::new(labels, w)?), m)
        })
        .collect::<Result<_>>()?;

    let k = ts.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|s| (s + 1..k).map(move |t| (s, t))).collect();
    let values: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let d = measure_set_hausdorff(&extremes[s], &extremes[t], m)?;
            let id: Vec<usize> = (0..extremes[s].len()).collect();
            if extremes[t].len() != id.len() {
                return Err(Error::Internal("fibres have different numbers of orbits".into()));
            }
            let g = gap_for_maps(&boundaries[s], &boundaries[t], &id, &id, &id, &id)?.gamma;
            let fs = &maps[s].space();
            let ft = &maps[t].space();
            let dist = distortion(fs, ft, &(0..n).collect::<Vec<_>>());
            Ok((d, g, dist))
        })
        .collect::<Result<_>>()?;
    let mut d_hat = vec![vec![0.0; k]; k];
    let mut gamma = vec![vec![0.0; k]; k];
    let mut map_distortion = vec![vec![0.0; k]; k];
    for (&(s, t), &(d, g, dist)) in pairs.iter().zip(&values) {
        d_hat[s][t] = d;
        d_hat[t][s] = d;
        gamma[s][t] = g;
        gamma[t][s] = g;
        map_distortion[s][t] = dist;
        map_distortion[t][s] = dist;
    }
    let symmetric = (0..k).all(|s| (0..k).all(|t| d_hat[s][t] == d_hat[t][s] && gamma[s][t] == gamma[t][s]));
    let diagonal_zero = (0..k).all(|s| d_hat[s][s] == 0.0 && gamma[s][s] == 0.0);
    let monotone = monotone_away(&d_hat, 1e-12) && monotone_away(&gamma, 1e-12);
    Ok(RotationFieldReport {
        angle: (p, q),
        net_size: n,
        ts: ts.to_vec(),
        ambient_size: ambient.len(),
        extremes_per_fibre: extremes.iter().map(Vec::len).collect(),
        d_hat,
        gamma,
        map_distortion,
        symmetric,
        diagonal_zero,
        monotone,
        dynamics: DynField {
            thetas: ts.to_vec(),
            maps,
        },
        extremes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{crossed_product_seminorm, CrossedMode};
    use crate::lipgeometry::Observable;

    #[test]
    fn undeformed_fibre_has_orbit_uniform_extremes() {
        let rep = rotation_field(1, 4, &[-0.5, 0.0, 0.5], 8, 2).unwrap();
        assert_eq!(rep.extremes_per_fibre, vec![2, 2, 2]);
        let mid = &rep.dynamics.maps[1];
        assert_eq!(mid.table(), &[2, 3, 4, 5, 6, 7, 0, 1]);
        for e in &rep.extremes[1] {
            let support = e.support();
            assert_eq!(support.len(), 4);
            assert!(e.weights().iter().all(|&w| w == 0.0 || w == 0.25));
        }
        assert!(rep.diagonal_zero && rep.symmetric);
        for s in 0..3 {
            for t in 0..3 {
                assert!(rep.gamma[s][t] <= rep.map_distortion[s][t] + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_incompatible_net_size() {
        assert!(rotation_field(1, 3, &[0.0], 8, 2).is_err());
        assert!(rotation_field(1, 4, &[2.5], 8, 2).is_err());
    }

    #[test]
    fn crossed_sections_are_upper_semicontinuous() {
        let ts = [-0.5, -0.25, 0.0, 0.25, 0.5];
        let rep = rotation_field(1, 4, &ts, 8, 2).unwrap();
        let vals: Vec<f64> = rep
            .dynamics
            .maps
            .iter()
            .map(|h| {
                let a0 = Observable::from_fn(h.space().clone(), |i| 0.1 * (i as f64 * PI / 4.0).sin()).unwrap();
                crossed_product_seminorm(&a0, h, CrossedMode::General { m: 2 }).unwrap()
            })
            .collect();
        for i in 1..vals.len() - 1 {
            assert!(!(vals[i - 1] > vals[i] + 1e-9 && vals[i + 1] > vals[i] + 1e-9), "{vals:?}");
        }
    }
}
