//! Parameter-indexed families of metrics and dynamics on a fixed label set.
//!
//! Continuity and semicontinuity checks here are sampled on the parameter grid.
//! They are diagnostics at grid resolution.

mod rotation;
mod wave;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::TOL;
use crate::dynamics::{birkhoff_rate, BirkhoffReport, DynMap};
use crate::error::{Error, Result};
use crate::lipgeometry::{in_lipschitz_ball, lipschitz_of, nucleus_net, Nucleus};
use crate::metric_space::FiniteMetricSpace;

pub use rotation::{rotation_field, DynField, RotationFieldReport};
pub use wave::{adaptive_simpson, circle_wave_metric, wave_metric_field, WaveProfile};

/// One metric per parameter value, all on the same labelled points.
#[derive(Debug, Clone)]
pub struct MetricField {
    thetas: Vec<f64>,
    fibres: Vec<Arc<FiniteMetricSpace>>,
    /// Largest accumulated quadrature error estimate over fibres (0 for exact fields).
    pub quadrature_error: f64,
}

impl MetricField {
    pub fn new(thetas: Vec<f64>, fibres: Vec<Arc<FiniteMetricSpace>>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != fibres.len() {
            return Err(Error::arg("need one fibre per parameter value"));
        }
        if fibres.iter().any(|f| f.labels() != fibres[0].labels()) {
            return Err(Error::arg("fibres must share their labels"));
        }
        Ok(MetricField {
            thetas,
            fibres,
            quadrature_error: 0.0,
        })
    }

    /// `ρ_θ = c(θ)·ρ`.
    pub fn scaled(base: &FiniteMetricSpace, thetas: &[f64], c: impl Fn(f64) -> f64) -> Result<Self> {
        let fibres = thetas
            .iter()
            .map(|&t| base.scaled(c(t)).map(Arc::new))
            .collect::<Result<_>>()?;
        MetricField::new(thetas.to_vec(), fibres)
    }

    pub fn constant(base: Arc<FiniteMetricSpace>, thetas: &[f64]) -> Result<Self> {
        MetricField::new(thetas.to_vec(), vec![base; thetas.len()])
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn fibres(&self) -> &[Arc<FiniteMetricSpace>] {
        &self.fibres
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// `(min, max)` of `ρ_t(x,y)/ρ_s(x,y)` over distinct pairs.
    pub fn ratio_bounds(&self, s: usize, t: usize) -> Result<(f64, f64)> {
        let (a, b) = (&self.fibres[s], &self.fibres[t]);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for x in 0..a.len() {
            for y in x + 1..a.len() {
                let (ds, dt) = (a.d(x, y), b.d(x, y));
                if ds == 0.0 || dt == 0.0 {
                    return Err(Error::arg(format!("zero distance between {x} and {y}")));
                }
                lo = lo.min(dt / ds);
                hi = hi.max(dt / ds);
            }
        }
        if a.len() < 2 {
            return Ok((1.0, 1.0));
        }
        Ok((lo, hi))
    }
}

/// Bi-Lipschitz envelopes of a metric field.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// `m_θ = inf ρ_θ/ρ_0` against the first fibre.
    pub m_lower: Vec<f64>,
    /// `M_θ = sup ρ_θ/ρ_0`.
    pub m_upper: Vec<f64>,
    /// `k[η][θ] = m_θ/M_η` off the diagonal and 1 on it.
    pub k: Vec<Vec<f64>>,
    /// `K[η][θ] = M_θ/m_η` off the diagonal and 1 on it.
    pub big_k: Vec<Vec<f64>>,
    /// Best constants `min ρ_θ/ρ_η` and `max ρ_θ/ρ_η`, exactly 1 on the diagonal.
    pub k_tight: Vec<Vec<f64>>,
    pub big_k_tight: Vec<Vec<f64>>,
    /// Largest failure of `k ρ_η ≤ ρ_θ ≤ K ρ_η` over all fibre pairs and point pairs (0 if none).
    pub sandwich_violation: f64,
}

/// Envelope constants and an exhaustive check of the sandwich inequality.
pub fn lipschitz_envelope(field: &MetricField) -> Result<EnvelopeReport> {
    let n = field.len();
    if n < 2 {
        return Err(Error::arg("need at least two fibres"));
    }
    let tight: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|s| (0..n).map(|t| if s == t { Ok((1.0, 1.0)) } else { field.ratio_bounds(s, t) }).collect())
        .collect::<Result<_>>()?;
    let m_lower: Vec<f64> = (0..n).map(|t| tight[0][t].0).collect();
    let m_upper: Vec<f64> = (0..n).map(|t| tight[0][t].1).collect();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|s| (0..n).map(|t| if s == t { 1.0 } else { m_lower[t] / m_upper[s] }).collect())
        .collect();
    let big_k: Vec<Vec<f64>> = (0..n)
        .map(|s| (0..n).map(|t| if s == t { 1.0 } else { m_upper[t] / m_lower[s] }).collect())
        .collect();
    let k_tight: Vec<Vec<f64>> = tight.iter().map(|r| r.iter().map(|p| p.0).collect()).collect();
    let big_k_tight: Vec<Vec<f64>> = tight.iter().map(|r| r.iter().map(|p| p.1).collect()).collect();
    let mut violation: f64 = 0.0;
    for s in 0..n {
        for t in 0..n {
            let (a, b) = (&field.fibres[s], &field.fibres[t]);
            for x in 0..a.len() {
                for y in x + 1..a.len() {
                    let (ds, dt) = (a.d(x, y), b.d(x, y));
                    for (lo, hi) in [(k[s][t], big_k[s][t]), (k_tight[s][t], big_k_tight[s][t])] {
                        violation = violation.max(lo * ds - dt).max(dt - hi * ds);
                    }
                }
            }
        }
    }
    Ok(EnvelopeReport {
        m_lower,
        m_upper,
        k,
        big_k,
        k_tight,
        big_k_tight,
        sandwich_violation: violation.max(0.0),
    })
}

/// `min{f₊/K, r} − min{f₋/K, r}`: carries a `ρ_θ`-nucleus member into the `ρ_η`-ball when `ρ_θ ≤ K ρ_η`.
pub fn retract(f: &[f64], big_k: f64, r: f64) -> Vec<f64> {
    f.iter()
        .map(|&v| (v.max(0.0) / big_k).min(r) - ((-v).max(0.0) / big_k).min(r))
        .collect()
}

/// Nuclei of every fibre with their Hausdorff distances and retraction certificates.
#[derive(Debug, Clone, Serialize)]
pub struct NucleusFieldReport {
    pub r: f64,
    pub eps: f64,
    pub sizes: Vec<usize>,
    pub densities: Vec<f64>,
    /// Sup-norm Hausdorff distance between the nuclei of fibres `i` and `i+1`.
    pub hausdorff: Vec<f64>,
    /// `max ‖f − R(f)‖_∞` over both retraction directions between fibres `i` and `i+1`.
    pub displacement: Vec<f64>,
    /// `r·max(|1 − 1/K|)` over both directions: the a priori displacement bound.
    pub displacement_bound: Vec<f64>,
    /// Retracted functions that failed target-fibre membership.
    pub membership_violations: usize,
    /// `hausdorff[i] ≤ displacement[i] + densities[i] + densities[i+1]` for every `i`.
    pub within_bound: bool,
    #[serde(skip)]
    pub nuclei: Vec<Nucleus>,
}

pub fn nucleus_field(field: &MetricField, r: f64, eps: f64) -> Result<NucleusFieldReport> {
    let sup_radius = field.fibres.iter().map(|f| f.radius()).fold(0.0, f64::max);
    if r < sup_radius - TOL.metric {
        return Err(Error::Precondition(format!("r = {r} is below the largest fibre radius {sup_radius}")));
    }
    let nuclei: Vec<Nucleus> = field
        .fibres
        .par_iter()
        .map(|f| nucleus_net(f, r, eps))
        .collect::<Result<_>>()?;
    let n = field.len();
    let mut hausdorff = Vec::new();
    let mut displacement = Vec::new();
    let mut displacement_bound = Vec::new();
    let mut violations = 0usize;
    for i in 0..n.saturating_sub(1) {
        hausdorff.push(nuclei[i].hausdorff(&nuclei[i + 1]));
        let mut disp: f64 = 0.0;
        let mut bound: f64 = 0.0;
        for (src, dst) in [(i, i + 1), (i + 1, i)] {
            // ρ_src ≤ K ρ_dst
            let big_k = field.ratio_bounds(dst, src)?.1;
            bound = bound.max(r * (1.0 - 1.0 / big_k).abs());
            let target = &field.fibres[dst];
            for f in nuclei[src].functions() {
                let g = retract(f, big_k, r);
                if !in_lipschitz_ball(target, &g, r, TOL.lipschitz) {
                    violations += 1;
                }
                let d = f.iter().zip(&g).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                disp = disp.max(d);
            }
        }
        displacement.push(disp);
        displacement_bound.push(bound);
    }
    let densities: Vec<f64> = nuclei.iter().map(|n| n.density()).collect();
    let within_bound = (0..hausdorff.len())
        .all(|i| hausdorff[i] <= displacement_bound[i] + densities[i] + densities[i + 1] + TOL.lipschitz);
    Ok(NucleusFieldReport {
        r,
        eps,
        sizes: nuclei.iter().map(|n| n.len()).collect(),
        densities,
        hausdorff,
        displacement,
        displacement_bound,
        membership_violations: violations,
        within_bound,
        nuclei,
    })
}

/// Birkhoff rates across a metric field for one fixed map of the labels.
#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffFieldReport {
    pub thetas: Vec<f64>,
    pub rates: Vec<Option<usize>>,
    /// Interior grid indices whose rate is strictly below both neighbours (unresolved counts as infinite).
    pub semicontinuity_flags: Vec<usize>,
    pub reports: Vec<BirkhoffReport>,
}

fn dips(values: &[Option<usize>]) -> Vec<usize> {
    let key = |v: Option<usize>| v.unwrap_or(usize::MAX);
    (1..values.len().saturating_sub(1))
        .filter(|&i| key(values[i - 1]) > key(values[i]) && key(values[i + 1]) > key(values[i]))
        .collect()
}

/// Per-fibre rate with the fibre's own nucleus of density `nucleus_eps`.
pub fn birkhoff_field(field: &MetricField, h: &DynMap, eps: f64, r: f64, nucleus_eps: f64, n_max: usize) -> Result<BirkhoffFieldReport> {
    let reports: Vec<BirkhoffReport> = field
        .fibres
        .par_iter()
        .map(|fib| {
            if fib.len() != h.table().len() {
                return Err(Error::SpaceMismatch);
            }
            let map = DynMap::from_table(Arc::clone(fib), h.table().to_vec())?;
            let nuc = nucleus_net(fib, r, nucleus_eps)?;
            birkhoff_rate(&map, &nuc, eps, n_max)
        })
        .collect::<Result<_>>()?;
    let rates: Vec<Option<usize>> = reports.iter().map(|r| r.rate).collect();
    Ok(BirkhoffFieldReport {
        thetas: field.thetas.clone(),
        semicontinuity_flags: dips(&rates),
        rates,
        reports,
    })
}

/// Sampled values `L_θ(f_θ)` of sections of a metric field.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    /// `values[s][i] = L_{θ_i}(section_s(θ_i))`.
    pub values: Vec<Vec<f64>>,
    /// `(section, interior grid index)` where the value drops below both neighbours by more than the tolerance.
    pub semicontinuity_flags: Vec<(usize, usize)>,
    /// For sections constant in θ: largest failure of `L_η ≤ K_tight[θ][η]·L_θ` (0 if none).
    pub constant_section_violation: f64,
}

/// Upper-semicontinuity diagnostic for sections; constant sections are also checked
/// against the tight bi-Lipschitz constants, which makes them continuous.
pub fn field_continuity_check(field: &MetricField, sections: &[Vec<Vec<f64>>], tol: f64) -> Result<ContinuityReport> {
    let n = field.len();
    for s in sections {
        if s.len() != n || s.iter().any(|f| f.len() != field.fibres[0].len()) {
            return Err(Error::arg("each section needs one value vector per fibre"));
        }
    }
    let values: Vec<Vec<f64>> = sections
        .iter()
        .map(|s| s.iter().zip(&field.fibres).map(|(f, x)| lipschitz_of(x, f)).collect())
        .collect();
    let mut flags = Vec::new();
    for (si, v) in values.iter().enumerate() {
        for i in 1..n.saturating_sub(1) {
            if v[i - 1] > v[i] + tol && v[i + 1] > v[i] + tol {
                flags.push((si, i));
            }
        }
    }
    let mut violation: f64 = 0.0;
    let constant: Vec<usize> = (0..sections.len()).filter(|&s| sections[s].iter().all(|f| f == &sections[s][0])).collect();
    if !constant.is_empty() && n > 1 {
        let env = lipschitz_envelope(field)?;
        for &s in &constant {
            for a in 0..n {
                for b in 0..n {
                    // ρ_b ≤ K[a][b] ρ_a gives L_a ≤ K[a][b]·L_b
                    violation = violation.max(values[s][a] - env.big_k_tight[a][b] * values[s][b]);
                }
            }
        }
    }
    Ok(ContinuityReport {
        values,
        semicontinuity_flags: flags,
        constant_section_violation: violation.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rotation;
    use crate::metric_space::{circle_net, interval_net};
    use std::f64::consts::PI;

    #[test]
    fn envelope_examples() {
        let base = Arc::new(interval_net(4, 1.0).unwrap());
        let c = MetricField::constant(base.clone(), &[0.0, 0.5, 1.0]).unwrap();
        let e = lipschitz_envelope(&c).unwrap();
        assert!(e.k.iter().flatten().chain(e.big_k.iter().flatten()).all(|&v| v == 1.0));
        let thetas = [0.0, 0.25, 0.5];
        let s = MetricField::scaled(&base, &thetas, |t| 1.0 + t).unwrap();
        let e = lipschitz_envelope(&s).unwrap();
        for (i, t) in thetas.iter().enumerate() {
            assert!((e.m_lower[i] - (1.0 + t)).abs() < 1e-12 && (e.m_upper[i] - (1.0 + t)).abs() < 1e-12);
            assert_eq!(e.k[i][i], 1.0);
            assert_eq!(e.big_k_tight[i][i], 1.0);
        }
        assert!(e.sandwich_violation <= 1e-12);
    }

    #[test]
    fn wave_envelope_sandwich() {
        let p = WaveProfile::default_pluck();
        let xs: Vec<f64> = (0..=8).map(|i| i as f64 * PI / 8.0).collect();
        let ts: Vec<f64> = (0..5).map(|i| i as f64 * 0.4).collect();
        let f = wave_metric_field(&p, &ts, &xs).unwrap();
        let e = lipschitz_envelope(&f).unwrap();
        assert!(e.sandwich_violation <= 1e-9);
        for i in 0..ts.len() {
            assert!(e.m_lower[i] <= e.m_upper[i]);
        }
    }

    #[test]
    fn nucleus_field_examples() {
        let base = Arc::new(interval_net(3, 1.0).unwrap());
        let c = MetricField::constant(base.clone(), &[0.0, 1.0]).unwrap();
        let rep = nucleus_field(&c, 0.5, 0.1).unwrap();
        assert_eq!(rep.hausdorff, vec![0.0]);
        assert_eq!(rep.membership_violations, 0);
        let s = MetricField::scaled(&base, &[0.0, 0.25, 0.5], |t| 1.0 + t).unwrap();
        let rep = nucleus_field(&s, 0.75, 0.1).unwrap();
        assert_eq!(rep.membership_violations, 0);
        assert!(rep.within_bound);
        for (i, b) in rep.displacement_bound.iter().enumerate() {
            assert!(rep.displacement[i] <= b + 1e-12);
        }
        assert!(nucleus_field(&s, 0.5, 0.1).is_err());
    }

    #[test]
    fn birkhoff_field_examples() {
        let base = Arc::new(circle_net(4, 1.0).unwrap());
        let h = rotation(&base, 1).unwrap();
        let c = MetricField::constant(base.clone(), &[0.0, 0.5, 1.0]).unwrap();
        let rep = birkhoff_field(&c, &h, 0.1, 0.25, 0.1, 24).unwrap();
        assert!(rep.rates.windows(2).all(|w| w[0] == w[1]));
        assert!(rep.semicontinuity_flags.is_empty());
        let rep = birkhoff_field(&c, &h, 0.6, 0.25, 0.1, 24).unwrap();
        assert!(rep.rates.iter().all(|&r| r == Some(1)));
    }

    #[test]
    fn continuity_examples() {
        let base = Arc::new(interval_net(4, 1.0).unwrap());
        let thetas = [0.0, 0.2, 0.4];
        let sec = vec![vec![vec![0.0, 0.2, 0.1, 0.3]; 3]];
        let c = MetricField::constant(base.clone(), &thetas).unwrap();
        let rep = field_continuity_check(&c, &sec, 1e-12).unwrap();
        assert!(rep.values[0].windows(2).all(|w| w[0] == w[1]));
        let s = MetricField::scaled(&base, &thetas, |t| 1.0 + t).unwrap();
        let rep = field_continuity_check(&s, &sec, 1e-12).unwrap();
        for (i, t) in thetas.iter().enumerate() {
            assert!((rep.values[0][i] - rep.values[0][0] / (1.0 + t)).abs() < 1e-12);
        }
        assert!(rep.constant_section_violation <= 1e-12);
        assert!(rep.semicontinuity_flags.is_empty());
    }

    #[test]
    fn retraction_lands_in_the_target_ball() {
        let base = interval_net(5, 1.0).unwrap();
        let src = base.scaled(1.4).unwrap();
        let f = vec![0.7, 0.35, 0.0, -0.35, -0.7];
        assert!(in_lipschitz_ball(&src, &f, 0.7, 1e-12));
        let g = retract(&f, 1.4, 0.7);
        assert!(in_lipschitz_ball(&base, &g, 0.7, 1e-12));
    }
}
