//! Fast invariant suite run by the `check` scenario.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::config::TOL;
use crate::distances::{gh_distance, intertwining_gap, SearchBudget, SimplexNet};
use crate::dynamics::{birkhoff_rate, rotation};
use crate::error::Result;
use crate::fields::{lipschitz_envelope, wave_metric_field, MetricField, WaveProfile};
use crate::lipgeometry::{in_lipschitz_ball, mcshane_clip, nucleus_net, Nucleus};
use crate::markov::{cantor_net, kernel_from_maps, stationary_measures, two_contractions};
use crate::metric_space::{check_axioms, circle_net, interval_net, FiniteMetricSpace};
use crate::transport::{wasserstein1, wasserstein1_dual, wasserstein_inf, Measure};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub seed: u64,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

fn random_space(rng: &mut Xoshiro256PlusPlus, n: usize) -> Result<Arc<FiniteMetricSpace>> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let dist = pts
        .iter()
        .map(|a| pts.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
        .collect();
    Ok(Arc::new(FiniteMetricSpace::new((0..n).map(|i| i.to_string()).collect(), dist)?))
}

fn random_measure(rng: &mut Xoshiro256PlusPlus, x: &Arc<FiniteMetricSpace>) -> Result<Measure> {
    let w: Vec<f64> = (0..x.len()).map(|_| rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    Measure::new(Arc::clone(x), w.iter().map(|v| v / s).collect())
}

fn generated_nets_are_metrics(_: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let spaces = [interval_net(7, 3.0)?, circle_net(9, 2.0)?, cantor_net(4)?];
    let bad: usize = spaces.iter().map(|x| check_axioms(&x.matrix(), TOL.metric).violations.len()).sum();
    Ok((bad == 0, format!("{bad} axiom violations")))
}

fn transport_duality(rng: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let n = rng.random_range(2..=9);
        let x = random_space(rng, n)?;
        let (a, b) = (random_measure(rng, &x)?, random_measure(rng, &x)?);
        let (p, _) = wasserstein1(&a, &b)?;
        let (d, _) = wasserstein1_dual(&a, &b)?;
        worst = worst.max((p - d).abs());
    }
    Ok((worst <= TOL.duality, format!("max |primal − dual| = {worst:.3e}")))
}

fn transport_metric(rng: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let x = random_space(rng, 6)?;
        let m: Vec<Measure> = (0..3).map(|_| random_measure(rng, &x)).collect::<Result<_>>()?;
        let d = |i: usize, j: usize| wasserstein1(&m[i], &m[j]).map(|r| r.0);
        worst = worst.max(d(0, 2)? - d(0, 1)? - d(1, 2)?);
        worst = worst.max(d(0, 1)? - wasserstein_inf(&m[0], &m[1])?);
    }
    Ok((worst <= 1e-7, format!("largest triangle or W₁ ≤ W∞ excess {worst:.3e}")))
}

fn gh_two_points(rng: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (d1, d2) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let x = FiniteMetricSpace::new(vec!["a".into(), "b".into()], vec![vec![0.0, d1], vec![d1, 0.0]])?;
        let y = FiniteMetricSpace::new(vec!["a".into(), "b".into()], vec![vec![0.0, d2], vec![d2, 0.0]])?;
        worst = worst.max((gh_distance(&x, &y).value - (d1 - d2).abs() / 2.0).abs());
    }
    Ok((worst <= 1e-12, format!("max error {worst:.3e}")))
}

fn mcshane_projects(rng: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let x = random_space(rng, 7)?;
    let r = x.radius();
    let mut bad = 0;
    for _ in 0..50 {
        let q: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = mcshane_clip(&x, &q, r);
        if !in_lipschitz_ball(&x, &f, r, TOL.lipschitz) || mcshane_clip(&x, &f, r) != f {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} of 50 projections not idempotent members")))
}

fn nucleus_density(rng: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let x = Arc::new(interval_net(4, 1.0)?);
    let nuc: Nucleus = nucleus_net(&x, 0.5, 0.25)?;
    let probed = nuc.probe_density(200, rng.random());
    Ok((probed <= nuc.density() + 1e-12, format!("{} functions, probed density {probed:.4} vs {:.4}", nuc.len(), nuc.density())))
}

fn birkhoff_periodic(_: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let x = Arc::new(circle_net(6, 1.0)?);
    let h = rotation(&x, 1)?;
    let nuc = nucleus_net(&x, 0.5, 0.2)?;
    let rep = birkhoff_rate(&h, &nuc, 0.1, 36)?;
    let worst = (1..=6).map(|k| rep.deviation(6 * k)).fold(0.0, f64::max);
    Ok((worst == 0.0 && rep.rate.is_some(), format!("max deviation at full periods {worst:e}, rate {:?}", rep.rate)))
}

fn stationary_invariance(_: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let x = Arc::new(cantor_net(3)?);
    let k = kernel_from_maps(&two_contractions(&x)?);
    let st = stationary_measures(&k)?;
    let mut worst: f64 = 0.0;
    for mu in &st {
        let moved = k.act(mu)?;
        worst = moved.weights().iter().zip(mu.weights()).fold(worst, |w, (a, b)| w.max((a - b).abs()));
    }
    Ok((st.len() == 1 && worst <= TOL.invariance, format!("{} stationary measures, drift {worst:.3e}", st.len())))
}

fn wave_sandwich(_: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let p = WaveProfile::default_pluck();
    let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
    let ts = [0.0, 0.7, 1.4, 2.1];
    let field: MetricField = wave_metric_field(&p, &ts, &xs)?;
    let env = lipschitz_envelope(&field)?;
    let flat = wave_metric_field(&WaveProfile::new(vec![0.0; 4], 1.0, std::f64::consts::PI)?, &ts, &xs)?;
    let euclid = flat
        .fibres()
        .iter()
        .all(|f| (0..xs.len()).all(|i| (0..xs.len()).all(|j| f.d(i, j) == (xs[i] - xs[j]).abs())));
    Ok((
        env.sandwich_violation <= 1e-9 && euclid,
        format!("sandwich violation {:.3e}, flat profile Euclidean: {euclid}", env.sandwich_violation),
    ))
}

fn gap_quasi_triangle(rng: &mut Xoshiro256PlusPlus) -> Result<(bool, String)> {
    let nets: Vec<SimplexNet> = (0..3)
        .map(|_| {
            let n = rng.random_range(2..=3);
            SimplexNet::grid(random_space(rng, n)?, 2)
        })
        .collect::<Result<_>>()?;
    let b = SearchBudget::default();
    let g = |i: usize, j: usize| intertwining_gap(&nets[i], &nets[j], &b).map(|r| r.gamma);
    let slack = 2.0 * nets.iter().map(|n| n.density()).fold(0.0, f64::max);
    let lhs = g(0, 2)?;
    let rhs = 2.0 * (g(0, 1)? + g(1, 2)?) + slack;
    Ok((lhs <= rhs + 1e-12, format!("γ(X,Z) = {lhs:.4} ≤ {rhs:.4}")))
}

type Check = fn(&mut Xoshiro256PlusPlus) -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 10] = [
    ("generated nets satisfy the metric axioms", generated_nets_are_metrics),
    ("transport primal equals dual", transport_duality),
    ("W1 is a metric below W-infinity", transport_metric),
    ("GH distance of two-point spaces", gh_two_points),
    ("McShane clipping is an idempotent projection", mcshane_projects),
    ("nucleus net density certificate", nucleus_density),
    ("Birkhoff deviation vanishes at full periods", birkhoff_periodic),
    ("stationary measure is invariant", stationary_invariance),
    ("wave field bi-Lipschitz sandwich", wave_sandwich),
    ("intertwining gap quasi-triangle", gap_quasi_triangle),
];

/// Runs every check; each one gets its own stream derived from `seed`.
pub fn run(seed: u64) -> SelfCheckReport {
    let checks: Vec<CheckResult> = CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed.wrapping_add(i as u64));
            match f(&mut rng) {
                Ok((passed, detail)) => CheckResult { name, passed, detail },
                Err(e) => CheckResult {
                    name,
                    passed: false,
                    detail: format!("error: {e}"),
                },
            }
        })
        .collect();
    SelfCheckReport {
        seed,
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn suite_passes_for_several_seeds() {
        for seed in [0, 1, 42] {
            let rep = super::run(seed);
            for c in &rep.checks {
                assert!(c.passed, "{}: {}", c.name, c.detail);
            }
        }
    }
}
