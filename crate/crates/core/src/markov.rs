//! Random walks driven by random families of maps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::TOL;
use crate::dynamics::DynMap;
use crate::error::{Error, Result};
use crate::lipgeometry::Nucleus;
use crate::metric_space::{epsilon_net_from, FiniteMetricSpace};
use crate::transport::{same_space, Measure};

/// Row-stochastic transition matrix on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    space: Arc<FiniteMetricSpace>,
    rows: Vec<Vec<f64>>,
}

impl MarkovKernel {
    pub fn new(space: Arc<FiniteMetricSpace>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::arg("kernel must be square over the space"));
        }
        for (x, r) in rows.iter().enumerate() {
            if r.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::arg(format!("row {x} has a negative or non-finite entry")));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > TOL.stochastic {
                return Err(Error::arg(format!("row {x} sums to {s}")));
            }
        }
        Ok(MarkovKernel { space, rows })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// `μP`.
    pub fn act(&self, mu: &Measure) -> Result<Measure> {
        if !same_space(mu.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        let n = self.space.len();
        let mut out = vec![0.0; n];
        for (x, &w) in mu.weights().iter().enumerate() {
            if w != 0.0 {
                for (o, &p) in out.iter_mut().zip(&self.rows[x]) {
                    *o += w * p;
                }
            }
        }
        Ok(Measure::from_parts(Arc::clone(&self.space), out))
    }
}

/// Maps chosen independently at each step with fixed probabilities.
#[derive(Debug, Clone)]
pub struct RandomMapFamily {
    maps: Vec<DynMap>,
    probabilities: Vec<f64>,
}

impl RandomMapFamily {
    pub fn new(maps: Vec<DynMap>, probabilities: Vec<f64>) -> Result<Self> {
        if maps.is_empty() || maps.len() != probabilities.len() {
            return Err(Error::arg("need one probability per map"));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0)) || (probabilities.iter().sum::<f64>() - 1.0).abs() > TOL.stochastic {
            return Err(Error::arg("probabilities must be convex weights"));
        }
        if maps.iter().any(|m| !same_space(m.space(), maps[0].space())) {
            return Err(Error::SpaceMismatch);
        }
        Ok(RandomMapFamily { maps, probabilities })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        self.maps[0].space()
    }

    pub fn maps(&self) -> &[DynMap] {
        &self.maps
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        inverse_cdf(&self.probabilities, rng.random::<f64>())
    }
}

fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// The 2-adic ultrametric on binary words of length `depth`: distance `2^{1−j}` where
/// `j` is the first position at which two words differ. Labels are the words.
pub fn cantor_net(depth: usize) -> Result<FiniteMetricSpace> {
    if depth == 0 || depth > 12 {
        return Err(Error::arg("depth must be in 1..=12"));
    }
    let n = 1usize << depth;
    let labels = (0..n).map(|i| format!("{i:0depth$b}")).collect();
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let first = (i ^ j).leading_zeros() as usize - (usize::BITS as usize - depth);
                        0.5f64.powi(first as i32)
                    }
                })
                .collect()
        })
        .collect();
    FiniteMetricSpace::new(labels, dist)
}

/// The two half-contractions `w ↦ 0w` and `w ↦ 1w` (dropping the last letter), chosen with probability ½.
pub fn two_contractions(x: &Arc<FiniteMetricSpace>) -> Result<RandomMapFamily> {
    let n = x.len();
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::arg("expected a space built by cantor_net"));
    }
    let half = n / 2;
    let g0 = DynMap::from_table(Arc::clone(x), (0..n).map(|w| w >> 1).collect())?;
    let g1 = DynMap::from_table(Arc::clone(x), (0..n).map(|w| half | (w >> 1)).collect())?;
    RandomMapFamily::new(vec![g0, g1], vec![0.5, 0.5])
}

/// `P[x][y] = Σ_{g(x)=y} prob(g)`.
pub fn kernel_from_maps(family: &RandomMapFamily) -> MarkovKernel {
    let x = family.space();
    let n = x.len();
    let mut rows = vec![vec![0.0; n]; n];
    for (g, &p) in family.maps.iter().zip(&family.probabilities) {
        for (p_x, row) in rows.iter_mut().enumerate() {
            row[g.apply(p_x)] += p;
        }
    }
    MarkovKernel {
        space: Arc::clone(x),
        rows,
    }
}

/// Extreme stationary distributions, one per closed communicating class.
pub fn stationary_measures(kernel: &MarkovKernel) -> Result<Vec<Measure>> {
    let n = kernel.space.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n);
    for _ in 0..n {
        graph.add_node(());
    }
    for x in 0..n {
        for (y, &p) in kernel.rows[x].iter().enumerate() {
            if p > 0.0 {
                graph.add_edge(NodeIndex::new(x), NodeIndex::new(y), ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| c.into_iter().map(NodeIndex::index).collect::<Vec<_>>())
        .filter(|c| {
            let mut inside = vec![false; n];
            c.iter().for_each(|&v| inside[v] = true);
            c.iter().all(|&v| kernel.rows[v].iter().enumerate().all(|(y, &p)| p == 0.0 || inside[y]))
        })
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    classes.sort();
    classes
        .iter()
        .map(|c| {
            let k = c.len();
            // π (P_C − I) = 0 with the last equation replaced by Σπ = 1.
            let mut a = DMatrix::<f64>::zeros(k, k);
            for (i, &u) in c.iter().enumerate() {
                for (j, &v) in c.iter().enumerate() {
                    a[(j, i)] = kernel.rows[u][v] - if i == j { 1.0 } else { 0.0 };
                }
            }
            for i in 0..k {
                a[(k - 1, i)] = 1.0;
            }
            let mut b = DVector::<f64>::zeros(k);
            b[k - 1] = 1.0;
            let pi = a
                .lu()
                .solve(&b)
                .ok_or_else(|| Error::Solver("singular stationary system".into()))?;
            let mut w = vec![0.0; n];
            for (i, &u) in c.iter().enumerate() {
                w[u] = pi[i].max(0.0);
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            Measure::new(Arc::clone(&kernel.space), w)
        })
        .collect()
}

/// Trajectory `x_0, …, x_n`, each step drawn from the current row by inverse CDF.
pub fn simulate(kernel: &MarkovKernel, x0: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || x0 >= kernel.space.len() {
        return Err(Error::arg("need n ≥ 1 and a valid start point"));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n + 1);
    out.push(x0);
    let mut x = x0;
    for _ in 0..n {
        x = inverse_cdf(&kernel.rows[x], rng.random::<f64>());
        out.push(x);
    }
    Ok(out)
}

/// Empirical large-deviation probabilities and a fitted exponential bound.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LdpReport {
    pub eps: f64,
    pub n_values: Vec<usize>,
    pub probabilities: Vec<f64>,
    /// Binomial standard errors `sqrt(p(1−p)/trials)`.
    pub std_errors: Vec<f64>,
    /// `p(n) ≈ c1·exp(−c2·n·ε²)`, fitted on the nonzero probabilities.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: Option<f64>,
    pub trials: usize,
    /// Number of point-mass traces in the `ε/4`-net.
    pub trace_net_size: usize,
    /// `None` when the whole Lipschitz ball was used.
    pub nucleus_size: Option<usize>,
    pub warnings: Vec<String>,
}

impl LdpReport {
    /// True when no probability exceeds an earlier one by more than `z` combined standard errors.
    pub fn monotone_within(&self, z: f64) -> bool {
        let p = &self.probabilities;
        let s = &self.std_errors;
        (0..p.len()).all(|i| (i + 1..p.len()).all(|j| p[j] <= p[i] + z * (s[i].powi(2) + s[j].powi(2)).sqrt()))
    }
}

/// Least-squares line `y = a + b·x`, with its coefficient of determination.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let k = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((a, b, r2))
}

fn trial_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Observables whose ergodic averages are tested for deviation.
#[derive(Debug, Clone, Copy)]
pub enum DeviationClass<'a> {
    /// Every member of a finite nucleus.
    Nucleus(&'a Nucleus),
    /// The whole ball `{f : ‖f‖_∞ ≤ r, f 1-Lipschitz}` with `r ≥ radius(X)`. Its supremum
    /// `sup_f |∫f d(e − ν)|` equals `W₁(e, ν)` and is computed that way.
    LipschitzBall { r: f64 },
}

/// Probability, over random map sequences, that some nucleus function and some trace
/// in the `ε/4`-net of point masses deviate from the stationary mean by more than `ε`.
///
/// All traces in the net are driven by the same map sequence within a trial.
pub fn ldp_experiment(
    family: &RandomMapFamily,
    nucleus: &Nucleus,
    eps: f64,
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<LdpReport> {
    ldp_experiment_with(family, DeviationClass::Nucleus(nucleus), eps, n_values, trials, seed)
}

pub fn ldp_experiment_with(
    family: &RandomMapFamily,
    class: DeviationClass<'_>,
    eps: f64,
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<LdpReport> {
    if !(eps > 0.0) || trials == 0 || n_values.is_empty() || n_values.contains(&0) {
        return Err(Error::arg("need eps > 0, trials ≥ 1 and positive n values"));
    }
    let x = family.space();
    match class {
        DeviationClass::Nucleus(nuc) if !same_space(x, nuc.space()) => return Err(Error::SpaceMismatch),
        DeviationClass::LipschitzBall { r } if r < x.radius() - TOL.metric => {
            return Err(Error::Precondition(format!("r = {r} is below the radius {}", x.radius())))
        }
        _ => {}
    }
    let kernel = kernel_from_maps(family);
    let stationary = stationary_measures(&kernel)?;
    if stationary.len() != 1 {
        return Err(Error::NotUniquelyErgodic {
            extremes: stationary.len(),
        });
    }
    let nu = &stationary[0];
    let warnings: Vec<String> = family
        .maps
        .iter()
        .enumerate()
        .filter_map(|(i, g)| {
            let e = g.lipschitz_excess();
            (e > TOL.lipschitz).then(|| format!("map {i} is not 1-Lipschitz (excess {e:.3e})"))
        })
        .collect();
    let traces = epsilon_net_from(x, eps / 4.0, 0)?.indices().to_vec();
    let funcs: Vec<(&[f64], f64)> = match class {
        DeviationClass::Nucleus(nuc) => nuc.functions().map(|f| (f, nu.integrate(f))).collect(),
        DeviationClass::LipschitzBall { .. } => Vec::new(),
    };
    let exceeds = |c: &[u32], n: usize| -> Result<bool> {
        let nf = n as f64;
        match class {
            DeviationClass::Nucleus(_) => Ok(funcs.iter().any(|(f, mean)| {
                let s: f64 = c.iter().zip(f.iter()).map(|(&k, v)| k as f64 * v).sum();
                (s / nf - mean).abs() > eps
            })),
            DeviationClass::LipschitzBall { .. } => {
                let e: Vec<f64> = c.iter().map(|&k| k as f64 / nf).collect();
                Ok(crate::transport::w1(x, &e, nu.weights())? > eps)
            }
        }
    };
    let mut order: Vec<usize> = (0..n_values.len()).collect();
    order.sort_by_key(|&i| n_values[i]);
    let n_top = *n_values.iter().max().unwrap();
    let npts = x.len();

    let hits: Vec<u32> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<u32>> {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(trial_seed(seed, t));
            let seq: Vec<usize> = (0..n_top).map(|_| family.sample(&mut rng)).collect();
            let mut hit = vec![0u32; n_values.len()];
            let mut counts = vec![vec![0u32; npts]; traces.len()];
            let mut pos = traces.clone();
            let mut step = 0;
            for &oi in &order {
                let n = n_values[oi];
                while step < n {
                    for (c, p) in counts.iter_mut().zip(pos.iter_mut()) {
                        c[*p] += 1;
                        *p = family.maps[seq[step]].apply(*p);
                    }
                    step += 1;
                }
                // Trajectories that have merged share their tail, so many count vectors repeat.
                let mut distinct: Vec<&Vec<u32>> = Vec::new();
                for c in &counts {
                    if !distinct.contains(&c) {
                        distinct.push(c);
                    }
                }
                let mut exceeded = false;
                for c in distinct {
                    if exceeds(c, n)? {
                        exceeded = true;
                        break;
                    }
                }
                hit[oi] = exceeded as u32;
            }
            Ok(hit)
        })
        .try_reduce(
            || vec![0u32; n_values.len()],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )?;

    let tf = trials as f64;
    let probabilities: Vec<f64> = hits.iter().map(|&h| h as f64 / tf).collect();
    let std_errors = probabilities.iter().map(|p| (p * (1.0 - p) / tf).sqrt()).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = n_values
        .iter()
        .zip(&probabilities)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&n, &p)| (n as f64, p.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys);
    Ok(LdpReport {
        eps,
        n_values: n_values.to_vec(),
        probabilities,
        std_errors,
        c1: fit.map(|(a, _, _)| a.exp()),
        c2: fit.map(|(_, b, _)| -b / (eps * eps)),
        r_squared: fit.map(|(_, _, r)| r),
        trials,
        trace_net_size: traces.len(),
        nucleus_size: match class {
            DeviationClass::Nucleus(nuc) => Some(nuc.len()),
            DeviationClass::LipschitzBall { .. } => None,
        },
        warnings,
    })
}
