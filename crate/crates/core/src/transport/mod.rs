//! Probability measures on finite metric spaces and optimal transport between them.
//!
//! `wasserstein1` solves the primal transportation problem; `wasserstein1_dual`
//! solves the Kantorovich–Rubinstein dual as a separate LP and checks the gap.

mod dual;
mod flow;
mod simplex;

use std::sync::Arc;

use serde::Serialize;

use crate::config::{LIMITS, TOL};
use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    space: Arc<FiniteMetricSpace>,
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(space: Arc<FiniteMetricSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::arg(format!(
                "{} weights for a space of {} points",
                weights.len(),
                space.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::arg(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > TOL.mass {
            return Err(Error::arg(format!("weights sum to {total}, not 1")));
        }
        Ok(Measure { space, weights })
    }

    pub(crate) fn from_parts(space: Arc<FiniteMetricSpace>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(space.len(), weights.len());
        Measure { space, weights }
    }

    pub fn dirac(space: Arc<FiniteMetricSpace>, point: usize) -> Result<Self> {
        if point >= space.len() {
            return Err(Error::arg(format!("point {point} out of bounds")));
        }
        let mut weights = vec![0.0; space.len()];
        weights[point] = 1.0;
        Ok(Measure { space, weights })
    }

    pub fn uniform(space: Arc<FiniteMetricSpace>) -> Self {
        let n = space.len();
        Measure {
            weights: vec![1.0 / n as f64; n],
            space,
        }
    }

    /// Uniform measure on a nonempty set of points.
    pub fn uniform_on(space: Arc<FiniteMetricSpace>, points: &[usize]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut weights = vec![0.0; space.len()];
        for &p in points {
            if p >= space.len() {
                return Err(Error::arg(format!("point {p} out of bounds")));
            }
            weights[p] += 1.0 / points.len() as f64;
        }
        Ok(Measure { space, weights })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// `∫ f dμ` for values `f` indexed by points.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Pushforward `μ ∘ h⁻¹` by a self-map of the space.
    pub fn pushforward(&self, h: &[usize]) -> Result<Measure> {
        pushforward(self, h)
    }
}

pub(crate) fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> bool {
    Arc::ptr_eq(a, b) || a.same_as(b)
}

fn check_pair(mu: &Measure, nu: &Measure) -> Result<()> {
    if same_space(&mu.space, &nu.space) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// Transport plan over `X × X`, stored densely row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    pub n: usize,
    pub plan: Vec<f64>,
}

impl Coupling {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.n + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.plan[i * self.n..(i + 1) * self.n].iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn cost(&self, x: &FiniteMetricSpace) -> f64 {
        let mut c = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                c += self.get(i, j) * x.d(i, j);
            }
        }
        c
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.plan[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }
}

/// A function on the points, with its Lipschitz seminorm as certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Potential {
    pub values: Vec<f64>,
    pub lipschitz: f64,
}

fn seminorm(x: &FiniteMetricSpace, f: &[f64]) -> f64 {
    let mut l: f64 = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            l = l.max((f[i] - f[j]).abs() / x.d(i, j));
        }
    }
    l
}

struct Residual {
    rows: Vec<usize>,
    cols: Vec<usize>,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Mass shared by both measures stays in place; only the excess moves.
fn residual(a: &[f64], b: &[f64]) -> Residual {
    let mut r = Residual {
        rows: Vec::new(),
        cols: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
    };
    for i in 0..a.len() {
        let diff = a[i] - b[i];
        if diff > 0.0 {
            r.rows.push(i);
            r.a.push(diff);
        } else if diff < 0.0 {
            r.cols.push(i);
            r.b.push(-diff);
        }
    }
    r
}

/// Exact W₁ between weight vectors on `x`, with a coupling and a Kantorovich potential.
pub(crate) fn w1_full(x: &FiniteMetricSpace, a: &[f64], b: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = x.len();
    let mut plan = vec![0.0; n * n];
    for i in 0..n {
        plan[i * n + i] = a[i].min(b[i]);
    }
    let r = residual(a, b);
    let moved: f64 = r.a.iter().sum();
    if r.rows.is_empty() || r.cols.is_empty() || moved <= 1e-15 {
        return Ok((0.0, plan, vec![0.0; n]));
    }
    let sol = simplex::solve(&r.a, &r.b, |i, j| x.d(r.rows[i], r.cols[j]))?;
    for &(i, j, f) in &sol.basis {
        plan[r.rows[i] * n + r.cols[j]] += f;
    }
    // c-transform of the column potentials: 1-Lipschitz and optimal.
    let pot: Vec<f64> = (0..n)
        .map(|p| {
            r.cols
                .iter()
                .zip(&sol.v)
                .map(|(&c, &vj)| x.d(p, c) - vj)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok((sol.cost, plan, pot))
}

/// Exact W₁ value between weight vectors on `x`.
pub fn w1(x: &FiniteMetricSpace, a: &[f64], b: &[f64]) -> Result<f64> {
    let r = residual(a, b);
    if r.rows.is_empty() || r.cols.is_empty() || r.a.iter().sum::<f64>() <= 1e-15 {
        return Ok(0.0);
    }
    if r.rows.len() == 1 || r.cols.len() == 1 {
        // One side is a single point: the coupling is forced.
        let v = if r.rows.len() == 1 {
            let s: f64 = r.b.iter().sum();
            r.cols.iter().zip(&r.b).map(|(&c, &w)| w * x.d(r.rows[0], c)).sum::<f64>() * r.a[0] / s
        } else {
            let s: f64 = r.a.iter().sum();
            r.rows.iter().zip(&r.a).map(|(&c, &w)| w * x.d(r.cols[0], c)).sum::<f64>() * r.b[0] / s
        };
        return Ok(v);
    }
    Ok(simplex::solve(&r.a, &r.b, |i, j| x.d(r.rows[i], r.cols[j]))?.cost)
}

/// Exact 1-Wasserstein distance with an optimal coupling.
pub fn wasserstein1(mu: &Measure, nu: &Measure) -> Result<(f64, Coupling)> {
    check_pair(mu, nu)?;
    let (value, plan, _) = w1_full(&mu.space, &mu.weights, &nu.weights)?;
    Ok((value, Coupling { n: mu.space.len(), plan }))
}

/// Primal value together with the potential recovered from the optimal basis.
pub fn wasserstein1_with_potential(mu: &Measure, nu: &Measure) -> Result<(f64, Coupling, Potential)> {
    check_pair(mu, nu)?;
    let x = &mu.space;
    let (value, plan, values) = w1_full(x, &mu.weights, &nu.weights)?;
    let lipschitz = seminorm(x, &values);
    Ok((value, Coupling { n: x.len(), plan }, Potential { values, lipschitz }))
}

/// Kantorovich–Rubinstein dual: `max ∫f dμ − ∫f dν` over 1-Lipschitz `f`.
///
/// Solved as its own LP on the support of `μ − ν`, extended to the whole space
/// by the McShane formula, then checked against the primal value.
pub fn wasserstein1_dual(mu: &Measure, nu: &Measure) -> Result<(f64, Potential)> {
    check_pair(mu, nu)?;
    let x = &mu.space;
    let n = x.len();
    let diff: Vec<f64> = mu.weights.iter().zip(&nu.weights).map(|(a, b)| a - b).collect();
    let k: Vec<usize> = (0..n).filter(|&i| diff[i] != 0.0).collect();
    let values = if k.len() < 2 {
        vec![0.0; n]
    } else {
        let nk = k.len();
        let diam = k
            .iter()
            .flat_map(|&i| k.iter().map(move |&j| (i, j)))
            .map(|(i, j)| x.d(i, j))
            .fold(0.0, f64::max);
        // g = f + diam >= 0, g_p - g_q <= d(p, q), g <= 2 diam
        let mut rows = Vec::with_capacity(nk * nk);
        let mut rhs = Vec::with_capacity(nk * nk);
        for p in 0..nk {
            for q in 0..nk {
                if p != q {
                    let mut row = vec![0.0; nk];
                    row[p] = 1.0;
                    row[q] = -1.0;
                    rows.push(row);
                    rhs.push(x.d(k[p], k[q]));
                }
            }
            let mut row = vec![0.0; nk];
            row[p] = 1.0;
            rows.push(row);
            rhs.push(2.0 * diam);
        }
        let c: Vec<f64> = k.iter().map(|&i| diff[i]).collect();
        let (g, _) = dual::lp_max(&c, &rows, &rhs)?;
        let shift = g[0];
        (0..n)
            .map(|p| {
                k.iter()
                    .zip(&g)
                    .map(|(&kk, &gk)| gk - shift + x.d(p, kk))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    };
    let value = mu.integrate(&values) - nu.integrate(&values);
    let lipschitz = seminorm(x, &values);
    let primal = w1(x, &mu.weights, &nu.weights)?;
    let gap = (value - primal).abs();
    if gap > TOL.duality {
        return Err(Error::DualityGap { gap, tol: TOL.duality });
    }
    Ok((value, Potential { values, lipschitz }))
}

/// ∞-Wasserstein distance: the least `t` admitting a coupling that moves no mass farther than `t`.
pub fn wasserstein_inf(mu: &Measure, nu: &Measure) -> Result<f64> {
    check_pair(mu, nu)?;
    let x = &mu.space;
    let rows = mu.support();
    let cols = nu.support();
    let mut cands: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
        .map(|(i, j)| x.d(i, j))
        .collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible_within(x, mu, nu, &rows, &cols, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cands[lo])
}

fn feasible_within(x: &FiniteMetricSpace, mu: &Measure, nu: &Measure, rows: &[usize], cols: &[usize], t: f64) -> bool {
    let (m, k) = (rows.len(), cols.len());
    let nodes = m + k + 2;
    let (s, sink) = (m + k, m + k + 1);
    let mut cap = vec![vec![0.0; nodes]; nodes];
    for (a, &i) in rows.iter().enumerate() {
        cap[s][a] = mu.weights[i];
        for (b, &j) in cols.iter().enumerate() {
            if x.d(i, j) <= t {
                cap[a][m + b] = 2.0;
            }
        }
    }
    for (b, &j) in cols.iter().enumerate() {
        cap[m + b][sink] = nu.weights[j];
    }
    let need = rows.iter().map(|&i| mu.weights[i]).sum::<f64>().min(cols.iter().map(|&j| nu.weights[j]).sum());
    flow::max_flow(cap, s, sink, 1e-15) >= need - TOL.coupling
}

/// Pushforward of `mu` by a self-map `h` of its space.
pub fn pushforward(mu: &Measure, h: &[usize]) -> Result<Measure> {
    pushforward_into(mu, Arc::clone(&mu.space), h)
}

/// Pushforward of `mu` by a map into another space.
pub fn pushforward_into(mu: &Measure, target: Arc<FiniteMetricSpace>, h: &[usize]) -> Result<Measure> {
    if h.len() != mu.space.len() {
        return Err(Error::arg("map must be defined on every point"));
    }
    let mut weights = vec![0.0; target.len()];
    for (i, &hi) in h.iter().enumerate() {
        if hi >= target.len() {
            return Err(Error::arg(format!("map sends {i} to {hi}, out of bounds")));
        }
        weights[hi] += mu.weights[i];
    }
    Ok(Measure { space: target, weights })
}

/// Pointwise convex combination.
pub fn mix(measures: &[Measure], lambdas: &[f64]) -> Result<Measure> {
    if measures.is_empty() || measures.len() != lambdas.len() {
        return Err(Error::arg("need one weight per measure"));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) || (lambdas.iter().sum::<f64>() - 1.0).abs() > TOL.mass {
        return Err(Error::arg("mixing weights are not convex"));
    }
    let space = &measures[0].space;
    if measures.iter().any(|m| !same_space(&m.space, space)) {
        return Err(Error::SpaceMismatch);
    }
    let mut weights = vec![0.0; space.len()];
    for (m, &l) in measures.iter().zip(lambdas) {
        for (w, &mw) in weights.iter_mut().zip(&m.weights) {
            *w += l * mw;
        }
    }
    Ok(Measure {
        space: Arc::clone(space),
        weights,
    })
}

/// Number of ways to write `m` as an ordered sum of `k` nonnegative integers.
pub fn multiset_count(k: usize, m: usize) -> u128 {
    if k == 0 {
        return u128::from(m == 0);
    }
    // C(m + k - 1, k - 1), saturating on overflow.
    let (top, r) = ((m + k - 1) as u128, (k - 1).min(m) as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All count vectors of length `k` summing to `m`, first coordinate descending.
pub(crate) fn compositions(k: usize, m: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for c in (0..=left).rev() {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, out);
        }
    }
    if k > 0 {
        rec(0, m as u32, &mut cur, &mut out);
    }
    out
}

/// A finite family of measures with a W₁ covering radius for what it approximates.
#[derive(Debug, Clone)]
pub struct ProbNet {
    pub measures: Vec<Measure>,
    /// Every target measure lies within this W₁ distance of some member.
    pub density: f64,
    pub resolution: usize,
}

/// All measures with weights in `{0, 1/m, ..., 1}`.
///
/// Largest-remainder rounding moves total mass at most `⌊|X|/2⌋/m`, so the
/// density is `diam · min(1, ⌊|X|/2⌋ / m)`.
pub fn prob_net(x: &Arc<FiniteMetricSpace>, m: usize) -> Result<ProbNet> {
    prob_net_with_cap(x, m, LIMITS.prob_net_cap)
}

pub fn prob_net_with_cap(x: &Arc<FiniteMetricSpace>, m: usize, cap: usize) -> Result<ProbNet> {
    if m == 0 {
        return Err(Error::arg("resolution m must be at least 1"));
    }
    let k = x.len();
    let needed = multiset_count(k, m);
    if needed > cap as u128 {
        return Err(Error::SizeCap {
            what: "prob_net (use a coarser m or a support subset)",
            needed,
            cap,
        });
    }
    let measures = compositions(k, m)
        .into_iter()
        .map(|c| Measure::from_parts(Arc::clone(x), c.iter().map(|&v| v as f64 / m as f64).collect()))
        .collect();
    Ok(ProbNet {
        measures,
        density: grid_density(x.diameter(), k, m),
        resolution: m,
    })
}

pub(crate) fn grid_density(diam: f64, k: usize, m: usize) -> f64 {
    diam * (((k / 2) as f64) / m as f64).min(1.0)
}

/// Grid mixtures of the given measures: a net of their convex hull.
pub fn hull_net(extremes: &[Measure], m: usize) -> Result<ProbNet> {
    hull_net_with_cap(extremes, m, LIMITS.prob_net_cap)
}

pub fn hull_net_with_cap(extremes: &[Measure], m: usize, cap: usize) -> Result<ProbNet> {
    if extremes.is_empty() {
        return Err(Error::EmptySubset);
    }
    if m == 0 {
        return Err(Error::arg("resolution m must be at least 1"));
    }
    let k = extremes.len();
    let needed = multiset_count(k, m);
    if needed > cap as u128 {
        return Err(Error::SizeCap {
            what: "hull_net",
            needed,
            cap,
        });
    }
    let mut spread: f64 = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            spread = spread.max(w1(&extremes[0].space, &extremes[a].weights, &extremes[b].weights)?);
        }
    }
    let measures = compositions(k, m)
        .into_iter()
        .map(|c| {
            let l: Vec<f64> = c.iter().map(|&v| v as f64 / m as f64).collect();
            mix(extremes, &l)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbNet {
        measures,
        density: grid_density(spread, k, m),
        resolution: m,
    })
}

/// Pairwise W₁ matrix of a family of measures, computed in parallel.
pub fn w1_matrix(measures: &[Measure]) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    if measures.is_empty() {
        return Ok(Vec::new());
    }
    let space = &measures[0].space;
    if measures.iter().any(|m| !same_space(&m.space, space)) {
        return Err(Error::SpaceMismatch);
    }
    let n = measures.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| if j <= i { Ok(0.0) } else { w1(space, &measures[i].weights, &measures[j].weights) })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = rows;
    for i in 0..n {
        for j in 0..i {
            out[i][j] = out[j][i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_space::{circle_net, interval_net, validate_metric};
    use proptest::prelude::*;

    fn line3() -> Arc<FiniteMetricSpace> {
        Arc::new(interval_net(3, 2.0).unwrap())
    }

    fn m(x: &Arc<FiniteMetricSpace>, w: &[f64]) -> Measure {
        Measure::new(x.clone(), w.to_vec()).unwrap()
    }

    #[test]
    fn dirac_pairs() {
        let x = line3();
        let (v, c) = wasserstein1(&m(&x, &[1.0, 0.0, 0.0]), &m(&x, &[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(c.get(0, 2), 1.0);
        let mu = m(&x, &[0.2, 0.3, 0.5]);
        assert_eq!(wasserstein1(&mu, &mu).unwrap().0, 0.0);
        assert_eq!(wasserstein_inf(&mu, &mu).unwrap(), 0.0);
    }

    #[test]
    fn dual_examples() {
        let x = line3();
        let (v, p) = wasserstein1_dual(&m(&x, &[1.0, 0.0, 0.0]), &m(&x, &[0.0, 0.0, 1.0])).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // attaining potentials differ from f(x) = x by a constant
        assert!((p.values[0] - p.values[2] - 2.0).abs() < 1e-12);
        assert!(p.lipschitz <= 1.0 + 1e-9);
        let mu = m(&x, &[0.2, 0.3, 0.5]);
        let (v, p) = wasserstein1_dual(&mu, &mu).unwrap();
        assert_eq!(v, 0.0);
        assert!(p.values.iter().all(|&f| f == p.values[0]));
    }

    #[test]
    fn winf_example() {
        let x = line3();
        let v = wasserstein_inf(&m(&x, &[0.5, 0.5, 0.0]), &m(&x, &[0.0, 0.5, 0.5])).unwrap();
        assert_eq!(v, 1.0);
        let v = wasserstein_inf(&m(&x, &[1.0, 0.0, 0.0]), &m(&x, &[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn mismatched_spaces() {
        let a = line3();
        let b = Arc::new(circle_net(3, 3.0).unwrap());
        let e = wasserstein1(&Measure::uniform(a), &Measure::uniform(b)).unwrap_err();
        assert_eq!(e, Error::SpaceMismatch);
    }

    #[test]
    fn pushforward_examples() {
        let x = line3();
        let mu = m(&x, &[0.3, 0.7, 0.0]);
        assert_eq!(pushforward(&mu, &[0, 1, 2]).unwrap(), mu);
        let merged = pushforward(&mu, &[2, 2, 2]).unwrap();
        assert_eq!(merged.weights(), &[0.0, 0.0, 1.0]);
        let d = Measure::dirac(x.clone(), 0).unwrap();
        assert_eq!(pushforward(&d, &[1, 0, 2]).unwrap(), Measure::dirac(x, 1).unwrap());
    }

    #[test]
    fn prob_net_examples() {
        let single = Arc::new(validate_metric(vec![vec![0.0]]).unwrap());
        assert_eq!(prob_net(&single, 3).unwrap().measures.len(), 1);
        let two = Arc::new(interval_net(2, 1.0).unwrap());
        let net = prob_net(&two, 2).unwrap();
        let w: Vec<Vec<f64>> = net.measures.iter().map(|m| m.weights().to_vec()).collect();
        assert_eq!(w, vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
        let three = line3();
        assert_eq!(prob_net(&three, 1).unwrap().measures.len(), 3);
        let big = Arc::new(circle_net(30, 1.0).unwrap());
        assert!(matches!(prob_net(&big, 10), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn grid_density_is_attained_bound() {
        // uniform on 10 points is at TV distance 0.8 from every 2-point grid measure
        assert!((grid_density(1.0, 10, 2) - 1.0).abs() < 1e-15);
        assert!((grid_density(2.0, 4, 4) - 1.0).abs() < 1e-15);
        assert!((grid_density(2.0, 3, 4) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mix_examples() {
        let x = line3();
        let a = Measure::dirac(x.clone(), 0).unwrap();
        let b = Measure::dirac(x.clone(), 2).unwrap();
        assert_eq!(mix(std::slice::from_ref(&a), &[1.0]).unwrap(), a);
        assert_eq!(mix(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap().weights(), &[0.5, 0.0, 0.5]);
        assert!(mix(&[a, b], &[0.7, 0.7]).is_err());
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multiset_count(2, 2), 3);
        assert_eq!(multiset_count(4, 4), 35);
        assert_eq!(multiset_count(1, 9), 1);
        assert_eq!(compositions(4, 4).len(), 35);
    }

    fn arb_measure(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0u32..5, n).prop_filter_map("nonzero", |v| {
            let s: u32 = v.iter().sum();
            (s > 0).then(|| v.iter().map(|&c| c as f64 / s as f64).collect())
        })
    }

    fn arb_space() -> impl Strategy<Value = Arc<FiniteMetricSpace>> {
        prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..8).prop_filter_map("distinct", |pts| {
            let n = pts.len();
            let d: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1)).collect())
                .collect();
            validate_metric(d).ok().map(Arc::new)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn duality_and_feasibility(x in arb_space(), seed_a in arb_measure(8), seed_b in arb_measure(8)) {
            let n = x.len();
            let norm = |v: &[f64]| {
                let s: f64 = v[..n].iter().sum();
                if s == 0.0 { let mut u = vec![0.0; n]; u[0] = 1.0; u } else { v[..n].iter().map(|w| w / s).collect::<Vec<_>>() }
            };
            let mu = Measure::new(x.clone(), norm(&seed_a)).unwrap();
            let nu = Measure::new(x.clone(), norm(&seed_b)).unwrap();
            let (p, c) = wasserstein1(&mu, &nu).unwrap();
            let (d, pot) = wasserstein1_dual(&mu, &nu).unwrap();
            prop_assert!((p - d).abs() <= 1e-7);
            prop_assert!(pot.lipschitz <= 1.0 + 1e-9);
            prop_assert!((c.cost(&x) - p).abs() <= 1e-9);
            for (r, w) in c.row_sums().iter().zip(mu.weights()) { prop_assert!((r - w).abs() <= 1e-9); }
            for (r, w) in c.col_sums().iter().zip(nu.weights()) { prop_assert!((r - w).abs() <= 1e-9); }
            let (p2, _, pot2) = wasserstein1_with_potential(&mu, &nu).unwrap();
            prop_assert!((mu.integrate(&pot2.values) - nu.integrate(&pot2.values) - p2).abs() <= 1e-9);
            prop_assert!(pot2.lipschitz <= 1.0 + 1e-9);
            prop_assert!(p <= wasserstein_inf(&mu, &nu).unwrap() + 1e-9);
        }

        #[test]
        fn lipschitz_pushforward_contracts(seed_a in arb_measure(6), seed_b in arb_measure(6), h in prop::collection::vec(0usize..6, 6)) {
            // every self-map of the 6-cycle that moves neighbours to neighbours-or-equal is 1-Lipschitz
            let x = Arc::new(circle_net(6, 6.0).unwrap());
            let lip = (0..6).all(|i| (0..6).all(|j| x.d(h[i], h[j]) <= x.d(i, j) + 1e-12));
            let mu = Measure::new(x.clone(), seed_a).unwrap();
            let nu = Measure::new(x.clone(), seed_b).unwrap();
            let before = wasserstein1(&mu, &nu).unwrap().0;
            let after = wasserstein1(&pushforward(&mu, &h).unwrap(), &pushforward(&nu, &h).unwrap()).unwrap().0;
            if lip {
                prop_assert!(after <= before + 1e-7);
            }
            let l = mix(&[mu.clone(), nu.clone()], &[0.5, 0.5]).unwrap();
            let lhs = pushforward(&l, &h).unwrap();
            let rhs = mix(&[pushforward(&mu, &h).unwrap(), pushforward(&nu, &h).unwrap()], &[0.5, 0.5]).unwrap();
            for (a, b) in lhs.weights().iter().zip(rhs.weights()) { prop_assert!((a - b).abs() < 1e-15); }
        }
    }
}
