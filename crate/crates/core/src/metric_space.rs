//! Finite metric spaces standing in for compact ones: constructors, axiom
//! validation, Hausdorff distance, covering numbers and nets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::error::{Error, MetricReport, Result, Violation};

/// How the points of a space sit inside a one-dimensional model, when they do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Embedding {
    Abstract,
    /// Points at arc-length positions on a circle of the given circumference.
    Circle { circumference: f64, coords: Vec<f64> },
    /// Points at positions on the real line.
    Line { coords: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    n: usize,
    embedding: Embedding,
}

impl FiniteMetricSpace {
    /// Validates `dist` against the metric axioms (tolerance 1e-9).
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != dist.len() {
            return Err(Error::arg(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                dist.len(),
                dist.len()
            )));
        }
        let report = check_axioms(&dist, TOL.metric);
        if !report.violations.is_empty() {
            return Err(Error::InvalidMetric(report));
        }
        let n = dist.len();
        let mut flat = Vec::with_capacity(n * n);
        for row in &dist {
            flat.extend_from_slice(row);
        }
        // Symmetrize exactly so later comparisons never see rounding asymmetry.
        for i in 0..n {
            flat[i * n + i] = 0.0;
            for j in i + 1..n {
                let v = 0.5 * (flat[i * n + j] + flat[j * n + i]);
                flat[i * n + j] = v;
                flat[j * n + i] = v;
            }
        }
        Ok(FiniteMetricSpace {
            labels,
            dist: flat,
            n,
            embedding: Embedding::Abstract,
        })
    }

    /// Builds without validation. Callers guarantee the axioms.
    pub(crate) fn from_flat_unchecked(labels: Vec<String>, dist: Vec<f64>, embedding: Embedding) -> Self {
        let n = labels.len();
        debug_assert_eq!(dist.len(), n * n);
        FiniteMetricSpace {
            labels,
            dist,
            n,
            embedding,
        }
    }

    pub fn with_embedding(mut self, embedding: Embedding) -> Result<Self> {
        let len = match &embedding {
            Embedding::Abstract => self.n,
            Embedding::Circle { coords, .. } | Embedding::Line { coords } => coords.len(),
        };
        if len != self.n {
            return Err(Error::arg("embedding has the wrong number of coordinates"));
        }
        self.embedding = embedding;
        Ok(self)
    }

    /// Points on a circle of the given circumference at arbitrary positions,
    /// with the geodesic (arc-length) metric.
    pub fn circle_points(coords: Vec<f64>, circumference: f64) -> Result<Self> {
        if !(circumference > 0.0) || !circumference.is_finite() {
            return Err(Error::arg("circumference must be positive"));
        }
        let coords: Vec<f64> = coords.iter().map(|&c| c.rem_euclid(circumference)).collect();
        let n = coords.len();
        if n == 0 {
            return Err(Error::arg("a space needs at least one point"));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = (coords[i] - coords[j]).abs();
                dist[i * n + j] = d.min(circumference - d);
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        let space = FiniteMetricSpace::from_flat_unchecked(
            labels,
            dist,
            Embedding::Circle {
                circumference,
                coords,
            },
        );
        let report = check_axioms(&space.matrix(), TOL.metric);
        if !report.violations.is_empty() {
            return Err(Error::InvalidMetric(report));
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Half the largest pairwise distance.
    pub fn radius(&self) -> f64 {
        0.5 * self.diameter()
    }

    /// Smallest positive pairwise distance (infinite for a singleton).
    pub fn min_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.n {
            for j in i + 1..self.n {
                m = m.min(self.d(i, j));
            }
        }
        m
    }

    /// Lexicographically first pair attaining the diameter.
    pub fn diameter_pair(&self) -> (usize, usize) {
        let diam = self.diameter();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.d(i, j) == diam {
                    return (i, j);
                }
            }
        }
        (0, 0)
    }

    /// True when both spaces have identical labels and distances.
    pub fn same_as(&self, other: &FiniteMetricSpace) -> bool {
        std::ptr::eq(self, other) || (self.labels == other.labels && self.dist == other.dist)
    }

    /// Restriction of the metric to a subset, in the given index order.
    pub fn subspace(&self, indices: &[usize]) -> Result<FiniteMetricSpace> {
        check_indices(self.n, indices)?;
        let k = indices.len();
        let mut dist = vec![0.0; k * k];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                dist[a * k + b] = self.d(i, j);
            }
        }
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        let embedding = match &self.embedding {
            Embedding::Abstract => Embedding::Abstract,
            Embedding::Circle {
                circumference,
                coords,
            } => Embedding::Circle {
                circumference: *circumference,
                coords: indices.iter().map(|&i| coords[i]).collect(),
            },
            Embedding::Line { coords } => Embedding::Line {
                coords: indices.iter().map(|&i| coords[i]).collect(),
            },
        };
        Ok(FiniteMetricSpace::from_flat_unchecked(labels, dist, embedding))
    }

    /// Same points with every distance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<FiniteMetricSpace> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::arg("scale factor must be positive"));
        }
        let mut out = self.clone();
        for d in &mut out.dist {
            *d *= factor;
        }
        out.embedding = match &self.embedding {
            Embedding::Abstract => Embedding::Abstract,
            Embedding::Circle {
                circumference,
                coords,
            } => Embedding::Circle {
                circumference: circumference * factor,
                coords: coords.iter().map(|c| c * factor).collect(),
            },
            Embedding::Line { coords } => Embedding::Line {
                coords: coords.iter().map(|c| c * factor).collect(),
            },
        };
        Ok(out)
    }

    /// Index of the point closest to `i` among `candidates` (ties: lowest index).
    pub fn nearest_in(&self, i: usize, candidates: &[usize]) -> usize {
        let mut best = candidates[0];
        let mut bd = self.d(i, best);
        for &c in &candidates[1..] {
            let d = self.d(i, c);
            if d < bd || (d == bd && c < best) {
                best = c;
                bd = d;
            }
        }
        best
    }
}

fn check_indices(n: usize, indices: &[usize]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(Error::arg(format!("index {i} out of bounds for {n} points")));
        }
        if seen[i] {
            return Err(Error::arg(format!("duplicate index {i}")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Collects every axiom violation of a candidate distance matrix.
pub fn check_axioms(d: &[Vec<f64>], tol: f64) -> MetricReport {
    let n = d.len();
    let mut violations = Vec::new();
    for (row, r) in d.iter().enumerate() {
        if r.len() != n {
            violations.push(Violation::NotSquare {
                rows: n,
                row,
                len: r.len(),
            });
        }
    }
    if !violations.is_empty() {
        return MetricReport { violations };
    }
    for i in 0..n {
        for j in 0..n {
            if !d[i][j].is_finite() {
                violations.push(Violation::NonFinite { i, j });
            }
        }
    }
    if !violations.is_empty() {
        return MetricReport { violations };
    }
    for i in 0..n {
        if d[i][i].abs() > tol {
            violations.push(Violation::NonzeroDiagonal { i, value: d[i][i] });
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            if d[i][j] < -tol {
                violations.push(Violation::Negative { i, j, value: d[i][j] });
            } else if i < j && d[i][j] <= tol && d[j][i] <= tol {
                violations.push(Violation::ZeroOffDiagonal { i, j });
            }
            if i < j && (d[i][j] - d[j][i]).abs() > tol {
                violations.push(Violation::Asymmetric {
                    i,
                    j,
                    dij: d[i][j],
                    dji: d[j][i],
                });
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let via = d[i][j] + d[j][k];
                if d[i][k] > via + tol {
                    violations.push(Violation::Triangle {
                        i,
                        j,
                        k,
                        dik: d[i][k],
                        via,
                    });
                }
            }
        }
    }
    MetricReport { violations }
}

/// Validates a square matrix as a metric and labels points `0..n`.
pub fn validate_metric(d: Vec<Vec<f64>>) -> Result<FiniteMetricSpace> {
    let labels = (0..d.len()).map(|i| i.to_string()).collect();
    FiniteMetricSpace::new(labels, d)
}

/// `n` equispaced points on a circle with the arc-length metric.
pub fn circle_net(n: usize, circumference: f64) -> Result<FiniteMetricSpace> {
    if n < 2 {
        return Err(Error::arg("circle_net needs at least 2 points"));
    }
    if !(circumference > 0.0) || !circumference.is_finite() {
        return Err(Error::arg("circumference must be positive"));
    }
    let step = circumference / n as f64;
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = i.abs_diff(j);
            dist[i * n + j] = k.min(n - k) as f64 * step;
        }
    }
    let labels = (0..n).map(|i| i.to_string()).collect();
    let coords = (0..n).map(|i| i as f64 * step).collect();
    Ok(FiniteMetricSpace::from_flat_unchecked(
        labels,
        dist,
        Embedding::Circle {
            circumference,
            coords,
        },
    ))
}

/// `n` equispaced points on `[0, length]` with the Euclidean metric.
pub fn interval_net(n: usize, length: f64) -> Result<FiniteMetricSpace> {
    if n < 2 {
        return Err(Error::arg("interval_net needs at least 2 points"));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::arg("length must be positive"));
    }
    let coords: Vec<f64> = (0..n).map(|i| length * i as f64 / (n - 1) as f64).collect();
    line_points(coords)
}

/// Points on the real line with the Euclidean metric.
pub fn line_points(coords: Vec<f64>) -> Result<FiniteMetricSpace> {
    let n = coords.len();
    if n == 0 {
        return Err(Error::arg("a space needs at least one point"));
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = (coords[i] - coords[j]).abs();
        }
    }
    let labels = (0..n).map(|i| i.to_string()).collect();
    let space = FiniteMetricSpace::from_flat_unchecked(labels, dist, Embedding::Line { coords });
    if space.min_separation() <= TOL.metric {
        return Err(Error::InvalidMetric(check_axioms(&space.matrix(), TOL.metric)));
    }
    Ok(space)
}

pub fn radius(x: &FiniteMetricSpace) -> f64 {
    x.radius()
}

/// A nonempty set of point indices of a shared space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRef {
    space: Arc<FiniteMetricSpace>,
    indices: Vec<usize>,
}

impl SubsetRef {
    pub fn new(space: Arc<FiniteMetricSpace>, indices: Vec<usize>) -> Result<Self> {
        check_indices(space.len(), &indices)?;
        Ok(SubsetRef { space, indices })
    }

    pub fn all(space: Arc<FiniteMetricSpace>) -> Self {
        let indices = (0..space.len()).collect();
        SubsetRef { space, indices }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Hausdorff distance between two finite families given a distance oracle.
///
/// `d(i, j)` is the distance between the `i`-th member of the first family
/// and the `j`-th member of the second.
pub fn hausdorff_with(na: usize, nb: usize, mut d: impl FnMut(usize, usize) -> f64) -> f64 {
    if na == 0 || nb == 0 {
        return f64::INFINITY;
    }
    let mut row_min = vec![f64::INFINITY; na];
    let mut col_min = vec![f64::INFINITY; nb];
    for i in 0..na {
        for j in 0..nb {
            let v = d(i, j);
            if v < row_min[i] {
                row_min[i] = v;
            }
            if v < col_min[j] {
                col_min[j] = v;
            }
        }
    }
    let a = row_min.into_iter().fold(0.0, f64::max);
    let b = col_min.into_iter().fold(0.0, f64::max);
    a.max(b)
}

pub fn hausdorff_indices(x: &FiniteMetricSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySubset);
    }
    if a.iter().chain(b).any(|&i| i >= x.len()) {
        return Err(Error::arg("subset index out of bounds"));
    }
    Ok(hausdorff_with(a.len(), b.len(), |i, j| x.d(a[i], b[j])))
}

pub fn hausdorff_distance(x: &FiniteMetricSpace, a: &SubsetRef, b: &SubsetRef) -> Result<f64> {
    if !a.space.same_as(x) || !b.space.same_as(x) {
        return Err(Error::SpaceMismatch);
    }
    hausdorff_indices(x, &a.indices, &b.indices)
}

/// Result of a covering-number computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cover {
    pub count: usize,
    /// False when the count is a greedy upper bound.
    pub exact: bool,
}

/// Minimum number of open `eps`-balls centred at points of `x` covering `x`.
pub fn covering_number(x: &FiniteMetricSpace, eps: f64) -> Result<Cover> {
    covering_number_with_cap(x, eps, crate::config::LIMITS.exact_cover_points)
}

pub fn covering_number_with_cap(x: &FiniteMetricSpace, eps: f64, exact_cap: usize) -> Result<Cover> {
    if !(eps > 0.0) {
        return Err(Error::arg("eps must be positive"));
    }
    let n = x.len();
    // balls[c] = points strictly within eps of centre c
    let balls: Vec<Vec<usize>> = (0..n)
        .map(|c| (0..n).filter(|&p| x.d(c, p) < eps).collect())
        .collect();
    if n <= exact_cap && n <= 64 {
        let masks: Vec<u64> = balls
            .iter()
            .map(|b| b.iter().fold(0u64, |m, &p| m | (1u64 << p)))
            .collect();
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        // covers_of[p]: centres whose ball contains p
        let covers_of: Vec<Vec<usize>> = (0..n)
            .map(|p| (0..n).filter(|&c| masks[c] >> p & 1 == 1).collect())
            .collect();
        for k in 1..=n {
            if cover_dfs(0, k, full, &masks, &covers_of) {
                return Ok(Cover { count: k, exact: true });
            }
        }
        unreachable!("n balls always cover");
    }
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut count = 0;
    while remaining > 0 {
        let mut best = 0;
        let mut best_gain = 0;
        for (c, ball) in balls.iter().enumerate() {
            let gain = ball.iter().filter(|&&p| !covered[p]).count();
            if gain > best_gain {
                best_gain = gain;
                best = c;
            }
        }
        for &p in &balls[best] {
            if !covered[p] {
                covered[p] = true;
                remaining -= 1;
            }
        }
        count += 1;
    }
    Ok(Cover { count, exact: false })
}

fn cover_dfs(covered: u64, budget: usize, full: u64, masks: &[u64], covers_of: &[Vec<usize>]) -> bool {
    if covered == full {
        return true;
    }
    if budget == 0 {
        return false;
    }
    let p = (!covered & full).trailing_zeros() as usize;
    covers_of[p]
        .iter()
        .any(|&c| cover_dfs(covered | masks[c], budget - 1, full, masks, covers_of))
}

/// Greedy farthest-point net: every point ends within `eps` of the returned subset.
pub fn epsilon_net(x: &Arc<FiniteMetricSpace>, eps: f64) -> Result<SubsetRef> {
    epsilon_net_from(x, eps, 0)
}

pub fn epsilon_net_from(x: &Arc<FiniteMetricSpace>, eps: f64, start: usize) -> Result<SubsetRef> {
    if !(eps > 0.0) {
        return Err(Error::arg("eps must be positive"));
    }
    if start >= x.len() {
        return Err(Error::arg("start index out of bounds"));
    }
    let n = x.len();
    let mut net = vec![start];
    let mut gap: Vec<f64> = (0..n).map(|p| x.d(start, p)).collect();
    loop {
        let (far, &fd) = gap
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, d)| if *d > *acc.1 { (i, d) } else { acc });
        if fd <= eps {
            break;
        }
        net.push(far);
        for p in 0..n {
            gap[p] = gap[p].min(x.d(far, p));
        }
    }
    SubsetRef::new(Arc::clone(x), net)
}

/// Largest change of distance under a point map `f: X -> Y`.
pub fn distortion(x: &FiniteMetricSpace, y: &FiniteMetricSpace, f: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            worst = worst.max((y.d(f[a], f[b]) - x.d(a, b)).abs());
        }
    }
    worst
}

/// Metric on the disjoint union `X ⊔ Y` glued along `f`:
/// `d(x, y) = min_z (d_X(x, z) + d_Y(f(z), y)) + delta / 2`.
///
/// Points of `X` come first. `f` must distort distances by at most `delta`,
/// otherwise the glued distance can violate the triangle inequality.
pub fn bridge_metric(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    f: &[usize],
    delta: f64,
) -> Result<FiniteMetricSpace> {
    if f.len() != x.len() || f.iter().any(|&j| j >= y.len()) {
        return Err(Error::arg("bridge map must send every point of X into Y"));
    }
    if !(delta > 0.0) {
        return Err(Error::arg("delta must be positive"));
    }
    let dist_f = distortion(x, y, f);
    if dist_f > delta + TOL.metric {
        return Err(Error::Precondition(format!(
            "map distortion {dist_f} exceeds delta {delta}"
        )));
    }
    let (nx, ny) = (x.len(), y.len());
    let n = nx + ny;
    let mut dist = vec![0.0; n * n];
    for a in 0..nx {
        for b in 0..nx {
            dist[a * n + b] = x.d(a, b);
        }
    }
    for a in 0..ny {
        for b in 0..ny {
            dist[(nx + a) * n + nx + b] = y.d(a, b);
        }
    }
    for a in 0..nx {
        for b in 0..ny {
            let m = (0..nx)
                .map(|z| x.d(a, z) + y.d(f[z], b))
                .fold(f64::INFINITY, f64::min);
            let v = m + 0.5 * delta;
            dist[a * n + nx + b] = v;
            dist[(nx + b) * n + a] = v;
        }
    }
    let labels = x
        .labels()
        .iter()
        .map(|l| format!("X:{l}"))
        .chain(y.labels().iter().map(|l| format!("Y:{l}")))
        .collect();
    let out = FiniteMetricSpace::from_flat_unchecked(labels, dist, Embedding::Abstract);
    let report = check_axioms(&out.matrix(), TOL.metric);
    if !report.violations.is_empty() {
        return Err(Error::Internal(format!("bridge metric failed validation: {report}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Max,
    Sum,
}

/// Product point set `T × X`; point `(t, x)` has index `t * |X| + x`.
pub fn product_space(t: &FiniteMetricSpace, x: &FiniteMetricSpace, combiner: Combiner) -> FiniteMetricSpace {
    let (nt, nx) = (t.len(), x.len());
    let n = nt * nx;
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        let (ta, xa) = (a / nx, a % nx);
        for b in 0..n {
            let (tb, xb) = (b / nx, b % nx);
            let (dt, dx) = (t.d(ta, tb), x.d(xa, xb));
            dist[a * n + b] = match combiner {
                Combiner::Max => dt.max(dx),
                Combiner::Sum => dt + dx,
            };
        }
    }
    let mut labels = Vec::with_capacity(n);
    for lt in t.labels() {
        for lx in x.labels() {
            labels.push(format!("({lt},{lx})"));
        }
    }
    FiniteMetricSpace::from_flat_unchecked(labels, dist, Embedding::Abstract)
}
