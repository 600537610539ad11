//! Distances between metric spaces and between metric Bauer simplices.
//!
//! A simplex is represented by a [`SimplexNet`]: its boundary space plus the
//! grid of measures with weights in multiples of `1/m`. Affine maps between
//! simplices are pushforwards of boundary point maps, so a grid measure is
//! always sent to a grid measure of the target when both nets share `m`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LIMITS, TOL};
use crate::error::{Error, Result};
use crate::metric_space::{bridge_metric, distortion, hausdorff_with, FiniteMetricSpace};
use crate::transport::{compositions, grid_density, multiset_count, w1, w1_matrix, Measure};

/// A relation between two point sets covering both sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn covers(&self, nx: usize, ny: usize) -> bool {
        (0..nx).all(|x| self.pairs.iter().any(|p| p.0 == x)) && (0..ny).all(|y| self.pairs.iter().any(|p| p.1 == y))
    }

    /// Largest `|d_X(x, x') − d_Y(y, y')|` over pairs in the relation.
    pub fn distortion(&self, x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
        let mut worst: f64 = 0.0;
        for &(a, b) in &self.pairs {
            for &(c, d) in &self.pairs {
                worst = worst.max((x.d(a, c) - y.d(b, d)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    Upper,
}

#[derive(Debug, Clone, Serialize)]
pub struct GhResult {
    pub value: f64,
    pub kind: BoundKind,
    /// `½ |diam X − diam Y|`.
    pub lower_bound: f64,
    pub witness: Correspondence,
}

/// Gromov–Hausdorff distance: half the least distortion of a correspondence.
///
/// Candidate distortions are the finitely many values `|d_X − d_Y|`; for each
/// one a backtracking search decides whether a correspondence achieves it.
/// When the node budget runs out the result is the best witnessed upper bound.
pub fn gh_distance(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> GhResult {
    gh_distance_with_budget(x, y, LIMITS.gh_nodes)
}

pub fn gh_distance_with_budget(x: &FiniteMetricSpace, y: &FiniteMetricSpace, node_budget: u64) -> GhResult {
    let (nx, ny) = (x.len(), y.len());
    let mut cands = Vec::with_capacity(nx * nx * ny * ny);
    for a in 0..nx {
        for b in a..nx {
            for c in 0..ny {
                for d in c..ny {
                    cands.push((x.d(a, b) - y.d(c, d)).abs());
                }
            }
        }
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let full = Correspondence {
        pairs: (0..nx).flat_map(|a| (0..ny).map(move |b| (a, b))).collect(),
    };
    let mut best = (full.distortion(x, y), full);
    let mut exact = true;
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match correspondence_within(x, y, cands[mid], node_budget) {
            Search::Found(c) => {
                let dist = c.distortion(x, y);
                if dist < best.0 {
                    best = (dist, c);
                }
                hi = mid;
            }
            Search::Infeasible => lo = mid + 1,
            Search::Aborted => {
                exact = false;
                lo = mid + 1;
            }
        }
    }
    GhResult {
        value: 0.5 * best.0,
        kind: if exact { BoundKind::Exact } else { BoundKind::Upper },
        lower_bound: 0.5 * (x.diameter() - y.diameter()).abs(),
        witness: best.1,
    }
}

enum Search {
    Found(Correspondence),
    Infeasible,
    Aborted,
}

fn correspondence_within(x: &FiniteMetricSpace, y: &FiniteMetricSpace, t: f64, budget: u64) -> Search {
    struct State<'a> {
        x: &'a FiniteMetricSpace,
        y: &'a FiniteMetricSpace,
        t: f64,
        chosen: Vec<(usize, usize)>,
        cov_x: Vec<u32>,
        cov_y: Vec<u32>,
        nodes: u64,
        budget: u64,
    }
    impl State<'_> {
        fn ok(&self, a: usize, b: usize) -> bool {
            self.chosen
                .iter()
                .all(|&(c, d)| (self.x.d(a, c) - self.y.d(b, d)).abs() <= self.t + 1e-12)
        }
        fn push(&mut self, a: usize, b: usize) {
            self.chosen.push((a, b));
            self.cov_x[a] += 1;
            self.cov_y[b] += 1;
        }
        fn pop(&mut self) {
            let (a, b) = self.chosen.pop().unwrap();
            self.cov_x[a] -= 1;
            self.cov_y[b] -= 1;
        }
        fn go(&mut self) -> Option<bool> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return None;
            }
            if let Some(a) = self.cov_x.iter().position(|&c| c == 0) {
                for b in 0..self.y.len() {
                    if self.ok(a, b) {
                        self.push(a, b);
                        let r = self.go();
                        if r != Some(false) {
                            return r;
                        }
                        self.pop();
                    }
                }
                return Some(false);
            }
            if let Some(b) = self.cov_y.iter().position(|&c| c == 0) {
                for a in 0..self.x.len() {
                    if self.ok(a, b) {
                        self.push(a, b);
                        let r = self.go();
                        if r != Some(false) {
                            return r;
                        }
                        self.pop();
                    }
                }
                return Some(false);
            }
            Some(true)
        }
    }
    let mut s = State {
        x,
        y,
        t,
        chosen: Vec::new(),
        cov_x: vec![0; x.len()],
        cov_y: vec![0; y.len()],
        nodes: 0,
        budget,
    };
    match s.go() {
        Some(true) => Search::Found(Correspondence { pairs: s.chosen }),
        Some(false) => Search::Infeasible,
        None => Search::Aborted,
    }
}

/// Grid net of the simplex of probability measures on a boundary space.
#[derive(Debug, Clone)]
pub struct SimplexNet {
    boundary: Arc<FiniteMetricSpace>,
    resolution: usize,
    counts: Vec<Vec<u32>>,
    measures: Vec<Measure>,
    lookup: HashMap<Vec<u32>, usize>,
    /// Pairwise W₁, row-major.
    w1: Vec<f64>,
    density: f64,
}

impl SimplexNet {
    /// All measures on `boundary` with weights in multiples of `1/m`.
    pub fn grid(boundary: Arc<FiniteMetricSpace>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::arg("resolution m must be at least 1"));
        }
        let k = boundary.len();
        let needed = multiset_count(k, m);
        if needed > LIMITS.prob_net_cap as u128 {
            return Err(Error::SizeCap {
                what: "simplex net",
                needed,
                cap: LIMITS.prob_net_cap,
            });
        }
        let counts = compositions(k, m);
        let measures: Vec<Measure> = counts
            .iter()
            .map(|c| Measure::from_parts(Arc::clone(&boundary), c.iter().map(|&v| v as f64 / m as f64).collect()))
            .collect();
        let lookup = counts.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let table = w1_matrix(&measures)?;
        let density = grid_density(boundary.diameter(), k, m);
        Ok(SimplexNet {
            boundary,
            resolution: m,
            counts,
            measures,
            lookup,
            w1: table.concat(),
            density,
        })
    }

    pub fn boundary(&self) -> &Arc<FiniteMetricSpace> {
        &self.boundary
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// W₁ covering radius of the net inside the full simplex.
    pub fn density(&self) -> f64 {
        self.density
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.w1[i * self.len() + j]
    }

    /// Index of the point mass at boundary point `p`.
    pub fn point_mass(&self, p: usize) -> usize {
        let mut c = vec![0u32; self.boundary.len()];
        c[p] = self.resolution as u32;
        self.lookup[&c]
    }

    /// Index of `h_*μ_i` in `target`, when both nets share a resolution.
    fn push_index(&self, i: usize, h: &[usize], target: &SimplexNet) -> Option<usize> {
        if target.resolution != self.resolution {
            return None;
        }
        let mut c = vec![0u32; target.boundary.len()];
        for (p, &v) in self.counts[i].iter().enumerate() {
            c[h[p]] += v;
        }
        target.lookup.get(&c).copied()
    }

    fn push_weights(&self, i: usize, h: &[usize], target: &SimplexNet) -> Vec<f64> {
        let mut w = vec![0.0; target.boundary.len()];
        for (p, &v) in self.measures[i].weights().iter().enumerate() {
            w[h[p]] += v;
        }
        w
    }
}

/// Images of every net member under `h`, as target indices or raw weights.
enum Pushed {
    Indexed(Vec<usize>),
    Raw(Vec<Vec<f64>>),
}

fn push_net(sx: &SimplexNet, h: &[usize], sy: &SimplexNet) -> Pushed {
    let idx: Option<Vec<usize>> = (0..sx.len()).map(|i| sx.push_index(i, h, sy)).collect();
    match idx {
        Some(v) => Pushed::Indexed(v),
        None => Pushed::Raw((0..sx.len()).map(|i| sx.push_weights(i, h, sy)).collect()),
    }
}

fn check_map(h: &[usize], from: usize, to: usize) -> Result<()> {
    if h.len() != from || h.iter().any(|&v| v >= to) {
        return Err(Error::arg(format!("map must send all {from} boundary points into {to} points")));
    }
    Ok(())
}

/// `max |W₁(h_*μ, h_*ν) − W₁(μ, ν)|` over net pairs.
fn net_distortion(sx: &SimplexNet, h: &[usize], sy: &SimplexNet, stop_above: f64) -> Result<f64> {
    let n = sx.len();
    let mut worst: f64 = 0.0;
    match push_net(sx, h, sy) {
        Pushed::Indexed(p) => {
            for i in 0..n {
                for j in i + 1..n {
                    worst = worst.max((sy.dist(p[i], p[j]) - sx.dist(i, j)).abs());
                }
                if worst > stop_above {
                    return Ok(worst);
                }
            }
        }
        Pushed::Raw(w) => {
            for i in 0..n {
                for j in i + 1..n {
                    worst = worst.max((w1(&sy.boundary, &w[i], &w[j])? - sx.dist(i, j)).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// `max_ν min_μ W₁(h_*μ, ν)`: how far `h` is from hitting every target net member.
fn net_surjectivity(sx: &SimplexNet, h: &[usize], sy: &SimplexNet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    match push_net(sx, h, sy) {
        Pushed::Indexed(p) => {
            for nu in 0..sy.len() {
                let best = p.iter().map(|&i| sy.dist(i, nu)).fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        Pushed::Raw(w) => {
            for nu in 0..sy.len() {
                let mut best = f64::INFINITY;
                for wi in &w {
                    best = best.min(w1(&sy.boundary, wi, sy.measures[nu].weights())?);
                }
                worst = worst.max(best);
            }
        }
    }
    Ok(worst)
}

/// `max_ν W₁(h_*ν, ν)` for a self-map `h` of the boundary.
fn self_defect(s: &SimplexNet, h: &[usize]) -> f64 {
    (0..s.len())
        .map(|i| s.dist(s.push_index(i, h, s).expect("self pushforward stays in the grid"), i))
        .fold(0.0, f64::max)
}

/// Defects of a boundary map extended affinely to the simplex nets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmostIsometryReport {
    pub forward: Vec<usize>,
    pub backward: Option<Vec<usize>>,
    /// Distortion over boundary pairs.
    pub boundary_distortion: f64,
    /// Distortion over net pairs.
    pub distortion: f64,
    /// `max_ν W₁(f_*g_*ν, ν)` over the target net, when a backward map is given.
    pub inversion_defect: Option<f64>,
    /// `max_ν min_μ W₁(f_*μ, ν)`.
    pub density_defect: f64,
    pub within_eps: bool,
}

/// Exact defects of `f` (and of the pair `(f, g)` when `g` is given).
pub fn almost_isometry_report(sx: &SimplexNet, sy: &SimplexNet, f: &[usize], g: Option<&[usize]>, eps: f64) -> Result<AlmostIsometryReport> {
    check_map(f, sx.boundary.len(), sy.boundary.len())?;
    let boundary_distortion = distortion(&sx.boundary, &sy.boundary, f);
    let dist = net_distortion(sx, f, sy, f64::INFINITY)?;
    let density_defect = net_surjectivity(sx, f, sy)?;
    let inversion_defect = match g {
        Some(g) => {
            check_map(g, sy.boundary.len(), sx.boundary.len())?;
            let h: Vec<usize> = g.iter().map(|&x| f[x]).collect();
            Some(if sy.resolution == sx.resolution {
                self_defect(sy, &h)
            } else {
                let mut worst: f64 = 0.0;
                for nu in 0..sy.len() {
                    let pushed = sy.push_weights(nu, &h, sy);
                    worst = worst.max(w1(&sy.boundary, &pushed, sy.measures[nu].weights())?);
                }
                worst
            })
        }
        None => None,
    };
    let within_eps = dist <= eps && inversion_defect.is_none_or(|v| v <= eps);
    Ok(AlmostIsometryReport {
        forward: f.to_vec(),
        backward: g.map(|g| g.to_vec()),
        boundary_distortion,
        distortion: dist,
        inversion_defect,
        density_defect,
        within_eps,
    })
}

/// Distortion of a boundary map over boundary pairs and over the nets.
pub fn epsilon_isometry_check(f: &[usize], sx: &SimplexNet, sy: &SimplexNet, eps: f64) -> Result<AlmostIsometryReport> {
    almost_isometry_report(sx, sy, f, None, eps)
}

/// Limits on the map search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBudget {
    /// Search exhaustively when every map family has at most this many members.
    pub max_maps: u128,
    /// Coordinate-descent sweeps in the non-exhaustive fallback.
    pub local_sweeps: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_maps: 1 << 20,
            local_sweeps: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub gamma: f64,
    pub kind: BoundKind,
    /// Witness for the direction X → Y.
    pub forward: AlmostIsometryReport,
    /// Witness for the direction Y → X.
    pub reverse: AlmostIsometryReport,
}

pub(crate) fn pow(base: usize, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

pub(crate) fn decode(mut idx: u128, len: usize, base: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for p in (0..len).rev() {
        out[p] = (idx % base as u128) as usize;
        idx /= base as u128;
    }
    out
}

fn encode(map: &[usize], base: usize) -> usize {
    map.iter().fold(0usize, |acc, &v| acc * base + v)
}

/// Best `(value, f, g)` for one direction: `min_f max(distortion(f), min_g defect(f∘g))`.
fn one_direction(sx: &SimplexNet, sy: &SimplexNet, budget: &SearchBudget, start: Option<Vec<usize>>) -> Result<(f64, Vec<usize>, Vec<usize>, bool)> {
    let (nx, ny) = (sx.boundary.len(), sy.boundary.len());
    let same_m = sx.resolution == sy.resolution;
    let exhaustive = same_m && pow(ny, nx) <= budget.max_maps && pow(nx, ny) <= budget.max_maps && pow(ny, ny) <= budget.max_maps;
    if exhaustive {
        // Defect of every self-map of the target boundary, indexed by encode().
        let self_maps = pow(ny, ny) as usize;
        let defects: Vec<f64> = (0..self_maps)
            .into_par_iter()
            .map(|k| self_defect(sy, &decode(k as u128, ny, ny)))
            .collect();
        let gs: Vec<Vec<usize>> = (0..pow(nx, ny)).map(|k| decode(k, ny, nx)).collect();
        let total = pow(ny, nx) as usize;
        let best = (0..total)
            .into_par_iter()
            .map(|k| -> Result<(f64, usize, usize)> {
                let f = decode(k as u128, nx, ny);
                let dist = net_distortion(sx, &f, sy, f64::INFINITY)?;
                let mut inv = (f64::INFINITY, 0usize);
                for (gi, g) in gs.iter().enumerate() {
                    let h: Vec<usize> = g.iter().map(|&x| f[x]).collect();
                    let d = defects[encode(&h, ny)];
                    if d < inv.0 {
                        inv = (d, gi);
                    }
                }
                Ok((dist.max(inv.0), k, inv.1))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one map");
        return Ok((best.0, decode(best.1 as u128, nx, ny), gs[best.2].clone(), true));
    }
    // Coordinate descent from the supplied start (or the nearest-point map).
    let mut f = start.unwrap_or_else(|| vec![0; nx]);
    let mut g: Vec<usize> = (0..ny)
        .map(|y| (0..nx).min_by(|&a, &b| sy.boundary.d(f[a], y).total_cmp(&sy.boundary.d(f[b], y))).unwrap())
        .collect();
    let eval = |f: &[usize], g: &[usize]| -> Result<f64> {
        let r = almost_isometry_report(sx, sy, f, Some(g), f64::INFINITY)?;
        Ok(r.distortion.max(r.inversion_defect.unwrap_or(0.0)))
    };
    let mut cur = eval(&f, &g)?;
    for _ in 0..budget.local_sweeps {
        let mut improved = false;
        for p in 0..nx {
            for v in 0..ny {
                if f[p] == v {
                    continue;
                }
                let old = f[p];
                f[p] = v;
                let val = eval(&f, &g)?;
                if val < cur - 1e-15 {
                    cur = val;
                    improved = true;
                } else {
                    f[p] = old;
                }
            }
        }
        for q in 0..ny {
            for v in 0..nx {
                if g[q] == v {
                    continue;
                }
                let old = g[q];
                g[q] = v;
                let val = eval(&f, &g)?;
                if val < cur - 1e-15 {
                    cur = val;
                    improved = true;
                } else {
                    g[q] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok((cur, f, g, false))
}

/// Start map induced by an optimal boundary correspondence.
pub(crate) fn gh_start(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Vec<usize> {
    let gh = gh_distance_with_budget(x, y, 200_000);
    (0..x.len())
        .map(|a| gh.witness.pairs.iter().find(|p| p.0 == a).map_or(0, |p| p.1))
        .collect()
}

/// Intertwining gap estimate `γ̂`: the larger of the two one-sided gaps.
pub fn intertwining_gap(sx: &SimplexNet, sy: &SimplexNet, budget: &SearchBudget) -> Result<GapReport> {
    if sx.is_empty() || sy.is_empty() {
        return Err(Error::EmptySubset);
    }
    let (a, f, g, ex1) = one_direction(sx, sy, budget, Some(gh_start(&sx.boundary, &sy.boundary)))?;
    let (b, f2, g2, ex2) = one_direction(sy, sx, budget, Some(gh_start(&sy.boundary, &sx.boundary)))?;
    let gamma = a.max(b);
    let bound = 2.0 * sx.boundary.diameter().max(sy.boundary.diameter()) + TOL.metric;
    if gamma > bound {
        return Err(Error::Internal(format!("gap {gamma} exceeds the trivial bound {bound}")));
    }
    Ok(GapReport {
        gamma,
        kind: if ex1 && ex2 { BoundKind::Exact } else { BoundKind::Upper },
        forward: almost_isometry_report(sx, sy, &f, Some(&g), gamma)?,
        reverse: almost_isometry_report(sy, sx, &f2, Some(&g2), gamma)?,
    })
}

/// Gap value certified by explicit map pairs in both directions.
pub fn gap_for_maps(sx: &SimplexNet, sy: &SimplexNet, f: &[usize], g: &[usize], f2: &[usize], g2: &[usize]) -> Result<GapReport> {
    let forward = almost_isometry_report(sx, sy, f, Some(g), f64::INFINITY)?;
    let reverse = almost_isometry_report(sy, sx, f2, Some(g2), f64::INFINITY)?;
    let gamma = forward
        .distortion
        .max(forward.inversion_defect.unwrap_or(0.0))
        .max(reverse.distortion)
        .max(reverse.inversion_defect.unwrap_or(0.0));
    Ok(GapReport {
        gamma,
        kind: BoundKind::Upper,
        forward,
        reverse,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FukayaReport {
    pub value: f64,
    pub kind: BoundKind,
    pub forward: Vec<usize>,
    pub reverse: Vec<usize>,
}

fn fukaya_direction(sx: &SimplexNet, sy: &SimplexNet, budget: &SearchBudget) -> Result<(f64, Vec<usize>, bool)> {
    let (nx, ny) = (sx.boundary.len(), sy.boundary.len());
    let total = pow(ny, nx);
    let score = |f: &[usize]| -> Result<f64> { Ok(net_distortion(sx, f, sy, f64::INFINITY)?.max(net_surjectivity(sx, f, sy)?)) };
    if total <= budget.max_maps {
        let best = (0..total as usize)
            .into_par_iter()
            .map(|k| Ok((score(&decode(k as u128, nx, ny))?, k)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one map");
        return Ok((best.0, decode(best.1 as u128, nx, ny), true));
    }
    let mut f = gh_start(&sx.boundary, &sy.boundary);
    let mut cur = score(&f)?;
    for _ in 0..budget.local_sweeps {
        let mut improved = false;
        for p in 0..nx {
            for v in 0..ny {
                let old = f[p];
                if old == v {
                    continue;
                }
                f[p] = v;
                let val = score(&f)?;
                if val < cur - 1e-15 {
                    cur = val;
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
    Ok((cur, f, false))
}

/// Fukaya distance estimate: least `ε` admitting an `ε`-isometric,
/// `ε`-surjective affine map, symmetrized over both directions.
pub fn fukaya_distance(sx: &SimplexNet, sy: &SimplexNet, budget: &SearchBudget) -> Result<FukayaReport> {
    let (a, f, e1) = fukaya_direction(sx, sy, budget)?;
    let (b, g, e2) = fukaya_direction(sy, sx, budget)?;
    Ok(FukayaReport {
        value: a.max(b),
        kind: if e1 && e2 { BoundKind::Exact } else { BoundKind::Upper },
        forward: f,
        reverse: g,
    })
}

pub const MIN_BRIDGE_DELTA: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct DqReport {
    pub value: f64,
    pub delta: f64,
}

/// Hausdorff distance between the two measure nets inside the W₁ space of the
/// bridge metric on `∂X ⊔ ∂Y` glued along `f`. Defaults `delta` to the gap estimate.
///
/// `delta` is raised to at least [`MIN_BRIDGE_DELTA`] so that glued points stay
/// distinguishable at the metric tolerance.
pub fn dq_upper(sx: &SimplexNet, sy: &SimplexNet, f: &[usize], delta: Option<f64>) -> Result<DqReport> {
    check_map(f, sx.boundary.len(), sy.boundary.len())?;
    let delta = match delta {
        Some(d) => d,
        None => intertwining_gap(sx, sy, &SearchBudget::default())?.gamma,
    }
    .max(MIN_BRIDGE_DELTA);
    let bridge = bridge_metric(&sx.boundary, &sy.boundary, f, delta)?;
    let (nx, ny) = (sx.boundary.len(), sy.boundary.len());
    let lift_x: Vec<Vec<f64>> = sx
        .measures
        .iter()
        .map(|m| {
            let mut w = m.weights().to_vec();
            w.resize(nx + ny, 0.0);
            w
        })
        .collect();
    let lift_y: Vec<Vec<f64>> = sy
        .measures
        .iter()
        .map(|m| {
            let mut w = vec![0.0; nx];
            w.extend_from_slice(m.weights());
            w
        })
        .collect();
    let table: Vec<Vec<f64>> = lift_x
        .par_iter()
        .map(|a| lift_y.iter().map(|b| w1(&bridge, a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let value = hausdorff_with(lift_x.len(), lift_y.len(), |i, j| table[i][j]);
    Ok(DqReport { value, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::metric_space::{circle_net, interval_net, line_points, validate_metric};

    fn net(x: FiniteMetricSpace, m: usize) -> SimplexNet {
        SimplexNet::grid(Arc::new(x), m).unwrap()
    }

    /// Brute force over all relations: every nonempty subset of X × Y that covers both sides.
    fn gh_oracle(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
        let pairs: Vec<(usize, usize)> = (0..x.len()).flat_map(|a| (0..y.len()).map(move |b| (a, b))).collect();
        let mut best = f64::INFINITY;
        for mask in 1u64..(1u64 << pairs.len()) {
            let rel = Correspondence {
                pairs: pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p).collect(),
            };
            if rel.covers(x.len(), y.len()) {
                best = best.min(rel.distortion(x, y));
            }
        }
        0.5 * best
    }

    #[test]
    fn gh_examples() {
        let a = interval_net(2, 1.0).unwrap();
        let b = interval_net(2, 3.0).unwrap();
        assert_eq!(gh_distance(&a, &b).value, 1.0);
        let s = validate_metric(vec![vec![0.0]]).unwrap();
        assert_eq!(gh_distance(&s, &s).value, 0.0);
        let c = circle_net(5, 5.0).unwrap();
        assert_eq!(gh_distance(&c, &c).value, 0.0);
        let tri = line_points(vec![0.0, 1.0, 3.0]).unwrap();
        let sq = line_points(vec![0.0, 2.0, 2.5, 4.0]).unwrap();
        let r = gh_distance(&tri, &sq);
        assert_eq!(r.kind, BoundKind::Exact);
        assert!((r.value - gh_oracle(&tri, &sq)).abs() < 1e-12);
        assert!(r.lower_bound <= r.value);
        assert!((gh_distance(&sq, &tri).value - r.value).abs() < 1e-12);
    }

    #[test]
    fn identical_simplices_have_zero_gap() {
        let s = net(interval_net(3, 1.0).unwrap(), 3);
        let r = intertwining_gap(&s, &s, &SearchBudget::default()).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert_eq!(r.kind, BoundKind::Exact);
        assert_eq!(fukaya_distance(&s, &s, &SearchBudget::default()).unwrap().value, 0.0);
    }

    #[test]
    fn relabelled_circle_has_zero_gap() {
        let c = circle_net(4, 4.0).unwrap();
        let perm = [2usize, 3, 0, 1];
        let relabelled = c.subspace(&perm).unwrap();
        let r = intertwining_gap(&net(c, 2), &net(relabelled, 2), &SearchBudget::default()).unwrap();
        assert!(r.gamma < 1e-12);
    }

    #[test]
    fn scaled_intervals() {
        let a = net(interval_net(3, 1.0).unwrap(), 2);
        let b = net(interval_net(3, 1.2).unwrap(), 2);
        let budget = SearchBudget::default();
        let g = intertwining_gap(&a, &b, &budget).unwrap();
        assert_eq!(g.kind, BoundKind::Exact);
        assert!(g.gamma <= 0.2 + 1e-12 && g.gamma >= 0.1 - a.density(), "{}", g.gamma);
        let f = fukaya_distance(&a, &b, &budget).unwrap();
        assert!(f.value <= g.gamma + 1e-12);
        assert!(f.value <= 0.2 + 1e-12);
    }

    #[test]
    fn report_matches_recomputation() {
        let a = net(line_points(vec![0.0, 1.0, 2.5]).unwrap(), 2);
        let b = net(line_points(vec![0.0, 2.0]).unwrap(), 2);
        let f = [0usize, 1, 1];
        let r = epsilon_isometry_check(&f, &a, &b, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                let push = |k: usize| {
                    let mut w = vec![0.0; 2];
                    for (p, &v) in a.measures()[k].weights().iter().enumerate() {
                        w[f[p]] += v;
                    }
                    w
                };
                let (pi, pj) = (push(i), push(j));
                let dy = w1(b.boundary(), &pi, &pj).unwrap();
                worst = worst.max((dy - a.dist(i, j)).abs());
            }
        }
        assert!((r.distortion - worst).abs() < 1e-12);
        assert!(r.boundary_distortion <= r.distortion + 1e-12);
        let iso = epsilon_isometry_check(&[0, 1], &b, &b, 0.0).unwrap();
        assert_eq!(iso.distortion, 0.0);
        let two = net(interval_net(2, 1.5).unwrap(), 1);
        assert_eq!(epsilon_isometry_check(&[0, 0], &two, &two, 0.0).unwrap().distortion, 1.5);
    }

    #[test]
    fn dq_upper_examples() {
        let s = net(interval_net(3, 1.0).unwrap(), 2);
        let v = dq_upper(&s, &s, &[0, 1, 2], Some(0.2)).unwrap();
        assert!((v.value - 0.1).abs() < 1e-12);
        let v2 = dq_upper(&s, &s, &[0, 1, 2], Some(0.4)).unwrap();
        assert!(v2.value >= v.value);
        // point-mass nets: Hausdorff distance of the boundaries in the bridge
        let a = net(interval_net(2, 1.0).unwrap(), 1);
        let b = net(interval_net(2, 1.2).unwrap(), 1);
        let bridge = bridge_metric(a.boundary(), b.boundary(), &[0, 1], 0.3).unwrap();
        let direct = hausdorff_with(2, 2, |i, j| bridge.d(i, 2 + j));
        assert!((dq_upper(&a, &b, &[0, 1], Some(0.3)).unwrap().value - direct).abs() < 1e-12);
    }

    #[test]
    fn dq_upper_shrinks_with_scale() {
        let base = net(circle_net(4, 2.0 * std::f64::consts::PI).unwrap(), 2);
        let mut prev = f64::INFINITY;
        for s in [0.4, 0.2, 0.1, 0.05] {
            let other = net(circle_net(4, 2.0 * std::f64::consts::PI * (1.0 + s)).unwrap(), 2);
            let delta = std::f64::consts::PI * s;
            let v = dq_upper(&base, &other, &[0, 1, 2, 3], Some(delta)).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
    }

    fn arb_space(max: usize) -> impl Strategy<Value = FiniteMetricSpace> {
        prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..=max).prop_filter_map("distinct points", |pts| {
            let d = pts
                .iter()
                .map(|a| pts.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
                .collect();
            validate_metric(d).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn gh_matches_oracle_and_bounds(x in arb_space(3), y in arb_space(3)) {
            let r = gh_distance(&x, &y);
            prop_assert_eq!(r.kind, BoundKind::Exact);
            prop_assert!((r.value - gh_oracle(&x, &y)).abs() <= 1e-12);
            prop_assert!((r.value - gh_distance(&y, &x).value).abs() <= 1e-12);
            prop_assert!(r.value >= r.lower_bound - 1e-12);
            prop_assert!(r.value <= x.diameter().max(y.diameter()) / 2.0 + 1e-12);
            prop_assert!(r.witness.covers(x.len(), y.len()));
            prop_assert!((r.witness.distortion(&x, &y) / 2.0 - r.value).abs() <= 1e-12);
        }

        #[test]
        fn gh_triangle(x in arb_space(3), y in arb_space(3), z in arb_space(3)) {
            let g = |a: &FiniteMetricSpace, b: &FiniteMetricSpace| gh_distance(a, b).value;
            prop_assert!(g(&x, &z) <= g(&x, &y) + g(&y, &z) + 1e-12);
        }
    }
}
