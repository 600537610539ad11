//! Lipschitz seminorms, state metrics, nuclei and the matrix-valued model.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LIMITS, TOL};
use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;
use crate::transport::{same_space, Measure};

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    space: Arc<FiniteMetricSpace>,
    values: Vec<f64>,
}

impl Observable {
    pub fn new(space: Arc<FiniteMetricSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::arg("observable needs one value per point"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("observable values must be finite"));
        }
        Ok(Observable { space, values })
    }

    pub fn from_fn(space: Arc<FiniteMetricSpace>, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values = (0..space.len()).map(f).collect();
        Observable::new(space, values)
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Largest difference quotient `|f(x) − f(y)| / ρ(x, y)` of raw values.
pub fn lipschitz_of(x: &FiniteMetricSpace, f: &[f64]) -> f64 {
    let mut l: f64 = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            l = l.max((f[i] - f[j]).abs() / x.d(i, j));
        }
    }
    l
}

/// Lipschitz seminorm; 0 on a singleton space.
pub fn lipschitz_seminorm(f: &Observable) -> f64 {
    lipschitz_of(&f.space, &f.values)
}

/// Seminorm together with a flag set when the space is a singleton.
pub fn lipschitz_seminorm_flagged(f: &Observable) -> (f64, bool) {
    (lipschitz_seminorm(f), f.space.len() < 2)
}

fn state_metric_raw<'a>(states: &[Measure], funcs: impl Iterator<Item = (&'a [f64], f64)>) -> Result<Vec<Vec<f64>>> {
    let s = states.len();
    let mut out = vec![vec![0.0; s]; s];
    let mut any = false;
    let mut ints = vec![0.0; s];
    for (f, l) in funcs {
        any = true;
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::arg(format!("generator seminorm {l} is not a finite nonnegative number")));
        }
        if l == 0.0 {
            continue;
        }
        for (k, st) in states.iter().enumerate() {
            ints[k] = st.integrate(f) / l;
        }
        for a in 0..s {
            for b in a + 1..s {
                let d = (ints[a] - ints[b]).abs();
                if d > out[a][b] {
                    out[a][b] = d;
                    out[b][a] = d;
                }
            }
        }
    }
    if !any {
        return Err(Error::arg("state_metric needs at least one generator"));
    }
    Ok(out)
}

/// `ρ̂(σ, τ) = max_g |∫g dσ − ∫g dτ|` over generators normalized to seminorm 1.
///
/// Generators with seminorm 0 are constants and contribute nothing.
pub fn state_metric(states: &[Measure], generators: &[(Observable, f64)]) -> Result<Vec<Vec<f64>>> {
    if let Some(first) = states.first() {
        let sp = first.space();
        if states.iter().any(|m| !same_space(m.space(), sp)) || generators.iter().any(|(g, _)| !same_space(&g.space, sp)) {
            return Err(Error::SpaceMismatch);
        }
    }
    state_metric_raw(states, generators.iter().map(|(g, l)| (g.values.as_slice(), *l)))
}

/// `sup |f(σ) − f(τ)| / ρ(σ, τ)` over state pairs at positive distance.
pub fn lipnorm_from_state_metric(values: &[f64], metric: &[Vec<f64>]) -> Result<f64> {
    let n = values.len();
    if metric.len() != n || metric.iter().any(|r| r.len() != n) {
        return Err(Error::arg("metric must be square and match the values"));
    }
    let mut best: Option<f64> = None;
    for a in 0..n {
        for b in a + 1..n {
            if metric[a][b] > TOL.metric {
                let q = (values[a] - values[b]).abs() / metric[a][b];
                best = Some(best.map_or(q, |m: f64| m.max(q)));
            }
        }
    }
    best.ok_or_else(|| Error::arg("degenerate metric: no two states at positive distance"))
}

/// `∫ f dμ` for every state: the affine extension of `f` to the simplex.
pub fn extend_to_simplex(f: &Observable, states: &[Measure]) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|m| {
            if same_space(m.space(), &f.space) {
                Ok(m.integrate(&f.values))
            } else {
                Err(Error::SpaceMismatch)
            }
        })
        .collect()
}

/// True when `‖f‖_∞ ≤ r` and `f` is 1-Lipschitz, both within `tol`.
pub fn in_lipschitz_ball(x: &FiniteMetricSpace, f: &[f64], r: f64, tol: f64) -> bool {
    f.iter().all(|v| v.abs() <= r + tol)
        && (0..x.len()).all(|i| (i + 1..x.len()).all(|j| (f[i] - f[j]).abs() <= x.d(i, j) + tol))
}

/// McShane regularization clipped to `[−r, r]`: `x ↦ clip(max_y (q(y) − ρ(x, y)))`.
pub fn mcshane_clip(x: &FiniteMetricSpace, q: &[f64], r: f64) -> Vec<f64> {
    (0..x.len())
        .map(|p| {
            let m = (0..x.len()).map(|y| q[y] - x.d(p, y)).fold(f64::NEG_INFINITY, f64::max);
            m.clamp(-r, r)
        })
        .collect()
}

/// A finite sup-norm net of `{f : ‖f‖_∞ ≤ r, f 1-Lipschitz}`.
#[derive(Debug, Clone)]
pub struct Nucleus {
    space: Arc<FiniteMetricSpace>,
    r: f64,
    density: f64,
    /// Row-major: function `k` occupies `values[k*n..(k+1)*n]`.
    values: Vec<f64>,
}

impl Nucleus {
    /// Wraps explicit functions after checking membership.
    pub fn from_functions(space: Arc<FiniteMetricSpace>, r: f64, density: f64, functions: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.len();
        let mut values = Vec::with_capacity(functions.len() * n);
        for f in &functions {
            if f.len() != n || !in_lipschitz_ball(&space, f, r, TOL.lipschitz) {
                return Err(Error::arg("function is not in the r-bounded 1-Lipschitz ball"));
            }
            values.extend_from_slice(f);
        }
        if functions.is_empty() {
            return Err(Error::arg("a nucleus needs at least one function"));
        }
        Ok(Nucleus { space, r, density, values })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Certified sup-norm covering radius of the net.
    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn function(&self, k: usize) -> &[f64] {
        let n = self.space.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn functions(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks(self.space.len())
    }

    pub fn observable(&self, k: usize) -> Observable {
        Observable {
            space: Arc::clone(&self.space),
            values: self.function(k).to_vec(),
        }
    }

    /// Sup-norm distance from `f` to the nearest member.
    pub fn distance_to(&self, f: &[f64]) -> f64 {
        self.functions()
            .map(|g| g.iter().zip(f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(f64::INFINITY, f64::min)
    }

    /// Empirical density: largest distance from a random ball member to the net.
    ///
    /// Members are sampled as McShane projections of uniform vectors in `[−r, r]^n`.
    pub fn probe_density(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let n = self.space.len();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-self.r..=self.r)).collect();
            let g = mcshane_clip(&self.space, &q, self.r);
            worst = worst.max(self.distance_to(&g));
        }
        worst
    }

    /// State metric generated by every member.
    pub fn state_metric(&self, states: &[Measure]) -> Result<Vec<Vec<f64>>> {
        if states.iter().any(|m| !same_space(m.space(), &self.space)) {
            return Err(Error::SpaceMismatch);
        }
        let funcs: Vec<(&[f64], f64)> = self.functions().map(|f| (f, lipschitz_of(&self.space, f))).collect();
        state_metric_raw(states, funcs.into_iter())
    }

    /// Sup-norm Hausdorff distance between two nuclei on spaces of equal size.
    pub fn hausdorff(&self, other: &Nucleus) -> f64 {
        crate::metric_space::hausdorff_with(self.len(), other.len(), |i, j| {
            self.function(i)
                .iter()
                .zip(other.function(j))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
    }
}

/// Sup-norm `eps`-net of the `r`-bounded 1-Lipschitz functions on `x`.
///
/// Values are rounded to a grid of step `2·eps` (so every ball member is within
/// `eps` of a grid vector) and each admissible grid vector is projected back
/// into the ball by [`mcshane_clip`], which keeps it within `eps` of the member
/// it came from. Only grid vectors with `|q_i − q_j| ≤ ρ_ij + 2·eps` can be
/// roundings of members, so the enumeration is pruned to those.
pub fn nucleus_net(x: &Arc<FiniteMetricSpace>, r: f64, eps: f64) -> Result<Nucleus> {
    nucleus_net_with_cap(x, r, eps, LIMITS.nucleus_cap)
}

pub fn nucleus_net_with_cap(x: &Arc<FiniteMetricSpace>, r: f64, eps: f64, cap: usize) -> Result<Nucleus> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::arg("eps must be positive"));
    }
    if !(r >= x.radius() - TOL.metric) || !r.is_finite() {
        return Err(Error::Precondition(format!("r = {r} is below the radius {}", x.radius())));
    }
    let step = 2.0 * eps;
    let kmax = (r / step).floor() as i64;
    let mut grid: Vec<f64> = (-kmax..=kmax).map(|k| k as f64 * step).collect();
    if grid[0] > -r {
        grid.insert(0, -r);
    }
    if *grid.last().unwrap() < r {
        grid.push(r);
    }
    let n = x.len();
    let leaf_cap = cap.saturating_mul(16);
    let leaves = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);

    let branches: Vec<HashSet<Vec<u64>>> = grid
        .par_iter()
        .map(|&q0| {
            let mut set = HashSet::new();
            let mut q = vec![0.0; n];
            q[0] = q0;
            nucleus_dfs(x, &grid, r, step, 1, &mut q, &mut set, &leaves, leaf_cap, &abort, cap);
            set
        })
        .collect();
    if abort.load(Ordering::Relaxed) {
        return Err(Error::SizeCap {
            what: "nucleus_net (increase eps)",
            needed: leaves.load(Ordering::Relaxed).max(cap + 1) as u128,
            cap,
        });
    }
    let mut all: HashSet<Vec<u64>> = HashSet::new();
    for b in branches {
        all.extend(b);
        if all.len() > cap {
            return Err(Error::SizeCap {
                what: "nucleus_net (increase eps)",
                needed: all.len() as u128,
                cap,
            });
        }
    }
    let mut funcs: Vec<Vec<f64>> = all.into_iter().map(|v| v.into_iter().map(f64::from_bits).collect()).collect();
    funcs.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = funcs.concat();
    Ok(Nucleus {
        space: Arc::clone(x),
        r,
        density: eps,
        values,
    })
}

#[allow(clippy::too_many_arguments)]
fn nucleus_dfs(
    x: &FiniteMetricSpace,
    grid: &[f64],
    r: f64,
    step: f64,
    pos: usize,
    q: &mut Vec<f64>,
    out: &mut HashSet<Vec<u64>>,
    leaves: &AtomicUsize,
    leaf_cap: usize,
    abort: &AtomicBool,
    cap: usize,
) {
    if abort.load(Ordering::Relaxed) {
        return;
    }
    let n = q.len();
    if pos == n {
        if leaves.fetch_add(1, Ordering::Relaxed) >= leaf_cap || out.len() > cap {
            abort.store(true, Ordering::Relaxed);
            return;
        }
        let g = mcshane_clip(x, q, r);
        out.insert(g.into_iter().map(|v| (v + 0.0).to_bits()).collect());
        return;
    }
    let slack = step + 1e-12;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for j in 0..pos {
        lo = lo.max(q[j] - x.d(pos, j) - slack);
        hi = hi.min(q[j] + x.d(pos, j) + slack);
    }
    let start = grid.partition_point(|&v| v < lo);
    for &v in grid[start..].iter().take_while(|&&v| v <= hi) {
        q[pos] = v;
        nucleus_dfs(x, grid, r, step, pos + 1, q, out, leaves, leaf_cap, abort, cap);
    }
}

/// Hermitian-matrix-valued function on the points.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixObservable {
    space: Arc<FiniteMetricSpace>,
    n: usize,
    values: Vec<DMatrix<Complex64>>,
}

impl MatrixObservable {
    pub fn new(space: Arc<FiniteMetricSpace>, values: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::arg("matrix observable needs one matrix per point"));
        }
        let n = values.first().map_or(0, |m| m.nrows());
        if n == 0 {
            return Err(Error::arg("matrices must be at least 1x1"));
        }
        for (p, m) in values.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::arg(format!("matrix at point {p} is not {n}x{n}")));
            }
            let skew = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            if skew > TOL.hermitian || m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::arg(format!("matrix at point {p} is not Hermitian")));
            }
        }
        Ok(MatrixObservable { space, n, values })
    }

    /// `φ(x)·1ₙ` for a scalar observable `φ`.
    pub fn scalar(phi: &Observable, n: usize) -> Self {
        let values = phi
            .values
            .iter()
            .map(|&v| DMatrix::identity(n, n) * Complex64::new(v, 0.0))
            .collect();
        MatrixObservable {
            space: Arc::clone(&phi.space),
            n,
            values,
        }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[DMatrix<Complex64>] {
        &self.values
    }
}

/// Operator norm of a Hermitian matrix: largest absolute eigenvalue.
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().fold(0.0, |a, l| a.max(l.abs()))
}

fn normalized_trace(m: &DMatrix<Complex64>) -> f64 {
    m.trace().re / m.nrows() as f64
}

/// `x ↦ tr(F(x))` with the trace normalized so that `tr(1ₙ) = 1`.
pub fn matrix_trace_observable(f: &MatrixObservable) -> Observable {
    Observable {
        space: Arc::clone(&f.space),
        values: f.values.iter().map(normalized_trace).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipCertificate {
    pub member: bool,
    pub max_norm: f64,
    /// Point whose matrix exceeds `r` in operator norm.
    pub norm_violation: Option<usize>,
    /// First pair `(x, y)` with `‖F(x) − F(y)‖ > ρ(x, y)`.
    pub lipschitz_violation: Option<(usize, usize)>,
}

/// Checks `max_x ‖F(x)‖ ≤ r` and `‖F(x) − F(y)‖ ≤ ρ(x, y)` for all pairs.
pub fn matrix_nucleus_membership(f: &MatrixObservable, r: f64) -> MembershipCertificate {
    let norms: Vec<f64> = f.values.iter().map(op_norm).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let norm_violation = norms.iter().position(|&v| v > r + TOL.eigen);
    let mut lipschitz_violation = None;
    'outer: for a in 0..f.values.len() {
        for b in a + 1..f.values.len() {
            if op_norm(&(&f.values[a] - &f.values[b])) > f.space.d(a, b) + TOL.eigen {
                lipschitz_violation = Some((a, b));
                break 'outer;
            }
        }
    }
    MembershipCertificate {
        member: norm_violation.is_none() && lipschitz_violation.is_none(),
        max_norm,
        norm_violation,
        lipschitz_violation,
    }
}

/// `F = G + c·1ₙ + H` with `G` in the matrix nucleus and `H` tracially null.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub g: MatrixObservable,
    pub c: f64,
    pub h: MatrixObservable,
    pub membership: MembershipCertificate,
    /// Largest `|tr H(x)|`.
    pub trace_defect: f64,
    /// Largest entry of `|G + c·1 + H − F|`.
    pub reconstruction_error: f64,
}

/// Splits `F` as scalar part `(f̂ − c)·1ₙ`, constant `c` and traceless part `F − f̂·1ₙ`.
///
/// `c` is the midrange of `f̂`, so `‖G‖ ≤ (max f̂ − min f̂)/2 ≤ radius ≤ r`.
pub fn nucleus_decompose(f: &MatrixObservable, r: f64) -> Result<Decomposition> {
    let x = &f.space;
    if r < x.radius() - TOL.metric {
        return Err(Error::Precondition(format!("r = {r} is below the radius {}", x.radius())));
    }
    let fhat = matrix_trace_observable(f);
    let l = lipschitz_seminorm(&fhat);
    if l > 1.0 + TOL.lipschitz {
        return Err(Error::Precondition(format!(
            "trace observable has Lipschitz seminorm {l} > 1; scale the field first"
        )));
    }
    let hi = fhat.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = fhat.values.iter().copied().fold(f64::INFINITY, f64::min);
    let c = 0.5 * (hi + lo);
    let n = f.n;
    let id = DMatrix::<Complex64>::identity(n, n);
    let g_vals: Vec<_> = fhat.values.iter().map(|&v| &id * Complex64::new(v - c, 0.0)).collect();
    let h_vals: Vec<_> = f
        .values
        .iter()
        .zip(&fhat.values)
        .map(|(m, &v)| m - &id * Complex64::new(v, 0.0))
        .collect();
    let g = MatrixObservable {
        space: Arc::clone(x),
        n,
        values: g_vals,
    };
    let h = MatrixObservable {
        space: Arc::clone(x),
        n,
        values: h_vals,
    };
    let membership = matrix_nucleus_membership(&g, r);
    let trace_defect = h.values.iter().map(|m| normalized_trace(m).abs()).fold(0.0, f64::max);
    let reconstruction_error = (0..f.values.len())
        .map(|p| {
            let rebuilt = &g.values[p] + &id * Complex64::new(c, 0.0) + &h.values[p];
            (rebuilt - &f.values[p]).iter().fold(0.0f64, |a, z| a.max(z.norm()))
        })
        .fold(0.0, f64::max);
    Ok(Decomposition {
        g,
        c,
        h,
        membership,
        trace_defect,
        reconstruction_error,
    })
}
