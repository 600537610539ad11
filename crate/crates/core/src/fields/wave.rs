use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::MetricField;
use crate::config::TOL;
use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;

/// A string vibrating with zero initial velocity:
/// `u(x, t) = Σ_k a_k sin(kπx/L) cos(kπct/L)` on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub coefficients: Vec<f64>,
    pub speed: f64,
    pub length: f64,
}

impl WaveProfile {
    pub fn new(coefficients: Vec<f64>, speed: f64, length: f64) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::arg("need at least one finite coefficient"));
        }
        if !(speed > 0.0 && length > 0.0) || !speed.is_finite() || !length.is_finite() {
            return Err(Error::arg("speed and length must be positive"));
        }
        Ok(WaveProfile {
            coefficients,
            speed,
            length,
        })
    }

    /// Triangular pluck of height `height` at `x0`, truncated to `modes` sine modes.
    pub fn pluck(height: f64, x0: f64, modes: usize, speed: f64, length: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0 < length) || modes == 0 {
            return Err(Error::arg("pluck point must lie strictly inside the string"));
        }
        let coefficients = (1..=modes)
            .map(|k| {
                let k = k as f64;
                2.0 * height * length * length / (k * k * PI * PI * x0 * (length - x0)) * (k * PI * x0 / length).sin()
            })
            .collect();
        WaveProfile::new(coefficients, speed, length)
    }

    /// Default pluck: height 0.5 at a third of the string, 16 modes, unit speed, length π.
    pub fn default_pluck() -> Self {
        WaveProfile::pluck(0.5, PI / 3.0, 16, 1.0, PI).expect("valid defaults")
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        let w = PI / self.length;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let k = (k + 1) as f64;
                a * (k * w * x).sin() * (k * w * self.speed * t).cos()
            })
            .sum()
    }

    /// `∂u/∂x`, summed from the series.
    pub fn slope(&self, x: f64, t: f64) -> f64 {
        let w = PI / self.length;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let k = (k + 1) as f64;
                a * k * w * (k * w * x).cos() * (k * w * self.speed * t).cos()
            })
            .sum()
    }

    /// Time period `2L/c` of the truncated series.
    pub fn period(&self) -> f64 {
        2.0 * self.length / self.speed
    }

    /// Arc length of the string between `a` and `b` at time `t`, with an error estimate.
    pub fn arc_length(&self, a: f64, b: f64, t: f64) -> Result<(f64, f64)> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        adaptive_simpson(&|x| (1.0 + self.slope(x, t).powi(2)).sqrt(), lo, hi, TOL.quadrature)
    }
}

/// Adaptive Simpson quadrature; returns the value and the accumulated error estimate.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let v = simpson_step(f, a, b, fa, fm, fb, whole, tol, 60, &mut err)?;
    Ok((v, err))
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return Err(Error::Solver(format!("quadrature did not converge on [{a}, {b}]")));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)?)
}

/// Cumulative arc length along the grid; a flat string uses the coordinates themselves,
/// so its distances are exactly Euclidean.
fn cumulative(profile: &WaveProfile, xs: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    if profile.coefficients.iter().all(|&c| c == 0.0) {
        return Ok((xs.to_vec(), 0.0));
    }
    let mut acc = vec![0.0];
    let mut err = 0.0;
    for w in xs.windows(2) {
        let (v, e) = profile.arc_length(w[0], w[1], t)?;
        acc.push(acc.last().unwrap() + v);
        err += e;
    }
    Ok((acc, err))
}

fn check_grid(profile: &WaveProfile, ts: &[f64], xs: &[f64]) -> Result<()> {
    if ts.is_empty() || xs.len() < 2 {
        return Err(Error::arg("need at least one time and two points"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs[0] < 0.0 || *xs.last().unwrap() > profile.length {
        return Err(Error::arg("x grid must increase strictly inside the string"));
    }
    Ok(())
}

fn labels(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|x| format!("{x:.6}")).collect()
}

/// Arc-length metrics `ρ_t(a, b)` on the grid `xs` for each `t`.
///
/// Distances are differences of cumulative arc length, so collinear triples are additive.
pub fn wave_metric_field(profile: &WaveProfile, ts: &[f64], xs: &[f64]) -> Result<MetricField> {
    use rayon::prelude::*;
    check_grid(profile, ts, xs)?;
    let fibres: Vec<(FiniteMetricSpace, f64)> = ts
        .par_iter()
        .map(|&t| {
            let (acc, err) = cumulative(profile, xs, t)?;
            let d = acc.iter().map(|a| acc.iter().map(|b| (a - b).abs()).collect()).collect();
            Ok((FiniteMetricSpace::new(labels(xs), d)?, err))
        })
        .collect::<Result<_>>()?;
    let err = fibres.iter().map(|f| f.1).fold(0.0, f64::max);
    let mut field = MetricField::new(ts.to_vec(), fibres.into_iter().map(|f| Arc::new(f.0)).collect())?;
    field.quadrature_error = err;
    Ok(field)
}

/// Identifies the endpoints of the string: `xs` must start at 0, and the loop closes at `L`.
///
/// `ρ'(a, b) = min{ρ(a, b), ρ(0, a) + ρ(b, L), ρ(0, b) + ρ(a, L)}`, which is the
/// shorter of the two arcs on a loop of length `ρ(0, L)`.
pub fn circle_wave_metric(profile: &WaveProfile, ts: &[f64], xs: &[f64]) -> Result<MetricField> {
    use rayon::prelude::*;
    check_grid(profile, ts, xs)?;
    if xs[0] != 0.0 || *xs.last().unwrap() >= profile.length {
        return Err(Error::arg("circle grid must start at 0 and stay below the string length"));
    }
    let mut closed = xs.to_vec();
    closed.push(profile.length);
    let n = xs.len();
    let fibres: Vec<(FiniteMetricSpace, f64)> = ts
        .par_iter()
        .map(|&t| {
            let (acc, err) = cumulative(profile, &closed, t)?;
            let total = acc[n];
            let d = (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            let direct = (acc[a] - acc[b]).abs();
                            let wrap1 = acc[a] + (total - acc[b]);
                            let wrap2 = acc[b] + (total - acc[a]);
                            direct.min(wrap1).min(wrap2)
                        })
                        .collect()
                })
                .collect();
            Ok((FiniteMetricSpace::new(labels(xs), d)?, err))
        })
        .collect::<Result<_>>()?;
    let err = fibres.iter().map(|f| f.1).fold(0.0, f64::max);
    let mut field = MetricField::new(ts.to_vec(), fibres.into_iter().map(|f| Arc::new(f.0)).collect())?;
    field.quadrature_error = err;
    Ok(field)
}
