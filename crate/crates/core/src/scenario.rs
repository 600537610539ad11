//! Scenario files: one JSON document describes one experiment.
//!
//! [`run`] returns the report and all artifacts in memory; writing them is the
//! caller's job. Errors while building inputs count as configuration errors,
//! errors from the computation itself as domain errors.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::distances::{dq_upper, fukaya_distance, gh_distance_with_budget, intertwining_gap, BoundKind, SearchBudget, SimplexNet};
use crate::dynamics::{birkhoff_rate, deform, rotation, sine_pluck, Conjugator, DynMap};
use crate::error::Error;
use crate::fields::{
    circle_wave_metric, field_continuity_check, lipschitz_envelope, nucleus_field, rotation_field, wave_metric_field, MetricField,
    WaveProfile,
};
use crate::io::{columns_csv, coupling_csv, matrix_csv, nucleus_csv, MeasureSpec, SpaceSpec};
use crate::lipgeometry::{nucleus_net, Nucleus};
use crate::markov::{cantor_net, ldp_experiment_with, two_contractions, DeviationClass};
use crate::metric_space::FiniteMetricSpace;
use crate::plot::{curve_svg, emit_plot, ldp_svg, Plot, PlotKind, Series, Style};
use crate::transport::{wasserstein1_with_potential, wasserstein_inf};
use crate::{selfcheck, LIMITS, VERSION};

/// Parameter grid: an explicit list or `count` equispaced points from `start` to `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, end: f64, count: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, Error> {
        match *self {
            Grid::List(ref v) if !v.is_empty() => Ok(v.clone()),
            Grid::List(_) => Err(Error::Parse("empty grid".into())),
            Grid::Range { start, end, count } => match count {
                0 => Err(Error::Parse("grid count must be positive".into())),
                1 => Ok(vec![start]),
                _ => Ok((0..count).map(|i| start + (end - start) * i as f64 / (count - 1) as f64).collect()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AnalyticFn {
    Shift { by: f64 },
    Affine { a: f64, b: f64 },
    SinePluck { t: f64 },
}

impl AnalyticFn {
    fn eval(self, x: f64) -> f64 {
        match self {
            AnalyticFn::Shift { by } => x + by,
            AnalyticFn::Affine { a, b } => a * x + b,
            AnalyticFn::SinePluck { t } => sine_pluck(t)(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsKind {
    Rotation { steps: i64 },
    Analytic { function: AnalyticFn },
    Table { table: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeformSpec {
    SinePluck { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    #[serde(flatten)]
    pub map: DynamicsKind,
    #[serde(default)]
    pub deform: Option<DeformSpec>,
}

impl DynamicsSpec {
    pub fn build(&self, x: &Arc<FiniteMetricSpace>) -> Result<DynMap, Error> {
        let h = match &self.map {
            DynamicsKind::Rotation { steps } => rotation(x, *steps)?,
            DynamicsKind::Analytic { function } => {
                let f = *function;
                DynMap::analytic(Arc::clone(x), move |v| f.eval(v))?
            }
            DynamicsKind::Table { table } => DynMap::from_table(Arc::clone(x), table.clone())?,
        };
        match self.deform {
            None => Ok(h),
            Some(DeformSpec::SinePluck { t }) => {
                let g = sine_pluck(t);
                deform(Conjugator::Analytic(&g), &h)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NucleusSpec {
    pub r: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LdpClass {
    /// The whole Lipschitz ball; `r` defaults to the radius.
    Ball {
        #[serde(default)]
        r: Option<f64>,
    },
    Nucleus { r: f64, eps: f64 },
}

impl Default for LdpClass {
    fn default() -> Self {
        LdpClass::Ball { r: None }
    }
}

fn default_height() -> f64 {
    0.5
}
fn default_x0() -> f64 {
    PI / 3.0
}
fn default_modes() -> usize {
    16
}
fn one() -> f64 {
    1.0
}
fn pi() -> f64 {
    PI
}
fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    #[serde(default = "default_height")]
    pub height: f64,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "one")]
    pub speed: f64,
    #[serde(default = "pi")]
    pub length: f64,
    /// Explicit sine coefficients; overrides the pluck.
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    /// Glue the string ends into a circle.
    #[serde(default)]
    pub circle: bool,
}

impl Default for WaveParams {
    fn default() -> Self {
        WaveParams {
            height: default_height(),
            x0: default_x0(),
            modes: default_modes(),
            speed: 1.0,
            length: PI,
            coefficients: None,
            circle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveGrid {
    pub ts: Grid,
    pub xs: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub base: SpaceSpec,
    /// `c(θ) = offset + slope·θ`.
    #[serde(default = "one")]
    pub offset: f64,
    #[serde(default = "one")]
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub thetas: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum FieldSpec {
    Wave {
        #[serde(default)]
        params: WaveParams,
        grid: WaveGrid,
    },
    Scaled {
        params: ScaledParams,
        grid: ThetaGrid,
    },
}

impl FieldSpec {
    pub fn build(&self) -> Result<(MetricField, Value), Error> {
        match self {
            FieldSpec::Wave { params: p, grid } => {
                let profile = match &p.coefficients {
                    Some(c) => WaveProfile::new(c.clone(), p.speed, p.length)?,
                    None => WaveProfile::pluck(p.height, p.x0, p.modes, p.speed, p.length)?,
                };
                let (ts, xs) = (grid.ts.values()?, grid.xs.values()?);
                let field = if p.circle {
                    circle_wave_metric(&profile, &ts, &xs)?
                } else {
                    wave_metric_field(&profile, &ts, &xs)?
                };
                Ok((field, json!({ "profile": profile, "circle": p.circle })))
            }
            FieldSpec::Scaled { params: p, grid } => {
                let base = p.base.build()?;
                let thetas = grid.thetas.values()?;
                let (a, b) = (p.offset, p.slope);
                let field = MetricField::scaled(&base, &thetas, |t| a + b * t)?;
                Ok((field, json!({ "offset": a, "slope": b })))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScenario {
    #[serde(flatten)]
    pub field: FieldSpec,
    /// Also build fibre nuclei and check the retraction bounds.
    #[serde(default)]
    pub nucleus: Option<NucleusSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Wasserstein {
        space: SpaceSpec,
        mu: MeasureSpec,
        nu: MeasureSpec,
    },
    Gh {
        x: SpaceSpec,
        y: SpaceSpec,
        #[serde(default)]
        node_budget: Option<u64>,
    },
    Gap {
        x: SpaceSpec,
        y: SpaceSpec,
        #[serde(default = "two")]
        m: usize,
        #[serde(default)]
        max_maps: Option<u64>,
        #[serde(default)]
        delta: Option<f64>,
    },
    Nucleus {
        space: SpaceSpec,
        r: f64,
        eps: f64,
        #[serde(default)]
        probes: usize,
    },
    Birkhoff {
        space: SpaceSpec,
        dynamics: DynamicsSpec,
        nucleus: NucleusSpec,
        eps: f64,
        n_max: usize,
    },
    Ldp {
        depth: usize,
        eps: f64,
        n_values: Vec<usize>,
        trials: usize,
        #[serde(default)]
        class: LdpClass,
    },
    WaveField(FieldScenario),
    RotationField {
        p: u64,
        q: u64,
        ts: Grid,
        n: usize,
        #[serde(default = "two")]
        m: usize,
    },
    Check {},
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Wasserstein { .. } => "wasserstein",
            Scenario::Gh { .. } => "gh",
            Scenario::Gap { .. } => "gap",
            Scenario::Nucleus { .. } => "nucleus",
            Scenario::Birkhoff { .. } => "birkhoff",
            Scenario::Ldp { .. } => "ldp",
            Scenario::WaveField(_) => "wave-field",
            Scenario::RotationField { .. } => "rotation-field",
            Scenario::Check {} => "check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ScenarioFile {
    /// Parses a scenario and rejects keys that no field consumes.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let raw: Value = serde_json::from_str(text)?;
        let file: ScenarioFile = serde_json::from_value(raw.clone())?;
        unknown_key(&raw, &serde_json::to_value(&file)?, "")
            .map_or(Ok(file), |k| Err(Error::Parse(format!("unknown field `{k}`"))))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, Error> {
        Self::from_json(&crate::io::read_text(path)?)
    }
}

/// First key path present in `raw` but absent from the re-serialized `parsed`.
/// Flattened and internally tagged types cannot deny unknown fields themselves.
fn unknown_key(raw: &Value, parsed: &Value, at: &str) -> Option<String> {
    match (raw, parsed) {
        (Value::Object(a), Value::Object(b)) => a.iter().find_map(|(k, v)| {
            let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
            match b.get(k) {
                None => Some(path),
                Some(w) => unknown_key(v, w, &path),
            }
        }),
        (Value::Array(a), Value::Array(b)) => {
            a.iter().zip(b).enumerate().find_map(|(i, (v, w))| unknown_key(v, w, &format!("{at}[{i}]")))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// False when the scenario ran but its checks failed.
    pub passed: bool,
    /// `{version, kind, seed, passed, result}`.
    pub report: Value,
    /// CSV and SVG files; the report is not included.
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(Error),
    #[error("domain error: {0}")]
    Domain(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Domain(_) => 1,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_configuration() {
            RunError::Config(e)
        } else {
            RunError::Domain(e)
        }
    }
}

fn cfg<T>(r: Result<T, Error>) -> Result<T, RunError> {
    r.map_err(RunError::Config)
}

struct Out {
    artifacts: Vec<Artifact>,
}

impl Out {
    fn csv(&mut self, name: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact {
            name: name.into(),
            format: Format::Csv,
            contents,
        });
    }

    fn svg(&mut self, name: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact {
            name: name.into(),
            format: Format::Svg,
            contents,
        });
    }
}

fn grid_labels(v: &[f64]) -> Vec<String> {
    v.iter().map(|t| t.to_string()).collect()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Runs one scenario. `seed` overrides the seed stored in the file; the default seed is 0.
pub fn run(file: &ScenarioFile, seed: Option<u64>) -> Result<Outcome, RunError> {
    let seed = seed.or(file.seed).unwrap_or(0);
    let mut out = Out { artifacts: Vec::new() };
    let mut passed = true;
    let result: Value = match &file.scenario {
        Scenario::Wasserstein { space, mu, nu } => {
            let x = cfg(space.build())?;
            let (a, b) = (cfg(mu.build(&x))?, cfg(nu.build(&x))?);
            let (w1, coupling, potential) = wasserstein1_with_potential(&a, &b)?;
            let winf = wasserstein_inf(&a, &b)?;
            out.csv("coupling.csv", coupling_csv(&x, &coupling));
            let idx: Vec<f64> = (0..x.len()).map(|i| i as f64).collect();
            out.csv("potential.csv", columns_csv(&["point", "potential"], &[idx, potential.values.clone()])?);
            json!({ "w1": w1, "w_inf": winf, "potential_lipschitz": potential.lipschitz, "labels": x.labels() })
        }
        Scenario::Gh { x, y, node_budget } => {
            let (x, y) = (cfg(x.build())?, cfg(y.build())?);
            to_value(&gh_distance_with_budget(&x, &y, node_budget.unwrap_or(LIMITS.gh_nodes)))
        }
        Scenario::Gap { x, y, m, max_maps, delta } => {
            let (bx, by) = (cfg(x.build())?, cfg(y.build())?);
            let (sx, sy) = (SimplexNet::grid(bx, *m)?, SimplexNet::grid(by, *m)?);
            let mut budget = SearchBudget::default();
            if let Some(mm) = max_maps {
                budget.max_maps = *mm as u128;
            }
            let gap = intertwining_gap(&sx, &sy, &budget)?;
            let fuk = fukaya_distance(&sx, &sy, &budget)?;
            let dq = dq_upper(&sx, &sy, &gap.forward.forward, delta.or(Some(gap.gamma)))?;
            let mut flags = Vec::new();
            if gap.kind == BoundKind::Upper {
                flags.push("gamma_not_exhaustive");
            }
            if fuk.kind == BoundKind::Upper {
                flags.push("fukaya_not_exhaustive");
            }
            if fuk.value > gap.gamma + 1e-12 {
                flags.push("fukaya_exceeds_gamma");
            }
            json!({
                "gamma": gap.gamma,
                "fukaya": fuk.value,
                "dq_upper": dq.value,
                "delta": dq.delta,
                "net_density": sx.density().max(sy.density()),
                "flags": flags,
                "witness": { "forward": gap.forward.forward, "backward": gap.forward.backward },
                "gap_report": gap,
            })
        }
        Scenario::Nucleus { space, r, eps, probes } => {
            let x = cfg(space.build())?;
            let nuc: Nucleus = nucleus_net(&x, *r, *eps)?;
            let probed = (*probes > 0).then(|| nuc.probe_density(*probes, seed));
            out.csv("nucleus.csv", nucleus_csv(&nuc));
            json!({ "size": nuc.len(), "r": nuc.r(), "density": nuc.density(), "probed_density": probed })
        }
        Scenario::Birkhoff {
            space,
            dynamics,
            nucleus,
            eps,
            n_max,
        } => {
            let x = cfg(space.build())?;
            let h = dynamics.build(&x)?;
            let nuc = nucleus_net(&x, nucleus.r, nucleus.eps)?;
            let rep = birkhoff_rate(&h, &nuc, *eps, *n_max)?;
            let ns: Vec<f64> = (1..=rep.n_max).map(|n| n as f64).collect();
            out.csv("birkhoff.csv", columns_csv(&["n", "deviation"], &[ns.clone(), rep.curve.clone()])?);
            let pts: Vec<(f64, f64)> = ns.iter().copied().zip(rep.curve.iter().copied()).collect();
            out.svg("birkhoff.svg", curve_svg("Birkhoff deviation", "n", "deviation", &pts, PlotKind::Line)?);
            json!({ "report": rep, "projection_error": h.projection_error(), "nucleus_size": nuc.len(), "nucleus_density": nuc.density() })
        }
        Scenario::Ldp {
            depth,
            eps,
            n_values,
            trials,
            class,
        } => {
            let x = Arc::new(cfg(cantor_net(*depth))?);
            let family = two_contractions(&x)?;
            let nuc;
            let class = match *class {
                LdpClass::Ball { r } => DeviationClass::LipschitzBall { r: r.unwrap_or(x.radius()) },
                LdpClass::Nucleus { r, eps } => {
                    nuc = nucleus_net(&x, r, eps)?;
                    DeviationClass::Nucleus(&nuc)
                }
            };
            let rep = ldp_experiment_with(&family, class, *eps, n_values, *trials, seed)?;
            let ns: Vec<f64> = rep.n_values.iter().map(|&n| n as f64).collect();
            out.csv(
                "ldp.csv",
                columns_csv(&["n", "probability", "std_error"], &[ns, rep.probabilities.clone(), rep.std_errors.clone()])?,
            );
            if rep.probabilities.iter().any(|&p| p > 0.0) {
                out.svg("ldp.svg", ldp_svg(&rep)?);
            }
            to_value(&rep)
        }
        Scenario::WaveField(fs) => {
            let (field, params) = cfg(fs.field.build())?;
            let thetas = field.thetas().to_vec();
            for (i, f) in field.fibres().iter().enumerate() {
                out.csv(format!("fibre_{i:03}.csv"), matrix_csv(f.labels(), &f.matrix()));
            }
            let env = if field.len() >= 2 { Some(lipschitz_envelope(&field)?) } else { None };
            if let Some(e) = &env {
                let labels = grid_labels(&thetas);
                out.csv("k.csv", matrix_csv(&labels, &e.k));
                out.csv("big_k.csv", matrix_csv(&labels, &e.big_k));
                out.csv(
                    "envelope.csv",
                    columns_csv(&["theta", "m_lower", "m_upper"], &[thetas.clone(), e.m_lower.clone(), e.m_upper.clone()])?,
                );
                let series = |name: &str, v: &[f64]| Series {
                    name: name.into(),
                    points: thetas.iter().copied().zip(v.iter().copied()).collect(),
                    style: Style::Line,
                };
                out.svg(
                    "envelope.svg",
                    emit_plot(&Plot {
                        title: "Ratio envelope against the first fibre".into(),
                        x_label: "theta".into(),
                        y_label: "ratio".into(),
                        kind: PlotKind::Line,
                        series: vec![series("inf ratio", &e.m_lower), series("sup ratio", &e.m_upper)],
                    })?,
                );
            }
            // Distance functions to each point of the first fibre, held constant across the field.
            let base = &field.fibres()[0];
            let sections: Vec<Vec<Vec<f64>>> = (0..base.len()).map(|y| vec![base.row(y).to_vec(); field.len()]).collect();
            let cont = field_continuity_check(&field, &sections, 1e-9)?;
            let mut cols = vec![thetas.clone()];
            cols.extend(cont.values.iter().cloned());
            let headers: Vec<String> = std::iter::once("theta".to_string())
                .chain(base.labels().iter().map(|l| format!("dist_to_{l}")))
                .collect();
            let hdr: Vec<&str> = headers.iter().map(String::as_str).collect();
            out.csv("continuity.csv", columns_csv(&hdr, &cols)?);
            let nuc = match fs.nucleus {
                Some(ns) => {
                    let rep = nucleus_field(&field, ns.r, ns.eps)?;
                    let idx: Vec<f64> = (0..rep.hausdorff.len()).map(|i| i as f64).collect();
                    out.csv(
                        "nucleus_field.csv",
                        columns_csv(
                            &["pair", "hausdorff", "displacement", "displacement_bound"],
                            &[idx, rep.hausdorff.clone(), rep.displacement.clone(), rep.displacement_bound.clone()],
                        )?,
                    );
                    passed &= rep.membership_violations == 0 && rep.within_bound;
                    Some(to_value(&rep))
                }
                None => None,
            };
            if let Some(e) = &env {
                passed &= e.sandwich_violation <= 1e-9;
            }
            json!({
                "params": params,
                "thetas": thetas,
                "quadrature_error": field.quadrature_error,
                "envelope": env,
                "continuity": cont,
                "nucleus_field": nuc,
            })
        }
        Scenario::RotationField { p, q, ts, n, m } => {
            let ts = cfg(ts.values())?;
            let rep = rotation_field(*p, *q, &ts, *n, *m)?;
            let labels = grid_labels(&ts);
            out.csv("d_hat.csv", matrix_csv(&labels, &rep.d_hat));
            out.csv("gamma.csv", matrix_csv(&labels, &rep.gamma));
            out.csv("map_distortion.csv", matrix_csv(&labels, &rep.map_distortion));
            let mid = ts.len() / 2;
            let series = |name: String, v: &[f64]| Series {
                name,
                points: ts.iter().copied().zip(v.iter().copied()).collect(),
                style: Style::Line,
            };
            out.svg(
                "rotation_field.svg",
                emit_plot(&Plot {
                    title: format!("Distances to the fibre t = {}", ts[mid]),
                    x_label: "t".into(),
                    y_label: "distance".into(),
                    kind: PlotKind::Line,
                    series: vec![series("d_hat".into(), &rep.d_hat[mid]), series("gamma".into(), &rep.gamma[mid])],
                })?,
            );
            passed &= rep.symmetric && rep.diagonal_zero;
            to_value(&rep)
        }
        Scenario::Check {} => {
            let rep = selfcheck::run(seed);
            passed &= rep.all_passed;
            to_value(&rep)
        }
    };
    Ok(Outcome {
        passed,
        report: json!({
            "version": VERSION,
            "kind": file.scenario.kind(),
            "seed": seed,
            "passed": passed,
            "result": result,
        }),
        artifacts: out.artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_json(text: &str) -> Result<Outcome, RunError> {
        run(&ScenarioFile::from_json(text).map_err(RunError::Config)?, None)
    }

    #[test]
    fn unknown_keys_are_configuration_errors() {
        for text in [
            r#"{"kind":"check","bogus":1}"#,
            r#"{"kind":"wave-field","field":"wave","params":{"hieght":0.5},"grid":{"ts":[0],"xs":[0,1]}}"#,
            r#"{"kind":"ldp","depth":3,"eps":0.1,"n_values":[4],"trials":5,"class":{"type":"ball","radius":1}}"#,
        ] {
            let e = ScenarioFile::from_json(text).unwrap_err();
            assert!(e.is_configuration(), "{text}: {e}");
        }
        assert!(ScenarioFile::from_json(r#"{"kind":"check","seed":3}"#).is_ok());
    }

    #[test]
    fn wasserstein_of_point_masses_is_the_distance() {
        let o = run_json(
            r#"{"kind":"wasserstein","space":{"kind":"interval","n":5,"length":2.0},"mu":{"dirac":1},"nu":{"dirac":4}}"#,
        )
        .unwrap();
        assert!((o.report["result"]["w1"].as_f64().unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(o.report["version"], VERSION);
        assert!(o.artifacts.iter().any(|a| a.name == "coupling.csv"));
    }

    #[test]
    fn configuration_and_domain_errors_differ() {
        assert_eq!(run_json(r#"{"kind":"nope"}"#).unwrap_err().exit_code(), 2);
        let bad_metric = r#"{"kind":"nucleus","space":{"kind":"matrix","dist":[[0,1],[3,0]]},"r":1,"eps":0.5}"#;
        assert_eq!(run_json(bad_metric).unwrap_err().exit_code(), 2);
        let small_r = r#"{"kind":"nucleus","space":{"kind":"interval","n":3,"length":2},"r":0.1,"eps":0.5}"#;
        assert_eq!(run_json(small_r).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn dynamics_json_with_deformation() {
        let o = run_json(
            r#"{"kind":"birkhoff","space":{"kind":"circle","n":8,"circumference":3.141592653589793},
                "dynamics":{"kind":"rotation","steps":1,"deform":{"kind":"sine_pluck","t":0.0}},
                "nucleus":{"r":1.0,"eps":0.5},"eps":0.2,"n_max":16}"#,
        )
        .unwrap();
        let curve = o.report["result"]["report"]["curve"].as_array().unwrap();
        assert_eq!(curve[7].as_f64().unwrap(), 0.0);
        let table = r#"{"kind":"birkhoff","space":{"kind":"interval","n":3,"length":1},
            "dynamics":{"kind":"table","table":[1,2,0]},"nucleus":{"r":0.5,"eps":0.25},"eps":0.1,"n_max":6}"#;
        assert!(run_json(table).is_ok());
    }

    #[test]
    fn scaled_field_scenario() {
        let o = run_json(
            r#"{"kind":"wave-field","field":"scaled","params":{"base":{"kind":"interval","n":3,"length":1}},
                "grid":{"thetas":{"start":0,"end":0.5,"count":3}},"nucleus":{"r":0.75,"eps":0.25}}"#,
        )
        .unwrap();
        assert!(o.passed, "{}", o.report);
        assert!(o.artifacts.iter().any(|a| a.name == "continuity.csv"));
    }

    #[test]
    fn grids() {
        assert_eq!(Grid::Range { start: 0.0, end: 1.0, count: 3 }.values().unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(Grid::List(vec![]).values().is_err());
    }
}
