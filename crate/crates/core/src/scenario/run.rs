use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::thread;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CheckSpec, Model, OddSpec, ResolvedEntry, Scenario};
use crate::chern::{self, BouquetEntry, Normalization};
use crate::error::{Error, Result};
use crate::forms::FormValue;
use crate::geometry::{self, FixedStratum};
use crate::linalg::{self, c};
use crate::transport::{self, integrate_interval, TransportProblem};

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Artifacts are written here when set.
    pub out: Option<PathBuf>,
    pub steps: Option<usize>,
    pub grid: Option<usize>,
    pub normalization: Option<Normalization>,
    pub tolerance_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out: None,
            steps: None,
            grid: None,
            normalization: None,
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: String,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Summary {
    pub closedness_max: Option<f64>,
    pub axiom1_residual: Option<f64>,
    pub axiom2_residual: Option<f64>,
    pub chern_number: Option<f64>,
}

/// Deterministic for a given scenario and flags; wall times live in
/// [`Timing`] records instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub passed: bool,
    pub normalization: Normalization,
    pub summary: Summary,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub timings: Vec<Timing>,
    /// Artifact file names and contents, in report order.
    pub files: Vec<(String, Vec<u8>)>,
}

struct Measured {
    residual: f64,
    tolerance: f64,
    passed: bool,
    detail: String,
    files: Vec<(String, Vec<u8>)>,
    chern: Option<f64>,
}

impl Measured {
    fn below(residual: f64, tolerance: f64, detail: String) -> Self {
        Self {
            residual,
            tolerance,
            passed: residual <= tolerance,
            detail,
            files: vec![],
            chern: None,
        }
    }
}

fn kind(spec: &CheckSpec) -> &'static str {
    match spec {
        CheckSpec::Transport { .. } => "transport",
        CheckSpec::Character { .. } => "character",
        CheckSpec::Closedness { .. } => "closedness",
        CheckSpec::Axiom1 { .. } => "axiom1",
        CheckSpec::Axiom2 { .. } => "axiom2",
        CheckSpec::ChernNumber { .. } => "chern-number",
        CheckSpec::Infinitesimal { .. } => "infinitesimal",
        CheckSpec::Invariance { .. } => "invariance",
        CheckSpec::Flow { .. } => "flow",
        CheckSpec::Order { .. } => "order",
    }
}

fn check_name(spec: &CheckSpec) -> String {
    let (name, target) = match spec {
        CheckSpec::Transport { name, problem, .. }
        | CheckSpec::Flow { name, problem, .. }
        | CheckSpec::Order { name, problem, .. } => (name, problem),
        CheckSpec::Character { name, stratum, .. } => (name, stratum),
        CheckSpec::Closedness { name, entry, .. }
        | CheckSpec::Axiom1 { name, entry, .. }
        | CheckSpec::Axiom2 { name, entry, .. }
        | CheckSpec::ChernNumber { name, entry, .. } => (name, entry),
        CheckSpec::Infinitesimal { name, chart, .. } | CheckSpec::Invariance { name, chart, .. } => (name, chart),
    };
    name.clone().unwrap_or_else(|| format!("{}:{target}", kind(spec)))
}

fn file_name(prefix: &str, label: &str, ext: &str) -> String {
    let clean: String = label
        .chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || ch == '-' || ch == '.' {
                ch
            } else {
                '_'
            }
        })
        .collect();
    format!("{prefix}-{clean}.{ext}")
}

fn csv_bytes(header: &[String], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

struct Ctx<'a> {
    model: &'a Model,
    opts: &'a RunOptions,
    normalization: Normalization,
}

impl Ctx<'_> {
    fn tol(&self, given: Option<f64>, default: f64) -> f64 {
        given.unwrap_or(default) * self.opts.tolerance_scale
    }

    fn resolved(&self, label: &str) -> &ResolvedEntry {
        &self.model.entries[label]
    }

    fn entry(&self, label: &str, normalization: Normalization) -> Result<BouquetEntry> {
        let e = self.resolved(label);
        chern::chern_character(&self.model.charts[&e.chart], &e.g, &e.x, &e.stratum, normalization)
    }

    fn problem(&self, label: &str) -> Result<(TransportProblem, usize)> {
        self.model.problem(label, self.opts.steps)
    }

    fn execute(&self, spec: &CheckSpec) -> Result<Measured> {
        match spec {
            CheckSpec::Transport {
                problem,
                tolerance,
                relative,
                ..
            } => self.transport(problem, *tolerance, *relative),
            CheckSpec::Character {
                stratum,
                samples,
                seed,
                direction,
                tolerance,
                ..
            } => self.character(
                &check_name(spec),
                stratum,
                *samples,
                *seed,
                direction.as_deref(),
                *tolerance,
            ),
            CheckSpec::Closedness {
                entry,
                grid,
                step,
                tolerance,
                ..
            } => {
                let entry = self.entry(entry, self.normalization)?;
                let grid = self.opts.grid.or(*grid).unwrap_or(64);
                let r = entry.closedness(grid, step.unwrap_or(1e-4))?;
                Ok(Measured::below(
                    r.max_residual,
                    self.tol(*tolerance, 1e-6),
                    format!("{} points, worst at {:?}", r.samples, r.worst_point),
                ))
            }
            CheckSpec::Axiom1 {
                entry, h, tolerance, ..
            } => {
                let e = self.resolved(entry);
                let geom = &self.model.charts[&e.chart];
                let h = h.resolve(&self.model.group)?;
                let r = chern::bouquet_axiom1(geom, &h, &e.g, &e.x, &e.stratum, self.normalization)?;
                Ok(Measured::below(r, self.tol(*tolerance, 1e-7), String::new()))
            }
            CheckSpec::Axiom2 {
                entry,
                x,
                eps,
                tolerance,
                ..
            } => {
                let e = self.resolved(entry);
                let geom = &self.model.charts[&e.chart];
                let xx = self.model.lie(Some(x))?;
                let r = chern::bouquet_axiom2(geom, &e.g, &xx, &e.x, eps, &e.stratum)?;
                let detail = format!(
                    "eps {:?}, largest valid {:?}",
                    r.residuals.iter().map(|(e, _)| *e).collect::<Vec<_>>(),
                    r.largest_valid_eps
                );
                Ok(Measured::below(r.max_residual, self.tol(*tolerance, 1e-7), detail))
            }
            CheckSpec::ChernNumber {
                entry,
                expected,
                grid,
                tolerance,
                ..
            } => {
                let entry = self.entry(entry, Normalization::Chern)?;
                let count = grid.unwrap_or(400);
                let v = chern::integrate_entry(&entry, count)?;
                let scale = if *expected == 0.0 { 1.0 } else { expected.abs() };
                let mut m = Measured::below(
                    (v - Complex64::new(*expected, 0.0)).norm() / scale,
                    self.tol(*tolerance, 1e-3),
                    format!("integral {:.9} {:+.3e}i over {count}x{count} nodes", v.re, v.im),
                );
                m.chern = Some(v.re);
                Ok(m)
            }
            CheckSpec::Infinitesimal {
                chart,
                point,
                a,
                eps,
                steps,
                tolerance,
                ..
            } => {
                let geom = &self.model.charts[chart];
                let a = self.model.lie(a.as_deref())?;
                let e = self.model.group.identity();
                let r = transport::infinitesimal_holonomy(geom, point, &a, &e, eps, steps.unwrap_or(64))?;
                Ok(Measured::below(
                    r.deviation,
                    self.tol(*tolerance, 1e-6),
                    format!("eps {eps:?}"),
                ))
            }
            CheckSpec::Invariance {
                chart,
                g,
                grid,
                tolerance,
                ..
            } => {
                let geom = &self.model.charts[chart];
                let g = g.resolve(&self.model.group)?;
                let samples = if geom.dim() == 0 {
                    geom.chart.grid_points(1)
                } else {
                    geom.chart.interior_grid_points(grid.unwrap_or(9))
                };
                let r = geometry::check_invariance(geom, &g, &samples)?;
                Ok(Measured::below(
                    r.max_residual,
                    self.tol(*tolerance, 1e-8),
                    format!("{} points, worst at {:?}", r.samples, r.worst_point),
                ))
            }
            CheckSpec::Flow {
                problem,
                steps,
                tolerance,
                ..
            } => {
                let (p, default_steps) = self.problem(problem)?;
                let n = steps.unwrap_or(default_steps).max(2) / 2 * 2;
                let circ = p.circumference;
                let whole = integrate_interval(&p, 0.0, circ, n)?;
                let first = integrate_interval(&p, 0.0, 0.5 * circ, n / 2)?;
                let second = integrate_interval(&p, 0.5 * circ, circ, n / 2)?;
                let r = (&whole - &second.try_mul(&first)?).max_abs();
                Ok(Measured::below(
                    r,
                    self.tol(*tolerance, 1e-9),
                    format!("{n} steps split at c/2"),
                ))
            }
            CheckSpec::Order {
                problem,
                steps,
                min_order,
                ..
            } => {
                let (p, _) = self.problem(problem)?;
                let n = steps.unwrap_or(16);
                let order = transport::observed_order(&p, n)?;
                let min = min_order.unwrap_or(3.7);
                Ok(Measured {
                    residual: order,
                    tolerance: min,
                    passed: order >= min,
                    detail: format!(
                        "observed order {order:.3} from {n}/{}/{} steps (minimum {min})",
                        2 * n,
                        4 * n
                    ),
                    files: vec![],
                    chern: None,
                })
            }
        }
    }

    fn transport(&self, label: &str, tolerance: Option<f64>, relative: bool) -> Result<Measured> {
        let (problem, steps) = self.problem(label)?;
        let spec = self
            .model
            .scenario
            .problems
            .iter()
            .find(|p| p.label == label)
            .expect("checked reference");
        let res = transport::equivariant_holonomy_ode(&problem, steps)?;
        let q = res.holonomy.num_generators();
        let hol = transport::grassmann_to_form(&res.holonomy, q)?;
        let mut record = json!({
            "problem": label,
            "steps": steps,
            "step_change": res.solution.step_change,
            "under_resolved": res.solution.under_resolved,
            "loop": res.report.describe(),
            "holonomy": hol,
        });
        let measured = if problem.path.shape.is_constant() {
            let (x, _) = problem.path.position(0.0, problem.circumference);
            let closed = transport::super_holonomy_constant(&problem.geometry, &x, &problem.a, &problem.h)?;
            let diff = match spec.odd {
                OddSpec::Generic => hol.try_sub(&closed)?.max_abs(),
                OddSpec::Even => linalg::max_abs(&(hol.coeff(0) - closed.coeff(0))),
            };
            let scale = if relative { closed.max_abs() } else { 1.0 };
            record["closed_form"] = serde_json::to_value(&closed).expect("serializable");
            Measured::below(
                diff / scale,
                self.tol(tolerance, 1e-7),
                format!(
                    "{} error against c(h,x)·exp(F + μ(a)), {steps} steps",
                    if relative { "relative" } else { "absolute" }
                ),
            )
        } else {
            Measured::below(
                res.solution.step_change,
                self.tol(tolerance, 1e-6),
                format!("step-halving change at {steps} steps; {}", res.report.describe()),
            )
        };
        let mut measured = measured;
        measured
            .files
            .push((file_name("holonomy", label, "json"), json_bytes(&record)));
        Ok(measured)
    }

    fn character(
        &self,
        name: &str,
        stratum: &str,
        samples: usize,
        seed: u64,
        direction: Option<&[f64]>,
        tolerance: Option<f64>,
    ) -> Result<Measured> {
        let (chart, s) = &self.model.strata[stratum];
        let geom = &self.model.charts[chart];
        if s.dim() != 0 {
            return Err(Error::Validation(format!(
                "character checks need a point stratum, '{stratum}' has dimension {}",
                s.dim()
            )));
        }
        let group = &self.model.group;
        let unit: Vec<f64> = match direction {
            Some(d) => d.to_vec(),
            None => (0..group.dim()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        };
        let dir = group.lie_element(&unit)?;
        let p = s.embed(&[]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut rows = vec![];
        for _ in 0..samples {
            let phi = rng.random_range(-PI..PI);
            let xi = rng.random_range(-3.0..3.0);
            let g = group.exp(&(&dir * c(phi, 0.0)))?;
            let x = &dir * c(xi, 0.0);
            let value = chern::chern_character(geom, &g, &x, s, Normalization::Raw)?
                .form_at(&[])?
                .scalar_coeff(0);
            // Tr ρ(g e^X)
            let oracle = geom.cocycle(&(&g * group.exp(&x)?), &p).trace();
            worst = worst.max((value - oracle).norm());
            rows.push(
                [phi, xi, value.re, value.im, oracle.re, oracle.im]
                    .iter()
                    .map(|v| v.to_string())
                    .collect(),
            );
        }
        let header = ["phi", "xi", "re", "im", "oracle_re", "oracle_im"].map(String::from);
        let mut m = Measured::below(
            worst,
            self.tol(tolerance, 1e-12),
            format!("{samples} samples, seed {seed}"),
        );
        m.files
            .push((file_name("character", name, "csv"), csv_bytes(&header, rows)?));
        Ok(m)
    }

    fn entry_table(&self, label: &str) -> Result<(String, Vec<u8>)> {
        let entry = self.entry(label, self.normalization)?;
        let grid = self.opts.grid.unwrap_or(self.model.scenario.output.grid);
        table(&entry.stratum, grid, |q| entry.form_at(q)).map(|bytes| (file_name("entry", label, "csv"), bytes))
    }
}

/// One row per stratum grid point and coefficient mask; coordinates are
/// ambient, mask bits index the stratum coordinates.
fn table(stratum: &FixedStratum, grid: usize, form: impl Fn(&[f64]) -> Result<FormValue>) -> Result<Vec<u8>> {
    let mut rows = vec![];
    let mut header = vec![];
    for (q, p) in stratum.samples(grid) {
        if header.is_empty() {
            header = (0..p.len()).map(|i| format!("x{i}")).collect();
            header.extend(["mask", "re", "im"].map(String::from));
        }
        let f = form(&q)?;
        for mask in 0..1usize << f.base_dim() {
            let z = f.scalar_coeff(mask);
            let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            row.extend([mask.to_string(), z.re.to_string(), z.im.to_string()]);
            rows.push(row);
        }
    }
    csv_bytes(&header, rows)
}

fn max_opt(acc: &mut Option<f64>, v: f64) {
    *acc = Some(acc.map_or(v, |a| a.max(v)));
}

/// Executes every check of `scenario` (concurrently) and assembles the
/// report in declaration order. Writes artifacts when `opts.out` is set.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    if !(opts.tolerance_scale > 0.0 && opts.tolerance_scale.is_finite()) {
        return Err(Error::Validation("tolerance scale must be positive".into()));
    }
    let model = Model::build(scenario)?;
    let ctx = Ctx {
        model: &model,
        opts,
        normalization: opts.normalization.unwrap_or(scenario.output.normalization),
    };
    let started = Instant::now();
    let (checks, tables) = thread::scope(|s| {
        let checks: Vec<_> = scenario
            .checks
            .iter()
            .map(|spec| {
                let ctx = &ctx;
                s.spawn(move || {
                    let t = Instant::now();
                    let r = ctx.execute(spec);
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        let tables: Vec<_> = scenario
            .entries
            .iter()
            .map(|e| {
                let ctx = &ctx;
                s.spawn(move || ctx.entry_table(&e.label))
            })
            .collect();
        (
            checks
                .into_iter()
                .map(|h| h.join().expect("check thread"))
                .collect::<Vec<_>>(),
            tables
                .into_iter()
                .map(|h| h.join().expect("table thread"))
                .collect::<Vec<_>>(),
        )
    });

    let mut results = vec![];
    let mut timings = vec![];
    let mut files = vec![];
    let mut summary = Summary::default();
    for (spec, (outcome, seconds)) in scenario.checks.iter().zip(checks) {
        let name = check_name(spec);
        let kind = kind(spec).to_string();
        timings.push(Timing {
            name: name.clone(),
            seconds,
        });
        let result = match outcome {
            Ok(m) => {
                match spec {
                    CheckSpec::Closedness { .. } => max_opt(&mut summary.closedness_max, m.residual),
                    CheckSpec::Axiom1 { .. } => max_opt(&mut summary.axiom1_residual, m.residual),
                    CheckSpec::Axiom2 { .. } => max_opt(&mut summary.axiom2_residual, m.residual),
                    _ => {}
                }
                if summary.chern_number.is_none() {
                    summary.chern_number = m.chern;
                }
                files.extend(m.files);
                CheckResult {
                    name,
                    kind,
                    status: if m.passed { Status::Pass } else { Status::Fail },
                    residual: Some(m.residual),
                    tolerance: m.tolerance,
                    detail: m.detail,
                }
            }
            Err(e) => CheckResult {
                name,
                kind,
                status: Status::Fail,
                residual: None,
                tolerance: 0.0,
                detail: e.to_string(),
            },
        };
        results.push(result);
    }
    for (spec, table) in scenario.entries.iter().zip(tables) {
        match table {
            Ok(f) => files.push(f),
            Err(e) => results.push(CheckResult {
                name: format!("entry:{}", spec.label),
                kind: "entry".into(),
                status: Status::Fail,
                residual: None,
                tolerance: 0.0,
                detail: e.to_string(),
            }),
        }
    }
    timings.push(Timing {
        name: "total".into(),
        seconds: started.elapsed().as_secs_f64(),
    });

    let mut artifacts: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    if opts.out.is_some() {
        artifacts.push("report.json".into());
        artifacts.push("timings.json".into());
    }
    let report = RunReport {
        scenario: scenario.name.clone(),
        passed: results.iter().all(|r| r.status == Status::Pass),
        normalization: ctx.normalization,
        summary,
        checks: results,
        artifacts,
    };
    if let Some(dir) = &opts.out {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        for (name, bytes) in &files {
            fs::write(dir.join(name), bytes).map_err(io)?;
        }
        fs::write(dir.join("report.json"), json_bytes(&report)).map_err(io)?;
        fs::write(dir.join("timings.json"), json_bytes(&timings)).map_err(io)?;
    }
    Ok(RunOutcome { report, timings, files })
}
