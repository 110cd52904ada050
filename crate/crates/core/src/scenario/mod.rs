//! Scenario files: a geometry per chart, strata, bouquet entries, transport
//! problems and the checks to run on them.

mod run;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chern::Normalization;
use crate::error::{Error, Result};
use crate::geometry::registry::{build_action, build_connection, ActionSpec, CocycleSpec, ConnectionSpec};
use crate::geometry::{self, group_by_name, Chart, EquivariantGeometry, FixedStratum, GroupModel};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::transport::{PathShape, SuperPath, TransportProblem, DEFAULT_STEPS};

pub use run::{run, CheckResult, RunOptions, RunOutcome, RunReport, Status, Summary, Timing};

const BUILTIN_SOURCES: [&str; 4] = [
    include_str!("../../scenarios/point-u1-weights.json"),
    include_str!("../../scenarios/monopole-s2.json"),
    include_str!("../../scenarios/weighted-c-plane.json"),
    include_str!("../../scenarios/su2-point.json"),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub group: String,
    pub rank: usize,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub strata: Vec<StratumSpec>,
    #[serde(default)]
    pub entries: Vec<EntrySpec>,
    #[serde(default)]
    pub problems: Vec<ProblemSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub label: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_chart_grid")]
    pub grid: usize,
    #[serde(default = "one")]
    pub orientation: f64,
    pub action: ActionSpec,
    pub cocycle: CocycleSpec,
    pub connection: ConnectionSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StratumSpec {
    Point {
        label: String,
        chart: String,
        point: Vec<f64>,
    },
    /// The whole chart.
    Chart { label: String, chart: String },
    /// A coordinate sub-box of the chart.
    Box {
        label: String,
        chart: String,
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default = "default_chart_grid")]
        grid: usize,
    },
}

impl StratumSpec {
    pub fn label(&self) -> &str {
        match self {
            StratumSpec::Point { label, .. } | StratumSpec::Chart { label, .. } | StratumSpec::Box { label, .. } => {
                label
            }
        }
    }

    fn chart(&self) -> &str {
        match self {
            StratumSpec::Point { chart, .. } | StratumSpec::Chart { chart, .. } | StratumSpec::Box { chart, .. } => {
                chart
            }
        }
    }
}

/// A group element: `"identity"`, `{"exp": coords}`, `{"matrix": rows of
/// [re, im]}` or `{"product": [..]}` (left to right).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Named(String),
    Exp { exp: Vec<f64> },
    Matrix { matrix: Vec<Vec<[f64; 2]>> },
    Product { product: Vec<ElementSpec> },
}

impl Default for ElementSpec {
    fn default() -> Self {
        ElementSpec::Named("identity".into())
    }
}

impl ElementSpec {
    pub fn resolve(&self, group: &GroupModel) -> Result<CMatrix> {
        let m = match self {
            ElementSpec::Named(name) if name == "identity" || name == "e" => group.identity(),
            ElementSpec::Named(name) => return Err(Error::Registry(format!("group element '{name}'"))),
            ElementSpec::Exp { exp } => group.exp_coords(exp)?,
            ElementSpec::Matrix { matrix } => linalg::from_rows(matrix)?,
            ElementSpec::Product { product } => {
                let mut acc = group.identity();
                for f in product {
                    acc *= f.resolve(group)?;
                }
                acc
            }
        };
        let k = group.matrix_size();
        if m.nrows() != k || m.ncols() != k {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for a group of {k}x{k} matrices",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub label: String,
    pub stratum: String,
    #[serde(default)]
    pub g: ElementSpec,
    /// Lie algebra coordinates; zeros when omitted.
    #[serde(default)]
    pub x: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OddSpec {
    /// `ψ^j = θ_j`, so the holonomy is a differential form.
    #[default]
    Generic,
    Even,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub label: String,
    pub chart: String,
    pub path: PathShape,
    #[serde(default)]
    pub odd: OddSpec,
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    #[serde(default)]
    pub h: ElementSpec,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "one")]
    pub circumference: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    /// ODE holonomy against `c(h,x)·exp(F + μ(a))` for constant loops, or the
    /// step-halving change otherwise.
    Transport {
        #[serde(default)]
        name: Option<String>,
        problem: String,
        #[serde(default)]
        tolerance: Option<f64>,
        #[serde(default)]
        relative: bool,
    },
    /// Point entries against `Tr c(g·e^X)` for random `g = e^{φH}`, `X = ξH`.
    Character {
        #[serde(default)]
        name: Option<String>,
        stratum: String,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        direction: Option<Vec<f64>>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Closedness {
        #[serde(default)]
        name: Option<String>,
        entry: String,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        step: Option<f64>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Axiom1 {
        #[serde(default)]
        name: Option<String>,
        entry: String,
        h: ElementSpec,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// `α_{ge^{εX}}(Y) = α_g(εX + Y)` with `g, Y` from the entry.
    Axiom2 {
        #[serde(default)]
        name: Option<String>,
        entry: String,
        x: Vec<f64>,
        #[serde(default = "default_axiom2_eps")]
        eps: Vec<f64>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    ChernNumber {
        #[serde(default)]
        name: Option<String>,
        entry: String,
        expected: f64,
        #[serde(default)]
        grid: Option<usize>,
        /// Relative to `|expected|` (absolute when it is zero).
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Infinitesimal {
        #[serde(default)]
        name: Option<String>,
        chart: String,
        point: Vec<f64>,
        #[serde(default)]
        a: Option<Vec<f64>>,
        #[serde(default = "default_infinitesimal_eps")]
        eps: Vec<f64>,
        #[serde(default)]
        steps: Option<usize>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Invariance {
        #[serde(default)]
        name: Option<String>,
        chart: String,
        g: ElementSpec,
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// `U(0,c) = U(s,c)·U(0,s)` on aligned step grids.
    Flow {
        #[serde(default)]
        name: Option<String>,
        problem: String,
        #[serde(default)]
        steps: Option<usize>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// Observed order under step halving, which must reach `min_order`.
    Order {
        #[serde(default)]
        name: Option<String>,
        problem: String,
        #[serde(default)]
        steps: Option<usize>,
        #[serde(default)]
        min_order: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Nodes per axis of the per-entry CSV tables.
    #[serde(default = "default_output_grid")]
    pub grid: usize,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            grid: default_output_grid(),
            normalization: Normalization::Raw,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_chart_grid() -> usize {
    9
}

fn default_output_grid() -> usize {
    16
}

fn default_samples() -> usize {
    20
}

fn default_axiom2_eps() -> Vec<f64> {
    vec![1e-2, 1e-3]
}

fn default_infinitesimal_eps() -> Vec<f64> {
    vec![1e-2, 5e-3]
}

impl Scenario {
    /// Parses a scenario; schema violations carry a JSON pointer.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            pointer: json_pointer(&e.path().to_string()),
            message: e.inner().to_string(),
        })?;
        scenario.check_references()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn check_references(&self) -> Result<()> {
        let charts: Vec<&str> = self.charts.iter().map(|c| c.label.as_str()).collect();
        let strata: Vec<&str> = self.strata.iter().map(StratumSpec::label).collect();
        let entries: Vec<&str> = self.entries.iter().map(|e| e.label.as_str()).collect();
        let problems: Vec<&str> = self.problems.iter().map(|p| p.label.as_str()).collect();
        unique("/charts", &charts)?;
        unique("/strata", &strata)?;
        unique("/entries", &entries)?;
        unique("/problems", &problems)?;
        if self.charts.is_empty() {
            return Err(schema("/charts", "at least one chart is required"));
        }
        for (i, s) in self.strata.iter().enumerate() {
            known(&format!("/strata/{i}/chart"), s.chart(), &charts)?;
        }
        for (i, e) in self.entries.iter().enumerate() {
            known(&format!("/entries/{i}/stratum"), &e.stratum, &strata)?;
        }
        for (i, p) in self.problems.iter().enumerate() {
            known(&format!("/problems/{i}/chart"), &p.chart, &charts)?;
            if !(p.circumference > 0.0 && p.circumference.is_finite()) {
                return Err(schema(&format!("/problems/{i}/circumference"), "must be positive"));
            }
        }
        for (i, c) in self.checks.iter().enumerate() {
            let at = |field: &str| format!("/checks/{i}/{field}");
            match c {
                CheckSpec::Transport { problem, tolerance, .. } => {
                    known(&at("problem"), problem, &problems)?;
                    positive(&at("tolerance"), *tolerance)?;
                }
                CheckSpec::Flow { problem, tolerance, .. } => {
                    known(&at("problem"), problem, &problems)?;
                    positive(&at("tolerance"), *tolerance)?;
                }
                CheckSpec::Order { problem, .. } => known(&at("problem"), problem, &problems)?,
                CheckSpec::Character { stratum, tolerance, .. } => {
                    known(&at("stratum"), stratum, &strata)?;
                    positive(&at("tolerance"), *tolerance)?;
                }
                CheckSpec::Closedness { entry, tolerance, .. }
                | CheckSpec::Axiom1 { entry, tolerance, .. }
                | CheckSpec::Axiom2 { entry, tolerance, .. }
                | CheckSpec::ChernNumber { entry, tolerance, .. } => {
                    known(&at("entry"), entry, &entries)?;
                    positive(&at("tolerance"), *tolerance)?;
                }
                CheckSpec::Infinitesimal { chart, tolerance, .. } | CheckSpec::Invariance { chart, tolerance, .. } => {
                    known(&at("chart"), chart, &charts)?;
                    positive(&at("tolerance"), *tolerance)?;
                }
            }
        }
        Ok(())
    }
}

fn json_pointer(path: &str) -> String {
    if path == "." {
        return "/".into();
    }
    let mut out = String::new();
    for part in path.split('.') {
        // serde_path_to_error renders sequence indices as `name[3]`
        let mut rest = part;
        while let Some(open) = rest.find('[') {
            let (head, tail) = rest.split_at(open);
            if !head.is_empty() {
                out.push('/');
                out.push_str(head);
            }
            let close = tail.find(']').unwrap_or(tail.len());
            out.push('/');
            out.push_str(&tail[1..close]);
            rest = tail.get(close + 1..).unwrap_or("");
        }
        if !rest.is_empty() {
            out.push('/');
            out.push_str(rest);
        }
    }
    out
}

fn schema(pointer: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn unique(pointer: &str, labels: &[&str]) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(schema(
                &format!("{pointer}/{i}/label"),
                format!("duplicate label '{l}'"),
            ));
        }
    }
    Ok(())
}

fn known(pointer: &str, label: &str, labels: &[&str]) -> Result<()> {
    if labels.contains(&label) {
        Ok(())
    } else {
        Err(schema(pointer, format!("unknown label '{label}'")))
    }
}

fn positive(pointer: &str, tol: Option<f64>) -> Result<()> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(schema(pointer, "tolerance must be positive")),
        _ => Ok(()),
    }
}

/// Schema-level errors from the model keep their pointer; anything else is
/// attached to `pointer`.
fn at(pointer: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Schema { .. } | Error::Registry(_) => e,
        other => schema(&pointer, other.to_string()),
    }
}

/// A scenario with every geometry, stratum and entry constructed.
#[derive(Clone, Debug)]
pub struct Model {
    pub scenario: Scenario,
    pub group: GroupModel,
    pub charts: BTreeMap<String, EquivariantGeometry>,
    pub strata: BTreeMap<String, (String, FixedStratum)>,
    pub entries: BTreeMap<String, ResolvedEntry>,
}

#[derive(Clone, Debug)]
pub struct ResolvedEntry {
    pub chart: String,
    pub g: CMatrix,
    pub x: CMatrix,
    pub stratum: FixedStratum,
}

impl Model {
    pub fn build(scenario: &Scenario) -> Result<Self> {
        let group = group_by_name(&scenario.group)?;
        let mut charts = BTreeMap::new();
        for (i, spec) in scenario.charts.iter().enumerate() {
            let geom = build_chart(&group, spec, scenario.rank).map_err(at(format!("/charts/{i}")))?;
            charts.insert(spec.label.clone(), geom);
        }
        let mut strata = BTreeMap::new();
        for (i, spec) in scenario.strata.iter().enumerate() {
            let geom = &charts[spec.chart()];
            let s = build_stratum(geom, spec).map_err(at(format!("/strata/{i}")))?;
            strata.insert(spec.label().to_string(), (spec.chart().to_string(), s));
        }
        let mut entries = BTreeMap::new();
        for (i, spec) in scenario.entries.iter().enumerate() {
            let (chart, stratum) = strata[&spec.stratum].clone();
            let g = spec.g.resolve(&group).map_err(at(format!("/entries/{i}/g")))?;
            let x = lie(&group, spec.x.as_deref()).map_err(at(format!("/entries/{i}/x")))?;
            entries.insert(spec.label.clone(), ResolvedEntry { chart, g, x, stratum });
        }
        Ok(Self {
            scenario: scenario.clone(),
            group,
            charts,
            strata,
            entries,
        })
    }

    pub fn lie(&self, coords: Option<&[f64]>) -> Result<CMatrix> {
        lie(&self.group, coords)
    }

    pub fn problem(&self, label: &str, steps_override: Option<usize>) -> Result<(TransportProblem, usize)> {
        let (i, spec) = self
            .scenario
            .problems
            .iter()
            .enumerate()
            .find(|(_, p)| p.label == label)
            .ok_or_else(|| Error::Registry(format!("problem '{label}'")))?;
        let build = || -> Result<(TransportProblem, usize)> {
            let geom = self.charts[&spec.chart].clone();
            let path = match spec.odd {
                OddSpec::Generic => SuperPath::with_generators(spec.path.clone(), geom.dim()),
                OddSpec::Even => SuperPath::even(spec.path.clone())?,
            };
            path.shape.validate()?;
            let a = self.lie(spec.a.as_deref())?;
            let h = spec.h.resolve(&self.group)?;
            let problem = TransportProblem::new(geom, path)?
                .with_datum(a, h)?
                .with_circumference(spec.circumference)?;
            Ok((problem, steps_override.or(spec.steps).unwrap_or(DEFAULT_STEPS)))
        };
        build().map_err(at(format!("/problems/{i}")))
    }
}

fn lie(group: &GroupModel, coords: Option<&[f64]>) -> Result<CMatrix> {
    match coords {
        Some(c) => group.lie_element(c),
        None => group.lie_element(&vec![0.0; group.dim()]),
    }
}

fn build_chart(group: &GroupModel, spec: &ChartSpec, rank: usize) -> Result<EquivariantGeometry> {
    let chart = if spec.lower.is_empty() && spec.upper.is_empty() {
        Chart::point(spec.label.clone())
    } else {
        Chart::new(spec.label.clone(), spec.lower.clone(), spec.upper.clone(), spec.grid)?
    }
    .with_orientation(spec.orientation)?;
    let action = build_action(&spec.action, &spec.cocycle, group, &chart, rank)?;
    let connection = build_connection(&spec.connection, &chart, rank)?;
    EquivariantGeometry::new(chart, group.clone(), action, connection)
}

fn build_stratum(geom: &EquivariantGeometry, spec: &StratumSpec) -> Result<FixedStratum> {
    let e = geom.group.identity();
    match spec {
        StratumSpec::Point { label, point, .. } => geometry::point_stratum(geom, &e, label.clone(), point.clone()),
        StratumSpec::Chart { label, .. } => geometry::chart_stratum(geom, &e, label.clone()),
        StratumSpec::Box {
            label,
            lower,
            upper,
            grid,
            ..
        } => {
            let n = geom.dim();
            let sub = Chart::new(label.clone(), lower.clone(), upper.clone(), *grid)?
                .with_orientation(geom.chart.orientation)?;
            if sub.dim() != n {
                return Err(Error::Dimension(format!(
                    "box of dimension {} in a chart of dimension {n}",
                    sub.dim()
                )));
            }
            let s = geometry::declare_fixed_stratum(geom, &e, label.clone(), sub, Arc::new(|q| q.to_vec()))?;
            Ok(s.with_jacobian(Arc::new(move |_| RMatrix::identity(n, n))))
        }
    }
}

/// Built-in scenarios, in listing order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    BUILTIN_SOURCES
        .iter()
        .map(|s| Scenario::from_json(s).expect("built-in scenario parses"))
        .collect()
}

pub fn builtin(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ListingEntry {
    pub name: String,
    pub description: String,
    /// `builtin` or the file it was read from.
    pub source: String,
}

/// Built-ins followed by every `*.json` scenario in `registry` (sorted by
/// file name). Files that do not parse are reported as errors.
pub fn list_scenarios(registry: Option<&Path>) -> Result<Vec<ListingEntry>> {
    let mut out: Vec<ListingEntry> = builtin_scenarios()
        .into_iter()
        .map(|s| ListingEntry {
            name: s.name,
            description: s.description,
            source: "builtin".into(),
        })
        .collect();
    if let Some(dir) = registry {
        let mut files: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for f in files {
            let s = Scenario::load(&f)?;
            out.push(ListingEntry {
                name: s.name,
                description: s.description,
                source: f.display().to_string(),
            });
        }
    }
    Ok(out)
}

/// Resolves `--scenario`: an existing file, else a built-in name.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    let path = Path::new(name_or_path);
    if path.exists() {
        return Scenario::load(path);
    }
    builtin(name_or_path)
        .ok_or_else(|| Error::Registry(format!("scenario '{name_or_path}' (no such file or built-in)")))
}

#[cfg(test)]
mod tests;
