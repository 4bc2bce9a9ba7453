//! Scenario files, analysis orchestration and reports.
//!
//! A scenario is one JSON document holding named matrix words, named map
//! models, an optional heteroclinic graph with mixers, and an ordered list
//! of analyses. Running it yields a [`Report`] whose bytes depend only on
//! the scenario and the tool version.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cocycle::{
    classify_periodic, default_rate, domination_profile, eigen_moduli, finest_dominated_splitting,
    lyapunov_map_of_periodic, sectional_dissipativity, spectral_obstruction_indices, volume_hyperbolicity_check,
    MatrixWord, DEFAULT_HORIZON, MULTIPLICITY_TOL,
};
use crate::dynamics::{
    find_periodic, grid_guesses, tangency_scan, trace_manifold, MapModel, ScanOptions, Side, TraceOptions,
};
use crate::graph::{
    edge_connectivity, eulerian_circuit, is_eulerian, mechanical_nondomination_indices,
    mechanically_not_volume_hyperbolic, strongly_connected, tangency_indices, BasicSetNode, HeteroclinicEdge,
    HeteroclinicGraph, TangencyData,
};
use crate::polytope::{build_polytope, cycle_polytope_contains, map_from_exponents, LyapunovMap, MEMBERSHIP_TOL};
use crate::realize::{realizable_polytope, realize_with_cap, CocycleModel, Mixer, DEFAULT_WORD_CAP};
use crate::rewrite::{apply_script, RewriteStep};

pub const TOOL_NAME: &str = "hetclass";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid scenario: {0}")]
    Invalid(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl ScenarioError {
    /// Process exit status for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse { .. } => 3,
            ScenarioError::Invalid(_) => 4,
            ScenarioError::Io { .. } => 6,
        }
    }

    fn parse(e: serde_json::Error) -> Self {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
        ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Exit status when the scenario ran but at least one analysis failed.
pub const ANALYSIS_EXIT_CODE: i32 = 5;

type Rows = Vec<Vec<Vec<f64>>>;

/// Scenario document as written on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioData {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Default tolerance for analyses that do not set their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub matrices: BTreeMap<String, Rows>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub mixers: Vec<Mixer>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
}

/// Graph section: the serialized graph form, where a node may reference a
/// named matrix instead of carrying its word inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub dim: usize,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<HeteroclinicEdge>,
    #[serde(default)]
    pub generation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<Rows>,
    #[serde(default)]
    pub declared_obstructions: BTreeSet<usize>,
    #[serde(default)]
    pub suppressed_obstructions: BTreeSet<usize>,
}

/// Source of a Lyapunov map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSpec {
    /// Ascending exponents `λ_1 ≤ … ≤ λ_d`.
    Exponents(Vec<f64>),
    /// Values `σ_0 = 0, σ_1, …, σ_d`.
    Values(Vec<f64>),
    /// Spectrum of a named matrix word.
    Matrix(String),
    /// Spectrum of a graph node's word.
    Node(String),
}

fn default_eps() -> f64 {
    1e-2
}

fn default_grid() -> usize {
    9
}

fn default_max_iter() -> usize {
    50
}

fn default_period() -> usize {
    1
}

/// One analysis request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    AnalyzeCocycle {
        matrix: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        /// Block dimensions for the volume check; the finest dominated
        /// splitting is used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        splitting: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    TangencyIndices {
        dim: usize,
        tangency: TangencyData,
    },
    GraphCheck {
        /// Nodes whose mechanical indices and volume obstruction are
        /// reported; all nodes when empty.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        nodes: Vec<String>,
        /// Edge-connectivity target; the dimension when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Rewrite {
        steps: Vec<RewriteStep>,
    },
    Polytope {
        sigma: SigmaSpec,
        pinned: BTreeSet<usize>,
        #[serde(default)]
        samples: usize,
        /// Maps `τ` (values) to test for membership.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        members: Vec<Vec<f64>>,
    },
    CycleMembership {
        sigma_p: SigmaSpec,
        sigma_q: SigmaSpec,
        pinned: BTreeSet<usize>,
        tau: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    Realize {
        node: String,
        /// Target maps `τ` (values).
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        targets: Vec<Vec<f64>>,
        /// Additional targets drawn from the realizable polytope.
        #[serde(default)]
        samples: usize,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<usize>,
    },
    FindPeriodic {
        map: String,
        period: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "default_grid")]
        grid: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    Trace {
        map: String,
        /// Approximate periodic point, refined by Newton's method.
        point: Vec<f64>,
        #[serde(default = "default_period")]
        period: usize,
        side: Side,
        branch: i8,
        length: f64,
        step: f64,
    },
    TangencyScan(ScanOptions),
}

impl Analysis {
    pub fn kind(&self) -> &'static str {
        match self {
            Analysis::AnalyzeCocycle { .. } => "analyze_cocycle",
            Analysis::TangencyIndices { .. } => "tangency_indices",
            Analysis::GraphCheck { .. } => "graph_check",
            Analysis::Rewrite { .. } => "rewrite",
            Analysis::Polytope { .. } => "polytope",
            Analysis::CycleMembership { .. } => "cycle_membership",
            Analysis::Realize { .. } => "realize",
            Analysis::FindPeriodic { .. } => "find_periodic",
            Analysis::Trace { .. } => "trace",
            Analysis::TangencyScan(_) => "tangency_scan",
        }
    }

    fn samples(&self) -> usize {
        match self {
            Analysis::Polytope { samples, .. } | Analysis::Realize { samples, .. } => *samples,
            _ => 0,
        }
    }
}

/// Validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub matrices: BTreeMap<String, MatrixWord>,
    pub maps: BTreeMap<String, MapModel>,
    pub graph: Option<HeteroclinicGraph>,
    pub mixers: Vec<Mixer>,
    pub analyses: Vec<Analysis>,
    /// Hex SHA-256 of the source bytes.
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parse scenario text without validating references.
pub fn parse_scenario_data(text: &str) -> Result<ScenarioData, ScenarioError> {
    serde_json::from_str(text).map_err(ScenarioError::parse)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_data(parse_scenario_data(text)?, digest(text.as_bytes()))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let (data, d) = load_scenario_data(path)?;
    Scenario::from_data(data, d)
}

/// Raw scenario document and the digest of its bytes.
pub fn load_scenario_data(path: impl AsRef<Path>) -> Result<(ScenarioData, String), ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    Ok((parse_scenario_data(&text)?, digest(text.as_bytes())))
}

/// A graph file in canonical form, as written by the rewrite analysis.
pub fn load_graph_spec(path: impl AsRef<Path>) -> Result<GraphSpec, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    serde_json::from_str(&text).map_err(ScenarioError::parse)
}

/// Canonical JSON form of a graph; loading it back yields an equal graph.
pub fn canonical_graph_json(g: &HeteroclinicGraph) -> String {
    let mut s = serde_json::to_string_pretty(g).expect("graph serializes");
    s.push('\n');
    s
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

fn build_graph(spec: &GraphSpec, matrices: &BTreeMap<String, MatrixWord>) -> Result<HeteroclinicGraph, ScenarioError> {
    let mut g = HeteroclinicGraph::from_parts(spec.dim, spec.generation)
        .map_err(|e| invalid(format!("graph.dim (HeteroclinicGraph): {e}")))?;
    for n in &spec.nodes {
        let word = match (&n.matrix, &n.word) {
            (Some(_), Some(_)) => {
                return Err(invalid(format!(
                    "graph node `{}` (BasicSetNode): set only one of `matrix` and `word`",
                    n.id
                )))
            }
            (Some(name), None) => Some(matrices.get(name).cloned().ok_or_else(|| {
                invalid(format!("graph node `{}` references unknown matrix `{name}`", n.id))
            })?),
            (None, Some(rows)) => Some(
                MatrixWord::from_rows(rows)
                    .map_err(|e| invalid(format!("graph node `{}` field word (MatrixWord): {e}", n.id)))?,
            ),
            (None, None) => None,
        };
        let node = BasicSetNode {
            id: n.id.clone(),
            index: n.index,
            word,
            declared_obstructions: n.declared_obstructions.clone(),
            suppressed_obstructions: n.suppressed_obstructions.clone(),
        };
        g.add_node(node)
            .map_err(|e| invalid(format!("graph node `{}` (BasicSetNode): {e}", n.id)))?;
    }
    for e in &spec.edges {
        for end in [&e.src, &e.dst] {
            if g.node_position(end).is_none() {
                return Err(invalid(format!("graph edge `{}` references unknown node `{end}`", e.id)));
            }
        }
        g.add_edge(e.clone())
            .map_err(|err| invalid(format!("graph edge `{}` (HeteroclinicEdge): {err}", e.id)))?;
    }
    Ok(g)
}

impl Scenario {
    /// Validate every section and cross-reference.
    pub fn from_data(data: ScenarioData, digest: String) -> Result<Self, ScenarioError> {
        let mut matrices = BTreeMap::new();
        for (name, rows) in &data.matrices {
            let w = MatrixWord::from_rows(rows).map_err(|e| invalid(format!("matrix `{name}` (MatrixWord): {e}")))?;
            matrices.insert(name.clone(), w);
        }
        for (name, m) in &data.maps {
            m.validate().map_err(|e| invalid(format!("map `{name}` (MapModel): {e}")))?;
        }
        if let Some(t) = data.tol {
            if !(t >= 0.0) {
                return Err(invalid(format!("field tol must be non-negative, got {t}")));
            }
        }
        let graph = data.graph.as_ref().map(|g| build_graph(g, &matrices)).transpose()?;
        for m in &data.mixers {
            let g = graph
                .as_ref()
                .ok_or_else(|| invalid(format!("mixer `{}` needs a graph", m.id)))?;
            if g.node_position(&m.node).is_none() {
                return Err(invalid(format!("mixer `{}` references unknown node `{}`", m.id, m.node)));
            }
        }
        let s = Scenario {
            seed: data.seed,
            tol: data.tol,
            matrices,
            maps: data.maps,
            graph,
            mixers: data.mixers,
            analyses: data.analyses,
            digest,
        };
        for (i, a) in s.analyses.iter().enumerate() {
            s.check_analysis(a)
                .map_err(|m| invalid(format!("analysis {i} ({}): {m}", a.kind())))?;
        }
        Ok(s)
    }

    fn graph(&self) -> Result<&HeteroclinicGraph, String> {
        self.graph.as_ref().ok_or_else(|| "needs a graph section".to_string())
    }

    fn map(&self, name: &str) -> Result<&MapModel, String> {
        self.maps.get(name).ok_or_else(|| format!("unknown map `{name}`"))
    }

    fn check_sigma(&self, s: &SigmaSpec) -> Result<(), String> {
        match s {
            SigmaSpec::Matrix(name) if !self.matrices.contains_key(name) => Err(format!("unknown matrix `{name}`")),
            SigmaSpec::Node(id) => {
                let g = self.graph()?;
                let n = g.node(id).map_err(|e| e.to_string())?;
                match n.word {
                    Some(_) => Ok(()),
                    None => Err(format!("node `{id}` has no word")),
                }
            }
            _ => Ok(()),
        }
    }

    fn check_analysis(&self, a: &Analysis) -> Result<(), String> {
        if a.samples() > 0 && self.seed.is_none() {
            return Err("sampling requested but the scenario has no seed".into());
        }
        match a {
            Analysis::AnalyzeCocycle { matrix, .. } if !self.matrices.contains_key(matrix) => {
                Err(format!("unknown matrix `{matrix}`"))
            }
            Analysis::GraphCheck { nodes, .. } => {
                let g = self.graph()?;
                for id in nodes {
                    g.node(id).map_err(|e| e.to_string())?;
                }
                Ok(())
            }
            Analysis::Rewrite { .. } => self.graph().map(|_| ()),
            Analysis::Polytope { sigma, .. } => self.check_sigma(sigma),
            Analysis::CycleMembership { sigma_p, sigma_q, .. } => {
                self.check_sigma(sigma_p)?;
                self.check_sigma(sigma_q)
            }
            Analysis::Realize { node, .. } => {
                let m = self.model().map_err(|e| e.to_string())?;
                m.graph().node(node).map_err(|e| e.to_string())?;
                Ok(())
            }
            Analysis::FindPeriodic { map, lo, hi, .. } => {
                let m = self.map(map)?;
                if lo.len() != m.dim() || hi.len() != m.dim() {
                    return Err(format!("lo and hi must have {} coordinates", m.dim()));
                }
                Ok(())
            }
            Analysis::Trace { map, point, .. } => {
                let m = self.map(map)?;
                if point.len() != m.dim() {
                    return Err(format!("point must have {} coordinates", m.dim()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Cocycle model over the graph and mixers.
    pub fn model(&self) -> crate::Result<CocycleModel> {
        let g = self
            .graph
            .clone()
            .ok_or_else(|| crate::Error::UnsupportedModel("scenario has no graph".into()))?;
        CocycleModel::new(g, self.mixers.clone())
    }

    fn sigma(&self, s: &SigmaSpec) -> crate::Result<LyapunovMap> {
        match s {
            SigmaSpec::Exponents(e) => map_from_exponents(e),
            SigmaSpec::Values(v) => LyapunovMap::new(v.clone()),
            SigmaSpec::Matrix(name) => lyapunov_map_of_periodic(&self.matrices[name]),
            SigmaSpec::Node(id) => {
                let g = self.graph.as_ref().expect("checked at load");
                let w = g.node(id)?.word.as_ref().expect("checked at load");
                lyapunov_map_of_periodic(w)
            }
        }
    }
}

/// File produced next to the report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub index: usize,
    pub kind: String,
    pub request: Value,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub input_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub results: Vec<Outcome>,
}

impl Report {
    pub fn has_errors(&self) -> bool {
        self.results.iter().any(|o| o.status == Status::Error)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
}

/// Analysis output: the structured result, artifacts, and an error that
/// still carries partial results.
struct Produced {
    result: Value,
    artifacts: Vec<Artifact>,
    error: Option<String>,
}

impl Produced {
    fn value(result: Value) -> Self {
        Self {
            result,
            artifacts: Vec::new(),
            error: None,
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

fn csv_of_maps(maps: &[LyapunovMap]) -> String {
    let d = maps.first().map(|m| m.dim()).unwrap_or(0);
    let mut s = (0..=d).map(|i| format!("tau_{i}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for m in maps {
        s.push_str(&m.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

/// Run every analysis in order. Failures are recorded per analysis.
pub fn run(s: &Scenario) -> RunOutput {
    let mut results = Vec::new();
    let mut artifacts = Vec::new();
    for (index, a) in s.analyses.iter().enumerate() {
        let prefix = format!("{index:02}_{}", a.kind());
        let (status, result, error, names) = match run_one(s, a, &prefix) {
            Ok(p) => {
                let names = p.artifacts.iter().map(|x| x.name.clone()).collect();
                artifacts.extend(p.artifacts);
                let status = if p.error.is_some() { Status::Error } else { Status::Ok };
                (status, Some(p.result), p.error, names)
            }
            Err(e) => (Status::Error, None, Some(e.to_string()), Vec::new()),
        };
        results.push(Outcome {
            index,
            kind: a.kind().to_string(),
            request: to_value(a),
            status,
            result,
            error,
            artifacts: names,
        });
    }
    RunOutput {
        report: Report {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            input_digest: s.digest.clone(),
            seed: s.seed,
            tol: s.tol,
            results,
        },
        artifacts,
    }
}

fn run_one(s: &Scenario, a: &Analysis, prefix: &str) -> crate::Result<Produced> {
    let rate = default_rate();
    match a {
        Analysis::AnalyzeCocycle {
            matrix,
            horizon,
            rate: r,
            splitting,
            tol,
        } => {
            let w = &s.matrices[matrix];
            let horizon = horizon.unwrap_or(DEFAULT_HORIZON);
            let rate = r.unwrap_or(rate);
            let tol = tol.or(s.tol).unwrap_or(MULTIPLICITY_TOL);
            let spectrum = eigen_moduli(w)?;
            let finest = finest_dominated_splitting(w, horizon, rate)?;
            let volume = match splitting {
                Some(sp) => Some(volume_hyperbolicity_check(w, sp, rate, horizon)?),
                None if finest.len() >= 2 => Some(volume_hyperbolicity_check(w, &finest, rate, horizon)?),
                None => None,
            };
            Ok(Produced::value(json!({
                "matrix": matrix,
                "dim": w.dim(),
                "period": w.period(),
                "moduli": spectrum.moduli,
                "exponents": spectrum.exponents,
                "lyapunov_map": lyapunov_map_of_periodic(w)?,
                "classification": classify_periodic(w, tol)?,
                "spectral_obstructions": spectral_obstruction_indices(w, tol)?,
                "domination": domination_profile(w, horizon, rate)?,
                "finest_splitting": finest,
                "volume": volume,
                "sectional_dissipativity": sectional_dissipativity(w)?,
            })))
        }
        Analysis::TangencyIndices { dim, tangency } => Ok(Produced::value(json!({
            "dim": dim,
            "tangency": tangency,
            "indices": tangency_indices(tangency, *dim)?,
        }))),
        Analysis::GraphCheck { nodes, k, horizon } => {
            let g = s.graph.as_ref().expect("checked at load");
            let horizon = horizon.unwrap_or(DEFAULT_HORIZON);
            let k = k.unwrap_or(g.dim());
            let targets: Vec<&str> = if nodes.is_empty() {
                g.nodes().iter().map(|n| n.id.as_str()).collect()
            } else {
                nodes.iter().map(String::as_str).collect()
            };
            let mut tangencies = BTreeMap::new();
            for e in g.edges() {
                if let Some(t) = &e.tangency {
                    tangencies.insert(e.id.clone(), tangency_indices(t, g.dim())?);
                }
            }
            let mut mechanical = BTreeMap::new();
            let mut volume = BTreeMap::new();
            for id in targets {
                mechanical.insert(id.to_string(), mechanical_nondomination_indices(g, id)?);
                let v = match mechanically_not_volume_hyperbolic(g, id, horizon, rate) {
                    Ok(v) => to_value(&v),
                    Err(e) => json!({ "error": e.to_string() }),
                };
                volume.insert(id.to_string(), v);
            }
            let connectivity = edge_connectivity(g);
            Ok(Produced::value(json!({
                "dim": g.dim(),
                "nodes": g.nodes().len(),
                "edges": g.edges().len(),
                "strongly_connected": strongly_connected(g),
                "eulerian": is_eulerian(g),
                "eulerian_circuit": eulerian_circuit(g).ok(),
                "edge_connectivity": connectivity,
                "connectivity_target": k,
                "k_edge_connected": connectivity.at_least(k),
                "tangency_indices": tangencies,
                "mechanical_indices": mechanical,
                "volume_obstruction": volume,
            })))
        }
        Analysis::Rewrite { steps } => {
            let g = s.graph.as_ref().expect("checked at load");
            let (out, receipts) = apply_script(g, steps)?;
            let name = format!("{prefix}_graph.json");
            Ok(Produced {
                result: json!({
                    "receipts": receipts,
                    "graph": out,
                    "eulerian": is_eulerian(&out),
                    "edge_connectivity": edge_connectivity(&out),
                }),
                artifacts: vec![Artifact {
                    name,
                    contents: canonical_graph_json(&out),
                }],
                error: None,
            })
        }
        Analysis::Polytope {
            sigma,
            pinned,
            samples,
            members,
        } => {
            let sigma = s.sigma(sigma)?;
            let p = build_polytope(&sigma, pinned)?;
            let rays = p.recession_rays();
            let mut artifacts = Vec::new();
            let vertices = if rays.is_empty() { Some(p.vertices()?) } else { None };
            if let Some(v) = &vertices {
                artifacts.push(Artifact {
                    name: format!("{prefix}_vertices.csv"),
                    contents: csv_of_maps(&v.vertices),
                });
            }
            let drawn = if *samples > 0 {
                p.sample(*samples, s.seed.expect("checked at load"))?
            } else {
                Vec::new()
            };
            if !drawn.is_empty() {
                artifacts.push(Artifact {
                    name: format!("{prefix}_samples.csv"),
                    contents: csv_of_maps(&drawn),
                });
            }
            let mut membership = Vec::new();
            for values in members {
                let tau = LyapunovMap::unchecked(values.clone())?;
                let violated = p.violated(&tau, MEMBERSHIP_TOL)?.map(|c| c.label.clone());
                membership.push(json!({ "tau": values, "member": violated.is_none(), "violated": violated }));
            }
            Ok(Produced {
                result: json!({
                    "sigma": sigma,
                    "pinned": pinned,
                    "constraints": p.constraints(),
                    "equality_codimension": p.equality_codimension(),
                    "bounded": rays.is_empty(),
                    "recession_rays": rays,
                    "vertices": vertices.as_ref().map(|v| &v.vertices),
                    "hull_dim": vertices.as_ref().map(|v| v.hull_dim),
                    "samples": drawn,
                    "membership": membership,
                }),
                artifacts,
                error: None,
            })
        }
        Analysis::CycleMembership {
            sigma_p,
            sigma_q,
            pinned,
            tau,
            tol,
        } => {
            let tau = LyapunovMap::unchecked(tau.clone())?;
            let tol = tol.or(s.tol).unwrap_or(MEMBERSHIP_TOL);
            let r = cycle_polytope_contains(&s.sigma(sigma_p)?, &s.sigma(sigma_q)?, pinned, &tau, tol)?;
            Ok(Produced::value(to_value(&r)))
        }
        Analysis::Realize {
            node,
            targets,
            samples,
            eps,
            cap,
        } => {
            let m = s.model()?;
            let p = realizable_polytope(&m, node)?;
            let mut goals = Vec::new();
            for t in targets {
                goals.push(LyapunovMap::unchecked(t.clone())?);
            }
            if *samples > 0 {
                goals.extend(p.sample(*samples, s.seed.expect("checked at load"))?);
            }
            let cap = cap.unwrap_or(DEFAULT_WORD_CAP);
            let mut rows = Vec::new();
            let mut failed = 0;
            for goal in &goals {
                match realize_with_cap(&m, node, goal, *eps, cap) {
                    Ok(r) => {
                        let member = p.contains(&r.achieved, MEMBERSHIP_TOL)?;
                        rows.push(json!({
                            "target": goal,
                            "achieved": r.achieved,
                            "error": r.error,
                            "within_eps": r.error <= *eps,
                            "member": member,
                            "scale": r.scale,
                            "expanded_len": r.expanded_len,
                            "word": r.word,
                        }));
                    }
                    Err(e) => {
                        failed += 1;
                        rows.push(json!({ "target": goal, "failure": e.to_string() }));
                    }
                }
            }
            let free: BTreeSet<usize> = (0..=m.dim()).filter(|i| !p.pinned().contains(i)).collect();
            Ok(Produced {
                result: json!({
                    "node": node,
                    "sigma": p.base(),
                    "pinned": p.pinned(),
                    "free": free,
                    "eps": eps,
                    "realizations": rows,
                }),
                artifacts: Vec::new(),
                error: (failed > 0).then(|| format!("{failed} of {} targets not realized", goals.len())),
            })
        }
        Analysis::FindPeriodic {
            map,
            period,
            lo,
            hi,
            grid,
            tol,
            max_iter,
        } => {
            let m = &s.maps[map];
            let tol = tol.or(s.tol).unwrap_or(1e-12);
            let search = find_periodic(m, *period, &grid_guesses(lo, hi, *grid), tol, *max_iter)?;
            let mut records = Vec::new();
            for r in &search.records {
                records.push(json!({
                    "points": r.points,
                    "minimal_period": r.minimal_period,
                    "residual": r.residual,
                    "classification": classify_periodic(&r.word, MULTIPLICITY_TOL)?,
                    "exponents": eigen_moduli(&r.word)?.exponents,
                }));
            }
            Ok(Produced::value(json!({
                "map": map,
                "period": period,
                "tol": tol,
                "records": records,
                "skipped": search.skipped,
            })))
        }
        Analysis::Trace {
            map,
            point,
            period,
            side,
            branch,
            length,
            step,
        } => {
            let m = &s.maps[map];
            let tol = s.tol.unwrap_or(1e-12);
            let search = find_periodic(m, *period, std::slice::from_ref(point), tol, default_max_iter())?;
            let rec = search.records.into_iter().next().ok_or_else(|| {
                crate::Error::InvalidParameter(format!("no period-{period} orbit found from {point:?}"))
            })?;
            let poly = trace_manifold(m, &rec, *side, *branch, TraceOptions::new(*length, *step))?;
            let name = format!("{prefix}_polyline.csv");
            Ok(Produced {
                result: json!({
                    "map": map,
                    "saddle": poly.saddle,
                    "period": rec.period(),
                    "side": side,
                    "branch": branch,
                    "step": step,
                    "vertices": poly.points.len(),
                    "arclength": poly.arclength.last(),
                    "end": poly.end,
                }),
                artifacts: vec![Artifact {
                    name,
                    contents: poly.to_csv(),
                }],
                error: None,
            })
        }
        Analysis::TangencyScan(opts) => {
            let scan = tangency_scan(opts)?;
            let near_tangent = scan
                .crossings
                .iter()
                .any(|c| c.kind == crate::dynamics::CrossingKind::NearTangent);
            Ok(Produced::value(json!({
                "options": opts,
                "bracket": scan.bracket,
                "width": (scan.bracket.1 - scan.bracket.0).abs(),
                "indicator": scan.indicator,
                "near_tangent": near_tangent,
                "crossings": scan.crossings,
                "evaluations": scan.evaluations,
            })))
        }
    }
}

/// Write the report and artifacts into `dir`.
pub fn write_output(out: &RunOutput, dir: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    let report = dir.join("report.json");
    std::fs::write(&report, out.report.to_json()).map_err(|e| ScenarioError::io(&report, e))?;
    for a in &out.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(|e| ScenarioError::io(&path, e))?;
    }
    Ok(())
}
