//! Schema and invariant checks that run before any analysis.

use crate::config::{AnalysisConfig, Input, Task};
use resonance_core::crystal::{CrystalError, CrystalSpec};
use resonance_core::geometry::{GeometryError, PointConfig, MAX_BRUTE_FORCE_N};
use resonance_core::qgraph::{rational_approx, GraphSpec, QGraphError, MAX_SYMBOLIC_DIM};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.level {
            Level::Error => "error",
            Level::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

/// Centers closer than this fraction of the diameter draw a warning.
pub const NEAR_DEGENERATE: f64 = 1e-6;
/// Length ratios within this relative distance of a small-denominator
/// rational (but not equal to it) draw a warning.
pub const NEAR_COMMENSURABLE: f64 = 1e-9;
const SMALL_DENOMINATOR: u64 = 1000;

#[derive(Default)]
struct Sink(Vec<Diagnostic>);

impl Sink {
    fn error(&mut self, field: impl Into<String>, message: impl ToString) {
        self.0.push(Diagnostic {
            level: Level::Error,
            field: field.into(),
            message: message.to_string(),
        });
    }

    fn warn(&mut self, field: impl Into<String>, message: impl ToString) {
        self.0.push(Diagnostic {
            level: Level::Warning,
            field: field.into(),
            message: message.to_string(),
        });
    }
}

pub fn validate(config: &AnalysisConfig) -> Vec<Diagnostic> {
    let mut out = Sink::default();
    if config.tasks.is_empty() {
        out.error("tasks", "at least one task is required");
    }
    let t = &config.tolerances;
    for (name, v) in [
        ("freq_tol", t.freq_tol),
        ("coeff_tol", t.coeff_tol),
        ("root_tol", t.root_tol),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            out.error(
                format!("tolerances.{name}"),
                format!("must be positive, got {v}"),
            );
        }
    }
    for (i, r) in config.search.iter().enumerate() {
        if r.to_search().is_none() {
            out.error(
                format!("search[{i}]"),
                "need x0 < x1 and y0 < y1, all finite",
            );
        }
    }
    let needs_search = config
        .tasks
        .iter()
        .any(|t| matches!(t, Task::Resonances | Task::Density | Task::Chains));
    if needs_search && config.search.is_empty() {
        out.error(
            "search",
            "tasks resonances/density/chains need at least one rectangle",
        );
    }
    match &config.input {
        Input::Points(p) => check_points(p, &config.tasks, &mut out),
        Input::Graph(g) => check_graph(g, &config.tasks, &mut out),
        Input::Crystal(c) => check_crystal(c, &mut out),
    }
    out.0
}

pub fn has_errors(d: &[Diagnostic]) -> bool {
    d.iter().any(|d| d.level == Level::Error)
}

fn check_points(p: &PointConfig, tasks: &[Task], out: &mut Sink) {
    if let Err(e) = p.validate() {
        let field = match e {
            GeometryError::StrengthCount { .. } => "input.strengths".to_string(),
            GeometryError::DuplicateCenters(_, j, _) => format!("input.centers[{j}]"),
            GeometryError::NonFinite(i) => format!("input.centers[{i}]"),
            _ => "input.centers".to_string(),
        };
        out.error(field, e);
        return;
    }
    if p.len() > MAX_BRUTE_FORCE_N && !tasks.is_empty() {
        out.error("input.centers", GeometryError::TooManyCenters(p.len()));
    }
    let (sep, diam) = (p.min_separation(), p.diameter());
    if p.len() > 1 && sep < NEAR_DEGENERATE * diam {
        out.warn(
            "input.centers",
            format!("nearly coincident centers: separation {sep:e} vs diameter {diam:e}"),
        );
    }
}

fn check_graph(g: &GraphSpec, tasks: &[Task], out: &mut Sink) {
    match g.layout() {
        Err(e) => {
            let field = match &e {
                QGraphError::BadLength { edge, .. } => format!("input.edges[{edge}].length"),
                QGraphError::NotUnitary { vertex, .. }
                | QGraphError::CouplingDimension { vertex, .. } => {
                    format!("input.coupling.{vertex}")
                }
                QGraphError::DuplicateVertex(_) => "input.vertices".to_string(),
                _ => "input".to_string(),
            };
            out.error(field, e);
            return;
        }
        Ok(layout) => {
            let symbolic = tasks.iter().any(|t| {
                matches!(
                    t,
                    Task::Diagram | Task::Structure | Task::Density | Task::Chains
                )
            });
            if symbolic && layout.dim() > MAX_SYMBOLIC_DIM {
                out.error("input", QGraphError::DimensionCap(layout.dim()));
            }
        }
    }
    let lengths: Vec<f64> = g.edges.iter().map(|e| e.length).collect();
    near_commensurable(&lengths, "input.edges", out);
}

fn check_crystal(c: &CrystalSpec, out: &mut Sink) {
    if let Err(e) = c.validate() {
        let field = match e {
            CrystalError::BadBreakpoints => "input.breakpoints".to_string(),
            CrystalError::BadPermittivity { index, .. } => format!("input.permittivities[{index}]"),
            _ => "input.permittivities".to_string(),
        };
        out.error(field, e);
        return;
    }
    near_commensurable(&c.optical_lengths(), "input.breakpoints", out);
}

/// Warns about pairs whose ratio is within [`NEAR_COMMENSURABLE`] of `p/q`,
/// `q ≤ 1000`, without being equal to it up to rounding.
fn near_commensurable(lengths: &[f64], field: &str, out: &mut Sink) {
    for i in 0..lengths.len() {
        for j in i + 1..lengths.len() {
            let ratio = lengths[j] / lengths[i];
            if !ratio.is_finite() {
                continue;
            }
            let Some((p, q)) = rational_approx(ratio, NEAR_COMMENSURABLE, SMALL_DENOMINATOR) else {
                continue;
            };
            let gap = (ratio - p as f64 / q as f64).abs();
            if gap > 8.0 * f64::EPSILON * ratio.abs() {
                out.warn(
                    field,
                    format!("lengths {i} and {j} are near-commensurable: ratio {ratio} is {gap:e} from {p}/{q}"),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, FlagDefaults, InputKind};

    fn diags(text: &str, kind: InputKind) -> Vec<Diagnostic> {
        validate(&parse_config(text, kind, &FlagDefaults::default()).unwrap())
    }

    #[test]
    fn duplicate_centers_are_errors() {
        let d = diags(
            r#"{"input":{"centers":[[0,0,0],[1,0,0],[0,0,0]],"strengths":[[0,0],[0,0],[0,0]]}}"#,
            InputKind::Points,
        );
        assert!(has_errors(&d));
        assert_eq!(d[0].field, "input.centers[2]");
    }

    #[test]
    fn near_degenerate_centers_warn() {
        let d = diags(
            r#"{"input":{"centers":[[0,0,0],[1,0,0],[1e-8,0,0]],"strengths":[[0,0],[0,0],[0,0]]}}"#,
            InputKind::Points,
        );
        assert!(!has_errors(&d));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].level, Level::Warning);
    }

    #[test]
    fn slightly_non_unitary_coupling() {
        let d = diags(
            r#"{"input":{"vertices":[0],"edges":[],"leads":[{"v":0},{"v":0}],
                "coupling":{"0":[[0.0,1.001],[1.0,0.0]]}}}"#,
            InputKind::Graph,
        );
        assert!(has_errors(&d));
        assert_eq!(d[0].field, "input.coupling.0");
        assert!(d[0].message.contains("unitary"));
    }

    #[test]
    fn near_commensurable_lengths_warn() {
        let d = diags(
            r#"{"input":{"vertices":[0,1],"edges":[{"u":0,"v":1,"length":1.0},{"u":0,"v":1,"length":1.000000000001}],
                "leads":[{"v":0}]}}"#,
            InputKind::Graph,
        );
        assert!(!has_errors(&d));
        assert!(d.iter().any(|d| d.message.contains("near-commensurable")));
        let d = diags(
            r#"{"input":{"vertices":[0,1],"edges":[{"u":0,"v":1,"length":0.1},{"u":0,"v":1,"length":0.3}],
                "leads":[{"v":0}]}}"#,
            InputKind::Graph,
        );
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn search_required_for_resonances() {
        let d = diags(
            r#"{"input":{"breakpoints":[0,1],"permittivities":[1,4,1]},"tasks":["resonances"]}"#,
            InputKind::Crystal,
        );
        assert_eq!(d[0].field, "search");
        let d = diags(
            r#"{"input":{"breakpoints":[0,1],"permittivities":[1,4,1]},"tasks":[],
                "tolerances":{"root_tol":-1},"search":[{"x0":1,"x1":0,"y0":0,"y1":1}]}"#,
            InputKind::Crystal,
        );
        let fields: Vec<&str> = d.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["tasks", "tolerances.root_tol", "search[0]"]);
    }
}
