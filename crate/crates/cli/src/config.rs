//! Analysis configuration: the domain input, search rectangles, tolerances
//! and task list, assembled from a JSON file and command-line defaults.

use crate::error::CliError;
use clap::ValueEnum;
use resonance_core::crystal::CrystalSpec;
use resonance_core::geometry::PointConfig;
use resonance_core::qgraph::GraphSpec;
use resonance_core::rootfind::SearchRect;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Diagram,
    Structure,
    Resonances,
    Density,
    Chains,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Points,
    Graph,
    Crystal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Input {
    Points(PointConfig),
    Graph(GraphSpec),
    Crystal(CrystalSpec),
}

impl Input {
    pub fn kind(&self) -> InputKind {
        match self {
            Input::Points(_) => InputKind::Points,
            Input::Graph(_) => InputKind::Graph,
            Input::Crystal(_) => InputKind::Crystal,
        }
    }
}

/// `[x0, x1] × [y0, y1]` in the `k`-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn to_search(self) -> Option<SearchRect> {
        SearchRect::from_bounds(self.x0, self.x1, self.y0, self.y1).ok()
    }
}

impl std::str::FromStr for Rect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [x0, x1, y0, y1] => Ok(Rect { x0, x1, y0, y1 }),
            _ => Err(format!("expected x0,x1,y0,y1, got {} numbers", v.len())),
        }
    }
}

/// `freq_tol` is relative to the natural length scale of the input (the
/// diameter for point configurations); for graphs and crystals it is the
/// rational-reconstruction tolerance. `root_tol` is absolute in `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub freq_tol: f64,
    pub coeff_tol: f64,
    pub root_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            freq_tol: 1e-9,
            coeff_tol: 1e-9,
            root_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub input: Input,
    pub search: Vec<Rect>,
    pub tolerances: Tolerances,
    pub tasks: Vec<Task>,
    /// Fail when no exact commensurable lattice exists.
    pub lattice: bool,
}

/// Config file as written by users; all but `input` may be omitted and then
/// come from flags.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    input: serde_json::Value,
    search: Option<Vec<Rect>>,
    tolerances: Option<PartialTolerances>,
    tasks: Option<Vec<Task>>,
    lattice: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialTolerances {
    freq_tol: Option<f64>,
    coeff_tol: Option<f64>,
    root_tol: Option<f64>,
}

/// Values supplied on the command line.
#[derive(Clone, Debug, Default)]
pub struct FlagDefaults {
    pub tasks: Vec<Task>,
    pub rects: Vec<Rect>,
    pub freq_tol: Option<f64>,
    pub coeff_tol: Option<f64>,
    pub root_tol: Option<f64>,
    pub lattice: bool,
}

fn parse_at<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            prefix.to_string()
        } else {
            format!("{prefix}.{path}")
        };
        CliError::input(&field, e.inner())
    })
}

/// Parses config text; file values override `flags`.
pub fn parse_config(
    text: &str,
    kind: InputKind,
    flags: &FlagDefaults,
) -> Result<AnalysisConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::input(if path == "." { "config" } else { &path }, e.inner())
    })?;
    let input = match kind {
        InputKind::Points => Input::Points(parse_at(file.input, "input")?),
        InputKind::Graph => Input::Graph(parse_at(file.input, "input")?),
        InputKind::Crystal => Input::Crystal(parse_at(file.input, "input")?),
    };
    let ft = file.tolerances.unwrap_or_default();
    let d = Tolerances::default();
    let tolerances = Tolerances {
        freq_tol: ft.freq_tol.or(flags.freq_tol).unwrap_or(d.freq_tol),
        coeff_tol: ft.coeff_tol.or(flags.coeff_tol).unwrap_or(d.coeff_tol),
        root_tol: ft.root_tol.or(flags.root_tol).unwrap_or(d.root_tol),
    };
    let mut tasks = file.tasks.unwrap_or_else(|| {
        if flags.tasks.is_empty() {
            vec![Task::Diagram]
        } else {
            flags.tasks.clone()
        }
    });
    tasks.sort();
    tasks.dedup();
    Ok(AnalysisConfig {
        input,
        search: file.search.unwrap_or_else(|| flags.rects.clone()),
        tolerances,
        tasks,
        lattice: file.lattice.unwrap_or(flags.lattice),
    })
}

pub fn load_config(
    path: &Path,
    kind: InputKind,
    flags: &FlagDefaults,
) -> Result<AnalysisConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, kind, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_from_flag() {
        let r: Rect = "0.5, 60,-6,0".parse().unwrap();
        assert_eq!(
            r,
            Rect {
                x0: 0.5,
                x1: 60.0,
                y0: -6.0,
                y1: 0.0
            }
        );
        assert!("1,2,3".parse::<Rect>().is_err());
        assert!("1,2,x,4".parse::<Rect>().is_err());
    }

    #[test]
    fn file_overrides_flags() {
        let flags = FlagDefaults {
            tasks: vec![Task::Resonances],
            root_tol: Some(1e-6),
            freq_tol: Some(1e-3),
            ..Default::default()
        };
        let text = r#"{"input":{"centers":[[0,0,0],[1,0,0]],"strengths":[[0,0],[0,0]]},
                       "tolerances":{"root_tol":1e-8},"tasks":["diagram","diagram"]}"#;
        let cfg = parse_config(text, InputKind::Points, &flags).unwrap();
        assert_eq!(cfg.tolerances.root_tol, 1e-8);
        assert_eq!(cfg.tolerances.freq_tol, 1e-3);
        assert_eq!(cfg.tasks, vec![Task::Diagram]);
        assert!(cfg.search.is_empty());
    }

    #[test]
    fn errors_name_the_field() {
        let flags = FlagDefaults::default();
        let text = r#"{"input":{"centers":[[0,0,"x"]],"strengths":[[0,0]]}}"#;
        let err = parse_config(text, InputKind::Points, &flags)
            .unwrap_err()
            .to_string();
        assert!(err.contains("input.centers[0][2]"), "{err}");
        let err = parse_config(r#"{"input":{},"serch":[]}"#, InputKind::Points, &flags)
            .unwrap_err()
            .to_string();
        assert!(err.contains("serch"), "{err}");
        let err = parse_config(
            r#"{"input":{"breakpoints":[0]}}"#,
            InputKind::Crystal,
            &flags,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("permittivities"), "{err}");
    }
}
