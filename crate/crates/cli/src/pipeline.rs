//! Task orchestration: exponential polynomial, diagram, zeros, density,
//! chains, in that order, with every result collected into one report.

use crate::config::{AnalysisConfig, Input, InputKind, Rect, Task, Tolerances};
use crate::error::CliError;
use crate::output::{emit_csv, emit_density, emit_json, emit_resonances, CHAIN_HEADER};
use crate::validate::{has_errors, validate, Diagnostic, Level};
use resonance_core::crystal::{crystal_exppoly, crystal_resonances, CrystalSpec};
use resonance_core::density::{analyze_density, match_chains, CertifiedZeros, JumpEstimate};
use resonance_core::diagram::{
    all_predicted, build_diagram, check_a3_a5, r_narrow, DistributionDiagram, SizeTermCheck,
};
use resonance_core::exppoly::{build_characteristic, CanonReport, CanonTolerances, ExpPoly};
use resonance_core::geometry::{check_a4, check_a6, is_collinear, size_profile, PointConfig};
use resonance_core::polynomial::Root;
use resonance_core::qgraph::{
    classify_ksh, commensurable_reduce, graph_resonances, symbolic_det, CommensurableForm, ExpSum,
    GraphSpec, QGraphError,
};
use resonance_core::rootfind::{
    find_zeros, KPlaneExpPoly, ResonanceMultiset, RootOptions, SearchRect,
};
use resonance_core::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

pub const SUMMARY_FILE: &str = "summary.json";
pub const RESONANCE_FILE: &str = "resonances.csv";
pub const DENSITY_FILE: &str = "density.csv";
pub const CHAIN_FILE: &str = "chains.csv";
pub const LATTICE_FILE: &str = "lattice.csv";

/// Found zeros may sit this many root tolerances off the exact lattice.
const LATTICE_SLACK: f64 = 10.0;

#[derive(Debug, Serialize)]
pub struct Report {
    pub kind: InputKind,
    pub tasks: Vec<Task>,
    pub tolerances: Tolerances,
    pub search: Vec<Rect>,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagram: Option<DiagramSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<Structure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonances: Option<Vec<RegionSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<ChainSummary>,
    pub breaches: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct DiagramSummary {
    #[serde(rename = "M")]
    pub m: usize,
    pub mu: Vec<f64>,
    pub r: Vec<usize>,
    pub omega: Vec<Vec<Complex64>>,
    pub vertices: Vec<(f64, usize)>,
    pub effective_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonicalization: Option<CanonReport>,
}

impl DiagramSummary {
    fn new(d: &DistributionDiagram, canon: Option<CanonReport>) -> Self {
        DiagramSummary {
            m: d.m(),
            mu: d.segments.iter().map(|s| s.mu).collect(),
            r: d.segments.iter().map(|s| s.r).collect(),
            omega: d.segments.iter().map(|s| s.omega_list()).collect(),
            vertices: d.points.iter().map(|p| (p.beta, p.degree)).collect(),
            effective_size: d.points.first().map(|p| -p.beta).unwrap_or(0.0),
            canonicalization: canon,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Structure {
    Points(PointStructure),
    Graph(GraphStructureSummary),
    Crystal(CrystalStructure),
}

#[derive(Debug, Serialize)]
pub struct PointStructure {
    pub n: usize,
    pub diameter: f64,
    pub sizes: Vec<f64>,
    pub collinear: bool,
    pub self_adjoint: bool,
    pub a3: bool,
    pub a4: bool,
    pub a5: bool,
    pub a6: bool,
    pub mu_narrow: f64,
    pub r_narrow: usize,
    pub size_terms: Vec<SizeTermCheck>,
}

#[derive(Debug, Serialize)]
pub struct LatticeSummary {
    pub beta: f64,
    pub b0: f64,
    pub degrees: Vec<u64>,
    /// Roots generating resonance lattices, sorted by modulus.
    pub xi: Vec<Complex64>,
    pub xi_multiplicity: Vec<usize>,
    pub spurious: Vec<Complex64>,
    pub min_modulus: Option<f64>,
    pub embedded: bool,
}

impl LatticeSummary {
    fn new(f: &CommensurableForm, tol: f64) -> Self {
        let mut roots = f.xi_roots.clone();
        roots.sort_by(|a, b| {
            a.value
                .norm()
                .total_cmp(&b.value.norm())
                .then(a.value.re.total_cmp(&b.value.re))
                .then(a.value.im.total_cmp(&b.value.im))
        });
        LatticeSummary {
            beta: f.beta,
            b0: f.b0,
            degrees: f.degrees.clone(),
            xi: roots.iter().map(|r| r.value).collect(),
            xi_multiplicity: roots.iter().map(|r| r.multiplicity).collect(),
            spurious: f.spurious.iter().map(|r| r.value).collect(),
            min_modulus: f.min_modulus(),
            embedded: f.has_embedded(tol.max(1e-7)),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GraphStructureSummary {
    pub dimension_terms: usize,
    pub commensurable: bool,
    #[serde(flatten)]
    pub lattice: Option<LatticeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction_note: Option<String>,
    pub mu_max: Option<f64>,
    pub log_slopes: Vec<f64>,
    pub neutral: bool,
}

#[derive(Debug, Serialize)]
pub struct CrystalStructure {
    pub optical_lengths: Vec<f64>,
    pub commensurable: bool,
    #[serde(flatten)]
    pub lattice: Option<LatticeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction_note: Option<String>,
    pub no_real_resonances: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct RegionSummary {
    pub requested: Rect,
    /// The rectangle actually certified (inflated when the boundary hit a zero).
    pub region: Rect,
    pub count: usize,
    pub distinct: usize,
    pub residual_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_distance: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct DensityReport {
    pub mirrored: bool,
    pub certified_radius: f64,
    pub r_min: f64,
    pub total_density: f64,
    pub effective_size: f64,
    pub weyl_ratio: f64,
    pub jumps: Vec<JumpEstimate>,
}

#[derive(Debug, Serialize)]
pub struct ChainLine {
    pub n: usize,
    pub j: usize,
    pub sign: char,
    pub mu: f64,
    pub omega: Complex64,
    pub matched: usize,
    pub start_t: Option<u64>,
    pub last_residual: Option<f64>,
    pub residual_trend: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ChainSummary {
    pub radius_constant: f64,
    pub chains: Vec<ChainLine>,
    pub unmatched_zeros: usize,
    pub unmatched_predictions: usize,
}

fn rect_of(r: &SearchRect) -> Rect {
    Rect {
        x0: r.x0(),
        x1: r.x1(),
        y0: r.y0(),
        y1: r.y1(),
    }
}

/// The analysed object after the symbolic stage.
enum Model<'a> {
    Points {
        config: &'a PointConfig,
        d: ExpPoly,
        canon: CanonReport,
    },
    Graph {
        spec: &'a GraphSpec,
        f: Option<ExpSum>,
    },
    Crystal {
        spec: &'a CrystalSpec,
        f: ExpSum,
    },
}

impl Model<'_> {
    /// Exponential polynomial in `ζ` feeding the diagram.
    fn zeta_exppoly(&self) -> Option<ExpPoly> {
        match self {
            Model::Points { d, .. } => Some(d.clone()),
            Model::Graph { f, .. } => f.as_ref().map(|f| f.to_zeta_exppoly()),
            Model::Crystal { f, .. } => Some(f.to_zeta_exppoly()),
        }
    }

    /// Whether zeros are symmetric under `k ↦ −k̄`.
    fn mirror_symmetric(&self) -> bool {
        match self {
            Model::Points { config, .. } => config.is_self_adjoint(),
            // unitary vertex conditions give a self-adjoint operator
            Model::Graph { .. } => true,
            Model::Crystal { .. } => true,
        }
    }

    fn search(&self, rect: &SearchRect, opts: &RootOptions) -> Result<ResonanceMultiset, CliError> {
        let numerical = |e: &dyn std::fmt::Display| CliError::Numerical(e.to_string());
        match self {
            Model::Points { d, .. } => {
                find_zeros(&KPlaneExpPoly::new(d), rect, opts).map_err(|e| numerical(&e))
            }
            Model::Graph { spec, .. } => {
                graph_resonances(spec, rect, opts).map_err(|e| numerical(&e))
            }
            Model::Crystal { spec, .. } => crystal_resonances(spec, rect, opts)
                .map(|r| r.resonances)
                .map_err(|e| numerical(&e)),
        }
    }
}

fn reduction(f: &ExpSum, tol: f64) -> (Option<CommensurableForm>, Option<String>) {
    match commensurable_reduce(f, tol) {
        Ok(form) => (Some(form), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Runs every requested task and writes outputs into `out_dir`.
///
/// Outputs are written even when a tolerance check fails; the breach is
/// then returned as [`CliError::Tolerance`] after `summary.json` exists.
pub fn run(config: &AnalysisConfig, out_dir: &Path) -> Result<Report, CliError> {
    let diagnostics = validate(config);
    if has_errors(&diagnostics) {
        let msg: Vec<String> = diagnostics
            .iter()
            .filter(|d| d.level == Level::Error)
            .map(|d| format!("{}: {}", d.field, d.message))
            .collect();
        return Err(CliError::Input(msg.join("; ")));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let tol = config.tolerances;
    let wants = |t: Task| config.tasks.contains(&t);
    let needs_zeros = wants(Task::Resonances) || wants(Task::Density) || wants(Task::Chains);
    let needs_diagram = wants(Task::Diagram) || wants(Task::Density) || wants(Task::Chains);

    let model = match &config.input {
        Input::Points(p) => {
            let canon_tol = CanonTolerances {
                freq_tol: tol.freq_tol * p.diameter(),
                coeff_tol: tol.coeff_tol,
            };
            let ch = build_characteristic(p, Some(canon_tol))
                .map_err(|e| CliError::input("input", e))?;
            Model::Points {
                config: p,
                d: ch.exppoly,
                canon: ch.report,
            }
        }
        Input::Graph(g) => {
            let symbolic = needs_diagram || wants(Task::Structure) || config.lattice;
            let f = if symbolic {
                Some(symbolic_det(g).map_err(|e| CliError::input("input", e))?)
            } else {
                None
            };
            Model::Graph { spec: g, f }
        }
        Input::Crystal(c) => Model::Crystal {
            spec: c,
            f: crystal_exppoly(c).map_err(|e| CliError::input("input", e))?,
        },
    };

    let mut report = Report {
        kind: config.input.kind(),
        tasks: config.tasks.clone(),
        tolerances: tol,
        search: config.search.clone(),
        diagnostics,
        diagram: None,
        structure: None,
        resonances: None,
        density: None,
        chains: None,
        breaches: Vec::new(),
    };

    // Diagram
    let diagram = if needs_diagram
        || matches!(model, Model::Points { .. }) && wants(Task::Structure)
    {
        let d = model.zeta_exppoly().unwrap_or_default();
        let diag = match &model {
            Model::Graph { f: Some(f), .. } => match classify_ksh(f) {
                Ok(s) => s.diagram,
                Err(QGraphError::AdvancedSegment(mu)) => {
                    return Err(CliError::input(
                        "input.coupling",
                        QGraphError::AdvancedSegment(mu),
                    ))
                }
                Err(e) => return Err(CliError::Numerical(e.to_string())),
            },
            _ => build_diagram(&d).map_err(|e| CliError::Numerical(e.to_string()))?,
        };
        if let Model::Points { canon, .. } = &model {
            for b in &canon.borderline {
                report.breaches.push(format!(
                    "coefficient at frequency {} degree {} kept at {:e} relative, within 1000x of coeff_tol",
                    b.frequency, b.degree, b.relative
                ));
            }
        }
        Some(diag)
    } else {
        None
    };
    if wants(Task::Diagram) {
        let canon = match &model {
            Model::Points { canon, .. } => Some(canon.clone()),
            _ => None,
        };
        report.diagram = diagram.as_ref().map(|d| DiagramSummary::new(d, canon));
    }

    // Structure
    let mut lattice_form = None;
    match &model {
        Model::Points { config: p, d, .. } if wants(Task::Structure) => {
            let sizes = size_profile(p).map_err(|e| CliError::input("input.centers", e))?;
            let diag = diagram.as_ref().expect("diagram built for structure");
            let checks = check_a3_a5(d, &sizes);
            let rn = r_narrow(diag, &sizes).map_err(|e| CliError::Numerical(e.to_string()))?;
            report.structure = Some(Structure::Points(PointStructure {
                n: p.len(),
                diameter: sizes.diameter,
                sizes: sizes.sizes.clone(),
                collinear: is_collinear(p, 1e-9),
                self_adjoint: p.is_self_adjoint(),
                a3: checks.a3,
                a4: check_a4(&sizes),
                a5: checks.a5,
                a6: check_a6(p, 1e-9),
                mu_narrow: 1.0 / sizes.diameter,
                r_narrow: rn,
                size_terms: checks.detail,
            }));
        }
        Model::Graph { f: Some(f), .. } if wants(Task::Structure) || config.lattice => {
            let (form, note) = reduction(f, tol.freq_tol);
            let (mu_max, log_slopes, neutral) = match classify_ksh(f) {
                Ok(s) => (
                    s.mu_max,
                    s.log_segments.iter().map(|s| s.mu).collect(),
                    s.neutral,
                ),
                Err(e) => return Err(CliError::input("input.coupling", e)),
            };
            report.structure = Some(Structure::Graph(GraphStructureSummary {
                dimension_terms: f.terms().len(),
                commensurable: form.is_some(),
                lattice: form.as_ref().map(|f| LatticeSummary::new(f, tol.freq_tol)),
                reduction_note: note,
                mu_max,
                log_slopes,
                neutral,
            }));
            lattice_form = form;
        }
        Model::Crystal { spec, f } if wants(Task::Structure) || config.lattice => {
            let (form, note) = reduction(f, tol.freq_tol);
            report.structure = Some(Structure::Crystal(CrystalStructure {
                optical_lengths: spec.optical_lengths(),
                commensurable: form.is_some(),
                lattice: form.as_ref().map(|f| LatticeSummary::new(f, tol.freq_tol)),
                reduction_note: note,
                no_real_resonances: form.as_ref().map(|f| {
                    f.min_modulus().is_none_or(|m| m > 1.0 + tol.freq_tol) && f.spurious.is_empty()
                }),
            }));
            lattice_form = form;
        }
        _ => {}
    }
    if config.lattice && lattice_form.is_none() {
        let why = match &report.structure {
            Some(Structure::Graph(g)) => g.reduction_note.clone(),
            Some(Structure::Crystal(c)) => c.reduction_note.clone(),
            _ => Some("point configurations have no commensurable lattice".into()),
        };
        emit_json(&out_dir.join(SUMMARY_FILE), &report)?;
        return Err(CliError::Numerical(format!(
            "lattice requested but unavailable: {}",
            why.unwrap_or_default()
        )));
    }

    // Zeros
    let opts = RootOptions {
        tol: tol.root_tol,
        ..RootOptions::default()
    };
    let mut searches = Vec::new();
    if needs_zeros {
        let mut regions = Vec::new();
        let mut all: Vec<Root> = Vec::new();
        let mut lattice_rows = Vec::new();
        for r in &config.search {
            let rect = r.to_search().expect("validated rectangle");
            let res = model.search(&rect, &opts)?;
            let mut lattice_distance = None;
            if let Some(form) = &lattice_form {
                let lattice = form.lattice_in(&res.region);
                let worst = res
                    .zeros
                    .iter()
                    .map(|z| {
                        lattice
                            .iter()
                            .map(|l| (l.value - z.value).norm())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0, f64::max);
                let expected: usize = lattice.iter().map(|l| l.multiplicity).sum();
                if worst > LATTICE_SLACK * tol.root_tol || expected != res.total_multiplicity() {
                    report.breaches.push(format!(
                        "zeros in {r:?} deviate from the exact lattice: distance {worst:e}, {} found vs {expected} predicted",
                        res.total_multiplicity()
                    ));
                }
                lattice_distance = Some(worst);
                lattice_rows.extend(lattice);
            }
            if res.residual_bound > LATTICE_SLACK * tol.root_tol {
                report.breaches.push(format!(
                    "relative Newton residual {:e} in {r:?} exceeds {}x root_tol",
                    res.residual_bound, LATTICE_SLACK
                ));
            }
            regions.push(RegionSummary {
                requested: *r,
                region: rect_of(&res.region),
                count: res.total_multiplicity(),
                distinct: res.zeros.len(),
                residual_bound: res.residual_bound,
                lattice_distance,
            });
            all.extend(res.zeros.iter().copied());
            searches.push((rect, res));
        }
        emit_resonances(&out_dir.join(RESONANCE_FILE), &all)?;
        if lattice_form.is_some() {
            emit_resonances(&out_dir.join(LATTICE_FILE), &lattice_rows)?;
        }
        report.resonances = Some(regions);
    }

    // Density and chains use the first rectangle.
    if wants(Task::Density) || wants(Task::Chains) {
        let (rect, res) = &searches[0];
        let diag = diagram.as_ref().expect("diagram built for density");
        let mirrored = model.mirror_symmetric() && rect.x0() >= 0.0;
        let cz = if mirrored {
            CertifiedZeros::from_mirrored_search(res, opts.tol)
        } else {
            CertifiedZeros::from_search(res)
        };
        let r_max = cz.certified_radius;
        let r_min = r_max / 8.0;
        if wants(Task::Density) {
            let s = analyze_density(&cz, diag, r_min, r_max).map_err(|e| {
                CliError::Numerical(format!("density over the first rectangle: {e}"))
            })?;
            emit_density(&out_dir.join(DENSITY_FILE), &s.samples)?;
            report.density = Some(DensityReport {
                mirrored,
                certified_radius: r_max,
                r_min,
                total_density: s.total_density,
                effective_size: s.effective_size,
                weyl_ratio: s.weyl_ratio,
                jumps: s.jumps,
            });
        }
        if wants(Task::Chains) {
            report.chains = Some(chains(&cz, rect, diag, out_dir)?);
        }
    }

    emit_json(&out_dir.join(SUMMARY_FILE), &report)?;
    if report.breaches.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Tolerance(report.breaches.clone()))
    }
}

fn chains(
    cz: &CertifiedZeros,
    rect: &SearchRect,
    diag: &DistributionDiagram,
    out_dir: &Path,
) -> Result<ChainSummary, CliError> {
    let r = cz.certified_radius;
    let mu_min = diag
        .segments
        .iter()
        .map(|s| s.mu)
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min);
    let t_max = if mu_min.is_finite() {
        ((r / (2.0 * PI * mu_min)).ceil() as u64 + 2).min(1_000_000)
    } else {
        1
    };
    let mut predicted = all_predicted(diag, 1..=t_max);
    for (_, _, seq) in &mut predicted {
        seq.terms
            .retain(|(_, k)| k.norm() <= r && k.im >= rect.y0() && k.im <= rect.y1());
    }
    let zeros: Vec<Root> = cz
        .zeros
        .iter()
        .filter(|z| z.value.norm() <= r)
        .copied()
        .collect();
    let m = match_chains(&zeros, &predicted, None);
    let mut rows = Vec::new();
    for ch in &m.chains {
        for x in &ch.matches {
            rows.push([
                ch.id.n.to_string(),
                ch.id.j.to_string(),
                ch.id.sign.symbol().to_string(),
                x.t.to_string(),
                x.predicted.re.to_string(),
                x.predicted.im.to_string(),
                x.found.re.to_string(),
                x.found.im.to_string(),
                x.residual.to_string(),
            ]);
        }
    }
    emit_csv(&out_dir.join(CHAIN_FILE), &CHAIN_HEADER, rows)?;
    Ok(ChainSummary {
        radius_constant: m.radius_constant,
        chains: m
            .chains
            .iter()
            .map(|c| ChainLine {
                n: c.id.n,
                j: c.id.j,
                sign: c.id.sign.symbol(),
                mu: c.mu,
                omega: c.omega,
                matched: c.matches.len(),
                start_t: c.start_t,
                last_residual: c.matches.last().map(|m| m.residual),
                residual_trend: c.residual_trend,
            })
            .collect(),
        unmatched_zeros: m.unmatched_zeros.iter().map(|z| z.multiplicity).sum(),
        unmatched_predictions: m.unmatched_predictions.len(),
    })
}
