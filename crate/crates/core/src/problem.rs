//! JSON descriptions of graphs, vertex conditions and analysis options.
//!
//! Complex numbers are objects `{"re": .., "im": ..}`; a bare number is read
//! as a real value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryConditions;
use crate::error::{Error, Result};
use crate::graph::{ExternalEdge, InternalEdge, MetricGraph};
use crate::matrixcore::{from_rows, to_rows, CMatrix};

pub use crate::json::JsonComplex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpkinSpec {
    pub n: usize,
    pub length: f64,
}

/// A named graph or an explicit vertex/edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Explicit {
        vertices: Vec<String>,
        #[serde(default)]
        internal: Vec<InternalEdge>,
        #[serde(default)]
        external: Vec<ExternalEdge>,
    },
    Named(NamedGraph),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedGraph {
    Interval(f64),
    Star(usize),
    Lasso(f64),
    Pumpkin(PumpkinSpec),
    HalfLineWithInterval(f64),
}

impl GraphSpec {
    pub fn build(&self) -> Result<MetricGraph> {
        match self {
            GraphSpec::Explicit { vertices, internal, external } => {
                MetricGraph::new(vertices.clone(), internal.clone(), external.clone())
            }
            GraphSpec::Named(NamedGraph::Interval(a)) => MetricGraph::interval(*a),
            GraphSpec::Named(NamedGraph::Star(n)) => MetricGraph::star(*n),
            GraphSpec::Named(NamedGraph::Lasso(a)) => MetricGraph::lasso(*a),
            GraphSpec::Named(NamedGraph::Pumpkin(p)) => MetricGraph::pumpkin(p.n, p.length),
            GraphSpec::Named(NamedGraph::HalfLineWithInterval(a)) => MetricGraph::half_line_with_interval(*a),
        }
    }

    pub fn from_graph(g: &MetricGraph) -> Self {
        GraphSpec::Explicit {
            vertices: g.vertices().to_vec(),
            internal: g.internal_edges().to_vec(),
            external: g.external_edges().to_vec(),
        }
    }
}

/// Named vertex conditions. The per-vertex presets (`kirchhoff`, `delta`,
/// `delta_prime`) are applied at every vertex of the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Dirichlet,
    Neumann,
    Kirchhoff,
    Intermediate,
    TotallyDegenerate,
    Delta(JsonComplex),
    DeltaPrime(JsonComplex),
    PtPoint(f64),
    PtPointWithDirichletEnd(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Matrices {
        #[serde(rename = "A")]
        a: Vec<Vec<JsonComplex>>,
        #[serde(rename = "B")]
        b: Vec<Vec<JsonComplex>>,
    },
    Preset(Preset),
}

fn matrix(rows: &[Vec<JsonComplex>], name: &str) -> Result<CMatrix> {
    let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(|&z| z.into()).collect()).collect();
    from_rows(&rows).map_err(|e| Error::Spec(format!("{name}: {e}")))
}

fn fixed_dim(bc: BoundaryConditions, graph: &MetricGraph, name: &str) -> Result<BoundaryConditions> {
    let d = graph.deficiency_index();
    if bc.dim() != d {
        return Err(Error::Spec(format!("preset {name} has size {} but the graph needs d = {d}", bc.dim())));
    }
    Ok(bc)
}

impl BcSpec {
    pub fn build(&self, graph: &MetricGraph) -> Result<BoundaryConditions> {
        let d = graph.deficiency_index();
        let bc = match self {
            BcSpec::Matrices { a, b } => BoundaryConditions::new(matrix(a, "A")?, matrix(b, "B")?)?,
            BcSpec::Preset(p) => match p {
                Preset::Dirichlet => BoundaryConditions::dirichlet(d),
                Preset::Neumann => BoundaryConditions::neumann(d),
                Preset::Kirchhoff => BoundaryConditions::kirchhoff_on(graph),
                Preset::Delta(g) => BoundaryConditions::delta_on(graph, (*g).into()),
                Preset::DeltaPrime(g) => BoundaryConditions::delta_prime_on(graph, (*g).into()),
                Preset::Intermediate => fixed_dim(BoundaryConditions::intermediate(), graph, "intermediate")?,
                Preset::TotallyDegenerate => {
                    fixed_dim(BoundaryConditions::totally_degenerate(), graph, "totally_degenerate")?
                }
                Preset::PtPoint(t) => fixed_dim(BoundaryConditions::pt_point(*t)?, graph, "pt_point")?,
                Preset::PtPointWithDirichletEnd(t) => {
                    fixed_dim(BoundaryConditions::pt_point_with_dirichlet_end(*t)?, graph, "pt_point_with_dirichlet_end")?
                }
            },
        };
        if bc.dim() != d {
            return Err(Error::Spec(format!("boundary matrices have size {} but the graph needs d = {d}", bc.dim())));
        }
        Ok(bc)
    }

    pub fn from_bc(bc: &BoundaryConditions) -> Self {
        let conv = |m: &CMatrix| to_rows(m).into_iter().map(|r| r.into_iter().map(JsonComplex::from).collect()).collect();
        BcSpec::Matrices { a: conv(bc.a()), b: conv(bc.b()) }
    }

    /// Parses `name` or `name:params`, e.g. `pt_point:0.785`,
    /// `delta:1,2` for `gamma = 1 + 2i`.
    pub fn parse_preset(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        let real = |p: Option<&str>| -> Result<f64> {
            let p = p.ok_or_else(|| Error::Spec(format!("preset {name} needs a parameter")))?;
            p.parse::<f64>().map_err(|_| Error::Spec(format!("bad parameter {p:?} for preset {name}")))
        };
        let complex = |p: Option<&str>| -> Result<JsonComplex> {
            let p = p.ok_or_else(|| Error::Spec(format!("preset {name} needs a parameter")))?;
            let parts: Vec<&str> = p.split(',').map(str::trim).collect();
            let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Spec(format!("bad parameter {p:?} for preset {name}")));
            match parts.as_slice() {
                [re] => Ok(JsonComplex::Object { re: num(re)?, im: 0.0 }),
                [re, im] => Ok(JsonComplex::Object { re: num(re)?, im: num(im)? }),
                _ => Err(Error::Spec(format!("bad parameter {p:?} for preset {name}"))),
            }
        };
        let no_params = |p: Preset| -> Result<Preset> {
            match params {
                None => Ok(p),
                Some(_) => Err(Error::Spec(format!("preset {name} takes no parameter"))),
            }
        };
        let preset = match name {
            "dirichlet" => no_params(Preset::Dirichlet)?,
            "neumann" => no_params(Preset::Neumann)?,
            "kirchhoff" => no_params(Preset::Kirchhoff)?,
            "intermediate" => no_params(Preset::Intermediate)?,
            "totally_degenerate" => no_params(Preset::TotallyDegenerate)?,
            "delta" => Preset::Delta(complex(params)?),
            "delta_prime" => Preset::DeltaPrime(complex(params)?),
            "pt_point" => Preset::PtPoint(real(params)?),
            "pt_point_with_dirichlet_end" => Preset::PtPointWithDirichletEnd(real(params)?),
            other => return Err(Error::Spec(format!("unknown preset {other:?}"))),
        };
        Ok(BcSpec::Preset(preset))
    }
}

/// Rectangle `[re_min, re_max] x [im_min, im_max]` in the `k`-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Relative rank tolerance.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub region: Option<RegionSpec>,
    /// Grid spacing for sampled functions.
    #[serde(default)]
    pub h: Option<f64>,
    /// Truncation of external edges.
    #[serde(default)]
    pub ext_length: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
}

/// Everything one CLI invocation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub graph: GraphSpec,
    pub bc: BcSpec,
    #[serde(default)]
    pub options: AnalysisOptions,
}

impl ProblemSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn build(&self) -> Result<(MetricGraph, BoundaryConditions)> {
        let g = self.graph.build()?;
        let bc = self.bc.build(&g)?;
        Ok((g, bc))
    }
}

pub fn graph_from_json(s: &str) -> Result<MetricGraph> {
    let spec: GraphSpec = serde_json::from_str(s).map_err(|e| Error::Spec(e.to_string()))?;
    spec.build()
}

pub fn bc_from_json(s: &str, graph: &MetricGraph) -> Result<BoundaryConditions> {
    let spec: BcSpec = serde_json::from_str(s).map_err(|e| Error::Spec(e.to_string()))?;
    spec.build(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{classify_bc, equivalent, ClassTag};
    use crate::matrixcore::RankTolerance;

    #[test]
    fn named_and_explicit_graphs() {
        let g = graph_from_json(r#"{"interval": 2.0}"#).unwrap();
        assert_eq!(g, MetricGraph::interval(2.0).unwrap());
        let g = graph_from_json(r#"{"pumpkin": {"n": 3, "length": 1.5}}"#).unwrap();
        assert_eq!(g.deficiency_index(), 6);
        let explicit = r#"{"vertices": ["a", "b"],
            "internal": [{"id": "x", "initial": "a", "terminal": "b", "length": 1.0}],
            "external": [{"id": "y", "initial": "a"}]}"#;
        let g = graph_from_json(explicit).unwrap();
        assert_eq!((g.n_internal(), g.n_external()), (1, 1));
        let back = serde_json::to_string(&GraphSpec::from_graph(&g)).unwrap();
        assert_eq!(graph_from_json(&back).unwrap(), g);
    }

    #[test]
    fn invalid_graph_is_rejected() {
        assert!(graph_from_json(r#"{"interval": -1.0}"#).is_err());
        let bad = r#"{"vertices": ["a"], "internal": [{"id": "x", "initial": "a", "terminal": "b", "length": 1.0}]}"#;
        assert!(matches!(graph_from_json(bad), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn presets_expand_to_graph_size() {
        let g = MetricGraph::star(3).unwrap();
        let bc = bc_from_json(r#"{"delta": {"re": 1.0, "im": 2.0}}"#, &g).unwrap();
        assert_eq!(bc.dim(), 3);
        assert!(equivalent(&bc, &BoundaryConditions::delta(3, Complex64::new(1.0, 2.0)), 1e-10).unwrap());
        assert!(matches!(bc_from_json(r#""intermediate""#, &g), Err(Error::Spec(_))));
        let pt = BcSpec::parse_preset("pt_point:0.785").unwrap().build(&MetricGraph::star(2).unwrap()).unwrap();
        assert_eq!(classify_bc(&pt, RankTolerance::default()).unwrap().tag, ClassTag::QuasiSectorial);
        assert_eq!(BcSpec::parse_preset("delta:-1").unwrap(), BcSpec::Preset(Preset::Delta(JsonComplex::Object { re: -1.0, im: 0.0 })));
        assert!(BcSpec::parse_preset("bogus").is_err());
        assert!(BcSpec::parse_preset("dirichlet:3").is_err());
    }

    #[test]
    fn matrices_round_trip() {
        let g = MetricGraph::interval(1.0).unwrap();
        let bc = BoundaryConditions::intermediate();
        let json = serde_json::to_string(&BcSpec::from_bc(&bc)).unwrap();
        assert!(json.contains(r#""re""#));
        assert_eq!(bc_from_json(&json, &g).unwrap(), bc);
        let wrong = r#"{"A": [[1.0]], "B": [[0.0]]}"#;
        let err = bc_from_json(wrong, &g).unwrap_err();
        assert!(err.to_string().contains("d = 2"), "{err}");
    }

    #[test]
    fn problem_spec_reports_missing_field() {
        let err = ProblemSpec::from_json(r#"{"graph": {"interval": 1.0}}"#).unwrap_err();
        assert!(err.to_string().contains("bc"), "{err}");
        let ok = ProblemSpec::from_json(r#"{"graph": {"star": 2}, "bc": {"pt_point": 0.785}, "options": {"tol": 1e-9}}"#).unwrap();
        let (g, bc) = ok.build().unwrap();
        assert_eq!(bc.dim(), g.deficiency_index());
    }
}
