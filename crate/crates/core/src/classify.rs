//! Well-posedness of the heat, wave and Schrödinger equations and
//! similarity to a self-adjoint operator on star graphs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{cayley_poles, classify_bc, BoundaryConditions, CayleyPoleReport, ClassTag};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::matrixcore::{cluster, jordan_chain_length, RankTolerance};
use crate::spectral::{
    compact_spectrum, enclosure, star_point_spectrum, EnclosureRegion, RootOptions, SearchRegion, SpectralReport,
};

/// Summary of the quasi-Weierstrass data behind a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassSummary {
    pub m: usize,
    pub nilpotency_index: usize,
    /// Eigenvalues of `L`, from the diagonal of its Schur form.
    #[serde(with = "crate::json::complex_vec")]
    pub spectrum_l: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorVerdict {
    pub generates_c0_semigroup: bool,
    pub generates_analytic_semigroup: bool,
    pub generates_cosine_family: bool,
    pub class: ClassTag,
    pub weierstrass: Option<WeierstrassSummary>,
}

/// `-Delta(A, B)` generates (all three at once) iff the pair is
/// quasi-sectorial. Independent of the edge lengths.
pub fn generator_verdict(bc: &BoundaryConditions, tol: RankTolerance) -> Result<GeneratorVerdict> {
    let class = classify_bc(bc, tol)?;
    let ok = matches!(class.tag, ClassTag::QuasiSectorial | ClassTag::SelfAdjoint);
    let weierstrass = class.qw.as_ref().map(|qw| WeierstrassSummary {
        m: qw.m,
        nilpotency_index: qw.nilpotency_index,
        spectrum_l: (0..qw.m).map(|i| qw.l[(i, i)]).collect(),
    });
    Ok(GeneratorVerdict {
        generates_c0_semigroup: ok,
        generates_analytic_semigroup: ok,
        generates_cosine_family: ok,
        class: class.tag,
        weierstrass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lambda", rename_all = "snake_case")]
pub enum Obstruction {
    None,
    NotQuasiSectorial,
    /// An eigenvalue of `L` off `{Re z < 0} ∪ [0, inf)`.
    #[serde(with = "crate::json::complex")]
    EigenvalueInForbiddenRegion(Complex64),
    /// An eigenvalue of `L` on `[0, inf)` with a nontrivial Jordan chain.
    #[serde(with = "crate::json::complex")]
    CyclicVectorOnHalfAxis(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityVerdict {
    pub is_similar_to_selfadjoint: bool,
    pub obstruction: Obstruction,
}

/// Similarity of `-Delta(A, B)` to a self-adjoint operator on a star graph:
/// quasi-sectorial, every eigenvalue of `L` in `{Re z < 0} ∪ [0, inf)`, and
/// those on `[0, inf)` semisimple. Eigenvalues within `tol` of the imaginary
/// axis but off the real axis count as forbidden.
pub fn similarity_verdict_star(bc: &BoundaryConditions, graph: &MetricGraph, tol: RankTolerance) -> Result<SimilarityVerdict> {
    bc.check_graph(graph)?;
    if !graph.is_star() {
        return Err(Error::NotAStarGraph);
    }
    let class = classify_bc(bc, tol)?;
    let qw = match (class.tag, class.qw) {
        (ClassTag::QuasiSectorial | ClassTag::SelfAdjoint, Some(qw)) => qw,
        _ => return Ok(SimilarityVerdict { is_similar_to_selfadjoint: false, obstruction: Obstruction::NotQuasiSectorial }),
    };
    let t = tol.value();
    let diag: Vec<Complex64> = (0..qw.m).map(|i| qw.l[(i, i)]).collect();
    for (lambda, _) in cluster(&diag, 1e-6) {
        let scale = 1.0 + lambda.norm();
        let on_half_axis = lambda.im.abs() <= 1e-9 * scale && lambda.re >= -t * scale;
        if on_half_axis {
            if jordan_chain_length(&qw.l, lambda, tol)? > 1 {
                return Ok(SimilarityVerdict {
                    is_similar_to_selfadjoint: false,
                    obstruction: Obstruction::CyclicVectorOnHalfAxis(lambda),
                });
            }
        } else if lambda.re >= -t * scale {
            return Ok(SimilarityVerdict {
                is_similar_to_selfadjoint: false,
                obstruction: Obstruction::EigenvalueInForbiddenRegion(lambda),
            });
        }
    }
    Ok(SimilarityVerdict { is_similar_to_selfadjoint: true, obstruction: Obstruction::None })
}

/// One section of a report: either a value or the error that prevented it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Ok { value: T },
    Error { message: String },
    NotApplicable { note: String },
}

impl<T> From<Result<T>> for Section<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(value) => Section::Ok { value },
            Err(e) => Section::Error { message: e.to_string() },
        }
    }
}

impl<T> Section<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Section::Ok { value } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReportOptions {
    pub tol: RankTolerance,
    /// Search rectangle in the `k`-plane for graphs with internal edges; the
    /// spectrum section is skipped when absent.
    pub region: Option<SearchRegion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub class: Section<ClassTag>,
    pub cayley_poles: Section<CayleyPoleReport>,
    pub generator: Section<GeneratorVerdict>,
    pub similarity: Section<SimilarityVerdict>,
    pub enclosure: Section<EnclosureRegion>,
    pub spectrum: Section<SpectralReport>,
    /// Eigenvalues off the real axis rule out similarity to a self-adjoint
    /// operator. On graphs with internal edges this is a necessary condition
    /// only.
    pub nonreal_eigenvalues: Option<bool>,
}

/// Runs every analysis that applies; failures are recorded per section.
pub fn report(bc: &BoundaryConditions, graph: &MetricGraph, opts: ReportOptions) -> Result<Report> {
    bc.check_graph(graph)?;
    let tol = opts.tol;
    let class = classify_bc(bc, tol);
    let poles: Section<CayleyPoleReport> = match &class {
        Ok(c) => match &c.qw {
            Some(qw) => cayley_poles(qw, tol).into(),
            None => Section::NotApplicable { note: format!("no quasi-Weierstrass form for class {}", c.tag) },
        },
        Err(e) => Section::Error { message: e.to_string() },
    };
    let similarity = if graph.is_star() {
        similarity_verdict_star(bc, graph, tol).into()
    } else {
        Section::NotApplicable {
            note: "graph has internal edges; nonreal eigenvalues give a necessary condition only".into(),
        }
    };
    let spectrum: Section<SpectralReport> = if graph.is_star() {
        star_point_spectrum(bc, graph, tol).into()
    } else if let Some(region) = opts.region {
        compact_spectrum(bc, graph, region, RootOptions::default()).into()
    } else {
        Section::NotApplicable { note: "no search region given".into() }
    };
    let nonreal_eigenvalues = spectrum.value().filter(|s| !s.whole_plane).map(|s| {
        s.points
            .iter()
            .any(|p| p.is_eigenvalue && p.lambda.im.abs() > 1e-8 * (1.0 + p.lambda.norm()))
    });
    Ok(Report {
        class: class.map(|c| c.tag).into(),
        cayley_poles: poles,
        generator: generator_verdict(bc, tol).into(),
        similarity,
        enclosure: enclosure(bc, graph, tol).into(),
        spectrum,
        nonreal_eigenvalues,
    })
}
