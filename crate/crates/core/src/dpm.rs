//! The `dpm-1` JSON format for decorated piecewise-flat metrics.
//!
//! ```json
//! {
//!   "format": "dpm-1",
//!   "num_vertices": 4,
//!   "triangles": [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
//!   "inversive_distances": [2, 2, 2, 2, 2, 2],
//!   "radii": [1, 1, 1, 1]
//! }
//! ```
//!
//! `gluings` lists slot pairs `[[t, s], [t', s']]`, one per edge in edge id
//! order; when absent they are inferred from the triangle list. Per-edge
//! arrays follow edge id order.

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use crate::error::{Error, Result};
use crate::flow::validate_target;
use crate::mesh::{DeltaComplex, Slot};
use crate::metric::{lengths_from_inversive, DecoratedMetric};

pub const FORMAT_TAG: &str = "dpm-1";

type SlotPair = [[usize; 2]; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpmDocument {
    pub format: String,
    pub num_vertices: usize,
    pub triangles: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gluings: Option<Vec<SlotPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_lengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversive_distances: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_factors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_curvature: Option<Vec<f64>>,
}

/// A parsed and validated document.
#[derive(Clone, Debug)]
pub struct Dpm {
    pub metric: DecoratedMetric,
    pub target: Option<Vec<f64>>,
}

impl DpmDocument {
    /// Document with explicit gluings and base edge lengths; `u` is written
    /// only when nonzero.
    pub fn from_metric(metric: &DecoratedMetric, target: Option<&[f64]>) -> Self {
        let mesh = metric.mesh();
        let gluings = mesh
            .gluings()
            .into_iter()
            .map(|(a, b)| [[a.triangle, a.side], [b.triangle, b.side]])
            .collect();
        let u = metric.u();
        DpmDocument {
            format: FORMAT_TAG.to_string(),
            num_vertices: mesh.num_vertices(),
            triangles: mesh.triangles().to_vec(),
            gluings: Some(gluings),
            edge_lengths: Some(metric.base_lengths().to_vec()),
            inversive_distances: None,
            radii: metric.radii().to_vec(),
            conformal_factors: u.iter().any(|&x| x != 0.0).then(|| u.to_vec()),
            target_curvature: target.map(<[f64]>::to_vec),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document values are finite");
        s.push('\n');
        s
    }

    /// Validates the document into a metric and optional target.
    pub fn into_dpm(self) -> Result<Dpm> {
        if self.format != FORMAT_TAG {
            return Err(Error::SchemaError(format!(
                "format: expected {FORMAT_TAG:?}, found {:?}",
                self.format
            )));
        }
        let mesh = match &self.gluings {
            Some(g) => {
                let pairs: Vec<(Slot, Slot)> = g
                    .iter()
                    .map(|[a, b]| (Slot::new(a[0], a[1]), Slot::new(b[0], b[1])))
                    .collect();
                DeltaComplex::build(self.num_vertices, self.triangles, &pairs)?
            }
            None => DeltaComplex::infer(self.num_vertices, self.triangles)?,
        };
        let u = self
            .conformal_factors
            .unwrap_or_else(|| vec![0.0; mesh.num_vertices()]);
        let lengths = match (self.edge_lengths, self.inversive_distances) {
            (Some(l), None) => l,
            (None, Some(inv)) => {
                if inv.len() != mesh.num_edges() {
                    return Err(Error::LengthMismatch {
                        what: "inversive_distances",
                        expected: mesh.num_edges(),
                        found: inv.len(),
                    });
                }
                if self.radii.len() != mesh.num_vertices() {
                    return Err(Error::LengthMismatch {
                        what: "radii",
                        expected: mesh.num_vertices(),
                        found: self.radii.len(),
                    });
                }
                if let Some(v) = self.radii.iter().position(|r| !(*r > 0.0) || !r.is_finite()) {
                    return Err(Error::NonPositiveRadius {
                        vertex: v,
                        value: self.radii[v],
                    });
                }
                for (edge, &value) in inv.iter().enumerate() {
                    if !value.is_finite() {
                        return Err(Error::InvalidInversiveDistance { edge, value });
                    }
                    if !(value > 1.0) {
                        return Err(Error::InversiveDistanceOutOfRange { edge, value });
                    }
                }
                lengths_from_inversive(&mesh, &self.radii, &inv)?
            }
            (Some(_), Some(_)) => {
                return Err(Error::SchemaError(
                    "edge_lengths and inversive_distances are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(Error::SchemaError(
                    "one of edge_lengths or inversive_distances is required".into(),
                ))
            }
        };
        let metric = DecoratedMetric::from_parts(mesh, lengths, self.radii, u)?;
        metric.require_admissible()?;
        if let Some(t) = &self.target_curvature {
            validate_target(&metric, t)?;
        }
        Ok(Dpm {
            metric,
            target: self.target_curvature,
        })
    }
}

fn map_json_error(e: serde_json::Error) -> Error {
    match e.classify() {
        Category::Syntax | Category::Eof => Error::SyntaxError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
        Category::Data => Error::SchemaError(e.to_string()),
        Category::Io => Error::Io(e.to_string()),
    }
}

pub fn parse_dpm(text: &str) -> Result<Dpm> {
    let doc: DpmDocument = serde_json::from_str(text).map_err(map_json_error)?;
    doc.into_dpm()
}

pub fn emit_dpm(metric: &DecoratedMetric, target: Option<&[f64]>) -> String {
    DpmDocument::from_metric(metric, target).to_json()
}

pub fn read_dpm(path: &std::path::Path) -> Result<Dpm> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dpm(&text)
}
