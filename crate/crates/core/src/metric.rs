//! Decorated piecewise-flat metrics `(l, r)` and their discrete conformal
//! changes.
//!
//! Base data (edge lengths and vertex radii) is kept separate from the
//! conformal factor `u`. Effective lengths are recomputed from base data on
//! demand; callers that evaluate several quantities at one state take an
//! [`EffectiveMetric`] snapshot once.

use crate::error::{Error, Result};
use crate::mesh::{DeltaComplex, EdgeId, TriangleId};

/// Relative degeneracy threshold for the strict triangle inequality.
pub const TRIANGLE_EPS: f64 = 1e-12;

/// Per-edge inversive distances.
#[derive(Clone, Debug, PartialEq)]
pub struct InversiveDistances(pub Vec<f64>);

/// `l = sqrt(r_a² + r_b² + 2 I r_a r_b)`.
pub fn length_from_inversive(ra: f64, rb: f64, inversive: f64) -> f64 {
    (ra * ra + rb * rb + 2.0 * inversive * ra * rb).sqrt()
}

/// `I = (l² − r_a² − r_b²) / (2 r_a r_b)`.
pub fn inversive_from_length(l: f64, ra: f64, rb: f64) -> f64 {
    (l * l - ra * ra - rb * rb) / (2.0 * ra * rb)
}

/// Squared length of an edge after the conformal change `(u_a, u_b)`.
///
/// Written as `e^{u_a+u_b} (expm1(u_a−u_b) r_a² + expm1(u_b−u_a) r_b² + l²)`,
/// which equals the expanded form and reduces to `e^{2u} l²` on loops.
pub fn conformal_length_sq(l: f64, ra: f64, rb: f64, ua: f64, ub: f64) -> f64 {
    let diff = ua - ub;
    (ua + ub).exp() * (diff.exp_m1() * ra * ra + (-diff).exp_m1() * rb * rb + l * l)
}

/// Inverse of [`conformal_length_sq`]: the base length that maps to the
/// effective length `effective` under `(u_a, u_b)`.
pub fn base_length_for(effective: f64, ra: f64, rb: f64, ua: f64, ub: f64) -> f64 {
    let diff = ua - ub;
    let sq = effective * effective * (-(ua + ub)).exp()
        - diff.exp_m1() * ra * ra
        - (-diff).exp_m1() * rb * rb;
    sq.sqrt()
}

/// Minimum over the three permutations of `l_rs + l_rt − l_ts`.
pub fn triangle_margin(l: [f64; 3]) -> f64 {
    (l[0] + l[1] - l[2]).min(l[1] + l[2] - l[0]).min(l[2] + l[0] - l[1])
}

/// Whether three lengths form a strictly nondegenerate triangle at the
/// relative tolerance [`TRIANGLE_EPS`].
pub fn is_strict_triangle(l: [f64; 3]) -> bool {
    let scale = l[0].max(l[1]).max(l[2]);
    l.iter().all(|x| x.is_finite() && *x > 0.0) && triangle_margin(l) > TRIANGLE_EPS * scale
}

/// Lengths of all edges from radii and inversive distances.
pub fn lengths_from_inversive(
    mesh: &DeltaComplex,
    radii: &[f64],
    inversive: &[f64],
) -> Result<Vec<f64>> {
    check_len("radii", mesh.num_vertices(), radii.len())?;
    check_len("inversive_distances", mesh.num_edges(), inversive.len())?;
    check_radii(radii)?;
    mesh.edges()
        .map(|e| {
            let value = inversive[e.id];
            if !(value > -1.0) || !value.is_finite() {
                return Err(Error::InvalidInversiveDistance { edge: e.id, value });
            }
            let (a, b) = e.endpoints;
            Ok(length_from_inversive(radii[a], radii[b], value))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMargin {
    pub triangle: TriangleId,
    pub margin: f64,
    /// Margin divided by the longest side.
    pub relative: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginReport {
    pub triangles: Vec<TriangleMargin>,
}

impl MarginReport {
    pub fn admissible(&self) -> bool {
        self.triangles.iter().all(|t| t.admissible)
    }

    pub fn min_relative(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| t.relative)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn first_failure(&self) -> Option<&TriangleMargin> {
        self.triangles.iter().find(|t| !t.admissible)
    }
}

/// A decorated PE metric on a Δ-complex with a conformal factor.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoratedMetric {
    mesh: DeltaComplex,
    base_lengths: Vec<f64>,
    radii: Vec<f64>,
    u: Vec<f64>,
}

impl DecoratedMetric {
    /// Builds a metric from base lengths and radii with `u = 0`. The metric
    /// must be admissible.
    pub fn new(mesh: DeltaComplex, lengths: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        check_len("edge_lengths", mesh.num_edges(), lengths.len())?;
        check_len("radii", mesh.num_vertices(), radii.len())?;
        check_radii(&radii)?;
        for (edge, &value) in lengths.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveLength { edge, value });
            }
        }
        let u = vec![0.0; mesh.num_vertices()];
        let metric = DecoratedMetric {
            mesh,
            base_lengths: lengths,
            radii,
            u,
        };
        metric.require_admissible()?;
        Ok(metric)
    }

    /// Builds a metric from radii and inversive distances. Initial data must
    /// have `I > 1` on every edge.
    pub fn from_inversive(mesh: DeltaComplex, radii: Vec<f64>, inversive: &[f64]) -> Result<Self> {
        check_len("inversive_distances", mesh.num_edges(), inversive.len())?;
        for (edge, &value) in inversive.iter().enumerate() {
            if !(value > 1.0) || !value.is_finite() {
                return Err(Error::InversiveDistanceOutOfRange { edge, value });
            }
        }
        let lengths = lengths_from_inversive(&mesh, &radii, inversive)?;
        DecoratedMetric::new(mesh, lengths, radii)
    }

    /// Returns the metric with conformal factor `u`, which must keep it
    /// admissible.
    pub fn with_u(mut self, u: Vec<f64>) -> Result<Self> {
        self.set_u(u)?;
        Ok(self)
    }

    /// Replaces the conformal factor. Fails, leaving `self` untouched, if the
    /// result is not admissible.
    pub fn set_u(&mut self, u: Vec<f64>) -> Result<()> {
        check_len("conformal_factors", self.mesh.num_vertices(), u.len())?;
        if let Some(v) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteConformalFactor(v));
        }
        let old = std::mem::replace(&mut self.u, u);
        if let Err(e) = self.require_admissible() {
            self.u = old;
            return Err(e);
        }
        Ok(())
    }

    /// Sets `u` without any validation. Used when probing candidate states.
    pub(crate) fn set_u_unchecked(&mut self, u: Vec<f64>) {
        self.u = u;
    }

    pub fn mesh(&self) -> &DeltaComplex {
        &self.mesh
    }

    pub fn base_lengths(&self) -> &[f64] {
        &self.base_lengths
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn effective_radii(&self) -> Vec<f64> {
        self.radii
            .iter()
            .zip(&self.u)
            .map(|(r, u)| u.exp() * r)
            .collect()
    }

    /// Effective lengths under the current `u`.
    pub fn effective_lengths(&self) -> Result<Vec<f64>> {
        self.conformal_lengths(&self.u)
    }

    fn conformal_lengths(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.mesh
            .edges()
            .map(|e| {
                let (a, b) = e.endpoints;
                let sq = conformal_length_sq(
                    self.base_lengths[e.id],
                    self.radii[a],
                    self.radii[b],
                    u[a],
                    u[b],
                );
                if !(sq > 0.0) || !sq.is_finite() {
                    return Err(Error::DegenerateLength {
                        edge: e.id,
                        value: sq,
                    });
                }
                Ok(sq.sqrt())
            })
            .collect()
    }

    /// Effective `(lengths, radii)` for an arbitrary conformal factor applied
    /// to the base data.
    pub fn apply_conformal(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len("conformal_factors", self.mesh.num_vertices(), u.len())?;
        if let Some(v) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteConformalFactor(v));
        }
        let lengths = self.conformal_lengths(u)?;
        let radii = self
            .radii
            .iter()
            .zip(u)
            .map(|(r, x)| x.exp() * r)
            .collect();
        Ok((lengths, radii))
    }

    pub fn effective(&self) -> Result<EffectiveMetric<'_>> {
        Ok(EffectiveMetric {
            mesh: &self.mesh,
            lengths: self.effective_lengths()?,
            radii: self.effective_radii(),
        })
    }

    /// Inversive distances of the effective data. These do not depend on `u`.
    pub fn inversive_distances(&self) -> Result<InversiveDistances> {
        let eff = self.effective()?;
        Ok(InversiveDistances(
            self.mesh
                .edges()
                .map(|e| {
                    let (a, b) = e.endpoints;
                    inversive_from_length(eff.lengths[e.id], eff.radii[a], eff.radii[b])
                })
                .collect(),
        ))
    }

    pub fn validate_triangles(&self) -> Result<MarginReport> {
        Ok(self.effective()?.margins())
    }

    pub fn is_admissible(&self) -> bool {
        self.validate_triangles()
            .map(|r| r.admissible())
            .unwrap_or(false)
    }

    pub fn require_admissible(&self) -> Result<()> {
        let report = self.validate_triangles()?;
        match report.first_failure() {
            Some(t) => Err(Error::NonAdmissibleMetric {
                triangle: t.triangle,
                margin: t.relative,
            }),
            None => Ok(()),
        }
    }

    /// Sum of Heron areas of all effective triangles.
    pub fn total_area(&self) -> Result<f64> {
        let eff = self.effective()?;
        Ok((0..self.mesh.num_triangles())
            .map(|t| heron_area(eff.triangle_lengths(t)))
            .sum())
    }

    /// Base length of an edge between `a` and `b` that the current `u`
    /// maps to the effective length `effective`.
    pub(crate) fn base_length_between(
        &self,
        edge: EdgeId,
        a: usize,
        b: usize,
        effective: f64,
    ) -> Result<f64> {
        let base = base_length_for(effective, self.radii[a], self.radii[b], self.u[a], self.u[b]);
        if !(base > 0.0) || !base.is_finite() {
            return Err(Error::DegenerateLength {
                edge,
                value: base * base,
            });
        }
        Ok(base)
    }

    pub(crate) fn set_base_length(&mut self, edge: EdgeId, value: f64) {
        self.base_lengths[edge] = value;
    }

    pub(crate) fn mesh_mut(&mut self) -> &mut DeltaComplex {
        &mut self.mesh
    }

    /// The same decorated surface with `u` absorbed into the base data.
    pub fn folded(&self) -> Result<DecoratedMetric> {
        let lengths = self.effective_lengths()?;
        Ok(DecoratedMetric {
            mesh: self.mesh.clone(),
            base_lengths: lengths,
            radii: self.effective_radii(),
            u: vec![0.0; self.mesh.num_vertices()],
        })
    }

    /// Assembles a metric from parts without admissibility checks beyond
    /// array sizes. Used by file parsing, which validates separately.
    pub(crate) fn from_parts(
        mesh: DeltaComplex,
        base_lengths: Vec<f64>,
        radii: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<Self> {
        check_len("edge_lengths", mesh.num_edges(), base_lengths.len())?;
        check_len("radii", mesh.num_vertices(), radii.len())?;
        check_len("conformal_factors", mesh.num_vertices(), u.len())?;
        check_radii(&radii)?;
        for (edge, &value) in base_lengths.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveLength { edge, value });
            }
        }
        if let Some(v) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteConformalFactor(v));
        }
        Ok(DecoratedMetric {
            mesh,
            base_lengths,
            radii,
            u,
        })
    }
}

/// Effective lengths and radii at one state of a [`DecoratedMetric`].
#[derive(Clone, Debug)]
pub struct EffectiveMetric<'a> {
    pub mesh: &'a DeltaComplex,
    pub lengths: Vec<f64>,
    pub radii: Vec<f64>,
}

impl EffectiveMetric<'_> {
    /// Side lengths of triangle `t` in slot order.
    pub fn triangle_lengths(&self, t: TriangleId) -> [f64; 3] {
        self.mesh.triangle_edges(t).map(|e| self.lengths[e])
    }

    /// Radii of the corners of triangle `t`.
    pub fn triangle_radii(&self, t: TriangleId) -> [f64; 3] {
        self.mesh.triangle(t).map(|v| self.radii[v])
    }

    pub fn margins(&self) -> MarginReport {
        MarginReport {
            triangles: (0..self.mesh.num_triangles())
                .map(|t| {
                    let l = self.triangle_lengths(t);
                    let margin = triangle_margin(l);
                    let scale = l[0].max(l[1]).max(l[2]);
                    TriangleMargin {
                        triangle: t,
                        margin,
                        relative: margin / scale,
                        admissible: is_strict_triangle(l),
                    }
                })
                .collect(),
        }
    }
}

/// Kahan's numerically stable Heron formula. Returns 0 for degenerate input.
pub fn heron_area(l: [f64; 3]) -> f64 {
    let mut s = l;
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if p <= 0.0 {
        0.0
    } else {
        0.25 * p.sqrt()
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

fn check_radii(radii: &[f64]) -> Result<()> {
    for (vertex, &value) in radii.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveRadius { vertex, value });
        }
    }
    Ok(())
}

impl EffectiveMetric<'_> {
    /// Geometry of every triangle at this state.
    pub fn geometry(&self) -> Result<Vec<crate::geometry::TriangleGeometry>> {
        (0..self.mesh.num_triangles())
            .map(|t| {
                crate::geometry::TriangleGeometry::new(
                    self.triangle_lengths(t),
                    self.triangle_radii(t),
                )
                .map_err(|e| e.at_triangle(t))
            })
            .collect()
    }
}
