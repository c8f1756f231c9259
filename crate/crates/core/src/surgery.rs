//! Weighted Delaunay test and surgery by edge flipping.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, TriangleGeometry};
use crate::mesh::{EdgeId, Slot, VertexId};
use crate::metric::{heron_area, is_strict_triangle, DecoratedMetric, EffectiveMetric};

/// Relative tolerance on `d₁ + d₂` below which an edge counts as violating.
pub const DELAUNAY_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub edge: EdgeId,
    /// Decorated cotan weight, negative for violations.
    pub weight: f64,
}

/// One flip performed during surgery.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurgeryEvent {
    /// Flow time at which the flip happened; 0 outside of a flow.
    pub time: f64,
    pub edge: EdgeId,
    pub retired: (VertexId, VertexId),
    pub created: (VertexId, VertexId),
    /// Effective length of the created edge.
    pub new_length: f64,
    /// Inversive distance of the created edge, which need not exceed 1.
    pub new_inversive: f64,
    /// Weight of the retired edge just before the flip.
    pub weight: f64,
    pub ordinal: usize,
}

/// Sum of the signed distances on both sides of every edge, with the
/// tolerance used for the violation test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeBalance {
    pub distance_sum: f64,
    pub tolerance: f64,
}

pub fn edge_balances(eff: &EffectiveMetric<'_>, geometry: &[TriangleGeometry]) -> Vec<EdgeBalance> {
    eff.mesh
        .edges()
        .map(|e| {
            let [a, b] = e.slots;
            let (ga, gb) = (&geometry[a.triangle], &geometry[b.triangle]);
            let scale = ga
                .power
                .abs()
                .sqrt()
                .max(gb.power.abs().sqrt())
                .max(eff.lengths[e.id]);
            EdgeBalance {
                distance_sum: ga.distances[a.side] + gb.distances[b.side],
                tolerance: DELAUNAY_EPS * scale,
            }
        })
        .collect()
}

/// Edges whose decorated cotan weight is strictly negative, most negative
/// first.
pub fn delaunay_violations(metric: &DecoratedMetric) -> Result<Vec<Violation>> {
    let eff = metric.effective()?;
    let geometry = eff.geometry()?;
    let balances = edge_balances(&eff, &geometry);
    let mut out = Vec::new();
    for e in eff.mesh.edges() {
        let [a, _] = e.slots;
        let half_chord = geometry[a.triangle]
            .half_chord(a.side)
            .map_err(|err| err.at_edge(e.id))?;
        let b = balances[e.id];
        if b.distance_sum < -b.tolerance {
            let weight = if half_chord > 0.0 {
                b.distance_sum / half_chord
            } else {
                f64::NEG_INFINITY
            };
            out.push(Violation { edge: e.id, weight });
        }
    }
    out.sort_by(|x, y| x.weight.total_cmp(&y.weight).then(x.edge.cmp(&y.edge)));
    Ok(out)
}

pub fn is_weighted_delaunay(metric: &DecoratedMetric) -> Result<bool> {
    Ok(delaunay_violations(metric)?.is_empty())
}

/// The quadrilateral around an edge laid out in one plane: `i` at the origin,
/// `j` on the positive x-axis, `k` above and `l` below.
#[derive(Clone, Copy, Debug)]
struct Quad {
    i: Point,
    j: Point,
    k: Point,
    l: Point,
    /// Lengths `ki, il, lj, jk` of the outer sides.
    outer: [f64; 4],
}

fn lay_out_quad(eff: &EffectiveMetric<'_>, a: Slot, b: Slot) -> Result<Quad> {
    let len = |t: usize, side: usize| eff.lengths[eff.mesh.triangle_edges(t)[side % 3]];
    let l_ij = len(a.triangle, a.side);
    let l_jk = len(a.triangle, a.side + 1);
    let l_ki = len(a.triangle, a.side + 2);
    let l_il = len(b.triangle, b.side + 1);
    let l_lj = len(b.triangle, b.side + 2);
    let upper = crate::geometry::layout_triangle(l_ij, l_jk, l_ki)
        .map_err(|e| e.at_triangle(a.triangle))?;
    if !is_strict_triangle([l_ij, l_lj, l_il]) {
        return Err(Error::DegenerateTriangle {
            triangle: Some(b.triangle),
        });
    }
    let x = (l_ij * l_ij + l_il * l_il - l_lj * l_lj) / (2.0 * l_ij);
    let y = -2.0 * heron_area([l_ij, l_lj, l_il]) / l_ij;
    Ok(Quad {
        i: upper[0],
        j: upper[1],
        k: upper[2],
        l: [x, y],
        outer: [l_ki, l_il, l_lj, l_jk],
    })
}

/// Flips `edge`, replacing it by the other diagonal of its quadrilateral.
/// Effective lengths of all other edges and all radii are unchanged.
pub fn flip_metric(metric: &mut DecoratedMetric, edge: EdgeId) -> Result<SurgeryEvent> {
    let handle = metric.mesh().edge(edge)?;
    let [a, b] = handle.slots;
    if a.triangle == b.triangle {
        return Err(Error::SelfFlip(edge));
    }
    let eff = metric.effective()?;
    let quad = lay_out_quad(&eff, a, b)?;
    let ga = TriangleGeometry::new(eff.triangle_lengths(a.triangle), eff.triangle_radii(a.triangle))
        .map_err(|e| e.at_triangle(a.triangle))?;
    let gb = TriangleGeometry::new(eff.triangle_lengths(b.triangle), eff.triangle_radii(b.triangle))
        .map_err(|e| e.at_triangle(b.triangle))?;
    let distance_sum = ga.distances[a.side] + gb.distances[b.side];
    let weight = match ga.half_chord(a.side) {
        Ok(r) if r > 0.0 => distance_sum / r,
        Ok(_) => f64::INFINITY.copysign(distance_sum),
        Err(_) => f64::NAN,
    };
    drop(eff);

    // The new diagonal must cross the old one strictly inside, otherwise the
    // two new triangles do not tile the same quadrilateral.
    let l_ij = quad.j[0];
    let t = quad.k[1] / (quad.k[1] - quad.l[1]);
    let crossing = quad.k[0] + t * (quad.l[0] - quad.k[0]);
    let tol = 1e-12 * l_ij;
    if !(crossing > quad.i[0] + tol && crossing < quad.j[0] - tol) {
        return Err(Error::FlipProducesDegenerate(edge));
    }
    let dx = quad.k[0] - quad.l[0];
    let dy = quad.k[1] - quad.l[1];
    let new_length = dx.hypot(dy);
    let [l_ki, l_il, l_lj, l_jk] = quad.outer;
    if !is_strict_triangle([l_ki, l_il, new_length]) || !is_strict_triangle([l_lj, l_jk, new_length]) {
        return Err(Error::FlipProducesDegenerate(edge));
    }

    let tri_a = metric.mesh().triangle(a.triangle);
    let tri_b = metric.mesh().triangle(b.triangle);
    let k = tri_a[(a.side + 2) % 3];
    let l = tri_b[(b.side + 2) % 3];
    let base = metric.base_length_between(edge, k, l, new_length)?;
    let radii = metric.effective_radii();
    let new_inversive = crate::metric::inversive_from_length(new_length, radii[k], radii[l]);
    let record = metric.mesh_mut().flip(edge)?;
    metric.set_base_length(edge, base);
    Ok(SurgeryEvent {
        time: 0.0,
        edge,
        retired: record.retired,
        created: record.created,
        new_length,
        new_inversive,
        weight,
        ordinal: 0,
    })
}

pub fn default_max_flips(metric: &DecoratedMetric) -> usize {
    100 * metric.mesh().num_edges()
}

/// Flips the most negative violating edge until the triangulation is
/// weighted Delaunay.
pub fn make_delaunay(metric: &mut DecoratedMetric, max_flips: usize) -> Result<Vec<SurgeryEvent>> {
    let mut events = Vec::new();
    loop {
        let violations = delaunay_violations(metric)?;
        let Some(worst) = violations.first() else {
            return Ok(events);
        };
        if events.len() >= max_flips {
            return Err(Error::SurgeryBudgetExceeded(max_flips));
        }
        let mut event = flip_metric(metric, worst.edge)?;
        event.ordinal = events.len();
        events.push(event);
    }
}
