//! Euclidean geometry of a single decorated triangle.
//!
//! Corners are `i, j, k` and sides are indexed by slot: side 0 is `ij`, side 1
//! is `jk`, side 2 is `ki`. The face-circle is the circle orthogonal to the
//! three vertex circles; its center is the radical center of the vertex
//! circles and its squared radius is their common power.

use crate::error::{Error, Result};
use crate::metric::is_strict_triangle;

/// Cosines clamped by more than this are treated as genuine degeneration.
const COS_CLAMP_TOL: f64 = 1e-9;

pub type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm_sq(a: Point) -> f64 {
    a[0] * a[0] + a[1] * a[1]
}

fn check_triangle(l: [f64; 3]) -> Result<()> {
    if is_strict_triangle(l) {
        Ok(())
    } else {
        Err(Error::DegenerateTriangle { triangle: None })
    }
}

/// Inner angles at `i`, `j`, `k` from the law of cosines.
pub fn inner_angles(l_ij: f64, l_jk: f64, l_ki: f64) -> Result<[f64; 3]> {
    check_triangle([l_ij, l_jk, l_ki])?;
    let angle = |adj1: f64, adj2: f64, opp: f64| -> Result<f64> {
        let cos = (adj1 * adj1 + adj2 * adj2 - opp * opp) / (2.0 * adj1 * adj2);
        let clamped = cos.clamp(-1.0, 1.0);
        if (cos - clamped).abs() > COS_CLAMP_TOL {
            return Err(Error::DegenerateTriangle { triangle: None });
        }
        Ok(clamped.acos())
    };
    Ok([
        angle(l_ij, l_ki, l_jk)?,
        angle(l_ij, l_jk, l_ki)?,
        angle(l_jk, l_ki, l_ij)?,
    ])
}

/// Places `i` at the origin, `j` on the positive x-axis and `k` in the upper
/// half-plane.
pub fn layout_triangle(l_ij: f64, l_jk: f64, l_ki: f64) -> Result<[Point; 3]> {
    check_triangle([l_ij, l_jk, l_ki])?;
    let x = (l_ij * l_ij + l_ki * l_ki - l_jk * l_jk) / (2.0 * l_ij);
    let area = crate::metric::heron_area([l_ij, l_jk, l_ki]);
    let y = 2.0 * area / l_ij;
    Ok([[0.0, 0.0], [l_ij, 0.0], [x, y]])
}

/// Radical center of the three vertex circles and the common power `R²`.
pub fn radical_center(layout: &[Point; 3], radii: [f64; 3]) -> Result<(Point, f64)> {
    let [vi, vj, vk] = *layout;
    let [ri, rj, rk] = radii;
    // Equal power: 2 (v_m − v_i)·x = |v_m|² − |v_i|² − r_m² + r_i², m = j, k.
    let a = sub(vj, vi);
    let b = sub(vk, vi);
    let rhs_a = norm_sq(vj) - norm_sq(vi) - rj * rj + ri * ri;
    let rhs_b = norm_sq(vk) - norm_sq(vi) - rk * rk + ri * ri;
    let det = 2.0 * cross(a, b);
    let scale = norm_sq(a).max(norm_sq(b));
    if !(det.abs() > 1e-300) || det.abs() <= 1e-14 * scale {
        return Err(Error::SingularSystem);
    }
    let x = (rhs_a * b[1] - rhs_b * a[1]) / det;
    let y = (a[0] * rhs_b - b[0] * rhs_a) / det;
    let center = [x, y];
    let power = norm_sq(sub(center, vi)) - ri * ri;
    Ok((center, power))
}

/// Squared half-chord of the face-circle on an edge. It depends only on the
/// edge data: with `m = (l² + r_a² − r_b²) / 2l` it is `m² − r_a²`, written
/// in factored form. Negative exactly when the vertex circles overlap.
pub fn edge_half_chord_sq(l: f64, ra: f64, rb: f64) -> f64 {
    let sum = ra + rb;
    let diff = ra - rb;
    (l - sum) * (l + sum) * (l - diff) * (l + diff) / (4.0 * l * l)
}

/// Half-chord `r_e` of the face-circle on an edge of length `l` joining
/// circles of radii `r_a`, `r_b`.
pub fn edge_half_chord(l: f64, ra: f64, rb: f64) -> Result<f64> {
    let sq = edge_half_chord_sq(l, ra, rb);
    if sq < 0.0 || !sq.is_finite() {
        return Err(Error::ImaginaryChord { edge: None });
    }
    Ok(sq.sqrt())
}

/// Signed distances from `center` to the three side lines, positive toward
/// the opposite corner. Assumes counterclockwise corners.
pub fn signed_distances(layout: &[Point; 3], center: Point) -> [f64; 3] {
    let mut d = [0.0; 3];
    for (side, out) in d.iter_mut().enumerate() {
        let a = layout[side];
        let b = layout[(side + 1) % 3];
        let edge = sub(b, a);
        *out = cross(edge, sub(center, a)) / norm_sq(edge).sqrt();
    }
    d
}

/// Decorated cotan weight `(d₁ + d₂) / r_e`.
pub fn cotan_weight(d1: f64, d2: f64, half_chord: f64) -> f64 {
    (d1 + d2) / half_chord
}

/// All per-triangle data at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleGeometry {
    /// Side lengths in slot order.
    pub lengths: [f64; 3],
    /// Corner radii.
    pub radii: [f64; 3],
    /// Inner angles at the three corners.
    pub angles: [f64; 3],
    pub layout: [Point; 3],
    pub center: Point,
    /// Common power of the vertex circles w.r.t. the radical center.
    pub power: f64,
    /// Signed distance from the center to each side.
    pub distances: [f64; 3],
    /// Squared half-chord per side; negative for overlapping circles.
    pub half_chord_sq: [f64; 3],
}

impl TriangleGeometry {
    pub fn new(lengths: [f64; 3], radii: [f64; 3]) -> Result<Self> {
        let [l_ij, l_jk, l_ki] = lengths;
        let angles = inner_angles(l_ij, l_jk, l_ki)?;
        let layout = layout_triangle(l_ij, l_jk, l_ki)?;
        let (center, power) = radical_center(&layout, radii)?;
        let distances = signed_distances(&layout, center);
        let half_chord_sq =
            std::array::from_fn(|s| edge_half_chord_sq(lengths[s], radii[s], radii[(s + 1) % 3]));
        Ok(TriangleGeometry {
            lengths,
            radii,
            angles,
            layout,
            center,
            power,
            distances,
            half_chord_sq,
        })
    }

    pub fn half_chord(&self, side: usize) -> Result<f64> {
        let sq = self.half_chord_sq[side];
        if sq < 0.0 {
            return Err(Error::ImaginaryChord { edge: None });
        }
        Ok(sq.sqrt())
    }

    /// Intersection angle `α` of the face-circle with a side, in `(0, π)`.
    pub fn alpha(&self, side: usize) -> Result<f64> {
        Ok(self.half_chord(side)?.atan2(self.distances[side]))
    }

    pub fn face_circle_is_real(&self) -> bool {
        self.power > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn angle_examples() {
        let s = 6f64.sqrt();
        assert!(inner_angles(s, s, s).unwrap().iter().all(|a| close(*a, PI / 3.0, 1e-15)));
        // Side jk = 5 is opposite corner i.
        let a = inner_angles(3.0, 5.0, 4.0).unwrap();
        assert!(close(a[0], PI / 2.0, 1e-15));
        // Isosceles (2, 2, 3): the apex is opposite the side of length 3.
        let a = inner_angles(2.0, 3.0, 2.0).unwrap();
        assert!(close(a[0], (-1.0f64 / 8.0).acos(), 1e-15));
        assert!(close(a[0], 1.696124, 1e-6));
        assert!(close(a.iter().sum::<f64>(), PI, 1e-15));
    }

    #[test]
    fn degenerate_triangles_rejected() {
        assert!(matches!(inner_angles(1.0, 1.0, 2.0), Err(Error::DegenerateTriangle { .. })));
        assert!(matches!(layout_triangle(1.0, 3.0, 1.0), Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn layout_examples() {
        let s = 6f64.sqrt();
        let [i, j, k] = layout_triangle(s, s, s).unwrap();
        assert_eq!(i, [0.0, 0.0]);
        assert_eq!(j, [s, 0.0]);
        assert!(close(k[0], s / 2.0, 1e-15) && close(k[1], 3.0 * 2f64.sqrt() / 2.0, 1e-14));
        let [_, _, k] = layout_triangle(3.0, 5.0, 4.0).unwrap();
        assert!(close(k[0], 0.0, 1e-15) && close(k[1], 4.0, 1e-15));
    }

    #[test]
    fn equilateral_face_circle() {
        let s = 6f64.sqrt();
        let g = TriangleGeometry::new([s; 3], [1.0; 3]).unwrap();
        assert!(close(g.center[0], s / 2.0, 1e-14));
        assert!(close(g.center[1], 2f64.sqrt() / 2.0, 1e-14));
        assert!(close(g.power, 1.0, 1e-14));
        for side in 0..3 {
            assert!(close(g.distances[side], FRAC_1_SQRT_2, 1e-14));
            assert!(close(g.half_chord(side).unwrap(), FRAC_1_SQRT_2, 1e-15));
            assert!(close(g.alpha(side).unwrap(), PI / 4.0, 1e-14));
        }
        assert!(g.face_circle_is_real());
    }

    #[test]
    fn equal_radii_give_circumcenter() {
        let (l, rho) = ([3.0, 5.0, 4.0], 0.5);
        let g = TriangleGeometry::new(l, [rho; 3]).unwrap();
        // Circumcenter of a right triangle is the hypotenuse midpoint.
        let [_, j, k] = g.layout;
        let mid = [(j[0] + k[0]) / 2.0, (j[1] + k[1]) / 2.0];
        assert!(close(g.center[0], mid[0], 1e-14) && close(g.center[1], mid[1], 1e-14));
        assert!(close(g.power, 2.5 * 2.5 - rho * rho, 1e-13));
        // Tiny radii approach the circumradius.
        let g = TriangleGeometry::new(l, [1e-9; 3]).unwrap();
        assert!(close(g.power, 6.25, 1e-12));
    }

    #[test]
    fn power_is_common_to_all_corners() {
        let g = TriangleGeometry::new([2.0, 2.6, 1.9], [0.4, 0.7, 0.5]).unwrap();
        for m in 0..3 {
            let v = g.layout[m];
            let p = (g.center[0] - v[0]).powi(2) + (g.center[1] - v[1]).powi(2) - g.radii[m].powi(2);
            assert!((p - g.power).abs() <= 1e-12 * g.power.abs().max(1.0));
        }
        for side in 0..3 {
            let r2 = g.half_chord_sq[side];
            let d = g.distances[side];
            assert!((d * d + r2 - g.power).abs() <= 1e-10 * g.power.abs());
            let r = r2.sqrt();
            let alpha = g.alpha(side).unwrap();
            assert!((r / alpha.tan() - d).abs() <= 1e-10 * d.abs().max(r));
        }
    }

    #[test]
    fn half_chord_examples() {
        assert!(close(edge_half_chord(6f64.sqrt(), 1.0, 1.0).unwrap(), FRAC_1_SQRT_2, 1e-15));
        assert_eq!(edge_half_chord(2.0, 1.0, 1.0).unwrap(), 0.0);
        let (l, rho) = (3.0, 0.8);
        assert!(close(edge_half_chord(l, rho, rho).unwrap(), (l * l / 4.0 - rho * rho).sqrt(), 1e-15));
        assert!(matches!(edge_half_chord(1.5, 1.0, 1.0), Err(Error::ImaginaryChord { .. })));
    }

    #[test]
    fn cotan_weight_examples() {
        let d = FRAC_1_SQRT_2;
        assert!(close(cotan_weight(d, d, FRAC_1_SQRT_2), 2.0, 1e-15));
        assert_eq!(cotan_weight(0.3, -0.3, 0.5), 0.0);
        assert!(cotan_weight(0.1, -0.3, 0.5) < 0.0);
    }

    #[test]
    fn signed_distance_is_negative_outside() {
        // An obtuse triangle with equal radii: the circumcenter lies beyond
        // the long side.
        let g = TriangleGeometry::new([4.0, 2.2, 2.2], [0.1; 3]).unwrap();
        assert!(g.distances[0] < 0.0);
        assert!(g.distances[1] > 0.0 && g.distances[2] > 0.0);
    }

    #[test]
    fn scaling_equivariance() {
        let l = [2.0, 2.6, 1.9];
        let r = [0.4, 0.7, 0.5];
        let a = TriangleGeometry::new(l, r).unwrap();
        let b = TriangleGeometry::new(l.map(|x| 3.0 * x), r.map(|x| 3.0 * x)).unwrap();
        for s in 0..3 {
            assert!((a.angles[s] - b.angles[s]).abs() < 1e-14);
            assert!((3.0 * a.distances[s] - b.distances[s]).abs() < 1e-13);
        }
        assert!((9.0 * a.power - b.power).abs() < 1e-12);
    }
}
