//! Seeded random decorated metrics and brute-force oracles that recompute
//! geometric quantities along separate code paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::EdgeId;
use crate::metric::DecoratedMetric;
use crate::presets::Preset;
use crate::surgery::{default_max_flips, make_delaunay};

pub const MAX_RESAMPLES: usize = 1000;

/// Recipe for random decorated metrics on a preset complex.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomMetricSpec {
    pub preset: Preset,
    pub radii: (f64, f64),
    /// Inversive distance range, inside `(1, ∞)`.
    pub inversive: (f64, f64),
    /// Half-width of the zero-sum conformal factor perturbation.
    pub perturbation: f64,
    /// Run surgery on each sample so it is weighted Delaunay.
    pub delaunay: bool,
    pub seed: u64,
}

impl RandomMetricSpec {
    pub fn new(preset: Preset, seed: u64) -> Self {
        RandomMetricSpec {
            preset,
            radii: (0.6, 1.4),
            inversive: (1.2, 3.0),
            perturbation: 0.2,
            delaunay: true,
            seed,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Draws one admissible metric, resampling rejected draws.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<DecoratedMetric> {
        let (rlo, rhi) = self.radii;
        let (ilo, ihi) = self.inversive;
        if !(rlo > 0.0 && rlo <= rhi) || !(ilo > 1.0 && ilo <= ihi) || !(self.perturbation >= 0.0) {
            return Err(Error::InvalidParams(format!("bad random metric ranges {self:?}")));
        }
        let mesh = self.preset.complex()?;
        for _ in 0..MAX_RESAMPLES {
            let radii: Vec<f64> = (0..mesh.num_vertices()).map(|_| uniform(rng, rlo, rhi)).collect();
            let inv: Vec<f64> = (0..mesh.num_edges()).map(|_| uniform(rng, ilo, ihi)).collect();
            let u = random_zero_sum(rng, mesh.num_vertices(), self.perturbation);
            let Ok(metric) = DecoratedMetric::from_inversive(mesh.clone(), radii, &inv) else {
                continue;
            };
            let Ok(mut metric) = metric.with_u(u) else {
                continue;
            };
            if self.delaunay {
                let budget = default_max_flips(&metric);
                if make_delaunay(&mut metric, budget).is_err() {
                    continue;
                }
            }
            return Ok(metric);
        }
        Err(Error::InvalidParams(format!(
            "no admissible sample after {MAX_RESAMPLES} draws"
        )))
    }

    /// `count` samples from one seeded stream.
    pub fn instances(&self, count: usize) -> Result<Vec<DecoratedMetric>> {
        let mut rng = self.rng();
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Uniform entries in `[−amplitude, amplitude]`, shifted to sum to zero.
pub fn random_zero_sum(rng: &mut ChaCha8Rng, n: usize, amplitude: f64) -> Vec<f64> {
    if amplitude == 0.0 || n < 2 {
        return vec![0.0; n];
    }
    let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-amplitude..=amplitude)).collect();
    let mean = u.iter().sum::<f64>() / n as f64;
    u.iter_mut().for_each(|x| *x -= mean);
    u
}

type P = [f64; 2];

/// Corners of a triangle with the first side on the positive x-axis.
fn place(l_ij: f64, l_jk: f64, l_ki: f64) -> Result<[P; 3]> {
    let x = (l_ki * l_ki - l_jk * l_jk + l_ij * l_ij) / (2.0 * l_ij);
    let y2 = l_ki * l_ki - x * x;
    if !(y2 > 0.0) || !(l_ij > 0.0) {
        return Err(Error::DegenerateTriangle { triangle: None });
    }
    Ok([[0.0, 0.0], [l_ij, 0.0], [x, y2.sqrt()]])
}

fn angle_between(u: P, v: P) -> f64 {
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

fn minus(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

/// Inner angles at `i`, `j`, `k` measured between coordinate vectors.
pub fn oracle_angles_via_layout(l_ij: f64, l_jk: f64, l_ki: f64) -> Result<[f64; 3]> {
    let [i, j, k] = place(l_ij, l_jk, l_ki)?;
    Ok([
        angle_between(minus(j, i), minus(k, i)),
        angle_between(minus(k, j), minus(i, j)),
        angle_between(minus(i, k), minus(j, k)),
    ])
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Face-circle center and squared radius from the linear system
/// `−2 v·c + (|c|² − R²) = r² − |v|²` at the three corners, by Cramer's rule.
fn face_circle(corners: [P; 3], radii: [f64; 3]) -> Result<(P, f64)> {
    let a: [[f64; 3]; 3] = std::array::from_fn(|m| [-2.0 * corners[m][0], -2.0 * corners[m][1], 1.0]);
    let rhs: [f64; 3] =
        std::array::from_fn(|m| radii[m] * radii[m] - corners[m][0] * corners[m][0] - corners[m][1] * corners[m][1]);
    let d = det3(a);
    if d == 0.0 {
        return Err(Error::SingularSystem);
    }
    let solve = |col: usize| {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = rhs[row];
        }
        det3(m) / d
    };
    let (cx, cy, z) = (solve(0), solve(1), solve(2));
    Ok(([cx, cy], cx * cx + cy * cy - z))
}

/// Intersection angle of the face-circle with side `ij` of the triangle
/// `(i, j, k)` from its lengths and radii.
fn alpha_on_base(l_ij: f64, l_jk: f64, l_ki: f64, radii: [f64; 3]) -> Result<f64> {
    let corners = place(l_ij, l_jk, l_ki)?;
    let (c, r2) = face_circle(corners, radii)?;
    // k lies above the x-axis, so the signed distance toward it is c_y.
    let d = c[1];
    let chord_sq = r2 - d * d;
    if chord_sq < 0.0 {
        return Err(Error::ImaginaryChord { edge: None });
    }
    Ok(chord_sq.sqrt().atan2(d))
}

/// Weighted Delaunay test of one edge as `α₁ + α₂ ≤ π`.
pub fn oracle_delaunay_via_angles(metric: &DecoratedMetric, edge: EdgeId) -> Result<bool> {
    let mesh = metric.mesh();
    let handle = mesh.edge(edge)?;
    let lengths = metric.effective_lengths()?;
    let radii = metric.effective_radii();
    let mut sum = 0.0;
    for slot in handle.slots {
        let tri = mesh.triangle(slot.triangle);
        let edges = mesh.triangle_edges(slot.triangle);
        let s = slot.side;
        let l = |k: usize| lengths[edges[(s + k) % 3]];
        let r = [radii[tri[s]], radii[tri[(s + 1) % 3]], radii[tri[(s + 2) % 3]]];
        sum += alpha_on_base(l(0), l(1), l(2), r).map_err(|e| e.at_edge(edge))?;
    }
    Ok(sum <= std::f64::consts::PI + 1e-12)
}

/// Length of the other diagonal of the quadrilateral formed by triangle
/// `(i, j, k)` with sides `l_ij, l_jk, l_ki` and triangle `(j, i, l)` with
/// sides `l_ij, l_il, l_lj`, glued along `ij`.
pub fn oracle_flip_length(l_ij: f64, l_jk: f64, l_ki: f64, l_il: f64, l_lj: f64) -> Result<f64> {
    let [_, _, k] = place(l_ij, l_jk, l_ki)?;
    // Second triangle in its own frame: j at the origin, i on the x-axis.
    let [_, _, l_own] = place(l_ij, l_il, l_lj)?;
    // Send j to (l_ij, 0) and i to the origin, then reflect across the edge.
    let l = [l_ij - l_own[0], -l_own[1]];
    Ok((k[0] - l[0]).hypot(k[1] - l[1]))
}

/// [`oracle_flip_length`] for an edge of a metric at its current state.
pub fn oracle_flip_length_for(metric: &DecoratedMetric, edge: EdgeId) -> Result<f64> {
    let mesh = metric.mesh();
    let handle = mesh.edge(edge)?;
    let lengths = metric.effective_lengths()?;
    let [a, b] = handle.slots;
    let ea = mesh.triangle_edges(a.triangle);
    let eb = mesh.triangle_edges(b.triangle);
    oracle_flip_length(
        lengths[ea[a.side]],
        lengths[ea[(a.side + 1) % 3]],
        lengths[ea[(a.side + 2) % 3]],
        lengths[eb[(b.side + 1) % 3]],
        lengths[eb[(b.side + 2) % 3]],
    )
}
