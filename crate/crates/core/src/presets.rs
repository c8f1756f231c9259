//! Standard closed triangulations with uniform decorations.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{DeltaComplex, Slot};
use crate::metric::{length_from_inversive, DecoratedMetric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Tetrahedron,
    Octahedron,
    Icosahedron,
    /// `n × n` grid on the flat torus, each square split along a diagonal.
    TorusGrid(usize),
    /// Two triangles glued into a torus with a single vertex.
    OneVertexTorus,
}

impl Preset {
    pub const ALL_NAMES: [&'static str; 5] = [
        "tetrahedron",
        "octahedron",
        "icosahedron",
        "torus_grid",
        "one_vertex_torus",
    ];

    /// Parses a preset name; `torus_grid` takes its size from `n`.
    pub fn from_name(name: &str, n: usize) -> Result<Self> {
        match name {
            "tetrahedron" => Ok(Preset::Tetrahedron),
            "octahedron" => Ok(Preset::Octahedron),
            "icosahedron" => Ok(Preset::Icosahedron),
            "torus_grid" => Ok(Preset::TorusGrid(n)),
            "one_vertex_torus" => Ok(Preset::OneVertexTorus),
            other => Err(Error::InvalidParams(format!(
                "unknown preset {other:?}; expected one of {}",
                Preset::ALL_NAMES.join(", ")
            ))),
        }
    }

    pub fn complex(self) -> Result<DeltaComplex> {
        match self {
            Preset::Tetrahedron => DeltaComplex::infer(4, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]),
            Preset::Octahedron => {
                let mut tris = Vec::new();
                for i in 1..=4 {
                    let next = i % 4 + 1;
                    tris.push([0, i, next]);
                    tris.push([5, next, i]);
                }
                DeltaComplex::infer(6, tris)
            }
            Preset::Icosahedron => {
                // 0 top, 1..=5 upper ring, 6..=10 lower ring, 11 bottom.
                let mut tris = Vec::new();
                for i in 1..=5 {
                    let ni = i % 5 + 1;
                    let li = i + 5;
                    let nli = ni + 5;
                    tris.push([0, i, ni]);
                    tris.push([i, li, ni]);
                    tris.push([ni, li, nli]);
                    tris.push([11, nli, li]);
                }
                DeltaComplex::infer(12, tris)
            }
            Preset::TorusGrid(n) => {
                if n < 3 {
                    return Err(Error::InvalidParams(format!(
                        "torus_grid needs n >= 3, got {n}"
                    )));
                }
                let v = |i: usize, j: usize| (i % n) + n * (j % n);
                let mut tris = Vec::with_capacity(2 * n * n);
                for j in 0..n {
                    for i in 0..n {
                        let (a, b, c, d) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
                        tris.push([a, b, c]);
                        tris.push([a, c, d]);
                    }
                }
                DeltaComplex::infer(n * n, tris)
            }
            Preset::OneVertexTorus => DeltaComplex::build(
                1,
                vec![[0, 0, 0], [0, 0, 0]],
                &[
                    (Slot::new(0, 0), Slot::new(1, 1)),
                    (Slot::new(0, 1), Slot::new(1, 2)),
                    (Slot::new(0, 2), Slot::new(1, 0)),
                ],
            ),
        }
    }

    /// Every vertex gets radius `radius` and every edge inversive distance
    /// `inversive`, so all edges have length `radius·√(2 + 2I)`.
    pub fn uniform(self, radius: f64, inversive: f64) -> Result<DecoratedMetric> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
        }
        if !(inversive > 1.0) || !inversive.is_finite() {
            return Err(Error::InvalidParams(format!(
                "inversive distance must exceed 1, got {inversive}"
            )));
        }
        let mesh = self.complex()?;
        let l = length_from_inversive(radius, radius, inversive);
        let lengths = vec![l; mesh.num_edges()];
        let radii = vec![radius; mesh.num_vertices()];
        DecoratedMetric::new(mesh, lengths, radii)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Tetrahedron => write!(f, "tetrahedron"),
            Preset::Octahedron => write!(f, "octahedron"),
            Preset::Icosahedron => write!(f, "icosahedron"),
            Preset::TorusGrid(n) => write!(f, "torus_grid({n})"),
            Preset::OneVertexTorus => write!(f, "one_vertex_torus"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts the plain names and `torus_grid(n)`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(inner) = s.strip_prefix("torus_grid(").and_then(|r| r.strip_suffix(')')) {
            let n = inner
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad grid size in {s:?}")))?;
            return Ok(Preset::TorusGrid(n));
        }
        Preset::from_name(s, 3)
    }
}
