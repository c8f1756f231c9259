//! Closed triangulated surfaces as Δ-complexes.
//!
//! Triangles are glued along their sides ("slots"). Slot `s` of triangle `t`
//! is the oriented side running from corner `s` to corner `(s + 1) % 3`. An
//! edge is a matched pair of slots, so loops (both endpoints equal) and
//! multiple edges between the same two vertices are representable. This is
//! required because weighted Delaunay triangulations of a decorated surface
//! are generally not simplicial.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type TriangleId = usize;
pub type EdgeId = usize;

/// A triangle side: slot `side` of `triangle` runs from corner `side` to
/// corner `(side + 1) % 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub triangle: TriangleId,
    pub side: usize,
}

impl Slot {
    pub fn new(triangle: TriangleId, side: usize) -> Self {
        Slot { triangle, side }
    }

    fn index(self) -> usize {
        3 * self.triangle + self.side
    }

    fn from_index(i: usize) -> Self {
        Slot::new(i / 3, i % 3)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.triangle, self.side)
    }
}

/// A corner of a triangle, identified by triangle and corner position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Corner {
    pub triangle: TriangleId,
    pub corner: usize,
}

/// Read-only view of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeHandle {
    pub id: EdgeId,
    /// Endpoints as seen from the first slot; `a == b` for loops.
    pub endpoints: (VertexId, VertexId),
    /// The two incident slots. Both may lie in the same triangle.
    pub slots: [Slot; 2],
}

impl EdgeHandle {
    pub fn is_loop(&self) -> bool {
        self.endpoints.0 == self.endpoints.1
    }
}

/// Bookkeeping returned by [`DeltaComplex::flip`].
#[derive(Clone, Debug, PartialEq)]
pub struct FlipRecord {
    pub edge: EdgeId,
    /// Endpoints of the retired diagonal.
    pub retired: (VertexId, VertexId),
    /// Endpoints of the created diagonal.
    pub created: (VertexId, VertexId),
    /// Where each outer side of the quadrilateral moved: `(old, new)`.
    pub slot_map: Vec<(Slot, Slot)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaComplex {
    num_vertices: usize,
    triangles: Vec<[VertexId; 3]>,
    /// Partner slot index for every slot index.
    partner: Vec<usize>,
    /// Edge id for every slot index.
    slot_edge: Vec<EdgeId>,
    /// The two slot indices of every edge; the first one orients the edge.
    edges: Vec<[usize; 2]>,
}

impl DeltaComplex {
    /// Builds and validates a complex from explicit gluings. Edge `e` is the
    /// `e`-th gluing pair.
    pub fn build(
        num_vertices: usize,
        triangles: Vec<[VertexId; 3]>,
        gluings: &[(Slot, Slot)],
    ) -> Result<Self> {
        for tri in &triangles {
            for &v in tri {
                if v >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: v,
                        num_vertices,
                    });
                }
            }
        }
        let num_slots = 3 * triangles.len();
        let mut partner = vec![usize::MAX; num_slots];
        let mut slot_edge = vec![usize::MAX; num_slots];
        let mut edges = Vec::with_capacity(gluings.len());
        for (e, &(a, b)) in gluings.iter().enumerate() {
            for s in [a, b] {
                if s.triangle >= triangles.len() {
                    return Err(Error::TriangleOutOfRange(s.triangle));
                }
                if s.side > 2 {
                    return Err(Error::UnmatchedSlot(s));
                }
            }
            let (ia, ib) = (a.index(), b.index());
            if ia == ib {
                return Err(Error::UnmatchedSlot(a));
            }
            for i in [ia, ib] {
                if partner[i] != usize::MAX {
                    return Err(Error::UnmatchedSlot(Slot::from_index(i)));
                }
            }
            partner[ia] = ib;
            partner[ib] = ia;
            slot_edge[ia] = e;
            slot_edge[ib] = e;
            edges.push([ia, ib]);
        }
        if let Some(i) = partner.iter().position(|&p| p == usize::MAX) {
            return Err(Error::UnmatchedSlot(Slot::from_index(i)));
        }
        let complex = DeltaComplex {
            num_vertices,
            triangles,
            partner,
            slot_edge,
            edges,
        };
        complex.validate()?;
        Ok(complex)
    }

    /// Infers gluings of a simplicial triangle list by matching vertex pairs.
    /// Edges are numbered in order of first appearance (triangle order, then
    /// slot order).
    pub fn infer(num_vertices: usize, triangles: Vec<[VertexId; 3]>) -> Result<Self> {
        let mut by_pair: HashMap<(VertexId, VertexId), Vec<Slot>> = HashMap::new();
        let mut order = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for side in 0..3 {
                let (a, b) = (tri[side], tri[(side + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = by_pair.entry(key).or_default();
                if entry.is_empty() {
                    order.push(key);
                }
                entry.push(Slot::new(t, side));
            }
        }
        let mut gluings = Vec::with_capacity(order.len());
        for key in order {
            let slots = &by_pair[&key];
            if key.0 == key.1 || slots.len() != 2 {
                return Err(Error::NonSimplicial(key.0, key.1, slots.len()));
            }
            gluings.push((slots[0], slots[1]));
        }
        DeltaComplex::build(num_vertices, triangles, &gluings)
    }

    fn validate(&self) -> Result<()> {
        for (i, &p) in self.partner.iter().enumerate() {
            if i < p {
                let (a, b) = (Slot::from_index(i), Slot::from_index(p));
                if self.slot_vertices(a) != reversed(self.slot_vertices(b)) {
                    return Err(Error::OrientationMismatch(a, b));
                }
            }
        }
        let mut used = vec![false; self.num_vertices];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::UnusedVertex(v));
        }

        let mut components = UnionFind::new(self.num_vertices);
        for e in 0..self.edges.len() {
            let (a, b) = self.edge_endpoints(e);
            components.union(a, b);
        }
        if self.num_vertices > 0 {
            let root = components.find(0);
            if (1..self.num_vertices).any(|v| components.find(v) != root) {
                return Err(Error::DisconnectedSurface);
            }
        }

        // Every vertex link must be a single cycle of corners.
        let mut seen = vec![false; 3 * self.triangles.len()];
        let mut cycles = vec![0usize; self.num_vertices];
        for start in 0..seen.len() {
            if seen[start] {
                continue;
            }
            let first = Corner {
                triangle: start / 3,
                corner: start % 3,
            };
            let v = self.corner_vertex(first);
            cycles[v] += 1;
            let mut c = first;
            loop {
                seen[3 * c.triangle + c.corner] = true;
                c = self.rotate_corner(c);
                if c == first {
                    break;
                }
            }
        }
        if let Some(v) = cycles.iter().position(|&n| n != 1) {
            return Err(Error::NonManifoldVertex(v));
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    pub fn triangles(&self) -> &[[VertexId; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: TriangleId) -> [VertexId; 3] {
        self.triangles[t]
    }

    /// Edge ids of the three sides of triangle `t`, in slot order.
    pub fn triangle_edges(&self, t: TriangleId) -> [EdgeId; 3] {
        [
            self.slot_edge[3 * t],
            self.slot_edge[3 * t + 1],
            self.slot_edge[3 * t + 2],
        ]
    }

    pub fn slot_edge(&self, s: Slot) -> EdgeId {
        self.slot_edge[s.index()]
    }

    pub fn partner(&self, s: Slot) -> Slot {
        Slot::from_index(self.partner[s.index()])
    }

    /// Oriented endpoints of a slot.
    pub fn slot_vertices(&self, s: Slot) -> (VertexId, VertexId) {
        let tri = self.triangles[s.triangle];
        (tri[s.side], tri[(s.side + 1) % 3])
    }

    pub fn corner_vertex(&self, c: Corner) -> VertexId {
        self.triangles[c.triangle][c.corner]
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.slot_vertices(Slot::from_index(self.edges[e][0]))
    }

    pub fn edge(&self, e: EdgeId) -> Result<EdgeHandle> {
        let slots = self.edges.get(e).ok_or(Error::EdgeOutOfRange(e))?;
        Ok(EdgeHandle {
            id: e,
            endpoints: self.edge_endpoints(e),
            slots: [Slot::from_index(slots[0]), Slot::from_index(slots[1])],
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeHandle> + '_ {
        (0..self.num_edges()).map(|e| self.edge(e).expect("edge id in range"))
    }

    /// Gluing pairs in edge order, as accepted by [`DeltaComplex::build`].
    pub fn gluings(&self) -> Vec<(Slot, Slot)> {
        self.edges
            .iter()
            .map(|&[a, b]| (Slot::from_index(a), Slot::from_index(b)))
            .collect()
    }

    /// Next corner counterclockwise around the same vertex.
    fn rotate_corner(&self, c: Corner) -> Corner {
        // The outgoing slot at corner c is slot c.corner; its partner runs
        // back into this vertex, which is the partner's end corner.
        let p = self.partner(Slot::new(c.triangle, c.corner));
        Corner {
            triangle: p.triangle,
            corner: (p.side + 1) % 3,
        }
    }

    /// All corners at vertex `v`, in cyclic order around the vertex.
    pub fn vertex_star(&self, v: VertexId) -> Result<Vec<Corner>> {
        if v >= self.num_vertices {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                num_vertices: self.num_vertices,
            });
        }
        let first = self
            .triangles
            .iter()
            .enumerate()
            .find_map(|(t, tri)| {
                tri.iter().position(|&w| w == v).map(|corner| Corner {
                    triangle: t,
                    corner,
                })
            })
            .ok_or(Error::UnusedVertex(v))?;
        let mut star = vec![first];
        let mut c = self.rotate_corner(first);
        while c != first {
            star.push(c);
            c = self.rotate_corner(c);
        }
        Ok(star)
    }

    /// Replaces the two triangles adjacent to `e` by the two triangles on the
    /// opposite diagonal. The edge keeps its id; every other edge id is
    /// preserved.
    ///
    /// With `e` running i→j in triangle `(i, j, k)` and j→i in `(j, i, l)`,
    /// the triangles become `(k, i, l)` and `(l, j, k)`, and the new edge is
    /// slot 2 of both.
    pub fn flip(&mut self, e: EdgeId) -> Result<FlipRecord> {
        let handle = self.edge(e)?;
        let [a, b] = handle.slots;
        if a.triangle == b.triangle {
            return Err(Error::SelfFlip(e));
        }
        let (t0, s0) = (a.triangle, a.side);
        let (t1, s1) = (b.triangle, b.side);
        let tri0 = self.triangles[t0];
        let tri1 = self.triangles[t1];
        let i = tri0[s0];
        let j = tri0[(s0 + 1) % 3];
        let k = tri0[(s0 + 2) % 3];
        let l = tri1[(s1 + 2) % 3];

        // Outer sides, old position -> new position.
        let moves = [
            (Slot::new(t0, (s0 + 2) % 3), Slot::new(t0, 0)), // k -> i
            (Slot::new(t1, (s1 + 1) % 3), Slot::new(t0, 1)), // i -> l
            (Slot::new(t1, (s1 + 2) % 3), Slot::new(t1, 0)), // l -> j
            (Slot::new(t0, (s0 + 1) % 3), Slot::new(t1, 1)), // j -> k
        ];
        let old_partner: Vec<usize> = moves.iter().map(|(o, _)| self.partner[o.index()]).collect();
        let old_edge: Vec<EdgeId> = moves.iter().map(|(o, _)| self.slot_edge[o.index()]).collect();
        let orientation: Vec<(VertexId, VertexId)> =
            old_edge.iter().map(|&eid| self.edge_endpoints(eid)).collect();
        let remap = |idx: usize| -> usize {
            moves
                .iter()
                .find(|(o, _)| o.index() == idx)
                .map(|(_, n)| n.index())
                .unwrap_or(idx)
        };

        self.triangles[t0] = [k, i, l];
        self.triangles[t1] = [l, j, k];

        for (m, (_, new)) in moves.iter().enumerate() {
            let ni = new.index();
            let pi = remap(old_partner[m]);
            self.partner[ni] = pi;
            self.partner[pi] = ni;
            self.slot_edge[ni] = old_edge[m];
        }
        for (m, (_, new)) in moves.iter().enumerate() {
            let x = new.index();
            let y = self.partner[x];
            self.edges[old_edge[m]] = if self.slot_vertices(Slot::from_index(x)) == orientation[m] {
                [x, y]
            } else {
                [y, x]
            };
        }

        let n0 = Slot::new(t0, 2);
        let n1 = Slot::new(t1, 2);
        self.partner[n0.index()] = n1.index();
        self.partner[n1.index()] = n0.index();
        self.slot_edge[n0.index()] = e;
        self.slot_edge[n1.index()] = e;
        self.edges[e] = [n1.index(), n0.index()];

        Ok(FlipRecord {
            edge: e,
            retired: (i, j),
            created: (k, l),
            slot_map: moves.to_vec(),
        })
    }

    /// Multiset of unordered edge vertex pairs, sorted.
    pub fn edge_vertex_pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut pairs: Vec<_> = (0..self.num_edges())
            .map(|e| {
                let (a, b) = self.edge_endpoints(e);
                (a.min(b), a.max(b))
            })
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

fn reversed((a, b): (VertexId, VertexId)) -> (VertexId, VertexId) {
    (b, a)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> DeltaComplex {
        DeltaComplex::infer(4, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]).unwrap()
    }

    fn one_vertex_torus() -> DeltaComplex {
        DeltaComplex::build(
            1,
            vec![[0, 0, 0], [0, 0, 0]],
            &[
                (Slot::new(0, 0), Slot::new(1, 1)),
                (Slot::new(0, 1), Slot::new(1, 2)),
                (Slot::new(0, 2), Slot::new(1, 0)),
            ],
        )
        .unwrap()
    }

    /// Sphere from two triangles, each with two sides glued to each other.
    fn folded_sphere() -> DeltaComplex {
        DeltaComplex::build(
            3,
            vec![[0, 1, 0], [0, 0, 2]],
            &[
                (Slot::new(0, 0), Slot::new(0, 1)),
                (Slot::new(0, 2), Slot::new(1, 0)),
                (Slot::new(1, 1), Slot::new(1, 2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn counts_and_euler_characteristic() {
        let t = tetrahedron();
        assert_eq!((t.num_vertices(), t.num_edges(), t.num_triangles()), (4, 6, 4));
        assert_eq!(t.euler_characteristic(), 2);
        let o = one_vertex_torus();
        assert_eq!((o.num_edges(), o.euler_characteristic()), (3, 0));
        assert!(o.edges().all(|e| e.is_loop()));
    }

    #[test]
    fn explicit_gluings_match_inferred() {
        let t = tetrahedron();
        let rebuilt = DeltaComplex::build(4, t.triangles().to_vec(), &t.gluings()).unwrap();
        assert_eq!(rebuilt.edge_vertex_pairs(), t.edge_vertex_pairs());
    }

    #[test]
    fn same_direction_gluing_is_orientation_mismatch() {
        // Slot (0,0) runs 0→1 and slot (1,0) also runs 0→1.
        let err = DeltaComplex::build(
            4,
            vec![[0, 1, 2], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
            &[
                (Slot::new(0, 0), Slot::new(1, 0)),
                (Slot::new(0, 1), Slot::new(3, 0)),
                (Slot::new(0, 2), Slot::new(2, 1)),
                (Slot::new(1, 1), Slot::new(3, 1)),
                (Slot::new(1, 2), Slot::new(2, 0)),
                (Slot::new(2, 2), Slot::new(3, 2)),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::OrientationMismatch(..)), "{err:?}");
    }

    #[test]
    fn missing_gluing_is_unmatched() {
        let t = tetrahedron();
        let mut g = t.gluings();
        g.pop();
        let err = DeltaComplex::build(4, t.triangles().to_vec(), &g).unwrap_err();
        assert!(matches!(err, Error::UnmatchedSlot(_)));
    }

    #[test]
    fn unused_vertex_and_out_of_range() {
        let t = tetrahedron();
        assert!(matches!(
            DeltaComplex::build(5, t.triangles().to_vec(), &t.gluings()),
            Err(Error::UnusedVertex(4))
        ));
        assert!(matches!(
            DeltaComplex::infer(3, t.triangles().to_vec()),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn two_spheres_are_disconnected() {
        let mut tris = tetrahedron().triangles().to_vec();
        tris.extend(tetrahedron().triangles().iter().map(|t| t.map(|v| v + 4)));
        assert!(matches!(DeltaComplex::infer(8, tris), Err(Error::DisconnectedSurface)));
    }

    #[test]
    fn infer_rejects_non_simplicial() {
        assert!(matches!(
            DeltaComplex::infer(1, vec![[0, 0, 0], [0, 0, 0]]),
            Err(Error::NonSimplicial(..))
        ));
    }

    #[test]
    fn icosahedron_edge_count_by_brute_force() {
        let m = crate::presets::Preset::Icosahedron.complex().unwrap();
        let mut pairs = std::collections::BTreeSet::new();
        for t in m.triangles() {
            for s in 0..3 {
                let (a, b) = (t[s], t[(s + 1) % 3]);
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        assert_eq!(pairs.len(), 30);
        assert_eq!(m.num_edges(), 30);
    }

    #[test]
    fn vertex_star_sizes() {
        let t = tetrahedron();
        for v in 0..4 {
            assert_eq!(t.vertex_star(v).unwrap().len(), 3);
        }
        assert_eq!(one_vertex_torus().vertex_star(0).unwrap().len(), 6);
        let ico = crate::presets::Preset::Icosahedron.complex().unwrap();
        let total: usize = (0..12).map(|v| ico.vertex_star(v).unwrap().len()).sum();
        assert!((0..12).all(|v| ico.vertex_star(v).unwrap().len() == 5));
        assert_eq!(total, 3 * ico.num_triangles());
    }

    #[test]
    fn flip_preserves_counts_and_is_an_involution() {
        let mut t = tetrahedron();
        let before = t.edge_vertex_pairs();
        let (a, b) = t.edge_endpoints(2);
        let rec = t.flip(2).unwrap();
        assert_eq!(rec.retired, (a, b));
        assert_eq!(t.num_edges(), 6);
        assert_eq!(t.euler_characteristic(), 2);
        let (k, l) = rec.created;
        assert_eq!(t.edge_endpoints(2), (k, l));
        // Validity is re-checked through a rebuild.
        DeltaComplex::build(4, t.triangles().to_vec(), &t.gluings()).unwrap();
        t.flip(2).unwrap();
        assert_eq!(t.edge_vertex_pairs(), before);
    }

    #[test]
    fn flip_on_tetrahedron_creates_multi_edge() {
        // The opposite corners of a tetrahedron edge are already joined.
        let mut t = tetrahedron();
        let rec = t.flip(0).unwrap();
        let (k, l) = rec.created;
        let count = t
            .edge_vertex_pairs()
            .iter()
            .filter(|&&p| p == (k.min(l), k.max(l)))
            .count();
        assert_eq!(count, 2);
    }

    #[test]
    fn flip_loop_on_one_vertex_torus() {
        let mut o = one_vertex_torus();
        for e in 0..3 {
            o.flip(e).unwrap();
            let rebuilt = DeltaComplex::build(1, o.triangles().to_vec(), &o.gluings()).unwrap();
            assert_eq!(rebuilt.num_edges(), 3);
            assert_eq!(rebuilt.euler_characteristic(), 0);
            assert_eq!(o.vertex_star(0).unwrap().len(), 6);
        }
    }

    #[test]
    fn self_glued_edge_cannot_flip() {
        let mut s = folded_sphere();
        assert_eq!(s.euler_characteristic(), 2);
        assert!(matches!(s.flip(0), Err(Error::SelfFlip(0))));
        assert!(matches!(s.flip(99), Err(Error::EdgeOutOfRange(99))));
    }

    #[test]
    fn edges_agree_with_slots() {
        let ico = crate::presets::Preset::Icosahedron.complex().unwrap();
        for e in ico.edges() {
            let (a, b) = ico.slot_vertices(e.slots[0]);
            let (c, d) = ico.slot_vertices(e.slots[1]);
            assert_eq!((a, b), (d, c));
            assert_eq!(e.endpoints, (a, b));
            assert_eq!(ico.partner(e.slots[0]), e.slots[1]);
        }
    }
}
