//! Conforming triangulations of the cross-section with tagged boundary edges.
//!
//! Every boundary edge carries a mechanical tag (clamped `G1`, traction `G2`,
//! contact `G3`) and, off the contact part, an electrical tag (grounded `Ga`
//! or charged `Gb`). Tags live on edges, not nodes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{hypot, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MechTag {
    G1,
    G2,
    G3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElecTag {
    Ga,
    Gb,
}

impl fmt::Display for MechTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MechTag::G1 => "G1",
            MechTag::G2 => "G2",
            MechTag::G3 => "G3",
        })
    }
}

impl fmt::Display for ElecTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElecTag::Ga => "Ga",
            ElecTag::Gb => "Gb",
        })
    }
}

/// Either kind of tag, for measuring parts of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Mech(MechTag),
    Elec(ElecTag),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Oriented so the domain lies to the left.
    pub nodes: [usize; 2],
    pub mech: MechTag,
    pub elec: Option<ElecTag>,
}

impl BoundaryEdge {
    pub fn has(&self, tag: BoundaryTag) -> bool {
        match tag {
            BoundaryTag::Mech(m) => self.mech == m,
            BoundaryTag::Elec(e) => self.elec == Some(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Validates all invariants and orients boundary edges counterclockwise.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        mut boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidMesh(msg));
        let n = nodes.len();
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return bad("non-finite node coordinate".into());
        }
        // directed edge -> owning triangle orientation
        let mut owners: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= n) {
                return bad(format!("node index out of range, triangle {k}"));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return bad(format!("repeated node, triangle {k}"));
            }
            if !(signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) > 0.0) {
                return bad(format!("nonpositive area, triangle {k}"));
            }
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                owners.entry(edge_key(a, b)).or_default().push((a, b));
            }
        }
        for (key, own) in &owners {
            if own.len() > 2 {
                return bad(format!("edge ({}, {}) shared by more than two triangles", key.0, key.1));
            }
            if own.len() == 2 && own[0] == own[1] {
                return bad(format!("inconsistent orientation across edge ({}, {})", key.0, key.1));
            }
        }

        let mut seen: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for (k, e) in boundary_edges.iter_mut().enumerate() {
            let [a, b] = e.nodes;
            if a >= n || b >= n {
                return bad(format!("node index out of range, boundary edge {k}"));
            }
            let key = edge_key(a, b);
            match owners.get(&key) {
                Some(own) if own.len() == 1 => e.nodes = [own[0].0, own[0].1],
                _ => return bad(format!("boundary edge {k} ({a}, {b}) is not on the boundary")),
            }
            if seen.insert(key, ()).is_some() {
                return bad(format!("boundary edge {k} ({a}, {b}) listed twice"));
            }
            match (e.mech, e.elec) {
                (MechTag::G3, Some(_)) => return bad(format!("elec tag on contact boundary, boundary edge {k}")),
                (MechTag::G1 | MechTag::G2, None) => {
                    return bad(format!("missing elec tag on Γ1∪Γ2, boundary edge {k}"))
                }
                _ => {}
            }
        }
        if let Some((key, _)) = owners.iter().find(|(key, own)| own.len() == 1 && !seen.contains_key(key)) {
            return bad(format!("boundary edge ({}, {}) is untagged", key.0, key.1));
        }

        let mesh = Mesh {
            nodes,
            triangles,
            boundary_edges,
        };
        for (tag, name) in [
            (BoundaryTag::Mech(MechTag::G1), "Γ1"),
            (BoundaryTag::Elec(ElecTag::Ga), "Γa"),
            (BoundaryTag::Elec(ElecTag::Gb), "Γb"),
        ] {
            if !(mesh.boundary_measure(tag) > 0.0) {
                return Err(Error::InvalidTagging(format!("measure({name}) = 0")));
            }
        }
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        let t = self.triangles[k];
        signed_area(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]])
    }

    pub fn triangle_vertices(&self, k: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[k];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn centroid(&self, k: usize) -> [f64; 2] {
        let v = self.triangle_vertices(k);
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }

    /// Gradients of the three barycentric (P1 hat) functions on triangle `k`.
    pub fn hat_gradients(&self, k: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.triangle_vertices(k);
        let two_a = 2.0 * self.triangle_area(k);
        let g = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a];
        [g(p1, p2), g(p2, p0), g(p0, p1)]
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let [a, b] = e.nodes;
        hypot(self.nodes[b][0] - self.nodes[a][0], self.nodes[b][1] - self.nodes[a][1])
    }

    /// Outward unit normal of a boundary edge.
    pub fn outward_normal(&self, e: &BoundaryEdge) -> [f64; 2] {
        let [a, b] = e.nodes;
        let d = [self.nodes[b][0] - self.nodes[a][0], self.nodes[b][1] - self.nodes[a][1]];
        let l = hypot(d[0], d[1]);
        [d[1] / l, -d[0] / l]
    }

    pub fn boundary_measure(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.has(tag))
            .map(|e| self.edge_length(e))
            .sum()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|k| self.triangle_area(k)).sum()
    }

    /// Shoelace area enclosed by the oriented boundary edges.
    pub fn boundary_enclosed_area(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| {
                let [a, b] = e.nodes;
                let (p, q) = (self.nodes[a], self.nodes[b]);
                0.5 * (p[0] * q[1] - q[0] * p[1])
            })
            .sum()
    }

    /// Nodes lying on at least one edge that matches `pred`.
    pub fn nodes_on(&self, pred: impl Fn(&BoundaryEdge) -> bool) -> Vec<bool> {
        let mut on = alloc::vec![false; self.nodes.len()];
        for e in self.boundary_edges.iter().filter(|e| pred(e)) {
            on[e.nodes[0]] = true;
            on[e.nodes[1]] = true;
        }
        on
    }

    /// Longest triangle edge.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (self.nodes[t[e]], self.nodes[t[(e + 1) % 3]]);
                h = h.max(sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])));
            }
        }
        h
    }
}

/// Mechanical and electrical tag of one side of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideTag {
    pub mech: MechTag,
    pub elec: Option<ElecTag>,
}

impl SideTag {
    pub const fn new(mech: MechTag, elec: Option<ElecTag>) -> Self {
        SideTag { mech, elec }
    }
}

/// Tags for the four sides of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggingRule {
    pub bottom: SideTag,
    pub right: SideTag,
    pub top: SideTag,
    pub left: SideTag,
}

impl TaggingRule {
    /// Contact on the bottom, clamped and grounded on top, traction and
    /// charge on the lateral sides.
    pub const fn standard() -> Self {
        TaggingRule {
            bottom: SideTag::new(MechTag::G3, None),
            right: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
            top: SideTag::new(MechTag::G1, Some(ElecTag::Ga)),
            left: SideTag::new(MechTag::G2, Some(ElecTag::Gb)),
        }
    }
}

/// Structured criss-cross triangulation of `[0, width] × [0, height]` with
/// `nx × ny` cells, each split along alternating diagonals.
pub fn generate_rect_mesh(width: f64, height: f64, nx: usize, ny: usize, tagging: &TaggingRule) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("nx and ny must be at least 1"));
    }
    if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
        return Err(Error::invalid("width and height must be positive"));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let edge = |nodes: [usize; 2], side: SideTag| BoundaryEdge {
        nodes,
        mech: side.mech,
        elec: side.elec,
    };
    let mut edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        edges.push(edge([id(i, 0), id(i + 1, 0)], tagging.bottom));
    }
    for j in 0..ny {
        edges.push(edge([id(nx, j), id(nx, j + 1)], tagging.right));
    }
    for i in (0..nx).rev() {
        edges.push(edge([id(i + 1, ny), id(i, ny)], tagging.top));
    }
    for j in (0..ny).rev() {
        edges.push(edge([id(0, j + 1), id(0, j)], tagging.left));
    }
    Mesh::new(nodes, triangles, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn unit(n: usize) -> Mesh {
        generate_rect_mesh(1.0, 1.0, n, n, &TaggingRule::standard()).unwrap()
    }

    #[test]
    fn smallest_mesh() {
        let m = unit(1);
        assert_eq!(m.node_count(), 4);
        assert_eq!(m.triangle_count(), 2);
        assert_eq!(m.boundary_edges().len(), 4);
    }

    #[test]
    fn two_by_one_counts() {
        let m = generate_rect_mesh(2.0, 1.0, 2, 1, &TaggingRule::standard()).unwrap();
        assert_eq!(m.node_count(), 6);
        assert_eq!(m.triangle_count(), 4);
        assert_eq!(m.boundary_edges().len(), 6);
    }

    #[test]
    fn areas_partition_the_square() {
        let m = unit(8);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        assert!((m.boundary_enclosed_area() - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn measures() {
        let m = unit(4);
        assert!((m.boundary_measure(BoundaryTag::Mech(MechTag::G3)) - 1.0).abs() < 1e-12);
        assert!((m.boundary_measure(BoundaryTag::Elec(ElecTag::Gb)) - 2.0).abs() < 1e-12);
        let mut rule = TaggingRule::standard();
        rule.bottom = SideTag::new(MechTag::G2, Some(ElecTag::Gb));
        let m = generate_rect_mesh(1.0, 1.0, 2, 2, &rule).unwrap();
        assert_eq!(m.boundary_measure(BoundaryTag::Mech(MechTag::G3)), 0.0);
    }

    #[test]
    fn rejects_bad_tagging() {
        let mut rule = TaggingRule::standard();
        rule.top = SideTag::new(MechTag::G2, Some(ElecTag::Ga));
        let err = generate_rect_mesh(1.0, 1.0, 2, 2, &rule).unwrap_err();
        assert_eq!(err, Error::InvalidTagging("measure(Γ1) = 0".to_string()));

        let mut rule = TaggingRule::standard();
        rule.bottom = SideTag::new(MechTag::G3, Some(ElecTag::Gb));
        let err = generate_rect_mesh(1.0, 1.0, 2, 2, &rule).unwrap_err();
        assert!(err.to_string().contains("elec tag on contact boundary"));

        let mut rule = TaggingRule::standard();
        rule.left = SideTag::new(MechTag::G2, Some(ElecTag::Ga));
        rule.right = SideTag::new(MechTag::G2, Some(ElecTag::Ga));
        let err = generate_rect_mesh(1.0, 1.0, 2, 2, &rule).unwrap_err();
        assert!(err.to_string().contains("measure(Γb) = 0"));

        assert!(generate_rect_mesh(1.0, 1.0, 0, 2, &TaggingRule::standard()).is_err());
        assert!(generate_rect_mesh(-1.0, 1.0, 1, 2, &TaggingRule::standard()).is_err());
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let m = unit(1);
        let mut tris = m.triangles().to_vec();
        tris[1].swap(0, 1);
        let err = Mesh::new(m.nodes().to_vec(), tris, m.boundary_edges().to_vec()).unwrap_err();
        assert!(err.to_string().contains("nonpositive area, triangle 1"));
    }

    #[test]
    fn missing_boundary_edge_is_rejected() {
        let m = unit(2);
        let mut edges = m.boundary_edges().to_vec();
        edges.pop();
        assert!(Mesh::new(m.nodes().to_vec(), m.triangles().to_vec(), edges).is_err());
        let mut edges = m.boundary_edges().to_vec();
        edges.push(edges[0]);
        assert!(Mesh::new(m.nodes().to_vec(), m.triangles().to_vec(), edges).is_err());
    }

    #[test]
    fn edge_multiplicity() {
        for n in [1, 3, 6] {
            let m = unit(n);
            let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for t in m.triangles() {
                for e in 0..3 {
                    *count.entry(edge_key(t[e], t[(e + 1) % 3])).or_default() += 1;
                }
            }
            let boundary: Vec<_> = m.boundary_edges().iter().map(|e| edge_key(e.nodes[0], e.nodes[1])).collect();
            for (k, c) in count {
                assert_eq!(c, if boundary.contains(&k) { 1 } else { 2 });
            }
        }
    }

    #[test]
    fn refinement_quadruples_triangles() {
        for n in [1, 2, 5] {
            let (a, b) = (unit(n), unit(2 * n));
            assert_eq!(b.triangle_count(), 4 * a.triangle_count());
            for tag in [
                BoundaryTag::Mech(MechTag::G1),
                BoundaryTag::Mech(MechTag::G2),
                BoundaryTag::Mech(MechTag::G3),
                BoundaryTag::Elec(ElecTag::Ga),
                BoundaryTag::Elec(ElecTag::Gb),
            ] {
                assert!((a.boundary_measure(tag) - b.boundary_measure(tag)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hat_gradients_sum_to_zero_and_normals_point_out() {
        let m = unit(3);
        for k in 0..m.triangle_count() {
            let g = m.hat_gradients(k);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-12);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-12);
        }
        for e in m.boundary_edges() {
            let nrm = m.outward_normal(e);
            let mid = [
                0.5 * (m.nodes()[e.nodes[0]][0] + m.nodes()[e.nodes[1]][0]),
                0.5 * (m.nodes()[e.nodes[0]][1] + m.nodes()[e.nodes[1]][1]),
            ];
            let inside = [mid[0] - 0.01 * nrm[0] - 0.5, mid[1] - 0.01 * nrm[1] - 0.5];
            let outside = [mid[0] + 0.01 * nrm[0] - 0.5, mid[1] + 0.01 * nrm[1] - 0.5];
            let linf = |p: [f64; 2]| p[0].abs().max(p[1].abs());
            assert!(linf(inside) < 0.5 && linf(outside) > 0.5);
        }
        let _ = vec![0];
    }
}
