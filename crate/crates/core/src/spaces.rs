//! Scalar P1 spaces with homogeneous Dirichlet constraints.
//!
//! `V` vanishes on `G1`, `W` on `Ga`, `E` on `G1 ∪ G2`. A node is constrained
//! as soon as one incident boundary edge is Dirichlet for the space. Fields
//! store values on free dofs only; constrained nodes are implicitly zero.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{symmetric_eigen, CsrMatrix, Definiteness, DenseCholesky, DenseMatrix, SkylineLdl, TripletBuilder};
use crate::math::sqrt;
use crate::mesh::{BoundaryEdge, ElecTag, MechTag, Mesh};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Displacements and velocities.
    V,
    /// Electric potential.
    W,
    /// Temperature.
    E,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::V => "V",
            SpaceKind::W => "W",
            SpaceKind::E => "E",
        }
    }

    fn is_dirichlet(self, e: &BoundaryEdge) -> bool {
        match self {
            SpaceKind::V => e.mech == MechTag::G1,
            SpaceKind::W => e.elec == Some(ElecTag::Ga),
            SpaceKind::E => matches!(e.mech, MechTag::G1 | MechTag::G2),
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    kind: SpaceKind,
    free_dofs: Vec<usize>,
    dof_of_node: Vec<Option<usize>>,
}

/// Builds the constrained space of the given kind on `mesh`.
pub fn build_space(mesh: &Mesh, kind: SpaceKind) -> Result<FeSpace> {
    let fixed = mesh.nodes_on(|e| kind.is_dirichlet(e));
    let space = FeSpace::from_mask(kind, &fixed);
    if space.dim() == 0 {
        return Err(Error::EmptySpace(kind.name()));
    }
    Ok(space)
}

impl FeSpace {
    fn from_mask(kind: SpaceKind, fixed: &[bool]) -> Self {
        let mut free_dofs = Vec::new();
        let mut dof_of_node = vec![None; fixed.len()];
        for (node, &f) in fixed.iter().enumerate() {
            if !f {
                dof_of_node[node] = Some(free_dofs.len());
                free_dofs.push(node);
            }
        }
        FeSpace {
            kind,
            free_dofs,
            dof_of_node,
        }
    }

    /// Every node free; used for diagnostics and unit checks.
    pub fn unconstrained(mesh: &Mesh, kind: SpaceKind) -> Self {
        Self::from_mask(kind, &vec![false; mesh.node_count()])
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn node_count(&self) -> usize {
        self.dof_of_node.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.dof_of_node[node].is_none()
    }

    /// Nodal values with zeros at constrained nodes.
    pub fn expand(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.dim());
        let mut out = vec![0.0; self.node_count()];
        for (d, &node) in self.free_dofs.iter().enumerate() {
            out[node] = values[d];
        }
        out
    }

    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&n| nodal[n]).collect()
    }

    /// Nodal interpolant restricted to the free dofs.
    pub fn interpolate(&self, mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.free_dofs.iter().map(|&n| f(mesh.nodes()[n])).collect()
    }

    fn local_dofs(&self, mesh: &Mesh, k: usize) -> [Option<usize>; 3] {
        let t = mesh.triangles()[k];
        [self.dof(t[0]), self.dof(t[1]), self.dof(t[2])]
    }
}

/// Values of a field on the free dofs of one space.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub kind: SpaceKind,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(space: &FeSpace, values: Vec<f64>) -> Result<Self> {
        Error::check_len(space.dim(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field has non-finite values"));
        }
        Ok(NodalField {
            kind: space.kind(),
            values,
        })
    }

    pub fn zeros(space: &FeSpace) -> Self {
        NodalField {
            kind: space.kind(),
            values: vec![0.0; space.dim()],
        }
    }
}

/// Assembles `Σ_K coeff(K) ∫_K ∇φ_i·∇φ_j` on the free dofs of `rows × cols`.
pub(crate) fn assemble_stiffness(
    mesh: &Mesh,
    rows: &FeSpace,
    cols: &FeSpace,
    coeff: impl Fn(usize) -> [[f64; 2]; 2],
) -> CsrMatrix {
    let mut t = TripletBuilder::new(rows.dim(), cols.dim());
    for k in 0..mesh.triangle_count() {
        let g = mesh.hat_gradients(k);
        let area = mesh.triangle_area(k);
        let c = coeff(k);
        let rd = rows.local_dofs(mesh, k);
        let cd = cols.local_dofs(mesh, k);
        for a in 0..3 {
            let Some(i) = rd[a] else { continue };
            for b in 0..3 {
                let Some(j) = cd[b] else { continue };
                // c is symmetric, so the (a, b) and (b, a) products match bitwise
                let cg = [c[0][0] * g[b][0] + c[0][1] * g[b][1], c[1][0] * g[b][0] + c[1][1] * g[b][1]];
                let v = if a <= b {
                    area * (g[a][0] * cg[0] + g[a][1] * cg[1])
                } else {
                    let ca = [c[0][0] * g[a][0] + c[0][1] * g[a][1], c[1][0] * g[a][0] + c[1][1] * g[a][1]];
                    area * (g[b][0] * ca[0] + g[b][1] * ca[1])
                };
                t.push(i, j, v);
            }
        }
    }
    t.build()
}

pub(crate) fn isotropic(c: f64) -> [[f64; 2]; 2] {
    [[c, 0.0], [0.0, c]]
}

/// Inner-product matrix of the space: `∫ ∇u·∇v`.
pub fn gram_matrix(mesh: &Mesh, space: &FeSpace) -> CsrMatrix {
    assemble_stiffness(mesh, space, space, |_| isotropic(1.0))
}

/// Consistent L² mass matrix (exact for P1).
pub fn mass_matrix(mesh: &Mesh, space: &FeSpace) -> CsrMatrix {
    let mut t = TripletBuilder::new(space.dim(), space.dim());
    for k in 0..mesh.triangle_count() {
        let area = mesh.triangle_area(k);
        let d = space.local_dofs(mesh, k);
        for a in 0..3 {
            let Some(i) = d[a] else { continue };
            for b in 0..3 {
                let Some(j) = d[b] else { continue };
                t.push(i, j, area * if a == b { 2.0 } else { 1.0 } / 12.0);
            }
        }
    }
    t.build()
}

/// Consistent boundary mass `Σ_e coeff(e) ∫_e φ_i φ_j` over edges with the mechanical tag.
pub(crate) fn boundary_mass(mesh: &Mesh, space: &FeSpace, tag: MechTag, coeff: impl Fn(usize) -> f64) -> CsrMatrix {
    let mut t = TripletBuilder::new(space.dim(), space.dim());
    for (ei, e) in mesh.boundary_edges().iter().enumerate() {
        if e.mech != tag {
            continue;
        }
        let l = mesh.edge_length(e) * coeff(ei);
        let d = [space.dof(e.nodes[0]), space.dof(e.nodes[1])];
        for a in 0..2 {
            let Some(i) = d[a] else { continue };
            for b in 0..2 {
                let Some(j) = d[b] else { continue };
                t.push(i, j, l * if a == b { 2.0 } else { 1.0 } / 6.0);
            }
        }
    }
    t.build()
}

/// Contact nodes of a space with their lumped `G3` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactNodes {
    /// Dof index in the space.
    pub dofs: Vec<usize>,
    /// Mesh node index.
    pub nodes: Vec<usize>,
    pub positions: Vec<[f64; 2]>,
    /// Half the summed length of incident `G3` edges.
    pub weights: Vec<f64>,
}

impl ContactNodes {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }
}

pub fn contact_nodes(mesh: &Mesh, space: &FeSpace) -> ContactNodes {
    let mut w = vec![0.0; mesh.node_count()];
    let mut on = vec![false; mesh.node_count()];
    for e in mesh.boundary_edges().iter().filter(|e| e.mech == MechTag::G3) {
        let l = mesh.edge_length(e);
        for &n in &e.nodes {
            w[n] += 0.5 * l;
            on[n] = true;
        }
    }
    let mut c = ContactNodes {
        dofs: Vec::new(),
        nodes: Vec::new(),
        positions: Vec::new(),
        weights: Vec::new(),
    };
    for node in 0..mesh.node_count() {
        if let (true, Some(d)) = (on[node], space.dof(node)) {
            c.dofs.push(d);
            c.nodes.push(node);
            c.positions.push(mesh.nodes()[node]);
            c.weights.push(w[node]);
        }
    }
    c
}

/// `‖∇v‖_{L²(Ω)}`, exact per triangle.
pub fn seminorm(mesh: &Mesh, space: &FeSpace, values: &[f64]) -> f64 {
    let nodal = space.expand(values);
    let mut s = 0.0;
    for k in 0..mesh.triangle_count() {
        let g = mesh.hat_gradients(k);
        let t = mesh.triangles()[k];
        let mut grad = [0.0; 2];
        for a in 0..3 {
            grad[0] += nodal[t[a]] * g[a][0];
            grad[1] += nodal[t[a]] * g[a][1];
        }
        s += mesh.triangle_area(k) * (grad[0] * grad[0] + grad[1] * grad[1]);
    }
    sqrt(s)
}

/// `‖v‖_{L²(G3)}`, exact per edge.
pub fn trace_norm_g3(mesh: &Mesh, space: &FeSpace, values: &[f64]) -> Result<f64> {
    let nodal = space.expand(values);
    let mut any = false;
    let mut s = 0.0;
    for e in mesh.boundary_edges().iter().filter(|e| e.mech == MechTag::G3) {
        any = true;
        let (a, b) = (nodal[e.nodes[0]], nodal[e.nodes[1]]);
        s += mesh.edge_length(e) * (a * a + a * b + b * b) / 3.0;
    }
    if !any {
        return Err(Error::NoContactBoundary);
    }
    Ok(sqrt(s))
}

/// How the `G3` integral is evaluated in the trace inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceQuadrature {
    /// Exact integration of the P1 trace.
    Exact,
    /// Nodal lumping, matching the discrete friction functional.
    Lumped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub quadrature: TraceQuadrature,
    /// Largest dof count solved densely.
    pub dense_limit: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            quadrature: TraceQuadrature::Exact,
            dense_limit: 500,
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstant {
    pub value: f64,
    /// Maximizer of the trace-to-seminorm ratio, on the free dofs.
    pub maximizer: Vec<f64>,
    pub iterations: usize,
}

/// Sharp discrete constant `c` in `‖v‖_{L²(G3)} ≤ c ‖∇v‖`: the square root
/// of the largest eigenvalue of `M_G3 x = λ G x`.
pub fn estimate_trace_constant(mesh: &Mesh, space: &FeSpace, opts: &TraceOptions) -> Result<TraceConstant> {
    if !mesh.boundary_edges().iter().any(|e| e.mech == MechTag::G3) {
        return Err(Error::NoContactBoundary);
    }
    let gram = gram_matrix(mesh, space);
    let boundary = match opts.quadrature {
        TraceQuadrature::Exact => boundary_mass(mesh, space, MechTag::G3, |_| 1.0),
        TraceQuadrature::Lumped => {
            let c = contact_nodes(mesh, space);
            let mut d = vec![0.0; space.dim()];
            for (k, &dof) in c.dofs.iter().enumerate() {
                d[dof] = c.weights[k];
            }
            CsrMatrix::from_diagonal(&d)
        }
    };
    let n = space.dim();
    if n <= opts.dense_limit {
        let chol = DenseCholesky::factor(&gram.to_dense())?;
        let b = boundary.to_dense();
        // C = L⁻¹ B L⁻ᵀ
        let mut half = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let col = chol.solve_lower(&b.column(j));
            for i in 0..n {
                half[(i, j)] = col[i];
            }
        }
        let mut c = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let row = chol.solve_lower(half.row(i));
            for j in 0..n {
                c[(i, j)] = row[j];
            }
        }
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = avg;
                c[(j, i)] = avg;
            }
        }
        let eig = symmetric_eigen(&c)?;
        let lambda = eig.values[n - 1].max(0.0);
        let x = chol.solve_upper(&eig.vectors.column(n - 1));
        return Ok(TraceConstant {
            value: sqrt(lambda),
            maximizer: x,
            iterations: 0,
        });
    }

    let fact = SkylineLdl::factor(&gram, Definiteness::Positive)?;
    let mut x = vec![1.0; n];
    let mut lambda_old = 0.0;
    for it in 1..=opts.max_iter {
        let y = fact.solve(&boundary.mul_vec(&x));
        let gnorm = sqrt(gram.quad_form(&y));
        if !(gnorm > 0.0) {
            return Err(Error::NoContactBoundary);
        }
        x = y.iter().map(|v| v / gnorm).collect();
        let lambda = boundary.quad_form(&x);
        if (lambda - lambda_old).abs() <= opts.tol * lambda {
            return Ok(TraceConstant {
                value: sqrt(lambda),
                maximizer: x,
                iterations: it,
            });
        }
        lambda_old = lambda;
    }
    Err(Error::NoConvergence {
        what: "trace-constant power iteration",
        iterations: opts.max_iter,
        residual: lambda_old,
    })
}

#[cfg(test)]
pub(crate) fn lumped_trace_sq(contact: &ContactNodes, values: &[f64]) -> f64 {
    contact
        .dofs
        .iter()
        .zip(&contact.weights)
        .map(|(&d, w)| w * values[d] * values[d])
        .sum()
}

pub(crate) fn gram_norm(gram: &CsrMatrix, x: &[f64]) -> f64 {
    sqrt(gram.quad_form(x).max(0.0))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, SideTag, TaggingRule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> Mesh {
        generate_rect_mesh(1.0, 1.0, n, n, &TaggingRule::standard()).unwrap()
    }

    #[test]
    fn v_on_four_node_square() {
        let m = square(1);
        let v = build_space(&m, SpaceKind::V).unwrap();
        assert_eq!(v.free_dofs(), &[0, 1]);
    }

    #[test]
    fn e_on_four_node_square_is_empty() {
        let m = square(1);
        assert_eq!(build_space(&m, SpaceKind::E).unwrap_err(), Error::EmptySpace("E"));
    }

    #[test]
    fn e_on_nine_node_square() {
        // bottom mid-edge node and the interior centre node stay free
        let m = square(2);
        let e = build_space(&m, SpaceKind::E).unwrap();
        assert_eq!(e.free_dofs(), &[1, 4]);
    }

    #[test]
    fn w_constrained_on_ga() {
        let m = square(2);
        let w = build_space(&m, SpaceKind::W).unwrap();
        assert_eq!(w.free_dofs(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn seminorm_of_linear_fields() {
        let m = square(4);
        let s = FeSpace::unconstrained(&m, SpaceKind::V);
        assert_eq!(seminorm(&m, &s, &vec![0.0; s.dim()]), 0.0);
        let x = s.interpolate(&m, |p| p[0]);
        assert!((seminorm(&m, &s, &x) - 1.0).abs() < 1e-12);
        let xy = s.interpolate(&m, |p| p[0] + 2.0 * p[1]);
        assert!((seminorm(&m, &s, &xy) - sqrt(5.0)).abs() < 1e-12);
        // seminorm agrees with the Gram quadratic form
        let g = gram_matrix(&m, &s);
        assert!((gram_norm(&g, &xy) - sqrt(5.0)).abs() < 1e-12);
    }

    #[test]
    fn trace_norms() {
        let m = square(3);
        let s = FeSpace::unconstrained(&m, SpaceKind::V);
        let one = vec![1.0; s.dim()];
        assert!((trace_norm_g3(&m, &s, &one).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(trace_norm_g3(&m, &s, &vec![0.0; s.dim()]).unwrap(), 0.0);

        let m1 = square(1);
        let s1 = FeSpace::unconstrained(&m1, SpaceKind::V);
        let ramp = s1.interpolate(&m1, |p| p[0]);
        assert!((trace_norm_g3(&m1, &s1, &ramp).unwrap() - sqrt(1.0 / 3.0)).abs() < 1e-14);

        let mut rule = TaggingRule::standard();
        rule.bottom = SideTag::new(MechTag::G2, Some(ElecTag::Gb));
        let m2 = generate_rect_mesh(1.0, 1.0, 2, 2, &rule).unwrap();
        let s2 = FeSpace::unconstrained(&m2, SpaceKind::V);
        assert_eq!(trace_norm_g3(&m2, &s2, &[1.0; 9]), Err(Error::NoContactBoundary));
    }

    #[test]
    fn parallelogram_law_and_homogeneity() {
        let m = square(4);
        let s = build_space(&m, SpaceKind::V).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c: f64 = rng.gen_range(-3.0..3.0);
            let n = |v: &[f64]| seminorm(&m, &s, v);
            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            assert!((n(&cx) - c.abs() * n(&x)).abs() < 1e-12 * (1.0 + n(&cx)));
            let p: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let q: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let lhs = n(&p).powi(2) + n(&q).powi(2);
            let rhs = 2.0 * (n(&x).powi(2) + n(&y).powi(2));
            assert!((lhs - rhs).abs() < 1e-10 * rhs);
        }
    }

    #[test]
    fn trace_constant_is_an_operator_norm() {
        let m = square(4);
        let s = build_space(&m, SpaceKind::V).unwrap();
        let c = estimate_trace_constant(&m, &s, &TraceOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(trace_norm_g3(&m, &s, &x).unwrap() <= c.value * seminorm(&m, &s, &x) * (1.0 + 1e-12));
        }
        let x = &c.maximizer;
        let ratio = trace_norm_g3(&m, &s, x).unwrap() / seminorm(&m, &s, x);
        assert!((ratio - c.value).abs() < 1e-6);
    }

    #[test]
    fn power_iteration_matches_dense() {
        let m = square(6);
        let s = build_space(&m, SpaceKind::V).unwrap();
        let dense = estimate_trace_constant(&m, &s, &TraceOptions::default()).unwrap();
        let opts = TraceOptions {
            dense_limit: 0,
            ..TraceOptions::default()
        };
        let power = estimate_trace_constant(&m, &s, &opts).unwrap();
        assert!(power.iterations > 0);
        assert!((dense.value - power.value).abs() < 1e-6 * dense.value);
    }

    #[test]
    fn lumped_constant_dominates_exact() {
        let m = square(4);
        let s = build_space(&m, SpaceKind::V).unwrap();
        let exact = estimate_trace_constant(&m, &s, &TraceOptions::default()).unwrap();
        let lumped = estimate_trace_constant(
            &m,
            &s,
            &TraceOptions {
                quadrature: TraceQuadrature::Lumped,
                ..TraceOptions::default()
            },
        )
        .unwrap();
        assert!(lumped.value >= exact.value);
        let c = contact_nodes(&m, &s);
        let x = &lumped.maximizer;
        let ratio = sqrt(lumped_trace_sq(&c, x)) / seminorm(&m, &s, x);
        assert!((ratio - lumped.value).abs() < 1e-9);
    }

    #[test]
    fn contact_weights_sum_to_measure() {
        let m = square(5);
        let s = FeSpace::unconstrained(&m, SpaceKind::V);
        let c = contact_nodes(&m, &s);
        assert_eq!(c.len(), 6);
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
