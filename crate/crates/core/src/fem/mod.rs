//! Lagrange P1/P2 spaces on tagged triangle meshes, nodal fields, and weak
//! form assembly.
//!
//! Degrees of freedom are nodal values: vertices for P1, vertices followed
//! by edge midpoints for P2. Vector fields store components blocked, the
//! whole radial component before the whole axial one, and the assembled
//! systems use the same layout.

mod assemble;
pub mod quadrature;

pub use assemble::{
    integrate_functional, Assembler, Coef, LinearSystem, Offset,
};

use crate::mesh::{BoundaryTag, Mesh};
use std::sync::Arc;

/// Integration mode: plain area measure, or the axisymmetric half-revolution
/// measure `|r| pi dr dz` (the constant `pi` is kept so assembled integrals
/// are genuine half-revolution volumes).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Planar,
    Axisymmetric,
}

impl Mode {
    #[inline]
    pub fn weight(self, point: [f64; 2]) -> f64 {
        match self {
            Mode::Planar => 1.0,
            Mode::Axisymmetric => point[0].abs() * std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    P1,
    P2,
}

/// Scalar Lagrange space of the given degree.
pub struct FunctionSpace {
    pub mesh: Arc<Mesh>,
    pub degree: Degree,
    /// Sorted vertex-pair list of mesh edges (P2 midpoint numbering).
    edges: Vec<[usize; 2]>,
    /// Global dofs of each triangle: `[v0, v1, v2]` for P1, plus the
    /// midpoints opposite each local vertex for P2.
    tri_dofs: Vec<[usize; 6]>,
    dof_coords: Vec<[f64; 2]>,
    /// One triangle containing each dof; used as a location hint.
    dof_home: Vec<usize>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, degree: Degree) -> Self {
        let nv = mesh.n_vertices();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        if degree == Degree::P2 {
            let mut set = std::collections::BTreeSet::new();
            for tri in &mesh.triangles {
                for i in 0..3 {
                    let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                    set.insert([a.min(b), a.max(b)]);
                }
            }
            edges = set.into_iter().collect();
        }
        let edge_index = |a: usize, b: usize| -> usize {
            let key = [a.min(b), a.max(b)];
            edges.binary_search(&key).expect("edge of a mesh triangle")
        };

        let n_dofs = match degree {
            Degree::P1 => nv,
            Degree::P2 => nv + edges.len(),
        };
        let mut tri_dofs = Vec::with_capacity(mesh.n_triangles());
        for tri in &mesh.triangles {
            let mut dofs = [usize::MAX; 6];
            dofs[..3].copy_from_slice(tri);
            if degree == Degree::P2 {
                for i in 0..3 {
                    dofs[3 + i] = nv + edge_index(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                }
            }
            tri_dofs.push(dofs);
        }

        let mut dof_coords = vec![[0.0; 2]; n_dofs];
        dof_coords[..nv].copy_from_slice(&mesh.vertices);
        if degree == Degree::P2 {
            for (e, pair) in edges.iter().enumerate() {
                let (a, b) = (mesh.vertices[pair[0]], mesh.vertices[pair[1]]);
                dof_coords[nv + e] = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            }
        }

        let mut dof_home = vec![usize::MAX; n_dofs];
        for (t, dofs) in tri_dofs.iter().enumerate() {
            for &d in &dofs[..Self::dofs_per_tri(degree)] {
                if dof_home[d] == usize::MAX {
                    dof_home[d] = t;
                }
            }
        }

        FunctionSpace { mesh, degree, edges, tri_dofs, dof_coords, dof_home }
    }

    pub const fn dofs_per_tri(degree: Degree) -> usize {
        match degree {
            Degree::P1 => 3,
            Degree::P2 => 6,
        }
    }

    pub fn local_size(&self) -> usize {
        Self::dofs_per_tri(self.degree)
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tri_dofs(&self, tri: usize) -> &[usize] {
        &self.tri_dofs[tri][..self.local_size()]
    }

    pub fn dof_coord(&self, dof: usize) -> [f64; 2] {
        self.dof_coords[dof]
    }

    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    pub fn dof_home(&self, dof: usize) -> usize {
        self.dof_home[dof]
    }

    /// Shape values at a barycentric point, in local dof order.
    pub fn shape(&self, bary: &[f64; 3]) -> [f64; 6] {
        match self.degree {
            Degree::P1 => [bary[0], bary[1], bary[2], 0.0, 0.0, 0.0],
            Degree::P2 => p2_shape(bary),
        }
    }

    /// Shape gradients at a barycentric point of a given triangle.
    pub fn shape_grad(&self, tri: usize, bary: &[f64; 3]) -> [[f64; 2]; 6] {
        let gl = grad_lambda(&self.mesh, tri);
        match self.degree {
            Degree::P1 => [gl[0], gl[1], gl[2], [0.0; 2], [0.0; 2], [0.0; 2]],
            Degree::P2 => p2_shape_grad(bary, &gl),
        }
    }

    /// Sorted dofs lying on edges with the given boundary tag.
    pub fn boundary_dofs(&self, tag: BoundaryTag) -> Vec<usize> {
        let nv = self.mesh.n_vertices();
        let mut dofs = std::collections::BTreeSet::new();
        for be in &self.mesh.boundary {
            if be.tag != tag {
                continue;
            }
            dofs.insert(be.vertices[0]);
            dofs.insert(be.vertices[1]);
            if self.degree == Degree::P2 {
                let key = [
                    be.vertices[0].min(be.vertices[1]),
                    be.vertices[0].max(be.vertices[1]),
                ];
                let e = self.edges.binary_search(&key).expect("tagged edge exists");
                dofs.insert(nv + e);
            }
        }
        dofs.into_iter().collect()
    }
}

/// Barycentric gradients of a triangle (constant over the triangle).
pub fn grad_lambda(mesh: &Mesh, tri: usize) -> [[f64; 2]; 3] {
    let [a, b, c] = mesh.triangles[tri].map(|v| mesh.vertices[v]);
    let two_a = 2.0 * mesh.area(tri);
    [
        [(b[1] - c[1]) / two_a, (c[0] - b[0]) / two_a],
        [(c[1] - a[1]) / two_a, (a[0] - c[0]) / two_a],
        [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a],
    ]
}

fn p2_shape(l: &[f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

fn p2_shape_grad(l: &[f64; 3], gl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for d in 0..2 {
        g[0][d] = (4.0 * l[0] - 1.0) * gl[0][d];
        g[1][d] = (4.0 * l[1] - 1.0) * gl[1][d];
        g[2][d] = (4.0 * l[2] - 1.0) * gl[2][d];
        g[3][d] = 4.0 * (l[1] * gl[2][d] + l[2] * gl[1][d]);
        g[4][d] = 4.0 * (l[2] * gl[0][d] + l[0] * gl[2][d]);
        g[5][d] = 4.0 * (l[0] * gl[1][d] + l[1] * gl[0][d]);
    }
    g
}

/// Nodal field over a [`FunctionSpace`], scalar or two-component vector.
/// Vector coefficients are blocked: component `c` of dof `i` is
/// `coeffs[c * n_dofs + i]`.
#[derive(Clone)]
pub struct DiscreteField {
    pub space: Arc<FunctionSpace>,
    pub n_components: usize,
    pub coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(space: Arc<FunctionSpace>, n_components: usize) -> Self {
        let n = space.n_dofs() * n_components;
        DiscreteField { space, n_components, coeffs: vec![0.0; n] }
    }

    pub fn constant(space: Arc<FunctionSpace>, values: &[f64]) -> Self {
        let n = space.n_dofs();
        let mut coeffs = Vec::with_capacity(n * values.len());
        for &v in values {
            coeffs.extend(std::iter::repeat(v).take(n));
        }
        DiscreteField { space, n_components: values.len(), coeffs }
    }

    /// Nodal interpolation of a scalar function.
    pub fn interpolate_scalar(space: Arc<FunctionSpace>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let coeffs = space.dof_coords().iter().map(|&p| f(p)).collect();
        DiscreteField { space, n_components: 1, coeffs }
    }

    /// Nodal interpolation of a two-component function.
    pub fn interpolate_vector(
        space: Arc<FunctionSpace>,
        f: impl Fn([f64; 2]) -> [f64; 2],
    ) -> Self {
        let n = space.n_dofs();
        let mut coeffs = vec![0.0; 2 * n];
        for (i, &p) in space.dof_coords().iter().enumerate() {
            let v = f(p);
            coeffs[i] = v[0];
            coeffs[n + i] = v[1];
        }
        DiscreteField { space, n_components: 2, coeffs }
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    #[inline]
    pub fn coeff(&self, component: usize, dof: usize) -> f64 {
        self.coeffs[component * self.space.n_dofs() + dof]
    }

    pub fn component(&self, component: usize) -> &[f64] {
        let n = self.space.n_dofs();
        &self.coeffs[component * n..(component + 1) * n]
    }

    /// Values of all components at a barycentric point of a triangle.
    pub fn eval_bary(&self, tri: usize, bary: &[f64; 3]) -> [f64; 2] {
        let shapes = self.space.shape(bary);
        let dofs = self.space.tri_dofs(tri);
        let mut out = [0.0; 2];
        for c in 0..self.n_components {
            let mut s = 0.0;
            for (k, &d) in dofs.iter().enumerate() {
                s += shapes[k] * self.coeff(c, d);
            }
            out[c] = s;
        }
        out
    }

    /// Gradients `d(component)/d(r,z)` at a barycentric point.
    pub fn grad_bary(&self, tri: usize, bary: &[f64; 3]) -> [[f64; 2]; 2] {
        let grads = self.space.shape_grad(tri, bary);
        let dofs = self.space.tri_dofs(tri);
        let mut out = [[0.0; 2]; 2];
        for c in 0..self.n_components {
            for (k, &d) in dofs.iter().enumerate() {
                let coeff = self.coeff(c, d);
                out[c][0] += grads[k][0] * coeff;
                out[c][1] += grads[k][1] * coeff;
            }
        }
        out
    }

    /// Evaluate at an arbitrary point, or `None` if it lies outside the
    /// mesh; the no-extrapolation twin of [`Self::eval_at`].
    pub fn try_eval_at(&self, p: [f64; 2], hint: Option<usize>) -> Option<[f64; 2]> {
        match self.space.mesh.locate_point(p, hint) {
            crate::mesh::LocateResult::Inside { triangle, bary } => {
                Some(self.eval_bary(triangle, &bary))
            }
            crate::mesh::LocateResult::Outside { .. } => None,
        }
    }

    /// Evaluate at an arbitrary point, locating the triangle first.
    /// Points outside the mesh evaluate at the nearest boundary point.
    pub fn eval_at(&self, p: [f64; 2], hint: Option<usize>) -> [f64; 2] {
        match self.space.mesh.locate_point(p, hint) {
            crate::mesh::LocateResult::Inside { triangle, bary } => self.eval_bary(triangle, &bary),
            crate::mesh::LocateResult::Outside { nearest, boundary_edge } => {
                let tri = self.space.mesh.boundary[boundary_edge].triangle;
                let bary = self.space.mesh.barycentric(tri, nearest);
                self.eval_bary(tri, &bary)
            }
        }
    }

    /// Euclidean norm of the coefficient difference with `other`.
    pub fn coeff_distance(&self, other: &DiscreteField) -> f64 {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::rect_mesh;
    use approx::assert_relative_eq;

    fn space(degree: Degree) -> Arc<FunctionSpace> {
        let mesh = Arc::new(rect_mesh(4, 3, 1.0, 1.0, false));
        Arc::new(FunctionSpace::new(mesh, degree))
    }

    #[test]
    fn p2_dof_count_is_vertices_plus_edges() {
        let s = space(Degree::P2);
        // 5x4 vertices = 20; edges of a 4x3 split grid: 4*4 + 5*3 + 12 = 43.
        assert_eq!(s.n_dofs(), 20 + 43);
        assert_eq!(s.n_edges(), 43);
    }

    #[test]
    fn shapes_are_nodal() {
        let s = space(Degree::P2);
        // Local nodes in barycentric coordinates.
        let nodes: [[f64; 3]; 6] = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
            [0.5, 0.5, 0.0],
        ];
        for (i, b) in nodes.iter().enumerate() {
            let vals = s.shape(b);
            for (j, &v) in vals.iter().enumerate() {
                assert_relative_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn p2_reproduces_quadratics_exactly() {
        let s = space(Degree::P2);
        let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1] - p[0] * p[0];
        let field = DiscreteField::interpolate_scalar(s.clone(), f);
        for tri in 0..s.mesh.n_triangles() {
            for bary in [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3]] {
                let p = s.mesh.point_of_bary(tri, &bary);
                assert_relative_eq!(field.eval_bary(tri, &bary)[0], f(p), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn p2_gradient_of_quadratic_is_exact() {
        let s = space(Degree::P2);
        let field = DiscreteField::interpolate_scalar(s.clone(), |p| p[0] * p[0] + 0.5 * p[1]);
        let g = field.grad_bary(3, &[0.4, 0.3, 0.3]);
        let p = s.mesh.point_of_bary(3, &[0.4, 0.3, 0.3]);
        assert_relative_eq!(g[0][0], 2.0 * p[0], epsilon = 1e-12);
        assert_relative_eq!(g[0][1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn vector_field_blocks_components() {
        let s = space(Degree::P2);
        let f = DiscreteField::interpolate_vector(s.clone(), |p| [p[0], -p[1]]);
        let n = s.n_dofs();
        assert_eq!(f.coeffs.len(), 2 * n);
        let dof = n / 2;
        let p = s.dof_coord(dof);
        assert_relative_eq!(f.coeff(0, dof), p[0]);
        assert_relative_eq!(f.coeff(1, dof), -p[1]);
    }

    #[test]
    fn boundary_dofs_lie_on_their_face() {
        let s = space(Degree::P2);
        for dof in s.boundary_dofs(BoundaryTag::Inlet) {
            assert_relative_eq!(s.dof_coord(dof)[1], 0.0);
        }
        for dof in s.boundary_dofs(BoundaryTag::Outlet) {
            assert_relative_eq!(s.dof_coord(dof)[1], 1.0);
        }
    }

    #[test]
    fn eval_at_outside_point_clamps_to_boundary() {
        let s = space(Degree::P1);
        let field = DiscreteField::interpolate_scalar(s.clone(), |p| p[0]);
        let v = field.eval_at([2.0, 0.5], None);
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn try_eval_at_signals_outside_instead_of_extrapolating() {
        let s = space(Degree::P1);
        let field = DiscreteField::interpolate_scalar(s.clone(), |p| p[0]);
        assert!(field.try_eval_at([2.0, 0.5], None).is_none());
        let v = field.try_eval_at([0.25, 0.5], None).unwrap();
        assert_relative_eq!(v[0], 0.25, epsilon = 1e-12);
    }
}
