//! Triplet-based assembly of the weak forms used by the scheme.
//!
//! Every volume kernel integrates with the measure selected by [`Mode`], so
//! axisymmetric runs assemble `|r| pi dr dz` volumes without the callers
//! carrying the weight around. Boundary kernels integrate over tagged edges
//! with the matching surface measure.

use super::{quadrature, DiscreteField, FunctionSpace, Mode};
use crate::mesh::{BoundaryTag, Mesh};
use std::collections::BTreeMap;

/// Sparse system under construction: duplicate triplets sum on conversion.
pub struct LinearSystem {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(n: usize) -> Self {
        LinearSystem { n, triplets: Vec::new(), rhs: vec![0.0; n] }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.triplets.push((row, col, value));
    }

    #[inline]
    pub fn add_rhs(&mut self, row: usize, value: f64) {
        self.rhs[row] += value;
    }

    /// Eliminate Dirichlet dofs symmetrically: constrained rows and columns
    /// are dropped (columns folded into the rhs), then each constrained dof
    /// gets an identity row. Call after all contributions are in.
    pub fn apply_dirichlet(&mut self, values: &BTreeMap<usize, f64>) {
        if values.is_empty() {
            return;
        }
        let mut kept = Vec::with_capacity(self.triplets.len());
        for &(i, j, v) in &self.triplets {
            if values.contains_key(&i) {
                continue;
            }
            if let Some(&g) = values.get(&j) {
                self.rhs[i] -= v * g;
                continue;
            }
            kept.push((i, j, v));
        }
        self.triplets = kept;
        for (&dof, &g) in values {
            self.triplets.push((dof, dof, 1.0));
            self.rhs[dof] = g;
        }
    }

    /// `x^T A y` straight off the triplets.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.triplets.iter().map(|&(i, j, v)| x[i] * v * y[j]).sum()
    }

    /// `A x` accumulated into `out`.
    pub fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for &(i, j, v) in &self.triplets {
            out[i] += v * x[j];
        }
    }
}

/// Pointwise coefficient of a bilinear form.
pub enum Coef<'a> {
    Const(f64),
    /// One value per triangle.
    PerTri(&'a [f64]),
    /// Evaluated at quadrature points as `(triangle, bary, point)`.
    Fn(&'a dyn Fn(usize, &[f64; 3], [f64; 2]) -> f64),
}

impl Coef<'_> {
    #[inline]
    fn eval(&self, tri: usize, bary: &[f64; 3], point: [f64; 2]) -> f64 {
        match self {
            Coef::Const(c) => *c,
            Coef::PerTri(v) => v[tri],
            Coef::Fn(f) => f(tri, bary, point),
        }
    }
}

/// Row/column base indices of the block a kernel writes into.
#[derive(Clone, Copy, Debug, Default)]
pub struct Offset {
    pub row: usize,
    pub col: usize,
}

impl Offset {
    pub fn diag(base: usize) -> Self {
        Offset { row: base, col: base }
    }
}

/// Assembly context: target system, measure, and volume quadrature degree.
pub struct Assembler<'a> {
    pub sys: &'a mut LinearSystem,
    pub mode: Mode,
    pub qdeg: usize,
}

impl Assembler<'_> {
    /// `(c phi_j, phi_i)`
    pub fn scalar_mass(&mut self, space: &FunctionSpace, coef: &Coef, off: Offset) {
        let rule = quadrature::tri_rule(self.qdeg);
        let nl = space.local_size();
        for tri in 0..space.mesh.n_triangles() {
            let area = space.mesh.area(tri);
            let mut local = [[0.0; 6]; 6];
            for (q, bary) in rule.points.iter().enumerate() {
                let p = space.mesh.point_of_bary(tri, bary);
                let w = rule.weights[q] * area * self.mode.weight(p) * coef.eval(tri, bary, p);
                let sh = space.shape(bary);
                for a in 0..nl {
                    for b in 0..nl {
                        local[a][b] += w * sh[a] * sh[b];
                    }
                }
            }
            self.scatter(space, tri, &local, off);
        }
    }

    /// `(c grad phi_j, grad phi_i)`
    pub fn scalar_stiffness(&mut self, space: &FunctionSpace, coef: &Coef, off: Offset) {
        let rule = quadrature::tri_rule(self.qdeg);
        let nl = space.local_size();
        for tri in 0..space.mesh.n_triangles() {
            let area = space.mesh.area(tri);
            let mut local = [[0.0; 6]; 6];
            for (q, bary) in rule.points.iter().enumerate() {
                let p = space.mesh.point_of_bary(tri, bary);
                let w = rule.weights[q] * area * self.mode.weight(p) * coef.eval(tri, bary, p);
                let g = space.shape_grad(tri, bary);
                for a in 0..nl {
                    for b in 0..nl {
                        local[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    }
                }
            }
            self.scatter(space, tri, &local, off);
        }
    }

    /// `(c u, v)` on both components of a vector space.
    pub fn vector_mass(&mut self, space: &FunctionSpace, coef: &Coef, off: Offset) {
        let rule = quadrature::tri_rule(self.qdeg);
        let nl = space.local_size();
        let n = space.n_dofs();
        for tri in 0..space.mesh.n_triangles() {
            let area = space.mesh.area(tri);
            let mut local = [[0.0; 6]; 6];
            for (q, bary) in rule.points.iter().enumerate() {
                let p = space.mesh.point_of_bary(tri, bary);
                let w = rule.weights[q] * area * self.mode.weight(p) * coef.eval(tri, bary, p);
                let sh = space.shape(bary);
                for a in 0..nl {
                    for b in 0..nl {
                        local[a][b] += w * sh[a] * sh[b];
                    }
                }
            }
            for comp in 0..2 {
                let shift = comp * n;
                let shifted = Offset { row: off.row + shift, col: off.col + shift };
                self.scatter(space, tri, &local, shifted);
            }
        }
    }

    /// `2 (c eps(u), eps(v))` with the out-of-plane strain `u_r / r` in
    /// axisymmetric mode.
    pub fn viscous_sym_grad(&mut self, space: &FunctionSpace, coef: &Coef, off: Offset) {
        let rule = quadrature::tri_rule(self.qdeg);
        let nl = space.local_size();
        let n = space.n_dofs();
        let axisym = self.mode == Mode::Axisymmetric;
        for tri in 0..space.mesh.n_triangles() {
            let area = space.mesh.area(tri);
            // Component blocks: [rr, rz, zr, zz].
            let mut local = [[[0.0; 6]; 6]; 4];
            for (q, bary) in rule.points.iter().enumerate() {
                let p = space.mesh.point_of_bary(tri, bary);
                let w = 2.0
                    * rule.weights[q]
                    * area
                    * self.mode.weight(p)
                    * coef.eval(tri, bary, p);
                let sh = space.shape(bary);
                let g = space.shape_grad(tri, bary);
                // Interior quadrature points keep r > 0 even on triangles
                // touching the axis, so the hoop strain stays finite.
                let inv_r = if axisym { 1.0 / p[0] } else { 0.0 };
                for a in 0..nl {
                    for b in 0..nl {
                        let mut rr = g[a][0] * g[b][0] + 0.5 * g[a][1] * g[b][1];
                        if axisym {
                            rr += sh[a] * sh[b] * inv_r * inv_r;
                        }
                        local[0][a][b] += w * rr;
                        local[1][a][b] += w * 0.5 * g[a][1] * g[b][0];
                        local[2][a][b] += w * 0.5 * g[a][0] * g[b][1];
                        local[3][a][b] += w * (g[a][1] * g[b][1] + 0.5 * g[a][0] * g[b][0]);
                    }
                }
            }
            for (block, (ra, ca)) in [(0, (0, 0)), (1, (0, 1)), (2, (1, 0)), (3, (1, 1))] {
                let shifted = Offset { row: off.row + ra * n, col: off.col + ca * n };
                self.scatter(space, tri, &local[block], shifted);
            }
        }
    }

    /// Symmetric pressure/velocity coupling: adds `factor (div u, q)` at the
    /// pressure rows and its transpose at the velocity rows. The divergence
    /// picks up `u_r / r` in axisymmetric mode.
    pub fn div_coupling(
        &mut self,
        vspace: &FunctionSpace,
        pspace: &FunctionSpace,
        v_base: usize,
        p_base: usize,
        factor: f64,
    ) {
        let rule = quadrature::tri_rule(self.qdeg);
        let nvl = vspace.local_size();
        let npl = pspace.local_size();
        let nv = vspace.n_dofs();
        let axisym = self.mode == Mode::Axisymmetric;
        for tri in 0..vspace.mesh.n_triangles() {
            let area = vspace.mesh.area(tri);
            let mut div_r = [[0.0; 6]; 6];
            let mut div_z = [[0.0; 6]; 6];
            for (q, bary) in rule.points.iter().enumerate() {
                let p = vspace.mesh.point_of_bary(tri, bary);
                let w = factor * rule.weights[q] * area * self.mode.weight(p);
                let qs = pspace.shape(bary);
                let sh = vspace.shape(bary);
                let g = vspace.shape_grad(tri, bary);
                let inv_r = if axisym { 1.0 / p[0] } else { 0.0 };
                for b in 0..npl {
                    for a in 0..nvl {
                        let mut dr = g[a][0];
                        if axisym {
                            dr += sh[a] * inv_r;
                        }
                        div_r[b][a] += w * qs[b] * dr;
                        div_z[b][a] += w * qs[b] * g[a][1];
                    }
                }
            }
            let vdofs = vspace.tri_dofs(tri);
            let pdofs = pspace.tri_dofs(tri);
            for b in 0..npl {
                for a in 0..nvl {
                    for (comp, block) in [(0, &div_r), (1, &div_z)] {
                        let vg = v_base + comp * nv + vdofs[a];
                        let pg = p_base + pdofs[b];
                        self.sys.add(pg, vg, block[b][a]);
                        self.sys.add(vg, pg, block[b][a]);
                    }
                }
            }
        }
    }

    /// `(c u, v)` over boundary edges carrying `tag`; the coefficient sees
    /// the edge index, physical point, and outward normal.
    pub fn boundary_vector_mass(
        &mut self,
        space: &FunctionSpace,
        tag: BoundaryTag,
        coef: &dyn Fn(usize, [f64; 2], [f64; 2]) -> f64,
        off: Offset,
    ) {
        let rule = quadrature::edge_rule();
        let nl = space.local_size();
        let n = space.n_dofs();
        let mesh = &space.mesh;
        for (be_idx, be) in mesh.boundary.iter().enumerate() {
            if be.tag != tag {
                continue;
            }
            let pa = mesh.vertices[be.vertices[0]];
            let pb = mesh.vertices[be.vertices[1]];
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let tri = be.triangle;
            let mut local = [[0.0; 6]; 6];
            for (q, &s) in rule.points.iter().enumerate() {
                let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let bary = mesh.barycentric(tri, p);
                let w = rule.weights[q] * len * self.mode.weight(p) * coef(be_idx, p, be.normal);
                let sh = space.shape(&bary);
                for a in 0..nl {
                    for b in 0..nl {
                        local[a][b] += w * sh[a] * sh[b];
                    }
                }
            }
            let dofs = space.tri_dofs(tri);
            for comp in 0..2 {
                let shift = comp * n;
                for a in 0..nl {
                    for b in 0..nl {
                        if local[a][b] != 0.0 {
                            self.sys.add(
                                off.row + shift + dofs[a],
                                off.col + shift + dofs[b],
                                local[a][b],
                            );
                        }
                    }
                }
            }
        }
    }

    /// `(f, phi_i)` into the rhs of a scalar block.
    pub fn rhs_scalar(
        &mut self,
        space: &FunctionSpace,
        f: &dyn Fn(usize, &[f64; 3], [f64; 2]) -> f64,
        row_base: usize,
    ) {
        self.rhs_scalar_with(space, quadrature::tri_rule(self.qdeg), f, row_base);
    }

    /// `(f, phi_i)` under a caller-chosen rule; [`quadrature::midedge_rule`]
    /// keeps the load nonnegative for nonnegative `f`.
    pub fn rhs_scalar_with(
        &mut self,
        space: &FunctionSpace,
        rule: &quadrature::TriRule,
        f: &dyn Fn(usize, &[f64; 3], [f64; 2]) -> f64,
        row_base: usize,
    ) {
        let nl = space.local_size();
        for tri in 0..space.mesh.n_triangles() {
            let area = space.mesh.area(tri);
            let dofs = space.tri_dofs(tri);
            for (q, bary) in rule.points.iter().enumerate() {
                let p = space.mesh.point_of_bary(tri, bary);
                let w = rule.weights[q] * area * self.mode.weight(p) * f(tri, bary, p);
                let sh = space.shape(bary);
                for a in 0..nl {
                    self.sys.add_rhs(row_base + dofs[a], w * sh[a]);
                }
            }
        }
    }

    /// `(f, v)` into the rhs of a vector block.
    pub fn rhs_vector(
        &mut self,
        space: &FunctionSpace,
        f: &dyn Fn(usize, &[f64; 3], [f64; 2]) -> [f64; 2],
        row_base: usize,
    ) {
        let rule = quadrature::tri_rule(self.qdeg);
        let nl = space.local_size();
        let n = space.n_dofs();
        for tri in 0..space.mesh.n_triangles() {
            let area = space.mesh.area(tri);
            let dofs = space.tri_dofs(tri);
            for (q, bary) in rule.points.iter().enumerate() {
                let p = space.mesh.point_of_bary(tri, bary);
                let w = rule.weights[q] * area * self.mode.weight(p);
                let fv = f(tri, bary, p);
                let sh = space.shape(bary);
                for a in 0..nl {
                    self.sys.add_rhs(row_base + dofs[a], w * sh[a] * fv[0]);
                    self.sys.add_rhs(row_base + n + dofs[a], w * sh[a] * fv[1]);
                }
            }
        }
    }

    /// `(f, v)` over boundary edges carrying `tag`.
    pub fn rhs_boundary_vector(
        &mut self,
        space: &FunctionSpace,
        tag: BoundaryTag,
        f: &dyn Fn(usize, [f64; 2], [f64; 2]) -> [f64; 2],
        row_base: usize,
    ) {
        let rule = quadrature::edge_rule();
        let nl = space.local_size();
        let n = space.n_dofs();
        let mesh = &space.mesh;
        for (be_idx, be) in mesh.boundary.iter().enumerate() {
            if be.tag != tag {
                continue;
            }
            let pa = mesh.vertices[be.vertices[0]];
            let pb = mesh.vertices[be.vertices[1]];
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let tri = be.triangle;
            let dofs = space.tri_dofs(tri);
            for (q, &s) in rule.points.iter().enumerate() {
                let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let bary = mesh.barycentric(tri, p);
                let w = rule.weights[q] * len * self.mode.weight(p);
                let fv = f(be_idx, p, be.normal);
                let sh = space.shape(&bary);
                for a in 0..nl {
                    self.sys.add_rhs(row_base + dofs[a], w * sh[a] * fv[0]);
                    self.sys.add_rhs(row_base + n + dofs[a], w * sh[a] * fv[1]);
                }
            }
        }
    }

    fn scatter(&mut self, space: &FunctionSpace, tri: usize, local: &[[f64; 6]; 6], off: Offset) {
        let nl = space.local_size();
        let dofs = space.tri_dofs(tri);
        for a in 0..nl {
            for b in 0..nl {
                let v = local[a][b];
                if v != 0.0 {
                    self.sys.add(off.row + dofs[a], off.col + dofs[b], v);
                }
            }
        }
    }
}

/// Integrate `f(tri, point, values)` over the mesh, where `values` holds the
/// components of every field in order at the quadrature point.
pub fn integrate_functional(
    mesh: &Mesh,
    mode: Mode,
    qdeg: usize,
    fields: &[&DiscreteField],
    f: &dyn Fn(usize, [f64; 2], &[f64]) -> f64,
) -> f64 {
    let rule = quadrature::tri_rule(qdeg);
    let n_vals: usize = fields.iter().map(|g| g.n_components).sum();
    let mut vals = vec![0.0; n_vals];
    let mut total = 0.0;
    for tri in 0..mesh.n_triangles() {
        let area = mesh.area(tri);
        for (q, bary) in rule.points.iter().enumerate() {
            let p = mesh.point_of_bary(tri, bary);
            let mut at = 0;
            for g in fields {
                let v = g.eval_bary(tri, bary);
                vals[at..at + g.n_components].copy_from_slice(&v[..g.n_components]);
                at += g.n_components;
            }
            total += rule.weights[q] * area * mode.weight(p) * f(tri, p, &vals);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{Degree, Mode};
    use crate::mesh::{rect_mesh, Mesh, RegionTag};
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn unit_triangle() -> Arc<Mesh> {
        let mesh = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![RegionTag::Fluid],
            vec![
                (0, 1, BoundaryTag::Inlet),
                (1, 2, BoundaryTag::Outlet),
                (2, 0, BoundaryTag::Lateral),
            ],
        )
        .unwrap();
        Arc::new(mesh)
    }

    fn dense(sys: &LinearSystem) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; sys.n]; sys.n];
        for &(i, j, v) in &sys.triplets {
            m[i][j] += v;
        }
        m
    }

    #[test]
    fn p1_mass_matches_closed_form() {
        let space = FunctionSpace::new(unit_triangle(), Degree::P1);
        let mut sys = LinearSystem::new(3);
        Assembler { sys: &mut sys, mode: Mode::Planar, qdeg: 2 }.scalar_mass(
            &space,
            &Coef::Const(1.0),
            Offset::default(),
        );
        let m = dense(&sys);
        let area = 0.5;
        for i in 0..3 {
            for j in 0..3 {
                let exact = if i == j { area / 6.0 } else { area / 12.0 };
                assert_relative_eq!(m[i][j], exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn p1_stiffness_matches_closed_form() {
        let space = FunctionSpace::new(unit_triangle(), Degree::P1);
        let mut sys = LinearSystem::new(3);
        Assembler { sys: &mut sys, mode: Mode::Planar, qdeg: 1 }.scalar_stiffness(
            &space,
            &Coef::Const(1.0),
            Offset::default(),
        );
        let m = dense(&sys);
        let exact = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[i][j], exact[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn axisymmetric_measure_gives_half_revolution_volume() {
        // Cylinder r in [0,1], z in [0,2]: half revolution is pi R^2 H / 2.
        let mesh = Arc::new(rect_mesh(6, 6, 1.0, 2.0, true));
        let vol = integrate_functional(&mesh, Mode::Axisymmetric, 2, &[], &|_, _, _| 1.0);
        assert_relative_eq!(vol, std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn functional_sees_field_values() {
        let mesh = Arc::new(rect_mesh(5, 5, 1.0, 1.0, true));
        let space = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P2));
        let u = DiscreteField::interpolate_vector(space, |p| [0.0, p[0]]);
        // integral of u_z^2 over the half revolution: pi / 4.
        let e = integrate_functional(&mesh, Mode::Axisymmetric, 5, &[&u], &|_, _, v| {
            v[0] * v[0] + v[1] * v[1]
        });
        assert_relative_eq!(e, std::f64::consts::PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn viscous_energy_of_linear_shear() {
        // Planar u = (0, x): eps has only the off-diagonal 1/2 entries, so
        // 2 nu int eps:eps = nu * area.
        let mesh = Arc::new(rect_mesh(4, 4, 1.0, 1.0, false));
        let space = Arc::new(FunctionSpace::new(mesh, Degree::P2));
        let n = space.n_dofs();
        let mut sys = LinearSystem::new(2 * n);
        Assembler { sys: &mut sys, mode: Mode::Planar, qdeg: 4 }.viscous_sym_grad(
            &space,
            &Coef::Const(0.7),
            Offset::default(),
        );
        let u = DiscreteField::interpolate_vector(space, |p| [0.0, p[0]]);
        assert_relative_eq!(sys.bilinear(&u.coeffs, &u.coeffs), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn hoop_strain_doubles_radial_stretch_energy() {
        // Axisymmetric u = (r, 0): eps_rr = 1 and eps_tt = 1, so the energy
        // is 2 nu (1 + 1) * volume = 4 nu * pi/2 on the unit cylinder.
        let mesh = Arc::new(rect_mesh(8, 8, 1.0, 1.0, true));
        let space = Arc::new(FunctionSpace::new(mesh, Degree::P2));
        let n = space.n_dofs();
        let mut sys = LinearSystem::new(2 * n);
        Assembler { sys: &mut sys, mode: Mode::Axisymmetric, qdeg: 5 }.viscous_sym_grad(
            &space,
            &Coef::Const(1.0),
            Offset::default(),
        );
        let u = DiscreteField::interpolate_vector(space, |p| [p[0], 0.0]);
        assert_relative_eq!(
            sys.bilinear(&u.coeffs, &u.coeffs),
            2.0 * std::f64::consts::PI,
            epsilon = 1e-11
        );
    }

    #[test]
    fn divergence_includes_radial_term() {
        // u = (r, 0) has div u = 2 in axisymmetric coordinates; against
        // q = 1 the coupling integrates to 2 * (pi/2) = pi.
        let mesh = Arc::new(rect_mesh(6, 6, 1.0, 1.0, true));
        let vspace = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P2));
        let pspace = Arc::new(FunctionSpace::new(mesh, Degree::P1));
        let nv = vspace.n_dofs();
        let np = pspace.n_dofs();
        let mut sys = LinearSystem::new(2 * nv + np);
        Assembler { sys: &mut sys, mode: Mode::Axisymmetric, qdeg: 4 }.div_coupling(
            &vspace,
            &pspace,
            0,
            2 * nv,
            1.0,
        );
        let u = DiscreteField::interpolate_vector(vspace, |p| [p[0], 0.0]);
        let mut x = u.coeffs.clone();
        x.extend(std::iter::repeat(0.0).take(np));
        let mut y = vec![0.0; 2 * nv];
        y.extend(std::iter::repeat(1.0).take(np));
        assert_relative_eq!(sys.bilinear(&y, &x), std::f64::consts::PI, epsilon = 1e-12);
        // Transpose block carries the same integral.
        assert_relative_eq!(sys.bilinear(&x, &y), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn boundary_mass_matches_segment_p2_matrix() {
        // Single outlet edge of length 1; exact 1D P2 mass in the order
        // (end, end, mid) is L/30 * [[4,-1,2],[-1,4,2],[2,2,16]].
        let mesh = Arc::new(rect_mesh(1, 1, 1.0, 1.0, false));
        let space = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P2));
        let n = space.n_dofs();
        let mut sys = LinearSystem::new(2 * n);
        Assembler { sys: &mut sys, mode: Mode::Planar, qdeg: 2 }.boundary_vector_mass(
            &space,
            BoundaryTag::Outlet,
            &|_, _, _| 1.0,
            Offset::default(),
        );
        let dofs = space.boundary_dofs(BoundaryTag::Outlet);
        assert_eq!(dofs.len(), 3);
        // boundary_dofs sorts ascending: two vertices then the midpoint.
        let (a, b, mid) = (dofs[0], dofs[1], dofs[2]);
        let m = dense(&sys);
        assert_relative_eq!(m[a][a], 4.0 / 30.0, epsilon = 1e-14);
        assert_relative_eq!(m[a][b], -1.0 / 30.0, epsilon = 1e-14);
        assert_relative_eq!(m[a][mid], 2.0 / 30.0, epsilon = 1e-14);
        assert_relative_eq!(m[mid][mid], 16.0 / 30.0, epsilon = 1e-14);
        // Component blocks are identical and uncoupled.
        assert_relative_eq!(m[n + a][n + a], 4.0 / 30.0, epsilon = 1e-14);
        assert_relative_eq!(m[a][n + a], 0.0);
    }

    #[test]
    fn dirichlet_elimination_is_symmetric_and_consistent() {
        let space = FunctionSpace::new(unit_triangle(), Degree::P1);
        let mut sys = LinearSystem::new(3);
        Assembler { sys: &mut sys, mode: Mode::Planar, qdeg: 1 }.scalar_stiffness(
            &space,
            &Coef::Const(1.0),
            Offset::default(),
        );
        let mut bc = BTreeMap::new();
        bc.insert(0usize, 2.0);
        sys.apply_dirichlet(&bc);
        let m = dense(&sys);
        assert_relative_eq!(m[0][0], 1.0);
        assert_relative_eq!(m[0][1], 0.0);
        assert_relative_eq!(m[1][0], 0.0);
        assert_relative_eq!(sys.rhs[0], 2.0);
        // Row 1 rhs picked up -K[1][0] * 2.
        assert_relative_eq!(sys.rhs[1], 1.0);
    }

    #[test]
    fn rhs_source_integrates_shape_weights() {
        let space = FunctionSpace::new(unit_triangle(), Degree::P1);
        let mut sys = LinearSystem::new(3);
        Assembler { sys: &mut sys, mode: Mode::Planar, qdeg: 2 }.rhs_scalar(
            &space,
            &|_, _, _| 3.0,
            0,
        );
        // int 3 phi_i = 3 * area / 3 = 0.5 each.
        for i in 0..3 {
            assert_relative_eq!(sys.rhs[i], 0.5, epsilon = 1e-14);
        }
    }
}
