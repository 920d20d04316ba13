//! Characteristic-Galerkin convection.
//!
//! The material derivative is discretized by tracing each dof point backward
//! along the current velocity, `X = x - u(x) dt` (optionally split into
//! explicit Euler substeps re-evaluating `u` along the path), and composing
//! the convected field with the traced map. Traces leaving the domain are
//! clamped where the segment crosses the boundary.

use crate::fem::DiscreteField;
use crate::mesh::{LocateResult, Mesh};
use rayon::prelude::*;

/// Backward-traced point: position, containing triangle, and whether the
/// path had to be clamped to the boundary.
#[derive(Clone, Copy, Debug)]
pub struct TraceResult {
    pub position: [f64; 2],
    pub triangle: usize,
    pub bary: [f64; 3],
    pub clamped: bool,
}

/// Counts from one composition pass.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClampStats {
    /// Dofs whose backward trace left the domain and was clamped.
    pub clamped: usize,
}

/// Trace `x` backward along `u` over one time step.
///
/// Each substep moves by `-u(p) * dt/substeps` with `u` re-evaluated at the
/// current point; `substeps = 1` is the plain first-order rule. `hint` seeds
/// the point location walk.
pub fn trace_back(
    x: [f64; 2],
    u: &DiscreteField,
    dt: f64,
    substeps: usize,
    hint: Option<usize>,
) -> TraceResult {
    assert!(dt > 0.0 && substeps >= 1);
    let mesh = &u.space.mesh;
    let h = dt / substeps as f64;

    let (mut pos, mut tri, mut bary, mut clamped) = match mesh.locate_point(x, hint) {
        LocateResult::Inside { triangle, bary } => (x, triangle, bary, false),
        LocateResult::Outside { nearest, boundary_edge } => {
            // Callers pass dof or quadrature points, so this is defensive.
            let tri = mesh.boundary[boundary_edge].triangle;
            let bary = mesh.barycentric(tri, nearest);
            (nearest, tri, bary, true)
        }
    };

    for _ in 0..substeps {
        let vel = u.eval_bary(tri, &bary);
        let target = [pos[0] - vel[0] * h, pos[1] - vel[1] * h];
        match mesh.locate_point(target, Some(tri)) {
            LocateResult::Inside { triangle, bary: b } => {
                pos = target;
                tri = triangle;
                bary = b;
            }
            LocateResult::Outside { .. } => {
                let (p, t, b) = exit_point(mesh, pos, target, tri);
                pos = p;
                tri = t;
                bary = b;
                clamped = true;
            }
        }
    }
    TraceResult { position: pos, triangle: tri, bary, clamped }
}

/// Last point of the segment `[inside, outside]` still in the domain, found
/// by bisection on the location predicate.
fn exit_point(
    mesh: &Mesh,
    inside: [f64; 2],
    outside: [f64; 2],
    hint: usize,
) -> ([f64; 2], usize, [f64; 3]) {
    let mut s_in = 0.0f64;
    let mut s_out = 1.0f64;
    let mut tri = hint;
    let mut bary = mesh.barycentric(hint, inside);
    let mut pos = inside;
    for _ in 0..60 {
        let s = 0.5 * (s_in + s_out);
        let p = [
            inside[0] + s * (outside[0] - inside[0]),
            inside[1] + s * (outside[1] - inside[1]),
        ];
        match mesh.locate_point(p, Some(tri)) {
            LocateResult::Inside { triangle, bary: b } => {
                s_in = s;
                pos = p;
                tri = triangle;
                bary = b;
            }
            LocateResult::Outside { .. } => s_out = s,
        }
        if s_out - s_in < 1e-14 {
            break;
        }
    }
    (pos, tri, bary)
}

/// Compose `b` with the backward-traced map of `u`: the result holds
/// `b(X(x_i))` at every dof point `x_i` of `b`'s space.
///
/// Requires both fields on the same mesh. A dof whose traced position is
/// bitwise equal to the dof point copies the coefficient unchanged, so a
/// zero velocity reproduces `b` exactly.
pub fn compose_field(
    b: &DiscreteField,
    u: &DiscreteField,
    dt: f64,
    substeps: usize,
) -> (DiscreteField, ClampStats) {
    assert!(
        std::sync::Arc::ptr_eq(&b.space.mesh, &u.space.mesh),
        "convected field and velocity live on different meshes"
    );
    let space = &b.space;
    let n = space.n_dofs();
    let coords = space.dof_coords();

    // Chunked so each worker reuses its previous trace's triangle as the
    // location hint; chunk boundaries fall back to the dof's home triangle.
    const CHUNK: usize = 256;
    let traces: Vec<TraceResult> = crate::thread_pool().install(|| {
        (0..n)
            .into_par_iter()
            .chunks(CHUNK)
            .flat_map_iter(|idxs| {
                let mut hint = space.dof_home(idxs[0]);
                let mut out = Vec::with_capacity(idxs.len());
                for i in idxs {
                    let t = trace_back(coords[i], u, dt, substeps, Some(hint));
                    hint = t.triangle;
                    out.push(t);
                }
                out
            })
            .collect()
    });

    let mut composed = DiscreteField::zeros(space.clone(), b.n_components);
    let mut clamped = 0usize;
    for (i, t) in traces.iter().enumerate() {
        clamped += t.clamped as usize;
        let same_point = t.position[0].to_bits() == coords[i][0].to_bits()
            && t.position[1].to_bits() == coords[i][1].to_bits();
        if same_point {
            for c in 0..b.n_components {
                composed.coeffs[c * n + i] = b.coeff(c, i);
            }
        } else {
            let vals = b.eval_bary(t.triangle, &t.bary);
            for c in 0..b.n_components {
                composed.coeffs[c * n + i] = vals[c];
            }
        }
    }
    (composed, ClampStats { clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{Degree, FunctionSpace};
    use crate::mesh::rect_mesh;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn p2_space(nx: usize, nz: usize, w: f64, h: f64) -> Arc<FunctionSpace> {
        Arc::new(FunctionSpace::new(Arc::new(rect_mesh(nx, nz, w, h, false)), Degree::P2))
    }

    #[test]
    fn uniform_field_translates_exactly() {
        let space = p2_space(8, 8, 4.0, 4.0);
        let u = DiscreteField::constant(space.clone(), &[1.0, 0.0]);
        let t = trace_back([2.0, 3.0], &u, 0.5, 1, None);
        assert_relative_eq!(t.position[0], 1.5, epsilon = 1e-14);
        assert_relative_eq!(t.position[1], 3.0, epsilon = 1e-14);
        assert!(!t.clamped);
    }

    #[test]
    fn zero_velocity_composes_to_identity_bitwise() {
        let space = p2_space(6, 5, 1.0, 1.0);
        let u = DiscreteField::constant(space.clone(), &[0.0, 0.0]);
        let b = DiscreteField::interpolate_vector(space, |p| {
            [(3.1 * p[0] + 0.2).sin(), (7.7 * p[1]).cos() / 3.0]
        });
        let (composed, stats) = compose_field(&b, &u, 0.667, 4);
        assert_eq!(stats.clamped, 0);
        for (a, c) in b.coeffs.iter().zip(&composed.coeffs) {
            assert_eq!(a.to_bits(), c.to_bits());
        }
    }

    #[test]
    fn substepped_rotation_preserves_radius() {
        // u is linear, so its P2 interpolant is exact and the only error is
        // the explicit Euler drift, O(dt^2 / substeps) in radius.
        let space = p2_space(10, 10, 1.0, 1.0);
        let c = [0.5, 0.5];
        let u =
            DiscreteField::interpolate_vector(space, |p| [-(p[1] - c[1]), p[0] - c[0]]);
        let x = [0.8, 0.5];
        let dt = 0.01;
        let t = trace_back(x, &u, dt, 16, None);
        let r0 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        let r1 = ((t.position[0] - c[0]).powi(2) + (t.position[1] - c[1]).powi(2)).sqrt();
        assert!((r1 - r0).abs() < 1e-5 * r0, "radius drift {}", r1 - r0);
        // Backward trace rotates by -dt.
        let angle = (t.position[1] - c[1]).atan2(t.position[0] - c[0]);
        assert_relative_eq!(angle, -dt, epsilon = 1e-5);
    }

    #[test]
    fn quadratic_field_shifts_exactly_under_constant_velocity() {
        let space = p2_space(8, 8, 2.0, 2.0);
        let u = DiscreteField::constant(space.clone(), &[0.3, -0.2]);
        let f = |p: [f64; 2]| 1.0 + p[0] - 2.0 * p[1] + p[0] * p[1] + 0.5 * p[0] * p[0];
        let b = DiscreteField::interpolate_scalar(space.clone(), f);
        let dt = 0.5;
        let (composed, _) = compose_field(&b, &u, dt, 1);
        for (i, &p) in space.dof_coords().iter().enumerate() {
            let shifted = [p[0] - 0.3 * dt, p[1] + 0.2 * dt];
            let interior = shifted[0] > 0.0
                && shifted[0] < 2.0
                && shifted[1] > 0.0
                && shifted[1] < 2.0;
            if interior {
                assert_relative_eq!(composed.coeffs[i], f(shifted), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn composition_respects_nodal_range_of_linear_fields() {
        // For a P1 field the nodal range bounds the function everywhere, so
        // composed values must stay inside it.
        let mesh = Arc::new(rect_mesh(9, 9, 1.0, 1.0, false));
        let p1 = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P1));
        let p2 = Arc::new(FunctionSpace::new(mesh, Degree::P2));
        let b = DiscreteField::interpolate_scalar(p1, |p| {
            (9.0 * p[0]).sin() * (7.0 * p[1]).cos()
        });
        let u = DiscreteField::interpolate_vector(p2, |p| {
            [(2.0 * p[1] - 1.0) * 0.8, (1.0 - 2.0 * p[0]) * 0.8]
        });
        let lo = b.coeffs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = b.coeffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (composed, _) = compose_field(&b, &u, 0.4, 4);
        for &v in &composed.coeffs {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn outbound_trace_clamps_on_the_crossed_face() {
        let space = p2_space(8, 8, 1.0, 1.0);
        // Flow upward: backward trace moves down and exits through z = 0.
        let u = DiscreteField::constant(space, &[0.0, 1.0]);
        let t = trace_back([0.5, 0.2], &u, 0.5, 1, None);
        assert!(t.clamped);
        assert_relative_eq!(t.position[0], 0.5, epsilon = 1e-12);
        assert!(t.position[1].abs() < 1e-9, "clamped z = {}", t.position[1]);
    }

    #[test]
    fn clamp_statistics_count_exiting_dofs() {
        let space = p2_space(4, 4, 1.0, 1.0);
        let u = DiscreteField::constant(space.clone(), &[0.0, 1.0]);
        let b = DiscreteField::interpolate_scalar(space.clone(), |p| p[1]);
        // dt large enough that every dof's trace exits through the inlet.
        let (composed, stats) = compose_field(&b, &u, 2.0, 2);
        assert_eq!(stats.clamped, space.n_dofs());
        for &v in &composed.coeffs {
            assert!(v.abs() < 1e-9);
        }
    }
}
