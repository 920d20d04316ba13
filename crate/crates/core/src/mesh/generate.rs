//! Structured, graded mesh generation for the meridian box, with triangle
//! tagging from simple obstacle shapes: a conical porous band, a solid
//! closed-end body, and a thin solid collar sleeve lining the band mouth.

use super::{BoundaryTag, Mesh, MeshError, RegionTag};

/// Conical band: the segment `(r0, z0) -> (r1, z1)` thickened by
/// `thickness`, split into three equal-parameter subbands tagged
/// `Net1` (mouth end) through `Net3` (closed end).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetShape {
    pub r0: f64,
    pub z0: f64,
    pub r1: f64,
    pub z1: f64,
    pub thickness: f64,
}

/// Solid body of revolution: ellipse centered on the axis at `z_center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseShape {
    pub z_center: f64,
    pub semi_r: f64,
    pub semi_z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryParams {
    pub r_max: f64,
    pub z_max: f64,
    /// Target edge length inside the refinement window around the obstacles.
    pub h_near: f64,
    /// Target edge length far from the obstacles.
    pub h_far: f64,
    pub net: NetShape,
    pub catch: EllipseShape,
    /// Half thickness of the solid sleeve lining the band at its mouth end,
    /// measured normal to the band centerline. Kept at or below half the
    /// band thickness so the sleeve stays sheathed in membrane and exposes
    /// no corner to the outer stream; a proud lip here sheds a wake that at
    /// coarse time steps locks into a two-step oscillation.
    pub collar_half_width: f64,
    /// Arclength of band, from the mouth end, that the sleeve lines.
    pub collar_length: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            r_max: 0.5,
            z_max: 2.0,
            h_near: 0.013,
            h_far: 0.04,
            net: NetShape { r0: 0.15, z0: 0.1, r1: 0.225, z1: 0.75, thickness: 0.025 },
            catch: EllipseShape { z_center: 0.85, semi_r: 0.12, semi_z: 0.15 },
            collar_half_width: 0.008,
            collar_length: 0.03,
        }
    }
}

/// Minimum acceptable triangle quality (see [`Mesh::min_quality`]); grading
/// is limited so the structured mesh stays well above this.
const MIN_QUALITY: f64 = 0.1;

/// Build the tagged box mesh for the default obstacle layout.
///
/// Grading concentrates vertices in a window covering the band and the
/// closed-end body; cells grow toward the far field. All six regions must
/// end up nonempty.
pub fn generate_net_geometry(params: &GeometryParams) -> Result<Mesh, MeshError> {
    validate(params)?;
    let net = &params.net;
    let catch = &params.catch;

    // Refinement window with one far cell of margin around the obstacles.
    let r_hi = net.r0.max(net.r1).max(catch.semi_r) + net.thickness;
    let z_lo = (net.z0.min(net.z1) - net.thickness).max(0.0);
    let z_hi = catch.z_center + catch.semi_z + 2.0 * net.thickness;
    let rs = graded_axis(params.r_max, (0.0, r_hi), params.h_near, params.h_far);
    let zs = graded_axis(params.z_max, (z_lo, z_hi), params.h_near, params.h_far);

    let mesh = tagged_grid(&rs, &zs, true, |c| classify(params, c))?;

    for tag in RegionTag::ALL {
        if !mesh.regions.iter().any(|&r| r == tag) {
            return Err(MeshError::EmptyRegion(tag.name()));
        }
    }
    let q = mesh.min_quality();
    if q < MIN_QUALITY {
        let worst = (0..mesh.n_triangles())
            .min_by(|&a, &b| {
                let qa = quality_of(&mesh, a);
                let qb = quality_of(&mesh, b);
                qa.partial_cmp(&qb).unwrap()
            })
            .unwrap();
        return Err(MeshError::PoorQuality { triangle: worst, quality: q, min: MIN_QUALITY });
    }
    Ok(mesh)
}

/// Uniform all-fluid box mesh with `nx` by `nz` cells. The `r = 0` side is
/// tagged `Axis` when `axis` is set and `Lateral` otherwise (planar runs).
pub fn rect_mesh(nx: usize, nz: usize, r_max: f64, z_max: f64, axis: bool) -> Mesh {
    let rs: Vec<f64> = (0..=nx).map(|i| r_max * i as f64 / nx as f64).collect();
    let zs: Vec<f64> = (0..=nz).map(|j| z_max * j as f64 / nz as f64).collect();
    tagged_grid(&rs, &zs, axis, |_| RegionTag::Fluid).expect("uniform grid is valid")
}

fn validate(p: &GeometryParams) -> Result<(), MeshError> {
    let bad = |msg: String| Err(MeshError::BadParameter(msg));
    if !(p.r_max > 0.0 && p.z_max > 0.0) {
        return bad(format!("box {} x {} must be positive", p.r_max, p.z_max));
    }
    if !(p.h_near > 0.0 && p.h_far >= p.h_near) {
        return bad(format!("edge sizes near {} far {}", p.h_near, p.h_far));
    }
    if p.net.thickness <= 0.0 || p.collar_half_width <= 0.0 || p.collar_length <= 0.0 {
        return bad("band thickness and collar extents must be positive".into());
    }
    if p.collar_half_width > p.net.thickness / 2.0 {
        return bad(format!(
            "collar half thickness {} exceeds the band wall {}",
            p.collar_half_width,
            p.net.thickness / 2.0
        ));
    }
    // Obstacles must stay clear of inlet, outlet and lateral faces. Touching
    // or straddling the axis is fine: bodies of revolution are centered there.
    let t2 = p.net.thickness / 2.0;
    let net_ok = p.net.r0.max(p.net.r1) + t2 < p.r_max
        && p.net.z0.min(p.net.z1) - t2 > 0.0
        && p.net.z0.max(p.net.z1) + t2 < p.z_max
        && p.net.r0.min(p.net.r1) - t2 > 0.0;
    if !net_ok {
        return Err(MeshError::ObstacleOutsideBox { name: "net" });
    }
    if !(p.catch.semi_r < p.r_max
        && p.catch.z_center - p.catch.semi_z > 0.0
        && p.catch.z_center + p.catch.semi_z < p.z_max)
    {
        return Err(MeshError::ObstacleOutsideBox { name: "catch" });
    }
    // The sleeve lives inside the band wall, so the band's containment
    // margin already covers it.
    Ok(())
}

fn classify(p: &GeometryParams, c: [f64; 2]) -> RegionTag {
    let [r, z] = c;
    let e = &p.catch;
    if (r / e.semi_r).powi(2) + ((z - e.z_center) / e.semi_z).powi(2) <= 1.0 {
        return RegionTag::Catch;
    }
    let a = [p.net.r0, p.net.z0];
    let b = [p.net.r1, p.net.z1];
    let (d, t) = dist_to_segment(c, a, b);
    let band_len = (b[0] - a[0]).hypot(b[1] - a[1]);
    if d <= p.collar_half_width && t * band_len <= p.collar_length {
        return RegionTag::Collar;
    }
    if d <= p.net.thickness / 2.0 {
        return if t < 1.0 / 3.0 {
            RegionTag::Net1
        } else if t < 2.0 / 3.0 {
            RegionTag::Net2
        } else {
            RegionTag::Net3
        };
    }
    RegionTag::Fluid
}

/// Distance from `p` to segment `a-b` and the clamped projection parameter.
fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).hypot(p[1] - q[1]), t)
}

/// March 1D nodes from 0 to `len`, with spacing `h_near` inside `window`
/// growing linearly to `h_far` away from it, then rescale to land on `len`.
fn graded_axis(len: f64, window: (f64, f64), h_near: f64, h_far: f64) -> Vec<f64> {
    const GROWTH: f64 = 0.3;
    let h_of = |x: f64| -> f64 {
        let d = if x < window.0 {
            window.0 - x
        } else if x > window.1 {
            x - window.1
        } else {
            0.0
        };
        (h_near + GROWTH * d).min(h_far)
    };
    let mut xs = vec![0.0];
    let mut x = 0.0;
    while x < len - 1e-12 {
        let h = h_of(x + 0.5 * h_of(x));
        x += h;
        xs.push(x);
    }
    let scale = len / *xs.last().unwrap();
    for v in &mut xs {
        *v *= scale;
    }
    *xs.last_mut().unwrap() = len;
    xs
}

/// Triangulate the tensor grid `rs x zs`, alternating cell diagonals, and
/// tag each triangle from its centroid.
fn tagged_grid(
    rs: &[f64],
    zs: &[f64],
    axis: bool,
    classify: impl Fn([f64; 2]) -> RegionTag,
) -> Result<Mesh, MeshError> {
    let nr = rs.len();
    let nz = zs.len();
    let at = |i: usize, j: usize| j * nr + i;
    let mut vertices = Vec::with_capacity(nr * nz);
    for &z in zs {
        for &r in rs {
            vertices.push([r, z]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * (nr - 1) * (nz - 1));
    for j in 0..nz - 1 {
        for i in 0..nr - 1 {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let regions = triangles
        .iter()
        .map(|tri| {
            let c = [
                (vertices[tri[0]][0] + vertices[tri[1]][0] + vertices[tri[2]][0]) / 3.0,
                (vertices[tri[0]][1] + vertices[tri[1]][1] + vertices[tri[2]][1]) / 3.0,
            ];
            classify(c)
        })
        .collect();
    let mut boundary = Vec::new();
    for i in 0..nr - 1 {
        boundary.push((at(i, 0), at(i + 1, 0), BoundaryTag::Inlet));
        boundary.push((at(i, nz - 1), at(i + 1, nz - 1), BoundaryTag::Outlet));
    }
    let left = if axis { BoundaryTag::Axis } else { BoundaryTag::Lateral };
    for j in 0..nz - 1 {
        boundary.push((at(0, j), at(0, j + 1), left));
        boundary.push((at(nr - 1, j), at(nr - 1, j + 1), BoundaryTag::Lateral));
    }
    Mesh::new(vertices, triangles, regions, boundary)
}

fn quality_of(mesh: &Mesh, t: usize) -> f64 {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
    let (la, lb, lc) = (d(b, c), d(c, a), d(a, b));
    let s = 0.5 * (la + lb + lc);
    mesh.area(t) / s * 2.0 * 3.0_f64.sqrt() / la.max(lb).max(lc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_has_all_regions_and_target_size() {
        let mesh = generate_net_geometry(&GeometryParams::default()).unwrap();
        let n = mesh.n_vertices();
        assert!(
            (2000..=4500).contains(&n),
            "vertex count {n} far from the bundled target"
        );
        for tag in RegionTag::ALL {
            assert!(mesh.regions.iter().any(|&r| r == tag), "missing {}", tag.name());
        }
        assert!(mesh.min_quality() > MIN_QUALITY);
    }

    #[test]
    fn band_subregions_are_ordered_along_z() {
        let mesh = generate_net_geometry(&GeometryParams::default()).unwrap();
        let mean_z = |tag: RegionTag| {
            let (mut s, mut n) = (0.0, 0);
            for t in 0..mesh.n_triangles() {
                if mesh.regions[t] == tag {
                    s += mesh.centroid(t)[1];
                    n += 1;
                }
            }
            s / n as f64
        };
        assert!(mean_z(RegionTag::Net1) < mean_z(RegionTag::Net2));
        assert!(mean_z(RegionTag::Net2) < mean_z(RegionTag::Net3));
    }

    #[test]
    fn collar_sleeve_stays_inside_band_wall_at_mouth_end() {
        let p = GeometryParams::default();
        let mesh = generate_net_geometry(&p).unwrap();
        let a = [p.net.r0, p.net.z0];
        let b = [p.net.r1, p.net.z1];
        let band_len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let mut n_collar = 0;
        for t in 0..mesh.n_triangles() {
            if mesh.regions[t] != RegionTag::Collar {
                continue;
            }
            n_collar += 1;
            let (d, s) = dist_to_segment(mesh.centroid(t), a, b);
            assert!(d <= p.net.thickness / 2.0, "sleeve centroid outside band wall");
            assert!(s * band_len <= p.collar_length, "sleeve past its length cutoff");
        }
        assert!(n_collar >= 2, "sleeve too thin to resolve: {n_collar} triangles");
    }

    #[test]
    fn collar_thicker_than_band_wall_rejected() {
        let mut p = GeometryParams::default();
        p.collar_half_width = p.net.thickness; // twice the wall
        match generate_net_geometry(&p) {
            Err(MeshError::BadParameter(_)) => {}
            other => panic!("expected parameter error, got {other:?}"),
        }
    }

    #[test]
    fn obstacle_touching_box_rejected() {
        let mut p = GeometryParams::default();
        p.catch.z_center = p.z_max - 0.1; // ellipse pokes through the outlet
        match generate_net_geometry(&p) {
            Err(MeshError::ObstacleOutsideBox { name: "catch" }) => {}
            other => panic!("expected containment error, got {other:?}"),
        }
    }

    #[test]
    fn graded_axis_spans_and_respects_sizes() {
        let xs = graded_axis(2.0, (0.1, 1.2), 0.02, 0.08);
        assert_eq!(xs[0], 0.0);
        assert_eq!(*xs.last().unwrap(), 2.0);
        for w in xs.windows(2) {
            let h = w[1] - w[0];
            assert!(h > 0.017 && h < 0.085, "step {h}");
        }
    }

    #[test]
    fn rect_mesh_covers_box() {
        let m = rect_mesh(8, 4, 2.0, 1.0, false);
        assert_eq!(m.n_vertices(), 45);
        assert_eq!(m.n_triangles(), 64);
        let total: f64 = (0..m.n_triangles()).map(|t| m.area(t)).sum();
        approx::assert_relative_eq!(total, 2.0, epsilon = 1e-12);
        assert!(m.boundary.iter().all(|b| b.tag != BoundaryTag::Axis));
    }
}
