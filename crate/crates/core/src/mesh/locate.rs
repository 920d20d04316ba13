//! Point location by barycentric walk with a linear-scan fallback.

use super::Mesh;

/// Containment slack on barycentric coordinates. Points this close to an
/// edge count as inside every triangle sharing it; ties resolve to the
/// lowest triangle index.
const BARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub enum LocateResult {
    Inside {
        triangle: usize,
        bary: [f64; 3],
    },
    /// The query point lies outside the triangulation. `nearest` is the
    /// closest point on the boundary and `boundary_edge` the edge carrying it.
    Outside {
        nearest: [f64; 2],
        boundary_edge: usize,
    },
}

impl LocateResult {
    pub fn triangle(&self) -> Option<usize> {
        match self {
            LocateResult::Inside { triangle, .. } => Some(*triangle),
            LocateResult::Outside { .. } => None,
        }
    }
}

impl Mesh {
    /// Locate the triangle containing `p`, walking from `hint` when given.
    ///
    /// The walk moves across the edge with the most negative barycentric
    /// coordinate. On a convex mesh a stall at the boundary already proves
    /// the point is outside, so only the boundary is scanned for the
    /// nearest point; otherwise (and whenever the walk cycles) a full scan
    /// decides. A point on a shared edge or vertex is reported with the
    /// lowest index among the triangles containing it.
    pub fn locate_point(&self, p: [f64; 2], hint: Option<usize>) -> LocateResult {
        let mut tri = hint.unwrap_or(0).min(self.n_triangles() - 1);
        let mut steps = 0usize;
        let max_steps = self.n_triangles() + 2;
        loop {
            let bary = self.barycentric(tri, p);
            let (worst, min_b) = argmin(&bary);
            if min_b >= -BARY_TOL {
                return self.resolve_ties(tri, p);
            }
            match self.neighbor(tri, worst) {
                Some(next) if steps < max_steps => {
                    tri = next;
                    steps += 1;
                }
                None if self.convex => {
                    let (edge, nearest) = self.nearest_boundary_point(p);
                    return LocateResult::Outside { nearest, boundary_edge: edge };
                }
                _ => return self.locate_by_scan(p),
            }
        }
    }

    fn locate_by_scan(&self, p: [f64; 2]) -> LocateResult {
        for t in 0..self.n_triangles() {
            let bary = self.barycentric(t, p);
            if bary.iter().all(|&b| b >= -BARY_TOL) {
                // Scan order already yields the lowest containing index.
                return LocateResult::Inside { triangle: t, bary };
            }
        }
        let (edge, nearest) = self.nearest_boundary_point(p);
        LocateResult::Outside { nearest, boundary_edge: edge }
    }

    /// From a containing triangle, settle edge/vertex ties on the lowest
    /// index among all triangles whose closure contains `p`.
    fn resolve_ties(&self, tri: usize, p: [f64; 2]) -> LocateResult {
        let bary = self.barycentric(tri, p);
        if bary.iter().all(|&b| b > BARY_TOL) {
            return LocateResult::Inside { triangle: tri, bary };
        }
        let mut best = tri;
        let mut stack = vec![tri];
        let mut seen = std::collections::HashSet::from([tri]);
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                if let Some(n) = self.neighbor(t, i) {
                    if seen.insert(n) {
                        let nb = self.barycentric(n, p);
                        if nb.iter().all(|&b| b >= -BARY_TOL) {
                            best = best.min(n);
                            stack.push(n);
                        }
                    }
                }
            }
        }
        LocateResult::Inside { triangle: best, bary: self.barycentric(best, p) }
    }

    /// Closest point on the tagged boundary, as `(boundary edge index, point)`.
    pub fn nearest_boundary_point(&self, p: [f64; 2]) -> (usize, [f64; 2]) {
        let mut best = (0usize, [0.0, 0.0], f64::INFINITY);
        for (i, be) in self.boundary.iter().enumerate() {
            let a = self.vertices[be.vertices[0]];
            let b = self.vertices[be.vertices[1]];
            let q = project_on_segment(p, a, b);
            let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d < best.2 {
                best = (i, q, d);
            }
        }
        (best.0, best.1)
    }
}

fn argmin(bary: &[f64; 3]) -> (usize, f64) {
    let mut idx = 0;
    for i in 1..3 {
        if bary[i] < bary[idx] {
            idx = i;
        }
    }
    (idx, bary[idx])
}

fn project_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    };
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rect_mesh, BoundaryTag, Mesh, RegionTag};
    use approx::assert_relative_eq;

    #[test]
    fn centroid_has_equal_barycentrics() {
        let m = rect_mesh(4, 4, 1.0, 1.0, true);
        let c = m.centroid(5);
        match m.locate_point(c, None) {
            LocateResult::Inside { triangle, bary } => {
                assert_eq!(triangle, 5);
                for b in bary {
                    assert_relative_eq!(b, 1.0 / 3.0, epsilon = 1e-12);
                }
            }
            _ => panic!("centroid not found"),
        }
    }

    #[test]
    fn hint_far_away_still_finds_point() {
        let m = rect_mesh(10, 10, 1.0, 1.0, true);
        let p = [0.93, 0.07];
        let a = m.locate_point(p, Some(0));
        let b = m.locate_point(p, Some(m.n_triangles() - 1));
        assert_eq!(a.triangle(), b.triangle());
        assert!(a.triangle().is_some());
    }

    /// L-shaped domain: bottom row [0,2]x[0,1] plus upper-left [0,1]x[1,2].
    /// A walk from the right arm toward the upper arm stalls at the notch,
    /// so the scan fallback has to finish the job.
    fn l_mesh() -> Mesh {
        let vertices = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            [2.0, 1.0],
            [0.0, 2.0],
            [1.0, 2.0],
        ];
        let triangles = vec![[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [3, 4, 7], [3, 7, 6]];
        let regions = vec![RegionTag::Fluid; 6];
        let boundary = vec![
            (0, 1, BoundaryTag::Lateral),
            (1, 2, BoundaryTag::Lateral),
            (2, 5, BoundaryTag::Lateral),
            (5, 4, BoundaryTag::Lateral),
            (4, 7, BoundaryTag::Lateral),
            (7, 6, BoundaryTag::Lateral),
            (6, 3, BoundaryTag::Lateral),
            (3, 0, BoundaryTag::Lateral),
        ];
        Mesh::new(vertices, triangles, regions, boundary).unwrap()
    }

    #[test]
    fn stalled_walk_on_reentrant_boundary_still_finds_inside_point() {
        let m = l_mesh();
        assert!(!m.convex);
        assert!(rect_mesh(3, 3, 1.0, 1.0, true).convex);
        let p = [0.85, 1.9];
        match m.locate_point(p, Some(2)) {
            LocateResult::Inside { triangle, bary } => {
                assert_eq!(triangle, 5);
                let back = m.point_of_bary(triangle, &bary);
                assert_relative_eq!(back[0], p[0], epsilon = 1e-12);
                assert_relative_eq!(back[1], p[1], epsilon = 1e-12);
            }
            _ => panic!("inside point reported outside"),
        }
    }

    #[test]
    fn notch_point_is_outside_the_l_mesh() {
        let m = l_mesh();
        match m.locate_point([1.6, 1.4], Some(0)) {
            LocateResult::Outside { nearest, .. } => {
                let d = ((nearest[0] - 1.6f64).powi(2) + (nearest[1] - 1.4f64).powi(2)).sqrt();
                assert_relative_eq!(d, 0.4, epsilon = 1e-12);
            }
            _ => panic!("notch point reported inside"),
        }
    }

    #[test]
    fn outside_point_reports_nearest_boundary() {
        let m = rect_mesh(4, 4, 1.0, 1.0, true);
        match m.locate_point([1.5, 0.5], None) {
            LocateResult::Outside { nearest, .. } => {
                assert_relative_eq!(nearest[0], 1.0, epsilon = 1e-12);
                assert_relative_eq!(nearest[1], 0.5, epsilon = 1e-12);
            }
            _ => panic!("expected outside"),
        }
    }

    /// A strip of triangles where the midpoint of the edge shared by
    /// triangles 3 and 9 must resolve to index 3.
    #[test]
    fn shared_edge_midpoint_takes_lowest_index() {
        // 2x3 grid of quads, each split into two triangles: indices 0..12.
        let nx = 4;
        let ny = 3;
        let mut vertices = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                vertices.push([i as f64, j as f64]);
            }
        }
        let at = |i: usize, j: usize| j * nx + i;
        let mut triangles = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                // Lower-left triangles first row-major, upper-right after.
                triangles.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
            }
        }
        let lower = triangles.len();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                triangles.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
            }
        }
        assert_eq!(lower, 6);
        let regions = vec![RegionTag::Fluid; triangles.len()];
        let mut boundary = Vec::new();
        for i in 0..nx - 1 {
            boundary.push((at(i, 0), at(i + 1, 0), BoundaryTag::Inlet));
            boundary.push((at(i, ny - 1), at(i + 1, ny - 1), BoundaryTag::Outlet));
        }
        for j in 0..ny - 1 {
            boundary.push((at(0, j), at(0, j + 1), BoundaryTag::Axis));
            boundary.push((at(nx - 1, j), at(nx - 1, j + 1), BoundaryTag::Lateral));
        }
        let m = Mesh::new(vertices, triangles, regions, boundary).unwrap();

        // Triangle 3 = lower of cell (0,1); triangle 9 = upper of cell (0,1).
        // Their shared edge is the diagonal of that cell.
        assert_eq!(m.neighbor(9, 1), Some(3));
        let mid = [0.5, 1.5];
        for hint in [None, Some(9), Some(3), Some(11)] {
            match m.locate_point(mid, hint) {
                LocateResult::Inside { triangle, .. } => assert_eq!(triangle, 3),
                _ => panic!("midpoint not located"),
            }
        }
    }
}
