//! Tagged triangle meshes of a meridian box.
//!
//! A [`Mesh`] is an unstructured conforming triangulation of a rectangle
//! `[0, r_max] x [0, z_max]` in `(r, z)` coordinates. Obstacles are not
//! represented by holes: every triangle carries a [`RegionTag`] consumed by
//! the penalization term, and every topological boundary edge carries a
//! [`BoundaryTag`] consumed by boundary conditions.

mod generate;
mod io;
mod locate;

pub use generate::{generate_net_geometry, rect_mesh, EllipseShape, GeometryParams, NetShape};
pub use io::{load_mesh, write_mesh};
pub use locate::LocateResult;

use thiserror::Error;

/// Per-triangle material region.
///
/// `Fluid` is open water, `Catch` and `Collar` are treated as solid, and the
/// three `Net*` bands are porous with band-wise permeability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    Fluid,
    Catch,
    Collar,
    Net1,
    Net2,
    Net3,
}

impl RegionTag {
    pub const ALL: [RegionTag; 6] = [
        RegionTag::Fluid,
        RegionTag::Catch,
        RegionTag::Collar,
        RegionTag::Net1,
        RegionTag::Net2,
        RegionTag::Net3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionTag::Fluid => "fluid",
            RegionTag::Catch => "catch",
            RegionTag::Collar => "collar",
            RegionTag::Net1 => "net1",
            RegionTag::Net2 => "net2",
            RegionTag::Net3 => "net3",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Stable integer code used for cell data in output files.
    pub fn code(self) -> i32 {
        match self {
            RegionTag::Fluid => 0,
            RegionTag::Catch => 1,
            RegionTag::Collar => 2,
            RegionTag::Net1 => 3,
            RegionTag::Net2 => 4,
            RegionTag::Net3 => 5,
        }
    }
}

/// Boundary-condition tag on an exterior edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Upstream face `z = 0`.
    Inlet,
    /// Outer face `r = r_max`.
    Lateral,
    /// Downstream face `z = z_max`.
    Outlet,
    /// Symmetry axis `r = 0`.
    Axis,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Inlet,
        BoundaryTag::Lateral,
        BoundaryTag::Outlet,
        BoundaryTag::Axis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Inlet => "inlet",
            BoundaryTag::Lateral => "lateral",
            BoundaryTag::Outlet => "outlet",
            BoundaryTag::Axis => "axis",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

/// Tagged exterior edge, with connectivity resolved during validation.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    /// Endpoint vertex indices, in the order given at construction.
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
    /// The unique triangle this edge belongs to.
    pub triangle: usize,
    /// Unit normal pointing out of the domain.
    pub normal: [f64; 2],
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex index {index} out of range in triangle {triangle}")]
    VertexOutOfRange { triangle: usize, index: usize },
    #[error("triangle {0} is degenerate (zero area)")]
    DegenerateTriangle(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) is not an exterior edge of the triangulation")]
    NotABoundaryEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) listed twice")]
    DuplicateBoundaryEdge(usize, usize),
    #[error("{count} exterior edges carry no boundary tag")]
    UntaggedBoundary { count: usize },
    #[error("region {0} contains no triangles")]
    EmptyRegion(&'static str),
    #[error("triangle {triangle} quality {quality:.3e} below minimum {min:.3e}")]
    PoorQuality {
        triangle: usize,
        quality: f64,
        min: f64,
    },
    #[error("obstacle {name} is not contained in the box interior")]
    ObstacleOutsideBox { name: &'static str },
    #[error("invalid geometry parameter: {0}")]
    BadParameter(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Conforming tagged triangulation. Construct through [`Mesh::new`], which
/// validates connectivity and orientation; triangles listed clockwise are
/// silently reoriented so that all stored triangles are counterclockwise.
#[derive(Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<RegionTag>,
    pub boundary: Vec<BoundaryEdge>,
    /// `neighbors[t][i]` is the triangle across the edge opposite local
    /// vertex `i` of triangle `t`, if any.
    neighbors: Vec<[Option<usize>; 3]>,
    /// True when every boundary edge has the whole mesh on its inner side
    /// (convex, hole-free domain). Lets point location treat a stalled walk
    /// as proof that the query lies outside.
    convex: bool,
}

impl Mesh {
    pub fn new(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        regions: Vec<RegionTag>,
        boundary: Vec<(usize, usize, BoundaryTag)>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        assert_eq!(triangles.len(), regions.len(), "one region tag per triangle");

        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange { triangle: t, index: v });
                }
            }
            let a = signed_area(&vertices, *tri);
            if a == 0.0 || !a.is_finite() {
                return Err(MeshError::DegenerateTriangle(t));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }

        // Edge map: sorted vertex pair -> up to two (triangle, local edge).
        let mut edge_map: std::collections::HashMap<(usize, usize), Vec<(usize, usize)>> =
            std::collections::HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = edge_map.entry(key).or_default();
                entry.push((t, i));
                if entry.len() > 2 {
                    return Err(MeshError::NonManifoldEdge(key.0, key.1));
                }
            }
        }

        let mut neighbors = vec![[None; 3]; triangles.len()];
        for owners in edge_map.values() {
            if let [(t0, i0), (t1, i1)] = owners[..] {
                neighbors[t0][i0] = Some(t1);
                neighbors[t1][i1] = Some(t0);
            }
        }

        // Every exterior edge must be tagged exactly once.
        let mut exterior: std::collections::HashMap<(usize, usize), (usize, usize)> = edge_map
            .iter()
            .filter(|(_, owners)| owners.len() == 1)
            .map(|(&key, owners)| (key, owners[0]))
            .collect();
        let mut resolved = Vec::with_capacity(boundary.len());
        for &(a, b, tag) in &boundary {
            let key = (a.min(b), a.max(b));
            match exterior.remove(&key) {
                Some((t, i)) => {
                    let normal = outward_normal(&vertices, triangles[t], i);
                    resolved.push(BoundaryEdge { vertices: [a, b], tag, triangle: t, normal });
                }
                None => {
                    let dup = boundary
                        .iter()
                        .filter(|&&(x, y, _)| (x.min(y), x.max(y)) == key)
                        .count();
                    return if dup > 1 {
                        Err(MeshError::DuplicateBoundaryEdge(a, b))
                    } else {
                        Err(MeshError::NotABoundaryEdge(a, b))
                    };
                }
            }
        }
        if !exterior.is_empty() {
            return Err(MeshError::UntaggedBoundary { count: exterior.len() });
        }
        let convex = boundary_is_convex(&vertices, &resolved);

        Ok(Mesh { vertices, triangles, regions, boundary: resolved, neighbors, convex })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn neighbor(&self, tri: usize, local_edge: usize) -> Option<usize> {
        self.neighbors[tri][local_edge]
    }

    pub fn area(&self, tri: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[tri])
    }

    pub fn centroid(&self, tri: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[tri].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Barycentric coordinates of `p` with respect to triangle `tri`.
    pub fn barycentric(&self, tri: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangles[tri].map(|v| self.vertices[v]);
        let area = signed_area(&self.vertices, self.triangles[tri]);
        let l0 = cross_diff(b, c, p) / (2.0 * area);
        let l1 = cross_diff(c, a, p) / (2.0 * area);
        [l0, l1, 1.0 - l0 - l1]
    }

    pub fn point_of_bary(&self, tri: usize, bary: &[f64; 3]) -> [f64; 2] {
        let [a, b, c] = self.triangles[tri].map(|v| self.vertices[v]);
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Longest edge length of each triangle; the local mixing length.
    pub fn longest_edges(&self) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|v| self.vertices[v]);
                dist(a, b).max(dist(b, c)).max(dist(c, a))
            })
            .collect()
    }

    /// Bounding box `([r_min, z_min], [r_max, z_max])`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Smallest triangle quality over the mesh: inradius-to-longest-edge
    /// ratio, normalized so an equilateral triangle scores 1.
    pub fn min_quality(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
                let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
                let s = 0.5 * (la + lb + lc);
                let inradius = self.area(t) / s;
                let longest = la.max(lb).max(lc);
                inradius * 2.0 * 3.0_f64.sqrt() / longest
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn region_of(&self, tri: usize) -> RegionTag {
        self.regions[tri]
    }
}

fn signed_area(vertices: &[[f64; 2]], tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| vertices[v]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Twice the signed area of triangle (a, b, p).
fn cross_diff(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    0.5 * ((a[0] - p[0]) * (b[1] - p[1]) - (b[0] - p[0]) * (a[1] - p[1])) * 2.0
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Outward unit normal of the edge opposite local vertex `i`.
fn outward_normal(vertices: &[[f64; 2]], tri: [usize; 3], local_edge: usize) -> [f64; 2] {
    let a = vertices[tri[(local_edge + 1) % 3]];
    let b = vertices[tri[(local_edge + 2) % 3]];
    let opposite = vertices[tri[local_edge]];
    let e = [b[0] - a[0], b[1] - a[1]];
    let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
    let mut n = [e[1] / len, -e[0] / len];
    // Orient away from the interior vertex.
    let to_opp = [opposite[0] - a[0], opposite[1] - a[1]];
    if n[0] * to_opp[0] + n[1] * to_opp[1] > 0.0 {
        n = [-n[0], -n[1]];
    }
    n
}

/// True when no vertex lies outside the supporting line of any boundary
/// edge. Holes and reentrant corners both fail this test, which is exactly
/// when a stalled location walk stops proving exteriority.
fn boundary_is_convex(vertices: &[[f64; 2]], boundary: &[BoundaryEdge]) -> bool {
    // Max distance from one anchor vertex bounds the diameter within 2x,
    // which is all the tolerance scale needs.
    let anchor = vertices[0];
    let spread = vertices.iter().fold(0.0f64, |acc, &v| acc.max(dist(anchor, v)));
    let tol = 1e-12 * spread.max(1.0);
    boundary.iter().all(|be| {
        let a = vertices[be.vertices[0]];
        vertices
            .iter()
            .all(|v| (v[0] - a[0]) * be.normal[0] + (v[1] - a[1]) * be.normal[1] <= tol)
    })
}
