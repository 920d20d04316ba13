//! Plain-text mesh files.
//!
//! ```text
//! brmesh 1
//! vertices <n>
//! <r> <z>          (n lines)
//! triangles <m>
//! <a> <b> <c> <region>   (m lines, region: fluid|catch|collar|net1|net2|net3)
//! boundary <k>
//! <a> <b> <tag>    (k lines, tag: inlet|lateral|outlet|axis)
//! ```
//!
//! Blank lines and `#` comments are skipped. Every exterior edge must appear
//! in the boundary section; the loader revalidates the full mesh contract.

use super::{BoundaryTag, Mesh, MeshError, RegionTag};
use std::io::{BufRead, Write};
use std::path::Path;

const MAGIC: &str = "brmesh 1";

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<(), MeshError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "vertices {}", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(w, "{:.17e} {:.17e}", v[0], v[1])?;
    }
    writeln!(w, "triangles {}", mesh.n_triangles())?;
    for (tri, region) in mesh.triangles.iter().zip(&mesh.regions) {
        writeln!(w, "{} {} {} {}", tri[0], tri[1], tri[2], region.name())?;
    }
    writeln!(w, "boundary {}", mesh.boundary.len())?;
    for be in &mesh.boundary {
        writeln!(w, "{} {} {}", be.vertices[0], be.vertices[1], be.tag.name())?;
    }
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let file = std::fs::File::open(path)?;
    let mut lines = LineReader {
        path: path.display().to_string(),
        inner: std::io::BufReader::new(file).lines(),
        line: 0,
    };

    let magic = lines.next_content()?;
    if magic.trim() != MAGIC {
        return Err(lines.error(format!("expected header '{MAGIC}', found '{magic}'")));
    }

    let n_vertices = lines.section_count("vertices")?;
    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let row = lines.next_content()?;
        let mut it = row.split_whitespace();
        let r = lines.parse_f64(it.next(), "r")?;
        let z = lines.parse_f64(it.next(), "z")?;
        if it.next().is_some() {
            return Err(lines.error("trailing fields on vertex line".into()));
        }
        vertices.push([r, z]);
    }

    let n_triangles = lines.section_count("triangles")?;
    let mut triangles = Vec::with_capacity(n_triangles);
    let mut regions = Vec::with_capacity(n_triangles);
    for _ in 0..n_triangles {
        let row = lines.next_content()?;
        let mut it = row.split_whitespace();
        let a = lines.parse_usize(it.next(), "vertex index")?;
        let b = lines.parse_usize(it.next(), "vertex index")?;
        let c = lines.parse_usize(it.next(), "vertex index")?;
        let name = it
            .next()
            .ok_or_else(|| lines.error("missing region tag".into()))?;
        let region = RegionTag::from_name(name)
            .ok_or_else(|| lines.error(format!("unknown region '{name}'")))?;
        triangles.push([a, b, c]);
        regions.push(region);
    }

    let n_boundary = lines.section_count("boundary")?;
    let mut boundary = Vec::with_capacity(n_boundary);
    for _ in 0..n_boundary {
        let row = lines.next_content()?;
        let mut it = row.split_whitespace();
        let a = lines.parse_usize(it.next(), "vertex index")?;
        let b = lines.parse_usize(it.next(), "vertex index")?;
        let name = it
            .next()
            .ok_or_else(|| lines.error("missing boundary tag".into()))?;
        let tag = BoundaryTag::from_name(name)
            .ok_or_else(|| lines.error(format!("unknown boundary tag '{name}'")))?;
        boundary.push((a, b, tag));
    }

    Mesh::new(vertices, triangles, regions, boundary)
}

struct LineReader<B> {
    path: String,
    inner: std::io::Lines<B>,
    line: usize,
}

impl<B: BufRead> LineReader<B> {
    fn next_content(&mut self) -> Result<String, MeshError> {
        loop {
            self.line += 1;
            match self.inner.next() {
                None => return Err(self.error("unexpected end of file".into())),
                Some(row) => {
                    let row = row?;
                    let t = row.trim();
                    if !t.is_empty() && !t.starts_with('#') {
                        return Ok(row);
                    }
                }
            }
        }
    }

    fn section_count(&mut self, keyword: &str) -> Result<usize, MeshError> {
        let row = self.next_content()?;
        let mut it = row.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(n), None) if k == keyword => n
                .parse()
                .map_err(|_| self.error(format!("bad count '{n}' for '{keyword}'"))),
            _ => Err(self.error(format!("expected '{keyword} <count>', found '{row}'"))),
        }
    }

    fn parse_f64(&self, field: Option<&str>, what: &str) -> Result<f64, MeshError> {
        let s = field.ok_or_else(|| self.error(format!("missing {what}")))?;
        let v: f64 = s
            .parse()
            .map_err(|_| self.error(format!("bad {what} '{s}'")))?;
        if !v.is_finite() {
            return Err(self.error(format!("non-finite {what} '{s}'")));
        }
        Ok(v)
    }

    fn parse_usize(&self, field: Option<&str>, what: &str) -> Result<usize, MeshError> {
        let s = field.ok_or_else(|| self.error(format!("missing {what}")))?;
        s.parse()
            .map_err(|_| self.error(format!("bad {what} '{s}'")))
    }

    fn error(&self, message: String) -> MeshError {
        MeshError::Parse { path: self.path.clone(), line: self.line, message }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_net_geometry, GeometryParams};

    #[test]
    fn roundtrip_preserves_everything() {
        let mesh = generate_net_geometry(&GeometryParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.brmesh");
        write_mesh(&path, &mesh).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.n_vertices(), mesh.n_vertices());
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.regions, mesh.regions);
        assert_eq!(back.boundary.len(), mesh.boundary.len());
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            assert_eq!(a, b, "coordinates must roundtrip bit-exactly");
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.brmesh");
        std::fs::write(&path, "brmesh 1\nvertices 1\n0.0 oops\n").unwrap();
        match load_mesh(&path) {
            Err(MeshError::Parse { line: 3, .. }) => {}
            other => panic!("expected parse error on line 3, got {other:?}"),
        }
    }

    #[test]
    fn unknown_region_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.brmesh");
        std::fs::write(
            &path,
            "brmesh 1\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2 lava\nboundary 0\n",
        )
        .unwrap();
        assert!(load_mesh(&path).is_err());
    }
}
