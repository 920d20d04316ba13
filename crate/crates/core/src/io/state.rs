//! Final-state files: the three coefficient vectors plus a pointer to the
//! mesh they live on, enough to re-extract profiles without re-running.
//!
//! ```text
//! brstate 1
//! mesh <path>        (relative paths resolve against the state file)
//! step <n>
//! time <t>
//! u <2 * n_p2>
//! <coefficient>      (one per line)
//! p <n_p1>
//! ...
//! k <n_p2>
//! ...
//! ```

use crate::fem::{Degree, DiscreteField, FunctionSpace};
use crate::mesh::{load_mesh, Mesh};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

const MAGIC: &str = "brstate 1";

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },
    #[error("mesh referenced by the state: {0}")]
    Mesh(#[from] crate::mesh::MeshError),
    #[error("state has {got} `{field}` coefficients, mesh expects {want}")]
    SizeMismatch { field: &'static str, got: usize, want: usize },
}

/// Fields as saved, re-hung on spaces built from the referenced mesh.
pub struct SavedState {
    pub mesh: Arc<Mesh>,
    pub u: DiscreteField,
    pub p: DiscreteField,
    pub k: DiscreteField,
    pub step: usize,
    pub time: f64,
}

/// Write the fields with a reference to `mesh_path`, which the loader will
/// resolve relative to the state file's own directory.
pub fn save_state(
    path: &Path,
    mesh_path: &Path,
    u: &DiscreteField,
    p: &DiscreteField,
    k: &DiscreteField,
    step: usize,
    time: f64,
) -> Result<(), StateError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "mesh {}", mesh_path.display())?;
    writeln!(w, "step {step}")?;
    writeln!(w, "time {time:.17e}")?;
    for (name, field) in [("u", u), ("p", p), ("k", k)] {
        writeln!(w, "{name} {}", field.coeffs.len())?;
        for c in &field.coeffs {
            writeln!(w, "{c:.17e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<SavedState, StateError> {
    let file = std::fs::File::open(path)?;
    let mut r = Reader {
        path: path.display().to_string(),
        lines: std::io::BufReader::new(file).lines(),
        line: 0,
    };

    let magic = r.next_line()?;
    if magic.trim() != MAGIC {
        return Err(r.err(format!("expected header '{MAGIC}', found '{magic}'")));
    }
    let mesh_ref = PathBuf::from(r.keyword_rest("mesh")?);
    let mesh_path = if mesh_ref.is_absolute() {
        mesh_ref
    } else {
        path.parent().unwrap_or(Path::new(".")).join(mesh_ref)
    };
    let step: usize =
        r.keyword_rest("step")?.trim().parse().map_err(|_| r.err("bad step count".into()))?;
    let time: f64 =
        r.keyword_rest("time")?.trim().parse().map_err(|_| r.err("bad time value".into()))?;

    let mesh = Arc::new(load_mesh(&mesh_path)?);
    let vspace = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P2));
    let pspace = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P1));

    let mut read_block = |name: &'static str,
                          space: &Arc<FunctionSpace>,
                          comps: usize|
     -> Result<DiscreteField, StateError> {
        let count: usize = r
            .keyword_rest(name)?
            .trim()
            .parse()
            .map_err(|_| r.err(format!("bad coefficient count for '{name}'")))?;
        let want = comps * space.n_dofs();
        if count != want {
            return Err(StateError::SizeMismatch { field: name, got: count, want });
        }
        let mut field = DiscreteField::zeros(space.clone(), comps);
        for c in field.coeffs.iter_mut() {
            let row = r.next_line()?;
            *c = row
                .trim()
                .parse()
                .map_err(|_| r.err(format!("bad coefficient '{}'", row.trim())))?;
        }
        Ok(field)
    };

    let u = read_block("u", &vspace, 2)?;
    let p = read_block("p", &pspace, 1)?;
    let k = read_block("k", &vspace, 1)?;
    Ok(SavedState { mesh, u, p, k, step, time })
}

struct Reader<B> {
    path: String,
    lines: std::io::Lines<B>,
    line: usize,
}

impl<B: BufRead> Reader<B> {
    fn next_line(&mut self) -> Result<String, StateError> {
        loop {
            self.line += 1;
            match self.lines.next() {
                None => return Err(self.err("unexpected end of file".into())),
                Some(row) => {
                    let row = row?;
                    if !row.trim().is_empty() {
                        return Ok(row);
                    }
                }
            }
        }
    }

    fn keyword_rest(&mut self, keyword: &str) -> Result<String, StateError> {
        let row = self.next_line()?;
        match row.trim().split_once(' ') {
            Some((k, rest)) if k == keyword => Ok(rest.trim().to_string()),
            _ => Err(self.err(format!("expected '{keyword} <value>', found '{row}'"))),
        }
    }

    fn err(&self, msg: String) -> StateError {
        StateError::Format { path: self.path.clone(), line: self.line, msg }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rect_mesh, write_mesh};

    #[test]
    fn saved_fields_reload_bitwise() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let mesh = Arc::new(rect_mesh(3, 5, 1.0, 2.0, true));
        write_mesh(&dir.join("m.brmesh"), &mesh).unwrap();

        let vspace = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P2));
        let pspace = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P1));
        let mut u = DiscreteField::zeros(vspace.clone(), 2);
        for (i, c) in u.coeffs.iter_mut().enumerate() {
            *c = (i as f64).sin() * 1e-3;
        }
        let p = DiscreteField::interpolate_scalar(pspace, |x| x[0] - 7.0 * x[1]);
        let k = DiscreteField::interpolate_scalar(vspace, |x| x[0] * x[1] + 1e-10);

        let state_path = dir.join("final.brstate");
        save_state(&state_path, Path::new("m.brmesh"), &u, &p, &k, 42, 28.0).unwrap();
        let loaded = load_state(&state_path).unwrap();

        assert_eq!(loaded.step, 42);
        assert_eq!(loaded.time, 28.0);
        assert_eq!(loaded.mesh.n_vertices(), mesh.n_vertices());
        assert_eq!(loaded.u.coeffs, u.coeffs);
        assert_eq!(loaded.p.coeffs, p.coeffs);
        assert_eq!(loaded.k.coeffs, k.coeffs);
    }

    #[test]
    fn truncated_state_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let mesh = Arc::new(rect_mesh(2, 2, 1.0, 1.0, false));
        write_mesh(&dir.join("m.brmesh"), &mesh).unwrap();
        let text = format!("{MAGIC}\nmesh m.brmesh\nstep 1\ntime 0.5\nu 3\n1.0\n");
        let path = dir.join("cut.brstate");
        std::fs::write(&path, text).unwrap();
        let err = load_state(&path).err().expect("truncated file must not load");
        // The u block promises 3 coefficients for a mesh wanting more.
        assert!(matches!(err, StateError::SizeMismatch { field: "u", .. }), "{err}");
    }
}
