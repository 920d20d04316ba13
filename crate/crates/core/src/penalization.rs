//! Brinkman penalization: per-region permeabilities and the penalty
//! operator `c(x) u` they induce in the momentum balance.
//!
//! Each region tag maps to a permeability `K`; the assembled coefficient is
//! `c = 1/K` per triangle, constant over the triangle. Large `K` (open
//! water) makes the term negligible, tiny `K` (solid) drives the velocity
//! to zero, and order-one `K` models the porous net bands. `c` carries
//! 1/s so that `c u` is an acceleration.

use crate::fem::{Assembler, Coef, FunctionSpace, Offset};
use crate::mesh::{Mesh, RegionTag};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PenalizationError {
    #[error("no permeability assigned to region '{}'", .0.name())]
    MissingRegion(RegionTag),
    #[error("permeability of region '{name}' must be positive, got {k}", name = .0.name(), k = .1)]
    NonpositiveK(RegionTag, f64),
}

/// Permeability per region tag, in the units making `1/K u` an acceleration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PermeabilityTable {
    k: [Option<f64>; RegionTag::ALL.len()],
}

impl Default for PermeabilityTable {
    /// Open water `1e4`, solid catch and collar `1e-6`, net bands `1`, `5`
    /// and `6` from mouth to catch.
    fn default() -> Self {
        let mut t = PermeabilityTable::empty();
        t.set(RegionTag::Fluid, 1e4);
        t.set(RegionTag::Catch, 1e-6);
        t.set(RegionTag::Collar, 1e-6);
        t.set(RegionTag::Net1, 1.0);
        t.set(RegionTag::Net2, 5.0);
        t.set(RegionTag::Net3, 6.0);
        t
    }
}

impl PermeabilityTable {
    /// No assignments; regions must be filled in before use.
    pub fn empty() -> Self {
        PermeabilityTable { k: [None; RegionTag::ALL.len()] }
    }

    fn slot(tag: RegionTag) -> usize {
        RegionTag::ALL.iter().position(|&t| t == tag).unwrap()
    }

    pub fn set(&mut self, tag: RegionTag, k: f64) {
        self.k[Self::slot(tag)] = Some(k);
    }

    pub fn get(&self, tag: RegionTag) -> Option<f64> {
        self.k[Self::slot(tag)]
    }

    /// Treat the last net band as open water (it is nearly as permeable).
    pub fn merge_net3_into_fluid(&mut self) {
        self.k[Self::slot(RegionTag::Net3)] = self.k[Self::slot(RegionTag::Fluid)];
    }

    /// Per-triangle penalty coefficient `1/K(region)`.
    pub fn coefficient_field(&self, mesh: &Mesh) -> Result<Vec<f64>, PenalizationError> {
        let mut cache = [0.0f64; RegionTag::ALL.len()];
        let mut seen = [false; RegionTag::ALL.len()];
        let mut coeffs = Vec::with_capacity(mesh.n_triangles());
        for tri in 0..mesh.n_triangles() {
            let tag = mesh.region_of(tri);
            let s = Self::slot(tag);
            if !seen[s] {
                let k = self.k[s].ok_or(PenalizationError::MissingRegion(tag))?;
                if k <= 0.0 {
                    return Err(PenalizationError::NonpositiveK(tag, k));
                }
                cache[s] = 1.0 / k;
                seen[s] = true;
            }
            coeffs.push(cache[s]);
        }
        Ok(coeffs)
    }
}

/// Add the penalty bilinear form `(c u, v)` to the velocity block. `c` is
/// the per-triangle field from [`PermeabilityTable::coefficient_field`].
pub fn assemble_penalty(asm: &mut Assembler, space: &FunctionSpace, c: &[f64], off: Offset) {
    assert_eq!(c.len(), space.mesh.n_triangles());
    asm.vector_mass(space, &Coef::PerTri(c), off);
}
