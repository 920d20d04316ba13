//! Field samples along horizontal chords, the numerical counterpart of the
//! traversing-probe velocity profiles the solver is compared against.

use crate::fem::DiscreteField;
use crate::mesh::Mesh;
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("chord height {z} lies outside the box [{lo}, {hi}]")]
    OutsideBox { z: f64, lo: f64, hi: f64 },
    #[error("a profile needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// All fields at one point of a chord; `None` where the point misses the
/// mesh, so row counts stay aligned across chords.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSample {
    pub r: f64,
    pub values: Option<PointValues>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValues {
    pub u_r: f64,
    pub u_z: f64,
    pub k: f64,
    pub p: f64,
}

/// One extracted chord, samples ordered by increasing `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileExtract {
    pub z: f64,
    pub samples: Vec<ProfileSample>,
}

pub fn extract_profile(
    mesh: &Mesh,
    u: &DiscreteField,
    p: &DiscreteField,
    k: &DiscreteField,
    z: f64,
    n_samples: usize,
) -> Result<ProfileExtract, ProfileError> {
    let (lo, hi) = mesh.bounds();
    if !(z >= lo[1] && z <= hi[1]) {
        return Err(ProfileError::OutsideBox { z, lo: lo[1], hi: hi[1] });
    }
    if n_samples < 2 {
        return Err(ProfileError::TooFewSamples(n_samples));
    }

    let mut samples = Vec::with_capacity(n_samples);
    // The walk from the previous sample's triangle makes the sweep linear
    // in chord length instead of restarting the search per point.
    let mut hint = None;
    for i in 0..n_samples {
        let r = lo[0] + (hi[0] - lo[0]) * i as f64 / (n_samples - 1) as f64;
        let values = match mesh.locate_point([r, z], hint) {
            crate::mesh::LocateResult::Inside { triangle, bary } => {
                hint = Some(triangle);
                let uv = u.eval_bary(triangle, &bary);
                Some(PointValues {
                    u_r: uv[0],
                    u_z: uv[1],
                    k: k.eval_bary(triangle, &bary)[0],
                    p: p.eval_bary(triangle, &bary)[0],
                })
            }
            crate::mesh::LocateResult::Outside { .. } => None,
        };
        samples.push(ProfileSample { r, values });
    }
    Ok(ProfileExtract { z, samples })
}

impl ProfileExtract {
    /// CSV rows `r,u_r,u_z,k,p`; absent samples leave the field columns
    /// empty so the radial grid stays visible.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,u_r,u_z,k,p\n");
        for sample in &self.samples {
            match sample.values {
                Some(v) => s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    sample.r, v.u_r, v.u_z, v.k, v.p
                )),
                None => s.push_str(&format!("{},,,,\n", sample.r)),
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ProfileError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Axial velocities only, for structure checks on the chord.
    pub fn u_z(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.values.map(|v| v.u_z)).collect()
    }
}
