//! Run configuration files.
//!
//! Flat `key = value` text, one assignment per line; dots namespace related
//! keys (`K.net1`, `bc.outlet`). Blank lines and `#` comments are skipped.
//! Every key is optional: an empty file is the reference run, and each key
//! overrides exactly one default. Unknown and repeated keys are errors, not
//! warnings, so a typo cannot silently fall back to a default.
//!
//! ```text
//! # reference constants, shown with their defaults
//! geometry.source = bundled     # or `file`, with geometry.mesh = <path>
//! mode      = axisymmetric      # or `planar`
//! nu0       = 1.141e-6
//! dt        = 0.667
//! max_steps = 80
//! c1 = 0.1
//! c2 = 0.05
//! c3 = 0.03
//! tau = 1e-4
//! k_c = 1
//! v2  = auto                    # ceiling viscosity; `auto` derives it from
//!                               # the mesh so the blend point stays inside
//! k0      = 0.01                # initial energy and lateral Dirichlet value
//! k_floor = 1e-10
//! K.fluid = 1e4                 # permeability by region
//! K.net1 = 1
//! K.net2 = 5
//! K.net3 = 6
//! K.catch  = 1e-6
//! K.collar = 1e-6
//! inlet.speed = 0.51
//! bc.lateral  = slip            # or no_slip
//! bc.outlet   = natural         # or ghost
//! bc.k_inlet  = 0
//! bc.k_outlet = zero_flux       # or zero
//! production = explicit         # or semi_implicit
//! substeps = 4                  # characteristic sub-intervals per step
//! residual.u = 5e-3             # steady-state stopping thresholds
//! residual.k = 2e-3
//! out_dir  = out
//! profiles = 0.2, 0.35, 0.5, 0.65, 0.85, 1.2, 1.6
//! snapshot_every = 0            # 0 writes fields at the end only
//! ```

use crate::mesh::RegionTag;
use crate::penalization::PermeabilityTable;
use crate::solver::{
    FlowBc, InletProfile, LateralBc, OutletBc, OutletEnergyBc, ProductionTreatment, RunOptions,
};
use crate::turbulence::TurbulenceParams;
use crate::fem::Mode;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: expected `key = value`, found '{text}'")]
    NotAnAssignment { path: String, line: usize, text: String },
    #[error("{path}:{line}: unknown key '{key}'")]
    UnknownKey { path: String, line: usize, key: String },
    #[error("{path}:{line}: key '{key}' already set")]
    DuplicateKey { path: String, line: usize, key: String },
    #[error("{path}:{line}: key '{key}': '{value}' is not valid, expected {expected}")]
    BadValue {
        path: String,
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
}

/// Where the triangulation comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeometrySource {
    /// The built-in net-and-catch geometry at its default dimensions.
    Bundled,
    /// A mesh file in the `brmesh` format.
    File(PathBuf),
}

/// Ceiling eddy viscosity: fixed, or derived from the mesh at setup time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum V2Setting {
    Auto,
    Fixed(f64),
}

/// Everything one run needs, resolvable to solver inputs without further
/// choices. Field defaults are the reference constants above.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub geometry: GeometrySource,
    pub mode: Mode,
    pub nu0: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub tau: f64,
    pub k_c: f64,
    pub v2: V2Setting,
    /// Initial turbulent energy, also the lateral-wall Dirichlet value.
    pub k0: f64,
    pub k_floor: f64,
    pub permeability: PermeabilityTable,
    pub inlet_speed: f64,
    pub lateral: LateralBc,
    pub outlet: OutletBc,
    pub k_inlet: f64,
    pub k_outlet: OutletEnergyBc,
    pub production: ProductionTreatment,
    pub substeps: usize,
    pub residual_u: f64,
    pub residual_k: f64,
    pub out_dir: PathBuf,
    /// Heights of the sampling chords, in mesh units.
    pub profiles: Vec<f64>,
    /// Write field snapshots every this many steps; 0 means final only.
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: GeometrySource::Bundled,
            mode: Mode::Axisymmetric,
            nu0: 1.141e-6,
            dt: 0.667,
            max_steps: 80,
            c1: 0.1,
            c2: 0.05,
            c3: 0.03,
            tau: 1e-4,
            k_c: 1.0,
            v2: V2Setting::Auto,
            k0: 0.01,
            k_floor: 1e-10,
            permeability: PermeabilityTable::default(),
            inlet_speed: 0.51,
            lateral: LateralBc::Slip,
            outlet: OutletBc::Natural,
            k_inlet: 0.0,
            k_outlet: OutletEnergyBc::ZeroFlux,
            production: ProductionTreatment::Explicit,
            substeps: 4,
            residual_u: 5e-3,
            residual_k: 2e-3,
            out_dir: PathBuf::from("out"),
            profiles: vec![0.2, 0.35, 0.5, 0.65, 0.85, 1.2, 1.6],
            snapshot_every: 0,
        }
    }
}

impl RunConfig {
    /// Closure parameters for a mesh whose longest edge is `ell_max`.
    pub fn turbulence_params(&self, ell_max: f64) -> TurbulenceParams<f64> {
        let v2 = match self.v2 {
            V2Setting::Fixed(v) => v,
            V2Setting::Auto => TurbulenceParams::default_v2(self.nu0, self.tau, self.k_c, ell_max),
        };
        TurbulenceParams {
            nu0: self.nu0,
            tau: self.tau,
            tau_tilde: self.tau,
            k_c: self.k_c,
            v2,
            c_diff: 1.0,
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            k_floor: self.k_floor,
        }
    }

    pub fn flow_bc(&self) -> FlowBc {
        FlowBc {
            inlet: InletProfile::Uniform { speed: self.inlet_speed },
            lateral: self.lateral,
            outlet: self.outlet,
            k_inlet: self.k_inlet,
            k_lateral: self.k0,
            k_outlet: self.k_outlet,
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            max_steps: self.max_steps,
            residual_u: self.residual_u,
            residual_k: self.residual_k,
            stop_on_threshold: true,
        }
    }

    /// Render as config text; parsing the result reproduces `self` exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        match &self.geometry {
            GeometrySource::Bundled => kv("geometry.source", "bundled".into()),
            GeometrySource::File(p) => {
                kv("geometry.source", "file".into());
                kv("geometry.mesh", p.display().to_string());
            }
        }
        kv("mode", mode_name(self.mode).into());
        kv("nu0", fmt_f64(self.nu0));
        kv("dt", fmt_f64(self.dt));
        kv("max_steps", self.max_steps.to_string());
        kv("c1", fmt_f64(self.c1));
        kv("c2", fmt_f64(self.c2));
        kv("c3", fmt_f64(self.c3));
        kv("tau", fmt_f64(self.tau));
        kv("k_c", fmt_f64(self.k_c));
        match self.v2 {
            V2Setting::Auto => kv("v2", "auto".into()),
            V2Setting::Fixed(v) => kv("v2", fmt_f64(v)),
        }
        kv("k0", fmt_f64(self.k0));
        kv("k_floor", fmt_f64(self.k_floor));
        for tag in RegionTag::ALL {
            if let Some(k) = self.permeability.get(tag) {
                kv(&format!("K.{}", tag.name()), fmt_f64(k));
            }
        }
        kv("inlet.speed", fmt_f64(self.inlet_speed));
        kv(
            "bc.lateral",
            match self.lateral {
                LateralBc::Slip => "slip",
                LateralBc::NoSlip => "no_slip",
            }
            .into(),
        );
        kv(
            "bc.outlet",
            match self.outlet {
                OutletBc::Natural => "natural",
                OutletBc::Ghost => "ghost",
            }
            .into(),
        );
        kv("bc.k_inlet", fmt_f64(self.k_inlet));
        kv(
            "bc.k_outlet",
            match self.k_outlet {
                OutletEnergyBc::ZeroFlux => "zero_flux",
                OutletEnergyBc::ZeroValue => "zero",
            }
            .into(),
        );
        kv(
            "production",
            match self.production {
                ProductionTreatment::Explicit => "explicit",
                ProductionTreatment::SemiImplicit => "semi_implicit",
            }
            .into(),
        );
        kv("substeps", self.substeps.to_string());
        kv("residual.u", fmt_f64(self.residual_u));
        kv("residual.k", fmt_f64(self.residual_k));
        kv("out_dir", self.out_dir.display().to_string());
        kv(
            "profiles",
            self.profiles.iter().map(|z| fmt_f64(*z)).collect::<Vec<_>>().join(", "),
        );
        kv("snapshot_every", self.snapshot_every.to_string());
        s
    }
}

/// Shortest decimal that round-trips through `f64` parsing.
fn fmt_f64(v: f64) -> String {
    let plain = format!("{v}");
    if plain.parse::<f64>() == Ok(v) {
        plain
    } else {
        format!("{v:e}")
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Planar => "planar",
        Mode::Axisymmetric => "axisymmetric",
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parse config text; `origin` names the source in error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = BTreeSet::new();
    // The default table is total over regions; file keys overwrite entries
    // rather than accumulating, so duplicates are detected per key.
    let mut mesh_file: Option<PathBuf> = None;
    let mut source_is_file = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::NotAnAssignment {
                path: origin.into(),
                line,
                text: content.into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey { path: origin.into(), line, key: key.into() });
        }
        let bad = |expected: &'static str| ConfigError::BadValue {
            path: origin.into(),
            line,
            key: key.into(),
            value: value.into(),
            expected,
        };
        let pos_f64 = |slot: &mut f64| -> Result<(), ConfigError> {
            match value.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => {
                    *slot = v;
                    Ok(())
                }
                _ => Err(bad("a positive number")),
            }
        };
        let nonneg_f64 = |slot: &mut f64| -> Result<(), ConfigError> {
            match value.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() => {
                    *slot = v;
                    Ok(())
                }
                _ => Err(bad("a nonnegative number")),
            }
        };

        match key {
            "geometry.source" => match value {
                "bundled" => source_is_file = false,
                "file" => source_is_file = true,
                _ => return Err(bad("bundled or file")),
            },
            "geometry.mesh" => mesh_file = Some(PathBuf::from(value)),
            "mode" => {
                cfg.mode = match value {
                    "planar" => Mode::Planar,
                    "axisymmetric" => Mode::Axisymmetric,
                    _ => return Err(bad("planar or axisymmetric")),
                }
            }
            "nu0" => pos_f64(&mut cfg.nu0)?,
            "dt" => pos_f64(&mut cfg.dt)?,
            "max_steps" => {
                cfg.max_steps = value.parse().map_err(|_| bad("a nonnegative integer"))?
            }
            "c1" => nonneg_f64(&mut cfg.c1)?,
            "c2" => nonneg_f64(&mut cfg.c2)?,
            "c3" => nonneg_f64(&mut cfg.c3)?,
            "tau" => pos_f64(&mut cfg.tau)?,
            "k_c" => pos_f64(&mut cfg.k_c)?,
            "v2" => {
                cfg.v2 = if value == "auto" {
                    V2Setting::Auto
                } else {
                    let mut v = 0.0;
                    pos_f64(&mut v).map_err(|_| bad("auto or a positive number"))?;
                    V2Setting::Fixed(v)
                }
            }
            "k0" => nonneg_f64(&mut cfg.k0)?,
            "k_floor" => pos_f64(&mut cfg.k_floor)?,
            "inlet.speed" => pos_f64(&mut cfg.inlet_speed)?,
            "bc.lateral" => {
                cfg.lateral = match value {
                    "slip" => LateralBc::Slip,
                    "no_slip" => LateralBc::NoSlip,
                    _ => return Err(bad("slip or no_slip")),
                }
            }
            "bc.outlet" => {
                cfg.outlet = match value {
                    "natural" => OutletBc::Natural,
                    "ghost" => OutletBc::Ghost,
                    _ => return Err(bad("natural or ghost")),
                }
            }
            "bc.k_inlet" => nonneg_f64(&mut cfg.k_inlet)?,
            "bc.k_outlet" => {
                cfg.k_outlet = match value {
                    "zero_flux" => OutletEnergyBc::ZeroFlux,
                    "zero" => OutletEnergyBc::ZeroValue,
                    _ => return Err(bad("zero_flux or zero")),
                }
            }
            "production" => {
                cfg.production = match value {
                    "explicit" => ProductionTreatment::Explicit,
                    "semi_implicit" => ProductionTreatment::SemiImplicit,
                    _ => return Err(bad("explicit or semi_implicit")),
                }
            }
            "substeps" => match value.parse::<usize>() {
                Ok(v) if v >= 1 => cfg.substeps = v,
                _ => return Err(bad("an integer of at least 1")),
            },
            "residual.u" => pos_f64(&mut cfg.residual_u)?,
            "residual.k" => pos_f64(&mut cfg.residual_k)?,
            "out_dir" => {
                if value.is_empty() {
                    return Err(bad("a directory path"));
                }
                cfg.out_dir = PathBuf::from(value);
            }
            "profiles" => {
                let mut zs = Vec::new();
                for part in value.split(',') {
                    match part.trim().parse::<f64>() {
                        Ok(z) if z.is_finite() => zs.push(z),
                        _ => return Err(bad("a comma-separated list of heights")),
                    }
                }
                cfg.profiles = zs;
            }
            "snapshot_every" => {
                cfg.snapshot_every = value.parse().map_err(|_| bad("a nonnegative integer"))?
            }
            _ => {
                if let Some(region) = key.strip_prefix("K.") {
                    let Some(tag) = RegionTag::from_name(region) else {
                        return Err(ConfigError::UnknownKey {
                            path: origin.into(),
                            line,
                            key: key.into(),
                        });
                    };
                    let mut k = 0.0;
                    pos_f64(&mut k)?;
                    cfg.permeability.set(tag, k);
                } else {
                    return Err(ConfigError::UnknownKey {
                        path: origin.into(),
                        line,
                        key: key.into(),
                    });
                }
            }
        }
    }

    if source_is_file {
        match mesh_file {
            Some(p) => cfg.geometry = GeometrySource::File(p),
            None => {
                return Err(ConfigError::BadValue {
                    path: origin.into(),
                    line: 0,
                    key: "geometry.mesh".into(),
                    value: String::new(),
                    expected: "a mesh path when geometry.source = file",
                })
            }
        }
    } else if let Some(p) = mesh_file {
        // A mesh path with a bundled source is a contradiction worth flagging.
        return Err(ConfigError::BadValue {
            path: origin.into(),
            line: 0,
            key: "geometry.mesh".into(),
            value: p.display().to_string(),
            expected: "geometry.source = file alongside a mesh path",
        });
    }
    Ok(cfg)
}
