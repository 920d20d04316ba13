//! Pointwise turbulence closure laws.
//!
//! The eddy viscosity grows like `nu0 + l sqrt(tau + |k|)` at moderate
//! turbulent energy, saturates at a cap `v2` for large `|k|`, and the two
//! branches are joined C1 by a cubic on `(k_c, k_c + 1)`. The eddy
//! diffusivity uses the same construction with its own regularization
//! `tau_tilde` and multiplier `c_diff`. `l` is the local mixing length (in
//! the solver: the longest edge of the triangle at hand).
//!
//! Everything here is scalar math, generic over the float width; the crate
//! root fixes the solver-facing alias to `f64`.

use thiserror::Error;

/// Floating-point scalar the closures are written against.
pub trait Real: num_traits::Float + num_traits::FromPrimitive {}
impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Error, PartialEq)]
pub enum ClosureError {
    #[error("turbulent energy {0} is negative; floor it before calling")]
    NegativeEnergy(f64),
    #[error("parameter {name} = {value} out of range: {reason}")]
    BadParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Closure constants. `v2` is the large-energy viscosity cap and must
/// dominate the low-branch value `nu0 + l sqrt(tau + k_c)` for every mixing
/// length in use; [`TurbulenceParams::validate`] checks that against the
/// largest `l` of the mesh at hand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurbulenceParams<S> {
    pub nu0: S,
    pub tau: S,
    pub tau_tilde: S,
    pub k_c: S,
    pub v2: S,
    /// Multiplier on the diffusivity branch.
    pub c_diff: S,
    /// Discrete-scheme constants: viscosity, diffusion, dissipation.
    pub c1: S,
    pub c2: S,
    pub c3: S,
    /// Guard applied to `k` before it appears in a denominator.
    pub k_floor: S,
}

impl<S: Real> TurbulenceParams<S> {
    /// Water viscosity and the scheme constants used throughout the trawl
    /// computations; `v2` is left for the caller to fix from the mesh.
    pub fn standard(v2: S) -> Self {
        let c = |x: f64| S::from_f64(x).unwrap();
        TurbulenceParams {
            nu0: c(1.141e-6),
            tau: c(1e-4),
            tau_tilde: c(1e-4),
            k_c: c(1.0),
            v2,
            c_diff: c(1.0),
            c1: c(0.1),
            c2: c(0.05),
            c3: c(0.03),
            k_floor: c(1e-10),
        }
    }

    /// Default viscosity cap for meshes whose longest edge is `ell_max`:
    /// five percent above the low-branch value at the junction.
    pub fn default_v2(nu0: S, tau: S, k_c: S, ell_max: S) -> S {
        let margin = S::from_f64(1.05).unwrap();
        margin * (nu0 + ell_max * (tau + k_c).sqrt())
    }

    /// Low-branch viscosity at the junction, `v1 = nu0 + l sqrt(tau + k_c)`.
    pub fn v1(&self, ell: S) -> S {
        self.nu0 + ell * (self.tau + self.k_c).sqrt()
    }

    pub fn validate(&self, ell_max: S) -> Result<(), ClosureError> {
        let check = |name: &'static str, value: S, ok: bool, reason: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(ClosureError::BadParameter {
                    name,
                    value: value.to_f64().unwrap_or(f64::NAN),
                    reason,
                })
            }
        };
        let zero = S::zero();
        check("nu0", self.nu0, self.nu0 > zero, "must be positive")?;
        check("tau", self.tau, self.tau > zero, "must be positive")?;
        check("tau_tilde", self.tau_tilde, self.tau_tilde > zero, "must be positive")?;
        check("k_c", self.k_c, self.k_c > zero, "must be positive")?;
        check("c_diff", self.c_diff, self.c_diff > zero, "must be positive")?;
        // Zero turns a term off, which degenerate test setups rely on.
        check("c1", self.c1, self.c1 >= zero, "must be nonnegative")?;
        check("c2", self.c2, self.c2 >= zero, "must be nonnegative")?;
        check("c3", self.c3, self.c3 >= zero, "must be nonnegative")?;
        check("k_floor", self.k_floor, self.k_floor > zero, "must be positive")?;
        check(
            "v2",
            self.v2,
            self.v2 > self.v1(ell_max),
            "cap must exceed the low branch at the junction for the largest mixing length",
        )
    }
}

/// Eddy viscosity `nu_t(k)`. Even in `k` (uses `|k|`), continuous with a
/// continuous derivative across both junctions.
pub fn eddy_viscosity<S: Real>(k: S, ell: S, p: &TurbulenceParams<S>) -> S {
    blended(k.abs(), ell, p.nu0, p.tau, S::one(), p)
}

/// Eddy diffusivity `nu_t~(k)`: same shape with `tau_tilde` and `c_diff`.
pub fn eddy_diffusivity<S: Real>(k: S, ell: S, p: &TurbulenceParams<S>) -> S {
    blended(k.abs(), ell, p.nu0, p.tau_tilde, p.c_diff, p)
}

fn blended<S: Real>(k: S, ell: S, nu0: S, tau: S, mult: S, p: &TurbulenceParams<S>) -> S {
    let one = S::one();
    if k <= p.k_c {
        return nu0 + mult * ell * (tau + k).sqrt();
    }
    if k >= p.k_c + one {
        return p.v2;
    }
    // Hermite cubic on (k_c, k_c + 1): value and slope of the low branch on
    // the left, the cap with zero slope on the right.
    let half = S::from_f64(0.5).unwrap();
    let v1 = nu0 + mult * ell * (tau + p.k_c).sqrt();
    let s1 = mult * ell * half / (tau + p.k_c).sqrt();
    let t = k - p.k_c;
    let t2 = t * t;
    let t3 = t2 * t;
    let two = S::from_f64(2.0).unwrap();
    let three = S::from_f64(3.0).unwrap();
    let h00 = two * t3 - three * t2 + one;
    let h10 = t3 - two * t2 + t;
    let h01 = -two * t3 + three * t2;
    v1 * h00 + s1 * h10 + p.v2 * h01
}

/// Energy lost to the mean flow, `E(k) = k sqrt(k) / l`. The caller must
/// have floored `k`; negative energy is a domain error.
pub fn backward_transfer<S: Real>(k: S, ell: S) -> Result<S, ClosureError> {
    if k < S::zero() {
        return Err(ClosureError::NegativeEnergy(k.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(k * k.sqrt() / ell)
}

/// Discrete-scheme momentum viscosity `nu0 + c1 l sqrt(k)`.
pub fn scheme_viscosity<S: Real>(k: S, ell: S, p: &TurbulenceParams<S>) -> S {
    debug_assert!(k >= S::zero());
    p.nu0 + p.c1 * ell * k.sqrt()
}

/// Discrete-scheme energy diffusivity `c2 l sqrt(k)`.
pub fn scheme_diffusivity<S: Real>(k: S, ell: S, p: &TurbulenceParams<S>) -> S {
    debug_assert!(k >= S::zero());
    p.c2 * ell * k.sqrt()
}

/// Discrete-scheme dissipation rate `(c3 / l) sqrt(k)`; multiplies the new
/// energy in the reaction term.
pub fn scheme_dissipation<S: Real>(k: S, ell: S, p: &TurbulenceParams<S>) -> S {
    debug_assert!(k >= S::zero());
    p.c3 * k.sqrt() / ell
}

/// Shear production density `(1/2) c1 l sqrt(k) |grad u + (grad u)^T|^2`.
pub fn production_density<S: Real>(k: S, ell: S, shear2: S, p: &TurbulenceParams<S>) -> S {
    debug_assert!(k >= S::zero());
    let half = S::from_f64(0.5).unwrap();
    half * p.c1 * ell * k.sqrt() * shear2
}

/// Coefficient of the implicit production treatment: the density divided by
/// the floored previous energy (the new energy multiplies it in the system).
pub fn production_coefficient<S: Real>(k: S, ell: S, shear2: S, p: &TurbulenceParams<S>) -> S {
    production_density(k, ell, shear2, p) / k.max(p.k_floor)
}
