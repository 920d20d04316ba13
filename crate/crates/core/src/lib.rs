//! Finite-element flow solver for axisymmetric flow through and around
//! penalized obstacles (nets, solid bodies), with a one-equation turbulent
//! kinetic energy closure and characteristic-Galerkin advection.
//!
//! The domain is a meridian rectangle `(r, z)` meshed with tagged triangles;
//! obstacles are never cut out of the mesh. Instead every triangle carries a
//! region tag, and a Brinkman penalization term `(1/K) u` with region-wise
//! permeability `K` forces the velocity to near zero in solid regions and
//! damps it in porous ones. Velocity and scalar fields live in P2, pressure
//! in P1 (Taylor-Hood); integrals carry the half-revolution measure `|r| pi`
//! in axisymmetric mode and the plain area measure in planar mode.

pub mod characteristics;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod penalization;
pub mod solver;
pub mod turbulence;
pub mod verification;

/// Scalar type used by the assembled systems and solver pipeline.
pub type Scalar = f64;

/// Turbulence closure parameters at the solver's working precision.
pub type TurbulenceParams = turbulence::TurbulenceParams<Scalar>;

/// Environment variable capping the worker-thread count for the parallel
/// parts of a run (characteristic tracing). Unset uses all available cores.
/// Results do not depend on the thread count.
pub const THREADS_ENV: &str = "BRINKMAN_RANS_THREADS";

/// Worker pool for per-dof parallel maps, sized once per process.
pub(crate) fn thread_pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("worker pool")
    })
}
