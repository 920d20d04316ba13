//! The time loop: Stokes initialization, an implicit momentum step, a
//! semi-implicit turbulent-energy step, and residual-based steady-state
//! detection.
//!
//! One iteration advances the pair `(u, k)` by `dt`: the energy equation is
//! solved first from the previous step's fields, then the momentum/pressure
//! saddle system with the fresh energy in its viscosity. Convection enters
//! through the characteristic composition `f o X`, never through an
//! assembled convection matrix.

pub mod linsolve;

use crate::characteristics::compose_field;
use crate::fem::{
    integrate_functional, quadrature, Assembler, Coef, Degree, DiscreteField, FunctionSpace,
    LinearSystem, Mode, Offset,
};
use crate::mesh::{BoundaryTag, Mesh};
use crate::penalization::{assemble_penalty, PenalizationError, PermeabilityTable};
use crate::turbulence::{
    production_coefficient, production_density, scheme_diffusivity, scheme_dissipation,
    scheme_viscosity, ClosureError,
};
use crate::TurbulenceParams;
use linsolve::{SolveError, SolveOptions};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Coefficient of the pressure-regularization mass term in the saddle
/// system; keeps the pressure block invertible without a mean constraint.
pub const PRESSURE_PENALTY: f64 = 1e-7;

/// Hard ceiling on `max |u| / inlet speed`; beyond it the run has blown up.
const BLOWUP_FACTOR: f64 = 100.0;

/// Volume quadrature degree for all solver assemblies: exact for the P2
/// mass with the extra `r` of the axisymmetric measure.
const QDEG: usize = 5;

/// Steps granted to the startup transient before wide flooring is worth a
/// warning; fresh fields legitimately relax through the floor early on.
const TRANSIENT_STEPS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Linear(#[from] SolveError),
    #[error(transparent)]
    Penalization(#[from] PenalizationError),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error("step {step}: {field} contains a non-finite value")]
    NotFinite { step: usize, field: &'static str },
    #[error("step {step}: max speed {max_speed:.3e} exceeds {limit:.3e}, the run has blown up")]
    BlowUp { step: usize, max_speed: f64, limit: f64 },
    #[error("invalid solver setup: {0}")]
    BadSetup(String),
}

/// Inflow profile prescribed on the inlet face, by radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InletProfile {
    Uniform { speed: f64 },
    /// `u_z(r) = d r (alpha - r)`, zero at the axis and at `r = alpha`.
    Poiseuille { d: f64, alpha: f64 },
}

impl InletProfile {
    pub fn axial(&self, r: f64) -> f64 {
        match *self {
            InletProfile::Uniform { speed } => speed,
            InletProfile::Poiseuille { d, alpha } => d * r * (alpha - r),
        }
    }

    /// Largest inflow speed over `0 <= r <= r_max`.
    pub fn max_speed(&self, r_max: f64) -> f64 {
        match *self {
            InletProfile::Uniform { speed } => speed.abs(),
            InletProfile::Poiseuille { d, alpha } => {
                let mut m = (d * r_max * (alpha - r_max)).abs();
                let vertex = 0.5 * alpha;
                if vertex > 0.0 && vertex < r_max {
                    m = m.max((d * vertex * (alpha - vertex)).abs());
                }
                m
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LateralBc {
    /// Zero normal velocity, free tangential slip.
    Slip,
    NoSlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutletBc {
    /// Do-nothing stress condition.
    Natural,
    /// Downstream-ghost stress condition; damps re-entering eddies by
    /// pulling reversed flow toward the translated inlet profile.
    Ghost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutletEnergyBc {
    ZeroFlux,
    ZeroValue,
}

/// Complete boundary-condition selection for one run.
#[derive(Clone, Copy, Debug)]
pub struct FlowBc {
    pub inlet: InletProfile,
    pub lateral: LateralBc,
    pub outlet: OutletBc,
    /// Dirichlet turbulent energy on the inlet.
    pub k_inlet: f64,
    /// Dirichlet turbulent energy on the lateral wall.
    pub k_lateral: f64,
    pub k_outlet: OutletEnergyBc,
}

impl Default for FlowBc {
    fn default() -> Self {
        FlowBc {
            inlet: InletProfile::Uniform { speed: 0.51 },
            lateral: LateralBc::Slip,
            outlet: OutletBc::Natural,
            k_inlet: 0.0,
            k_lateral: 0.01,
            k_outlet: OutletEnergyBc::ZeroFlux,
        }
    }
}

/// How the shear-production term of the energy equation is discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductionTreatment {
    /// Ratio form: the term multiplies `k^{m+1}/k^m` and joins the matrix
    /// with negative sign. Faithful to the scheme, but at large
    /// `dt * production / k` the matrix loses positivity.
    SemiImplicit,
    /// Source form: the term is evaluated at `k^m` and added to the rhs.
    /// Unconditionally sign-stable.
    Explicit,
}

/// Everything fixed over a run: discretization, coefficients, and options.
pub struct Problem {
    pub mesh: Arc<Mesh>,
    /// P2 space carrying velocity components and turbulent energy.
    pub vspace: Arc<FunctionSpace>,
    /// P1 pressure space.
    pub pspace: Arc<FunctionSpace>,
    pub mode: Mode,
    pub params: TurbulenceParams,
    pub bc: FlowBc,
    pub dt: f64,
    /// Euler substeps per characteristic trace.
    pub substeps: usize,
    pub production: ProductionTreatment,
    /// Initial turbulent energy, constant over the domain.
    pub initial_k: f64,
    pub solve: SolveOptions,
    /// Mixing length per triangle: its longest edge.
    pub ell: Vec<f64>,
    /// Penalty coefficient `1/K` per triangle.
    pub penalty: Vec<f64>,
    /// Divergence coupling alone, for the per-step mass-defect diagnostic.
    div_probe: LinearSystem,
    /// Pressure mass alone, for the bound the mass defect is checked against.
    p_mass: LinearSystem,
}

impl Problem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mesh: Arc<Mesh>,
        mode: Mode,
        params: TurbulenceParams,
        bc: FlowBc,
        permeability: &PermeabilityTable,
        dt: f64,
        substeps: usize,
        production: ProductionTreatment,
        initial_k: f64,
    ) -> Result<Self, SolverError> {
        if !(dt > 0.0) {
            return Err(SolverError::BadSetup(format!("time step must be positive, got {dt}")));
        }
        if substeps == 0 {
            return Err(SolverError::BadSetup("substeps must be at least 1".into()));
        }
        if initial_k < 0.0 {
            return Err(SolverError::BadSetup(format!(
                "initial turbulent energy must be nonnegative, got {initial_k}"
            )));
        }
        let ell = mesh.longest_edges();
        let ell_max = ell.iter().cloned().fold(0.0, f64::max);
        params.validate(ell_max)?;
        let penalty = permeability.coefficient_field(&mesh)?;

        let vspace = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P2));
        let pspace = Arc::new(FunctionSpace::new(mesh.clone(), Degree::P1));
        let n = vspace.n_dofs();
        let mut div_probe = LinearSystem::new(2 * n + pspace.n_dofs());
        Assembler { sys: &mut div_probe, mode, qdeg: QDEG }.div_coupling(
            &vspace,
            &pspace,
            0,
            2 * n,
            -1.0,
        );
        let mut p_mass = LinearSystem::new(pspace.n_dofs());
        Assembler { sys: &mut p_mass, mode, qdeg: QDEG }.scalar_mass(
            &pspace,
            &Coef::Const(1.0),
            Offset::default(),
        );

        Ok(Problem {
            mesh,
            vspace,
            pspace,
            mode,
            params,
            bc,
            dt,
            substeps,
            production,
            initial_k,
            solve: SolveOptions::default(),
            ell,
            penalty,
            div_probe,
            p_mass,
        })
    }

    fn n_vel(&self) -> usize {
        self.vspace.n_dofs()
    }

    /// Dirichlet rows of the momentum system. Later entries win at corner
    /// dofs, so the inlet profile takes precedence where faces meet.
    fn momentum_dirichlet(&self) -> BTreeMap<usize, f64> {
        let n = self.n_vel();
        let mut bc = BTreeMap::new();
        for dof in self.vspace.boundary_dofs(BoundaryTag::Lateral) {
            bc.insert(dof, 0.0);
            if self.bc.lateral == LateralBc::NoSlip {
                bc.insert(n + dof, 0.0);
            }
        }
        for dof in self.vspace.boundary_dofs(BoundaryTag::Axis) {
            bc.insert(dof, 0.0);
        }
        for dof in self.vspace.boundary_dofs(BoundaryTag::Inlet) {
            let r = self.vspace.dof_coord(dof)[0];
            bc.insert(dof, 0.0);
            bc.insert(n + dof, self.bc.inlet.axial(r));
        }
        bc
    }

    fn energy_dirichlet(&self) -> BTreeMap<usize, f64> {
        let mut bc = BTreeMap::new();
        for dof in self.vspace.boundary_dofs(BoundaryTag::Lateral) {
            bc.insert(dof, self.bc.k_lateral);
        }
        if self.bc.k_outlet == OutletEnergyBc::ZeroValue {
            for dof in self.vspace.boundary_dofs(BoundaryTag::Outlet) {
                bc.insert(dof, 0.0);
            }
        }
        for dof in self.vspace.boundary_dofs(BoundaryTag::Inlet) {
            bc.insert(dof, self.bc.k_inlet);
        }
        bc
    }

    /// Inlet profile translated downstream: the ghost value on the outlet
    /// at radius `r` is the inflow at the same radius.
    fn ghost_outlet_value(&self, p: [f64; 2]) -> [f64; 2] {
        [0.0, self.bc.inlet.axial(p[0])]
    }

    /// `|div u|_w / |u|`, the weak mass defect admitted by the pressure
    /// regularization.
    fn divergence_residual(&self, u: &DiscreteField) -> f64 {
        let mut x = vec![0.0; self.div_probe.n];
        x[..u.coeffs.len()].copy_from_slice(&u.coeffs);
        let mut y = vec![0.0; self.div_probe.n];
        self.div_probe.mul_add(&x, &mut y);
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        norm(&y[2 * self.n_vel()..]) / norm(&u.coeffs).max(f64::MIN_POSITIVE)
    }

    /// What the mass defect should be: the momentum solve balances the
    /// divergence rows against the pressure penalty exactly, so the defect
    /// equals `penalty * |M_p p|` up to direct-solver roundoff.
    fn divergence_bound(&self, u: &DiscreteField, p: &DiscreteField) -> f64 {
        let mut y = vec![0.0; self.p_mass.n];
        self.p_mass.mul_add(&p.coeffs, &mut y);
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        PRESSURE_PENALTY * norm(&y) / norm(&u.coeffs).max(f64::MIN_POSITIVE)
    }
}

/// Squared Frobenius norm of `grad u + (grad u)^T` at one quadrature point,
/// including the out-of-plane `2 u_r / r` entry in axisymmetric mode.
pub fn shear_squared(
    u: &DiscreteField,
    tri: usize,
    bary: &[f64; 3],
    point: [f64; 2],
    mode: Mode,
) -> f64 {
    let g = u.grad_bary(tri, bary);
    let e_rr = g[0][0];
    let e_zz = g[1][1];
    let e_rz = 0.5 * (g[0][1] + g[1][0]);
    let mut s = e_rr * e_rr + e_zz * e_zz + 2.0 * e_rz * e_rz;
    if mode == Mode::Axisymmetric {
        // On the axis u_r vanishes and u_r / r tends to its radial slope.
        let e_tt = if point[0] == 0.0 { e_rr } else { u.eval_bary(tri, bary)[0] / point[0] };
        s += e_tt * e_tt;
    }
    4.0 * s
}

/// Outflow ghost terms on the outlet: the stress condition
/// `sigma n = -1/2 (u.n)^- (u - u_out) + (u.n) u_out` with the negative
/// part frozen at the previous velocity. Adds `1/2 (u_prev.n)^- u . v` to
/// the matrix and the `u_out` terms to the rhs; for purely outgoing flow
/// only the rhs survives, and with `u_out = 0` the whole contribution
/// vanishes (the natural condition).
pub fn assemble_ghost_outlet(
    asm: &mut Assembler,
    space: &FunctionSpace,
    u_prev: &DiscreteField,
    u_out: &dyn Fn([f64; 2]) -> [f64; 2],
    off: Offset,
) {
    let mesh = space.mesh.clone();
    let normal_flux = |be: usize, p: [f64; 2]| -> f64 {
        let edge = &mesh.boundary[be];
        let tri = edge.triangle;
        let bary = mesh.barycentric(tri, p);
        let v = u_prev.eval_bary(tri, &bary);
        v[0] * edge.normal[0] + v[1] * edge.normal[1]
    };
    asm.boundary_vector_mass(
        space,
        BoundaryTag::Outlet,
        &|be, p, _n| 0.5 * (-normal_flux(be, p)).max(0.0),
        off,
    );
    asm.rhs_boundary_vector(
        space,
        BoundaryTag::Outlet,
        &|be, p, _n| {
            let un = normal_flux(be, p);
            let scale = 0.5 * (-un).max(0.0) + un;
            let g = u_out(p);
            [scale * g[0], scale * g[1]]
        },
        off.row,
    );
}

/// Steady Stokes flow with the molecular viscosity, the penalty term, and
/// the run's boundary conditions; used to start the time loop.
pub fn solve_stokes_init(prob: &Problem) -> Result<(DiscreteField, DiscreteField), SolverError> {
    let n = prob.n_vel();
    let np = prob.pspace.n_dofs();
    let mut sys = LinearSystem::new(2 * n + np);
    let mut asm = Assembler { sys: &mut sys, mode: prob.mode, qdeg: QDEG };
    asm.viscous_sym_grad(&prob.vspace, &Coef::Const(prob.params.nu0), Offset::default());
    assemble_penalty(&mut asm, &prob.vspace, &prob.penalty, Offset::default());
    asm.div_coupling(&prob.vspace, &prob.pspace, 0, 2 * n, -1.0);
    asm.scalar_mass(&prob.pspace, &Coef::Const(-PRESSURE_PENALTY), Offset::diag(2 * n));
    sys.apply_dirichlet(&prob.momentum_dirichlet());
    let x = linsolve::solve(&sys, &prob.solve)?;

    let mut u = DiscreteField::zeros(prob.vspace.clone(), 2);
    u.coeffs.copy_from_slice(&x[..2 * n]);
    let mut p = DiscreteField::zeros(prob.pspace.clone(), 1);
    p.coeffs.copy_from_slice(&x[2 * n..]);
    Ok((u, p))
}

/// One implicit momentum/pressure step. The characteristic map and ghost
/// flux are frozen at the previous velocity; `k` feeds the viscosity
/// closure and is the freshest energy field the caller has.
pub fn ns_step(
    prob: &Problem,
    u_old: &DiscreteField,
    k: &DiscreteField,
) -> Result<(DiscreteField, DiscreteField, usize), SolverError> {
    let n = prob.n_vel();
    let np = prob.pspace.n_dofs();
    let dt = prob.dt;
    let (convected, stats) = compose_field(u_old, u_old, dt, prob.substeps);

    let mut sys = LinearSystem::new(2 * n + np);
    let mut asm = Assembler { sys: &mut sys, mode: prob.mode, qdeg: QDEG };
    asm.vector_mass(&prob.vspace, &Coef::Const(1.0 / dt), Offset::default());
    let nu_eff = |tri: usize, bary: &[f64; 3], _p: [f64; 2]| -> f64 {
        // P2 evaluation can undershoot the nodal floor between dofs.
        let kq = k.eval_bary(tri, bary)[0].max(0.0);
        scheme_viscosity(kq, prob.ell[tri], &prob.params)
    };
    asm.viscous_sym_grad(&prob.vspace, &Coef::Fn(&nu_eff), Offset::default());
    assemble_penalty(&mut asm, &prob.vspace, &prob.penalty, Offset::default());
    asm.div_coupling(&prob.vspace, &prob.pspace, 0, 2 * n, -1.0);
    asm.scalar_mass(&prob.pspace, &Coef::Const(-PRESSURE_PENALTY), Offset::diag(2 * n));
    asm.rhs_vector(
        &prob.vspace,
        &|tri, bary, _p| {
            let v = convected.eval_bary(tri, bary);
            [v[0] / dt, v[1] / dt]
        },
        0,
    );
    if prob.bc.outlet == OutletBc::Ghost {
        assemble_ghost_outlet(
            &mut asm,
            &prob.vspace,
            u_old,
            &|p| prob.ghost_outlet_value(p),
            Offset::default(),
        );
    }
    sys.apply_dirichlet(&prob.momentum_dirichlet());
    let x = linsolve::solve(&sys, &prob.solve)?;

    let mut u = DiscreteField::zeros(prob.vspace.clone(), 2);
    u.coeffs.copy_from_slice(&x[..2 * n]);
    let mut p = DiscreteField::zeros(prob.pspace.clone(), 1);
    p.coeffs.copy_from_slice(&x[2 * n..]);
    Ok((u, p, stats.clamped))
}

/// Result of one energy step, before the caller merges it into the state.
pub struct EnergyStep {
    pub k: DiscreteField,
    /// Dofs that came out below the floor and were clamped to it.
    pub floored: usize,
    /// Smallest coefficient before flooring. Small negatives persist even
    /// with a nonnegative load: the consistent quadratic mass matrix has
    /// positive midedge couplings, so a weakly forced dof next to strongly
    /// forced neighbors is rung below zero at a fraction of their value.
    pub min_before_floor: f64,
    pub clamped_traces: usize,
}

/// One semi-implicit energy step: convection by composition, implicit
/// diffusion and dissipation, production per [`ProductionTreatment`].
pub fn k_step(
    prob: &Problem,
    u_old: &DiscreteField,
    k_old: &DiscreteField,
) -> Result<EnergyStep, SolverError> {
    let n = prob.n_vel();
    let dt = prob.dt;
    let (convected, stats) = compose_field(k_old, u_old, dt, prob.substeps);

    let k_at = |tri: usize, bary: &[f64; 3]| -> f64 { k_old.eval_bary(tri, bary)[0].max(0.0) };

    let mut sys = LinearSystem::new(n);
    let mut asm = Assembler { sys: &mut sys, mode: prob.mode, qdeg: QDEG };
    asm.scalar_mass(&prob.vspace, &Coef::Const(1.0 / dt), Offset::default());
    let diffusivity = |tri: usize, bary: &[f64; 3], _p: [f64; 2]| -> f64 {
        scheme_diffusivity(k_at(tri, bary), prob.ell[tri], &prob.params)
    };
    asm.scalar_stiffness(&prob.vspace, &Coef::Fn(&diffusivity), Offset::default());
    let dissipation = |tri: usize, bary: &[f64; 3], _p: [f64; 2]| -> f64 {
        scheme_dissipation(k_at(tri, bary), prob.ell[tri], &prob.params)
    };
    asm.scalar_mass(&prob.vspace, &Coef::Fn(&dissipation), Offset::default());
    match prob.production {
        ProductionTreatment::SemiImplicit => {
            let coef = |tri: usize, bary: &[f64; 3], p: [f64; 2]| -> f64 {
                let shear2 = shear_squared(u_old, tri, bary, p, prob.mode);
                -production_coefficient(k_at(tri, bary), prob.ell[tri], shear2, &prob.params)
            };
            asm.scalar_mass(&prob.vspace, &Coef::Fn(&coef), Offset::default());
        }
        ProductionTreatment::Explicit => {
            // Midedge rule: vertex test functions have negative lobes, so a
            // full-degree rule turns this nonnegative density into negative
            // vertex loads wherever it varies strongly, and those loads pin
            // nodal k below zero. At the midedges the vertex functions
            // vanish and the load stays entrywise nonnegative.
            asm.rhs_scalar_with(
                &prob.vspace,
                quadrature::midedge_rule(),
                &|tri, bary, p| {
                    let shear2 = shear_squared(u_old, tri, bary, p, prob.mode);
                    production_density(k_at(tri, bary), prob.ell[tri], shear2, &prob.params)
                },
                0,
            );
        }
    }
    // Foot values are clamped at zero: interpolating the composed field can
    // undershoot near sharp layers, and a negative energy sample would act
    // as a spurious sink.
    asm.rhs_scalar(&prob.vspace, &|tri, bary, _p| {
        convected.eval_bary(tri, bary)[0].max(0.0) / dt
    }, 0);
    sys.apply_dirichlet(&prob.energy_dirichlet());
    let x = linsolve::solve(&sys, &prob.solve)?;

    let mut k = DiscreteField::zeros(prob.vspace.clone(), 1);
    k.coeffs.copy_from_slice(&x);
    let mut floored = 0usize;
    let mut min_before = f64::INFINITY;
    for v in k.coeffs.iter_mut() {
        min_before = min_before.min(*v);
        if *v < prob.params.k_floor {
            *v = prob.params.k_floor;
            floored += 1;
        }
    }
    Ok(EnergyStep { k, floored, min_before_floor: min_before, clamped_traces: stats.clamped })
}

/// One row of the residual log.
#[derive(Clone, Copy, Debug)]
pub struct ResidualSample {
    pub step: usize,
    pub time: f64,
    pub r_u: f64,
    pub r_k: f64,
}

/// Per-step health record kept alongside the fields.
#[derive(Clone, Copy, Debug)]
pub struct StepDiagnostics {
    pub step: usize,
    pub kinetic_energy: f64,
    pub min_k_before_floor: f64,
    pub floored: usize,
    pub clamped_traces: usize,
    pub divergence_residual: f64,
}

/// Soft invariant violations the loop records instead of aborting on.
#[derive(Clone, Debug, PartialEq)]
pub enum RunWarning {
    /// Flooring touched at least 1% of energy dofs past the settling window.
    WideFlooring { step: usize, floored: usize, n_dofs: usize },
    /// Mass defect exceeded 10x the pressure-penalty-consistent level.
    MassDefect { step: usize, residual: f64, bound: f64 },
}

impl std::fmt::Display for RunWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunWarning::WideFlooring { step, floored, n_dofs } => write!(
                f,
                "step {step}: energy floor applied to {floored} of {n_dofs} dofs (over 1%)"
            ),
            RunWarning::MassDefect { step, residual, bound } => write!(
                f,
                "step {step}: mass defect {residual:.3e} exceeds 10x the penalty level {bound:.3e}"
            ),
        }
    }
}

/// Evolving fields plus the histories the acceptance checks read.
pub struct SolverState {
    pub u: DiscreteField,
    pub p: DiscreteField,
    pub k: DiscreteField,
    pub time: f64,
    pub step: usize,
    pub residuals: Vec<ResidualSample>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub warnings: Vec<RunWarning>,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub max_steps: usize,
    /// Steady-state threshold on the velocity residual.
    pub residual_u: f64,
    /// Steady-state threshold on the energy residual.
    pub residual_k: f64,
    /// Stop early once both thresholds are met.
    pub stop_on_threshold: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_steps: 80,
            residual_u: 5e-3,
            residual_k: 2e-3,
            stop_on_threshold: true,
        }
    }
}

/// Euclidean norm of the coefficient difference between two iterates; the
/// scalar the residual log and stopping rule are built on.
pub fn residual_norm(f_new: &DiscreteField, f_old: &DiscreteField) -> f64 {
    f_new.coeff_distance(f_old)
}

/// Run the loop: Stokes start, then `k`/momentum steps until the step
/// budget or both residual thresholds are met. `on_step` sees every state
/// after it is committed, for logging and snapshots.
pub fn run_time_loop(
    prob: &Problem,
    opts: &RunOptions,
    on_step: &mut dyn FnMut(&SolverState, &StepDiagnostics),
) -> Result<SolverState, SolverError> {
    let (u, p) = solve_stokes_init(prob)?;
    let k = DiscreteField::constant(prob.vspace.clone(), &[prob.initial_k]);
    let mut state = SolverState {
        u,
        p,
        k,
        time: 0.0,
        step: 0,
        residuals: Vec::new(),
        diagnostics: Vec::new(),
        warnings: Vec::new(),
    };
    check_finite(&state, 0)?;

    let speed_limit = BLOWUP_FACTOR
        * prob.bc.inlet.max_speed(prob.mesh.bounds().1[0].max(prob.mesh.bounds().0[0].abs()));

    for _ in 0..opts.max_steps {
        // Staggered update: the momentum step sees the energy field the
        // k step just produced. Advancing both from the old pair instead
        // settles into a two-step oscillation rather than a steady state.
        let energy = k_step(prob, &state.u, &state.k)?;
        let (u_new, p_new, _) = ns_step(prob, &state.u, &energy.k)?;

        let r_u = residual_norm(&u_new, &state.u);
        let r_k = residual_norm(&energy.k, &state.k);

        state.u = u_new;
        state.p = p_new;
        state.k = energy.k;
        state.step += 1;
        state.time += prob.dt;
        check_finite(&state, state.step)?;
        if speed_limit > 0.0 {
            let max_speed = state.u.coeffs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if max_speed > speed_limit {
                return Err(SolverError::BlowUp { step: state.step, max_speed, limit: speed_limit });
            }
        }

        let kinetic_energy = integrate_functional(
            &prob.mesh,
            prob.mode,
            QDEG,
            &[&state.u],
            &|_, _, v| 0.5 * (v[0] * v[0] + v[1] * v[1]),
        );
        let diag = StepDiagnostics {
            step: state.step,
            kinetic_energy,
            min_k_before_floor: energy.min_before_floor,
            floored: energy.floored,
            clamped_traces: energy.clamped_traces,
            divergence_residual: prob.divergence_residual(&state.u),
        };
        if state.step > TRANSIENT_STEPS && 100 * diag.floored >= state.k.coeffs.len() {
            state.warnings.push(RunWarning::WideFlooring {
                step: state.step,
                floored: diag.floored,
                n_dofs: state.k.coeffs.len(),
            });
        }
        let defect_bound = prob.divergence_bound(&state.u, &state.p);
        if diag.divergence_residual > 10.0 * defect_bound {
            state.warnings.push(RunWarning::MassDefect {
                step: state.step,
                residual: diag.divergence_residual,
                bound: defect_bound,
            });
        }
        state.residuals.push(ResidualSample {
            step: state.step,
            time: state.time,
            r_u,
            r_k,
        });
        state.diagnostics.push(diag);
        on_step(&state, &diag);

        if opts.stop_on_threshold && r_u < opts.residual_u && r_k < opts.residual_k {
            break;
        }
    }
    Ok(state)
}

fn check_finite(state: &SolverState, step: usize) -> Result<(), SolverError> {
    for (field, coeffs) in [
        ("velocity", &state.u.coeffs),
        ("pressure", &state.p.coeffs),
        ("turbulent energy", &state.k.coeffs),
    ] {
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NotFinite { step, field });
        }
    }
    Ok(())
}
