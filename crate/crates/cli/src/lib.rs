//! Command-line driver: wires config files to the solver and writes every
//! artifact a run produces (mesh, snapshots, residual log, profiles, final
//! state). All subcommands funnel through [`cli_main`] so tests can invoke
//! the binary's behavior in-process.
//!
//! Exit codes: 0 success, 1 runtime failure (solver or output), 2 bad
//! usage or bad configuration. The `BRINKMAN_RANS_THREADS` variable caps
//! the worker pool; results never depend on it.

use anyhow::{anyhow, Context};
use brinkman_rans::fem::{Degree, DiscreteField, FunctionSpace, Mode};
use brinkman_rans::io::{
    extract_profile, load_state, parse_config, save_state, write_vtk, GeometrySource,
    ResidualLog, RunConfig,
};
use brinkman_rans::mesh::{generate_net_geometry, load_mesh, write_mesh, GeometryParams, Mesh};
use brinkman_rans::solver::{
    run_time_loop, solve_stokes_init, OutletBc, Problem, SolverState,
};
use brinkman_rans::verification::{
    advection_convergence, stokes_convergence, ConvergenceReport, StokesExact,
};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "brinkman-rans",
    about = "Axisymmetric flow through penalized net-like obstacles",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full time loop and write all outputs.
    Run(RunArgs),
    /// Solve and write the Stokes initialization only.
    Stokes(RunArgs),
    /// Generate the bundled geometry and write the mesh file.
    Mesh(MeshArgs),
    /// Run a convergence study and emit its report as CSV.
    Verify(VerifyArgs),
    /// Extract chord profiles from a saved final state.
    Profile(ProfileArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file; omitted means the reference configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured step budget.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the configured symmetry mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Override the configured outlet condition.
    #[arg(long, value_parser = parse_outlet)]
    outlet: Option<OutletBc>,
}

#[derive(Args)]
struct MeshArgs {
    /// Where to write the mesh.
    #[arg(long, default_value = "mesh.brmesh")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which study to run.
    #[arg(long, value_parser = ["stokes-trig", "advection"])]
    case: String,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Saved state written by `run`.
    #[arg(long)]
    state: PathBuf,
    /// Chord heights; repeatable.
    #[arg(long = "z", required = true)]
    z: Vec<f64>,
    /// Samples per chord.
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Directory for the CSV files; omitted prints to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "planar" => Ok(Mode::Planar),
        "axisymmetric" => Ok(Mode::Axisymmetric),
        _ => Err("expected planar or axisymmetric".into()),
    }
}

fn parse_outlet(s: &str) -> Result<OutletBc, String> {
    match s {
        "natural" => Ok(OutletBc::Natural),
        "ghost" => Ok(OutletBc::Ghost),
        _ => Err("expected natural or ghost".into()),
    }
}

pub fn cli_main<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Clap renders --help and --version as "errors" with exit 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(&args, true),
        Command::Stokes(args) => run_command(&args, false),
        Command::Mesh(args) => mesh_command(&args),
        Command::Verify(args) => verify_command(&args),
        Command::Profile(args) => profile_command(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            i32::from(exit_code(&e))
        }
    }
}

/// Configuration problems exit 2; everything downstream of a valid setup
/// exits 1.
struct ConfigStage(anyhow::Error);

impl std::fmt::Display for ConfigStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
impl std::fmt::Debug for ConfigStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
impl std::error::Error for ConfigStage {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<ConfigStage>()) {
        2
    } else {
        1
    }
}

fn load_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(path)
            .with_context(|| format!("configuration '{}'", path.display()))
            .map_err(|e| anyhow!(ConfigStage(e)))?,
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(steps) = args.steps {
        cfg.max_steps = steps;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(outlet) = args.outlet {
        cfg.outlet = outlet;
    }
    Ok(cfg)
}

fn build_mesh(cfg: &RunConfig) -> anyhow::Result<Arc<Mesh>> {
    let mesh = match &cfg.geometry {
        GeometrySource::Bundled => generate_net_geometry(&GeometryParams::default())?,
        GeometrySource::File(path) => load_mesh(path)
            .with_context(|| format!("mesh '{}'", path.display()))
            .map_err(|e| anyhow!(ConfigStage(e)))?,
    };
    Ok(Arc::new(mesh))
}

fn build_problem(cfg: &RunConfig, mesh: Arc<Mesh>) -> anyhow::Result<Problem> {
    let ell_max = mesh.longest_edges().iter().cloned().fold(0.0, f64::max);
    Problem::new(
        mesh,
        cfg.mode,
        cfg.turbulence_params(ell_max),
        cfg.flow_bc(),
        &cfg.permeability,
        cfg.dt,
        cfg.substeps,
        cfg.production,
        cfg.k0,
    )
    .map_err(|e| anyhow!(ConfigStage(anyhow!(e))))
}

fn check_profiles(cfg: &RunConfig, mesh: &Mesh) -> anyhow::Result<()> {
    let (lo, hi) = mesh.bounds();
    for &z in &cfg.profiles {
        if !(z >= lo[1] && z <= hi[1]) {
            return Err(anyhow!(ConfigStage(anyhow!(
                "profile height {z} lies outside the box [{}, {}]",
                lo[1],
                hi[1]
            ))));
        }
    }
    Ok(())
}

fn run_command(args: &RunArgs, full_loop: bool) -> anyhow::Result<()> {
    let cfg = load_config(args)?;
    let mesh = build_mesh(&cfg)?;
    check_profiles(&cfg, &mesh)?;
    let prob = build_problem(&cfg, mesh.clone())?;

    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating '{}'", cfg.out_dir.display()))?;
    write_mesh(&cfg.out_dir.join("mesh.brmesh"), &mesh)?;

    if !full_loop {
        let (u, p) = solve_stokes_init(&prob)?;
        let k = DiscreteField::constant(
            Arc::new(FunctionSpace::new(mesh.clone(), Degree::P2)),
            &[cfg.k0],
        );
        write_vtk(&cfg.out_dir.join("stokes.vtk"), &mesh, &u, &p, &k)?;
        println!(
            "stokes init on {} vertices written to {}",
            mesh.n_vertices(),
            cfg.out_dir.join("stokes.vtk").display()
        );
        return Ok(());
    }

    let mut log = ResidualLog::create(&cfg.out_dir.join("residuals.csv"))?;
    let mut log_err = None;
    let snapshot_every = cfg.snapshot_every;
    let out_dir = cfg.out_dir.clone();
    let state = run_time_loop(&prob, &cfg.run_options(), &mut |s, _| {
        // Every completed step is flushed before the next begins, so an
        // aborted run keeps its history; write failures surface afterwards.
        if let Err(e) = log.append(s.residuals.last().expect("loop pushes before callback")) {
            log_err.get_or_insert(e);
        }
        if snapshot_every > 0 && s.step % snapshot_every == 0 {
            let path = out_dir.join(format!("fields_{:04}.vtk", s.step));
            if let Err(e) = write_vtk(&path, &mesh, &s.u, &s.p, &s.k) {
                log_err.get_or_insert(e);
            }
        }
    });
    let state = state?;
    if let Some(e) = log_err {
        return Err(anyhow::Error::from(e).context("writing outputs during the run"));
    }

    write_outputs(&cfg, &mesh, &state)?;
    report_run(&cfg, &state);
    Ok(())
}

fn write_outputs(cfg: &RunConfig, mesh: &Arc<Mesh>, state: &SolverState) -> anyhow::Result<()> {
    write_vtk(&cfg.out_dir.join("fields.vtk"), mesh, &state.u, &state.p, &state.k)?;
    save_state(
        &cfg.out_dir.join("state.brstate"),
        Path::new("mesh.brmesh"),
        &state.u,
        &state.p,
        &state.k,
        state.step,
        state.time,
    )?;
    for &z in &cfg.profiles {
        let prof = extract_profile(mesh, &state.u, &state.p, &state.k, z, 201)?;
        prof.write_csv(&cfg.out_dir.join(format!("profile_z{z}.csv")))?;
    }
    Ok(())
}

fn report_run(cfg: &RunConfig, state: &SolverState) {
    if let Some(r) = state.residuals.last() {
        let reached = r.r_u < cfg.residual_u && r.r_k < cfg.residual_k;
        println!(
            "{} after {} steps: r_u = {:.6e}, r_k = {:.6e}",
            if reached { "steady" } else { "stopped" },
            state.step,
            r.r_u,
            r.r_k
        );
    } else {
        println!("no steps taken (max_steps = 0); initialization written");
    }
    for w in &state.warnings {
        eprintln!("warning: {w}");
    }
    println!("outputs in {}", cfg.out_dir.display());
}

fn mesh_command(args: &MeshArgs) -> anyhow::Result<()> {
    let mesh = generate_net_geometry(&GeometryParams::default())?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_mesh(&args.out, &mesh)?;
    println!(
        "{} vertices, {} triangles written to {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        args.out.display()
    );
    Ok(())
}

fn verify_command(args: &VerifyArgs) -> anyhow::Result<()> {
    let report: ConvergenceReport = match args.case.as_str() {
        "stokes-trig" => stokes_convergence(
            &StokesExact::trigonometric(),
            &[8, 16, 32],
            1.0,
            &Default::default(),
        )?,
        "advection" => advection_convergence(&[16, 32, 64], 1.0)?,
        other => unreachable!("clap filters cases, got {other}"),
    };
    eprintln!("{}", report.render_text());
    match &args.out {
        Some(path) => std::fs::write(path, report.to_csv())
            .with_context(|| format!("writing '{}'", path.display()))?,
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn profile_command(args: &ProfileArgs) -> anyhow::Result<()> {
    let saved = load_state(&args.state)
        .with_context(|| format!("state '{}'", args.state.display()))?;
    for &z in &args.z {
        let prof = extract_profile(&saved.mesh, &saved.u, &saved.p, &saved.k, z, args.samples)?;
        match &args.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                prof.write_csv(&dir.join(format!("profile_z{z}.csv")))?;
            }
            None => print!("{}", prof.to_csv()),
        }
    }
    Ok(())
}
