use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use mellg_core::config::{MeshSpec, RunConfig};
use mellg_core::mesh::{read_msh, BoundaryRegion, Mesh};
use mellg_core::presets;
use mellg_core::runner::{self, RunSummary};
use mellg_core::verify;

/// Finite-element simulator for magnetoelastic Landau-Lifshitz-Gilbert dynamics.
#[derive(Parser, Debug)]
#[command(name = "mellg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation described by an INI config file.
    Run {
        config: PathBuf,
        /// Override a value, as in `--set time.theta=1`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
        /// Stop after this many steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run every member of a built-in experiment.
    Preset {
        /// One of applied_field, traction, nutation, theta_sweep,
        /// constraint_sweep, cfl_robustness.
        name: String,
        /// Overrides applied to every member, as in `time.theta=1`.
        overrides: Vec<String>,
        /// Output directory (default `out/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop each member after this many steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Write the member configs into the output directory instead of running.
        #[arg(long)]
        dump: bool,
    },
    /// Check the discrete invariants on a small built-in cube.
    Verify,
    /// Print counts, volumes and boundary areas of a mesh (.msh file or config).
    MeshInfo {
        path: PathBuf,
        /// Tags treated as Dirichlet, Neumann and other for .msh input.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        dirichlet_tags: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        neumann_tags: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_value = "3")]
        other_tags: Vec<i64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain on one line, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    configure_threads()?;
    match cmd {
        Command::Run {
            config,
            overrides,
            steps,
        } => {
            let cfg = RunConfig::load(&config)
                .with_context(|| format!("cannot load config {}", config.display()))?
                .with_overrides(&overrides)?;
            let summary = runner::run_config_with(&cfg, steps)?;
            print_summary(&summary);
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset {
            name,
            overrides,
            out,
            steps,
            dump,
        } => preset(&name, &overrides, out, steps, dump),
        Command::Verify => {
            let checks = verify::run_verify()?;
            let mut ok = true;
            for c in &checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::MeshInfo {
            path,
            dirichlet_tags,
            neumann_tags,
            other_tags,
        } => {
            let mesh = load_mesh(&path, &dirichlet_tags, &neumann_tags, &other_tags)?;
            print_mesh_info(&mesh);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Caps the worker pool at `MELLG_THREADS` when set.
fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MELLG_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("MELLG_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("MELLG_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn preset(name: &str, overrides: &[String], out: Option<PathBuf>, steps: Option<usize>, dump: bool) -> Result<ExitCode> {
    let members = presets::preset(name).map_err(anyhow::Error::new)?;
    let dir = out.unwrap_or_else(|| Path::new("out").join(name));
    let members = members
        .into_iter()
        .map(|cfg| {
            let mut cfg = cfg.with_overrides(overrides)?;
            cfg.output.dir = dir.clone();
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    if dump {
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for cfg in &members {
            let path = dir.join(format!("{}.ini", cfg.output.name));
            std::fs::write(&path, cfg.to_ini_string()).with_context(|| format!("cannot write {}", path.display()))?;
            println!("{}", path.display());
        }
        return Ok(ExitCode::SUCCESS);
    }
    log::info!("preset {name}: {} members", members.len());
    let results: Vec<_> = members
        .par_iter()
        .map(|cfg| (cfg.output.name.clone(), runner::run_config_with(cfg, steps)))
        .collect();
    let mut failed = 0;
    for (member, r) in results {
        match r {
            Ok(s) => print_summary(&s),
            Err(e) => {
                failed += 1;
                eprintln!("error: {member}: {}", describe(&anyhow::Error::new(e)));
            }
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn load_mesh(path: &Path, dirichlet: &[i64], neumann: &[i64], other: &[i64]) -> Result<Mesh> {
    let is_msh = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("msh"));
    if is_msh {
        let mut map = HashMap::new();
        for (tags, region) in [
            (other, BoundaryRegion::Other),
            (neumann, BoundaryRegion::Neumann),
            (dirichlet, BoundaryRegion::Dirichlet),
        ] {
            for &t in tags {
                map.insert(t, region);
            }
        }
        return read_msh(path, &map).with_context(|| format!("cannot read mesh {}", path.display()));
    }
    let cfg = RunConfig::load(path).with_context(|| format!("cannot load config {}", path.display()))?;
    if let MeshSpec::Msh { path: p, .. } = &cfg.mesh {
        log::info!("mesh file {}", p.display());
    }
    Ok(runner::build_mesh(&cfg.mesh)?)
}

fn print_mesh_info(mesh: &Mesh) {
    println!("nodes: {}", mesh.n_nodes());
    println!("tets: {}", mesh.n_tets());
    println!("boundary faces: {}", mesh.boundary_faces().len());
    println!("volume: {:.6e}", mesh.total_volume());
    let (lo, hi) = mesh
        .tets()
        .iter()
        .enumerate()
        .map(|(t, _)| mesh.volume(t))
        .fold((f64::INFINITY, 0.0_f64), |(a, b), v| (a.min(v), b.max(v)));
    println!("tet volume min/max: {lo:.6e} / {hi:.6e}");
    println!("max edge: {:.6e}", mesh.max_edge());
    for (name, region) in [
        ("dirichlet", BoundaryRegion::Dirichlet),
        ("neumann", BoundaryRegion::Neumann),
        ("other", BoundaryRegion::Other),
    ] {
        println!(
            "{name}: {} faces, area {:.6e}",
            mesh.faces_in(region).count(),
            mesh.region_area(region)
        );
    }
}

fn print_summary(s: &RunSummary) {
    let a = s.final_averages;
    println!(
        "{}: {} steps in {:.1?}, total energy {:.6e}, <m> = ({:.4}, {:.4}, {:.4}), constraint {:.3e}, worst energy residual {:.3e}, wrote {}",
        s.name,
        s.steps,
        s.wall_time,
        s.final_energy.total(),
        a[0],
        a[1],
        a[2],
        s.constraint_l1,
        s.invariants.law_residual,
        s.csv.display()
    );
}
