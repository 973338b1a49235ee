//! Turns a [`RunConfig`] into a mesh, parameters and an initial state, and
//! drives a run while writing its outputs.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitialCondition, MeshSpec, Model, RunConfig};
use crate::diagnostics::{self, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::fem::{nodal_interpolate, DirichletMask, FieldSource, NodalField};
use crate::integrator::{random_unit_field, Integrator, SimulationParams, State, StepReport};
use crate::mesh::{box_mesh, hemisphere_mesh, read_msh, BoundaryRegion, Mesh};
use crate::output::{write_vtk, CsvRow, CsvWriter};
use crate::tensor::{build_cubic_z, build_isotropic_c, build_isotropic_z};
use crate::units::{nondimensionalise, Scaling};
use crate::vec3::{self, Vec3};

/// Everything needed to start integrating.
#[derive(Clone, Debug)]
pub struct Setup {
    pub mesh: Mesh,
    pub params: SimulationParams,
    pub initial: State,
    /// Present when the model was given in physical units.
    pub scaling: Option<Scaling>,
}

pub fn build_mesh(spec: &MeshSpec) -> Result<Mesh> {
    match spec {
        MeshSpec::Box {
            lengths,
            divisions,
            dirichlet,
            neumann,
        } => box_mesh(
            *lengths,
            *divisions,
            |p| dirichlet.iter().any(|s| s.contains(*lengths, p)),
            |p| neumann.iter().any(|s| s.contains(*lengths, p)),
        ),
        MeshSpec::Hemisphere { radius, divisions } => hemisphere_mesh(*radius, *divisions),
        MeshSpec::Msh {
            path,
            dirichlet_tags,
            neumann_tags,
            other_tags,
        } => {
            let mut map = std::collections::HashMap::new();
            for (tags, region) in [
                (other_tags, BoundaryRegion::Other),
                (neumann_tags, BoundaryRegion::Neumann),
                (dirichlet_tags, BoundaryRegion::Dirichlet),
            ] {
                for &t in tags {
                    map.insert(t, region);
                }
            }
            read_msh(path, &map)
        }
    }
}

pub fn scaling(cfg: &RunConfig) -> Result<Option<Scaling>> {
    match &cfg.model {
        Model::Physical(p) => Ok(Some(nondimensionalise(&p.material)?)),
        Model::Dimensionless(_) => Ok(None),
    }
}

pub fn build_params(cfg: &RunConfig, scaling: Option<&Scaling>) -> Result<SimulationParams> {
    let (k, t_final) = cfg.dimensionless_times(scaling.map(|s| s.time_scale))?;
    let mut p = SimulationParams::uncoupled(1.0, cfg.theta, k, t_final);
    match (&cfg.model, scaling) {
        (Model::Physical(m), Some(s)) => {
            p.alpha = m.material.alpha;
            p.kappa = s.kappa;
            p.c = s.stiffness.clone();
            p.z = s.magnetostriction.clone();
            p.h_ext = FieldSource::Constant(s.applied_field(m.applied_field));
            let mut f = s.volume_force(m.volume_force);
            if m.gravity {
                f = vec3::add(f, s.gravity);
            }
            p.f = FieldSource::Constant(f);
            p.g = FieldSource::Constant(s.traction(m.traction));
        }
        (Model::Dimensionless(d), _) => {
            p.alpha = d.alpha;
            p.kappa = d.kappa;
            p.c = build_isotropic_c(d.mu, d.lambda)?;
            p.z = if d.lambda100 == d.lambda111 {
                build_isotropic_z(d.lambda100)
            } else {
                build_cubic_z(d.lambda100, d.lambda111, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])?
            };
            p.h_ext = FieldSource::Constant(d.h_ext);
            p.f = FieldSource::Constant(d.f);
            p.g = FieldSource::Constant(d.g);
        }
        (Model::Physical(_), None) => return Err(Error::Config("physical model needs its scaling".into())),
    }
    p.solver = cfg.solver.clone();
    p.allow_unsafe_theta = cfg.unsafe_theta;
    Ok(p)
}

/// Named initial magnetisations. The second argument is the centre of the
/// mesh bounding box.
pub fn initial_callback(name: &str) -> Option<fn(Vec3, Vec3) -> Vec3> {
    fn vortex(p: Vec3, c: Vec3) -> Vec3 {
        [0.2, -(p[2] - c[2]), p[1] - c[1]]
    }
    fn helix(p: Vec3, _: Vec3) -> Vec3 {
        [p[0].cos(), p[0].sin(), 0.0]
    }
    match name {
        "vortex" => Some(vortex),
        "helix" => Some(helix),
        _ => None,
    }
}

pub const CALLBACK_NAMES: [&str; 2] = ["vortex", "helix"];

/// `(2, sin(x+y+z), cos(x+y+z)) / √5`, unit length everywhere.
pub fn sinusoidal(p: Vec3) -> Vec3 {
    let s = p[0] + p[1] + p[2];
    vec3::scale(1.0 / 5f64.sqrt(), [2.0, s.sin(), s.cos()])
}

/// Nodal values of the initial magnetisation before normalisation.
pub fn initial_magnetisation(ic: &InitialCondition, mesh: &Mesh) -> Result<NodalField> {
    let n = mesh.n_nodes();
    Ok(match ic {
        InitialCondition::Uniform(d) => NodalField::constant(n, *d),
        InitialCondition::Perturbed {
            direction,
            amplitude,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            NodalField {
                values: (0..n)
                    .map(|_| {
                        let noise: Vec3 = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
                        vec3::axpy(*direction, *amplitude, noise)
                    })
                    .collect(),
            }
        }
        InitialCondition::Hot { seed } => random_unit_field(n, *seed),
        InitialCondition::Sinusoidal => nodal_interpolate(mesh, sinusoidal),
        InitialCondition::Callback(name) => {
            let f = initial_callback(name).ok_or_else(|| {
                Error::Config(format!(
                    "unknown initial callback `{name}`; available: {}",
                    CALLBACK_NAMES.join(", ")
                ))
            })?;
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for p in mesh.nodes() {
                for i in 0..3 {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
            let c = vec3::scale(0.5, vec3::add(lo, hi));
            nodal_interpolate(mesh, |p| f(p, c))
        }
    })
}

pub fn setup(cfg: &RunConfig) -> Result<Setup> {
    cfg.validate()?;
    let mesh = build_mesh(&cfg.mesh)?;
    let scaling = scaling(cfg)?;
    let params = build_params(cfg, scaling.as_ref())?;
    params.validate()?;
    let mask = DirichletMask::from_mesh(&mesh)?;
    let n = mesh.n_nodes();
    let m0 = initial_magnetisation(&cfg.initial, &mesh)?;
    let initial = State::from_fields(&mask, m0, NodalField::zeros(n), NodalField::zeros(n))?;
    Ok(Setup {
        mesh,
        params,
        initial,
        scaling,
    })
}

/// Worst values of the per-step invariants seen during a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Invariants {
    pub steps: usize,
    /// `|residual| / max(1, |E_total|)`
    pub law_residual: f64,
    /// Smallest total numerical dissipation relative to `max(1, |E_total|)`.
    pub min_dissipation: f64,
    /// `max_z | |m(z)|² − 1 − s(z) |`
    pub constraint_identity: f64,
    /// `max_z |m(z)·v(z)|` against the magnetisation the step started from.
    pub tangency: f64,
}

impl Invariants {
    pub fn record(&mut self, m_before: &NodalField, report: &StepReport, after: &State) {
        self.steps += 1;
        self.law_residual = self.law_residual.max(report.law.residual.abs() / report.law.scale());
        let dmin = report.law.d_total() / report.law.scale();
        self.min_dissipation = if self.steps == 1 { dmin } else { self.min_dissipation.min(dmin) };
        for (z, (&m, &v)) in m_before.values.iter().zip(&report.v.values).enumerate() {
            self.tangency = self.tangency.max(vec3::dot(m, v).abs());
            let mz = after.m.values[z];
            let gap = (vec3::dot(mz, mz) - 1.0 - after.s[z]).abs();
            self.constraint_identity = self.constraint_identity.max(gap);
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub name: String,
    pub steps: usize,
    pub csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub final_energy: EnergyBreakdown,
    pub final_averages: [f64; 6],
    pub constraint_l1: f64,
    pub nodal_max: f64,
    pub invariants: Invariants,
    pub wall_time: Duration,
}

/// Integrates `setup` for up to `limit` steps (default: to the final time),
/// calling `observer` after the initial state and after every step.
pub fn simulate(
    setup: &Setup,
    limit: Option<usize>,
    mut observer: impl FnMut(&Integrator<'_>, &State, Option<&StepReport>) -> Result<()>,
) -> Result<(State, Invariants)> {
    let mut integ = Integrator::new(&setup.mesh, setup.params.clone())?;
    let mut state = setup.initial.clone();
    let mut inv = Invariants::default();
    observer(&integ, &state, None)?;
    let n = limit.map_or(setup.params.n_steps(), |l| l.min(setup.params.n_steps()));
    for _ in 0..n {
        let m_before = state.m.clone();
        let report = integ.step(&mut state)?;
        inv.record(&m_before, &report, &state);
        observer(&integ, &state, Some(&report))?;
    }
    Ok((state, inv))
}

fn row(setup: &Setup, energy: EnergyBreakdown, state: &State, residual: f64) -> CsvRow {
    let (constraint_l1, nodal_max) = diagnostics::constraint_metrics(&setup.mesh, state);
    CsvRow {
        t: setup.scaling.as_ref().map_or(state.t, |s| s.seconds(state.t)),
        averages: diagnostics::averages(&setup.mesh, state),
        energy,
        constraint_l1,
        nodal_max,
        energy_residual: residual,
    }
}

/// Runs a configuration and writes its CSV and snapshots into the output
/// directory.
pub fn run_config(cfg: &RunConfig) -> Result<RunSummary> {
    run_config_with(cfg, None)
}

pub fn run_config_with(cfg: &RunConfig, limit: Option<usize>) -> Result<RunSummary> {
    let start = Instant::now();
    let setup = setup(cfg)?;
    let out = &cfg.output;
    std::fs::create_dir_all(&out.dir).map_err(|e| Error::io(&out.dir, e))?;
    let csv_path = out.dir.join(format!("{}.csv", out.name));
    let mut csv = CsvWriter::create(&csv_path)?;
    let mut hat = if out.hat_energy {
        Some(CsvWriter::create(&out.dir.join(format!("{}_hat.csv", out.name)))?)
    } else {
        None
    };
    let mut snapshots = Vec::new();
    let total = limit.map_or(setup.params.n_steps(), |l| l.min(setup.params.n_steps()));
    let mut last = None;
    let (state, invariants) = simulate(&setup, limit, |integ, state, report| {
        let energy = report.map_or_else(|| integ.energy(state), |r| r.energy);
        let residual = report.map_or(0.0, |r| r.law.residual);
        let r = row(&setup, energy, state, residual);
        csv.write(&r)?;
        if let Some(h) = hat.as_mut() {
            let he = diagnostics::hat_energy(integ.mesh(), state, integ.params(), integ.assemblies());
            h.write(&CsvRow { energy: he, ..r })?;
        }
        if out.snapshot_stride > 0 && state.step % out.snapshot_stride == 0 {
            let path = out.dir.join(format!("{}_{:06}.vtk", out.name, state.step));
            let title = format!("{} step {} t {:e}", out.name, state.step, r.t);
            write_vtk(&path, &setup.mesh, &state.m, &state.u, &title)?;
            snapshots.push(path);
        }
        if total >= 10 && state.step % (total / 10) == 0 && state.step > 0 {
            log::info!("{}: step {}/{} energy {:.6e}", out.name, state.step, total, energy.total());
        }
        last = Some(r);
        Ok(())
    })?;
    let csv = csv.finish()?;
    if let Some(h) = hat {
        h.finish()?;
    }
    let last = last.expect("initial row is always written");
    Ok(RunSummary {
        name: out.name.clone(),
        steps: state.step,
        csv,
        snapshots,
        final_energy: last.energy,
        final_averages: last.averages,
        constraint_l1: last.constraint_l1,
        nodal_max: last.nodal_max,
        invariants,
        wall_time: start.elapsed(),
    })
}
