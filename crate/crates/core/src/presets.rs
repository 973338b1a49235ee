//! Ready-made experiment configurations.
//!
//! Material data are the FeCoSiB estimates with the length unit rounded to
//! 3 nm. Each preset expands to one configuration per swept value; output
//! names encode the value.

use std::path::Path;

use crate::config::{InitialCondition, MeshSpec, Model, OutputSpec, PhysicalModel, RunConfig, TimeSpec};
use crate::error::{Error, Result};
use crate::integrator::SolverSettings;
use crate::mesh::BoxSide;
use crate::units::PhysicalParams;

pub const PRESET_NAMES: [&str; 6] = [
    "applied_field",
    "traction",
    "nutation",
    "theta_sweep",
    "constraint_sweep",
    "cfl_robustness",
];

/// Smallest θ used in the sweeps, just above the stability threshold.
pub const THETA_NEAR_HALF: f64 = 0.50000005;

pub const APPLIED_FIELDS: [f64; 5] = [0.0, 1e-4, 3e-4, 5e-4, 7e-4];
pub const TRACTIONS: [f64; 5] = [0.0, 10.0, 25.0, 50.0, 100.0];
pub const NUTATION_MULTIPLIERS: [f64; 4] = [0.0, 20.0, 50.0, 100.0];
pub const THETAS: [f64; 7] = [THETA_NEAR_HALF, 0.505, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const CONSTRAINT_STEPS: [f64; 4] = [4e-3, 2e-3, 1e-3, 5e-4];
pub const CFL_STEPS: [f64; 5] = [0.01, 0.005, 0.0025, 0.00125, 0.000625];
/// Cube divisions giving mesh sizes of about 1.59, 1.09, 0.84 and 0.45
/// on a cube of edge 6.
pub const CFL_DIVISIONS: [usize; 4] = [4, 6, 8, 14];
pub const HOT_SEED: u64 = 2024;

pub fn material() -> PhysicalParams {
    PhysicalParams {
        length_scale: Some(3e-9),
        ..PhysicalParams::fecosib()
    }
}

fn time_scale(p: &PhysicalParams) -> f64 {
    1.0 / (p.gamma * p.mu0 * p.ms)
}

/// The 20 × 6 × 6 bar clamped at `x = 0` and loaded at `x = 20`.
pub fn bar_mesh(divisions: [usize; 3]) -> MeshSpec {
    MeshSpec::Box {
        lengths: [20.0, 6.0, 6.0],
        divisions,
        dirichlet: vec![BoxSide::XMin],
        neumann: vec![BoxSide::XMax],
    }
}

/// Cube of edge 6 clamped at its bottom face.
pub fn cube_mesh(divisions: usize) -> MeshSpec {
    MeshSpec::Box {
        lengths: [6.0; 3],
        divisions: [divisions; 3],
        dirichlet: vec![BoxSide::ZMin],
        neumann: vec![],
    }
}

fn output(preset: &str, member: String, stride: usize) -> OutputSpec {
    OutputSpec {
        dir: Path::new("out").join(preset),
        name: member,
        snapshot_stride: stride,
        hat_energy: false,
    }
}

fn bar(applied: f64, traction: f64, preset: &str, member: String) -> RunConfig {
    let material = material();
    let ms = material.ms;
    RunConfig {
        mesh: bar_mesh([22, 7, 7]),
        model: Model::Physical(PhysicalModel {
            material,
            applied_field: [0.0, applied * ms, 0.0],
            traction: [0.0, traction, 0.0],
            volume_force: [0.0; 3],
            gravity: true,
        }),
        theta: THETA_NEAR_HALF,
        time: TimeSpec::Seconds {
            time_step: 2e-12,
            final_time: 1e-9,
        },
        unsafe_theta: false,
        initial: InitialCondition::Uniform([1.0, 0.0, 0.0]),
        solver: SolverSettings::default(),
        output: output(preset, member, 50),
    }
}

/// Hot cube with damping 0.001 and no loads.
fn hot_cube(theta: f64, time: TimeSpec, preset: &str, member: String) -> RunConfig {
    RunConfig {
        mesh: cube_mesh(2),
        model: Model::Physical(PhysicalModel {
            material: PhysicalParams {
                alpha: 0.001,
                ..material()
            },
            ..PhysicalModel::default()
        }),
        theta,
        time,
        unsafe_theta: false,
        initial: InitialCondition::Hot { seed: HOT_SEED },
        solver: SolverSettings::default(),
        output: output(preset, member, 0),
    }
}

pub fn applied_field() -> Vec<RunConfig> {
    APPLIED_FIELDS
        .iter()
        .map(|&h| bar(h, 0.0, "applied_field", format!("h_{h:e}")))
        .collect()
}

pub fn traction() -> Vec<RunConfig> {
    TRACTIONS
        .iter()
        .map(|&g| bar(0.0, g, "traction", format!("g_{g}")))
        .collect()
}

pub fn nutation() -> Vec<RunConfig> {
    let base = material();
    NUTATION_MULTIPLIERS
        .iter()
        .map(|&mult| {
            let material = PhysicalParams {
                alpha: 0.1,
                lambda100: mult * base.lambda100,
                lambda111: mult * base.lambda111,
                ..base.clone()
            };
            let ms = material.ms;
            let t_final = 1e-10 / time_scale(&material);
            RunConfig {
                mesh: MeshSpec::Hemisphere {
                    radius: 1.0,
                    divisions: 3,
                },
                model: Model::Physical(PhysicalModel {
                    material,
                    applied_field: [ms, 0.0, 0.0],
                    traction: [0.0; 3],
                    volume_force: [0.0; 3],
                    gravity: true,
                }),
                theta: THETA_NEAR_HALF,
                time: TimeSpec::Dimensionless { k: 0.001, t_final },
                unsafe_theta: false,
                initial: InitialCondition::Uniform([0.9, 0.2, 0.0]),
                solver: SolverSettings::default(),
                output: output("nutation", format!("lambda_x{mult}"), 1000),
            }
        })
        .collect()
}

pub fn theta_sweep() -> Vec<RunConfig> {
    THETAS
        .iter()
        .map(|&theta| {
            let time = TimeSpec::Seconds {
                time_step: 1e-15,
                final_time: 1e-11,
            };
            hot_cube(theta, time, "theta_sweep", format!("theta_{theta}"))
        })
        .collect()
}

pub fn constraint_sweep() -> Vec<RunConfig> {
    let t_final = 1e-11 / time_scale(&material());
    CONSTRAINT_STEPS
        .iter()
        .map(|&k| {
            let time = TimeSpec::Dimensionless { k, t_final };
            hot_cube(THETA_NEAR_HALF, time, "constraint_sweep", format!("k_{k:e}"))
        })
        .collect()
}

/// `(divisions, k)` pairs of the robustness sweep: every step size on the
/// three coarser meshes, and only the largest step on the finest one.
pub fn cfl_pairs() -> Vec<(usize, f64)> {
    let mut pairs: Vec<(usize, f64)> = CFL_DIVISIONS[..3]
        .iter()
        .flat_map(|&n| CFL_STEPS.iter().map(move |&k| (n, k)))
        .collect();
    pairs.push((CFL_DIVISIONS[3], CFL_STEPS[0]));
    pairs
}

pub fn cfl_robustness() -> Vec<RunConfig> {
    let t_final = 1e-11 / time_scale(&material());
    cfl_pairs()
        .into_iter()
        .map(|(n, k)| {
            let mut cfg = hot_cube(
                THETA_NEAR_HALF,
                TimeSpec::Dimensionless { k, t_final },
                "cfl_robustness",
                format!("n{n}_k_{k:e}"),
            );
            cfg.mesh = cube_mesh(n);
            cfg.initial = InitialCondition::Sinusoidal;
            if let Model::Physical(p) = &mut cfg.model {
                p.applied_field = [0.001 * p.material.ms, 0.0, 0.0];
            }
            cfg
        })
        .collect()
}

pub fn preset(name: &str) -> Result<Vec<RunConfig>> {
    match name {
        "applied_field" => Ok(applied_field()),
        "traction" => Ok(traction()),
        "nutation" => Ok(nutation()),
        "theta_sweep" => Ok(theta_sweep()),
        "constraint_sweep" => Ok(constraint_sweep()),
        "cfl_robustness" => Ok(cfl_robustness()),
        other => Err(Error::Config(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESET_NAMES {
            let members = preset(name).unwrap();
            assert!(!members.is_empty());
            for cfg in &members {
                cfg.validate().unwrap();
                let again = RunConfig::parse(&cfg.to_ini_string()).unwrap();
                assert_eq!(&again, cfg, "{name}");
            }
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn theta_sweep_has_seven_members() {
        let thetas: Vec<f64> = theta_sweep().iter().map(|c| c.theta).collect();
        assert_eq!(thetas, THETAS.to_vec());
    }

    #[test]
    fn bar_time_grid() {
        let cfg = &applied_field()[0];
        let s = runner::scaling(cfg).unwrap().unwrap();
        let (k, t) = cfg.dimensionless_times(Some(s.time_scale)).unwrap();
        assert!((k - 0.66).abs() < 0.01, "k = {k}");
        assert!((t - 332.0).abs() < 2.0, "T = {t}");
    }
}
