//! Invariant checks on short runs: the discrete energy balance, the nodal
//! constraint identity, tangency of the update and nonnegative dissipation.

use crate::config::{DimensionlessModel, InitialCondition, Model, OutputSpec, PhysicalModel, RunConfig, TimeSpec};
use crate::error::Result;
use crate::integrator::SolverSettings;
use crate::presets::{cube_mesh, material};
use crate::runner::{self, Invariants};

pub const LAW_TOL: f64 = 1e-8;
pub const CONSTRAINT_TOL: f64 = 1e-12;
pub const TANGENCY_TOL: f64 = 1e-10;
pub const MONOTONE_SLACK: f64 = 1e-10;
/// The dissipation is a sum of quadratic forms; contractions of a vanishing
/// strain increment can round to tiny negative values.
pub const DISSIPATION_SLACK: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Check {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Hot 6 × 6 × 6 cube with every coupling term switched on.
pub fn builtin_config() -> RunConfig {
    let material = crate::units::PhysicalParams {
        alpha: 0.01,
        lambda100: 50.0 * material().lambda100,
        lambda111: 50.0 * material().lambda111,
        ..material()
    };
    let ms = material.ms;
    let mut mesh = cube_mesh(2);
    if let crate::config::MeshSpec::Box { neumann, .. } = &mut mesh {
        neumann.push(crate::mesh::BoxSide::ZMax);
    }
    RunConfig {
        mesh,
        model: Model::Physical(PhysicalModel {
            material,
            applied_field: [0.0, 1e-3 * ms, 0.0],
            traction: [0.0, 1e6, 0.0],
            volume_force: [0.0; 3],
            gravity: true,
        }),
        theta: 0.7,
        time: TimeSpec::Dimensionless { k: 0.05, t_final: 1.0 },
        unsafe_theta: false,
        initial: InitialCondition::Hot { seed: 7 },
        solver: SolverSettings::default(),
        output: OutputSpec::default(),
    }
}

/// Exchange-only relaxation of the same cube.
pub fn uncoupled_config() -> RunConfig {
    RunConfig {
        model: Model::Dimensionless(DimensionlessModel {
            alpha: 0.1,
            kappa: 1.0,
            mu: 1.0,
            lambda: 1.0,
            lambda100: 0.0,
            lambda111: 0.0,
            h_ext: [0.0; 3],
            f: [0.0; 3],
            g: [0.0; 3],
        }),
        ..builtin_config()
    }
}

pub fn check_invariants(label: &str, inv: &Invariants) -> Vec<Check> {
    vec![
        Check::new(
            format!("{label}: energy balance"),
            inv.law_residual <= LAW_TOL,
            format!("max relative residual {:.3e} over {} steps", inv.law_residual, inv.steps),
        ),
        Check::new(
            format!("{label}: dissipation"),
            inv.min_dissipation >= -DISSIPATION_SLACK,
            format!("smallest relative dissipation {:.3e}", inv.min_dissipation),
        ),
        Check::new(
            format!("{label}: constraint identity"),
            inv.constraint_identity <= CONSTRAINT_TOL,
            format!("max | |m|² − 1 − s | = {:.3e}", inv.constraint_identity),
        ),
        Check::new(
            format!("{label}: tangency"),
            inv.tangency <= TANGENCY_TOL,
            format!("max |m·v| = {:.3e}", inv.tangency),
        ),
    ]
}

/// Runs `steps` steps of `cfg` in memory and checks the invariants.
pub fn verify_config(label: &str, cfg: &RunConfig, steps: usize) -> Result<Vec<Check>> {
    let setup = runner::setup(cfg)?;
    let (_, inv) = runner::simulate(&setup, Some(steps), |_, _, _| Ok(()))?;
    Ok(check_invariants(label, &inv))
}

/// The full built-in suite.
pub fn run_verify() -> Result<Vec<Check>> {
    let mut checks = verify_config("coupled cube", &builtin_config(), 20)?;

    let cfg = uncoupled_config();
    let setup = runner::setup(&cfg)?;
    let mut exchange = Vec::new();
    let (_, inv) = runner::simulate(&setup, Some(20), |integ, state, _| {
        exchange.push(integ.energy(state).exchange);
        Ok(())
    })?;
    checks.extend(check_invariants("uncoupled cube", &inv));
    let worst_rise = exchange.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new(
        "uncoupled cube: exchange energy non-increasing",
        worst_rise <= MONOTONE_SLACK,
        format!("largest increase {worst_rise:.3e}"),
    ));
    Ok(checks)
}
