//! The decoupled time loop: a tangent-plane solve for the magnetisation
//! velocity, the explicit update `m ← m + k v`, and an implicit step for the
//! displacement.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{self, EnergyBreakdown, EnergyLawReport};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_consistent_mass, assemble_elastic_stiffness, assemble_llg_rhs, assemble_loads, assemble_lumped_mass,
    assemble_magnetostrain_load, assemble_vector_laplacian, nodal_interpolate, nodal_project, DirichletMask,
    FieldSource, LlgRhsParams, NodalField,
};
use crate::mesh::Mesh;
use crate::sparse::{
    cg_solve, gmres_solve_with, nullspace_expand, nullspace_reduce, reduce_vector, tangent_basis, CsrMatrix, Ilu0,
    Jacobi, Preconditioner, SolveStats, DEFAULT_RESTART, DEFAULT_TOL,
};
use crate::tensor::{Symmetry, Tensor4};
use crate::vec3::{self, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub restart: usize,
    pub maxit: usize,
    /// Reuse the first step's ILU factors instead of refactoring every step.
    pub freeze_ilu: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: DEFAULT_TOL,
            restart: DEFAULT_RESTART,
            maxit: 5000,
            freeze_ilu: false,
        }
    }
}

/// Dimensionless model and discretisation parameters.
#[derive(Clone, Debug)]
pub struct SimulationParams {
    pub alpha: f64,
    pub theta: f64,
    /// Time step.
    pub k: f64,
    pub t_final: f64,
    pub kappa: f64,
    pub c: Tensor4,
    pub z: Tensor4,
    pub h_ext: FieldSource,
    pub f: FieldSource,
    pub g: FieldSource,
    pub solver: SolverSettings,
    /// Permit θ ≤ 1/2, where stability needs a CFL-type restriction.
    pub allow_unsafe_theta: bool,
}

impl SimulationParams {
    /// Pure exchange dynamics with unit elastic moduli and no coupling.
    pub fn uncoupled(alpha: f64, theta: f64, k: f64, t_final: f64) -> Self {
        SimulationParams {
            alpha,
            theta,
            k,
            t_final,
            kappa: 1.0,
            c: crate::tensor::build_isotropic_c(1.0, 1.0).expect("valid moduli"),
            z: Tensor4::zeros(Symmetry::Full),
            h_ext: FieldSource::zero(),
            f: FieldSource::zero(),
            g: FieldSource::zero(),
            solver: SolverSettings::default(),
            allow_unsafe_theta: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.k)));
        }
        if !(self.k < self.t_final) {
            return Err(Error::invalid(format!(
                "time step {} must be smaller than the final time {}",
                self.k, self.t_final
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid(format!("damping alpha must be positive, got {}", self.alpha)));
        }
        let safe = self.theta > 0.5 && self.theta <= 1.0;
        let unsafe_ok = self.allow_unsafe_theta && (0.0..=1.0).contains(&self.theta);
        if !safe && !unsafe_ok {
            return Err(Error::invalid(format!(
                "theta = {} is outside (1/2, 1]; values in [0, 1/2] need the unsafe-theta flag",
                self.theta
            )));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::invalid(format!("kappa must be non-negative, got {}", self.kappa)));
        }
        if self.c.symmetry() != Symmetry::Full {
            return Err(Error::invalid("stiffness tensor must be fully symmetric"));
        }
        if !(self.solver.tol > 0.0) || self.solver.restart == 0 || self.solver.maxit == 0 {
            return Err(Error::invalid("solver tolerance, restart and maxit must be positive"));
        }
        Ok(())
    }

    /// Number of steps `⌈T/k⌉`, ignoring rounding noise in the ratio.
    pub fn n_steps(&self) -> usize {
        let r = self.t_final / self.k;
        (r - 1e-9 * r.max(1.0)).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub step: usize,
    pub t: f64,
    pub m: NodalField,
    pub u: NodalField,
    /// Discrete velocity `(u^i − u^{i−1}) / k`, the initial velocity at step 0.
    pub udot: NodalField,
    /// Previous tangent velocity, used as the initial guess.
    pub v_prev: NodalField,
    /// Per-node sum `k² Σ |v(z)|²` of the updates so far.
    pub s: Vec<f64>,
}

impl State {
    /// Initial state from nodal data. `m0` is normalised nodewise and `u0`
    /// is zeroed on the clamped nodes.
    pub fn from_fields(mask: &DirichletMask, m0: NodalField, mut u0: NodalField, udot0: NodalField) -> Result<State> {
        let n = m0.len();
        if u0.len() != n || udot0.len() != n || mask.nodes().len() != n {
            return Err(Error::invalid("initial fields and mask must have one entry per node"));
        }
        let mut m = m0;
        for (z, v) in m.values.iter_mut().enumerate() {
            let len = vec3::norm(*v);
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::invalid(format!("initial magnetisation vanishes at node {z}")));
            }
            *v = vec3::scale(1.0 / len, *v);
        }
        mask.zero_field(&mut u0);
        Ok(State {
            step: 0,
            t: 0.0,
            m,
            u: u0,
            udot: udot0,
            v_prev: NodalField::zeros(n),
            s: vec![0.0; n],
        })
    }
}

pub fn init_state(
    mesh: &Mesh,
    mask: &DirichletMask,
    m0: impl Fn(Vec3) -> Vec3,
    u0: impl Fn(Vec3) -> Vec3,
    udot0: impl Fn(Vec3) -> Vec3,
) -> Result<State> {
    State::from_fields(
        mask,
        nodal_interpolate(mesh, m0),
        nodal_interpolate(mesh, u0),
        nodal_interpolate(mesh, udot0),
    )
}

/// Per-node samples from the cube `[−1, 1]³` (rejecting near-zero draws),
/// normalised.
pub fn random_unit_field(n: usize, seed: u64) -> NodalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| loop {
            let v: Vec3 = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            let len = vec3::norm(v);
            if len >= 1e-6 {
                break vec3::scale(1.0 / len, v);
            }
        })
        .collect();
    NodalField { values }
}

/// Matrices that do not change during a run.
#[derive(Clone, Debug)]
pub struct Assemblies {
    pub mask: DirichletMask,
    pub lumped: CsrMatrix,
    pub laplacian: CsrMatrix,
    pub mass: CsrMatrix,
    /// Unconstrained elastic stiffness.
    pub stiffness: CsrMatrix,
    /// `α·lumped + θk·laplacian` with explicit zero 3×3 node blocks.
    pub llg_base: CsrMatrix,
    /// `M + k²K` with Dirichlet elimination.
    pub elastic_system: CsrMatrix,
    /// Volume and surface loads.
    pub loads: Vec<f64>,
}

impl Assemblies {
    pub fn new(mesh: &Mesh, params: &SimulationParams) -> Result<Self> {
        let mask = DirichletMask::from_mesh(mesh)?;
        let lumped = assemble_lumped_mass(mesh);
        let laplacian = assemble_vector_laplacian(mesh);
        let mass = assemble_consistent_mass(mesh);
        let stiffness = assemble_elastic_stiffness(mesh, &params.c, None);
        let n = mesh.n_nodes();
        let mut pattern = Vec::with_capacity(9 * n);
        for z in 0..n {
            for i in 0..3 {
                for j in 0..3 {
                    pattern.push((3 * z + i, 3 * z + j, 0.0));
                }
            }
        }
        let blocks = CsrMatrix::from_triplets(3 * n, &pattern)?;
        let llg_base = lumped
            .linear_combination(params.alpha, &laplacian, params.theta * params.k)?
            .linear_combination(1.0, &blocks, 1.0)?;
        let mut elastic_system = mass.linear_combination(1.0, &stiffness, params.k * params.k)?;
        elastic_system.eliminate(&mask.dofs());
        let loads = assemble_loads(mesh, &params.f, &params.g);
        Ok(Assemblies {
            mask,
            lumped,
            laplacian,
            mass,
            stiffness,
            llg_base,
            elastic_system,
            loads,
        })
    }
}

fn llg_system(mesh: &Mesh, state: &State, asm: &Assemblies, params: &SimulationParams) -> Result<(CsrMatrix, Vec<f64>)> {
    let mut a = asm.llg_base.clone();
    for (z, (&w, &m)) in mesh.lumped_weights().iter().zip(&state.m.values).enumerate() {
        let sk = vec3::skew(m);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let pos = a.position(3 * z + i, 3 * z + j).expect("block pattern is stored");
                    a.values_mut()[pos] += w * sk[i][j];
                }
            }
        }
    }
    let rhs = assemble_llg_rhs(
        mesh,
        &state.m,
        &state.u,
        &LlgRhsParams {
            c: &params.c,
            z: &params.z,
            kappa: params.kappa,
            h_ext: &params.h_ext,
        },
    )?;
    Ok((a, rhs))
}

/// Tangent velocity `v` of the current step, with the solver statistics.
pub fn llg_substep(
    mesh: &Mesh,
    state: &State,
    asm: &Assemblies,
    params: &SimulationParams,
) -> Result<(NodalField, SolveStats)> {
    llg_substep_with(mesh, state, asm, params, None)
}

/// As [`llg_substep`], optionally with a fixed preconditioner for the
/// reduced system.
pub fn llg_substep_with(
    mesh: &Mesh,
    state: &State,
    asm: &Assemblies,
    params: &SimulationParams,
    precond: Option<&dyn Preconditioner>,
) -> Result<(NodalField, SolveStats)> {
    let (a, rhs) = llg_system(mesh, state, asm, params)?;
    let basis = tangent_basis(&state.m.values)?;
    let (a_red, b_red) = nullspace_reduce(&a, &rhs, &basis)?;
    let x0 = reduce_vector(state.v_prev.flat(), &basis);
    let s = &params.solver;
    let (x, stats) = match precond {
        Some(p) => gmres_solve_with(&a_red, &b_red, Some(&x0), s.tol, s.restart, s.maxit, p)?,
        None => match Ilu0::new(&a_red) {
            Ok(ilu) => gmres_solve_with(&a_red, &b_red, Some(&x0), s.tol, s.restart, s.maxit, &ilu)?,
            Err(e) => {
                log::warn!("{e}; falling back to Jacobi preconditioning");
                gmres_solve_with(&a_red, &b_red, Some(&x0), s.tol, s.restart, s.maxit, &Jacobi::new(&a_red))?
            }
        },
    };
    Ok((
        NodalField {
            values: nullspace_expand(&x, &basis),
        },
        stats,
    ))
}

/// `m + k v`
pub fn magnetisation_update(m: &NodalField, v: &NodalField, k: f64) -> NodalField {
    NodalField {
        values: m.values.iter().zip(&v.values).map(|(&a, &b)| vec3::axpy(a, k, b)).collect(),
    }
}

/// Displacement and discrete velocity after the step, given the updated
/// magnetisation.
pub fn elastic_substep(
    mesh: &Mesh,
    state: &State,
    m_new: &NodalField,
    asm: &Assemblies,
    params: &SimulationParams,
) -> Result<(NodalField, NodalField, SolveStats)> {
    let k = params.k;
    let pm = nodal_project(m_new)?;
    let strain_load = assemble_magnetostrain_load(mesh, &params.c, &params.z, &pm);
    let mut predictor = state.u.clone();
    for (p, v) in predictor.values.iter_mut().zip(&state.udot.values) {
        *p = vec3::axpy(*p, k, *v);
    }
    let inertia = asm.mass.matvec(predictor.flat());
    let mut rhs: Vec<f64> = (0..inertia.len())
        .map(|i| k * k * (strain_load[i] + asm.loads[i]) + inertia[i])
        .collect();
    asm.mask.zero_vector(&mut rhs);
    asm.mask.zero_field(&mut predictor);
    let s = &params.solver;
    let (x, stats) = cg_solve(&asm.elastic_system, &rhs, Some(predictor.flat()), s.tol, s.maxit)?;
    let u_new = NodalField::from_flat(&x);
    let udot_new = NodalField {
        values: u_new
            .values
            .iter()
            .zip(&state.u.values)
            .map(|(&a, &b)| vec3::scale(1.0 / k, vec3::sub(a, b)))
            .collect(),
    };
    Ok((u_new, udot_new, stats))
}

#[derive(Clone, Debug)]
pub struct StepReport {
    /// Index of the state after the step.
    pub step: usize,
    pub t: f64,
    pub v: NodalField,
    pub llg_iterations: usize,
    pub elastic_iterations: usize,
    pub wall_time: Duration,
    pub energy: EnergyBreakdown,
    pub law: EnergyLawReport,
    pub constraint_l1: f64,
    pub nodal_max: f64,
}

/// Owns the assembled operators and advances states.
pub struct Integrator<'m> {
    mesh: &'m Mesh,
    params: SimulationParams,
    asm: Assemblies,
    frozen: Option<Ilu0>,
}

impl<'m> Integrator<'m> {
    pub fn new(mesh: &'m Mesh, params: SimulationParams) -> Result<Self> {
        params.validate()?;
        let asm = Assemblies::new(mesh, &params)?;
        Ok(Integrator {
            mesh,
            params,
            asm,
            frozen: None,
        })
    }

    pub fn params(&self) -> &SimulationParams {
        &self.params
    }

    pub fn assemblies(&self) -> &Assemblies {
        &self.asm
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn energy(&self, state: &State) -> EnergyBreakdown {
        diagnostics::energy(self.mesh, state, &self.params, &self.asm)
    }

    /// One full step; the state is replaced by its successor.
    pub fn step(&mut self, state: &mut State) -> Result<StepReport> {
        let start = Instant::now();
        let step = state.step;
        let wrap = |e: Error| Error::Step {
            step,
            source: Box::new(e),
        };
        let k = self.params.k;
        let (v, llg_stats) = if self.params.solver.freeze_ilu {
            if self.frozen.is_none() {
                let (a, rhs) = llg_system(self.mesh, state, &self.asm, &self.params).map_err(wrap)?;
                let basis = tangent_basis(&state.m.values).map_err(wrap)?;
                let (a_red, _) = nullspace_reduce(&a, &rhs, &basis).map_err(wrap)?;
                self.frozen = Some(Ilu0::new(&a_red).map_err(wrap)?);
            }
            let p = self.frozen.as_ref().map(|p| p as &dyn Preconditioner);
            llg_substep_with(self.mesh, state, &self.asm, &self.params, p).map_err(wrap)?
        } else {
            llg_substep(self.mesh, state, &self.asm, &self.params).map_err(wrap)?
        };
        let m_new = magnetisation_update(&state.m, &v, k);
        let (u_new, udot_new, el_stats) =
            elastic_substep(self.mesh, state, &m_new, &self.asm, &self.params).map_err(wrap)?;
        let mut s = state.s.clone();
        for (sz, vz) in s.iter_mut().zip(&v.values) {
            *sz += k * k * vec3::dot(*vz, *vz);
        }
        let next = State {
            step: step + 1,
            t: (step + 1) as f64 * k,
            m: m_new,
            u: u_new,
            udot: udot_new,
            v_prev: v.clone(),
            s,
        };
        let law = diagnostics::energy_law_residual(self.mesh, state, &next, &v, &self.params, &self.asm);
        let energy = self.energy(&next);
        let (constraint_l1, nodal_max) = diagnostics::constraint_metrics(self.mesh, &next);
        if !energy.total().is_finite() || !nodal_max.is_finite() {
            return Err(wrap(Error::invalid("state became non-finite")));
        }
        *state = next;
        Ok(StepReport {
            step: state.step,
            t: state.t,
            v,
            llg_iterations: llg_stats.iterations,
            elastic_iterations: el_stats.iterations,
            wall_time: start.elapsed(),
            energy,
            law,
            constraint_l1,
            nodal_max,
        })
    }

    /// Runs `⌈T/k⌉` steps, handing each report to `observer`.
    pub fn run(&mut self, mut state: State, mut observer: impl FnMut(&StepReport, &State) -> Result<()>) -> Result<State> {
        for _ in 0..self.params.n_steps() {
            let report = self.step(&mut state)?;
            observer(&report, &state)?;
        }
        Ok(state)
    }
}

/// Runs to the final time and collects every step report.
pub fn run(mesh: &Mesh, params: SimulationParams, initial: State) -> Result<(Vec<StepReport>, State)> {
    let mut integ = Integrator::new(mesh, params)?;
    let mut reports = Vec::new();
    let last = integ.run(initial, |r, _| {
        reports.push(r.clone());
        Ok(())
    })?;
    Ok((reports, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;

    fn cube() -> Mesh {
        box_mesh([1.0; 3], [2; 3], |p| p[2] < 1e-12, |_| false).unwrap()
    }

    #[test]
    fn step_count_and_validation() {
        let p = SimulationParams::uncoupled(0.1, 1.0, 0.1, 1.0);
        assert_eq!(p.n_steps(), 10);
        assert_eq!(SimulationParams::uncoupled(0.1, 1.0, 0.3, 1.0).n_steps(), 4);
        assert!(SimulationParams::uncoupled(0.1, 1.0, 1.0, 1.0).validate().is_err());
        assert!(SimulationParams::uncoupled(0.1, 0.5, 0.1, 1.0).validate().is_err());
        let mut q = SimulationParams::uncoupled(0.1, 0.5, 0.1, 1.0);
        q.allow_unsafe_theta = true;
        assert!(q.validate().is_ok());
    }

    #[test]
    fn initial_state_normalises() {
        let mesh = cube();
        let mask = DirichletMask::from_mesh(&mesh).unwrap();
        let s = init_state(&mesh, &mask, |_| [0.9, 0.2, 0.0], |_| [1.0, 0.0, 0.0], |_| vec3::ZERO).unwrap();
        let expect = vec3::scale(1.0 / 0.85f64.sqrt(), [0.9, 0.2, 0.0]);
        for (z, m) in s.m.values.iter().enumerate() {
            for i in 0..3 {
                assert!((m[i] - expect[i]).abs() < 1e-15);
            }
            if mask.is_fixed(z) {
                assert_eq!(s.u.values[z], vec3::ZERO);
            }
        }
        assert!(init_state(&mesh, &mask, |_| vec3::ZERO, |_| vec3::ZERO, |_| vec3::ZERO).is_err());
    }

    #[test]
    fn update_is_pythagorean() {
        let m = NodalField {
            values: vec![[1.0, 0.0, 0.0]],
        };
        let v = NodalField {
            values: vec![[0.0, 1.0, 0.0]],
        };
        let m1 = magnetisation_update(&m, &v, 0.5);
        assert_eq!(m1.values[0], [1.0, 0.5, 0.0]);
        assert_eq!(vec3::dot(m1.values[0], m1.values[0]), 1.25);
    }

    #[test]
    fn random_field_is_unit_and_seeded() {
        let a = random_unit_field(50, 7);
        assert_eq!(a, random_unit_field(50, 7));
        assert_ne!(a, random_unit_field(50, 8));
        assert!(a.values.iter().all(|&v| (vec3::norm(v) - 1.0).abs() < 1e-15));
    }

    #[test]
    fn uniform_uncoupled_state_is_stationary() {
        let mesh = cube();
        let params = SimulationParams::uncoupled(0.1, 1.0, 0.1, 1.0);
        let mask = DirichletMask::from_mesh(&mesh).unwrap();
        let s0 = init_state(&mesh, &mask, |_| [0.0, 0.0, 1.0], |_| vec3::ZERO, |_| vec3::ZERO).unwrap();
        let (reports, last) = run(&mesh, params, s0.clone()).unwrap();
        assert_eq!(reports.len(), 10);
        assert_eq!(last.m, s0.m);
        assert_eq!(last.u, s0.u);
        assert!(reports.iter().all(|r| r.energy.total().abs() < 1e-14 && r.law.residual.abs() < 1e-14));
    }
}
