//! Energies, the discrete energy balance, constraint violation and averages.
//!
//! The elastic, work and kinetic parts are reported without the coupling
//! number; the totals weight them by `κ`, so the balance reads
//! `ΔE_total + αk‖v‖_h² + D + E = 0` with `D` and `E` already weighted.

use crate::fem::{
    element_coupled_average, element_magnetostrain, element_strain, lumped_norm, lumped_product, nodal_project,
    NodalField,
};
use crate::integrator::{Assemblies, SimulationParams, State};
use crate::mesh::Mesh;
use crate::sparse::dot;
use crate::vec3::{self, Mat3};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    /// `½‖∇m‖²`
    pub exchange: f64,
    /// `−⟨h_ext, m⟩_h`
    pub zeeman: f64,
    /// `½⟨C:(ε(u) − ε_m(m)), ε(u) − ε_m(m)⟩`
    pub elastic: f64,
    /// `−⟨f, u⟩ − ⟨g, u⟩_{Γ_N}`
    pub work: f64,
    /// `½‖d_t u‖²`
    pub kinetic: f64,
    pub kappa: f64,
}

impl EnergyBreakdown {
    pub fn potential(&self) -> f64 {
        self.exchange + self.zeeman + self.kappa * (self.elastic + self.work)
    }

    /// Potential plus weighted kinetic energy.
    pub fn total(&self) -> f64 {
        self.potential() + self.kappa * self.kinetic
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyLawReport {
    /// `E_total^{i+1} − E_total^i`
    pub lhs: f64,
    /// `αk‖v‖_h²`
    pub alpha_term: f64,
    /// Numerical dissipation: gradient, velocity jump and elastic-strain jump.
    pub d: [f64; 3],
    /// Consistency terms of the decoupling. The last one accounts for the
    /// projected magnetisation entering the stress used in the field.
    pub e: [f64; 5],
    pub residual: f64,
}

impl EnergyLawReport {
    pub fn d_total(&self) -> f64 {
        self.d.iter().sum()
    }

    pub fn e_total(&self) -> f64 {
        self.e.iter().sum()
    }

    /// Scale used for the relative residual check.
    pub fn scale(&self) -> f64 {
        self.e_total().abs().max(1.0)
    }
}

/// `ε(u) − ε_m(m)` per tet.
fn elastic_strains(mesh: &Mesh, params: &SimulationParams, u: &NodalField, m: &NodalField) -> Vec<Mat3> {
    (0..mesh.n_tets())
        .map(|t| {
            let e = element_strain(mesh, t, u);
            if params.z.is_zero() {
                e
            } else {
                vec3::mat_sub(&e, &element_magnetostrain(mesh, t, &params.z, m))
            }
        })
        .collect()
}

fn c_product(mesh: &Mesh, params: &SimulationParams, a: &[Mat3], b: &[Mat3]) -> f64 {
    crate::fem::elastic_product(mesh, &params.c, a, b)
}

fn energy_with(mesh: &Mesh, state: &State, m_el: &NodalField, params: &SimulationParams, asm: &Assemblies) -> EnergyBreakdown {
    let m = &state.m;
    let exchange = 0.5 * asm.laplacian.bilinear(m.flat(), m.flat());
    let zeeman = if params.h_ext.is_zero() {
        0.0
    } else {
        -mesh
            .lumped_weights()
            .iter()
            .zip(mesh.nodes().iter().zip(&m.values))
            .map(|(w, (&x, &mz))| w * vec3::dot(params.h_ext.eval(x), mz))
            .sum::<f64>()
    };
    let a = elastic_strains(mesh, params, &state.u, m_el);
    let elastic = 0.5 * c_product(mesh, params, &a, &a);
    let work = -dot(&asm.loads, state.u.flat());
    let kinetic = 0.5 * asm.mass.bilinear(state.udot.flat(), state.udot.flat());
    EnergyBreakdown {
        exchange,
        zeeman,
        elastic,
        work,
        kinetic,
        kappa: params.kappa,
    }
}

pub fn energy(mesh: &Mesh, state: &State, params: &SimulationParams, asm: &Assemblies) -> EnergyBreakdown {
    energy_with(mesh, state, &state.m, params, asm)
}

/// Energy with the nodally projected magnetisation in the elastic term.
/// Falls back to the plain energy if the state violates `|m| ≥ 1`.
pub fn hat_energy(mesh: &Mesh, state: &State, params: &SimulationParams, asm: &Assemblies) -> EnergyBreakdown {
    match nodal_project(&state.m) {
        Ok(pm) => energy_with(mesh, state, &pm, params, asm),
        Err(_) => energy(mesh, state, params, asm),
    }
}

/// Every term of the discrete energy balance across one step.
pub fn energy_law_residual(
    mesh: &Mesh,
    before: &State,
    after: &State,
    v: &NodalField,
    params: &SimulationParams,
    asm: &Assemblies,
) -> EnergyLawReport {
    let k = params.k;
    let kappa = params.kappa;
    let e0 = energy(mesh, before, params, asm);
    let e1 = energy(mesh, after, params, asm);
    let lhs = e1.total() - e0.total();
    let alpha_term = params.alpha * k * lumped_product(mesh, v, v);

    let d1 = k * k * (params.theta - 0.5) * asm.laplacian.bilinear(v.flat(), v.flat());
    let jump: Vec<f64> = after.udot.flat().iter().zip(before.udot.flat()).map(|(a, b)| a - b).collect();
    let d2 = kappa * 0.5 * asm.mass.bilinear(&jump, &jump);
    let a0 = elastic_strains(mesh, params, &before.u, &before.m);
    let a1 = elastic_strains(mesh, params, &after.u, &after.m);
    let da: Vec<Mat3> = a1.iter().zip(&a0).map(|(x, y)| vec3::mat_sub(x, y)).collect();
    let d3 = kappa * 0.5 * c_product(mesh, params, &da, &da);

    let mut e = [0.0; 5];
    if !params.z.is_zero() && kappa != 0.0 {
        let z = &params.z;
        let nt = mesh.n_tets();
        let pm0 = nodal_project(&before.m).unwrap_or_else(|_| before.m.clone());
        let pm1 = nodal_project(&after.m).unwrap_or_else(|_| after.m.clone());
        let diff0 = NodalField {
            values: before.m.values.iter().zip(&pm0.values).map(|(&a, &b)| vec3::sub(a, b)).collect(),
        };
        let per_tet = |f: &dyn Fn(usize) -> Mat3| -> Vec<Mat3> { (0..nt).map(f).collect() };
        let eps_v = per_tet(&|t| element_coupled_average(mesh, t, z, v, v));
        let z_mv = per_tet(&|t| element_coupled_average(mesh, t, z, &before.m, v));
        let z_dv = per_tet(&|t| element_coupled_average(mesh, t, z, &diff0, v));
        let z_pv = per_tet(&|t| element_coupled_average(mesh, t, z, &pm0, v));
        let proj_gap1 = per_tet(&|t| {
            vec3::mat_sub(&element_magnetostrain(mesh, t, z, &after.m), &element_magnetostrain(mesh, t, z, &pm1))
        });
        let proj_gap0 = per_tet(&|t| {
            vec3::mat_sub(&element_magnetostrain(mesh, t, z, &pm0), &element_magnetostrain(mesh, t, z, &before.m))
        });
        let du = per_tet(&|t| vec3::mat_sub(&element_strain(mesh, t, &after.u), &element_strain(mesh, t, &before.u)));
        e[0] = kappa * k * k * c_product(mesh, params, &a1, &eps_v);
        e[1] = kappa * 2.0 * k * c_product(mesh, params, &da, &z_mv);
        e[2] = kappa * 2.0 * k * c_product(mesh, params, &a0, &z_dv);
        e[3] = kappa * c_product(mesh, params, &proj_gap1, &du);
        e[4] = kappa * 2.0 * k * c_product(mesh, params, &proj_gap0, &z_pv);
    }
    let d = [d1, d2, d3];
    let residual = lhs + alpha_term + d.iter().sum::<f64>() + e.iter().sum::<f64>();
    EnergyLawReport {
        lhs,
        alpha_term,
        d,
        e,
        residual,
    }
}

/// `(Σ_z w_z (|m(z)|² − 1), max_z |m(z)|)`
pub fn constraint_metrics(mesh: &Mesh, state: &State) -> (f64, f64) {
    let l1 = mesh
        .lumped_weights()
        .iter()
        .zip(&state.m.values)
        .map(|(w, &m)| w * (vec3::dot(m, m) - 1.0))
        .sum();
    (l1, state.m.max_norm())
}

/// Mean magnetisation and displacement over the domain.
pub fn averages(mesh: &Mesh, state: &State) -> [f64; 6] {
    let mut acc = [0.0; 6];
    for (z, &w) in mesh.lumped_weights().iter().enumerate() {
        for i in 0..3 {
            acc[i] += w * state.m.values[z][i];
            acc[3 + i] += w * state.u.values[z][i];
        }
    }
    let vol = mesh.total_volume();
    acc.map(|a| a / vol)
}

/// `‖v‖_h`, exposed for reports.
pub fn velocity_norm(mesh: &Mesh, v: &NodalField) -> f64 {
    lumped_norm(mesh, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::DirichletMask;
    use crate::integrator::init_state;
    use crate::mesh::box_mesh;
    use crate::tensor::{build_isotropic_c, build_isotropic_z};

    #[test]
    fn uniform_uncoupled_state_has_zero_energy() {
        let mesh = box_mesh([1.0; 3], [2; 3], |p| p[0] < 1e-12, |_| false).unwrap();
        let params = SimulationParams::uncoupled(0.1, 1.0, 0.1, 1.0);
        let asm = Assemblies::new(&mesh, &params).unwrap();
        let mask = DirichletMask::from_mesh(&mesh).unwrap();
        let s = init_state(&mesh, &mask, |_| [1.0, 0.0, 0.0], |_| vec3::ZERO, |_| vec3::ZERO).unwrap();
        let e = energy(&mesh, &s, &params, &asm);
        for part in [e.exchange, e.zeeman, e.elastic, e.work, e.kinetic] {
            assert!(part.abs() < 1e-14);
        }
        assert_eq!(constraint_metrics(&mesh, &s), (0.0, 1.0));
        let avg = averages(&mesh, &s);
        assert!((avg[0] - 1.0).abs() < 1e-14);
        assert!(avg[1..].iter().all(|a| *a == 0.0));
    }

    #[test]
    fn elastic_energy_of_uniform_magnetostrain() {
        let mesh = box_mesh([2.0, 1.0, 1.0], [2, 1, 1], |p| p[0] < 1e-12, |_| false).unwrap();
        let (mu, lambda, l100) = (6.89, 21.96, 3e-5);
        let mut params = SimulationParams::uncoupled(0.1, 1.0, 0.1, 1.0);
        params.c = build_isotropic_c(mu, lambda).unwrap();
        params.z = build_isotropic_z(l100);
        let asm = Assemblies::new(&mesh, &params).unwrap();
        let mask = DirichletMask::from_mesh(&mesh).unwrap();
        let s = init_state(&mesh, &mask, |_| [1.0, 0.0, 0.0], |_| vec3::ZERO, |_| vec3::ZERO).unwrap();
        // ε_m = λ diag(1, −½, −½) is trace free, so ε:C:ε = 2μ|ε|²
        let eps2 = l100 * l100 * 1.5;
        let expect = 0.5 * 2.0 * mu * eps2 * 2.0;
        let got = energy(&mesh, &s, &params, &asm).elastic;
        assert!((got - expect).abs() < 1e-12 * expect, "{got} vs {expect}");
    }

    #[test]
    fn linear_displacement_average() {
        let mesh = box_mesh([1.0; 3], [3; 3], |p| p[0] < 1e-12, |_| false).unwrap();
        let mask = DirichletMask::from_mesh(&mesh).unwrap();
        let mut s = init_state(&mesh, &mask, |_| [1.0, 0.0, 0.0], |_| vec3::ZERO, |_| vec3::ZERO).unwrap();
        s.u = crate::fem::nodal_interpolate(&mesh, |p| [p[0], 0.0, 0.0]);
        assert!((averages(&mesh, &s)[3] - 0.5).abs() < 1e-14);
    }
}
