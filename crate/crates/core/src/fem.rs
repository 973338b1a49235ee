//! P1 vector fields on tetrahedral meshes and the assembled operators.
//!
//! Degrees of freedom are ordered node-major: component `i` of node `z` is
//! unknown `3z + i`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryRegion, Mesh};
use crate::sparse::CsrMatrix;
use crate::tensor::Tensor4;
use crate::vec3::{self, Mat3, Vec3};

/// One 3-vector per mesh node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    pub values: Vec<Vec3>,
}

impl NodalField {
    pub fn zeros(n: usize) -> Self {
        NodalField {
            values: vec![vec3::ZERO; n],
        }
    }

    pub fn constant(n: usize, v: Vec3) -> Self {
        NodalField { values: vec![v; n] }
    }

    pub fn from_flat(x: &[f64]) -> Self {
        NodalField {
            values: x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat(&self) -> &[f64] {
        self.values.as_flattened()
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        self.values.as_flattened_mut()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|&v| vec3::norm(v)).fold(0.0, f64::max)
    }
}

/// Nodes carrying the homogeneous displacement condition.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletMask {
    fixed: Vec<bool>,
}

impl DirichletMask {
    pub fn new(fixed: Vec<bool>) -> Result<Self> {
        if !fixed.iter().any(|&f| f) {
            return Err(Error::invalid("Dirichlet mask has no fixed node"));
        }
        Ok(DirichletMask { fixed })
    }

    pub fn from_mesh(mesh: &Mesh) -> Result<Self> {
        Self::new(mesh.dirichlet_nodes())
    }

    pub fn is_fixed(&self, z: usize) -> bool {
        self.fixed[z]
    }

    pub fn nodes(&self) -> &[bool] {
        &self.fixed
    }

    pub fn fixed_count(&self) -> usize {
        self.fixed.iter().filter(|&&f| f).count()
    }

    /// Per-unknown flags (three per node).
    pub fn dofs(&self) -> Vec<bool> {
        self.fixed.iter().flat_map(|&f| [f; 3]).collect()
    }

    pub fn zero_vector(&self, x: &mut [f64]) {
        for (z, &f) in self.fixed.iter().enumerate() {
            if f {
                x[3 * z..3 * z + 3].fill(0.0);
            }
        }
    }

    pub fn zero_field(&self, u: &mut NodalField) {
        for (v, &f) in u.values.iter_mut().zip(&self.fixed) {
            if f {
                *v = vec3::ZERO;
            }
        }
    }
}

/// Spatially varying (time independent) vector data.
#[derive(Clone)]
pub enum FieldSource {
    Constant(Vec3),
    Function(Arc<dyn Fn(Vec3) -> Vec3 + Send + Sync>),
}

impl FieldSource {
    pub fn zero() -> Self {
        FieldSource::Constant(vec3::ZERO)
    }

    pub fn eval(&self, p: Vec3) -> Vec3 {
        match self {
            FieldSource::Constant(v) => *v,
            FieldSource::Function(f) => f(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldSource::Constant(v) if *v == vec3::ZERO)
    }
}

impl fmt::Debug for FieldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSource::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            FieldSource::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Default for FieldSource {
    fn default() -> Self {
        Self::zero()
    }
}

pub fn nodal_interpolate(mesh: &Mesh, f: impl Fn(Vec3) -> Vec3) -> NodalField {
    NodalField {
        values: mesh.nodes().iter().map(|&p| f(p)).collect(),
    }
}

/// Normalises every node value. Values shorter than one (beyond rounding)
/// are rejected.
pub fn nodal_project(m: &NodalField) -> Result<NodalField> {
    let mut out = Vec::with_capacity(m.len());
    for (z, &v) in m.values.iter().enumerate() {
        let n = vec3::norm(v);
        if !(n >= 1.0 - 1e-12) || !n.is_finite() {
            return Err(Error::ConstraintViolation { node: z, norm: n });
        }
        out.push(vec3::scale(1.0 / n, v));
    }
    Ok(NodalField { values: out })
}

/// Diagonal matrix with `w_z` on the three unknowns of node `z`.
pub fn assemble_lumped_mass(mesh: &Mesh) -> CsrMatrix {
    let d: Vec<f64> = mesh.lumped_weights().iter().flat_map(|&w| [w; 3]).collect();
    CsrMatrix::from_diagonal(&d)
}

/// `⟨a, b⟩_h = Σ_z w_z a(z)·b(z)`
pub fn lumped_product(mesh: &Mesh, a: &NodalField, b: &NodalField) -> f64 {
    mesh.lumped_weights()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * vec3::dot(*x, *y))
        .sum()
}

/// Stiffness matrix of `∫ ∇φ : ∇ψ` for vector fields; each node block is a
/// multiple of the identity.
pub fn assemble_vector_laplacian(mesh: &Mesh) -> CsrMatrix {
    let mut trip = Vec::with_capacity(mesh.n_tets() * 48);
    for (t, tet) in mesh.tets().iter().enumerate() {
        let g = mesh.gradients(t);
        let vol = mesh.volume(t);
        for a in 0..4 {
            for b in 0..4 {
                let s = vol * vec3::dot(g[a], g[b]);
                for i in 0..3 {
                    trip.push((3 * tet[a] + i, 3 * tet[b] + i, s));
                }
            }
        }
    }
    CsrMatrix::from_triplets(3 * mesh.n_nodes(), &trip).expect("mesh indices are in range")
}

/// Exact P1 mass matrix `∫ φ·ψ`.
pub fn assemble_consistent_mass(mesh: &Mesh) -> CsrMatrix {
    let mut trip = Vec::with_capacity(mesh.n_tets() * 48);
    for (t, tet) in mesh.tets().iter().enumerate() {
        let vol = mesh.volume(t);
        for a in 0..4 {
            for b in 0..4 {
                let s = vol * if a == b { 2.0 } else { 1.0 } / 20.0;
                for i in 0..3 {
                    trip.push((3 * tet[a] + i, 3 * tet[b] + i, s));
                }
            }
        }
    }
    CsrMatrix::from_triplets(3 * mesh.n_nodes(), &trip).expect("mesh indices are in range")
}

/// Matrix of `∫ C:ε(φ) : ε(ψ)`. With a mask, Dirichlet rows and columns are
/// replaced by the identity.
pub fn assemble_elastic_stiffness(mesh: &Mesh, c: &Tensor4, mask: Option<&DirichletMask>) -> CsrMatrix {
    let mut trip = Vec::with_capacity(mesh.n_tets() * 144);
    for (t, tet) in mesh.tets().iter().enumerate() {
        let g = mesh.gradients(t);
        let vol = mesh.volume(t);
        for a in 0..4 {
            for b in 0..4 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut s = 0.0;
                        for q in 0..3 {
                            for r in 0..3 {
                                s += c.get(i, q, j, r) * g[a][q] * g[b][r];
                            }
                        }
                        trip.push((3 * tet[a] + i, 3 * tet[b] + j, vol * s));
                    }
                }
            }
        }
    }
    let mut k = CsrMatrix::from_triplets(3 * mesh.n_nodes(), &trip).expect("mesh indices are in range");
    if let Some(mask) = mask {
        k.eliminate(&mask.dofs());
    }
    k
}

/// `ε(u)` on tet `t` (constant for P1 fields).
pub fn element_strain(mesh: &Mesh, t: usize, u: &NodalField) -> Mat3 {
    let g = mesh.gradients(t);
    let mut grad = [[0.0; 3]; 3];
    for (a, &z) in mesh.tets()[t].iter().enumerate() {
        let ua = u.values[z];
        for i in 0..3 {
            for j in 0..3 {
                grad[i][j] += ua[i] * g[a][j];
            }
        }
    }
    vec3::sym(&grad)
}

/// Average over the four vertices of `Z : (a(z) ⊗ b(z))`, i.e. the centroid
/// value of the P1 interpolant of the nodal products.
pub fn element_coupled_average(mesh: &Mesh, t: usize, z: &Tensor4, a: &NodalField, b: &NodalField) -> Mat3 {
    let mut s = [[0.0; 3]; 3];
    for &v in &mesh.tets()[t] {
        s = vec3::mat_add(&s, &z.contract_outer(a.values[v], b.values[v]));
    }
    vec3::mat_scale(0.25, &s)
}

/// Magnetostrain of `m` on tet `t` with the vertex-average rule.
pub fn element_magnetostrain(mesh: &Mesh, t: usize, z: &Tensor4, m: &NodalField) -> Mat3 {
    element_coupled_average(mesh, t, z, m, m)
}

/// `Σ_K |K| a_K : C : b_K` for elementwise constant tensors.
pub fn elastic_product(mesh: &Mesh, c: &Tensor4, a: &[Mat3], b: &[Mat3]) -> f64 {
    (0..mesh.n_tets())
        .map(|t| mesh.volume(t) * vec3::frobenius(&c.contract(&a[t]), &b[t]))
        .sum()
}

/// Data entering the right-hand side of the magnetisation equation.
#[derive(Clone, Copy, Debug)]
pub struct LlgRhsParams<'a> {
    pub c: &'a Tensor4,
    pub z: &'a Tensor4,
    pub kappa: f64,
    pub h_ext: &'a FieldSource,
}

/// `−∫∇m:∇φ + ⟨h_ext, φ⟩_h + ⟨h_m, φ⟩` as a full vector of length `3N`. The
/// magnetoelastic field uses the stress of tet `K` at the projected nodal
/// magnetisation, spread to the vertices with weight `|K|/4`.
pub fn assemble_llg_rhs(mesh: &Mesh, m: &NodalField, u: &NodalField, p: &LlgRhsParams<'_>) -> Result<Vec<f64>> {
    let pm = nodal_project(m)?;
    let mut b = vec![0.0; 3 * mesh.n_nodes()];
    let coupled = !p.z.is_zero() && p.kappa != 0.0;
    for (t, tet) in mesh.tets().iter().enumerate() {
        let g = mesh.gradients(t);
        let vol = mesh.volume(t);
        // exchange
        let mut grad_m = [[0.0; 3]; 3]; // grad_m[i] = ∇m_i
        for (a, &v) in tet.iter().enumerate() {
            for i in 0..3 {
                grad_m[i] = vec3::axpy(grad_m[i], m.values[v][i], g[a]);
            }
        }
        for (a, &v) in tet.iter().enumerate() {
            for i in 0..3 {
                b[3 * v + i] -= vol * vec3::dot(grad_m[i], g[a]);
            }
        }
        if coupled {
            let eps_u = element_strain(mesh, t, u);
            let eps_m = element_magnetostrain(mesh, t, p.z, &pm);
            let sigma = p.c.contract(&vec3::mat_sub(&eps_u, &eps_m));
            let zt_sigma = p.z.transpose().contract(&sigma);
            for &v in tet {
                let h = vec3::scale(2.0 * p.kappa * vol / 4.0, vec3::mat_vec(&zt_sigma, pm.values[v]));
                for i in 0..3 {
                    b[3 * v + i] += h[i];
                }
            }
        }
    }
    if !p.h_ext.is_zero() {
        for (z, (&w, &x)) in mesh.lumped_weights().iter().zip(mesh.nodes()).enumerate() {
            let h = p.h_ext.eval(x);
            for i in 0..3 {
                b[3 * z + i] += w * h[i];
            }
        }
    }
    Ok(b)
}

/// `∫ f·ψ + ∫_{Γ_N} g·ψ` with `f` sampled at tet centroids and `g` at
/// Neumann face centroids.
pub fn assemble_loads(mesh: &Mesh, f: &FieldSource, g: &FieldSource) -> Vec<f64> {
    let mut b = vec![0.0; 3 * mesh.n_nodes()];
    if !f.is_zero() {
        for (t, tet) in mesh.tets().iter().enumerate() {
            let fv = vec3::scale(mesh.volume(t) / 4.0, f.eval(mesh.tet_centroid(t)));
            for &v in tet {
                for i in 0..3 {
                    b[3 * v + i] += fv[i];
                }
            }
        }
    }
    if !g.is_zero() {
        for (face, geo) in mesh.faces_in(BoundaryRegion::Neumann) {
            let gv = vec3::scale(geo.area / 3.0, g.eval(geo.centroid));
            for &v in &face.nodes {
                for i in 0..3 {
                    b[3 * v + i] += gv[i];
                }
            }
        }
    }
    b
}

/// `∫ C:ε_m(m) : ε(ψ)` for the (already projected) magnetisation `m`.
pub fn assemble_magnetostrain_load(mesh: &Mesh, c: &Tensor4, z: &Tensor4, m: &NodalField) -> Vec<f64> {
    let mut b = vec![0.0; 3 * mesh.n_nodes()];
    if z.is_zero() {
        return b;
    }
    for (t, tet) in mesh.tets().iter().enumerate() {
        let s = c.contract(&element_magnetostrain(mesh, t, z, m));
        let g = mesh.gradients(t);
        let vol = mesh.volume(t);
        for (a, &v) in tet.iter().enumerate() {
            let r = vec3::mat_vec(&s, g[a]);
            for i in 0..3 {
                b[3 * v + i] += vol * r[i];
            }
        }
    }
    b
}

/// `‖φ‖_{L²}` integrated exactly.
pub fn l2_norm(mesh: &Mesh, f: &NodalField) -> f64 {
    let mut s = 0.0;
    for (t, tet) in mesh.tets().iter().enumerate() {
        let vals = tet.map(|v| f.values[v]);
        let sum = vals.iter().fold(vec3::ZERO, |acc, &x| vec3::add(acc, x));
        let sq: f64 = vals.iter().map(|&x| vec3::dot(x, x)).sum();
        s += mesh.volume(t) / 20.0 * (sq + vec3::dot(sum, sum));
    }
    s.sqrt()
}

/// `‖∇φ‖_{L²}`
pub fn h1_seminorm(mesh: &Mesh, f: &NodalField) -> f64 {
    let mut s = 0.0;
    for (t, tet) in mesh.tets().iter().enumerate() {
        let g = mesh.gradients(t);
        let mut grad = [[0.0; 3]; 3];
        for (a, &v) in tet.iter().enumerate() {
            for i in 0..3 {
                grad[i] = vec3::axpy(grad[i], f.values[v][i], g[a]);
            }
        }
        s += mesh.volume(t) * vec3::frobenius(&grad, &grad);
    }
    s.sqrt()
}

/// `‖φ‖_h = ⟨φ, φ⟩_h^{1/2}`
pub fn lumped_norm(mesh: &Mesh, f: &NodalField) -> f64 {
    lumped_product(mesh, f, f).sqrt()
}

/// `Σ_z w_z | |m(z)|² − 1 |`
pub fn constraint_violation(mesh: &Mesh, m: &NodalField) -> f64 {
    mesh.lumped_weights()
        .iter()
        .zip(&m.values)
        .map(|(w, &v)| w * (vec3::dot(v, v) - 1.0).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;
    use crate::tensor::{build_isotropic_c, build_isotropic_z};

    fn cube(n: usize) -> Mesh {
        box_mesh([1.0; 3], [n; 3], |p| p[0] < 1e-12, |p| p[0] > 1.0 - 1e-12).unwrap()
    }

    #[test]
    fn projection_normalises_and_rejects_short_vectors() {
        let m = NodalField {
            values: vec![[2.0, 0.0, 0.0], [0.0, 0.6, 0.8]],
        };
        let p = nodal_project(&m).unwrap();
        assert_eq!(p.values[0], [1.0, 0.0, 0.0]);
        let short = NodalField {
            values: vec![[1.0, 0.0, 0.0], [0.5, 0.0, 0.0]],
        };
        assert!(matches!(nodal_project(&short), Err(Error::ConstraintViolation { node: 1, .. })));
    }

    #[test]
    fn laplacian_of_linear_field() {
        let mesh = cube(2);
        let l = assemble_vector_laplacian(&mesh);
        let u = nodal_interpolate(&mesh, |p| [p[0], 0.0, 0.0]);
        assert!((l.bilinear(u.flat(), u.flat()) - 1.0).abs() < 1e-12);
        let c = NodalField::constant(mesh.n_nodes(), [1.0, -2.0, 0.5]);
        assert!(l.matvec(c.flat()).iter().all(|v| v.abs() < 1e-12));
        assert!((h1_seminorm(&mesh, &u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_mass_of_constant_is_volume() {
        let mesh = box_mesh([2.0, 1.0, 1.0], [2, 1, 1], |p| p[0] < 1e-12, |_| false).unwrap();
        let m = assemble_consistent_mass(&mesh);
        let one = NodalField::constant(mesh.n_nodes(), [1.0, 0.0, 0.0]);
        assert!((m.bilinear(one.flat(), one.flat()) - 2.0).abs() < 1e-12);
        assert!((l2_norm(&mesh, &one) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn uniaxial_strain_energy() {
        let mesh = cube(2);
        let (mu, lambda) = (1.3, 0.7);
        let k = assemble_elastic_stiffness(&mesh, &build_isotropic_c(mu, lambda).unwrap(), None);
        let u = nodal_interpolate(&mesh, |p| [p[0], 0.0, 0.0]);
        assert!((k.bilinear(u.flat(), u.flat()) - (2.0 * mu + lambda)).abs() < 1e-12);
        let rot = nodal_interpolate(&mesh, |p| vec3::cross([0.3, -1.0, 2.0], p));
        let trans = NodalField::constant(mesh.n_nodes(), [1.0, 2.0, 3.0]);
        for f in [rot, trans] {
            assert!(k.matvec(f.flat()).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn loads_total_force() {
        let mesh = box_mesh([20.0, 6.0, 6.0], [5, 2, 2], |p| p[0] < 1e-9, |p| p[0] > 20.0 - 1e-9).unwrap();
        let b = assemble_loads(&mesh, &FieldSource::Constant([0.0, 0.0, -1.0]), &FieldSource::Constant([0.0, 1.0, 0.0]));
        let mut total = [0.0; 3];
        for z in 0..mesh.n_nodes() {
            for i in 0..3 {
                total[i] += b[3 * z + i];
            }
        }
        assert!((total[2] + 720.0).abs() < 1e-9);
        assert!((total[1] - 36.0).abs() < 1e-12);
        assert!(total[0].abs() < 1e-12);
    }

    #[test]
    fn uniform_state_without_coupling_has_zero_rhs() {
        let mesh = cube(1);
        let c = build_isotropic_c(1.0, 1.0).unwrap();
        let z = Tensor4::zeros(crate::tensor::Symmetry::Full);
        let h = FieldSource::zero();
        let p = LlgRhsParams {
            c: &c,
            z: &z,
            kappa: 1.0,
            h_ext: &h,
        };
        let m = NodalField::constant(mesh.n_nodes(), [0.0, 0.0, 1.0]);
        let b = assemble_llg_rhs(&mesh, &m, &NodalField::zeros(mesh.n_nodes()), &p).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn magnetostrain_load_of_uniform_state_lives_on_boundary() {
        // a constant stress has zero divergence, so interior rows vanish
        let mesh = cube(2);
        let c = build_isotropic_c(2.0, 3.0).unwrap();
        let z = build_isotropic_z(0.1);
        let m = NodalField::constant(mesh.n_nodes(), [1.0, 0.0, 0.0]);
        let b = assemble_magnetostrain_load(&mesh, &c, &z, &m);
        let centre = mesh.nodes().iter().position(|p| *p == [0.5, 0.5, 0.5]).unwrap();
        for i in 0..3 {
            assert!(b[3 * centre + i].abs() < 1e-14);
        }
    }

    #[test]
    fn constraint_violation_of_scaled_field() {
        let mesh = cube(2);
        let m = NodalField::constant(mesh.n_nodes(), [1.1f64.sqrt(), 0.0, 0.0]);
        assert!((constraint_violation(&mesh, &m) - 0.1).abs() < 1e-12);
    }
}
