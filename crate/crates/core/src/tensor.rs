//! Fourth-order tensors and the magnetoelastic constitutive laws.
//!
//! Tensors are stored densely (81 components, row-major in `(i, j, l, m)`).
//! The symmetry tag is validated on construction but does not change the
//! storage layout.

use crate::error::{Error, Result};
use crate::vec3::{self, Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// `A_ijlm = A_jilm = A_ijml`
    Minor,
    /// Minor symmetry plus `A_ijlm = A_lmij`.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    comp: [f64; 81],
    sym: Symmetry,
}

#[inline]
const fn idx(i: usize, j: usize, l: usize, m: usize) -> usize {
    ((i * 3 + j) * 3 + l) * 3 + m
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl Tensor4 {
    pub fn zeros(sym: Symmetry) -> Self {
        Tensor4 {
            comp: [0.0; 81],
            sym,
        }
    }

    /// Builds a tensor from its components, checking the claimed symmetry to
    /// a relative tolerance of 1e-12.
    pub fn from_components(comp: [f64; 81], sym: Symmetry) -> Result<Self> {
        let t = Tensor4 { comp, sym };
        let scale = t.max_abs().max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;
        let ok = match sym {
            Symmetry::None => true,
            Symmetry::Minor => t.minor_defect() <= tol,
            Symmetry::Full => t.minor_defect() <= tol && t.major_defect() <= tol,
        };
        if ok {
            Ok(t)
        } else {
            Err(Error::invalid(format!(
                "tensor components violate the claimed {sym:?} symmetry"
            )))
        }
    }

    pub fn from_fn(sym: Symmetry, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut comp = [0.0; 81];
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        comp[idx(i, j, l, m)] = f(i, j, l, m);
                    }
                }
            }
        }
        Self::from_components(comp, sym)
    }

    /// The tensor acting as the identity on all matrices, `δ_il δ_jm`.
    pub fn identity_map() -> Self {
        let mut t = Self::zeros(Symmetry::None);
        for i in 0..3 {
            for j in 0..3 {
                t.comp[idx(i, j, i, j)] = 1.0;
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize, m: usize) -> f64 {
        self.comp[idx(i, j, l, m)]
    }

    pub fn components(&self) -> &[f64; 81] {
        &self.comp
    }

    pub fn symmetry(&self) -> Symmetry {
        self.sym
    }

    pub fn max_abs(&self) -> f64 {
        self.comp.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.comp.iter().all(|&c| c == 0.0)
    }

    fn minor_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        let a = self.get(i, j, l, m);
                        worst = worst
                            .max((a - self.get(j, i, l, m)).abs())
                            .max((a - self.get(i, j, m, l)).abs());
                    }
                }
            }
        }
        worst
    }

    fn major_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        worst = worst.max((self.get(i, j, l, m) - self.get(l, m, i, j)).abs());
                    }
                }
            }
        }
        worst
    }

    /// `(Aᵀ)_ijlm = A_lmji`. Minor and full symmetry are preserved.
    pub fn transpose(&self) -> Tensor4 {
        let mut out = Self::zeros(self.sym);
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        out.comp[idx(i, j, l, m)] = self.get(l, m, j, i);
                    }
                }
            }
        }
        out
    }

    /// Double contraction `(A : ν)_ij = Σ_lm A_ijlm ν_lm`.
    pub fn contract(&self, nu: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let base = idx(i, j, 0, 0);
                let mut s = 0.0;
                for l in 0..3 {
                    for m in 0..3 {
                        s += self.comp[base + 3 * l + m] * nu[l][m];
                    }
                }
                out[i][j] = s;
            }
        }
        out
    }

    /// `A : (a ⊗ b)` without forming the outer product.
    pub fn contract_outer(&self, a: Vec3, b: Vec3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let base = idx(i, j, 0, 0);
                let mut s = 0.0;
                for l in 0..3 {
                    for m in 0..3 {
                        s += self.comp[base + 3 * l + m] * a[l] * b[m];
                    }
                }
                out[i][j] = s;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Tensor4 {
        let mut out = self.clone();
        for c in out.comp.iter_mut() {
            *c *= s;
        }
        out
    }
}

pub fn t4_transpose(z: &Tensor4) -> Tensor4 {
    z.transpose()
}

pub fn t4_contract_mat(a: &Tensor4, nu: &Mat3) -> Mat3 {
    a.contract(nu)
}

/// Spontaneous strain `Z : (m ⊗ m)`.
pub fn magnetostrain(z: &Tensor4, m: Vec3) -> Mat3 {
    z.contract_outer(m, m)
}

/// Isotropic magnetostriction tensor
/// `Z_ijlm = (3/2) λ₁₀₀ [½(δ_il δ_jm + δ_im δ_jl) − δ_ij δ_lm / 3]`,
/// so that `Z : (m ⊗ m) = (3/2) λ₁₀₀ (m ⊗ m − |m|² I / 3)`.
pub fn build_isotropic_z(lambda100: f64) -> Tensor4 {
    let c = 1.5 * lambda100;
    Tensor4::from_fn(Symmetry::Minor, |i, j, l, m| {
        c * (0.5 * (delta(i, l) * delta(j, m) + delta(i, m) * delta(j, l))
            - delta(i, j) * delta(l, m) / 3.0)
    })
    .expect("isotropic Z is minorly symmetric by construction")
}

/// Cubic magnetostriction tensor for the crystal axes `basis`.
///
/// On `m ⊗ m` it evaluates to
/// `(3/2) { λ₁₀₀ (m⊗m − |m|² I/3) + (λ₁₁₁ − λ₁₀₀) Σ_{p≠q} (m·e_p)(m·e_q) e_p ⊗ e_q }`.
pub fn build_cubic_z(lambda100: f64, lambda111: f64, basis: [Vec3; 3]) -> Result<Tensor4> {
    for p in 0..3 {
        for q in 0..3 {
            let d = vec3::dot(basis[p], basis[q]) - delta(p, q);
            if d.abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "crystal basis is not orthonormal (e{p}·e{q} off by {d:.3e})"
                )));
            }
        }
    }
    let iso = build_isotropic_z(lambda100);
    let c = 1.5 * (lambda111 - lambda100);
    Tensor4::from_fn(Symmetry::Minor, |a, b, cc, d| {
        let mut cross_terms = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                if p != q {
                    let (ep, eq) = (basis[p], basis[q]);
                    cross_terms += ep[a] * eq[b] * 0.5 * (ep[cc] * eq[d] + ep[d] * eq[cc]);
                }
            }
        }
        iso.get(a, b, cc, d) + c * cross_terms
    })
}

/// Isotropic stiffness `C : ε = 2μ ε + λ tr(ε) I`.
pub fn build_isotropic_c(mu: f64, lambda: f64) -> Result<Tensor4> {
    if !(mu > 0.0) || !(3.0 * lambda + 2.0 * mu > 0.0) {
        return Err(Error::invalid(format!(
            "Lamé parameters mu = {mu}, lambda = {lambda} do not give a positive definite stiffness"
        )));
    }
    Tensor4::from_fn(Symmetry::Full, |i, j, l, m| {
        mu * (delta(i, l) * delta(j, m) + delta(i, m) * delta(j, l)) + lambda * delta(i, j) * delta(l, m)
    })
}

/// Hooke's law `σ = C : (ε − Z:(m⊗m))`.
pub fn stress(c: &Tensor4, z: &Tensor4, strain: &Mat3, m: Vec3) -> Mat3 {
    let elastic = vec3::mat_sub(strain, &magnetostrain(z, m));
    c.contract(&elastic)
}

/// Pointwise elastic field `2κ (Zᵀ : σ) m` with `σ` evaluated at `m`.
pub fn elastic_field_density(c: &Tensor4, z: &Tensor4, kappa: f64, strain: &Mat3, m_proj: Vec3) -> Vec3 {
    let sigma = stress(c, z, strain, m_proj);
    let b = z.transpose().contract(&sigma);
    vec3::scale(2.0 * kappa, vec3::mat_vec(&b, m_proj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_minor(rng: &mut ChaCha8Rng) -> Tensor4 {
        let raw: Vec<f64> = (0..81).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor4::from_fn(Symmetry::Minor, |i, j, l, m| {
            let r = |a: usize, b: usize, c: usize, d: usize| raw[idx(a, b, c, d)];
            (r(i, j, l, m) + r(j, i, l, m) + r(i, j, m, l) + r(j, i, m, l)) / 4.0
        })
        .unwrap()
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let n = vec3::norm(v);
            if n > 1e-3 {
                return vec3::scale(1.0 / n, v);
            }
        }
    }

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]]
    }

    fn assert_mat_close(a: &Mat3, b: &Mat3, tol: f64) {
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[i][j]).abs() <= tol, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn transpose_of_isotropic_stiffness_is_itself() {
        let c = build_isotropic_c(1.3, 0.7).unwrap();
        assert_eq!(c.transpose(), c);
    }

    #[test]
    fn transpose_permutes_indices() {
        let mut comp = [0.0; 81];
        comp[idx(0, 0, 1, 1)] = 1.0;
        let z = Tensor4::from_components(comp, Symmetry::None).unwrap();
        let t = z.transpose();
        for (k, &v) in t.components().iter().enumerate() {
            if k == idx(1, 1, 0, 0) {
                assert_eq!(v, 1.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn double_transpose_swaps_index_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let comp: [f64; 81] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let a = Tensor4::from_components(comp, Symmetry::None).unwrap();
        // applying the transpose twice swaps both index pairs
        let tt = a.transpose().transpose();
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        assert_eq!(tt.get(i, j, l, m), a.get(j, i, m, l));
                    }
                }
            }
        }
        let z = build_isotropic_z(2e-5);
        assert_eq!(z.transpose().transpose(), z);
    }

    #[test]
    fn identity_map_and_zero_contraction() {
        let nu = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.5]];
        assert_eq!(Tensor4::identity_map().contract(&nu), nu);
        assert_eq!(Tensor4::zeros(Symmetry::Full).contract(&nu), [[0.0; 3]; 3]);
    }

    #[test]
    fn contraction_matches_index_sum_and_stays_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_minor(&mut rng);
            let mut nu = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let v = rng.random_range(-1.0..1.0);
                    nu[i][j] = v;
                    nu[j][i] = v;
                }
            }
            let got = a.contract(&nu);
            let mut oracle = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        for m in 0..3 {
                            oracle[i][j] += a.components()[27 * i + 9 * j + 3 * l + m] * nu[l][m];
                        }
                    }
                }
            }
            assert_mat_close(&got, &oracle, 1e-14);
            assert_mat_close(&got, &vec3::transpose(&got), 1e-14);
        }
    }

    #[test]
    fn symmetry_tag_is_validated() {
        let mut comp = [0.0; 81];
        comp[idx(0, 1, 0, 0)] = 1.0;
        assert!(Tensor4::from_components(comp, Symmetry::Minor).is_err());
        assert!(Tensor4::from_components(comp, Symmetry::None).is_ok());
    }

    #[test]
    fn isotropic_magnetostrain_table_value() {
        let z = build_isotropic_z(30e-6);
        let e = magnetostrain(&z, [1.0, 0.0, 0.0]);
        assert_mat_close(&e, &diag(3.0e-5, -1.5e-5, -1.5e-5), 1e-20);
    }

    #[test]
    fn isotropic_magnetostrain_unit_lambda() {
        let z = build_isotropic_z(1.0);
        assert_mat_close(&magnetostrain(&z, [0.0, 1.0, 0.0]), &diag(-0.5, 1.0, -0.5), 1e-15);
        assert!(build_isotropic_z(0.0).is_zero());
        assert!(magnetostrain(&Tensor4::zeros(Symmetry::Minor), [0.3, 0.1, 2.0])
            .iter()
            .flatten()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn isotropic_magnetostrain_is_trace_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = build_isotropic_z(2.5);
        for _ in 0..200 {
            let m = random_unit(&mut rng);
            assert!(vec3::trace(&magnetostrain(&z, m)).abs() < 1e-14);
            // also for non-unit vectors
            let e = magnetostrain(&z, vec3::scale(1.7, m));
            assert!(vec3::trace(&e).abs() < 1e-13);
        }
    }

    fn cubic_formula(l100: f64, l111: f64, basis: [Vec3; 3], m: Vec3) -> Mat3 {
        let mut out = vec3::mat_scale(
            l100,
            &vec3::mat_sub(&vec3::outer(m, m), &vec3::mat_scale(1.0 / 3.0, &vec3::identity())),
        );
        for p in 0..3 {
            for q in 0..3 {
                if p != q {
                    let w = (l111 - l100) * vec3::dot(m, basis[p]) * vec3::dot(m, basis[q]);
                    out = vec3::mat_add(&out, &vec3::mat_scale(w, &vec3::outer(basis[p], basis[q])));
                }
            }
        }
        vec3::mat_scale(1.5, &out)
    }

    fn rotated_basis(rng: &mut ChaCha8Rng) -> [Vec3; 3] {
        let a = random_unit(rng);
        let mut b = random_unit(rng);
        b = vec3::sub(b, vec3::scale(vec3::dot(a, b), a));
        b = vec3::scale(1.0 / vec3::norm(b), b);
        [a, b, vec3::cross(a, b)]
    }

    #[test]
    fn cubic_reduces_to_isotropic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let basis = rotated_basis(&mut rng);
        let cubic = build_cubic_z(3.0, 3.0, basis).unwrap();
        let iso = build_isotropic_z(3.0);
        for (a, b) in cubic.components().iter().zip(iso.components()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = rotated_basis(&mut rng);
        let z = build_cubic_z(2.0, 5.0, basis).unwrap();
        for _ in 0..100 {
            let m = random_unit(&mut rng);
            assert_mat_close(&magnetostrain(&z, m), &cubic_formula(2.0, 5.0, basis, m), 1e-13);
            assert!(vec3::trace(&magnetostrain(&z, m)).abs() < 1e-13);
        }
        // along a crystal axis the cross terms vanish
        let e = magnetostrain(&z, basis[0]);
        let expect = vec3::mat_scale(
            1.5 * 2.0,
            &vec3::mat_sub(&vec3::outer(basis[0], basis[0]), &vec3::mat_scale(1.0 / 3.0, &vec3::identity())),
        );
        assert_mat_close(&e, &expect, 1e-13);
        // body diagonal of the standard basis
        let std_basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let z = build_cubic_z(1e-5, 4e-5, std_basis).unwrap();
        let m = vec3::scale(1.0 / 3f64.sqrt(), [1.0, 1.0, 1.0]);
        assert_mat_close(&magnetostrain(&z, m), &cubic_formula(1e-5, 4e-5, std_basis, m), 1e-19);
    }

    #[test]
    fn cubic_rejects_skewed_basis() {
        let basis = [[1.0, 0.0, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(build_cubic_z(1.0, 2.0, basis), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn isotropic_stiffness_action() {
        let c = build_isotropic_c(1.0, 0.0).unwrap();
        assert_mat_close(&c.contract(&vec3::identity()), &diag(2.0, 2.0, 2.0), 0.0);
        let c = build_isotropic_c(6.89, 21.96).unwrap();
        assert_mat_close(&c.contract(&diag(1.0, 0.0, 0.0)), &diag(35.74, 21.96, 21.96), 1e-12);
        assert_eq!(c.symmetry(), Symmetry::Full);
    }

    #[test]
    fn isotropic_stiffness_rejects_indefinite() {
        assert!(build_isotropic_c(-1.0, 1.0).is_err());
        assert!(build_isotropic_c(1.0, -1.0).is_err());
    }

    #[test]
    fn isotropic_stiffness_is_coercive() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mu = 0.8;
        let c = build_isotropic_c(mu, 0.3).unwrap();
        for _ in 0..1000 {
            let mut a = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let v = rng.random_range(-1.0..1.0);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
            assert!(vec3::frobenius(&a, &c.contract(&a)) >= 2.0 * mu * vec3::frobenius(&a, &a) * (1.0 - 1e-14));
        }
    }

    #[test]
    fn stress_vanishes_at_spontaneous_strain() {
        let c = build_isotropic_c(2.0, 1.0).unwrap();
        let z = build_isotropic_z(0.1);
        let m = [0.6, 0.8, 0.0];
        let s = stress(&c, &z, &magnetostrain(&z, m), m);
        assert_mat_close(&s, &[[0.0; 3]; 3], 1e-15);
        let zero = Tensor4::zeros(Symmetry::Minor);
        assert_eq!(stress(&c, &zero, &[[0.0; 3]; 3], m), [[0.0; 3]; 3]);
        assert_eq!(elastic_field_density(&c, &zero, 1.0, &[[0.1; 3]; 3], m), [0.0; 3]);
        let f = elastic_field_density(&c, &z, 3.0, &magnetostrain(&z, m), m);
        assert!(vec3::norm(f) < 1e-15);
    }

    #[test]
    fn stress_matches_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let c = build_isotropic_c(1.1, 0.4).unwrap();
        for _ in 0..50 {
            let z = random_minor(&mut rng);
            let m = random_unit(&mut rng);
            let mut strain = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    let v = rng.random_range(-1.0..1.0);
                    strain[i][j] = v;
                    strain[j][i] = v;
                }
            }
            let mut el = strain;
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        for mm in 0..3 {
                            el[i][j] -= z.get(i, j, l, mm) * m[l] * m[mm];
                        }
                    }
                }
            }
            let mut oracle = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        for mm in 0..3 {
                            oracle[i][j] += c.get(i, j, l, mm) * el[l][mm];
                        }
                    }
                }
            }
            assert_mat_close(&stress(&c, &z, &strain, m), &oracle, 1e-13);
        }
    }

    #[test]
    fn elastic_field_satisfies_transpose_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let c = build_isotropic_c(1.0, 0.5).unwrap();
        for _ in 0..100 {
            let z = random_minor(&mut rng);
            let m = random_unit(&mut rng);
            let w = random_unit(&mut rng);
            let strain = vec3::sym(&[[0.3, 0.1, -0.2], [0.0, 0.5, 0.1], [0.4, 0.0, -0.1]]);
            let sigma = stress(&c, &z, &strain, m);
            let b = z.transpose().contract(&sigma);
            let lhs = vec3::dot(vec3::mat_vec(&b, w), m);
            let mid = vec3::dot(vec3::mat_vec(&b, m), w);
            let rhs = vec3::frobenius(&sigma, &z.contract_outer(m, w));
            let s = lhs.abs().max(1.0);
            assert!((lhs - mid).abs() <= 1e-12 * s);
            assert!((lhs - rhs).abs() <= 1e-12 * s);
            let field = elastic_field_density(&c, &z, 1.0, &strain, m);
            assert!((vec3::dot(field, w) - 2.0 * mid).abs() <= 1e-12 * s);
        }
    }
}
