//! Structured meshes of boxes and of a half ball.

use super::{BoundaryRegion, Mesh};
use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// One of the six faces of an axis-aligned box `[0, Lx] × [0, Ly] × [0, Lz]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoxSide {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl BoxSide {
    pub const ALL: [BoxSide; 6] = [
        BoxSide::XMin,
        BoxSide::XMax,
        BoxSide::YMin,
        BoxSide::YMax,
        BoxSide::ZMin,
        BoxSide::ZMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoxSide::XMin => "x_min",
            BoxSide::XMax => "x_max",
            BoxSide::YMin => "y_min",
            BoxSide::YMax => "y_max",
            BoxSide::ZMin => "z_min",
            BoxSide::ZMax => "z_max",
        }
    }

    pub fn parse(s: &str) -> Option<BoxSide> {
        BoxSide::ALL.into_iter().find(|b| b.name() == s.trim())
    }

    /// Whether a point of the box lies on this side.
    pub fn contains(self, lengths: Vec3, p: Vec3) -> bool {
        let tol = 1e-9 * lengths.iter().fold(0.0_f64, |a, &b| a.max(b));
        let (axis, target) = match self {
            BoxSide::XMin => (0, 0.0),
            BoxSide::XMax => (0, lengths[0]),
            BoxSide::YMin => (1, 0.0),
            BoxSide::YMax => (1, lengths[1]),
            BoxSide::ZMin => (2, 0.0),
            BoxSide::ZMax => (2, lengths[2]),
        };
        (p[axis] - target).abs() <= tol
    }
}

/// Node coordinates and Kuhn tets (six per cell) of a structured grid.
fn grid(lengths: Vec3, divisions: [usize; 3]) -> Result<(Vec<Vec3>, Vec<[usize; 4]>)> {
    if divisions.contains(&0) {
        return Err(Error::invalid(format!("box divisions must be positive, got {divisions:?}")));
    }
    if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::invalid(format!("box lengths must be positive, got {lengths:?}")));
    }
    let [nx, ny, nz] = divisions;
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([
                    lengths[0] * i as f64 / nx as f64,
                    lengths[1] * j as f64 / ny as f64,
                    lengths[2] * k as f64 / nz as f64,
                ]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [idx(i, j, k); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    Ok((nodes, tets))
}

/// Box `[0, Lx] × [0, Ly] × [0, Lz]` split into `divisions` cells per axis,
/// each cut into six tets. A boundary face is Dirichlet if `dirichlet` holds
/// at its centroid, otherwise Neumann if `neumann` holds, otherwise Other.
pub fn box_mesh(
    lengths: Vec3,
    divisions: [usize; 3],
    dirichlet: impl Fn(Vec3) -> bool,
    neumann: impl Fn(Vec3) -> bool,
) -> Result<Mesh> {
    let (nodes, tets) = grid(lengths, divisions)?;
    Mesh::new(nodes, tets, |_, c| classify(c, &dirichlet, &neumann))
}

fn classify(c: Vec3, dirichlet: &impl Fn(Vec3) -> bool, neumann: &impl Fn(Vec3) -> bool) -> BoundaryRegion {
    if dirichlet(c) {
        BoundaryRegion::Dirichlet
    } else if neumann(c) {
        BoundaryRegion::Neumann
    } else {
        BoundaryRegion::Other
    }
}

/// Half ball `{|x| ≤ r, x₀ ≥ 0}` obtained by pushing the nodes of the half
/// cube `[0, r] × [−r, r]²` radially onto spheres. The flat face is clamped and
/// the curved face is Neumann.
pub fn hemisphere_mesh(radius: f64, n: usize) -> Result<Mesh> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    let (mut nodes, tets) = grid([radius, 2.0 * radius, 2.0 * radius], [n, 2 * n, 2 * n])?;
    for p in nodes.iter_mut() {
        let q = [p[0], p[1] - radius, p[2] - radius];
        let r2 = vec3::norm(q);
        let rinf = q.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        *p = if r2 > 0.0 { vec3::scale(rinf / r2, q) } else { q };
    }
    let tol = 1e-9 * radius;
    Mesh::new(nodes, tets, |_, c| {
        if c[0].abs() <= tol {
            BoundaryRegion::Dirichlet
        } else {
            BoundaryRegion::Neumann
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_counts() {
        let m = box_mesh([1.0; 3], [2, 3, 4], |p| p[0] < 1e-12, |_| false).unwrap();
        assert_eq!(m.n_nodes(), 3 * 4 * 5);
        assert_eq!(m.n_tets(), 6 * 24);
        assert!((m.total_volume() - 1.0).abs() < 1e-13);
        // 2 triangles per boundary square
        assert_eq!(m.boundary_faces().len(), 2 * 2 * (6 + 8 + 12));
        assert!((m.region_area(BoundaryRegion::Dirichlet) - 1.0).abs() < 1e-13);
        assert!((m.region_area(BoundaryRegion::Other) - 5.0).abs() < 1e-13);
    }

    #[test]
    fn lumped_weights_sum_to_volume() {
        let m = box_mesh([20.0, 6.0, 6.0], [5, 2, 2], |p| p[0] < 1e-9, |p| p[0] > 20.0 - 1e-9).unwrap();
        let s: f64 = m.lumped_weights().iter().sum();
        assert!((s - 720.0).abs() < 1e-10);
        assert!((m.region_area(BoundaryRegion::Neumann) - 36.0).abs() < 1e-12);
    }

    #[test]
    fn box_side_predicates() {
        let l = [2.0, 1.0, 1.0];
        assert!(BoxSide::XMax.contains(l, [2.0, 0.3, 0.1]));
        assert!(!BoxSide::XMax.contains(l, [1.9, 0.3, 0.1]));
        assert_eq!(BoxSide::parse("z_min"), Some(BoxSide::ZMin));
        assert_eq!(BoxSide::parse("top"), None);
    }

    #[test]
    fn hemisphere_volume_converges() {
        let exact = 2.0 / 3.0 * std::f64::consts::PI;
        let coarse = hemisphere_mesh(1.0, 3).unwrap().total_volume();
        let fine = hemisphere_mesh(1.0, 6).unwrap().total_volume();
        assert!((fine - exact).abs() < (coarse - exact).abs());
        assert!((fine - exact).abs() / exact < 0.05, "volume {fine}");
        let m = hemisphere_mesh(1.0, 3).unwrap();
        assert!((m.region_area(BoundaryRegion::Dirichlet) - std::f64::consts::PI).abs() < 0.3);
    }

    #[test]
    fn zero_divisions_rejected() {
        assert!(box_mesh([1.0; 3], [0, 1, 1], |_| true, |_| false).is_err());
    }
}
