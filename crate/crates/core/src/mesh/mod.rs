//! Conforming tetrahedral meshes with labelled boundary faces.

mod msh;
mod structured;

use std::collections::HashMap;

pub use msh::{default_tag_map, read_msh, read_msh_str, write_msh, MshTags};
pub use structured::{box_mesh, hemisphere_mesh, BoxSide};

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryRegion {
    Dirichlet,
    Neumann,
    Other,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace {
    pub nodes: [usize; 3],
    pub region: BoundaryRegion,
    /// The tetrahedron owning this face.
    pub tet: usize,
}

/// Area, outward unit normal and centroid of a boundary face.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceGeometry {
    pub face: usize,
    pub area: f64,
    pub normal: Vec3,
    pub centroid: Vec3,
}

#[derive(Clone, Debug)]
pub struct GeometryTables {
    pub volumes: Vec<f64>,
    /// Gradients of the four barycentric coordinates, constant per tet.
    pub gradients: Vec<[Vec3; 4]>,
    /// Lumped nodal weights `w_z = Σ_{K∋z} |K| / 4`.
    pub lumped_weights: Vec<f64>,
    pub faces: Vec<FaceGeometry>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    boundary: Vec<BoundaryFace>,
    tables: GeometryTables,
}

pub(crate) fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

fn signed_volume(p: &[Vec3; 4]) -> f64 {
    let e1 = vec3::sub(p[1], p[0]);
    let e2 = vec3::sub(p[2], p[0]);
    let e3 = vec3::sub(p[3], p[0]);
    vec3::dot(e1, vec3::cross(e2, e3)) / 6.0
}

const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

impl Mesh {
    /// Builds a mesh, orienting every tet positively and extracting the
    /// boundary. `label` classifies each boundary face from its (sorted) node
    /// indices and centroid.
    pub fn new(
        nodes: Vec<Vec3>,
        mut tets: Vec<[usize; 4]>,
        mut label: impl FnMut([usize; 3], Vec3) -> BoundaryRegion,
    ) -> Result<Mesh> {
        if nodes.is_empty() || tets.is_empty() {
            return Err(Error::invalid("mesh needs at least one node and one tetrahedron"));
        }
        let n = nodes.len();
        let extent = nodes
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0_f64, |a, &b| a.max(b.abs()))
            .max(1e-300);
        for (t, tet) in tets.iter_mut().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&v| v >= n) {
                return Err(Error::invalid(format!("tet {t} references node {bad}, mesh has {n} nodes")));
            }
            let p = tet.map(|v| nodes[v]);
            let vol = signed_volume(&p);
            // relative to the local edge length cubed
            let h = (0..4)
                .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
                .map(|(a, b)| vec3::norm(vec3::sub(p[a], p[b])))
                .fold(0.0_f64, f64::max);
            if !(vol.abs() > 1e-14 * h.powi(3)) || h < 1e-14 * extent {
                return Err(Error::invalid(format!("tet {t} is degenerate (volume {vol:.3e})")));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }

        // face -> (count, owning tet, local face)
        let mut face_map: HashMap<[usize; 3], (u8, usize, usize)> = HashMap::with_capacity(2 * tets.len());
        let mut order: Vec<[usize; 3]> = Vec::new();
        for (t, tet) in tets.iter().enumerate() {
            for (lf, local) in LOCAL_FACES.iter().enumerate() {
                let key = sorted3(local.map(|i| tet[i]));
                let entry = face_map.entry(key).or_insert_with(|| {
                    order.push(key);
                    (0, t, lf)
                });
                entry.0 += 1;
                if entry.0 > 2 {
                    return Err(Error::invalid(format!("face {key:?} is shared by more than two tets")));
                }
            }
        }
        let mut boundary = Vec::new();
        for key in order {
            let (count, t, lf) = face_map[&key];
            if count == 1 {
                let local = LOCAL_FACES[lf];
                let face_nodes = local.map(|i| tets[t][i]);
                let centroid = vec3::scale(
                    1.0 / 3.0,
                    vec3::add(vec3::add(nodes[face_nodes[0]], nodes[face_nodes[1]]), nodes[face_nodes[2]]),
                );
                boundary.push(BoundaryFace {
                    nodes: face_nodes,
                    region: label(key, centroid),
                    tet: t,
                });
            }
        }
        if !boundary.iter().any(|f| f.region == BoundaryRegion::Dirichlet) {
            return Err(Error::invalid("no boundary face is labelled Dirichlet"));
        }
        let tables = geometry_tables(&nodes, &tets, &boundary)?;
        Ok(Mesh {
            nodes,
            tets,
            boundary,
            tables,
        })
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    pub fn tables(&self) -> &GeometryTables {
        &self.tables
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn volume(&self, t: usize) -> f64 {
        self.tables.volumes[t]
    }

    pub fn gradients(&self, t: usize) -> &[Vec3; 4] {
        &self.tables.gradients[t]
    }

    pub fn lumped_weights(&self) -> &[f64] {
        &self.tables.lumped_weights
    }

    pub fn total_volume(&self) -> f64 {
        self.tables.volumes.iter().sum()
    }

    pub fn tet_centroid(&self, t: usize) -> Vec3 {
        let p = self.tets[t].map(|v| self.nodes[v]);
        vec3::scale(0.25, vec3::add(vec3::add(p[0], p[1]), vec3::add(p[2], p[3])))
    }

    /// Geometry of every face labelled `region`.
    pub fn faces_in(&self, region: BoundaryRegion) -> impl Iterator<Item = (&BoundaryFace, &FaceGeometry)> {
        self.boundary
            .iter()
            .zip(&self.tables.faces)
            .filter(move |(f, _)| f.region == region)
    }

    pub fn region_area(&self, region: BoundaryRegion) -> f64 {
        self.faces_in(region).map(|(_, g)| g.area).fold(0.0, |a, b| a + b)
    }

    /// `true` for nodes on a Dirichlet face.
    pub fn dirichlet_nodes(&self) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for f in self.boundary.iter().filter(|f| f.region == BoundaryRegion::Dirichlet) {
            for &v in &f.nodes {
                mask[v] = true;
            }
        }
        mask
    }

    /// Longest edge over all tets.
    pub fn max_edge(&self) -> f64 {
        self.tets
            .iter()
            .flat_map(|tet| {
                (0..4).flat_map(move |a| (a + 1..4).map(move |b| (tet[a], tet[b])))
            })
            .map(|(a, b)| vec3::norm(vec3::sub(self.nodes[a], self.nodes[b])))
            .fold(0.0, f64::max)
    }
}

/// Per-tet volumes and barycentric gradients, lumped weights and boundary
/// face geometry. Tets must already be positively oriented.
pub fn geometry_tables(nodes: &[Vec3], tets: &[[usize; 4]], faces: &[BoundaryFace]) -> Result<GeometryTables> {
    let mut volumes = Vec::with_capacity(tets.len());
    let mut gradients = Vec::with_capacity(tets.len());
    let mut lumped_weights = vec![0.0; nodes.len()];
    for (t, tet) in tets.iter().enumerate() {
        let p = tet.map(|v| nodes[v]);
        let e1 = vec3::sub(p[1], p[0]);
        let e2 = vec3::sub(p[2], p[0]);
        let e3 = vec3::sub(p[3], p[0]);
        let det = vec3::dot(e1, vec3::cross(e2, e3));
        if !(det > 0.0) {
            return Err(Error::invalid(format!("tet {t} is degenerate or inverted (6|K| = {det:.3e})")));
        }
        let g1 = vec3::scale(1.0 / det, vec3::cross(e2, e3));
        let g2 = vec3::scale(1.0 / det, vec3::cross(e3, e1));
        let g3 = vec3::scale(1.0 / det, vec3::cross(e1, e2));
        let g0 = vec3::scale(-1.0, vec3::add(vec3::add(g1, g2), g3));
        let vol = det / 6.0;
        for &v in tet {
            lumped_weights[v] += vol / 4.0;
        }
        volumes.push(vol);
        gradients.push([g0, g1, g2, g3]);
    }
    let mut face_geo = Vec::with_capacity(faces.len());
    for (i, f) in faces.iter().enumerate() {
        let p = f.nodes.map(|v| nodes[v]);
        let c = vec3::cross(vec3::sub(p[1], p[0]), vec3::sub(p[2], p[0]));
        let twice_area = vec3::norm(c);
        if !(twice_area > 0.0) {
            return Err(Error::invalid(format!("boundary face {i} has zero area")));
        }
        let centroid = vec3::scale(1.0 / 3.0, vec3::add(vec3::add(p[0], p[1]), p[2]));
        let opposite = tets[f.tet]
            .iter()
            .copied()
            .find(|v| !f.nodes.contains(v))
            .expect("face belongs to its tet");
        let mut normal = vec3::scale(1.0 / twice_area, c);
        if vec3::dot(normal, vec3::sub(centroid, nodes[opposite])) < 0.0 {
            normal = vec3::scale(-1.0, normal);
        }
        face_geo.push(FaceGeometry {
            face: i,
            area: 0.5 * twice_area,
            normal,
            centroid,
        });
    }
    Ok(GeometryTables {
        volumes,
        gradients,
        lumped_weights,
        faces: face_geo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tet() -> Mesh {
        let nodes = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        Mesh::new(nodes, vec![[0, 1, 2, 3]], |_, c| {
            if c[0].abs() < 1e-12 {
                BoundaryRegion::Dirichlet
            } else {
                BoundaryRegion::Neumann
            }
        })
        .unwrap()
    }

    #[test]
    fn reference_tet_geometry() {
        let m = reference_tet();
        assert!((m.volume(0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(m.gradients(0)[0], [-1.0, -1.0, -1.0]);
        assert_eq!(m.gradients(0)[1], [1.0, 0.0, 0.0]);
        assert_eq!(m.boundary_faces().len(), 4);
        for w in m.lumped_weights() {
            assert!((w - 1.0 / 24.0).abs() < 1e-16);
        }
    }

    #[test]
    fn inverted_tet_is_reoriented() {
        let nodes = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let m = Mesh::new(nodes, vec![[0, 1, 2, 3]], |_, _| BoundaryRegion::Dirichlet).unwrap();
        assert!(m.volume(0) > 0.0);
    }

    #[test]
    fn degenerate_tet_is_rejected() {
        let nodes = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        let err = Mesh::new(nodes, vec![[0, 1, 2, 3]], |_, _| BoundaryRegion::Dirichlet).unwrap_err();
        assert!(err.to_string().contains("tet 0"), "{err}");
    }

    #[test]
    fn missing_dirichlet_is_rejected() {
        let nodes = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(Mesh::new(nodes, vec![[0, 1, 2, 3]], |_, _| BoundaryRegion::Other).is_err());
    }

    #[test]
    fn normals_point_outward() {
        let m = reference_tet();
        for (f, g) in m.boundary_faces().iter().zip(&m.tables().faces) {
            let opp = m.tets()[f.tet].iter().copied().find(|v| !f.nodes.contains(v)).unwrap();
            assert!(vec3::dot(g.normal, vec3::sub(g.centroid, m.nodes()[opp])) > 0.0);
            assert!((vec3::norm(g.normal) - 1.0).abs() < 1e-14);
        }
        // the slanted face has area sqrt(3)/2 and normal (1,1,1)/sqrt(3)
        let slanted = m.tables().faces.iter().find(|g| g.normal[0] > 0.5).unwrap();
        assert!((slanted.area - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }
}
