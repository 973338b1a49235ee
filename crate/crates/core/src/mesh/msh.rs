//! Gmsh ASCII 2.2 reader and writer (tets and boundary triangles only).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{sorted3, BoundaryRegion, Mesh};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Physical tags written for each boundary region and for the volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MshTags {
    pub dirichlet: i64,
    pub neumann: i64,
    pub other: i64,
    pub volume: i64,
}

impl Default for MshTags {
    fn default() -> Self {
        MshTags {
            dirichlet: 1,
            neumann: 2,
            other: 3,
            volume: 10,
        }
    }
}

pub fn read_msh(path: &Path, tags: &HashMap<i64, BoundaryRegion>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_msh_str(&text, tags)
}

fn perr(section: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        section: section.to_string(),
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    fn expect(&mut self, section: &str, last_line: usize) -> Result<(usize, &'a str)> {
        self.next()
            .ok_or_else(|| perr(section, last_line, "unexpected end of file"))
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, section: &str, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(section, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| perr(section, line, format!("cannot parse {what} from {tok:?}")))
}

/// Parses MSH 2.2 text. Triangles carry boundary labels through their first
/// (physical) tag; tags absent from `tags` map to Other.
pub fn read_msh_str(text: &str, tags: &HashMap<i64, BoundaryRegion>) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let mut have_format = false;
    let mut nodes: Vec<Vec3> = Vec::new();
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    let mut raw_tets: Vec<([i64; 4], usize)> = Vec::new();
    let mut raw_tris: Vec<([i64; 3], i64, usize)> = Vec::new();
    let mut last = 0;

    while let Some((ln, header)) = lines.next() {
        last = ln;
        match header {
            "$MeshFormat" => {
                let s = "$MeshFormat";
                let (ln, l) = lines.expect(s, last)?;
                let mut it = l.split_whitespace();
                let version: String = parse_num(it.next(), s, ln, "version")?;
                if !version.starts_with("2.") {
                    return Err(perr(s, ln, format!("unsupported version {version}, expected 2.2")));
                }
                let file_type: i64 = parse_num(it.next(), s, ln, "file type")?;
                if file_type != 0 {
                    return Err(perr(s, ln, "binary files are not supported"));
                }
                let (ln, end) = lines.expect(s, ln)?;
                if end != "$EndMeshFormat" {
                    return Err(perr(s, ln, format!("expected $EndMeshFormat, found {end:?}")));
                }
                last = ln;
                have_format = true;
            }
            "$Nodes" => {
                let s = "$Nodes";
                let (ln, l) = lines.expect(s, last)?;
                let count: usize = parse_num(Some(l), s, ln, "node count")?;
                last = ln;
                for _ in 0..count {
                    let (ln, l) = lines.expect(s, last)?;
                    let mut it = l.split_whitespace();
                    let id: i64 = parse_num(it.next(), s, ln, "node id")?;
                    let x: f64 = parse_num(it.next(), s, ln, "x")?;
                    let y: f64 = parse_num(it.next(), s, ln, "y")?;
                    let z: f64 = parse_num(it.next(), s, ln, "z")?;
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(perr(s, ln, format!("duplicate node id {id}")));
                    }
                    nodes.push([x, y, z]);
                    last = ln;
                }
                let (ln, end) = lines.expect(s, last)?;
                if end != "$EndNodes" {
                    return Err(perr(s, ln, format!("expected $EndNodes, found {end:?}")));
                }
                last = ln;
            }
            "$Elements" => {
                let s = "$Elements";
                let (ln, l) = lines.expect(s, last)?;
                let count: usize = parse_num(Some(l), s, ln, "element count")?;
                last = ln;
                for _ in 0..count {
                    let (ln, l) = lines.expect(s, last)?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    let mut it = toks.iter().copied();
                    let _id: i64 = parse_num(it.next(), s, ln, "element id")?;
                    let etype: i64 = parse_num(it.next(), s, ln, "element type")?;
                    let ntags: usize = parse_num(it.next(), s, ln, "tag count")?;
                    let mut etags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        etags.push(parse_num::<i64>(it.next(), s, ln, "tag")?);
                    }
                    let rest: Vec<i64> = it
                        .map(|t| parse_num(Some(t), s, ln, "node id"))
                        .collect::<Result<_>>()?;
                    match etype {
                        2 => {
                            if rest.len() != 3 {
                                return Err(perr(s, ln, "triangle needs 3 nodes"));
                            }
                            raw_tris.push(([rest[0], rest[1], rest[2]], etags.first().copied().unwrap_or(0), ln));
                        }
                        4 => {
                            if rest.len() != 4 {
                                return Err(perr(s, ln, "tetrahedron needs 4 nodes"));
                            }
                            raw_tets.push(([rest[0], rest[1], rest[2], rest[3]], ln));
                        }
                        other => {
                            return Err(perr(
                                s,
                                ln,
                                format!("unsupported element type {other}; only triangles (2) and tetrahedra (4)"),
                            ))
                        }
                    }
                    last = ln;
                }
                let (ln, end) = lines.expect(s, last)?;
                if end != "$EndElements" {
                    return Err(perr(s, ln, format!("expected $EndElements, found {end:?}")));
                }
                last = ln;
            }
            other if other.starts_with('$') => {
                // skip sections we do not use
                let end = format!("$End{}", &other[1..]);
                loop {
                    let (ln, l) = lines.expect(other, last)?;
                    last = ln;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(perr("file", ln, format!("unexpected line {other:?}"))),
        }
    }
    if !have_format {
        return Err(perr("$MeshFormat", last, "missing $MeshFormat section"));
    }

    let lookup = |id: i64, section: &str, ln: usize| -> Result<usize> {
        node_index
            .get(&id)
            .copied()
            .ok_or_else(|| perr(section, ln, format!("unknown node id {id}")))
    };
    let mut tets = Vec::with_capacity(raw_tets.len());
    for (t, ln) in &raw_tets {
        let mut tet = [0; 4];
        for (slot, &id) in tet.iter_mut().zip(t) {
            *slot = lookup(id, "$Elements", *ln)?;
        }
        tets.push(tet);
    }
    let mut labels: HashMap<[usize; 3], (BoundaryRegion, usize)> = HashMap::new();
    for (tri, tag, ln) in &raw_tris {
        let mut f = [0; 3];
        for (slot, &id) in f.iter_mut().zip(tri) {
            *slot = lookup(id, "$Elements", *ln)?;
        }
        let region = tags.get(tag).copied().unwrap_or(BoundaryRegion::Other);
        labels.insert(sorted3(f), (region, *ln));
    }
    let mut used = 0usize;
    let mesh = Mesh::new(nodes, tets, |key, _| match labels.get(&key) {
        Some((r, _)) => {
            used += 1;
            *r
        }
        None => BoundaryRegion::Other,
    })?;
    if used != labels.len() {
        let boundary: std::collections::HashSet<[usize; 3]> =
            mesh.boundary_faces().iter().map(|f| sorted3(f.nodes)).collect();
        let (_, (_, ln)) = labels
            .iter()
            .find(|(k, _)| !boundary.contains(*k))
            .expect("some label is unused");
        return Err(perr("$Elements", *ln, "triangle is not a boundary face of the tetrahedral mesh"));
    }
    Ok(mesh)
}

/// Writes MSH 2.2 ASCII with one triangle per boundary face.
pub fn write_msh(mesh: &Mesh, path: &Path, tags: &MshTags) -> Result<()> {
    let mut out = String::new();
    out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(out, "{}", mesh.n_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{} {:e} {:e} {:e}", i + 1, p[0], p[1], p[2]);
    }
    out.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(out, "{}", mesh.boundary_faces().len() + mesh.n_tets());
    let mut id = 1;
    for f in mesh.boundary_faces() {
        let tag = match f.region {
            BoundaryRegion::Dirichlet => tags.dirichlet,
            BoundaryRegion::Neumann => tags.neumann,
            BoundaryRegion::Other => tags.other,
        };
        let _ = writeln!(out, "{id} 2 2 {tag} {tag} {} {} {}", f.nodes[0] + 1, f.nodes[1] + 1, f.nodes[2] + 1);
        id += 1;
    }
    for t in mesh.tets() {
        let v = tags.volume;
        let _ = writeln!(out, "{id} 4 2 {v} {v} {} {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
        id += 1;
    }
    out.push_str("$EndElements\n");
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Default physical-tag map matching [`MshTags::default`].
pub fn default_tag_map() -> HashMap<i64, BoundaryRegion> {
    let t = MshTags::default();
    HashMap::from([
        (t.dirichlet, BoundaryRegion::Dirichlet),
        (t.neumann, BoundaryRegion::Neumann),
        (t.other, BoundaryRegion::Other),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    const TET: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n$Elements\n2\n1 2 2 1 1 1 3 4\n2 4 2 10 10 1 2 3 4\n$EndElements\n";

    #[test]
    fn reads_single_tet() {
        let m = read_msh_str(TET, &default_tag_map()).unwrap();
        assert_eq!(m.n_tets(), 1);
        assert_eq!(m.region_area(BoundaryRegion::Dirichlet), 0.5);
        assert_eq!(m.boundary_faces().len(), 4);
    }

    #[test]
    fn unsupported_element_reports_line() {
        let bad = TET.replace("2 4 2 10 10 1 2 3 4", "2 5 2 10 10 1 2 3 4 1 2 3 4");
        match read_msh_str(&bad, &default_tag_map()) {
            Err(Error::Parse { section, line, .. }) => {
                assert_eq!(section, "$Elements");
                assert_eq!(line, 14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interior_triangle_rejected() {
        let two = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n5\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n5 1 1 1\n$EndNodes\n$Elements\n4\n1 2 2 1 1 1 3 4\n2 2 2 2 2 2 3 4\n3 4 2 10 10 1 2 3 4\n4 4 2 10 10 2 3 4 5\n$EndElements\n";
        let err = read_msh_str(two, &default_tag_map()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 15, .. }), "{err}");
    }

    #[test]
    fn skips_unknown_sections() {
        let text = format!("{TET}$NodeData\n1\n\"x\"\n$EndNodeData\n");
        assert!(read_msh_str(&text, &default_tag_map()).is_ok());
    }
}
