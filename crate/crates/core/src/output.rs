//! CSV time series and legacy VTK snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::fem::NodalField;
use crate::mesh::Mesh;
use crate::vec3;

pub const CSV_HEADER: &str = "t,x_mag_avg,y_mag_avg,z_mag_avg,x_disp_avg,y_disp_avg,z_disp_avg,\
totalenergy,kinetic,exchange,elastic,zeeman,work,constraint_l1,nodal_max,energy_residual";

/// One line of the time series. Energies are stored as they enter the
/// total, so the elastic, work and kinetic columns include the factor `κ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub averages: [f64; 6],
    pub energy: EnergyBreakdown,
    pub constraint_l1: f64,
    pub nodal_max: f64,
    pub energy_residual: f64,
}

pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<CsvWriter> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = CsvWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(CSV_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn write(&mut self, row: &CsvRow) -> Result<()> {
        let e = &row.energy;
        let a = &row.averages;
        let cols = [
            row.t,
            a[0],
            a[1],
            a[2],
            a[3],
            a[4],
            a[5],
            e.total(),
            e.kappa * e.kinetic,
            e.exchange,
            e.kappa * e.elastic,
            e.zeeman,
            e.kappa * e.work,
            row.constraint_l1,
            row.nodal_max,
            row.energy_residual,
        ];
        let s = cols.iter().map(|c| format!("{c:e}")).collect::<Vec<_>>().join(",");
        self.line(&s)
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Reads back a file written by [`CsvWriter`] as rows of numbers.
pub fn read_csv(path: &Path) -> Result<Vec<[f64; 16]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse {
            section: path.display().to_string(),
            line: 1,
            message: "unexpected header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let bad = || Error::Parse {
                section: path.display().to_string(),
                line: i + 2,
                message: "expected 16 numeric columns".into(),
            };
            let vals: Vec<f64> = l.split(',').map(|c| c.parse().map_err(|_| bad())).collect::<Result<_>>()?;
            vals.try_into().map_err(|_| bad())
        })
        .collect()
}

/// Legacy ASCII unstructured grid with the magnetisation, the displacement
/// and `|m|` as point data.
pub fn write_vtk(path: &Path, mesh: &Mesh, m: &NodalField, u: &NodalField, title: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_vtk_to(&mut w, mesh, m, u, title)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_vtk_to(w: &mut impl Write, mesh: &Mesh, m: &NodalField, u: &NodalField, title: &str) -> std::io::Result<()> {
    let n = mesh.n_nodes();
    let nt = mesh.n_tets();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for p in mesh.nodes() {
        writeln!(w, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
    }
    writeln!(w, "CELLS {nt} {}", 5 * nt)?;
    for t in mesh.tets() {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "10")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    for (name, field) in [("magnetisation", m), ("displacement", u)] {
        writeln!(w, "VECTORS {name} double")?;
        for v in &field.values {
            writeln!(w, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
        }
    }
    writeln!(w, "SCALARS m_norm double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &m.values {
        writeln!(w, "{:e}", vec3::norm(*v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;

    #[test]
    fn unit_cube_snapshot_counts() {
        let mesh = box_mesh([1.0; 3], [1; 3], |p| p[0] == 0.0, |_| false).unwrap();
        let m = NodalField::constant(8, [0.0, 0.0, 1.0]);
        let u = NodalField::zeros(8);
        let mut buf = Vec::new();
        write_vtk_to(&mut buf, &mesh, &m, &u, "t").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("POINTS 8 double"));
        assert!(text.contains("CELLS 6 30"));
        assert_eq!(text.lines().filter(|l| *l == "10").count(), 6);
        assert!(text.contains("VECTORS magnetisation double"));
        assert!(text.contains("VECTORS displacement double"));
        assert!(text.contains("SCALARS m_norm double 1"));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let mut w = CsvWriter::create(&path).unwrap();
        let row = CsvRow {
            t: 0.5,
            averages: [1.0, 0.0, 0.0, 1e-20, 0.0, -3.0],
            energy: EnergyBreakdown {
                exchange: 1.0,
                zeeman: -0.5,
                elastic: 2.0,
                work: -1.0,
                kinetic: 4.0,
                kappa: 0.5,
            },
            constraint_l1: 1e-3,
            nodal_max: 1.0,
            energy_residual: 0.0,
        };
        w.write(&row).unwrap();
        w.finish().unwrap();
        let rows = read_csv(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0][0], 0.5);
        assert_eq!(rows[0][7], 1.0 - 0.5 + 0.5 * (2.0 - 1.0 + 4.0));
        assert_eq!(rows[0][8], 2.0);
    }
}
