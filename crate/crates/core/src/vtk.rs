//! Legacy ASCII VTK (version 3.0) unstructured grid with Lagrange triangle
//! cells (VTK cell type 69). The layout is described in `docs/vtk_format.md`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::mesh::ParametricMesh;

pub const LAGRANGE_TRIANGLE: u8 = 69;

/// Writes the mesh with one scalar point field per `(name, values)` pair.
pub fn write_vtk<W: Write>(w: &mut W, mesh: &ParametricMesh, title: &str, fields: &[(&str, &[f64])]) -> Result<()> {
    for (name, values) in fields {
        if values.len() != mesh.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "field {name} has {} values, mesh has {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("invalid field name {name:?}")));
        }
    }
    let title: String = title.chars().filter(|c| *c != '\n' && *c != '\r').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_nodes())?;
    for x in &mesh.nodes {
        writeln!(w, "{:e} {:e} {:e}", x.x, x.y, x.z)?;
    }
    let per_cell = mesh.reference.num_nodes();
    writeln!(w, "CELLS {} {}", mesh.num_elements(), mesh.num_elements() * (per_cell + 1))?;
    for conn in &mesh.elements {
        write!(w, "{per_cell}")?;
        for g in conn {
            write!(w, " {g}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.num_elements())?;
    for _ in &mesh.elements {
        writeln!(w, "{LAGRANGE_TRIANGLE}")?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.num_nodes())?;
        for (name, values) in fields {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(w, "{v:e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::problem::Problem;

    #[test]
    fn small_flat_file() {
        let p = Problem::flat_square(1);
        let m = build_mesh(2, 2, &p).unwrap();
        let u: Vec<f64> = m.nodes.iter().map(|x| x.x).collect();
        let mut out = Vec::new();
        write_vtk(&mut out, &m, "demo", &[("u", &u)]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            &lines[..5],
            ["# vtk DataFile Version 3.0", "demo", "ASCII", "DATASET UNSTRUCTURED_GRID", "POINTS 25 double"]
        );
        let cells = 5 + 25;
        assert_eq!(lines[cells], "CELLS 8 56");
        assert_eq!(lines[cells + 1].split(' ').count(), 7);
        assert_eq!(lines[cells + 9], "CELL_TYPES 8");
        assert_eq!(lines[cells + 10], "69");
        assert_eq!(lines[cells + 18], "POINT_DATA 25");
        assert_eq!(lines[cells + 19], "SCALARS u double 1");
        assert_eq!(lines.len(), cells + 21 + 25);
    }

    #[test]
    fn field_length_checked() {
        let p = Problem::flat_square(1);
        let m = build_mesh(2, 1, &p).unwrap();
        let mut out = Vec::new();
        assert!(write_vtk(&mut out, &m, "t", &[("u", &[1.0])]).is_err());
        assert!(write_vtk(&mut out, &m, "t", &[("a b", &[0.0; 9])]).is_err());
    }
}
