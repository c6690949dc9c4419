//! Legacy VTK 2.0 ASCII writer for quadrilateral meshes.

use std::io::{self, Write};

use crate::geometry::Point;

pub enum PointData<'a> {
    Scalars(&'a [f64]),
    Vectors(&'a [Point]),
}

const VTK_QUAD: u8 = 9;

pub fn write_quads<W: Write>(
    w: &mut W,
    title: &str,
    points: &[Point],
    cells: &[[usize; 4]],
    data: &[(&str, PointData<'_>)],
) -> io::Result<()> {
    writeln!(w, "# vtk DataFile Version 2.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in points {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", cells.len(), 5 * cells.len())?;
    for c in cells {
        writeln!(w, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in cells {
        writeln!(w, "{VTK_QUAD}")?;
    }
    if data.is_empty() {
        return Ok(());
    }
    writeln!(w, "POINT_DATA {}", points.len())?;
    for (name, values) in data {
        match values {
            PointData::Scalars(s) => {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in s.iter() {
                    writeln!(w, "{v}")?;
                }
            }
            PointData::Vectors(vs) => {
                writeln!(w, "VECTORS {name} double")?;
                for v in vs.iter() {
                    writeln!(w, "{} {} 0", v[0], v[1])?;
                }
            }
        }
    }
    Ok(())
}
