//! Monolithic fully Eulerian fluid-structure interaction on unfitted
//! quadrilateral meshes.

pub mod assembly;
pub mod cutgeom;
pub mod driver;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod postproc;
pub mod quadrature;
pub mod solver;
pub mod vtk;
