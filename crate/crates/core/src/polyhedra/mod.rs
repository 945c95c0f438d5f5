//! Polyhedra in inequality form, generated cones, faces, exact projection,
//! Fourier–Motzkin elimination and piecewise polyhedral mappings.

pub mod cone;
pub mod elimination;
pub mod faces;
pub mod ppm;
pub mod polyhedron;
pub mod projection;

pub use cone::GenCone;
pub use elimination::project_out;
pub use faces::{face_budget, face_from_tight, face_of_maximizers, faces_enumerate, vertices, FaceDescriptor};
pub use polyhedron::Polyhedron;
pub use ppm::{ppm_minimal_identifiable, PiecewisePolyhedralMap};
pub use projection::{project, projection_kkt_holds, AffineProjector, LocalProjector, NormalConeCache, Projector};
