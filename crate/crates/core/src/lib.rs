//! Fourier components of the Szegő projector on circle-invariant CR
//! hypersurfaces in ℂⁿ, and the equivariant embeddings built from them.

pub mod basis;
pub mod cache;
pub mod embedding;
pub mod fourier;
pub mod kernel;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod linalg;
pub mod poly;

pub use error::{Error, Result};
pub use geometry::{Manifold, ManifoldKind, ManifoldSpec, SurfacePoint, WeightVector};
