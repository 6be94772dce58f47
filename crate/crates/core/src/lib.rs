//! Guaranteed lower eigenvalue bounds for the clamped plate.
//!
//! The crate assembles the Morley discretisation of the bi-Laplacian with
//! homogeneous clamped boundary conditions and its extra-stabilised variant,
//! whose discrete eigenvalues are lower bounds for the exact ones as soon as
//! `λ_h κ₂² h_max⁴ ≤ 1`. Around this core sit newest-vertex bisection, an
//! adaptive loop, a Crouzeix–Raviart analogue for the Laplacian, and a kit for
//! the three-dimensional Worsey–Farin C¹ macro element.

pub mod afem;
pub mod crlaplace;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod morley;
pub mod quadrature;
pub mod wf3d;

pub use error::{GlbError, Result};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/morley.md")]
    mod morley {}
    #[doc = include_str!("../../../book/src/eigenvalues.md")]
    mod eigenvalues {}
    #[doc = include_str!("../../../book/src/adaptivity.md")]
    mod adaptivity {}
    #[doc = include_str!("../../../book/src/laplacian.md")]
    mod laplacian {}
    #[doc = include_str!("../../../book/src/wf3d.md")]
    mod wf3d {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
