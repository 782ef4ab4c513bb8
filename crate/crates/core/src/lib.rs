//! Defect kinematics and the non-Riemannian geometry of a defective single
//! crystal, sampled on a z-invariant 2D grid.
//!
//! The crate is `no_std` (with `alloc`). Every field lives on a [`Grid2D`]
//! covering the (x, y) cross-section; nothing depends on z. The pipeline runs
//! from strain and defect densities through the Frank/Burgers tensors and
//! contortion, to the Bravais metric, the nonsymmetric connection, curvature
//! and torsion, parallel transport, point-defect nonmetricity and the
//! evolution of defect fields.
//!
//! Index convention: tensor slots are 0-based (`0 = x`, `1 = y`, `2 = z`) and
//! stored first-slot-major. Each constructor documents its slot map, e.g. a
//! [`Connection`] stores `Γ_{k;ij}` as `[k][i][j]`.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod defects;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod grid;
pub mod kinematics;
pub mod point_defects;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result, Warning};
pub use geometry::{Connection, Curvature, CurvatureForm, IndexContraction, Metric};
pub use grid::{Axis, Grid2D, NodeMask, Polyline, SurfaceRegion, TensorField};
pub use tensor::{levi_civita, SmallTensor};
