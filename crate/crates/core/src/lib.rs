//! Verification laboratory for strongly convex complex Finsler metrics.
//!
//! The crate evaluates connection and curvature data of a metric
//! G(z, v) given in closed form, checks the structural identities that
//! relate the real and complex descriptions, and reproduces classical
//! comparison estimates (index-form vanishing, conjugate-point diameter
//! bounds, Laplacian/Hessian comparison, volume ratios) on a catalog of
//! concrete metrics.
//!
//! Layout:
//! - [`expr`]: metric definition language (parser, printer, evaluator)
//! - [`jet`]: exact high-order derivatives by truncated Taylor arithmetic
//! - [`metric`]: validated metric specs and the example catalog
//! - [`real_engine`]: real Finsler tensors (spray, connections, curvature)
//! - [`complex_engine`]: Levi metric, complex connection, holomorphic curvature
//! - [`bridge`]: the real/complex dictionary and its identities
//! - [`geodesic`]: geodesics, Jacobi fields, index forms, distance Hessians
//! - [`measure`]: volume densities and the S-curvature
//! - [`volume`]: Monte-Carlo volumes of geodesic balls
//! - [`harness`]: check suites and theorem-level verifications
//! - [`report`]: structured, deterministic result reporting

// Tensor index work reads best with explicit index loops; the negated
// comparisons are deliberate NaN guards.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::type_complexity)]
#![allow(clippy::manual_is_multiple_of)]

pub mod bridge;
pub mod complex_engine;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod harness;
pub mod jet;
pub mod measure;
pub mod metric;
pub mod real_engine;
pub mod report;
pub mod sampling;
pub mod volume;

pub use error::{Error, Result};
