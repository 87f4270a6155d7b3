//! Numerical laboratory for planar anisotropic (Finsler) geometry.
//!
//! The crate models a convex anisotropy `F` on the plane through the boundary
//! profile `phi(theta) = F(cos theta, sin theta)`, builds the associated Wulff
//! shape, discretizes closed curves as polylines or convex support functions,
//! integrates the anisotropic curvature flow, and checks the sharp lower bound
//! relating the maximal anisotropic curvature of a Jordan curve to the area it
//! encloses, together with the duality and isoperimetric identities that back
//! the bound.

pub mod anisotropy;
pub mod curve;
pub mod error;
pub mod flow;
pub mod gen;
pub mod io;
pub mod spectral;
pub mod vec2;
pub mod verify;

pub use anisotropy::Anisotropy;
pub use curve::{ConvexSupportCurve, CurveGeometry, PolylineCurve};
pub use error::{Error, Result};
pub use flow::{FlowConfig, FlowTrace, StopReason};
pub use gen::GenSpec;
pub use spectral::PeriodicField;
pub use vec2::Vec2;
pub use verify::InequalityReport;
