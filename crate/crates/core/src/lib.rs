//! Compact placement of convex polygonal fragments on a work surface.
//!
//! The crate covers the full pipeline: synthetic fragment layouts cut from a
//! slab ([`dataset`]), a kinematic pick-and-place environment with contact
//! checks and shaped rewards ([`env`]), a distributional actor-critic learner
//! with curriculum support ([`agent`]), two scripted planner baselines
//! ([`baselines`]), assembly metrics ([`eval`]) and SVG rendering
//! ([`render`]).
//!
//! Math modules are generic over the scalar type via [`scalar::Real`]; the
//! aliases below pin the shipped pipeline to f64.

pub mod agent;
pub mod baselines;
pub mod dataset;
pub mod env;
pub mod eval;
pub mod geom;
pub mod scalar;

pub use scalar::{NetScalar, Real};

/// Scalar type used by the shipped pipeline.
pub type Scalar = f64;

pub type Point2 = geom::Point2<Scalar>;
pub type Point3 = geom::Point3<Scalar>;
pub type Pose2 = geom::Pose2<Scalar>;
pub type Segment2 = geom::Segment2<Scalar>;
pub type ConvexPolygon = geom::ConvexPolygon<Scalar>;
