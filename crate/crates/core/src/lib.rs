//! Moving-domain advection-diffusion on a fixed background grid.
//!
//! The domain boundary is a closed cubic-spline marker curve advected by a
//! Runge-Kutta flow map; the PDE is discretised with BDF characteristic
//! Galerkin time stepping and unfitted `Q_k` finite elements (Nitsche
//! boundary conditions, ghost-penalty stabilisation).

pub mod cutmesh;
pub mod error;
pub mod fem;
pub mod fields;
pub mod flowmap;
pub mod geom;
pub mod interface;
pub mod problems;
pub mod quadrature;
pub mod stepper;
pub mod studies;

pub use cutmesh::{classify, CutTopology, Grid};
pub use error::{Error, Result};
pub use fem::{Discretization, FeFunction, FeSpace, FormParams};
pub use flowmap::{ButcherTableau, FlowMap, VelocityField};
pub use geom::{Mat2, Square, Vec2};
pub use interface::MarkerCurve;
pub use problems::{builtin, Problem};
pub use stepper::{run, RunConfig, RunReport};
