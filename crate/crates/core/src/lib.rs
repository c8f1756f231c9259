//! Curvature flows for inversive-distance circle packings on closed
//! triangulated surfaces, with surgery by edge flipping.
//!
//! A [`DecoratedMetric`] carries edge lengths, vertex radii and a conformal
//! factor `u` on a [`DeltaComplex`]. [`flow::run`] moves `u` until the
//! combinatorial curvature reaches a prescribed target, flipping edges
//! whenever the weighted Delaunay condition fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curvature;
pub mod dpm;
pub mod eigen;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod mesh;
pub mod metric;
pub mod presets;
pub mod surgery;
pub mod testkit;

pub use curvature::{calabi_energy, curvature, fd_jacobian, jacobian, CurvatureJacobian, CurvatureVector};
pub use dpm::{emit_dpm, parse_dpm, Dpm, DpmDocument};
pub use error::{Error, Result};
pub use flow::{run, FlowConfig, FlowKind, FlowTrace, Termination};
pub use mesh::{DeltaComplex, EdgeHandle, Slot};
pub use metric::DecoratedMetric;
pub use presets::Preset;
pub use surgery::{delaunay_violations, flip_metric, make_delaunay, SurgeryEvent};
