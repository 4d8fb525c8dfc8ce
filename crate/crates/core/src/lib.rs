//! Steady-state compact thermal simulation of single-die and stacked multi-die floorplans.
//!
//! A [`Stack`] of layers is cut into finite-volume cells ([`mesh::discretize`]), assembled
//! into `G·T = P` with a heat-sink node on the package face ([`mesh::assemble`]) and solved
//! with preconditioned conjugate gradients ([`solver::solve_steady`]). [`analysis`] turns the
//! field into block, layer and global observables; [`scenarios`] rebuilds the reference
//! experiments and [`placement`] searches processor placements.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the crate
//! root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod io;
pub mod mesh;
pub mod model;
pub mod pipeline;
pub mod placement;
pub mod scalar;
pub mod scenarios;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use model::{AttachSide, GridSpec};
pub use scalar::Scalar;
pub use solver::SolveOptions;

pub type Block = model::Block<f64>;
pub type Floorplan = model::Floorplan<f64>;
pub type Material = model::Material<f64>;
pub type Layer = model::Layer<f64>;
pub type Stack = model::Stack<f64>;
pub type PackageModel = model::PackageModel<f64>;
pub type Mesh = mesh::Mesh<f64>;
pub type SparseSystem = mesh::SparseSystem<f64>;
pub type CsrMatrix = sparse::CsrMatrix<f64>;
pub type TemperatureField = solver::TemperatureField<f64>;
pub type PowerMap = io::PowerMap<f64>;
pub type Simulation = pipeline::Simulation<f64>;
