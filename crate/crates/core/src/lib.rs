//! Classification machinery for dynamics near homoclinic and heteroclinic
//! points: periodic cocycles, heteroclinic graphs and their rewrites,
//! polytopes of Lyapunov maps, a constructive realizer on toy models, and
//! concrete planar/3-D map models.

pub mod cocycle;
pub mod dynamics;
pub mod error;
pub mod graph;
mod linalg;
pub mod polytope;
pub mod realize;
pub mod rewrite;
pub mod scenario;

pub use error::{Error, Result};
