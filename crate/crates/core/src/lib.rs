//! Lagrangian car-following discretization of the LWR traffic model and
//! the second-order models around it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod conditions;
pub mod engine;
pub mod error;
pub mod fundamental;
pub mod oracle;

pub use error::{Error, Result};
pub use fundamental::{Diagram, FundamentalDiagram, Greenshields, Kerner, Triangular};
