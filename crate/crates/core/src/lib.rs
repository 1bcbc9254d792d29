//! Optimal allocation of scarce resources across heterogeneous
//! statistical data sources.
//!
//! Each data source turns an allotted resource amount into statistical
//! quality through a known tradeoff function; the crate computes
//! allocations (and the matching linear aggregation weights) that
//! minimize the overall estimation loss or decision-error bound:
//!
//! * [`tradeoffs`] — the resource-quality function catalog
//! * [`aggregation`] — optimal convex aggregation weights
//! * [`solver`] — budget-simplex projections, projected gradient,
//!   and closed forms (best source, power KKT, water-filling)
//! * [`assignment`] — bijective assignment of fixed resource values
//! * [`support`] — sources observing subsets of the coordinates
//! * [`design`] — estimation from general linear measurements
//! * [`election`] — halfspace decisions (direct/indirect elections)
//! * [`sim`] — Monte Carlo validation of predicted risks and bounds
//! * [`scenario`] — scenario files, dispatch, and result emission

pub mod aggregation;
pub mod assignment;
pub mod design;
pub mod election;
pub mod error;
pub mod scenario;
pub mod sim;
pub mod solver;
pub mod support;
pub mod tradeoffs;

pub use error::{Error, Result};
pub use solver::{SimplexConstraint, SolverReport};
pub use tradeoffs::TradeoffFunction;
