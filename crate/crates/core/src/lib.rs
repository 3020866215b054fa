//! Inter-cell load coupling with joint transmission (JT) in heterogeneous
//! cellular networks, and cell-UE association optimizers built on it.
//!
//! The crate is organised bottom-up:
//!
//! * [`netmodel`]: scenarios, channel model, hexagonal generator and the
//!   3-SAT reduction gadget.
//! * [`coupling`]: the SINR map, the load map and their fixed point.
//! * [`approx`]: per-UE load-vs-interference curves, their linearization and
//!   the global load bounds used to tighten them.
//! * [`milp`]: the linearized mixed-integer model, LP-format export and an
//!   internal branch-and-bound solver.
//! * [`minl`]: the condition-driven link-adjustment heuristic.
//! * [`experiment`]: experiment harness, brute-force oracle and reports.

pub mod approx;
pub mod coupling;
pub mod error;
pub mod experiment;
pub mod milp;
pub mod minl;
pub mod netmodel;

pub use error::{Error, Result};
pub use netmodel::{Association, Cell, CellKind, NetworkInstance, UserEquipment};
