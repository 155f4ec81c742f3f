//! Rolling stock scheduling with maintenance constraints.
//!
//! The crate covers two solution routes over the same instance model: an
//! exact constraint-propagation search that maximises allocated trips and
//! minimises empty km under hard maintenance rules, and a QUBO formulation
//! solved by local search (tabu / simulated annealing) or exhaustively on
//! small models. Validation and reporting compare both routes on equal terms.

pub mod cp;
pub mod io;
pub mod model;
pub mod qubo;
pub mod report;
pub mod search;
pub mod sim;
pub mod solve;
