//! Constraint model over trip slots: domains, static compatibility sets,
//! counter bounds, and the propagation rules.

pub mod domain;
pub mod km;
pub mod propagate;
pub mod sets;
