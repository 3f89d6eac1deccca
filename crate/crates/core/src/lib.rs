//! Velocity-level pressure-field contact for rigid-body simulation.
//!
//! Compliant bodies carry a tetrahedral mesh with a piecewise-linear pressure
//! field; rigid bodies carry a triangle surface. Where two bodies overlap, the
//! surface of equal pressure is computed as a set of convex polygons
//! ([`contact_surface`]), each polygon becomes a compliant point contact
//! ([`discrete_contact`]), and the rigid-body dynamics ([`multibody`]) are
//! advanced by an implicit fixed-step solver ([`stepper`]). The
//! [`experiments`] module drives scenarios from TOML files.

pub mod contact_surface;
pub mod discrete_contact;
pub mod error;
pub mod experiments;
pub mod mesh;
pub mod multibody;
pub mod pressure_field;
pub mod stepper;

pub use error::{Error, Result};
