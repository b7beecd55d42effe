//! Independent checks of allocator output: constraint residuals, an
//! exhaustive search over relay splits and a max-min exchange certificate.

mod certificate;
mod feasibility;
mod grid;

pub use certificate::{maxmin_certificate, Certificate, Transfer, Witness};
pub use feasibility::{verify_feasibility, FeasibilityReport, CONSTRAINTS};
pub use grid::{grid_oracle, GridOutcome, MAX_RELAYS, MAX_USERS};
