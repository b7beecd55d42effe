//! Max-min fair downlink allocation for cellular networks whose gNBs feed
//! wirelessly backhauled relays.
//!
//! Each gNB solves its own problem: split the backhaul band among its relays
//! and every station's band among its users so that the smallest user
//! throughput is as large as possible, subject to bandwidth floors, Shannon
//! bounds, relay backhaul capacity and the gNB's wired traffic cap.

pub mod allocators;
pub mod channels;
pub mod error;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod synthetic;

pub use error::{Error, Result};
