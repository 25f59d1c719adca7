//! Exact computational engine for truncated spectral-triple differential
//! calculus: structured operator layers (circle, shift/Toeplitz suspension,
//! Pauli doubling), the universal graded algebra with its junk ideal, the
//! resulting quotient calculus, and Hermitian connections with lifting
//! along the double suspension.

pub mod conn;
pub mod error;
pub mod exact;
pub mod forms;
pub mod oper;
pub mod report;
pub mod triple;

pub use error::{Error, Result};
