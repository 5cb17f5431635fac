//! Library surface of the `qshift` CLI: report builders, document
//! format, and input handling. The binary in `main.rs` is a thin argument
//! parser over these.

pub mod analyze;
pub mod dist;
pub mod doc;
pub mod fmt;
pub mod io;
pub mod simulate;
pub mod weights;
