//! Small shared plumbing: the `# key = value` + CSV table format, atomic
//! writes, and an executor switch between sequential and rayon iteration.

pub mod fsx;
pub mod par;
pub mod table;

pub use par::Exec;
pub use table::{Table, TableError};
