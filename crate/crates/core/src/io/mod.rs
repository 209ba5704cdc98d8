//! File formats: φ-tables, run configuration, reference values and reports.

pub mod config;
pub mod phi_table;
pub mod reference;
pub mod report;

pub use config::{IoConfig, OperationConfig, RunConfig};
pub use phi_table::{load_phi_table, read_phi_table, save_phi_table, write_phi_table};
pub use reference::Reference;
pub use report::{Report, Status, Verdict};
