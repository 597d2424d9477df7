//! Transplant risk scoring on top of lppf: weighted classifiers compiled to
//! lppf programs, case records, batch runs with explanations, a file-backed
//! store and the HTTP workbench service.

pub mod classifier;
pub mod records;
pub mod report;
pub mod runs;
pub mod schema;
pub mod scoring;
pub mod service;
pub mod store;
