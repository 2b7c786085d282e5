//! Library side of the `massey` command: report types, dispatch, and the
//! check suites behind `massey selftest`.

pub mod app;
pub mod report;
pub mod suites;
