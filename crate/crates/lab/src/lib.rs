//! Problem files, report formats, parallel sweeps and the `crossing`
//! command-line driver on top of `crossing-core`.

pub mod cli;
pub mod meta;
pub mod parallel;
pub mod problem_file;
pub mod svg;
pub mod tables;
