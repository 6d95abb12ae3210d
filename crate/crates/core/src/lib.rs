//! Static analysis of R source code at corpus scale.

pub mod cli;
pub mod corpus;
pub mod dataflow;
pub mod features;
pub mod report;
pub mod stats;
pub mod syntax;
