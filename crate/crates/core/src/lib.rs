pub mod cli;
pub mod diagnostics;
pub mod enumeration;
pub mod environment;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod observables;
pub mod report;
pub mod stats;
pub mod sum;
pub mod tree;
