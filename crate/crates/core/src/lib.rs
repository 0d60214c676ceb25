pub mod cli;
pub mod corpus;
pub mod dot;
pub mod error;
pub mod grouping;
pub mod kernel;
pub mod ordering;
pub mod reduction;
pub mod scalar;
pub mod search;
pub mod splitting;
pub mod vector;
