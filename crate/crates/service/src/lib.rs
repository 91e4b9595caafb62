//! HTTP session service and batch command line for the concept navigation
//! engine.

pub mod api;
pub mod cli;
pub mod load;
