//! Executable model of secure multi-party computation with a balance scale,
//! heavy and light coins, opaque bags and joint shuffles.
//!
//! Boolean function specs are compiled into one of four physical protocols
//! (AND, threshold, symmetric, general), executed against player inputs, and
//! checked by exhaustive enumeration with exact rational probabilities.

pub mod apparatus;
pub mod cli;
pub mod function_specs;
pub mod protocol;
pub mod verification;
