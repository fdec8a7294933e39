pub mod belief;
pub mod channel;
pub mod codes;
pub mod error;
pub mod harness;
pub mod partition;
pub mod source;
pub mod type_engine;
pub mod zero_error;
