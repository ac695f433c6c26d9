//! Config-driven experiment runner: loads a TOML experiment, runs the
//! requested pipelines and writes long-format results plus a run record.

pub mod compare;
pub mod config;
pub mod error;
pub mod record;
pub mod run;
