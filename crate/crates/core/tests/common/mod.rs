//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code)]

pub mod oracle;
pub mod quad;
pub mod stats;
