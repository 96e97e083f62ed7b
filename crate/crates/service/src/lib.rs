//! HTTP service, log persistence and batch commands for the proof tutor.

pub mod api;
pub mod commands;
pub mod store;
