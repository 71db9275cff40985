//! HTTP service and operator tooling for the slowvoice board.

pub mod api;
pub mod config;
pub mod credentials;
pub mod mailers;
pub mod ops;
pub mod service;
pub mod state;
