//! Wallet service, HTTP API, client and CLI on top of `mfkdf-wallet-core`.

pub mod api;
pub mod cli;
pub mod client;
pub mod config;
pub mod error;
pub mod http;
pub mod scenario;
pub mod service;
pub mod world;
