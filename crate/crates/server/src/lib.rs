//! The SFS network service: mutually authenticated TLS, per-request
//! principal resolution against the directory, ACL enforcement and an audit
//! event for every request.

#![forbid(unsafe_code)]

pub mod api;
pub mod config;
pub mod offline;
mod serve;
pub mod state;
pub mod testbed;
pub mod tls;

pub use config::ServerConfig;
pub use serve::{RunningServer, Server, MAX_JSON_BODY, SHA256_HEADER};
pub use state::{AppState, AuthFailure};
