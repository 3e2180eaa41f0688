//! The runnable daemon.
//!
//! [`NodeCore`] holds every piece of mutable state (chain, peers, sessions)
//! and is driven by one task. Sockets, timers and the miner only send it
//! commands.

pub mod api;
mod config;
mod core;
mod server;

pub use config::{
    ConfigError, NodeConfig, CONFIG_ENV, DEFAULT_AUTO_MINE_MS, DEFAULT_CLIENT_PORT, DEFAULT_DIFFICULTY,
    DEFAULT_DISCOVERY_PORT, DEFAULT_TCP_PORT, MIN_PASSPHRASE_CHARS,
};
pub use core::{ConnId, NodeCore, NodeStatus, Output, Target, MANUAL_DIFFICULTY};
pub use server::{run, run_until};

use std::path::PathBuf;

use thiserror::Error;

use crate::ledger::LedgerError;
use crate::missions::PackError;

#[derive(Debug, Error)]
pub enum NodeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("{what} port {port} is already in use; stop the other process or pick another port")]
    PortInUse { what: &'static str, port: u16 },
    #[error("cannot bind {what} port {port}: {source}")]
    Bind {
        what: &'static str,
        port: u16,
        source: std::io::Error,
    },
    #[error("cannot read mission pack {path}: {source}")]
    PackRead { path: PathBuf, source: std::io::Error },
    #[error("invalid mission pack: {0}")]
    Pack(PackError),
    #[error(transparent)]
    Io(std::io::Error),
}
