use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::MAX_DIFFICULTY;

pub const CONFIG_ENV: &str = "CHUNKCHAIN_CONFIG";
pub const DEFAULT_TCP_PORT: u16 = 40124;
pub const DEFAULT_DISCOVERY_PORT: u16 = 40123;
pub const DEFAULT_CLIENT_PORT: u16 = 8080;
pub const DEFAULT_DIFFICULTY: u32 = 12;
pub const DEFAULT_AUTO_MINE_MS: u64 = 10_000;
pub const MIN_PASSPHRASE_CHARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub classroom_name: String,
    pub classroom_passphrase: String,
    /// Interface the TCP peer listener and client API bind to.
    pub bind_host: String,
    /// Host part of the `host:port` this node announces to peers. Detected
    /// from the routing table when unset.
    pub advertise_host: Option<String>,
    pub listen_tcp: u16,
    pub client_api: u16,
    pub discovery: bool,
    pub discovery_port: u16,
    pub static_peers: Vec<String>,
    pub difficulty: u32,
    /// 0 disables the auto-miner.
    pub auto_mine_interval_ms: u64,
    pub mission_pack_path: Option<PathBuf>,
    pub serve_ui_path: Option<PathBuf>,
    pub log_level: String,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            classroom_name: String::new(),
            classroom_passphrase: String::new(),
            bind_host: "0.0.0.0".into(),
            advertise_host: None,
            listen_tcp: DEFAULT_TCP_PORT,
            client_api: DEFAULT_CLIENT_PORT,
            discovery: true,
            discovery_port: DEFAULT_DISCOVERY_PORT,
            static_peers: Vec::new(),
            difficulty: DEFAULT_DIFFICULTY,
            auto_mine_interval_ms: DEFAULT_AUTO_MINE_MS,
            mission_pack_path: None,
            serve_ui_path: None,
            log_level: "off".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("classroom name must not be empty (use --classroom)")]
    MissingClassroom,
    #[error("passphrase must have at least 8 characters, got {0}")]
    ShortPassphrase(usize),
    #[error("difficulty {0} outside 0..=32")]
    Difficulty(u32),
    #[error("ports must be distinct: {0}")]
    PortClash(String),
    #[error("port must not be 0: {0}")]
    ZeroPort(&'static str),
    #[error("static peer {0:?} is not host:port")]
    BadPeer(String),
}

impl NodeConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    /// The file named by `explicit`, else by `$CHUNKCHAIN_CONFIG`, else defaults.
    pub fn load_or_default(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.classroom_name.trim().is_empty() {
            return Err(ConfigError::MissingClassroom);
        }
        let pass = self.classroom_passphrase.chars().count();
        if pass < MIN_PASSPHRASE_CHARS {
            return Err(ConfigError::ShortPassphrase(pass));
        }
        if self.difficulty > MAX_DIFFICULTY {
            return Err(ConfigError::Difficulty(self.difficulty));
        }
        for (name, port) in [
            ("listen_tcp", self.listen_tcp),
            ("client_api", self.client_api),
            ("discovery_port", self.discovery_port),
        ] {
            if port == 0 {
                return Err(ConfigError::ZeroPort(name));
            }
        }
        if self.listen_tcp == self.client_api {
            return Err(ConfigError::PortClash(format!(
                "listen_tcp and client_api are both {}",
                self.listen_tcp
            )));
        }
        if self.discovery && self.discovery_port == self.client_api {
            return Err(ConfigError::PortClash(format!(
                "discovery_port and client_api are both {}",
                self.client_api
            )));
        }
        for peer in &self.static_peers {
            let ok = peer
                .rsplit_once(':')
                .is_some_and(|(host, port)| !host.is_empty() && port.parse::<u16>().is_ok_and(|p| p != 0));
            if !ok {
                return Err(ConfigError::BadPeer(peer.clone()));
            }
        }
        Ok(())
    }
}
