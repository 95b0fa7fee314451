//! Service configuration: a TOML file plus `WALLET_*` environment overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mfkdf_wallet_core::store::{NetworkConfig, Partition, Topology};
use mfkdf_wallet_core::{KdfConfig, KdfProfile};
use serde::{Deserialize, Serialize};

pub const DEFAULT_BIND: &str = "127.0.0.1:8420";
pub const DEFAULT_SESSION_TTL: u64 = 15 * 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// `production` or `test`.
    pub kdf_profile: String,
    pub session_ttl_secs: u64,
    /// Peer this instance submits to and reads from.
    pub peer: usize,
    pub faucet: bool,
    /// Enables `/dev/*` routes.
    pub dev: bool,
    /// Directory served at `/` (the web client build).
    pub static_dir: Option<PathBuf>,
    pub network: NetworkSection,
    /// Initial balances in base units, keyed by hex address.
    pub genesis: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub peer_count: usize,
    pub topology: Topology,
    pub capacity_bytes: u64,
    pub min_value: u64,
    pub rng_seed: u64,
    pub partitions: Vec<Partition>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            peer_count: 8,
            topology: Topology::Complete,
            capacity_bytes: 64 << 20,
            min_value: 0,
            rng_seed: 0,
            partitions: Vec::new(),
        }
    }
}

impl NetworkSection {
    pub fn to_network_config(&self) -> NetworkConfig {
        let mut cfg = NetworkConfig::new(self.peer_count, self.topology, self.capacity_bytes);
        cfg.min_value = self.min_value;
        cfg.rng_seed = self.rng_seed;
        cfg.partitions = self.partitions.clone();
        cfg
    }
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: DEFAULT_BIND.into(),
            kdf_profile: KdfProfile::Production.as_str().into(),
            session_ttl_secs: DEFAULT_SESSION_TTL,
            peer: 0,
            faucet: false,
            dev: false,
            static_dir: None,
            network: NetworkSection::default(),
            genesis: BTreeMap::new(),
        }
    }
}

fn parse_bool(name: &str, v: &str) -> anyhow::Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("{name}: expected a boolean, got `{v}`"),
    }
}

fn parse_topology(v: &str) -> anyhow::Result<Topology> {
    let v = v.trim();
    match v {
        "complete" => Ok(Topology::Complete),
        "ring" => Ok(Topology::Ring),
        _ => match v.strip_prefix("random:") {
            Some(d) => Ok(Topology::Random {
                degree: d.parse().context("random:<degree>")?,
            }),
            None => bail!("unknown topology `{v}` (complete, ring, random:<degree>)"),
        },
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies overrides from a variable lookup (the process environment in
    /// production).
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        if let Some(v) = get("WALLET_BIND") {
            self.bind = v;
        }
        if let Some(v) = get("WALLET_KDF_PROFILE") {
            self.kdf_profile = v;
        }
        if let Some(v) = get("WALLET_SESSION_TTL") {
            self.session_ttl_secs = v.parse().context("WALLET_SESSION_TTL")?;
        }
        if let Some(v) = get("WALLET_PEER") {
            self.peer = v.parse().context("WALLET_PEER")?;
        }
        if let Some(v) = get("WALLET_FAUCET") {
            self.faucet = parse_bool("WALLET_FAUCET", &v)?;
        }
        if let Some(v) = get("WALLET_DEV") {
            self.dev = parse_bool("WALLET_DEV", &v)?;
        }
        if let Some(v) = get("WALLET_STATIC_DIR") {
            self.static_dir = Some(v.into());
        }
        if let Some(v) = get("WALLET_PEERS") {
            self.network.peer_count = v.parse().context("WALLET_PEERS")?;
        }
        if let Some(v) = get("WALLET_TOPOLOGY") {
            self.network.topology = parse_topology(&v)?;
        }
        if let Some(v) = get("WALLET_MIN_VALUE") {
            self.network.min_value = v.parse().context("WALLET_MIN_VALUE")?;
        }
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.kdf()?;
        if self.network.peer_count == 0 {
            bail!("network.peer_count must be at least 1");
        }
        if self.peer >= self.network.peer_count {
            bail!("peer {} is outside 0..{}", self.peer, self.network.peer_count);
        }
        if self.session_ttl_secs == 0 {
            bail!("session_ttl_secs must be positive");
        }
        for addr in self.genesis.keys() {
            addr.parse::<mfkdf_wallet_core::Address>()
                .map_err(|_| anyhow::anyhow!("genesis: bad address `{addr}`"))?;
        }
        Ok(())
    }

    pub fn kdf(&self) -> anyhow::Result<KdfConfig> {
        let profile = KdfProfile::parse(&self.kdf_profile)
            .with_context(|| format!("unknown kdf_profile `{}`", self.kdf_profile))?;
        Ok(KdfConfig::for_profile(profile))
    }
}
