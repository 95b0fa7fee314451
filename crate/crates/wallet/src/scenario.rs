//! Scenario files for the param-store simulator and their round traces.
//!
//! A scenario is TOML: a `[network]` table, optional `[balances]` by wallet
//! name, a round count and `[[events]]` scheduled at given rounds. Wallets
//! are named; each name maps to a fixed signing key, so traces are
//! reproducible byte for byte.

use std::collections::BTreeMap;
use std::io::Write;

use anyhow::{bail, Context};
use mfkdf_wallet_core::attest::{attest, identifier_hash, sign_binding};
use mfkdf_wallet_core::store::{
    flood_document, Delivery, IdentifierBinding, Network, NetworkConfig, Outcome, PeerEviction, PeerId,
};
use mfkdf_wallet_core::{keypair_from_seed, Address, PolicyDocument};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

fn default_size() -> usize {
    1024
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    /// Publish version `version` of a named wallet's document at `peer`.
    Put {
        peer: PeerId,
        wallet: String,
        version: u64,
        #[serde(default = "default_size")]
        size: usize,
    },
    Get {
        peer: PeerId,
        wallet: String,
    },
    /// `count` fresh unfunded wallets, one document each.
    Flood {
        peer: PeerId,
        count: u32,
        size: usize,
        #[serde(default)]
        prefix: String,
    },
    /// Publish a version that commits to `identifier` and bind it.
    Bind {
        peer: PeerId,
        wallet: String,
        identifier: String,
        version: u64,
        #[serde(default = "default_size")]
        size: usize,
    },
    Resolve {
        peer: PeerId,
        identifier: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Event {
    pub round: u64,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub rounds: u64,
    pub network: NetworkConfig,
    #[serde(default)]
    pub balances: BTreeMap<String, u64>,
    #[serde(default)]
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action: String,
    pub peer: PeerId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wallet: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub address: Option<Address>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hops: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected: Option<u64>,
    pub result: String,
}

impl ActionRecord {
    fn new(action: &str, peer: PeerId) -> Self {
        ActionRecord {
            action: action.into(),
            peer,
            wallet: None,
            address: None,
            version: None,
            hops: None,
            accepted: None,
            rejected: None,
            result: String::new(),
        }
    }
}

/// One line of the trace: what the script did before the round, then what
/// the round delivered and evicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub actions: Vec<ActionRecord>,
    pub deliveries: Vec<Delivery>,
    pub deferred: usize,
    pub evictions: Vec<PeerEviction>,
    pub anomalies: Vec<String>,
    /// Records held by each peer after the round.
    pub records: Vec<usize>,
    pub used_bytes: Vec<u64>,
}

pub fn wallet_seed(name: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"scenario-wallet/");
    h.update(name.as_bytes());
    h.finalize().into()
}

pub fn wallet_address(name: &str) -> Address {
    keypair_from_seed(&wallet_seed(name)).address()
}

fn outcome_name(o: Outcome) -> String {
    serde_json::to_value(o)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl Scenario {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.network.peer_count == 0 {
            bail!("network.peer_count must be at least 1");
        }
        for e in &self.events {
            if e.round >= self.rounds {
                bail!("event at round {} never runs (rounds = {})", e.round, self.rounds);
            }
            let peer = match &e.action {
                Action::Put { peer, .. }
                | Action::Get { peer, .. }
                | Action::Flood { peer, .. }
                | Action::Bind { peer, .. }
                | Action::Resolve { peer, .. } => *peer,
            };
            if peer >= self.network.peer_count {
                bail!("event at round {} names peer {peer}", e.round);
            }
        }
        Ok(())
    }

    pub fn ledger(&self) -> BTreeMap<Address, u64> {
        self.balances
            .iter()
            .map(|(name, &units)| (wallet_address(name), units))
            .collect()
    }

    /// Runs the scenario and returns the network and one record per round.
    pub fn run(&self) -> (Network, Vec<TraceRecord>) {
        let mut net = Network::new(self.network.clone());
        let ledger = self.ledger();
        let mut trace = Vec::with_capacity(self.rounds as usize);
        for round in 0..self.rounds {
            let actions = self
                .events
                .iter()
                .filter(|e| e.round == round)
                .map(|e| apply(&mut net, &e.action))
                .collect();
            let report = net.step(&ledger);
            trace.push(TraceRecord {
                round: report.round,
                actions,
                deliveries: report.deliveries,
                deferred: report.deferred,
                evictions: report.evictions,
                anomalies: report.anomalies,
                records: net.peers().iter().map(|p| p.records().count()).collect(),
                used_bytes: net.peers().iter().map(|p| p.used_bytes()).collect(),
            });
        }
        (net, trace)
    }
}

fn bound_document(wallet: &str, identifier: &str, version: u64, size: usize) -> (Vec<u8>, IdentifierBinding) {
    let seed = wallet_seed(wallet);
    let mut doc = PolicyDocument::parse(&flood_document(&seed, version, size)).expect("generated document parses");
    let h = identifier_hash(identifier);
    doc.identifier_hash = Some(h);
    let doc = attest(&doc, &seed);
    let kp = keypair_from_seed(&seed);
    let binding = IdentifierBinding {
        identifier_hash: h,
        wallet_address: kp.address(),
        doc_version: version,
        public_key: kp.public_key().to_vec(),
        signature: sign_binding(&h, &seed),
    };
    (doc.to_canonical_bytes(), binding)
}

fn apply(net: &mut Network, action: &Action) -> ActionRecord {
    match action {
        Action::Put { peer, wallet, version, size } => {
            let mut r = ActionRecord::new("put", *peer);
            let doc = flood_document(&wallet_seed(wallet), *version, *size);
            r.wallet = Some(wallet.clone());
            r.address = Some(wallet_address(wallet));
            r.version = Some(*version);
            r.result = match net.put(*peer, &doc) {
                Ok(o) => outcome_name(o),
                Err(e) => e.to_string(),
            };
            r
        }
        Action::Get { peer, wallet } => {
            let mut r = ActionRecord::new("get", *peer);
            r.wallet = Some(wallet.clone());
            r.address = Some(wallet_address(wallet));
            match net.get(*peer, &wallet_address(wallet)) {
                Ok(found) => {
                    r.version = Some(found.version);
                    r.hops = Some(found.hops);
                    r.result = "found".into();
                }
                Err(e) => r.result = e.to_string(),
            }
            r
        }
        Action::Flood { peer, count, size, prefix } => {
            let mut r = ActionRecord::new("flood", *peer);
            let (mut ok, mut bad) = (0u64, 0u64);
            for i in 0..*count {
                let doc = flood_document(&wallet_seed(&format!("{prefix}flood-{i}")), 1, *size);
                match net.put(*peer, &doc) {
                    Ok(_) => ok += 1,
                    Err(_) => bad += 1,
                }
            }
            r.accepted = Some(ok);
            r.rejected = Some(bad);
            r.result = "done".into();
            r
        }
        Action::Bind { peer, wallet, identifier, version, size } => {
            let mut r = ActionRecord::new("bind", *peer);
            let (doc, binding) = bound_document(wallet, identifier, *version, *size);
            r.wallet = Some(wallet.clone());
            r.address = Some(binding.wallet_address);
            r.version = Some(*version);
            r.result = match net.put(*peer, &doc).and_then(|_| net.bind_identifier(*peer, binding, &doc)) {
                Ok(o) => outcome_name(o),
                Err(e) => e.to_string(),
            };
            r
        }
        Action::Resolve { peer, identifier } => {
            let mut r = ActionRecord::new("resolve", *peer);
            match net.resolve(*peer, &identifier_hash(identifier)) {
                Ok(found) => {
                    let doc = PolicyDocument::parse(&found.doc_bytes).ok();
                    r.address = doc.map(|d| d.wallet_address);
                    r.version = Some(found.version);
                    r.hops = Some(found.hops);
                    r.result = "found".into();
                }
                Err(e) => r.result = e.to_string(),
            }
            r
        }
    }
}

/// Writes the trace as JSON lines.
pub fn write_trace(out: &mut dyn Write, trace: &[TraceRecord]) -> std::io::Result<()> {
    for rec in trace {
        serde_json::to_writer(&mut *out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
