//! Deterministic round-based simulator of the peer network that replicates
//! attested policy documents.
//!
//! Rules every peer enforces:
//! - a record is stored only if its attestation verifies;
//! - a client `put` must be the exact successor (`version == stored + 1`) of
//!   what the receiving peer holds, and replaces it;
//! - gossiped copies obey the same successor rule. Links are FIFO and a
//!   partition only delays messages, so a peer that missed a version still
//!   receives it before its successor;
//! - two different documents at the same version (a fork) resolve to the one
//!   with the lower SHA-256, reported as an anomaly;
//! - when a peer runs over capacity, every record whose address holds less
//!   than the configured minimum value is evicted first. Funded records go
//!   only when nothing worthless is left.
//!
//! Messages sent in round `r` are delivered in round `r + 1`. A message on a
//! link cut by a partition waits in the queue until the link heals.

mod topology;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attest::{check_attestation, verify_binding, AttestationError};
use crate::ledger::{Address, LedgerView};
use crate::policy::{DocumentError, PolicyDocument};

pub use topology::{Partition, PeerId, Topology};

pub const DEFAULT_MAX_RECORD_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub peer_count: usize,
    pub topology: Topology,
    pub capacity_bytes: u64,
    /// Balances below this many base units count as zero for eviction.
    #[serde(default)]
    pub min_value: u64,
    #[serde(default)]
    pub partitions: Vec<Partition>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_max_record")]
    pub max_record_bytes: usize,
}

fn default_max_record() -> usize {
    DEFAULT_MAX_RECORD_BYTES
}

impl NetworkConfig {
    pub fn new(peer_count: usize, topology: Topology, capacity_bytes: u64) -> Self {
        NetworkConfig {
            peer_count,
            topology,
            capacity_bytes,
            min_value: 0,
            partitions: Vec::new(),
            rng_seed: 0,
            max_record_bytes: DEFAULT_MAX_RECORD_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("unknown peer {0}")]
    UnknownPeer(PeerId),
    #[error("document of {size} bytes exceeds the {max} byte record limit")]
    TooLarge { size: usize, max: usize },
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("attestation rejected: {0}")]
    Attestation(#[from] AttestationError),
    #[error("version {offered} is not the successor of stored version {stored}")]
    NonSuccessor { stored: u64, offered: u64 },
    #[error("binding signature is invalid")]
    InvalidBinding,
    #[error("identifier is already bound to another wallet")]
    BindingConflict,
    #[error("binding is older than the one already stored")]
    StaleBinding,
    #[error("not found")]
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredRecord {
    pub doc_bytes: Arc<[u8]>,
    pub version: u64,
    pub size_bytes: u64,
    pub attested_address: Address,
    pub received_round: u64,
}

impl StoredRecord {
    /// The 32-byte store key: the address, zero padded.
    pub fn key(&self) -> [u8; 32] {
        record_key(&self.attested_address)
    }
}

pub fn record_key(address: &Address) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..20].copy_from_slice(address.as_bytes());
    k
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierBinding {
    #[serde(with = "hex_array")]
    pub identifier_hash: [u8; 32],
    pub wallet_address: Address,
    pub doc_version: u64,
    #[serde(with = "hex_vec")]
    pub public_key: Vec<u8>,
    #[serde(with = "hex_vec")]
    pub signature: Vec<u8>,
}

mod hex_vec {
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        hex::decode(&*s).map_err(serde::de::Error::custom)
    }
}

mod hex_array {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        super::hex_vec::serialize(v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let v = super::hex_vec::deserialize(d)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("expected 32 bytes"))
    }
}

impl IdentifierBinding {
    pub fn verify(&self) -> bool {
        verify_binding(
            &self.identifier_hash,
            &self.wallet_address,
            &self.public_key,
            &self.signature,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Peer {
    pub id: PeerId,
    pub capacity_bytes: u64,
    pub neighbors: BTreeSet<PeerId>,
    records: BTreeMap<Address, StoredRecord>,
    bindings: BTreeMap<[u8; 32], IdentifierBinding>,
    /// Highest version evicted per address; gossip at or below it is ignored.
    evicted: BTreeMap<Address, u64>,
    used_bytes: u64,
    /// Set when the peer goes over capacity; cleared after a round that
    /// ends with no record below the value floor.
    under_pressure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    /// Replaced a same-version fork because this copy hashes lower.
    ForkResolved,
    Duplicate,
    Stale,
    NonSuccessor,
    ForkKept,
    Invalid,
    Conflict,
}

impl Outcome {
    pub fn stored(self) -> bool {
        matches!(self, Outcome::Accepted | Outcome::ForkResolved)
    }
}

fn doc_hash(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

impl Peer {
    fn new(id: PeerId, capacity_bytes: u64, neighbors: BTreeSet<PeerId>) -> Self {
        Peer {
            id,
            capacity_bytes,
            neighbors,
            records: BTreeMap::new(),
            bindings: BTreeMap::new(),
            evicted: BTreeMap::new(),
            used_bytes: 0,
            under_pressure: false,
        }
    }

    pub fn record(&self, address: &Address) -> Option<&StoredRecord> {
        self.records.get(address)
    }

    pub fn records(&self) -> impl Iterator<Item = (&Address, &StoredRecord)> {
        self.records.iter()
    }

    pub fn binding(&self, identifier_hash: &[u8; 32]) -> Option<&IdentifierBinding> {
        self.bindings.get(identifier_hash)
    }

    pub fn bindings(&self) -> impl Iterator<Item = &IdentifierBinding> {
        self.bindings.values()
    }

    pub fn used_bytes(&self) -> u64 {
        self.used_bytes
    }

    pub fn version_map(&self) -> BTreeMap<Address, u64> {
        self.records.iter().map(|(a, r)| (*a, r.version)).collect()
    }

    fn store(&mut self, record: StoredRecord) {
        self.used_bytes += record.size_bytes;
        if let Some(old) = self.records.insert(record.attested_address, record) {
            self.used_bytes -= old.size_bytes;
        }
    }

    fn remove(&mut self, address: &Address) -> Option<StoredRecord> {
        let old = self.records.remove(address)?;
        self.used_bytes -= old.size_bytes;
        self.bindings.retain(|_, b| b.wallet_address != *address);
        Some(old)
    }

    fn offer(&mut self, record: StoredRecord, strict: bool) -> Outcome {
        let addr = record.attested_address;
        if let Some(&gone) = self.evicted.get(&addr) {
            if !strict && record.version <= gone {
                return Outcome::Stale;
            }
        }
        let outcome = match self.records.get(&addr) {
            None => Outcome::Accepted,
            Some(cur) if record.version == cur.version + 1 => Outcome::Accepted,
            Some(cur) if record.version == cur.version && cur.doc_bytes == record.doc_bytes => {
                Outcome::Duplicate
            }
            // a client may not overwrite a same-version document
            Some(cur) if strict || record.version > cur.version => Outcome::NonSuccessor,
            Some(cur) if record.version < cur.version => Outcome::Stale,
            Some(cur) => {
                if doc_hash(&record.doc_bytes) < doc_hash(&cur.doc_bytes) {
                    Outcome::ForkResolved
                } else {
                    Outcome::ForkKept
                }
            }
        };
        if outcome.stored() {
            self.evicted.remove(&addr);
            self.store(record);
        }
        outcome
    }

    fn offer_binding(&mut self, binding: IdentifierBinding) -> Outcome {
        match self.bindings.get(&binding.identifier_hash) {
            Some(cur) if cur.wallet_address != binding.wallet_address => Outcome::Conflict,
            Some(cur) if binding.doc_version < cur.doc_version => Outcome::Stale,
            Some(cur) if *cur == binding => Outcome::Duplicate,
            _ => {
                self.bindings.insert(binding.identifier_hash, binding);
                Outcome::Accepted
            }
        }
    }

    pub fn under_pressure(&self) -> bool {
        self.under_pressure
    }

    /// Runs at the end of a round. Going over capacity starts a pressure
    /// episode: every record valued below `min_value` is dropped, and keeps
    /// being dropped each round until one ends with none left to drop.
    /// Funded records are evicted, cheapest and oldest first, only while the
    /// peer is still over capacity.
    pub fn evict(&mut self, ledger: &dyn LedgerView, min_value: u64) -> Eviction {
        let mut out = Eviction::default();
        let over = self.used_bytes > self.capacity_bytes;
        if over {
            self.under_pressure = true;
        }
        if !self.under_pressure {
            return out;
        }
        let mut candidates: Vec<(u64, u64, Address)> = self
            .records
            .values()
            .map(|r| {
                let balance = ledger.balance(&r.attested_address);
                let effective = if balance < min_value { 0 } else { balance };
                (effective, r.received_round, r.attested_address)
            })
            .collect();
        candidates.sort();
        for (effective, _, addr) in candidates {
            if effective > 0 && self.used_bytes <= self.capacity_bytes {
                break;
            }
            if effective > 0 {
                out.capacity_exhausted = true;
            }
            let removed = self.remove(&addr).expect("candidate is stored");
            self.evicted.insert(addr, removed.version);
            out.evicted.push(EvictedRecord {
                address: addr,
                version: removed.version,
                size_bytes: removed.size_bytes,
                balance: effective,
            });
        }
        if !over && out.evicted.is_empty() {
            self.under_pressure = false;
        }
        if out.capacity_exhausted {
            log::warn!("peer {} exhausted capacity; evicted funded records", self.id);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Eviction {
    pub evicted: Vec<EvictedRecord>,
    pub capacity_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvictedRecord {
    pub address: Address,
    pub version: u64,
    pub size_bytes: u64,
    pub balance: u64,
}

#[derive(Debug, Clone)]
enum Payload {
    Record(StoredRecord),
    Binding(IdentifierBinding),
}

#[derive(Debug, Clone)]
struct Envelope {
    from: PeerId,
    to: PeerId,
    payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryKind {
    Record,
    Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub from: PeerId,
    pub to: PeerId,
    pub kind: DeliveryKind,
    pub address: Address,
    pub version: u64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerEviction {
    pub peer: PeerId,
    #[serde(flatten)]
    pub eviction: Eviction,
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    pub deliveries: Vec<Delivery>,
    /// Messages held back by a partition.
    pub deferred: usize,
    pub evictions: Vec<PeerEviction>,
    pub anomalies: Vec<String>,
}

impl RoundReport {
    pub fn is_idle(&self) -> bool {
        self.deliveries.is_empty() && self.evictions.is_empty() && self.deferred == 0
    }

    pub fn accepted(&self) -> usize {
        self.deliveries.iter().filter(|d| d.outcome.stored()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lookup {
    pub doc_bytes: Arc<[u8]>,
    pub version: u64,
    pub holder: PeerId,
    /// Hops the query travelled; each hop costs one round in the model.
    pub hops: u32,
}

#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    peers: Vec<Peer>,
    round: u64,
    queue: VecDeque<Envelope>,
}

impl Network {
    pub fn new(config: NetworkConfig) -> Self {
        let adjacency = topology::build(config.topology, config.peer_count, config.rng_seed);
        let peers = adjacency
            .into_iter()
            .enumerate()
            .map(|(id, n)| Peer::new(id, config.capacity_bytes, n))
            .collect();
        Network {
            config,
            peers,
            round: 0,
            queue: VecDeque::new(),
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer(&self, id: PeerId) -> Result<&Peer, StoreError> {
        self.peers.get(id).ok_or(StoreError::UnknownPeer(id))
    }

    pub fn pending_messages(&self) -> usize {
        self.queue.len()
    }

    fn link_up(&self, a: PeerId, b: PeerId, round: u64) -> bool {
        !self.config.partitions.iter().any(|p| p.cuts(a, b, round))
    }

    fn admit(&self, doc_bytes: &[u8]) -> Result<(PolicyDocument, StoredRecord), StoreError> {
        if doc_bytes.len() > self.config.max_record_bytes {
            return Err(StoreError::TooLarge {
                size: doc_bytes.len(),
                max: self.config.max_record_bytes,
            });
        }
        let doc = PolicyDocument::parse(doc_bytes)?;
        check_attestation(&doc)?;
        let canonical: Arc<[u8]> = doc.to_canonical_bytes().into();
        let record = StoredRecord {
            size_bytes: canonical.len() as u64,
            doc_bytes: canonical,
            version: doc.version,
            attested_address: doc.wallet_address,
            received_round: self.round,
        };
        Ok((doc, record))
    }

    fn broadcast(&mut self, from: PeerId, except: Option<PeerId>, payload: &Payload) {
        let neighbors: Vec<PeerId> = self.peers[from]
            .neighbors
            .iter()
            .copied()
            .filter(|&n| Some(n) != except)
            .collect();
        for to in neighbors {
            self.queue.push_back(Envelope {
                from,
                to,
                payload: payload.clone(),
            });
        }
    }

    /// Client submission of an attested document at `origin`.
    pub fn put(&mut self, origin: PeerId, doc_bytes: &[u8]) -> Result<Outcome, StoreError> {
        self.peer(origin)?;
        let (_, record) = self.admit(doc_bytes)?;
        let stored = self.peers[origin]
            .record(&record.attested_address)
            .map(|r| r.version);
        let outcome = self.peers[origin].offer(record.clone(), true);
        match outcome {
            Outcome::Accepted => {
                self.broadcast(origin, None, &Payload::Record(record));
                Ok(outcome)
            }
            Outcome::Duplicate => Ok(outcome),
            _ => Err(StoreError::NonSuccessor {
                stored: stored.unwrap_or(0),
                offered: record.version,
            }),
        }
    }

    /// Publishes an identifier binding. The document must carry the same
    /// identifier hash and its attestation key must have signed the binding.
    pub fn bind_identifier(
        &mut self,
        origin: PeerId,
        binding: IdentifierBinding,
        doc_bytes: &[u8],
    ) -> Result<Outcome, StoreError> {
        self.peer(origin)?;
        let (doc, _) = self.admit(doc_bytes)?;
        let attestation = doc.attestation.as_ref().expect("admitted documents are attested");
        if doc.wallet_address != binding.wallet_address
            || doc.identifier_hash != Some(binding.identifier_hash)
            || binding.doc_version != doc.version
            || attestation.public_key != binding.public_key
            || !binding.verify()
        {
            return Err(StoreError::InvalidBinding);
        }
        match self.peers[origin].offer_binding(binding.clone()) {
            Outcome::Accepted => {
                self.broadcast(origin, None, &Payload::Binding(binding));
                Ok(Outcome::Accepted)
            }
            Outcome::Duplicate => Ok(Outcome::Duplicate),
            Outcome::Conflict => Err(StoreError::BindingConflict),
            _ => Err(StoreError::StaleBinding),
        }
    }

    /// Breadth-first search over links that are up this round.
    fn flood<T>(&self, from: PeerId, mut probe: impl FnMut(&Peer) -> Option<T>) -> Vec<(T, PeerId, u32)> {
        let mut seen = BTreeSet::from([from]);
        let mut frontier = alloc::vec![from];
        let mut hops = 0u32;
        let mut found = Vec::new();
        while !frontier.is_empty() {
            for &p in &frontier {
                if let Some(v) = probe(&self.peers[p]) {
                    found.push((v, p, hops));
                }
            }
            let mut next = Vec::new();
            for &p in &frontier {
                for &n in &self.peers[p].neighbors {
                    if self.link_up(p, n, self.round) && seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
            hops += 1;
        }
        found
    }

    /// Local record if present, otherwise the highest version reachable.
    pub fn get(&self, peer: PeerId, address: &Address) -> Result<Lookup, StoreError> {
        let local = self.peer(peer)?;
        if let Some(r) = local.record(address) {
            return Ok(Lookup {
                doc_bytes: r.doc_bytes.clone(),
                version: r.version,
                holder: peer,
                hops: 0,
            });
        }
        self.flood(peer, |p| p.record(address).cloned())
            .into_iter()
            .max_by(|(a, _, ha), (b, _, hb)| a.version.cmp(&b.version).then(hb.cmp(ha)))
            .map(|(r, holder, hops)| Lookup {
                doc_bytes: r.doc_bytes,
                version: r.version,
                holder,
                hops,
            })
            .ok_or(StoreError::NotFound)
    }

    /// Identifier hash to wallet address, via the local or nearest binding.
    pub fn resolve_identifier(&self, peer: PeerId, identifier_hash: &[u8; 32]) -> Result<Address, StoreError> {
        self.peer(peer)?;
        self.flood(peer, |p| p.binding(identifier_hash).cloned())
            .into_iter()
            .max_by(|(a, _, ha), (b, _, hb)| a.doc_version.cmp(&b.doc_version).then(hb.cmp(ha)))
            .map(|(b, _, _)| b.wallet_address)
            .ok_or(StoreError::NotFound)
    }

    pub fn resolve(&self, peer: PeerId, identifier_hash: &[u8; 32]) -> Result<Lookup, StoreError> {
        let address = self.resolve_identifier(peer, identifier_hash)?;
        self.get(peer, &address)
    }

    /// Runs eviction on one peer outside the round loop.
    pub fn evict(&mut self, peer: PeerId, ledger: &dyn LedgerView) -> Result<Eviction, StoreError> {
        self.peer(peer)?;
        Ok(self.peers[peer].evict(ledger, self.config.min_value))
    }

    /// Advances one round: delivers queued messages, then evicts on peers
    /// that ended the round over capacity.
    pub fn step(&mut self, ledger: &dyn LedgerView) -> RoundReport {
        self.round += 1;
        let round = self.round;
        let mut report = RoundReport {
            round,
            ..RoundReport::default()
        };
        let pending: Vec<Envelope> = self.queue.drain(..).collect();
        let mut held = VecDeque::new();
        for env in pending {
            if !self.link_up(env.from, env.to, round) {
                held.push_back(env);
                continue;
            }
            let (kind, address, version, outcome) = match &env.payload {
                Payload::Record(r) => {
                    let mut copy = r.clone();
                    copy.received_round = round;
                    let outcome = self.peers[env.to].offer(copy, false);
                    (DeliveryKind::Record, r.attested_address, r.version, outcome)
                }
                Payload::Binding(b) => {
                    let outcome = if b.verify() {
                        self.peers[env.to].offer_binding(b.clone())
                    } else {
                        Outcome::Invalid
                    };
                    (DeliveryKind::Binding, b.wallet_address, b.doc_version, outcome)
                }
            };
            if outcome == Outcome::ForkResolved {
                report.anomalies.push(alloc::format!(
                    "peer {}: fork at version {version} for {address} resolved by lowest hash",
                    env.to
                ));
            }
            if outcome.stored() {
                self.broadcast(env.to, Some(env.from), &env.payload);
            }
            report.deliveries.push(Delivery {
                from: env.from,
                to: env.to,
                kind,
                address,
                version,
                outcome,
            });
        }
        report.deferred = held.len();
        // held messages go first so per-link order is preserved
        held.extend(self.queue.drain(..));
        self.queue = held;

        let min_value = self.config.min_value;
        for peer in self.peers.iter_mut() {
            let eviction = peer.evict(ledger, min_value);
            if !eviction.evicted.is_empty() {
                report.evictions.push(PeerEviction {
                    peer: peer.id,
                    eviction,
                });
            }
        }
        report
    }

    /// Steps until no messages remain or `max_rounds` have run.
    pub fn run_until_quiet(&mut self, ledger: &dyn LedgerView, max_rounds: u64) -> Vec<RoundReport> {
        let mut reports = Vec::new();
        for _ in 0..max_rounds {
            if self.queue.is_empty() {
                break;
            }
            reports.push(self.step(ledger));
        }
        reports
    }
}

/// Storage an attacker consumes by publishing `docs` documents of
/// `doc_bytes` each.
pub fn flood_storage_bytes(docs: u64, doc_bytes: u64) -> u128 {
    u128::from(docs) * u128::from(doc_bytes)
}

/// Base units an attacker must lock up so that `docs` flood documents all
/// clear a minimum-value floor of `min_value` base units.
pub fn flood_cost_units(docs: u64, min_value: u64) -> u128 {
    u128::from(docs) * u128::from(min_value)
}

/// Builds a validly attested, single-factor document of roughly
/// `target_bytes` (never less) for the wallet derived from `seed`. Used to
/// simulate spam floods: anyone can mint such documents at no cost.
pub fn flood_document(seed: &[u8; 32], version: u64, target_bytes: usize) -> Vec<u8> {
    use crate::factor::FactorParams;
    use crate::kdf::KdfConfig;
    use crate::policy::FactorEntry;

    let keypair = crate::ledger::keypair_from_seed(seed);
    let build = |pad: usize| {
        let doc = PolicyDocument {
            schema_version: crate::policy::SCHEMA_VERSION,
            version,
            threshold: 1,
            wallet_address: keypair.address(),
            identifier_hash: None,
            global_salt: *seed,
            kdf: KdfConfig::test(),
            factors: alloc::vec![FactorEntry {
                factor_id: "password".into(),
                share_index: 1,
                encrypted_share: alloc::vec![0xA5; pad],
                factor_salt: [0; 32],
                params: FactorParams::Password,
                entropy: crate::entropy::PASSWORD_DEFAULT,
            }],
            wrapped_inner_secrets: BTreeMap::new(),
            attestation: None,
        };
        crate::attest::attest(&doc, seed).to_canonical_bytes()
    };
    let base = build(0).len();
    let pad = target_bytes.saturating_sub(base).div_ceil(4) * 3;
    build(pad)
}
