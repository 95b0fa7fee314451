//! The simulated environment every service instance shares: the peer
//! network, the ledger and the mock OOBA inbox. Each sits behind its own
//! mutex, which serializes access the way a command queue would.
//!
//! Lock order is network, then ledger, then inbox.

use std::sync::{Arc, Mutex, MutexGuard};

use mfkdf_wallet_core::factor::MemoryInbox;
use mfkdf_wallet_core::ledger::{FaucetError, Ledger, Transfer, TransferReceipt, TransferRejection};
use mfkdf_wallet_core::store::{IdentifierBinding, Lookup, Network, NetworkConfig, Outcome, PeerId, RoundReport, StoreError};
use mfkdf_wallet_core::Address;

/// Where a write landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WriteTarget {
    PolicyStore,
    IdentifierBinding,
    Ledger,
}

/// Sees every byte the service hands to shared storage.
pub trait WriteObserver: Send + Sync {
    fn on_write(&self, target: WriteTarget, bytes: &[u8]);
}

pub struct World {
    network: Mutex<Network>,
    ledger: Mutex<Ledger>,
    inbox: Mutex<MemoryInbox>,
    observers: Mutex<Vec<Arc<dyn WriteObserver>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl World {
    pub fn new(network: NetworkConfig, ledger: Ledger) -> Self {
        World {
            network: Mutex::new(Network::new(network)),
            ledger: Mutex::new(ledger),
            inbox: Mutex::new(MemoryInbox::new()),
            observers: Mutex::new(Vec::new()),
        }
    }

    pub fn shared(network: NetworkConfig, ledger: Ledger) -> Arc<Self> {
        Arc::new(Self::new(network, ledger))
    }

    pub fn observe(&self, observer: Arc<dyn WriteObserver>) {
        lock(&self.observers).push(observer);
    }

    fn notify(&self, target: WriteTarget, bytes: &[u8]) {
        for o in lock(&self.observers).iter() {
            o.on_write(target, bytes);
        }
    }

    /// Direct access for tests and tooling; bypasses the observers.
    pub fn network(&self) -> MutexGuard<'_, Network> {
        lock(&self.network)
    }

    pub fn ledger(&self) -> MutexGuard<'_, Ledger> {
        lock(&self.ledger)
    }

    pub fn inbox(&self) -> MutexGuard<'_, MemoryInbox> {
        lock(&self.inbox)
    }

    pub fn put(&self, peer: PeerId, doc_bytes: &[u8]) -> Result<Outcome, StoreError> {
        self.notify(WriteTarget::PolicyStore, doc_bytes);
        self.network().put(peer, doc_bytes)
    }

    pub fn bind(
        &self,
        peer: PeerId,
        binding: IdentifierBinding,
        doc_bytes: &[u8],
    ) -> Result<Outcome, StoreError> {
        let encoded = serde_json::to_vec(&binding).expect("binding serializes");
        self.notify(WriteTarget::IdentifierBinding, &encoded);
        self.network().bind_identifier(peer, binding, doc_bytes)
    }

    pub fn get(&self, peer: PeerId, address: &Address) -> Result<Lookup, StoreError> {
        self.network().get(peer, address)
    }

    pub fn resolve_identifier(&self, peer: PeerId, identifier_hash: &[u8; 32]) -> Result<Address, StoreError> {
        self.network().resolve_identifier(peer, identifier_hash)
    }

    pub fn submit_transfer(&self, transfer: &Transfer) -> Result<TransferReceipt, TransferRejection> {
        let mut bytes = Transfer::signing_bytes(&transfer.from, &transfer.to, transfer.amount, transfer.nonce);
        bytes.extend_from_slice(&transfer.public_key);
        bytes.extend_from_slice(&transfer.signature);
        self.notify(WriteTarget::Ledger, &bytes);
        self.ledger().submit_transfer(transfer)
    }

    pub fn fund(&self, address: Address, amount: u64) -> Result<u64, FaucetError> {
        let mut bytes = address.as_bytes().to_vec();
        bytes.extend_from_slice(&amount.to_be_bytes());
        self.notify(WriteTarget::Ledger, &bytes);
        self.ledger().fund(address, amount)
    }

    /// Runs gossip rounds until no messages are queued. Returns the reports.
    pub fn settle(&self) -> Vec<RoundReport> {
        let mut net = self.network();
        let max = net.config().peer_count as u64 * 4 + 4;
        let ledger = self.ledger();
        let reports = net.run_until_quiet(&*ledger, max);
        for r in &reports {
            for e in &r.evictions {
                if e.eviction.capacity_exhausted {
                    log::warn!("peer {} evicted funded records under capacity pressure", e.peer);
                }
            }
            for a in &r.anomalies {
                log::warn!("{a}");
            }
        }
        reports
    }

    pub fn step(&self) -> RoundReport {
        let mut net = self.network();
        let ledger = self.ledger();
        net.step(&*ledger)
    }
}
