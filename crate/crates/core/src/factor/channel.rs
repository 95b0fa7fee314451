use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("out-of-band delivery to {address} failed: {reason}")]
pub struct ChannelError {
    pub address: String,
    pub reason: String,
}

/// Side channel (email, SMS) that carries one-time codes to the user.
pub trait OutOfBandChannel {
    fn send(&mut self, address: &str, code: &str) -> Result<(), ChannelError>;
    fn latest(&self, address: &str) -> Option<String>;
}

/// Lower-cased, trimmed form used for inbox keys and identifier hashing.
pub fn normalize_address(address: &str) -> String {
    address.trim().to_lowercase()
}

/// In-memory inbox keeping only the newest code per address.
#[derive(Debug, Default, Clone)]
pub struct MemoryInbox {
    latest: BTreeMap<String, String>,
    sent: u64,
}

impl MemoryInbox {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total number of codes delivered.
    pub fn sent_count(&self) -> u64 {
        self.sent
    }
}

impl OutOfBandChannel for MemoryInbox {
    fn send(&mut self, address: &str, code: &str) -> Result<(), ChannelError> {
        self.latest
            .insert(normalize_address(address), code.to_string());
        self.sent += 1;
        Ok(())
    }

    fn latest(&self, address: &str) -> Option<String> {
        self.latest.get(&normalize_address(address)).cloned()
    }
}
