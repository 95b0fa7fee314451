//! Mock account-balance chain: seed-derived wallet keys, signed transfers with
//! per-account nonces, and balance queries for the eviction policy.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::marker::PhantomData;
use core::str::FromStr;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use sha2::{Digest, Sha256};
use zeroize::Zeroizing;

pub const ADDRESS_LEN: usize = 20;
/// Base units per coin.
pub const UNITS_PER_COIN: u64 = 1_000_000;

const TRANSFER_DOMAIN: &[u8] = b"mfkdf-ledger/transfer/v1";

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; ADDRESS_LEN]);

impl Address {
    pub fn from_public_key(public_key: &[u8]) -> Self {
        let digest = Sha256::digest(public_key);
        let mut out = [0u8; ADDRESS_LEN];
        out.copy_from_slice(&digest[..ADDRESS_LEN]);
        Address(out)
    }

    pub fn as_bytes(&self) -> &[u8; ADDRESS_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> alloc::string::String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("address must be 40 hex characters")]
pub struct AddressParseError;

impl serde::Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Address {
    type Err = AddressParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let mut out = [0u8; ADDRESS_LEN];
        hex::decode_to_slice(s, &mut out).map_err(|_| AddressParseError)?;
        Ok(Address(out))
    }
}

/// Deterministic signature scheme keyed by a 32-byte seed.
pub trait SignatureScheme {
    fn public_key(seed: &[u8; 32]) -> Vec<u8>;
    fn sign(seed: &[u8; 32], message: &[u8]) -> Vec<u8>;
    fn verify(public_key: &[u8], message: &[u8], signature: &[u8]) -> bool;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ed25519;

impl SignatureScheme for Ed25519 {
    fn public_key(seed: &[u8; 32]) -> Vec<u8> {
        SigningKey::from_bytes(seed).verifying_key().to_bytes().to_vec()
    }

    fn sign(seed: &[u8; 32], message: &[u8]) -> Vec<u8> {
        SigningKey::from_bytes(seed).sign(message).to_bytes().to_vec()
    }

    fn verify(public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        let Ok(pk) = <[u8; 32]>::try_from(public_key) else {
            return false;
        };
        let Ok(sig) = <[u8; 64]>::try_from(signature) else {
            return false;
        };
        let Ok(vk) = VerifyingKey::from_bytes(&pk) else {
            return false;
        };
        vk.verify(message, &ed25519_dalek::Signature::from_bytes(&sig))
            .is_ok()
    }
}

/// Wallet signing key derived from a seed, with its verification key and address.
#[derive(Clone)]
pub struct WalletKeypair<S: SignatureScheme = Ed25519> {
    seed: Zeroizing<[u8; 32]>,
    public_key: Vec<u8>,
    address: Address,
    _scheme: PhantomData<S>,
}

impl<S: SignatureScheme> fmt::Debug for WalletKeypair<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WalletKeypair")
            .field("address", &self.address)
            .finish_non_exhaustive()
    }
}

impl<S: SignatureScheme> WalletKeypair<S> {
    pub fn from_seed(seed: &[u8; 32]) -> Self {
        let public_key = S::public_key(seed);
        let address = Address::from_public_key(&public_key);
        WalletKeypair {
            seed: Zeroizing::new(*seed),
            public_key,
            address,
            _scheme: PhantomData,
        }
    }

    pub fn public_key(&self) -> &[u8] {
        &self.public_key
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        S::sign(&self.seed, message)
    }
}

pub fn keypair_from_seed(signing_seed: &[u8; 32]) -> WalletKeypair {
    WalletKeypair::from_seed(signing_seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LedgerAccount {
    pub balance: u64,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transfer {
    pub from: Address,
    pub to: Address,
    pub amount: u64,
    pub nonce: u64,
    pub public_key: Vec<u8>,
    pub signature: Vec<u8>,
}

impl Transfer {
    pub fn signing_bytes(from: &Address, to: &Address, amount: u64, nonce: u64) -> Vec<u8> {
        let mut out = Vec::with_capacity(TRANSFER_DOMAIN.len() + 56);
        out.extend_from_slice(TRANSFER_DOMAIN);
        out.extend_from_slice(&from.0);
        out.extend_from_slice(&to.0);
        out.extend_from_slice(&amount.to_be_bytes());
        out.extend_from_slice(&nonce.to_be_bytes());
        out
    }

    pub fn sign<S: SignatureScheme>(
        keypair: &WalletKeypair<S>,
        to: Address,
        amount: u64,
        nonce: u64,
    ) -> Self {
        let from = keypair.address();
        let signature = keypair.sign(&Self::signing_bytes(&from, &to, amount, nonce));
        Transfer {
            from,
            to,
            amount,
            nonce,
            public_key: keypair.public_key().to_vec(),
            signature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TransferRejection {
    #[error("signature does not verify for the sending address")]
    BadSignature,
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("insufficient funds: balance {balance}, amount {amount}")]
    InsufficientFunds { balance: u64, amount: u64 },
    #[error("transfer amount must be positive")]
    ZeroAmount,
    #[error("recipient balance would overflow")]
    Overflow,
}

impl TransferRejection {
    pub fn code(&self) -> &'static str {
        match self {
            TransferRejection::BadSignature => "bad_signature",
            TransferRejection::BadNonce { .. } => "bad_nonce",
            TransferRejection::InsufficientFunds { .. } => "insufficient_funds",
            TransferRejection::ZeroAmount => "invalid_amount",
            TransferRejection::Overflow => "overflow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FaucetError {
    #[error("faucet is disabled")]
    Disabled,
    #[error("balance would overflow")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferReceipt {
    pub from: Address,
    pub to: Address,
    pub amount: u64,
    pub nonce: u64,
    pub sender_balance: u64,
    pub recipient_balance: u64,
}

/// Read access to balances, used by the eviction policy.
pub trait LedgerView {
    fn balance(&self, address: &Address) -> u64;
}

impl LedgerView for BTreeMap<Address, u64> {
    fn balance(&self, address: &Address) -> u64 {
        self.get(address).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct Ledger<S: SignatureScheme = Ed25519> {
    accounts: BTreeMap<Address, LedgerAccount>,
    faucet_enabled: bool,
    _scheme: PhantomData<S>,
}

impl<S: SignatureScheme> Default for Ledger<S> {
    fn default() -> Self {
        Self::new(false)
    }
}

impl<S: SignatureScheme> Ledger<S> {
    pub fn new(faucet_enabled: bool) -> Self {
        Ledger {
            accounts: BTreeMap::new(),
            faucet_enabled,
            _scheme: PhantomData,
        }
    }

    pub fn with_accounts(
        accounts: impl IntoIterator<Item = (Address, LedgerAccount)>,
        faucet_enabled: bool,
    ) -> Self {
        Ledger {
            accounts: accounts.into_iter().collect(),
            faucet_enabled,
            _scheme: PhantomData,
        }
    }

    pub fn faucet_enabled(&self) -> bool {
        self.faucet_enabled
    }

    pub fn set_faucet(&mut self, enabled: bool) {
        self.faucet_enabled = enabled;
    }

    pub fn account(&self, address: &Address) -> LedgerAccount {
        self.accounts.get(address).copied().unwrap_or_default()
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&Address, &LedgerAccount)> {
        self.accounts.iter()
    }

    pub fn balance(&self, address: &Address) -> u64 {
        self.account(address).balance
    }

    pub fn total_supply(&self) -> u128 {
        self.accounts.values().map(|a| a.balance as u128).sum()
    }

    /// Test faucet: credits without a signature.
    pub fn fund(&mut self, address: Address, amount: u64) -> Result<u64, FaucetError> {
        if !self.faucet_enabled {
            return Err(FaucetError::Disabled);
        }
        let account = self.accounts.entry(address).or_default();
        account.balance = account
            .balance
            .checked_add(amount)
            .ok_or(FaucetError::Overflow)?;
        Ok(account.balance)
    }

    pub fn submit_transfer(&mut self, t: &Transfer) -> Result<TransferReceipt, TransferRejection> {
        if Address::from_public_key(&t.public_key) != t.from
            || !S::verify(
                &t.public_key,
                &Transfer::signing_bytes(&t.from, &t.to, t.amount, t.nonce),
                &t.signature,
            )
        {
            return Err(TransferRejection::BadSignature);
        }
        let sender = self.account(&t.from);
        let expected = sender.nonce + 1;
        if t.nonce != expected {
            return Err(TransferRejection::BadNonce {
                expected,
                got: t.nonce,
            });
        }
        if t.amount == 0 {
            return Err(TransferRejection::ZeroAmount);
        }
        if sender.balance < t.amount {
            return Err(TransferRejection::InsufficientFunds {
                balance: sender.balance,
                amount: t.amount,
            });
        }
        let sender_balance = sender.balance - t.amount;
        let recipient_balance = if t.to == t.from {
            sender.balance
        } else {
            self.balance(&t.to)
                .checked_add(t.amount)
                .ok_or(TransferRejection::Overflow)?
        };
        // all checks passed; apply both sides
        let from = self.accounts.entry(t.from).or_default();
        from.nonce = expected;
        from.balance = sender_balance;
        if t.to == t.from {
            from.balance = recipient_balance;
        } else {
            self.accounts.entry(t.to).or_default().balance = recipient_balance;
        }
        Ok(TransferReceipt {
            from: t.from,
            to: t.to,
            amount: t.amount,
            nonce: expected,
            sender_balance: self.balance(&t.from),
            recipient_balance,
        })
    }
}

impl<S: SignatureScheme> LedgerView for Ledger<S> {
    fn balance(&self, address: &Address) -> u64 {
        Ledger::balance(self, address)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use rand_chacha::ChaCha20Rng;
    use rand_core::{RngCore, SeedableRng};

    fn kp(n: u8) -> WalletKeypair {
        keypair_from_seed(&[n; 32])
    }

    #[test]
    fn address_is_deterministic_and_20_bytes() {
        assert_eq!(kp(1).address(), kp(1).address());
        assert_eq!(kp(1).address().as_bytes().len(), 20);
        let parsed: Address = kp(1).address().to_hex().parse().unwrap();
        assert_eq!(parsed, kp(1).address());
        assert!("abc".parse::<Address>().is_err());
    }

    #[test]
    fn random_seeds_give_distinct_addresses() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut seen = BTreeSet::new();
        for _ in 0..10_000 {
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            assert!(seen.insert(keypair_from_seed(&seed).address()));
        }
    }

    #[test]
    fn unknown_address_has_zero_balance() {
        let ledger: Ledger = Ledger::new(true);
        assert_eq!(ledger.balance(&kp(9).address()), 0);
    }

    #[test]
    fn fund_requires_faucet() {
        let mut ledger: Ledger = Ledger::new(false);
        assert_eq!(ledger.fund(kp(1).address(), 5), Err(FaucetError::Disabled));
        ledger.set_faucet(true);
        ledger.fund(kp(1).address(), 5).unwrap();
        assert_eq!(ledger.balance(&kp(1).address()), 5);
    }

    #[test]
    fn transfer_moves_funds_and_bumps_nonce() {
        let mut ledger: Ledger = Ledger::new(true);
        let (a, b) = (kp(1), kp(2));
        ledger.fund(a.address(), 10).unwrap();
        let t = Transfer::sign(&a, b.address(), 4, 1);
        let receipt = ledger.submit_transfer(&t).unwrap();
        assert_eq!(receipt.sender_balance, 6);
        assert_eq!(ledger.balance(&b.address()), 4);
        assert_eq!(ledger.account(&a.address()).nonce, 1);
        // replay
        assert_eq!(
            ledger.submit_transfer(&t),
            Err(TransferRejection::BadNonce { expected: 2, got: 1 })
        );
    }

    #[test]
    fn overdraft_rejected() {
        let mut ledger: Ledger = Ledger::new(true);
        ledger.fund(kp(1).address(), 3).unwrap();
        let t = Transfer::sign(&kp(1), kp(2).address(), 4, 1);
        assert_eq!(
            ledger.submit_transfer(&t),
            Err(TransferRejection::InsufficientFunds { balance: 3, amount: 4 })
        );
        assert_eq!(ledger.account(&kp(1).address()).nonce, 0);
    }

    #[test]
    fn foreign_key_signature_rejected() {
        let mut ledger: Ledger = Ledger::new(true);
        ledger.fund(kp(1).address(), 10).unwrap();
        // signed by key 2 but claims to come from key 1
        let mut t = Transfer::sign(&kp(2), kp(3).address(), 1, 1);
        t.from = kp(1).address();
        assert_eq!(ledger.submit_transfer(&t), Err(TransferRejection::BadSignature));
        // right public key, wrong signer
        let mut t = Transfer::sign(&kp(1), kp(3).address(), 1, 1);
        t.signature = kp(2).sign(&Transfer::signing_bytes(&t.from, &t.to, 1, 1));
        assert_eq!(ledger.submit_transfer(&t), Err(TransferRejection::BadSignature));
        // tampered amount
        let mut t = Transfer::sign(&kp(1), kp(3).address(), 1, 1);
        t.amount = 2;
        assert_eq!(ledger.submit_transfer(&t), Err(TransferRejection::BadSignature));
    }

    #[test]
    fn self_transfer_preserves_balance() {
        let mut ledger: Ledger = Ledger::new(true);
        ledger.fund(kp(1).address(), 10).unwrap();
        let t = Transfer::sign(&kp(1), kp(1).address(), 7, 1);
        ledger.submit_transfer(&t).unwrap();
        assert_eq!(ledger.balance(&kp(1).address()), 10);
        assert_eq!(ledger.total_supply(), 10);
    }

    proptest::proptest! {
        #[test]
        fn conservation_under_random_transfers(ops in proptest::collection::vec((0u8..4, 0u8..4, 0u64..40), 1..60)) {
            let keys: Vec<WalletKeypair> = (1..=4).map(kp).collect();
            let mut ledger: Ledger = Ledger::new(true);
            for k in &keys {
                ledger.fund(k.address(), 50).unwrap();
            }
            let supply = ledger.total_supply();
            for (from, to, amount) in ops {
                let sender = &keys[from as usize];
                let nonce = ledger.account(&sender.address()).nonce + 1;
                let t = Transfer::sign(sender, keys[to as usize].address(), amount, nonce);
                let _ = ledger.submit_transfer(&t);
                proptest::prop_assert_eq!(ledger.total_supply(), supply);
            }
        }
    }
}
