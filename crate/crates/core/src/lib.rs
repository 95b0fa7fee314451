//! Threshold multi-factor key derivation for a wallet whose private key is
//! never stored, plus the pieces around it: authentication factors, a mock
//! account ledger, and a deterministic simulator of the peer network that
//! replicates the public policy documents.
//!
//! The crate is `no_std` and needs only `alloc`. All randomness is injected
//! through [`rand_core::CryptoRng`], and time through
//! [`factor::FactorContext`].

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attest;
pub mod codec;
pub mod entropy;
pub mod envelope;
pub mod factor;
pub mod gf256;
pub mod kdf;
pub mod ledger;
pub mod mfkdf;
pub mod otp;
pub mod policy;
pub mod shamir;
pub mod store;

pub use attest::{attest, check_attestation, identifier_hash, verify_attestation, AttestationError};
pub use entropy::Entropy;
pub use factor::{
    FactorContext, FactorSetupSpec, FactorType, FactorWitness, MemoryInbox, OutOfBandChannel,
    SimulatedToken,
};
pub use kdf::{KdfConfig, KdfProfile};
pub use ledger::{keypair_from_seed, Address, Ledger, LedgerView, Transfer};
pub use mfkdf::{derive, reconfigure_factor, setup, DerivedKey, MfkdfError};
pub use policy::{policy_entropy, PolicyDocument};
pub use shamir::{combine_shares, split_secret, Share};
