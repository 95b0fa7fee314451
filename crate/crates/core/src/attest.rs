//! Wallet-key attestation of policy documents and identifier bindings.

use alloc::vec::Vec;

use crate::factor::normalize_address;
use crate::kdf::labeled_hash;
use crate::ledger::{keypair_from_seed, Address, Ed25519, SignatureScheme};
use crate::policy::{Attestation, PolicyDocument};

const ATTEST_DOMAIN: &[u8] = b"mfkdf-wallet/attest/v1";
const BIND_DOMAIN: &[u8] = b"mfkdf-wallet/bind/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AttestationError {
    #[error("document carries no attestation")]
    Missing,
    #[error("attestation key does not hash to the wallet address")]
    AddressMismatch,
    #[error("attestation signature is invalid")]
    BadSignature,
}

fn attest_message(doc: &PolicyDocument) -> Vec<u8> {
    let mut msg = ATTEST_DOMAIN.to_vec();
    msg.extend_from_slice(&doc.signing_bytes());
    msg
}

/// Signs the canonical document (attestation omitted) with the wallet key.
pub fn attest(doc: &PolicyDocument, signing_seed: &[u8; 32]) -> PolicyDocument {
    let keypair = keypair_from_seed(signing_seed);
    let mut out = doc.clone();
    out.attestation = Some(Attestation {
        public_key: keypair.public_key().to_vec(),
        signature: keypair.sign(&attest_message(doc)),
    });
    out
}

pub fn check_attestation(doc: &PolicyDocument) -> Result<(), AttestationError> {
    let a = doc.attestation.as_ref().ok_or(AttestationError::Missing)?;
    if Address::from_public_key(&a.public_key) != doc.wallet_address {
        return Err(AttestationError::AddressMismatch);
    }
    if !Ed25519::verify(&a.public_key, &attest_message(doc), &a.signature) {
        return Err(AttestationError::BadSignature);
    }
    Ok(())
}

pub fn verify_attestation(doc: &PolicyDocument) -> bool {
    check_attestation(doc).is_ok()
}

/// SHA-256 of the lower-cased, trimmed email.
pub fn identifier_hash(email: &str) -> [u8; 32] {
    labeled_hash(b"", normalize_address(email).as_bytes())
}

fn binding_message(identifier_hash: &[u8; 32], address: &Address) -> Vec<u8> {
    let mut msg = BIND_DOMAIN.to_vec();
    msg.extend_from_slice(identifier_hash);
    msg.extend_from_slice(address.as_bytes());
    msg
}

pub fn sign_binding(identifier_hash: &[u8; 32], signing_seed: &[u8; 32]) -> Vec<u8> {
    let keypair = keypair_from_seed(signing_seed);
    keypair.sign(&binding_message(identifier_hash, &keypair.address()))
}

pub fn verify_binding(
    identifier_hash: &[u8; 32],
    address: &Address,
    public_key: &[u8],
    signature: &[u8],
) -> bool {
    Address::from_public_key(public_key) == *address
        && Ed25519::verify(public_key, &binding_message(identifier_hash, address), signature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy;
    use crate::factor::FactorParams;
    use crate::kdf::KdfConfig;
    use crate::policy::FactorEntry;
    use alloc::collections::BTreeMap;
    use alloc::vec;

    fn doc_for(seed: &[u8; 32]) -> PolicyDocument {
        PolicyDocument {
            schema_version: 1,
            version: 1,
            threshold: 1,
            wallet_address: keypair_from_seed(seed).address(),
            identifier_hash: None,
            global_salt: [1; 32],
            kdf: KdfConfig::test(),
            factors: vec![FactorEntry {
                factor_id: "p".into(),
                share_index: 1,
                encrypted_share: vec![0; 4],
                factor_salt: [2; 32],
                params: FactorParams::Password,
                entropy: entropy::PASSWORD_DEFAULT,
            }],
            wrapped_inner_secrets: BTreeMap::new(),
            attestation: None,
        }
    }

    #[test]
    fn attest_then_verify() {
        let seed = [5u8; 32];
        let doc = attest(&doc_for(&seed), &seed);
        assert!(verify_attestation(&doc));
        assert_eq!(check_attestation(&doc_for(&seed)), Err(AttestationError::Missing));
    }

    #[test]
    fn every_byte_flip_breaks_verification() {
        let seed = [5u8; 32];
        let bytes = attest(&doc_for(&seed), &seed).to_canonical_bytes();
        for i in 0..bytes.len() {
            let mut tampered = bytes.clone();
            tampered[i] ^= 0x01;
            if let Ok(doc) = PolicyDocument::parse(&tampered) {
                assert!(!verify_attestation(&doc), "flip at byte {i} went unnoticed");
            }
        }
    }

    #[test]
    fn other_wallet_seed_fails_address_check() {
        let doc = attest(&doc_for(&[5; 32]), &[6; 32]);
        assert_eq!(check_attestation(&doc), Err(AttestationError::AddressMismatch));
    }

    #[test]
    fn binding_signatures() {
        let seed = [5u8; 32];
        let kp = keypair_from_seed(&seed);
        let h = identifier_hash("Alice@Example.com ");
        assert_eq!(h, identifier_hash("alice@example.com"));
        let sig = sign_binding(&h, &seed);
        assert!(verify_binding(&h, &kp.address(), kp.public_key(), &sig));
        let other = keypair_from_seed(&[6; 32]);
        // an attacker signing for the victim's address with their own key
        let forged = sign_binding(&h, &[6; 32]);
        assert!(!verify_binding(&h, &kp.address(), other.public_key(), &forged));
        assert!(!verify_binding(&h, &kp.address(), kp.public_key(), &forged));
    }
}
