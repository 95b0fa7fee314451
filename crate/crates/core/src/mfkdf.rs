//! Threshold multi-factor key derivation.
//!
//! Setup draws a random master secret, splits it into one Shamir share per
//! factor and seals each share under a key stretched from that factor's
//! witness-target. Derivation opens whichever shares the presented witnesses
//! unlock; with `t` of them the master secret is interpolated and stretched
//! into sigma. Every successful derivation also rolls the public parameters
//! forward so dynamic factors stay usable.
//!
//! A wrong witness is detected by the share envelope failing to authenticate,
//! so a key is never returned silently wrong, barring a Poly1305 forgery.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::CryptoRng;
use zeroize::{Zeroize, ZeroizeOnDrop, Zeroizing};

use crate::envelope;
use crate::factor::{
    factor_derive, factor_setup, factor_update, FactorContext, FactorError, FactorSetupSpec,
    FactorWitness,
};
use crate::kdf::{self, KdfConfig, KdfError};
use crate::ledger::{keypair_from_seed, Address, WalletKeypair};
use crate::policy::{DocumentError, FactorEntry, PolicyDocument, MAX_FACTORS, SCHEMA_VERSION};
use crate::shamir::{self, Share, ShamirError};

const SHARE_AAD: &[u8] = b"mfkdf/share/v1";
const INNER_AAD: &[u8] = b"mfkdf/inner/v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MfkdfError {
    #[error("threshold {threshold} is out of range for {factors} factors")]
    ThresholdOutOfRange { threshold: usize, factors: usize },
    #[error("duplicate factor id `{0}`")]
    DuplicateFactor(String),
    #[error("unknown factor id `{0}`")]
    UnknownFactor(String),
    #[error("factor `{id}` setup failed: {source}")]
    FactorSetup { id: String, source: FactorError },
    #[error("{provided} witnesses provided but the threshold is {threshold}")]
    InsufficientWitnesses { provided: usize, threshold: usize },
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error(transparent)]
    StaleTotpWindow(FactorError),
    #[error("factor `{id}` update failed: {source}")]
    FactorUpdate { id: String, source: FactorError },
    #[error("key does not belong to this policy")]
    WrongKey,
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Kdf(#[from] KdfError),
    #[error(transparent)]
    Shamir(#[from] ShamirError),
}

/// Key material recovered from the factors. Only `sigma` is the wallet's
/// static key; the subkeys are hashes of it. The master secret and the
/// recovered shares are kept in memory so factors can be re-issued.
#[derive(Zeroize, ZeroizeOnDrop)]
pub struct DerivedKey {
    sigma: [u8; 32],
    signing_seed: [u8; 32],
    wrap_key: [u8; 32],
    master: [u8; 32],
    shares: Vec<Share>,
    #[zeroize(skip)]
    threshold: usize,
}

impl core::fmt::Debug for DerivedKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DerivedKey")
            .field("address", &self.address())
            .finish_non_exhaustive()
    }
}

impl Clone for DerivedKey {
    fn clone(&self) -> Self {
        DerivedKey {
            sigma: self.sigma,
            signing_seed: self.signing_seed,
            wrap_key: self.wrap_key,
            master: self.master,
            shares: self.shares.clone(),
            threshold: self.threshold,
        }
    }
}

impl DerivedKey {
    fn new(sigma: [u8; 32], master: [u8; 32], shares: Vec<Share>, threshold: usize) -> Self {
        DerivedKey {
            signing_seed: kdf::labeled_hash(b"mfkdf/sign", &sigma),
            wrap_key: kdf::labeled_hash(b"mfkdf/wrap", &sigma),
            sigma,
            master,
            shares,
            threshold,
        }
    }

    pub fn sigma(&self) -> &[u8; 32] {
        &self.sigma
    }

    pub fn signing_seed(&self) -> &[u8; 32] {
        &self.signing_seed
    }

    pub fn wrap_key(&self) -> &[u8; 32] {
        &self.wrap_key
    }

    pub fn keypair(&self) -> WalletKeypair {
        keypair_from_seed(&self.signing_seed)
    }

    pub fn address(&self) -> Address {
        self.keypair().address()
    }

    /// Shares recovered during derivation, for auditing that they never leak.
    pub fn recovered_shares(&self) -> &[Share] {
        &self.shares
    }
}

fn share_aad(factor_id: &str, share_index: u8) -> Vec<u8> {
    let mut aad = SHARE_AAD.to_vec();
    aad.extend_from_slice(factor_id.as_bytes());
    aad.push(0);
    aad.push(share_index);
    aad
}

fn inner_aad(factor_id: &str) -> Vec<u8> {
    let mut aad = INNER_AAD.to_vec();
    aad.extend_from_slice(factor_id.as_bytes());
    aad
}

fn seal_share<R: CryptoRng + ?Sized>(
    entry_id: &str,
    share: &Share,
    target: &[u8],
    kdf_cfg: &KdfConfig,
    rng: &mut R,
) -> Result<([u8; 32], Vec<u8>), KdfError> {
    let mut salt = [0u8; 32];
    rng.fill_bytes(&mut salt);
    let key = Zeroizing::new(kdf::factor_key(target, &salt, kdf_cfg)?);
    let plain = Zeroizing::new(share.to_bytes());
    let sealed = envelope::seal(&key, &share_aad(entry_id, share.x), &plain[..], rng);
    Ok((salt, sealed))
}

fn open_share(entry: &FactorEntry, target: &[u8], kdf_cfg: &KdfConfig) -> Result<Option<Share>, MfkdfError> {
    let key = Zeroizing::new(kdf::factor_key(target, &entry.factor_salt, kdf_cfg)?);
    match envelope::open(&key, &share_aad(&entry.factor_id, entry.share_index), &entry.encrypted_share) {
        Ok(plain) => {
            let plain = Zeroizing::new(plain);
            let share = Share::from_bytes(&plain)?;
            if share.x != entry.share_index {
                return Err(DocumentError::Malformed("share index does not match its entry".into()).into());
            }
            Ok(Some(share))
        }
        Err(_) => Ok(None),
    }
}

fn wrap_inner<R: CryptoRng + ?Sized>(key: &DerivedKey, factor_id: &str, secret: &[u8], rng: &mut R) -> Vec<u8> {
    envelope::seal(&key.wrap_key, &inner_aad(factor_id), secret, rng)
}

fn unwrap_inner(
    key: &DerivedKey,
    doc: &PolicyDocument,
    factor_id: &str,
) -> Result<Option<Zeroizing<Vec<u8>>>, MfkdfError> {
    match doc.wrapped_inner_secrets.get(factor_id) {
        None => Ok(None),
        Some(wrapped) => envelope::open(&key.wrap_key, &inner_aad(factor_id), wrapped)
            .map(|s| Some(Zeroizing::new(s)))
            .map_err(|_| MfkdfError::WrongKey),
    }
}

/// Returns the unwrapped inner secret of a dynamic factor (OTP key, token
/// secret), e.g. to provision an authenticator right after setup.
pub fn reveal_inner_secret(
    doc: &PolicyDocument,
    key: &DerivedKey,
    factor_id: &str,
) -> Result<Option<Zeroizing<Vec<u8>>>, MfkdfError> {
    if doc.factor(factor_id).is_none() {
        return Err(MfkdfError::UnknownFactor(factor_id.into()));
    }
    unwrap_inner(key, doc, factor_id)
}

fn check_threshold(threshold: usize, factors: usize) -> Result<(), MfkdfError> {
    if threshold == 0 || threshold > factors || factors > MAX_FACTORS {
        return Err(MfkdfError::ThresholdOutOfRange { threshold, factors });
    }
    Ok(())
}

/// Establishes a new policy and its key.
pub fn setup<R: CryptoRng + ?Sized>(
    specs: &[FactorSetupSpec],
    threshold: usize,
    kdf_cfg: KdfConfig,
    rng: &mut R,
    ctx: &mut FactorContext<'_>,
) -> Result<(PolicyDocument, DerivedKey), MfkdfError> {
    check_threshold(threshold, specs.len())?;
    let mut ids = BTreeSet::new();
    for spec in specs {
        if spec.id.is_empty() || !ids.insert(spec.id.as_str()) {
            return Err(MfkdfError::DuplicateFactor(spec.id.clone()));
        }
    }
    kdf_cfg.validate()?;

    let mut master = Zeroizing::new([0u8; 32]);
    rng.fill_bytes(&mut master[..]);
    let mut global_salt = [0u8; 32];
    rng.fill_bytes(&mut global_salt);

    let shares = shamir::split_secret(&master, threshold, specs.len(), rng)?;
    let sigma = kdf::stretch_final(&master, &global_salt, &kdf_cfg)?;
    let key = DerivedKey::new(sigma, *master, shares[..threshold].to_vec(), threshold);

    let mut factors = Vec::with_capacity(specs.len());
    let mut wrapped_inner_secrets = BTreeMap::new();
    for (spec, share) in specs.iter().zip(&shares) {
        let material = factor_setup(spec, rng, ctx).map_err(|source| MfkdfError::FactorSetup {
            id: spec.id.clone(),
            source,
        })?;
        let (factor_salt, encrypted_share) = seal_share(&spec.id, share, &material.target, &kdf_cfg, rng)?;
        if let Some(inner) = &material.inner_secret {
            wrapped_inner_secrets.insert(spec.id.clone(), wrap_inner(&key, &spec.id, inner, rng));
        }
        factors.push(FactorEntry {
            factor_id: spec.id.clone(),
            share_index: share.x,
            encrypted_share,
            factor_salt,
            params: material.params,
            entropy: material.entropy,
        });
    }

    let doc = PolicyDocument {
        schema_version: SCHEMA_VERSION,
        version: 1,
        threshold,
        wallet_address: key.address(),
        identifier_hash: None,
        global_salt,
        kdf: kdf_cfg,
        factors,
        wrapped_inner_secrets,
        attestation: None,
    };
    Ok((doc, key))
}

/// Derives the key from at least `t` correct witnesses and returns it with
/// the next version of the policy (unattested).
///
/// Witnesses are tried in lexicographic factor-id order; every presented
/// witness is evaluated, and the first `t` authenticated shares are combined.
pub fn derive<R: CryptoRng + ?Sized>(
    doc: &PolicyDocument,
    witnesses: &[FactorWitness],
    rng: &mut R,
    ctx: &mut FactorContext<'_>,
) -> Result<(DerivedKey, PolicyDocument), MfkdfError> {
    doc.validate()?;
    let mut by_id: BTreeMap<&str, &FactorWitness> = BTreeMap::new();
    for w in witnesses {
        if doc.factor(&w.factor_id).is_none() {
            return Err(MfkdfError::UnknownFactor(w.factor_id.clone()));
        }
        by_id.insert(w.factor_id.as_str(), w);
    }
    if by_id.len() < doc.threshold {
        return Err(MfkdfError::InsufficientWitnesses {
            provided: by_id.len(),
            threshold: doc.threshold,
        });
    }

    let mut shares: Vec<Share> = Vec::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut stale: Option<FactorError> = None;
    for (id, witness) in &by_id {
        let entry = doc.factor(id).expect("checked above");
        let target = match factor_derive(&entry.params, witness.value(), ctx) {
            Ok(t) => t,
            Err(e @ FactorError::TotpWindowExceeded { .. }) => {
                stale = Some(e);
                continue;
            }
            Err(_) => continue,
        };
        if let Some(share) = open_share(entry, &target, &doc.kdf)? {
            shares.push(share);
            used.insert(String::from(*id));
        }
    }
    if shares.len() < doc.threshold {
        return Err(match stale {
            Some(e) => MfkdfError::StaleTotpWindow(e),
            None => MfkdfError::InvalidCredentials,
        });
    }
    shares.truncate(doc.threshold);

    let master = Zeroizing::new(shamir::combine_shares(&shares, doc.threshold)?);
    let sigma = kdf::stretch_final(&master, &doc.global_salt, &doc.kdf)?;
    let key = DerivedKey::new(sigma, *master, shares, doc.threshold);
    if key.address() != doc.wallet_address {
        return Err(DocumentError::Malformed("wallet address does not match the derived key".into()).into());
    }

    let next = feed_forward(doc, &key, &used, rng, ctx)?;
    Ok((key, next))
}

/// Rolls every dynamic factor forward after a successful derivation.
fn feed_forward<R: CryptoRng + ?Sized>(
    doc: &PolicyDocument,
    key: &DerivedKey,
    used: &BTreeSet<String>,
    rng: &mut R,
    ctx: &mut FactorContext<'_>,
) -> Result<PolicyDocument, MfkdfError> {
    let mut next = doc.clone();
    next.version = doc
        .version
        .checked_add(1)
        .ok_or_else(|| DocumentError::Malformed("version overflow".into()))?;
    next.attestation = None;
    for entry in next.factors.iter_mut() {
        let inner = unwrap_inner(key, doc, &entry.factor_id)?;
        let update = factor_update(
            &entry.params,
            inner.as_ref().map(|s| &s[..]),
            used.contains(&entry.factor_id),
            rng,
            ctx,
        )
        .map_err(|source| MfkdfError::FactorUpdate {
            id: entry.factor_id.clone(),
            source,
        })?;
        if let Some((params, target)) = update {
            let share = shamir::reissue_share(&key.shares, key.threshold, entry.share_index)?;
            let (salt, sealed) = seal_share(&entry.factor_id, &share, &target, &doc.kdf, rng)?;
            entry.params = params;
            entry.factor_salt = salt;
            entry.encrypted_share = sealed;
        }
        if let Some(inner) = inner {
            next.wrapped_inner_secrets
                .insert(entry.factor_id.clone(), wrap_inner(key, &entry.factor_id, &inner, rng));
        }
    }
    Ok(next)
}

fn check_key(doc: &PolicyDocument, key: &DerivedKey) -> Result<(), MfkdfError> {
    if key.address() != doc.wallet_address || key.threshold != doc.threshold {
        return Err(MfkdfError::WrongKey);
    }
    for id in doc.wrapped_inner_secrets.keys() {
        unwrap_inner(key, doc, id)?;
    }
    Ok(())
}

/// Replaces one factor (e.g. a lost password) with a new one guarding the
/// same share index, so sigma is unchanged. Returns the next, unattested
/// version.
///
/// The other factors' targets are unknown here, so the polynomial cannot be
/// re-drawn; the replacement gets the existing share for its index, sealed
/// under a fresh salt and its new target.
pub fn reconfigure_factor<R: CryptoRng + ?Sized>(
    doc: &PolicyDocument,
    key: &DerivedKey,
    factor_id: &str,
    new_spec: &FactorSetupSpec,
    rng: &mut R,
    ctx: &mut FactorContext<'_>,
) -> Result<PolicyDocument, MfkdfError> {
    doc.validate()?;
    let idx = doc
        .factor_index(factor_id)
        .ok_or_else(|| MfkdfError::UnknownFactor(factor_id.into()))?;
    check_key(doc, key)?;
    if new_spec.id != factor_id && doc.factor(&new_spec.id).is_some() {
        return Err(MfkdfError::DuplicateFactor(new_spec.id.clone()));
    }
    if new_spec.id.is_empty() {
        return Err(MfkdfError::DuplicateFactor(new_spec.id.clone()));
    }
    let material = factor_setup(new_spec, rng, ctx).map_err(|source| MfkdfError::FactorSetup {
        id: new_spec.id.clone(),
        source,
    })?;
    let share_index = doc.factors[idx].share_index;
    let share = shamir::reissue_share(&key.shares, key.threshold, share_index)?;
    let (factor_salt, encrypted_share) = seal_share(&new_spec.id, &share, &material.target, &doc.kdf, rng)?;

    let mut next = doc.clone();
    next.version = doc
        .version
        .checked_add(1)
        .ok_or_else(|| DocumentError::Malformed("version overflow".into()))?;
    next.attestation = None;
    next.wrapped_inner_secrets.remove(factor_id);
    if let Some(inner) = &material.inner_secret {
        next.wrapped_inner_secrets
            .insert(new_spec.id.clone(), wrap_inner(key, &new_spec.id, inner, rng));
    }
    next.factors[idx] = FactorEntry {
        factor_id: new_spec.id.clone(),
        share_index,
        encrypted_share,
        factor_salt,
        params: material.params,
        entropy: material.entropy,
    };
    Ok(next)
}
