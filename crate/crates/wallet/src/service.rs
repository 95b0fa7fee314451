//! Wallet lifecycle over the core: signup, login, factor recovery, transfers.
//!
//! The service keeps no user records. A wallet is found through the peer
//! network by address or identifier, and the key exists only inside live
//! sessions.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use mfkdf_wallet_core::attest::{identifier_hash, sign_binding};
use mfkdf_wallet_core::factor::{
    generate_recovery_code, is_valid_email, normalize_address, FactorContext, FactorParams,
    FactorSetupSpec, FactorSpecKind, FactorType, FactorWitness, OutOfBandChannel, OTP_KEY_LEN,
    TOKEN_SECRET_LEN,
};
use mfkdf_wallet_core::ledger::Transfer;
use mfkdf_wallet_core::store::{IdentifierBinding, PeerId, StoreError};
use mfkdf_wallet_core::{
    attest, check_attestation, derive, reconfigure_factor, setup, Address, DerivedKey, KdfConfig,
    KdfProfile, Ledger, PolicyDocument,
};
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};

use crate::api::*;
use crate::config::ServiceConfig;
use crate::error::{ErrorCode, ServiceError, ServiceResult};
use crate::world::World;

pub trait Clock: Send + Sync {
    /// Seconds since the Unix epoch.
    fn now(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        ManualClock(AtomicU64::new(start))
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }

    pub fn set(&self, now: u64) {
        self.0.store(now, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

impl<C: Clock + ?Sized> Clock for Arc<C> {
    fn now(&self) -> u64 {
        (**self).now()
    }
}

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub peer: PeerId,
    pub kdf: KdfConfig,
    pub session_ttl_secs: u64,
    pub dev: bool,
}

impl ServiceOptions {
    pub fn test(peer: PeerId) -> Self {
        ServiceOptions {
            peer,
            kdf: KdfConfig::test(),
            session_ttl_secs: crate::config::DEFAULT_SESSION_TTL,
            dev: true,
        }
    }
}

struct Session {
    address: Address,
    key: DerivedKey,
    expires_at: u64,
}

pub struct WalletService {
    world: Arc<World>,
    opts: ServiceOptions,
    clock: Arc<dyn Clock>,
    rng: Mutex<StdRng>,
    sessions: Mutex<HashMap<String, Session>>,
    wallet_locks: Mutex<HashMap<Address, Arc<Mutex<()>>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn decode_hex(field: &str, value: &str) -> ServiceResult<Vec<u8>> {
    hex::decode(value.trim()).map_err(|_| ServiceError::invalid(format!("{field}: expected hex")))
}

fn parse_address(s: &str) -> ServiceResult<Address> {
    s.parse()
        .map_err(|_| ServiceError::invalid(format!("`{s}` is not a wallet address")))
}

/// Signup factors when the request names none: password, hardware token and
/// recovery code, any two of which unlock the wallet.
pub fn default_template(password: &str) -> (Vec<FactorSpecInput>, usize) {
    (
        vec![
            FactorSpecInput::password(password),
            FactorSpecInput::of_type("hmac_token"),
            FactorSpecInput::of_type("recovery_code"),
        ],
        2,
    )
}

impl WalletService {
    pub fn new(world: Arc<World>, opts: ServiceOptions, clock: Arc<dyn Clock>) -> Self {
        Self::with_rng(world, opts, clock, StdRng::from_os_rng())
    }

    pub fn with_rng(world: Arc<World>, opts: ServiceOptions, clock: Arc<dyn Clock>, rng: StdRng) -> Self {
        WalletService {
            world,
            opts,
            clock,
            rng: Mutex::new(rng),
            sessions: Mutex::new(HashMap::new()),
            wallet_locks: Mutex::new(HashMap::new()),
        }
    }

    /// Builds the shared world and one service instance from configuration.
    pub fn from_config(cfg: &ServiceConfig) -> anyhow::Result<(Arc<World>, Self)> {
        cfg.validate()?;
        let accounts = cfg
            .genesis
            .iter()
            .map(|(a, &balance)| {
                let address: Address = a.parse().map_err(|_| anyhow::anyhow!("bad genesis address {a}"))?;
                Ok((address, mfkdf_wallet_core::ledger::LedgerAccount { balance, nonce: 0 }))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let world = World::shared(cfg.network.to_network_config(), Ledger::with_accounts(accounts, cfg.faucet));
        let opts = ServiceOptions {
            peer: cfg.peer,
            kdf: cfg.kdf()?,
            session_ttl_secs: cfg.session_ttl_secs,
            dev: cfg.dev,
        };
        let service = Self::new(world.clone(), opts, Arc::new(SystemClock));
        Ok((world, service))
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn options(&self) -> &ServiceOptions {
        &self.opts
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    fn wallet_lock(&self, address: Address) -> Arc<Mutex<()>> {
        lock(&self.wallet_locks).entry(address).or_default().clone()
    }

    fn random_bytes(&self, n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        lock(&self.rng).fill_bytes(&mut out);
        out
    }

    /// Converts a request factor into a core spec, generating any secret
    /// the caller left out. Returns the generated secret for display.
    fn factor_spec(
        &self,
        input: &FactorSpecInput,
        default_id: Option<&str>,
        identifier: Option<&str>,
    ) -> ServiceResult<(FactorSetupSpec, Option<String>)> {
        let ty = FactorType::parse(&input.factor_type)
            .ok_or_else(|| ServiceError::invalid(format!("unknown factor type `{}`", input.factor_type)))?;
        let id = input
            .id
            .clone()
            .or_else(|| default_id.map(str::to_string))
            .unwrap_or_else(|| ty.as_str().to_string());
        let (mut spec, shown) = match ty {
            FactorType::Password => {
                let pw = input.password.as_deref().unwrap_or("");
                if pw.is_empty() {
                    return Err(ServiceError::invalid("password must not be empty"));
                }
                (FactorSetupSpec::password(&id, pw), None)
            }
            FactorType::RecoveryCode => {
                let code = match &input.code {
                    Some(c) => c.clone(),
                    None => generate_recovery_code(&mut *lock(&self.rng)),
                };
                (FactorSetupSpec::recovery_code(&id, &code), Some(code))
            }
            FactorType::Hotp | FactorType::Totp => {
                let (key, shown) = match &input.secret {
                    Some(h) => (decode_hex("secret", h)?, None),
                    None => {
                        let k = self.random_bytes(OTP_KEY_LEN);
                        let shown = hex::encode(&k);
                        (k, Some(shown))
                    }
                };
                let spec = if ty == FactorType::Hotp {
                    FactorSetupSpec::hotp(&id, Some(key))
                } else {
                    match input.window {
                        Some(w) => FactorSetupSpec::totp_with_window(&id, Some(key), w),
                        None => FactorSetupSpec::totp(&id, Some(key)),
                    }
                };
                (spec, shown)
            }
            FactorType::Ooba => {
                let address = input
                    .address
                    .as_deref()
                    .or(identifier)
                    .ok_or_else(|| ServiceError::invalid("ooba factor needs an address"))?;
                (FactorSetupSpec::ooba(&id, address), None)
            }
            FactorType::HmacToken => {
                let secret: [u8; TOKEN_SECRET_LEN] = match &input.secret {
                    Some(h) => decode_hex("secret", h)?
                        .try_into()
                        .map_err(|_| ServiceError::invalid("token secret must be 20 bytes"))?,
                    None => self.random_bytes(TOKEN_SECRET_LEN).try_into().expect("20 bytes"),
                };
                let shown = input.secret.is_none().then(|| hex::encode(secret));
                (FactorSetupSpec::hmac_token(&id, Some(secret)), shown)
            }
        };
        if let Some(d) = input.digits {
            match &mut spec.kind {
                FactorSpecKind::Hotp { digits, .. }
                | FactorSpecKind::Totp { digits, .. }
                | FactorSpecKind::Ooba { digits, .. } => *digits = d,
                _ => return Err(ServiceError::invalid("digits only apply to OTP factors")),
            }
        }
        Ok((spec, shown))
    }

    pub fn signup(&self, req: SignupRequest) -> ServiceResult<SignupResponse> {
        let identifier = match &req.identifier {
            Some(id) if !is_valid_email(id) => {
                return Err(ServiceError::invalid("identifier must be an email address"))
            }
            Some(id) => Some(normalize_address(id)),
            None => None,
        };
        let kdf = match &req.kdf_profile {
            Some(p) => KdfConfig::for_profile(
                KdfProfile::parse(p).ok_or_else(|| ServiceError::invalid(format!("unknown kdf profile `{p}`")))?,
            ),
            None => self.opts.kdf,
        };
        let (inputs, default_t) = match &req.factors {
            Some(f) => (f.clone(), f.len().min(2)),
            None => default_template(req.password.as_deref().unwrap_or("")),
        };
        let threshold = req.threshold.unwrap_or(default_t);

        let id_hash = identifier.as_deref().map(identifier_hash);
        if let Some(h) = &id_hash {
            if self.world.resolve_identifier(self.opts.peer, h).is_ok() {
                return Err(ServiceError::new(ErrorCode::IdentifierTaken, "identifier is already bound to a wallet"));
            }
        }

        let mut specs = Vec::with_capacity(inputs.len());
        let mut secrets = BTreeMap::new();
        for input in &inputs {
            let (spec, shown) = self.factor_spec(input, None, identifier.as_deref())?;
            if let Some(s) = shown {
                secrets.insert(spec.id.clone(), s);
            }
            specs.push(spec);
        }

        let now = self.now();
        let (mut doc, key) = {
            let mut inbox = self.world.inbox();
            let mut rng = lock(&self.rng);
            let mut ctx = FactorContext::with_channel(now, &mut *inbox as &mut dyn OutOfBandChannel);
            setup(&specs, threshold, kdf, &mut *rng, &mut ctx)?
        };
        doc.identifier_hash = id_hash;
        let doc = attest(&doc, key.signing_seed());
        let bytes = doc.to_canonical_bytes();
        let address = key.address();
        let wallet_lock = self.wallet_lock(address);
        let _guard = lock(&wallet_lock);
        self.world.put(self.opts.peer, &bytes)?;
        if let Some(h) = id_hash {
            let kp = key.keypair();
            let binding = IdentifierBinding {
                identifier_hash: h,
                wallet_address: address,
                doc_version: doc.version,
                public_key: kp.public_key().to_vec(),
                signature: sign_binding(&h, key.signing_seed()),
            };
            self.world.bind(self.opts.peer, binding, &bytes)?;
        }
        drop(key);
        self.world.settle();
        log::info!("created wallet {address} (policy v{})", doc.version);

        let first_of = |ty: FactorType| {
            specs
                .iter()
                .find(|s| s.factor_type() == ty)
                .and_then(|s| secrets.get(&s.id).cloned())
        };
        Ok(SignupResponse {
            wallet_address: address.to_hex(),
            identifier,
            recovery_code: first_of(FactorType::RecoveryCode),
            token_secret: first_of(FactorType::HmacToken),
            secrets,
            policy_version: doc.version,
        })
    }

    /// Email identifier or hex address to wallet address.
    pub fn resolve(&self, identifier: &str) -> ServiceResult<Address> {
        let identifier = identifier.trim();
        if identifier.contains('@') {
            self.world
                .resolve_identifier(self.opts.peer, &identifier_hash(identifier))
                .map_err(|_| ServiceError::not_found("unknown identifier"))
        } else {
            parse_address(identifier)
        }
    }

    fn fetch(&self, address: &Address) -> ServiceResult<PolicyDocument> {
        let found = self.world.get(self.opts.peer, address)?;
        let doc = PolicyDocument::parse(&found.doc_bytes)
            .map_err(|e| ServiceError::new(ErrorCode::StoreRejected, e.to_string()))?;
        check_attestation(&doc).map_err(|e| ServiceError::new(ErrorCode::StoreRejected, e.to_string()))?;
        Ok(doc)
    }

    /// Current public policy document, canonical bytes.
    pub fn policy(&self, identifier: &str) -> ServiceResult<Vec<u8>> {
        let address = self.resolve(identifier)?;
        Ok(self.world.get(self.opts.peer, &address)?.doc_bytes.to_vec())
    }

    fn witnesses(doc: &PolicyDocument, given: &BTreeMap<String, String>) -> Vec<FactorWitness> {
        given
            .iter()
            .filter(|(_, v)| !v.trim().is_empty())
            .map(|(id, v)| {
                let v = v.trim();
                let bytes = match doc.factor(id).map(|f| f.factor_type()) {
                    // undecodable responses simply fail to authenticate
                    Some(FactorType::HmacToken) => hex::decode(v).unwrap_or_else(|_| v.as_bytes().to_vec()),
                    _ => v.as_bytes().to_vec(),
                };
                FactorWitness::new(id.clone(), bytes)
            })
            .collect()
    }

    pub fn login(&self, req: LoginRequest) -> ServiceResult<SessionInfo> {
        self.purge_expired();
        let address = self.resolve(&req.identifier)?;
        let wallet_lock = self.wallet_lock(address);
        let _guard = lock(&wallet_lock);
        let mut attempt = 0;
        let (key, version) = loop {
            let doc = self.fetch(&address)?;
            let witnesses = Self::witnesses(&doc, &req.witnesses);
            let now = self.now();
            let (key, next) = {
                let mut inbox = self.world.inbox();
                let mut rng = lock(&self.rng);
                let mut ctx = FactorContext::with_channel(now, &mut *inbox as &mut dyn OutOfBandChannel);
                derive(&doc, &witnesses, &mut *rng, &mut ctx)?
            };
            let next = attest(&next, key.signing_seed());
            match self.world.put(self.opts.peer, &next.to_canonical_bytes()) {
                Ok(_) => break (key, next.version),
                Err(StoreError::NonSuccessor { .. }) if attempt == 0 => {
                    attempt += 1;
                    self.world.settle();
                }
                Err(e) => return Err(e.into()),
            }
        };
        self.world.settle();

        let session_id = hex::encode(self.random_bytes(16));
        let expires_at = self.now() + self.opts.session_ttl_secs;
        lock(&self.sessions).insert(
            session_id.clone(),
            Session {
                address,
                key,
                expires_at,
            },
        );
        log::info!("session opened for {address} (policy v{version})");
        Ok(SessionInfo {
            session_id,
            wallet_address: address.to_hex(),
            expires_at,
            policy_version: version,
        })
    }

    /// Drops expired sessions; their keys are wiped on drop.
    pub fn purge_expired(&self) {
        let now = self.now();
        lock(&self.sessions).retain(|_, s| s.expires_at > now);
    }

    pub fn active_sessions(&self) -> usize {
        self.purge_expired();
        lock(&self.sessions).len()
    }

    pub fn logout(&self, session_id: &str) -> ServiceResult<()> {
        match lock(&self.sessions).remove(session_id) {
            Some(_) => Ok(()),
            None => Err(ServiceError::session_required()),
        }
    }

    pub fn session_info(&self, session_id: &str) -> ServiceResult<SessionInfo> {
        self.purge_expired();
        let sessions = lock(&self.sessions);
        let s = sessions.get(session_id).ok_or_else(ServiceError::session_required)?;
        let address = s.address;
        let expires_at = s.expires_at;
        drop(sessions);
        let policy_version = self.fetch(&address).map(|d| d.version).unwrap_or(0);
        Ok(SessionInfo {
            session_id: session_id.to_string(),
            wallet_address: address.to_hex(),
            expires_at,
            policy_version,
        })
    }

    fn session_key(&self, session_id: &str, address: &Address) -> ServiceResult<DerivedKey> {
        self.purge_expired();
        let sessions = lock(&self.sessions);
        let s = sessions.get(session_id).ok_or_else(ServiceError::session_required)?;
        if s.address != *address {
            return Err(ServiceError::new(ErrorCode::Forbidden, "session belongs to another wallet"));
        }
        Ok(s.key.clone())
    }

    pub fn recover_factor(
        &self,
        session_id: &str,
        address: &str,
        factor_id: &str,
        input: FactorSpecInput,
    ) -> ServiceResult<RecoverResponse> {
        let address = parse_address(address)?;
        let key = self.session_key(session_id, &address)?;
        let wallet_lock = self.wallet_lock(address);
        let _guard = lock(&wallet_lock);
        let doc = self.fetch(&address)?;
        let entry = doc
            .factor(factor_id)
            .ok_or_else(|| ServiceError::invalid(format!("unknown factor id `{factor_id}`")))?;
        let current_ooba = match &entry.params {
            FactorParams::Ooba(p) => Some(p.channel_address.clone()),
            _ => None,
        };
        let (spec, shown) = self.factor_spec(&input, Some(factor_id), current_ooba.as_deref())?;
        let now = self.now();
        let next = {
            let mut inbox = self.world.inbox();
            let mut rng = lock(&self.rng);
            let mut ctx = FactorContext::with_channel(now, &mut *inbox as &mut dyn OutOfBandChannel);
            reconfigure_factor(&doc, &key, factor_id, &spec, &mut *rng, &mut ctx)?
        };
        let next = attest(&next, key.signing_seed());
        self.world.put(self.opts.peer, &next.to_canonical_bytes())?;
        self.world.settle();
        log::info!("replaced factor {factor_id} of {address} (policy v{})", next.version);
        Ok(RecoverResponse {
            factor_id: spec.id.clone(),
            policy_version: next.version,
            secret: shown,
        })
    }

    pub fn balance(&self, address: &str) -> ServiceResult<BalanceResponse> {
        let address = parse_address(address)?;
        let account = self.world.ledger().account(&address);
        Ok(BalanceResponse {
            wallet_address: address.to_hex(),
            balance: account.balance,
            nonce: account.nonce,
        })
    }

    pub fn send(&self, session_id: &str, address: &str, req: TransferRequest) -> ServiceResult<TransferResponse> {
        let from = parse_address(address)?;
        let to = parse_address(&req.to)?;
        let key = self.session_key(session_id, &from)?;
        let wallet_lock = self.wallet_lock(from);
        let _guard = lock(&wallet_lock);
        let nonce = self.world.ledger().account(&from).nonce + 1;
        let transfer = Transfer::sign(&key.keypair(), to, req.amount, nonce);
        drop(key);
        let r = self.world.submit_transfer(&transfer)?;
        log::info!("transfer {} -> {} of {} units (nonce {})", r.from, r.to, r.amount, r.nonce);
        Ok(TransferResponse {
            from: r.from.to_hex(),
            to: r.to.to_hex(),
            amount: r.amount,
            nonce: r.nonce,
            sender_balance: r.sender_balance,
            recipient_balance: r.recipient_balance,
        })
    }

    fn require_dev(&self) -> ServiceResult<()> {
        if self.opts.dev {
            Ok(())
        } else {
            Err(ServiceError::not_found("development routes are disabled"))
        }
    }

    pub fn dev_inbox(&self, email: &str) -> ServiceResult<InboxResponse> {
        self.require_dev()?;
        let code = self
            .world
            .inbox()
            .latest(email)
            .ok_or_else(|| ServiceError::not_found("no code delivered to this address"))?;
        Ok(InboxResponse {
            address: normalize_address(email),
            code,
        })
    }

    pub fn faucet(&self, req: FaucetRequest) -> ServiceResult<BalanceResponse> {
        self.require_dev()?;
        let address = parse_address(&req.address)?;
        if req.amount == 0 {
            return Err(ServiceError::new(ErrorCode::InvalidAmount, "amount must be positive"));
        }
        self.world.fund(address, req.amount)?;
        self.balance(&req.address)
    }

    pub fn health(&self) -> HealthResponse {
        let net = self.world.network();
        HealthResponse {
            status: "ok".into(),
            peer: self.opts.peer,
            peer_count: net.peers().len(),
            round: net.round(),
            kdf_profile: self.opts.kdf.profile.as_str().into(),
        }
    }
}
