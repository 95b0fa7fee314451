//! The public policy document and its canonical wire form.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{json, Map, Value};

use crate::codec::{self, b64, Fields};
use crate::entropy::{self, Entropy};
use crate::factor::{
    FactorParams, FactorType, HmacTokenParams, HotpParams, OobaParams, TotpParams, CHALLENGE_LEN,
};
use crate::kdf::{KdfConfig, KdfProfile};
use crate::ledger::Address;
use crate::otp;

pub const SCHEMA_VERSION: u64 = 1;
pub const MAX_FACTORS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("malformed policy document: {0}")]
    Malformed(String),
    #[error("unsupported schema version {0}")]
    UnsupportedSchema(u64),
}

fn malformed(msg: impl Into<String>) -> DocumentError {
    DocumentError::Malformed(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attestation {
    pub public_key: Vec<u8>,
    pub signature: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorEntry {
    pub factor_id: String,
    pub share_index: u8,
    /// Envelope around the 33-byte share, keyed by the witness-target.
    pub encrypted_share: Vec<u8>,
    pub factor_salt: [u8; 32],
    pub params: FactorParams,
    pub entropy: Entropy,
}

impl FactorEntry {
    pub fn factor_type(&self) -> FactorType {
        self.params.factor_type()
    }
}

/// Public parameters needed, together with witnesses, to derive a wallet key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyDocument {
    pub schema_version: u64,
    pub version: u64,
    pub threshold: usize,
    pub wallet_address: Address,
    pub identifier_hash: Option<[u8; 32]>,
    pub global_salt: [u8; 32],
    pub kdf: KdfConfig,
    pub factors: Vec<FactorEntry>,
    pub wrapped_inner_secrets: BTreeMap<String, Vec<u8>>,
    pub attestation: Option<Attestation>,
}

/// Offsets below 2^24 pack into three bytes, i.e. four base64 characters.
fn offset_width(digits: u8) -> usize {
    if otp::modulus(digits) <= 1 << 24 {
        3
    } else {
        4
    }
}

fn pack_offsets(offsets: &[u32], digits: u8) -> Vec<u8> {
    let width = offset_width(digits);
    let mut out = Vec::with_capacity(offsets.len() * width);
    for o in offsets {
        out.extend_from_slice(&o.to_be_bytes()[4 - width..]);
    }
    out
}

fn unpack_offsets(bytes: &[u8], digits: u8) -> Result<Vec<u32>, DocumentError> {
    let width = offset_width(digits);
    if bytes.is_empty() || bytes.len() % width != 0 {
        return Err(malformed("totp window_offsets has a bad length"));
    }
    let m = otp::modulus(digits);
    bytes
        .chunks_exact(width)
        .map(|c| {
            let mut buf = [0u8; 4];
            buf[4 - width..].copy_from_slice(c);
            let v = u32::from_be_bytes(buf);
            if v < m {
                Ok(v)
            } else {
                Err(malformed("totp offset out of range"))
            }
        })
        .collect()
}

fn params_to_value(params: &FactorParams) -> Value {
    match params {
        FactorParams::Password | FactorParams::RecoveryCode => Value::Object(Map::new()),
        FactorParams::Hotp(p) => json!({
            "counter": p.counter,
            "digits": p.digits,
            "offset": p.offset,
        }),
        FactorParams::Totp(p) => json!({
            "start_counter": p.start_counter,
            "step_seconds": p.step_seconds,
            "digits": p.digits,
            "window_offsets": b64(&pack_offsets(&p.window_offsets, p.digits)),
        }),
        FactorParams::Ooba(p) => json!({
            "channel_address": p.channel_address,
            "digits": p.digits,
            "code_epoch": p.code_epoch,
        }),
        FactorParams::HmacToken(p) => json!({ "challenge": b64(&p.challenge) }),
    }
}

fn digits_field(f: &Fields<'_>) -> Result<u8, DocumentError> {
    let d = f.u64("digits").map_err(malformed)?;
    if (6..=8).contains(&d) {
        Ok(d as u8)
    } else {
        Err(malformed(alloc::format!("{}: digits out of range", f.path)))
    }
}

fn params_from_value(ty: FactorType, value: &Value) -> Result<FactorParams, DocumentError> {
    let f = Fields::of("params", value).map_err(malformed)?;
    let m = |e: String| malformed(e);
    Ok(match ty {
        FactorType::Password => {
            f.only(&[]).map_err(m)?;
            FactorParams::Password
        }
        FactorType::RecoveryCode => {
            f.only(&[]).map_err(m)?;
            FactorParams::RecoveryCode
        }
        FactorType::Hotp => {
            f.only(&["counter", "digits", "offset"]).map_err(m)?;
            let digits = digits_field(&f)?;
            let offset = f.u64("offset").map_err(m)?;
            if offset >= otp::modulus(digits) as u64 {
                return Err(malformed("hotp offset out of range"));
            }
            FactorParams::Hotp(HotpParams {
                counter: f.u64("counter").map_err(m)?,
                digits,
                offset: offset as u32,
            })
        }
        FactorType::Totp => {
            f.only(&["start_counter", "step_seconds", "digits", "window_offsets"])
                .map_err(m)?;
            let digits = digits_field(&f)?;
            let step_seconds = f.u64("step_seconds").map_err(m)?;
            if step_seconds == 0 {
                return Err(malformed("totp step must be positive"));
            }
            FactorParams::Totp(TotpParams {
                start_counter: f.u64("start_counter").map_err(m)?,
                step_seconds,
                digits,
                window_offsets: unpack_offsets(&f.bytes("window_offsets").map_err(m)?, digits)?,
            })
        }
        FactorType::Ooba => {
            f.only(&["channel_address", "digits", "code_epoch"])
                .map_err(m)?;
            FactorParams::Ooba(OobaParams {
                channel_address: f.str("channel_address").map_err(m)?.to_string(),
                digits: digits_field(&f)?,
                code_epoch: f.u64("code_epoch").map_err(m)?,
            })
        }
        FactorType::HmacToken => {
            f.only(&["challenge"]).map_err(m)?;
            FactorParams::HmacToken(HmacTokenParams {
                challenge: f.array::<CHALLENGE_LEN>("challenge").map_err(m)?,
            })
        }
    })
}

fn kdf_to_value(k: &KdfConfig) -> Value {
    json!({
        "profile": k.profile.as_str(),
        "memory_cost_kib": k.memory_cost_kib,
        "time_cost": k.time_cost,
        "parallelism": k.parallelism,
        "output_len": k.output_len,
    })
}

fn u32_field(f: &Fields<'_>, key: &str) -> Result<u32, DocumentError> {
    let v = f.u64(key).map_err(malformed)?;
    u32::try_from(v).map_err(|_| malformed(alloc::format!("kdf: `{key}` too large")))
}

fn kdf_from_value(value: &Value) -> Result<KdfConfig, DocumentError> {
    let f = Fields::of("kdf", value).map_err(malformed)?;
    f.only(&["profile", "memory_cost_kib", "time_cost", "parallelism", "output_len"])
        .map_err(malformed)?;
    let profile = KdfProfile::parse(f.str("profile").map_err(malformed)?)
        .ok_or_else(|| malformed("kdf: unknown profile"))?;
    let cfg = KdfConfig {
        profile,
        memory_cost_kib: u32_field(&f, "memory_cost_kib")?,
        time_cost: u32_field(&f, "time_cost")?,
        parallelism: u32_field(&f, "parallelism")?,
        output_len: u32_field(&f, "output_len")?,
    };
    cfg.validate()
        .map_err(|e| malformed(alloc::format!("kdf: {e}")))?;
    Ok(cfg)
}

impl PolicyDocument {
    pub fn factor(&self, factor_id: &str) -> Option<&FactorEntry> {
        self.factors.iter().find(|f| f.factor_id == factor_id)
    }

    pub fn factor_index(&self, factor_id: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.factor_id == factor_id)
    }

    /// Weakest-configuration entropy: the minimum over every t-subset of the
    /// sum of member entropies.
    pub fn entropy(&self) -> Entropy {
        policy_entropy(self)
    }

    /// Structural checks shared by parse and the derivation entry points.
    pub fn validate(&self) -> Result<(), DocumentError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DocumentError::UnsupportedSchema(self.schema_version));
        }
        let n = self.factors.len();
        if n == 0 || n > MAX_FACTORS {
            return Err(malformed("factor count must be between 1 and 16"));
        }
        if self.threshold == 0 || self.threshold > n {
            return Err(malformed("threshold out of range"));
        }
        if self.version == 0 {
            return Err(malformed("version starts at 1"));
        }
        let mut ids = BTreeSet::new();
        let mut indices = BTreeSet::new();
        for entry in &self.factors {
            if entry.factor_id.is_empty() || !ids.insert(entry.factor_id.as_str()) {
                return Err(malformed("factor ids must be unique and non-empty"));
            }
            if entry.share_index == 0 || !indices.insert(entry.share_index) {
                return Err(malformed("share indices must be unique and non-zero"));
            }
        }
        for id in self.wrapped_inner_secrets.keys() {
            match self.factor(id) {
                Some(e) if e.factor_type().is_dynamic() => {}
                _ => return Err(malformed("wrapped inner secret for unknown factor")),
            }
        }
        self.kdf
            .validate()
            .map_err(|e| malformed(alloc::format!("kdf: {e}")))
    }

    fn to_value(&self, with_attestation: bool) -> Value {
        let factors: Vec<Value> = self
            .factors
            .iter()
            .map(|e| {
                json!({
                    "factor_id": e.factor_id,
                    "factor_type": e.factor_type().as_str(),
                    "share_index": e.share_index,
                    "encrypted_share": b64(&e.encrypted_share),
                    "factor_salt": b64(&e.factor_salt),
                    "entropy_millibits": e.entropy.millibits(),
                    "params": params_to_value(&e.params),
                })
            })
            .collect();
        let wrapped: Map<String, Value> = self
            .wrapped_inner_secrets
            .iter()
            .map(|(k, v)| (k.clone(), b64(v)))
            .collect();
        let mut doc = json!({
            "schema_version": self.schema_version,
            "version": self.version,
            "threshold": self.threshold,
            "wallet_address": self.wallet_address.to_hex(),
            "global_salt": b64(&self.global_salt),
            "kdf": kdf_to_value(&self.kdf),
            "factors": factors,
            "wrapped_inner_secrets": wrapped,
        });
        let obj = doc.as_object_mut().expect("built as an object");
        if let Some(h) = &self.identifier_hash {
            obj.insert("identifier_hash".into(), Value::String(hex::encode(h)));
        }
        if with_attestation {
            if let Some(a) = &self.attestation {
                obj.insert(
                    "attestation".into(),
                    json!({ "public_key": b64(&a.public_key), "signature": b64(&a.signature) }),
                );
            }
        }
        doc
    }

    /// Canonical bytes; equal documents always serialize identically.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        codec::to_canonical_bytes(&self.to_value(true))
    }

    /// Canonical bytes with the attestation omitted: the signing input.
    pub fn signing_bytes(&self) -> Vec<u8> {
        codec::to_canonical_bytes(&self.to_value(false))
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, DocumentError> {
        let value: Value = serde_json::from_slice(bytes)
            .map_err(|e| malformed(alloc::format!("invalid JSON: {e}")))?;
        Self::from_value(&value)
    }

    fn from_value(value: &Value) -> Result<Self, DocumentError> {
        let f = Fields::of("document", value).map_err(malformed)?;
        let schema_version = f.u64("schema_version").map_err(malformed)?;
        if schema_version != SCHEMA_VERSION {
            return Err(DocumentError::UnsupportedSchema(schema_version));
        }
        f.only(&[
            "schema_version",
            "version",
            "threshold",
            "wallet_address",
            "identifier_hash",
            "global_salt",
            "kdf",
            "factors",
            "wrapped_inner_secrets",
            "attestation",
        ])
        .map_err(malformed)?;
        let wallet_address = f
            .str("wallet_address")
            .map_err(malformed)?
            .parse::<Address>()
            .map_err(|_| malformed("wallet_address must be 40 lowercase hex characters"))?;
        let identifier_hash = match f.opt("identifier_hash") {
            None => None,
            Some(v) => {
                let s = v
                    .as_str()
                    .ok_or_else(|| malformed("identifier_hash must be a string"))?;
                let mut h = [0u8; 32];
                hex::decode_to_slice(s, &mut h)
                    .map_err(|_| malformed("identifier_hash must be 64 hex characters"))?;
                Some(h)
            }
        };
        let factors_raw = f
            .get("factors")
            .map_err(malformed)?
            .as_array()
            .ok_or_else(|| malformed("factors must be an array"))?;
        let mut factors = Vec::with_capacity(factors_raw.len());
        for raw in factors_raw {
            let e = Fields::of("factor", raw).map_err(malformed)?;
            e.only(&[
                "factor_id",
                "factor_type",
                "share_index",
                "encrypted_share",
                "factor_salt",
                "entropy_millibits",
                "params",
            ])
            .map_err(malformed)?;
            let ty = FactorType::parse(e.str("factor_type").map_err(malformed)?)
                .ok_or_else(|| malformed("unknown factor_type"))?;
            let share_index = u8::try_from(e.u64("share_index").map_err(malformed)?)
                .map_err(|_| malformed("share_index must be below 256"))?;
            factors.push(FactorEntry {
                factor_id: e.str("factor_id").map_err(malformed)?.to_string(),
                share_index,
                encrypted_share: e.bytes("encrypted_share").map_err(malformed)?,
                factor_salt: e.array::<32>("factor_salt").map_err(malformed)?,
                entropy: Entropy::from_millibits(e.u64("entropy_millibits").map_err(malformed)?),
                params: params_from_value(ty, e.get("params").map_err(malformed)?)?,
            });
        }
        let wrapped_raw = f
            .get("wrapped_inner_secrets")
            .map_err(malformed)?
            .as_object()
            .ok_or_else(|| malformed("wrapped_inner_secrets must be an object"))?;
        let mut wrapped_inner_secrets = BTreeMap::new();
        for (k, v) in wrapped_raw {
            let s = v
                .as_str()
                .ok_or_else(|| malformed("wrapped inner secret must be a string"))?;
            let bytes = codec::decode_b64(s).map_err(|e| malformed(alloc::format!("wrapped inner secret {e}")))?;
            wrapped_inner_secrets.insert(k.clone(), bytes);
        }
        let attestation = match f.opt("attestation") {
            None => None,
            Some(v) => {
                let a = Fields::of("attestation", v).map_err(malformed)?;
                a.only(&["public_key", "signature"]).map_err(malformed)?;
                Some(Attestation {
                    public_key: a.bytes("public_key").map_err(malformed)?,
                    signature: a.bytes("signature").map_err(malformed)?,
                })
            }
        };
        let threshold = f.u64("threshold").map_err(malformed)?;
        let doc = PolicyDocument {
            schema_version,
            version: f.u64("version").map_err(malformed)?,
            threshold: usize::try_from(threshold).map_err(|_| malformed("threshold too large"))?,
            wallet_address,
            identifier_hash,
            global_salt: f.array::<32>("global_salt").map_err(malformed)?,
            kdf: kdf_from_value(f.get("kdf").map_err(malformed)?)?,
            factors,
            wrapped_inner_secrets,
            attestation,
        };
        doc.validate()?;
        Ok(doc)
    }
}

/// Minimum, over all t-subsets of factors, of the summed entropy estimates.
pub fn policy_entropy(doc: &PolicyDocument) -> Entropy {
    let e: Vec<Entropy> = doc.factors.iter().map(|f| f.entropy).collect();
    entropy::weakest_subset(&e, doc.threshold)
}
