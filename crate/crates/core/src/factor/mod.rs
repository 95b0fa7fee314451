//! Authentication factors. Each factor turns a user witness into a
//! witness-target: the exact bytes that key the AEAD around its share.
//!
//! Static factors (password, recovery code) use the witness itself as the
//! target. Dynamic factors keep an inner secret (OTP key, token key) that is
//! wrapped under the derived key and used after every successful derivation
//! to pick a fresh target and publish the public material that maps the next
//! witness onto it.

mod channel;
mod token;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_core::CryptoRng;
use zeroize::{Zeroize, ZeroizeOnDrop, Zeroizing};

use crate::entropy::{self, Entropy};
use crate::otp;

pub use channel::{normalize_address, ChannelError, MemoryInbox, OutOfBandChannel};
pub use token::{
    token_respond, SimulatedToken, CHALLENGE_LEN, RESPONSE_LEN, TOKEN_SECRET_LEN,
};

pub const DEFAULT_DIGITS: u8 = 6;
pub const DEFAULT_TOTP_STEP: u64 = 30;
/// About eleven days of 30 second steps.
pub const DEFAULT_TOTP_WINDOW: u32 = 32_768;
pub const MAX_TOTP_WINDOW: u32 = 262_144;
pub const OTP_KEY_LEN: usize = 20;
pub const MIN_OTP_KEY_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorType {
    Password,
    Hotp,
    Totp,
    Ooba,
    HmacToken,
    RecoveryCode,
}

impl FactorType {
    pub const ALL: [FactorType; 6] = [
        FactorType::Password,
        FactorType::Hotp,
        FactorType::Totp,
        FactorType::Ooba,
        FactorType::HmacToken,
        FactorType::RecoveryCode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FactorType::Password => "password",
            FactorType::Hotp => "hotp",
            FactorType::Totp => "totp",
            FactorType::Ooba => "ooba",
            FactorType::HmacToken => "hmac_token",
            FactorType::RecoveryCode => "recovery_code",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn is_dynamic(self) -> bool {
        matches!(
            self,
            FactorType::Hotp | FactorType::Totp | FactorType::Ooba | FactorType::HmacToken
        )
    }
}

impl core::fmt::Display for FactorType {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FactorError {
    #[error("invalid {factor} spec: {reason}")]
    InvalidSpec {
        factor: FactorType,
        reason: &'static str,
    },
    #[error("witness is not valid for a {0} factor")]
    InvalidWitness(FactorType),
    #[error("TOTP time step {counter} is outside the stored window [{start}, {end}); derive with another factor set to refresh it")]
    TotpWindowExceeded { counter: u64, start: u64, end: u64 },
    #[error("no out-of-band channel available")]
    ChannelUnavailable,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("missing or malformed inner secret")]
    InnerSecret,
}

/// What a user presents for one factor at login.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct FactorWitness {
    #[zeroize(skip)]
    pub factor_id: String,
    value: Vec<u8>,
}

impl core::fmt::Debug for FactorWitness {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FactorWitness")
            .field("factor_id", &self.factor_id)
            .finish_non_exhaustive()
    }
}

impl FactorWitness {
    pub fn new(factor_id: impl Into<String>, value: impl Into<Vec<u8>>) -> Self {
        FactorWitness {
            factor_id: factor_id.into(),
            value: value.into(),
        }
    }

    pub fn text(factor_id: impl Into<String>, value: &str) -> Self {
        Self::new(factor_id, value.as_bytes().to_vec())
    }

    pub fn value(&self) -> &[u8] {
        &self.value
    }
}

/// Secret-bearing configuration for a factor at setup time.
#[derive(Clone, PartialEq, Eq)]
pub enum FactorSpecKind {
    Password {
        password: Zeroizing<String>,
        /// Overrides the 40-bit default estimate.
        entropy: Option<Entropy>,
    },
    RecoveryCode {
        code: Zeroizing<String>,
    },
    Hotp {
        key: Option<Zeroizing<Vec<u8>>>,
        digits: u8,
    },
    Totp {
        key: Option<Zeroizing<Vec<u8>>>,
        digits: u8,
        step_seconds: u64,
        window: u32,
    },
    Ooba {
        address: String,
        digits: u8,
    },
    HmacToken {
        secret: Option<Zeroizing<[u8; TOKEN_SECRET_LEN]>>,
    },
}

#[derive(Clone, PartialEq, Eq)]
pub struct FactorSetupSpec {
    pub id: String,
    pub kind: FactorSpecKind,
}

impl core::fmt::Debug for FactorSetupSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FactorSetupSpec")
            .field("id", &self.id)
            .field("type", &self.factor_type())
            .finish_non_exhaustive()
    }
}

impl FactorSetupSpec {
    pub fn password(id: impl Into<String>, password: &str) -> Self {
        FactorSetupSpec {
            id: id.into(),
            kind: FactorSpecKind::Password {
                password: Zeroizing::new(password.to_string()),
                entropy: None,
            },
        }
    }

    pub fn recovery_code(id: impl Into<String>, code: &str) -> Self {
        FactorSetupSpec {
            id: id.into(),
            kind: FactorSpecKind::RecoveryCode {
                code: Zeroizing::new(code.to_string()),
            },
        }
    }

    pub fn hotp(id: impl Into<String>, key: Option<Vec<u8>>) -> Self {
        FactorSetupSpec {
            id: id.into(),
            kind: FactorSpecKind::Hotp {
                key: key.map(Zeroizing::new),
                digits: DEFAULT_DIGITS,
            },
        }
    }

    pub fn totp(id: impl Into<String>, key: Option<Vec<u8>>) -> Self {
        Self::totp_with_window(id, key, DEFAULT_TOTP_WINDOW)
    }

    pub fn totp_with_window(id: impl Into<String>, key: Option<Vec<u8>>, window: u32) -> Self {
        FactorSetupSpec {
            id: id.into(),
            kind: FactorSpecKind::Totp {
                key: key.map(Zeroizing::new),
                digits: DEFAULT_DIGITS,
                step_seconds: DEFAULT_TOTP_STEP,
                window,
            },
        }
    }

    pub fn ooba(id: impl Into<String>, address: &str) -> Self {
        FactorSetupSpec {
            id: id.into(),
            kind: FactorSpecKind::Ooba {
                address: address.to_string(),
                digits: DEFAULT_DIGITS,
            },
        }
    }

    pub fn hmac_token(id: impl Into<String>, secret: Option<[u8; TOKEN_SECRET_LEN]>) -> Self {
        FactorSetupSpec {
            id: id.into(),
            kind: FactorSpecKind::HmacToken {
                secret: secret.map(Zeroizing::new),
            },
        }
    }

    pub fn factor_type(&self) -> FactorType {
        match self.kind {
            FactorSpecKind::Password { .. } => FactorType::Password,
            FactorSpecKind::RecoveryCode { .. } => FactorType::RecoveryCode,
            FactorSpecKind::Hotp { .. } => FactorType::Hotp,
            FactorSpecKind::Totp { .. } => FactorType::Totp,
            FactorSpecKind::Ooba { .. } => FactorType::Ooba,
            FactorSpecKind::HmacToken { .. } => FactorType::HmacToken,
        }
    }
}

/// Public, per-type parameters stored in the policy document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorParams {
    Password,
    RecoveryCode,
    Hotp(HotpParams),
    Totp(TotpParams),
    Ooba(OobaParams),
    HmacToken(HmacTokenParams),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HotpParams {
    pub counter: u64,
    pub digits: u8,
    /// `(target - HOTP(K, counter)) mod 10^digits`
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotpParams {
    pub start_counter: u64,
    pub step_seconds: u64,
    pub digits: u8,
    /// `window_offsets[i] = (target - HOTP(K, start_counter + i)) mod 10^digits`
    pub window_offsets: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OobaParams {
    pub channel_address: String,
    pub digits: u8,
    pub code_epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HmacTokenParams {
    pub challenge: [u8; CHALLENGE_LEN],
}

impl FactorParams {
    pub fn factor_type(&self) -> FactorType {
        match self {
            FactorParams::Password => FactorType::Password,
            FactorParams::RecoveryCode => FactorType::RecoveryCode,
            FactorParams::Hotp(_) => FactorType::Hotp,
            FactorParams::Totp(_) => FactorType::Totp,
            FactorParams::Ooba(_) => FactorType::Ooba,
            FactorParams::HmacToken(_) => FactorType::HmacToken,
        }
    }
}

/// Environment a factor operation may need: wall-clock time for TOTP and the
/// side channel for OOBA.
pub struct FactorContext<'a> {
    pub unix_time: u64,
    pub channel: Option<&'a mut dyn OutOfBandChannel>,
}

impl<'a> FactorContext<'a> {
    pub fn at(unix_time: u64) -> Self {
        FactorContext {
            unix_time,
            channel: None,
        }
    }

    pub fn with_channel(unix_time: u64, channel: &'a mut dyn OutOfBandChannel) -> Self {
        FactorContext {
            unix_time,
            channel: Some(channel),
        }
    }
}

/// Result of setting a factor up: its public part, the witness-target that
/// keys its share, and (dynamic factors only) the inner secret to wrap.
pub struct FactorMaterial {
    pub params: FactorParams,
    pub target: Zeroizing<Vec<u8>>,
    pub inner_secret: Option<Zeroizing<Vec<u8>>>,
    pub entropy: Entropy,
}

/// Fresh UUIDv4 string, the default recovery code format.
pub fn generate_recovery_code<R: CryptoRng + ?Sized>(rng: &mut R) -> String {
    let mut bytes = [0u8; 16];
    rng.fill_bytes(&mut bytes);
    let id = uuid::Builder::from_random_bytes(bytes).into_uuid();
    let mut buf = [0u8; uuid::fmt::Hyphenated::LENGTH];
    id.hyphenated().encode_lower(&mut buf).to_string()
}

pub fn is_valid_email(address: &str) -> bool {
    let address = address.trim();
    let Some((local, domain)) = address.split_once('@') else {
        return false;
    };
    !local.is_empty()
        && !domain.contains('@')
        && domain.contains('.')
        && !domain.starts_with('.')
        && !domain.ends_with('.')
        && !address.chars().any(char::is_whitespace)
}

fn uniform_below<R: CryptoRng + ?Sized>(rng: &mut R, bound: u32) -> u32 {
    let zone = u32::MAX - (u32::MAX % bound);
    loop {
        let v = rng.next_u32();
        if v < zone {
            return v % bound;
        }
    }
}

fn random_code<R: CryptoRng + ?Sized>(rng: &mut R, digits: u8) -> Zeroizing<Vec<u8>> {
    let value = uniform_below(rng, otp::modulus(digits));
    Zeroizing::new(otp::format_code(value, digits).into_bytes())
}

fn check_digits(factor: FactorType, digits: u8) -> Result<(), FactorError> {
    if (6..=8).contains(&digits) {
        Ok(())
    } else {
        Err(FactorError::InvalidSpec {
            factor,
            reason: "digits must be between 6 and 8",
        })
    }
}

fn otp_key<R: CryptoRng + ?Sized>(
    factor: FactorType,
    key: &Option<Zeroizing<Vec<u8>>>,
    rng: &mut R,
) -> Result<Zeroizing<Vec<u8>>, FactorError> {
    match key {
        Some(k) if k.len() < MIN_OTP_KEY_LEN => Err(FactorError::InvalidSpec {
            factor,
            reason: "OTP key must be at least 16 bytes",
        }),
        Some(k) => Ok(k.clone()),
        None => {
            let mut k = Zeroizing::new(alloc::vec![0u8; OTP_KEY_LEN]);
            rng.fill_bytes(&mut k);
            Ok(k)
        }
    }
}

fn sub_mod(a: u32, b: u32, m: u32) -> u32 {
    (a % m + m - b % m) % m
}

fn totp_offsets(key: &[u8], start: u64, window: u32, digits: u8, target: u32) -> Vec<u32> {
    let m = otp::modulus(digits);
    (0..window as u64)
        .map(|i| sub_mod(target, otp::hotp_value(key, start + i, digits), m))
        .collect()
}

fn target_value(target: &[u8], digits: u8) -> u32 {
    otp::parse_code(target, digits).expect("OTP targets are generated as fixed-width decimals")
}

fn send_code(ctx: &mut FactorContext<'_>, address: &str, code: &[u8]) -> Result<(), FactorError> {
    let channel = ctx
        .channel
        .as_deref_mut()
        .ok_or(FactorError::ChannelUnavailable)?;
    let code = core::str::from_utf8(code).expect("codes are ASCII digits");
    channel.send(address, code)?;
    Ok(())
}

/// Creates the initial public parameters and witness-target for a factor.
pub fn factor_setup<R: CryptoRng + ?Sized>(
    spec: &FactorSetupSpec,
    rng: &mut R,
    ctx: &mut FactorContext<'_>,
) -> Result<FactorMaterial, FactorError> {
    let ty = spec.factor_type();
    match &spec.kind {
        FactorSpecKind::Password { password, entropy } => {
            if password.is_empty() {
                return Err(FactorError::InvalidSpec {
                    factor: ty,
                    reason: "password must not be empty",
                });
            }
            Ok(FactorMaterial {
                params: FactorParams::Password,
                target: Zeroizing::new(password.as_bytes().to_vec()),
                inner_secret: None,
                entropy: entropy.unwrap_or(entropy::PASSWORD_DEFAULT),
            })
        }
        FactorSpecKind::RecoveryCode { code } => {
            if code.trim().is_empty() {
                return Err(FactorError::InvalidSpec {
                    factor: ty,
                    reason: "recovery code must not be empty",
                });
            }
            Ok(FactorMaterial {
                params: FactorParams::RecoveryCode,
                target: Zeroizing::new(code.as_bytes().to_vec()),
                inner_secret: None,
                entropy: entropy::RECOVERY_CODE,
            })
        }
        FactorSpecKind::Hotp { key, digits } => {
            check_digits(ty, *digits)?;
            let key = otp_key(ty, key, rng)?;
            let target = random_code(rng, *digits);
            let otp_now = otp::hotp_value(&key, 0, *digits);
            let offset = sub_mod(target_value(&target, *digits), otp_now, otp::modulus(*digits));
            Ok(FactorMaterial {
                params: FactorParams::Hotp(HotpParams {
                    counter: 0,
                    digits: *digits,
                    offset,
                }),
                target,
                inner_secret: Some(key),
                entropy: Entropy::decimal_digits(*digits),
            })
        }
        FactorSpecKind::Totp {
            key,
            digits,
            step_seconds,
            window,
        } => {
            check_digits(ty, *digits)?;
            if *step_seconds == 0 {
                return Err(FactorError::InvalidSpec {
                    factor: ty,
                    reason: "step must be positive",
                });
            }
            if *window == 0 || *window > MAX_TOTP_WINDOW {
                return Err(FactorError::InvalidSpec {
                    factor: ty,
                    reason: "window must be between 1 and 262144 steps",
                });
            }
            let key = otp_key(ty, key, rng)?;
            let target = random_code(rng, *digits);
            let start = otp::totp_counter(ctx.unix_time, *step_seconds);
            let offsets = totp_offsets(&key, start, *window, *digits, target_value(&target, *digits));
            Ok(FactorMaterial {
                params: FactorParams::Totp(TotpParams {
                    start_counter: start,
                    step_seconds: *step_seconds,
                    digits: *digits,
                    window_offsets: offsets,
                }),
                target,
                inner_secret: Some(key),
                entropy: Entropy::decimal_digits(*digits),
            })
        }
        FactorSpecKind::Ooba { address, digits } => {
            check_digits(ty, *digits)?;
            if !is_valid_email(address) {
                return Err(FactorError::InvalidSpec {
                    factor: ty,
                    reason: "channel address is not a valid email",
                });
            }
            let address = normalize_address(address);
            let code = random_code(rng, *digits);
            send_code(ctx, &address, &code)?;
            Ok(FactorMaterial {
                params: FactorParams::Ooba(OobaParams {
                    channel_address: address,
                    digits: *digits,
                    code_epoch: 0,
                }),
                target: code,
                inner_secret: None,
                entropy: Entropy::decimal_digits(*digits),
            })
        }
        FactorSpecKind::HmacToken { secret } => {
            let token = match secret {
                Some(s) => SimulatedToken::new(**s),
                None => SimulatedToken::generate(rng),
            };
            let mut challenge = [0u8; CHALLENGE_LEN];
            rng.fill_bytes(&mut challenge);
            let response = token.respond(&challenge);
            Ok(FactorMaterial {
                params: FactorParams::HmacToken(HmacTokenParams { challenge }),
                target: Zeroizing::new(response.to_vec()),
                inner_secret: Some(Zeroizing::new(token.secret().to_vec())),
                entropy: entropy::HMAC_TOKEN,
            })
        }
    }
}

/// Maps a witness onto the witness-target. Whether the target is right is
/// only known once it opens the share envelope.
pub fn factor_derive(
    params: &FactorParams,
    witness: &[u8],
    ctx: &FactorContext<'_>,
) -> Result<Zeroizing<Vec<u8>>, FactorError> {
    match params {
        FactorParams::Password | FactorParams::RecoveryCode => {
            Ok(Zeroizing::new(witness.to_vec()))
        }
        FactorParams::Ooba(p) => {
            otp::parse_code(witness, p.digits).ok_or(FactorError::InvalidWitness(FactorType::Ooba))?;
            Ok(Zeroizing::new(witness.to_vec()))
        }
        FactorParams::Hotp(p) => {
            let code =
                otp::parse_code(witness, p.digits).ok_or(FactorError::InvalidWitness(FactorType::Hotp))?;
            let m = otp::modulus(p.digits);
            let target = (code + p.offset % m) % m;
            Ok(Zeroizing::new(otp::format_code(target, p.digits).into_bytes()))
        }
        FactorParams::Totp(p) => {
            let code =
                otp::parse_code(witness, p.digits).ok_or(FactorError::InvalidWitness(FactorType::Totp))?;
            let counter = otp::totp_counter(ctx.unix_time, p.step_seconds);
            let end = p.start_counter + p.window_offsets.len() as u64;
            if counter < p.start_counter || counter >= end {
                return Err(FactorError::TotpWindowExceeded {
                    counter,
                    start: p.start_counter,
                    end,
                });
            }
            let offset = p.window_offsets[(counter - p.start_counter) as usize];
            let m = otp::modulus(p.digits);
            let target = (code + offset % m) % m;
            Ok(Zeroizing::new(otp::format_code(target, p.digits).into_bytes()))
        }
        FactorParams::HmacToken(_) => {
            if witness.len() != RESPONSE_LEN {
                return Err(FactorError::InvalidWitness(FactorType::HmacToken));
            }
            Ok(Zeroizing::new(witness.to_vec()))
        }
    }
}

/// Post-derive update of a factor's public part.
///
/// Returns `None` when the factor keeps its parameters and target. Otherwise
/// the new parameters come with a new target, under which the caller must
/// re-seal the factor's share. HOTP only advances when it took part in the
/// derivation (`used`), so an unpressed authenticator stays in sync.
pub fn factor_update<R: CryptoRng + ?Sized>(
    params: &FactorParams,
    inner_secret: Option<&[u8]>,
    used: bool,
    rng: &mut R,
    ctx: &mut FactorContext<'_>,
) -> Result<Option<(FactorParams, Zeroizing<Vec<u8>>)>, FactorError> {
    match params {
        FactorParams::Password | FactorParams::RecoveryCode => Ok(None),
        FactorParams::Hotp(p) => {
            if !used {
                return Ok(None);
            }
            let key = inner_secret.ok_or(FactorError::InnerSecret)?;
            let counter = p.counter + 1;
            let target = random_code(rng, p.digits);
            let offset = sub_mod(
                target_value(&target, p.digits),
                otp::hotp_value(key, counter, p.digits),
                otp::modulus(p.digits),
            );
            Ok(Some((
                FactorParams::Hotp(HotpParams {
                    counter,
                    digits: p.digits,
                    offset,
                }),
                target,
            )))
        }
        FactorParams::Totp(p) => {
            let key = inner_secret.ok_or(FactorError::InnerSecret)?;
            let start = otp::totp_counter(ctx.unix_time, p.step_seconds);
            let target = random_code(rng, p.digits);
            let offsets = totp_offsets(
                key,
                start,
                p.window_offsets.len() as u32,
                p.digits,
                target_value(&target, p.digits),
            );
            Ok(Some((
                FactorParams::Totp(TotpParams {
                    start_counter: start,
                    step_seconds: p.step_seconds,
                    digits: p.digits,
                    window_offsets: offsets,
                }),
                target,
            )))
        }
        FactorParams::Ooba(p) => {
            let code = random_code(rng, p.digits);
            send_code(ctx, &p.channel_address, &code)?;
            Ok(Some((
                FactorParams::Ooba(OobaParams {
                    channel_address: p.channel_address.clone(),
                    digits: p.digits,
                    code_epoch: p.code_epoch + 1,
                }),
                code,
            )))
        }
        FactorParams::HmacToken(_) => {
            let secret: [u8; TOKEN_SECRET_LEN] = inner_secret
                .and_then(|s| s.try_into().ok())
                .ok_or(FactorError::InnerSecret)?;
            let token = SimulatedToken::new(secret);
            let mut challenge = [0u8; CHALLENGE_LEN];
            rng.fill_bytes(&mut challenge);
            let response = token.respond(&challenge);
            Ok(Some((
                FactorParams::HmacToken(HmacTokenParams { challenge }),
                Zeroizing::new(response.to_vec()),
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::{RngCore, SeedableRng};

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(42)
    }

    const T0: u64 = 1_700_000_000;

    #[test]
    fn password_target_is_witness() {
        let mut ctx = FactorContext::at(T0);
        let m = factor_setup(&FactorSetupSpec::password("pw", "hunter2"), &mut rng(), &mut ctx).unwrap();
        assert_eq!(&m.target[..], b"hunter2");
        assert_eq!(m.entropy, Entropy::from_bits(40));
        assert!(m.inner_secret.is_none());
        let t = factor_derive(&m.params, b"hunter2", &ctx).unwrap();
        assert_eq!(t, m.target);
    }

    #[test]
    fn empty_password_rejected() {
        let err = factor_setup(&FactorSetupSpec::password("pw", ""), &mut rng(), &mut FactorContext::at(0));
        assert!(matches!(err, Err(FactorError::InvalidSpec { .. })));
    }

    #[test]
    fn recovery_code_is_uuid_v4_with_122_bits() {
        let code = generate_recovery_code(&mut rng());
        let parsed = uuid::Uuid::parse_str(&code).unwrap();
        assert_eq!(parsed.get_version_num(), 4);
        let m = factor_setup(&FactorSetupSpec::recovery_code("rc", &code), &mut rng(), &mut FactorContext::at(0)).unwrap();
        assert_eq!(m.entropy, Entropy::from_bits(122));
    }

    #[test]
    fn hotp_zero_witness_yields_offset() {
        let params = FactorParams::Hotp(HotpParams {
            counter: 0,
            digits: 6,
            offset: 123_456,
        });
        let t = factor_derive(&params, b"000000", &FactorContext::at(0)).unwrap();
        assert_eq!(&t[..], b"123456");
    }

    #[test]
    fn hotp_chain_counter_5_to_6() {
        let key = b"12345678901234567890".to_vec();
        let mut r = rng();
        let mut ctx = FactorContext::at(T0);
        let m = factor_setup(&FactorSetupSpec::hotp("h", Some(key.clone())), &mut r, &mut ctx).unwrap();
        let mut params = m.params;
        let mut target = m.target;
        // walk the counter up to 5 with correct codes
        for counter in 0..=6u64 {
            let FactorParams::Hotp(p) = &params else { unreachable!() };
            assert_eq!(p.counter, counter);
            let code = otp::hotp_code(&key, counter, 6);
            assert_eq!(factor_derive(&params, code.as_bytes(), &ctx).unwrap(), target);
            let (next, next_target) = factor_update(&params, Some(&key), true, &mut r, &mut ctx)
                .unwrap()
                .unwrap();
            params = next;
            target = next_target;
        }
    }

    #[test]
    fn hotp_unused_is_unchanged() {
        let params = FactorParams::Hotp(HotpParams { counter: 5, digits: 6, offset: 1 });
        let out = factor_update(&params, Some(&[0u8; 20]), false, &mut rng(), &mut FactorContext::at(0)).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn totp_window_coverage() {
        let key = b"12345678901234567890".to_vec();
        let spec = FactorSetupSpec::totp_with_window("t", Some(key.clone()), 64);
        let mut ctx = FactorContext::at(T0);
        let m = factor_setup(&spec, &mut rng(), &mut ctx).unwrap();
        let start = T0 / 30 * 30;
        for time in [start, start + 29, start + 30 * 63, start + 30 * 64 - 1] {
            let code = otp::totp_code(&key, time, 30, 6);
            let t = factor_derive(&m.params, code.as_bytes(), &FactorContext::at(time)).unwrap();
            assert_eq!(t, m.target, "time {time}");
        }
        for time in [start - 1, start + 30 * 64] {
            let code = otp::totp_code(&key, time, 30, 6);
            assert!(matches!(
                factor_derive(&m.params, code.as_bytes(), &FactorContext::at(time)),
                Err(FactorError::TotpWindowExceeded { .. })
            ));
        }
    }

    #[test]
    fn totp_update_rebases_window() {
        let key = b"12345678901234567890".to_vec();
        let spec = FactorSetupSpec::totp_with_window("t", Some(key.clone()), 8);
        let m = factor_setup(&spec, &mut rng(), &mut FactorContext::at(T0)).unwrap();
        let later = T0 + 3600;
        let (params, target) = factor_update(&m.params, Some(&key), false, &mut rng(), &mut FactorContext::at(later))
            .unwrap()
            .unwrap();
        let code = otp::totp_code(&key, later, 30, 6);
        assert_eq!(factor_derive(&params, code.as_bytes(), &FactorContext::at(later)).unwrap(), target);
    }

    #[test]
    fn totp_size_scales_with_window() {
        let spec = FactorSetupSpec::totp("t", None);
        let m = factor_setup(&spec, &mut rng(), &mut FactorContext::at(T0)).unwrap();
        let FactorParams::Totp(p) = m.params else { unreachable!() };
        assert_eq!(p.window_offsets.len(), 32_768);
    }

    #[test]
    fn ooba_refresh_sends_new_code() {
        let mut inbox = MemoryInbox::new();
        let mut r = rng();
        let spec = FactorSetupSpec::ooba("mail", "Alice@Example.com");
        let m = {
            let mut ctx = FactorContext::with_channel(T0, &mut inbox);
            factor_setup(&spec, &mut r, &mut ctx).unwrap()
        };
        let first = inbox.latest("alice@example.com").unwrap();
        assert_eq!(first.as_bytes(), &m.target[..]);
        let (params, target) = {
            let mut ctx = FactorContext::with_channel(T0, &mut inbox);
            factor_update(&m.params, None, true, &mut r, &mut ctx).unwrap().unwrap()
        };
        let second = inbox.latest("alice@example.com").unwrap();
        assert_eq!(second.as_bytes(), &target[..]);
        let FactorParams::Ooba(p) = params else { unreachable!() };
        assert_eq!(p.code_epoch, 1);
    }

    #[test]
    fn ooba_without_channel_fails() {
        let spec = FactorSetupSpec::ooba("mail", "a@example.com");
        assert!(matches!(
            factor_setup(&spec, &mut rng(), &mut FactorContext::at(0)),
            Err(FactorError::ChannelUnavailable)
        ));
        let bad = FactorSetupSpec::ooba("mail", "not-an-email");
        assert!(matches!(
            factor_setup(&bad, &mut rng(), &mut FactorContext::at(0)),
            Err(FactorError::InvalidSpec { .. })
        ));
    }

    #[test]
    fn hmac_token_target_is_response() {
        let token = SimulatedToken::new([9; 20]);
        let spec = FactorSetupSpec::hmac_token("yk", Some(*token.secret()));
        let m = factor_setup(&spec, &mut rng(), &mut FactorContext::at(0)).unwrap();
        let FactorParams::HmacToken(p) = &m.params else { unreachable!() };
        let response = token.respond(&p.challenge);
        assert_eq!(factor_derive(&m.params, &response, &FactorContext::at(0)).unwrap(), m.target);
        let mut later = ChaCha20Rng::seed_from_u64(43);
        let (next, next_target) = factor_update(&m.params, Some(token.secret()), true, &mut later, &mut FactorContext::at(0))
            .unwrap()
            .unwrap();
        let FactorParams::HmacToken(q) = &next else { unreachable!() };
        assert_ne!(q.challenge, p.challenge);
        assert_eq!(&next_target[..], &token.respond(&q.challenge)[..]);
        assert!(factor_derive(&m.params, &response[..19], &FactorContext::at(0)).is_err());
    }

    #[test]
    fn static_factors_unchanged_by_update() {
        for params in [FactorParams::Password, FactorParams::RecoveryCode] {
            assert!(factor_update(&params, None, true, &mut rng(), &mut FactorContext::at(0))
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn offset_algebra_exhaustive_two_digits() {
        let m = 100u32;
        for otp in 0..m {
            for target in 0..m {
                assert_eq!((otp + sub_mod(target, otp, m)) % m, target);
            }
        }
    }

    #[test]
    fn offset_algebra_random_six_digits() {
        let m = 1_000_000u32;
        let mut r = rng();
        for _ in 0..10_000 {
            let otp = r.next_u32() % m;
            let target = r.next_u32() % m;
            assert_eq!((otp + sub_mod(target, otp, m)) % m, target);
        }
    }

    #[test]
    fn email_syntax() {
        assert!(is_valid_email("alice@example.com"));
        assert!(!is_valid_email("alice@example"));
        assert!(!is_valid_email("@example.com"));
        assert!(!is_valid_email("a b@example.com"));
        assert!(!is_valid_email("a@@example.com"));
    }
}
