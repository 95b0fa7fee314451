//! Memory-hard key stretching (Argon2id) and the hash-based subkey helpers.

use argon2::{Algorithm, Argon2, Params, Version};
use sha2::{Digest, Sha256};

pub const OUTPUT_LEN: usize = 32;

/// Lowest memory cost accepted for the production profile.
pub const MIN_PRODUCTION_MEMORY_KIB: u32 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdfProfile {
    Production,
    /// Reduced cost for tests and simulations. Must be requested explicitly.
    Test,
}

impl KdfProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            KdfProfile::Production => "production",
            KdfProfile::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "production" => Some(KdfProfile::Production),
            "test" => Some(KdfProfile::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum KdfError {
    #[error("memory cost {0} KiB is below the production minimum of 8192 KiB")]
    MemoryTooLow(u32),
    #[error("argon2 rejected the parameters: {0}")]
    Params(argon2::Error),
    #[error("output length must be 32 bytes")]
    OutputLen,
}

/// Argon2id cost parameters carried in every policy document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KdfConfig {
    pub profile: KdfProfile,
    pub memory_cost_kib: u32,
    pub time_cost: u32,
    pub parallelism: u32,
    pub output_len: u32,
}

impl KdfConfig {
    /// 19 MiB, two passes, one lane.
    pub const fn production() -> Self {
        KdfConfig {
            profile: KdfProfile::Production,
            memory_cost_kib: 19_456,
            time_cost: 2,
            parallelism: 1,
            output_len: OUTPUT_LEN as u32,
        }
    }

    pub const fn test() -> Self {
        KdfConfig {
            profile: KdfProfile::Test,
            memory_cost_kib: 64,
            time_cost: 1,
            parallelism: 1,
            output_len: OUTPUT_LEN as u32,
        }
    }

    pub fn for_profile(profile: KdfProfile) -> Self {
        match profile {
            KdfProfile::Production => Self::production(),
            KdfProfile::Test => Self::test(),
        }
    }

    pub fn validate(&self) -> Result<(), KdfError> {
        if self.output_len as usize != OUTPUT_LEN {
            return Err(KdfError::OutputLen);
        }
        if self.profile == KdfProfile::Production && self.memory_cost_kib < MIN_PRODUCTION_MEMORY_KIB {
            return Err(KdfError::MemoryTooLow(self.memory_cost_kib));
        }
        self.params().map(|_| ())
    }

    fn params(&self) -> Result<Params, KdfError> {
        Params::new(
            self.memory_cost_kib,
            self.time_cost,
            self.parallelism,
            Some(OUTPUT_LEN),
        )
        .map_err(KdfError::Params)
    }
}

fn argon2id(password: &[u8], salt: &[u8], cfg: &KdfConfig) -> Result<[u8; OUTPUT_LEN], KdfError> {
    cfg.validate()?;
    let argon = Argon2::new(Algorithm::Argon2id, Version::V0x13, cfg.params()?);
    let mut out = [0u8; OUTPUT_LEN];
    argon
        .hash_password_into(password, salt, &mut out)
        .map_err(KdfError::Params)?;
    Ok(out)
}

/// Final stretch of the reconstructed master secret into sigma.
pub fn stretch_final(
    secret: &[u8; 32],
    salt: &[u8; 32],
    cfg: &KdfConfig,
) -> Result<[u8; OUTPUT_LEN], KdfError> {
    argon2id(secret, salt, cfg)
}

/// Key that seals one factor's share, derived from its witness-target.
pub fn factor_key(
    target: &[u8],
    factor_salt: &[u8; 32],
    cfg: &KdfConfig,
) -> Result<[u8; OUTPUT_LEN], KdfError> {
    argon2id(target, factor_salt, cfg)
}

/// `SHA-256(label || data)`.
pub fn labeled_hash(label: &[u8], data: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(label);
    h.update(data);
    h.finalize().into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let cfg = KdfConfig::test();
        let a = stretch_final(&[1; 32], &[2; 32], &cfg).unwrap();
        let b = stretch_final(&[1; 32], &[2; 32], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn salt_bit_flip_changes_about_half_the_bits() {
        let cfg = KdfConfig::test();
        let base = stretch_final(&[1; 32], &[2; 32], &cfg).unwrap();
        for bit in [0usize, 77, 255] {
            let mut salt = [2u8; 32];
            salt[bit / 8] ^= 1 << (bit % 8);
            let other = stretch_final(&[1; 32], &salt, &cfg).unwrap();
            let diff: u32 = base
                .iter()
                .zip(other.iter())
                .map(|(a, b)| (a ^ b).count_ones())
                .sum();
            // 256 output bits; a binomial(256, 1/2) sits in [80, 176] with overwhelming probability
            assert!((80..=176).contains(&diff), "bit {bit}: {diff} bits differ");
        }
    }

    #[test]
    fn production_profile_rejects_low_memory() {
        let mut cfg = KdfConfig::production();
        cfg.memory_cost_kib = 1024;
        assert_eq!(cfg.validate(), Err(KdfError::MemoryTooLow(1024)));
        cfg.profile = KdfProfile::Test;
        assert!(cfg.validate().is_ok());
        assert!(KdfConfig::production().validate().is_ok());
    }

    #[test]
    fn wrong_output_len_rejected() {
        let mut cfg = KdfConfig::test();
        cfg.output_len = 64;
        assert_eq!(cfg.validate(), Err(KdfError::OutputLen));
    }

    #[test]
    fn labels_separate_domains() {
        assert_ne!(labeled_hash(b"a", b"b"), labeled_hash(b"c", b"b"));
    }
}
