//! HOTP (RFC 4226) and TOTP (RFC 6238) with HMAC-SHA1.

use alloc::string::String;

use hmac::{Hmac, Mac};
use sha1::Sha1;

pub type HmacSha1 = Hmac<Sha1>;

/// Highest digit count whose modulus fits the 31-bit truncated value.
pub const MAX_DIGITS: u8 = 9;

pub fn modulus(digits: u8) -> u32 {
    10u32.pow(digits as u32)
}

pub fn hmac_sha1(key: &[u8], message: &[u8]) -> [u8; 20] {
    let mut mac = HmacSha1::new_from_slice(key).expect("HMAC accepts keys of any length");
    mac.update(message);
    mac.finalize().into_bytes().into()
}

/// Numeric HOTP value for `counter`, already reduced mod 10^digits.
pub fn hotp_value(key: &[u8], counter: u64, digits: u8) -> u32 {
    let digest = hmac_sha1(key, &counter.to_be_bytes());
    let offset = (digest[19] & 0x0f) as usize;
    let binary = u32::from_be_bytes([
        digest[offset] & 0x7f,
        digest[offset + 1],
        digest[offset + 2],
        digest[offset + 3],
    ]);
    binary % modulus(digits)
}

pub fn format_code(value: u32, digits: u8) -> String {
    alloc::format!("{:0width$}", value, width = digits as usize)
}

pub fn hotp_code(key: &[u8], counter: u64, digits: u8) -> String {
    format_code(hotp_value(key, counter, digits), digits)
}

/// Time-step counter for `unix_time`.
pub fn totp_counter(unix_time: u64, step: u64) -> u64 {
    assert!(step > 0, "TOTP step must be positive");
    unix_time / step
}

pub fn totp_code(key: &[u8], unix_time: u64, step: u64, digits: u8) -> String {
    hotp_code(key, totp_counter(unix_time, step), digits)
}

/// Parses a decimal OTP of exactly `digits` digits.
pub fn parse_code(code: &[u8], digits: u8) -> Option<u32> {
    if code.len() != digits as usize || !code.iter().all(u8::is_ascii_digit) {
        return None;
    }
    Some(
        code.iter()
            .fold(0u32, |acc, d| acc * 10 + (d - b'0') as u32),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const RFC_KEY: &[u8] = b"12345678901234567890";

    #[test]
    fn rfc4226_appendix_d() {
        let expected = [
            "755224", "287082", "359152", "969429", "338314", "254676", "287922", "162583",
            "399871", "520489",
        ];
        for (counter, code) in expected.iter().enumerate() {
            assert_eq!(hotp_code(RFC_KEY, counter as u64, 6), *code);
        }
    }

    #[test]
    fn rfc6238_sha1_rows() {
        let rows = [
            (59u64, "94287082"),
            (1111111109, "07081804"),
            (1111111111, "14050471"),
            (1234567890, "89005924"),
            (2000000000, "69279037"),
            (20000000000, "65353130"),
        ];
        for (t, code) in rows {
            assert_eq!(totp_code(RFC_KEY, t, 30, 8), code, "time {t}");
        }
    }

    #[test]
    fn window_constancy() {
        let first = totp_code(RFC_KEY, 0, 30, 6);
        for t in 1..30 {
            assert_eq!(totp_code(RFC_KEY, t, 30, 6), first);
        }
    }

    #[test]
    fn parse_rejects_wrong_shape() {
        assert_eq!(parse_code(b"000123", 6), Some(123));
        assert_eq!(parse_code(b"12345", 6), None);
        assert_eq!(parse_code(b"12a456", 6), None);
    }
}
