//! Shamir secret sharing over GF(256), one polynomial per secret byte.

use alloc::vec::Vec;

use rand_core::CryptoRng;
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::gf256;

pub const SECRET_LEN: usize = 32;
/// Encoded share: one index byte followed by the 32 evaluation bytes.
pub const SHARE_LEN: usize = SECRET_LEN + 1;
pub const MAX_SHARES: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ShamirError {
    #[error("threshold {t} is invalid for {n} shares")]
    InvalidThreshold { t: usize, n: usize },
    #[error("at most 255 shares are supported, got {0}")]
    TooManyShares(usize),
    #[error("need {needed} shares, got {got}")]
    NotEnoughShares { needed: usize, got: usize },
    #[error("duplicate share index {0}")]
    DuplicateIndex(u8),
    #[error("share index 0 is reserved for the secret")]
    ZeroIndex,
    #[error("shares have inconsistent lengths")]
    LengthMismatch,
    #[error("encoded share must be 33 bytes")]
    BadEncoding,
}

/// One point on each of the 32 byte-polynomials.
#[derive(Clone, PartialEq, Eq, Zeroize, ZeroizeOnDrop)]
pub struct Share {
    pub x: u8,
    pub y: [u8; SECRET_LEN],
}

impl core::fmt::Debug for Share {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Share").field("x", &self.x).finish_non_exhaustive()
    }
}

impl Share {
    pub fn to_bytes(&self) -> [u8; SHARE_LEN] {
        let mut out = [0u8; SHARE_LEN];
        out[0] = self.x;
        out[1..].copy_from_slice(&self.y);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ShamirError> {
        if bytes.len() != SHARE_LEN {
            return Err(ShamirError::BadEncoding);
        }
        if bytes[0] == 0 {
            return Err(ShamirError::ZeroIndex);
        }
        let mut y = [0u8; SECRET_LEN];
        y.copy_from_slice(&bytes[1..]);
        Ok(Share { x: bytes[0], y })
    }
}

fn check_params(t: usize, n: usize) -> Result<(), ShamirError> {
    if n > MAX_SHARES {
        return Err(ShamirError::TooManyShares(n));
    }
    if t == 0 || t > n {
        return Err(ShamirError::InvalidThreshold { t, n });
    }
    Ok(())
}

/// Splits an arbitrary-length secret into `n` points `(x, bytes)` with
/// x = 1..=n, any `t` of which recover it.
pub fn split_bytes<R: CryptoRng + ?Sized>(
    secret: &[u8],
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<(u8, Vec<u8>)>, ShamirError> {
    check_params(t, n)?;
    let mut points: Vec<(u8, Vec<u8>)> = (1..=n as u8)
        .map(|x| (x, Vec::with_capacity(secret.len())))
        .collect();
    let mut coeffs = alloc::vec![0u8; t];
    for &byte in secret {
        coeffs[0] = byte;
        rng.fill_bytes(&mut coeffs[1..]);
        for (x, ys) in points.iter_mut() {
            ys.push(gf256::eval_poly(&coeffs, *x));
        }
    }
    coeffs.zeroize();
    Ok(points)
}

fn check_points(xs: &[u8]) -> Result<(), ShamirError> {
    for (i, &x) in xs.iter().enumerate() {
        if x == 0 {
            return Err(ShamirError::ZeroIndex);
        }
        if xs[..i].contains(&x) {
            return Err(ShamirError::DuplicateIndex(x));
        }
    }
    Ok(())
}

/// Lagrange basis weights for evaluating at `at` from the points `xs`.
fn lagrange_weights(xs: &[u8], at: u8) -> Vec<u8> {
    xs.iter()
        .enumerate()
        .map(|(i, &xi)| {
            xs.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(1u8, |acc, (_, &xj)| {
                    gf256::mul(acc, gf256::div(at ^ xj, xi ^ xj))
                })
        })
        .collect()
}

/// Interpolates the polynomial through the first `t` points and evaluates it
/// at `at` (0 recovers the secret).
pub fn interpolate_bytes(
    points: &[(u8, &[u8])],
    t: usize,
    at: u8,
) -> Result<Vec<u8>, ShamirError> {
    if t == 0 {
        return Err(ShamirError::InvalidThreshold { t, n: points.len() });
    }
    if points.len() < t {
        return Err(ShamirError::NotEnoughShares {
            needed: t,
            got: points.len(),
        });
    }
    let xs: Vec<u8> = points.iter().map(|(x, _)| *x).collect();
    check_points(&xs)?;
    let len = points[0].1.len();
    if points.iter().any(|(_, ys)| ys.len() != len) {
        return Err(ShamirError::LengthMismatch);
    }
    let used = &points[..t];
    let weights = lagrange_weights(&xs[..t], at);
    let mut out = alloc::vec![0u8; len];
    for ((_, ys), &w) in used.iter().zip(&weights) {
        for (acc, &y) in out.iter_mut().zip(ys.iter()) {
            *acc ^= gf256::mul(w, y);
        }
    }
    Ok(out)
}

/// Splits a 32-byte secret into `n` shares with threshold `t`.
pub fn split_secret<R: CryptoRng + ?Sized>(
    secret: &[u8; SECRET_LEN],
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Share>, ShamirError> {
    let points = split_bytes(secret, t, n, rng)?;
    Ok(points
        .into_iter()
        .map(|(x, mut ys)| {
            let mut y = [0u8; SECRET_LEN];
            y.copy_from_slice(&ys);
            ys.zeroize();
            Share { x, y }
        })
        .collect())
}

/// Recovers the secret from at least `t` shares with distinct indices.
pub fn combine_shares(shares: &[Share], t: usize) -> Result<[u8; SECRET_LEN], ShamirError> {
    evaluate_at(shares, t, 0)
}

/// Evaluates the sharing polynomial at `x`, e.g. to re-issue the share for a
/// given index once `t` shares are known.
pub fn evaluate_at(shares: &[Share], t: usize, x: u8) -> Result<[u8; SECRET_LEN], ShamirError> {
    let points: Vec<(u8, &[u8])> = shares.iter().map(|s| (s.x, &s.y[..])).collect();
    let mut ys = interpolate_bytes(&points, t, x)?;
    let mut out = [0u8; SECRET_LEN];
    out.copy_from_slice(&ys);
    ys.zeroize();
    Ok(out)
}

/// Re-derives the share for index `x` from `t` known shares.
pub fn reissue_share(shares: &[Share], t: usize, x: u8) -> Result<Share, ShamirError> {
    if x == 0 {
        return Err(ShamirError::ZeroIndex);
    }
    Ok(Share {
        x,
        y: evaluate_at(shares, t, x)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(0x5eed)
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
            .collect()
    }

    #[test]
    fn single_share_is_the_secret() {
        let secret = [7u8; 32];
        let shares = split_secret(&secret, 1, 1, &mut rng()).unwrap();
        assert_eq!(shares.len(), 1);
        assert_eq!(shares[0].y, secret);
        assert_eq!(combine_shares(&shares, 1).unwrap(), secret);
    }

    #[test]
    fn every_pair_of_three_reconstructs() {
        let mut secret = [0u8; 32];
        for (i, b) in secret.iter_mut().enumerate() {
            *b = i as u8 * 3 + 1;
        }
        let shares = split_secret(&secret, 2, 3, &mut rng()).unwrap();
        for subset in subsets(3, 2) {
            let picked: Vec<Share> = subset.iter().map(|&i| shares[i].clone()).collect();
            assert_eq!(combine_shares(&picked, 2).unwrap(), secret);
        }
    }

    #[test]
    fn duplicate_index_rejected() {
        let shares = split_secret(&[1u8; 32], 2, 3, &mut rng()).unwrap();
        let dup = vec![shares[0].clone(), shares[0].clone()];
        assert_eq!(
            combine_shares(&dup, 2),
            Err(ShamirError::DuplicateIndex(shares[0].x))
        );
    }

    #[test]
    fn too_few_shares_rejected() {
        let shares = split_secret(&[1u8; 32], 3, 4, &mut rng()).unwrap();
        assert_eq!(
            combine_shares(&shares[..2], 3),
            Err(ShamirError::NotEnoughShares { needed: 3, got: 2 })
        );
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            split_secret(&[0; 32], 3, 2, &mut rng()),
            Err(ShamirError::InvalidThreshold { .. })
        ));
        assert!(matches!(
            split_secret(&[0; 32], 2, 256, &mut rng()),
            Err(ShamirError::TooManyShares(256))
        ));
        assert!(matches!(
            split_secret(&[0; 32], 0, 2, &mut rng()),
            Err(ShamirError::InvalidThreshold { .. })
        ));
    }

    #[test]
    fn reissued_share_matches_original() {
        let shares = split_secret(&[9u8; 32], 3, 5, &mut rng()).unwrap();
        let again = reissue_share(&shares[1..4], 3, 5).unwrap();
        assert_eq!(again, shares[4]);
    }

    #[test]
    fn share_encoding_round_trip() {
        let shares = split_secret(&[3u8; 32], 2, 2, &mut rng()).unwrap();
        let bytes = shares[1].to_bytes();
        assert_eq!(Share::from_bytes(&bytes).unwrap(), shares[1]);
        assert_eq!(Share::from_bytes(&bytes[1..]), Err(ShamirError::BadEncoding));
    }

    proptest::proptest! {
        #[test]
        fn any_t_subset_recovers(seed: u64, t in 1usize..6, extra in 0usize..4, secret: [u8; 32]) {
            let n = t + extra;
            let mut r = ChaCha20Rng::seed_from_u64(seed);
            let shares = split_secret(&secret, t, n, &mut r).unwrap();
            // take a rotated window so different subsets get exercised
            let start = (seed as usize) % n;
            let picked: Vec<Share> = (0..t).map(|i| shares[(start + i) % n].clone()).collect();
            proptest::prop_assert_eq!(combine_shares(&picked, t).unwrap(), secret);
        }
    }
}
