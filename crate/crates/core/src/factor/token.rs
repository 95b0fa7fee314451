use rand_core::CryptoRng;
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::otp::hmac_sha1;

pub const TOKEN_SECRET_LEN: usize = 20;
pub const CHALLENGE_LEN: usize = 64;
pub const RESPONSE_LEN: usize = 20;

/// Software stand-in for a hardware token's HMAC-SHA1 challenge-response slot.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct SimulatedToken {
    secret: [u8; TOKEN_SECRET_LEN],
}

impl core::fmt::Debug for SimulatedToken {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("SimulatedToken(..)")
    }
}

impl SimulatedToken {
    pub fn new(secret: [u8; TOKEN_SECRET_LEN]) -> Self {
        SimulatedToken { secret }
    }

    pub fn generate<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut secret = [0u8; TOKEN_SECRET_LEN];
        rng.fill_bytes(&mut secret);
        SimulatedToken { secret }
    }

    pub fn secret(&self) -> &[u8; TOKEN_SECRET_LEN] {
        &self.secret
    }

    pub fn respond(&self, challenge: &[u8]) -> [u8; RESPONSE_LEN] {
        token_respond(self, challenge)
    }
}

pub fn token_respond(token: &SimulatedToken, challenge: &[u8]) -> [u8; RESPONSE_LEN] {
    hmac_sha1(&token.secret, challenge)
}
