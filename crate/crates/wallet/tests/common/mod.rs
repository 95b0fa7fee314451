#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use mfkdf_wallet::api::*;
use mfkdf_wallet::service::{ManualClock, ServiceOptions, WalletService};
use mfkdf_wallet::world::World;
use mfkdf_wallet_core::factor::SimulatedToken;
use mfkdf_wallet_core::ledger::Ledger;
use mfkdf_wallet_core::store::{NetworkConfig, Topology};
use mfkdf_wallet_core::PolicyDocument;
use rand::rngs::StdRng;
use rand::SeedableRng;

pub const START: u64 = 1_700_000_000;
pub const PASSWORD: &str = "correct horse battery staple";

pub fn world(peers: usize) -> Arc<World> {
    World::shared(NetworkConfig::new(peers, Topology::Complete, 64 << 20), Ledger::new(true))
}

pub fn service(world: &Arc<World>, peer: usize, seed: u64) -> (WalletService, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(START));
    let svc = WalletService::with_rng(world.clone(), ServiceOptions::test(peer), clock.clone(), StdRng::seed_from_u64(seed));
    (svc, clock)
}

pub fn signup_default(svc: &WalletService, email: Option<&str>) -> SignupResponse {
    svc.signup(SignupRequest {
        identifier: email.map(str::to_string),
        password: Some(PASSWORD.into()),
        factors: None,
        threshold: None,
        kdf_profile: None,
    })
    .expect("signup")
}

/// Hex response of the token whose secret is `secret_hex` to the current
/// challenge in `doc`.
pub fn token_response(doc: &PolicyDocument, factor_id: &str, secret_hex: &str) -> String {
    let secret: [u8; 20] = hex::decode(secret_hex).unwrap().try_into().unwrap();
    let entry = doc.factor(factor_id).expect("token factor");
    let mfkdf_wallet_core::factor::FactorParams::HmacToken(p) = &entry.params else {
        panic!("{factor_id} is not a token factor")
    };
    hex::encode(SimulatedToken::new(secret).respond(&p.challenge))
}

pub fn current_doc(svc: &WalletService, identifier: &str) -> PolicyDocument {
    PolicyDocument::parse(&svc.policy(identifier).expect("policy")).expect("parse")
}

pub fn witnesses(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn login(svc: &WalletService, identifier: &str, pairs: &[(&str, &str)]) -> Result<SessionInfo, mfkdf_wallet::error::ServiceError> {
    svc.login(LoginRequest {
        identifier: identifier.into(),
        witnesses: witnesses(pairs),
    })
}
