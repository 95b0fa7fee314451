mod common;

use std::sync::Arc;
use std::thread;

use common::*;
use mfkdf_wallet::api::*;
use mfkdf_wallet::error::ErrorCode;
use mfkdf_wallet::service::Clock;
use mfkdf_wallet_core::otp::{hotp_code as hotp, totp_code};
use mfkdf_wallet_core::store::StoreError;
use mfkdf_wallet_core::{identifier_hash, Address};

#[test]
fn any_two_of_three_unlock_the_same_wallet() {
    let w = world(4);
    let (svc, _) = service(&w, 0, 1);
    let r = signup_default(&svc, Some("Alice@Example.com "));
    assert_eq!(r.identifier.as_deref(), Some("alice@example.com"));
    assert_eq!(r.policy_version, 1);
    let token = r.token_secret.clone().unwrap();
    let code = r.recovery_code.clone().unwrap();

    let doc = current_doc(&svc, "alice@example.com");
    let resp = token_response(&doc, "hmac_token", &token);
    let s1 = login(&svc, "alice@example.com", &[("password", PASSWORD), ("hmac_token", &resp)]).unwrap();
    assert_eq!(s1.wallet_address, r.wallet_address);
    assert_eq!(s1.policy_version, 2);

    let s2 = login(&svc, &r.wallet_address, &[("password", PASSWORD), ("recovery_code", &code)]).unwrap();
    assert_eq!(s2.policy_version, 3);

    let doc = current_doc(&svc, &r.wallet_address);
    let resp = token_response(&doc, "hmac_token", &token);
    let s3 = login(&svc, "ALICE@example.com", &[("recovery_code", &code), ("hmac_token", &resp)]).unwrap();
    assert_eq!(s3.wallet_address, r.wallet_address);
    assert_eq!(s3.policy_version, 4);
}

#[test]
fn stale_token_response_is_rejected_after_rechallenge() {
    let w = world(2);
    let (svc, _) = service(&w, 0, 2);
    let r = signup_default(&svc, None);
    let token = r.token_secret.unwrap();
    let doc = current_doc(&svc, &r.wallet_address);
    let resp = token_response(&doc, "hmac_token", &token);
    login(&svc, &r.wallet_address, &[("password", PASSWORD), ("hmac_token", &resp)]).unwrap();
    // the old response answered the previous challenge
    let e = login(&svc, &r.wallet_address, &[("password", "wrong"), ("hmac_token", &resp)]).unwrap_err();
    assert_eq!(e.code, ErrorCode::InvalidCredentials);
}

#[test]
fn one_factor_is_not_enough() {
    let w = world(2);
    let (svc, _) = service(&w, 0, 3);
    let r = signup_default(&svc, None);
    let e = login(&svc, &r.wallet_address, &[("password", PASSWORD)]).unwrap_err();
    assert_eq!(e.code, ErrorCode::ThresholdNotMet);
    assert_eq!(e.message, "threshold not met");
    // blank witnesses do not count
    let e = login(&svc, &r.wallet_address, &[("password", PASSWORD), ("recovery_code", " ")]).unwrap_err();
    assert_eq!(e.code, ErrorCode::ThresholdNotMet);
}

#[test]
fn wrong_witnesses_are_invalid_credentials() {
    let w = world(2);
    let (svc, _) = service(&w, 0, 4);
    let r = signup_default(&svc, None);
    let code = r.recovery_code.unwrap();
    let e = login(&svc, &r.wallet_address, &[("password", "hunter2"), ("recovery_code", &code)]).unwrap_err();
    assert_eq!(e.code, ErrorCode::InvalidCredentials);
    // the failed attempt did not move the document
    assert_eq!(current_doc(&svc, &r.wallet_address).version, 1);
}

#[test]
fn unknown_wallets_and_identifiers() {
    let w = world(2);
    let (svc, _) = service(&w, 0, 5);
    let e = login(&svc, "nobody@example.com", &[("password", "x"), ("recovery_code", "y")]).unwrap_err();
    assert_eq!(e.code, ErrorCode::NotFound);
    let e = svc.policy(&Address([9; 20]).to_hex()).unwrap_err();
    assert_eq!(e.code, ErrorCode::NotFound);
    let e = svc.policy("not-an-address").unwrap_err();
    assert_eq!(e.code, ErrorCode::InvalidRequest);
}

#[test]
fn signup_validation() {
    let w = world(2);
    let (svc, _) = service(&w, 0, 6);
    let bad = |req: SignupRequest| svc.signup(req).unwrap_err().code;
    let base = SignupRequest {
        identifier: None,
        password: Some(PASSWORD.into()),
        factors: None,
        threshold: None,
        kdf_profile: None,
    };
    assert_eq!(bad(SignupRequest { identifier: Some("no-at-sign".into()), ..base.clone() }), ErrorCode::InvalidRequest);
    assert_eq!(bad(SignupRequest { password: None, ..base.clone() }), ErrorCode::InvalidRequest);
    assert_eq!(bad(SignupRequest { threshold: Some(4), ..base.clone() }), ErrorCode::InvalidRequest);
    assert_eq!(bad(SignupRequest { kdf_profile: Some("fast".into()), ..base.clone() }), ErrorCode::InvalidRequest);
    assert_eq!(
        bad(SignupRequest { factors: Some(vec![FactorSpecInput::of_type("fingerprint")]), ..base.clone() }),
        ErrorCode::InvalidRequest
    );
}

#[test]
fn identifiers_are_first_come() {
    let w = world(3);
    let (svc, _) = service(&w, 0, 7);
    signup_default(&svc, Some("bob@example.com"));
    let e = svc
        .signup(SignupRequest {
            identifier: Some(" BOB@example.com".into()),
            password: Some("other".into()),
            factors: None,
            threshold: None,
            kdf_profile: None,
        })
        .unwrap_err();
    assert_eq!(e.code, ErrorCode::IdentifierTaken);
}

#[test]
fn binding_is_visible_from_every_peer() {
    let w = world(5);
    let (svc, _) = service(&w, 2, 8);
    let r = signup_default(&svc, Some("carol@example.com"));
    for peer in 0..5 {
        let a = w.resolve_identifier(peer, &identifier_hash("carol@example.com")).unwrap();
        assert_eq!(a.to_hex(), r.wallet_address);
    }
}

#[test]
fn otp_and_ooba_factors_through_the_service() {
    let w = world(3);
    let (svc, clock) = service(&w, 0, 9);
    let hotp_key = "3132333435363738393031323334353637383930";
    let r = svc
        .signup(SignupRequest {
            identifier: Some("dave@example.com".into()),
            password: None,
            factors: Some(vec![
                FactorSpecInput { secret: Some(hotp_key.into()), ..FactorSpecInput::of_type("hotp") },
                FactorSpecInput { secret: Some(hotp_key.into()), window: Some(64), ..FactorSpecInput::of_type("totp") },
                FactorSpecInput::of_type("ooba"),
            ]),
            threshold: Some(2),
            kdf_profile: None,
        })
        .unwrap();
    assert!(r.secrets.is_empty(), "caller-supplied secrets are not echoed");
    let key = hex::decode(hotp_key).unwrap();
    let mut counter = 0;
    for i in 0..6u64 {
        clock.advance(45);
        let code = svc.dev_inbox("dave@example.com").unwrap().code;
        let totp = totp_code(&key, clock.now(), 30, 6);
        let pairs: Vec<(&str, String)> = match i % 3 {
            0 => vec![("ooba", code), ("totp", totp)],
            1 => {
                counter += 1;
                vec![("hotp", hotp(&key, counter - 1, 6)), ("ooba", code)]
            }
            _ => {
                counter += 1;
                vec![("hotp", hotp(&key, counter - 1, 6)), ("totp", totp)]
            }
        };
        let pairs: Vec<(&str, &str)> = pairs.iter().map(|(k, v)| (*k, v.as_str())).collect();
        let s = login(&svc, "dave@example.com", &pairs).unwrap();
        assert_eq!(s.wallet_address, r.wallet_address);
        assert_eq!(s.policy_version, i + 2);
    }
}

#[test]
fn totp_outside_the_window_is_reported_as_stale() {
    let w = world(2);
    let (svc, clock) = service(&w, 0, 10);
    let key_hex = "3132333435363738393031323334353637383930";
    let r = svc
        .signup(SignupRequest {
            identifier: None,
            password: None,
            factors: Some(vec![
                FactorSpecInput { secret: Some(key_hex.into()), window: Some(4), ..FactorSpecInput::of_type("totp") },
                FactorSpecInput::password(PASSWORD),
            ]),
            threshold: Some(2),
            kdf_profile: None,
        })
        .unwrap();
    clock.advance(30 * 10);
    let code = totp_code(&hex::decode(key_hex).unwrap(), clock.now(), 30, 6);
    let e = login(&svc, &r.wallet_address, &[("totp", &code), ("password", PASSWORD)]).unwrap_err();
    assert_eq!(e.code, ErrorCode::StaleTotpWindow);
}

#[test]
fn sessions_expire_on_the_service_clock() {
    let w = world(2);
    let (svc, clock) = service(&w, 0, 11);
    let r = signup_default(&svc, None);
    let code = r.recovery_code.unwrap();
    let s = login(&svc, &r.wallet_address, &[("password", PASSWORD), ("recovery_code", &code)]).unwrap();
    assert_eq!(s.expires_at, START + 900);
    assert_eq!(svc.active_sessions(), 1);
    clock.advance(899);
    assert!(svc.session_info(&s.session_id).is_ok());
    clock.advance(1);
    assert_eq!(svc.session_info(&s.session_id).unwrap_err().code, ErrorCode::SessionRequired);
    assert_eq!(svc.active_sessions(), 0);
    let e = svc
        .send(&s.session_id, &r.wallet_address, TransferRequest { to: r.wallet_address.clone(), amount: 1 })
        .unwrap_err();
    assert_eq!(e.code, ErrorCode::SessionRequired);
}

#[test]
fn logout_ends_the_session() {
    let w = world(2);
    let (svc, _) = service(&w, 0, 12);
    let r = signup_default(&svc, None);
    let code = r.recovery_code.unwrap();
    let s = login(&svc, &r.wallet_address, &[("password", PASSWORD), ("recovery_code", &code)]).unwrap();
    svc.logout(&s.session_id).unwrap();
    assert_eq!(svc.logout(&s.session_id).unwrap_err().code, ErrorCode::SessionRequired);
    assert_eq!(svc.session_info(&s.session_id).unwrap_err().code, ErrorCode::SessionRequired);
}

#[test]
fn transfers_move_funds_and_check_ownership() {
    let w = world(2);
    let (svc, _) = service(&w, 0, 13);
    let a = signup_default(&svc, None);
    let b = signup_default(&svc, None);
    svc.faucet(FaucetRequest { address: a.wallet_address.clone(), amount: 5_000_000 }).unwrap();
    let code = a.recovery_code.unwrap();
    let s = login(&svc, &a.wallet_address, &[("password", PASSWORD), ("recovery_code", &code)]).unwrap();

    let t = svc
        .send(&s.session_id, &a.wallet_address, TransferRequest { to: b.wallet_address.clone(), amount: 1_250_000 })
        .unwrap();
    assert_eq!((t.nonce, t.sender_balance, t.recipient_balance), (1, 3_750_000, 1_250_000));
    let t = svc
        .send(&s.session_id, &a.wallet_address, TransferRequest { to: b.wallet_address.clone(), amount: 1 })
        .unwrap();
    assert_eq!(t.nonce, 2);

    let e = svc
        .send(&s.session_id, &a.wallet_address, TransferRequest { to: b.wallet_address.clone(), amount: 10_000_000 })
        .unwrap_err();
    assert_eq!(e.code, ErrorCode::InsufficientFunds);
    let e = svc
        .send(&s.session_id, &b.wallet_address, TransferRequest { to: a.wallet_address.clone(), amount: 1 })
        .unwrap_err();
    assert_eq!(e.code, ErrorCode::Forbidden);
    let e = svc
        .send(&s.session_id, &a.wallet_address, TransferRequest { to: b.wallet_address.clone(), amount: 0 })
        .unwrap_err();
    assert_eq!(e.code, ErrorCode::InvalidAmount);

    let bal = svc.balance(&b.wallet_address).unwrap();
    assert_eq!((bal.balance, bal.nonce), (1_250_001, 0));
}

#[test]
fn dev_routes_need_the_dev_flag() {
    let w = world(2);
    let clock = Arc::new(mfkdf_wallet::service::ManualClock::new(START));
    let mut opts = mfkdf_wallet::service::ServiceOptions::test(0);
    opts.dev = false;
    let svc = mfkdf_wallet::service::WalletService::new(w, opts, clock);
    let addr = Address([1; 20]).to_hex();
    assert_eq!(svc.faucet(FaucetRequest { address: addr, amount: 1 }).unwrap_err().code, ErrorCode::NotFound);
    assert_eq!(svc.dev_inbox("x@example.com").unwrap_err().code, ErrorCode::NotFound);
}

#[test]
fn recovery_replaces_a_lost_password() {
    let w = world(3);
    let (svc, _) = service(&w, 0, 14);
    let r = signup_default(&svc, Some("erin@example.com"));
    let code = r.recovery_code.unwrap();
    let token = r.token_secret.unwrap();
    let doc = current_doc(&svc, "erin@example.com");
    let resp = token_response(&doc, "hmac_token", &token);
    let s = login(&svc, "erin@example.com", &[("recovery_code", &code), ("hmac_token", &resp)]).unwrap();
    let rr = svc
        .recover_factor(&s.session_id, &r.wallet_address, "password", FactorSpecInput::password("new password"))
        .unwrap();
    assert_eq!(rr.policy_version, 3);
    assert!(rr.secret.is_none());

    let e = login(&svc, "erin@example.com", &[("password", PASSWORD), ("recovery_code", &code)]).unwrap_err();
    assert_eq!(e.code, ErrorCode::InvalidCredentials);
    let s = login(&svc, "erin@example.com", &[("password", "new password"), ("recovery_code", &code)]).unwrap();
    assert_eq!(s.wallet_address, r.wallet_address);

    // a fresh recovery code is generated and shown once
    let rr = svc
        .recover_factor(&s.session_id, &r.wallet_address, "recovery_code", FactorSpecInput::of_type("recovery_code"))
        .unwrap();
    let fresh = rr.secret.unwrap();
    assert_ne!(fresh, code);
    let e = login(&svc, "erin@example.com", &[("password", "new password"), ("recovery_code", &code)]).unwrap_err();
    assert_eq!(e.code, ErrorCode::InvalidCredentials);
    login(&svc, "erin@example.com", &[("password", "new password"), ("recovery_code", &fresh)]).unwrap();

    let e = svc
        .recover_factor(&s.session_id, &r.wallet_address, "nope", FactorSpecInput::password("x"))
        .unwrap_err();
    assert_eq!(e.code, ErrorCode::InvalidRequest);
}

#[test]
fn instances_share_only_the_network() {
    let w = world(8);
    let (a, _) = service(&w, 0, 15);
    let (b, _) = service(&w, 7, 16);
    let r = signup_default(&a, Some("frank@example.com"));
    let code = r.recovery_code.unwrap();
    let s = login(&b, "frank@example.com", &[("password", PASSWORD), ("recovery_code", &code)]).unwrap();
    assert_eq!(s.wallet_address, r.wallet_address);
    // the session lives on B only
    assert!(a.session_info(&s.session_id).is_err());
    // and A sees the version B published
    assert_eq!(current_doc(&a, "frank@example.com").version, 2);
}

#[test]
fn concurrent_logins_serialize_per_wallet() {
    let w = world(4);
    let (svc, _) = service(&w, 0, 17);
    let svc = Arc::new(svc);
    let r = signup_default(&svc, None);
    let code = r.recovery_code.unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let svc = svc.clone();
            let addr = r.wallet_address.clone();
            let code = code.clone();
            thread::spawn(move || login(&svc, &addr, &[("password", PASSWORD), ("recovery_code", &code)]).unwrap())
        })
        .collect();
    let mut versions: Vec<u64> = handles.into_iter().map(|h| h.join().unwrap().policy_version).collect();
    versions.sort();
    assert_eq!(versions, vec![2, 3, 4, 5]);
}

#[test]
fn two_instances_racing_on_one_version() {
    let w = world(4);
    let (a, _) = service(&w, 0, 18);
    let (b, _) = service(&w, 3, 19);
    let r = signup_default(&a, None);
    let code = r.recovery_code.unwrap();
    let (a, b) = (Arc::new(a), Arc::new(b));
    let run = |svc: Arc<mfkdf_wallet::service::WalletService>| {
        let addr = r.wallet_address.clone();
        let code = code.clone();
        thread::spawn(move || login(&svc, &addr, &[("password", PASSWORD), ("recovery_code", &code)]))
    };
    let ha = run(a.clone());
    let hb = run(b.clone());
    let results = [ha.join().unwrap(), hb.join().unwrap()];
    // each login either lands on a fresh version or loses the race cleanly
    let ok: Vec<u64> = results.iter().filter_map(|r| r.as_ref().ok().map(|s| s.policy_version)).collect();
    assert!(!ok.is_empty());
    for r in &results {
        if let Err(e) = r {
            assert_eq!(e.code, ErrorCode::StoreRejected, "{e}");
        }
    }
    let mut dedup = ok.clone();
    dedup.dedup();
    assert_eq!(dedup.len(), ok.len(), "two logins published the same version");
    w.settle();
    let v = w.get(0, &r.wallet_address.parse().unwrap()).unwrap().version;
    assert_eq!(v, 1 + ok.len() as u64);
}

#[test]
fn store_errors_map_to_store_rejected() {
    let e: mfkdf_wallet::error::ServiceError = StoreError::TooLarge { size: 2, max: 1 }.into();
    assert_eq!(e.code, ErrorCode::StoreRejected);
}
