mod common;

use std::sync::Arc;

use common::*;
use mfkdf_wallet::api::*;
use mfkdf_wallet::client::{Client, ClientError};
use mfkdf_wallet::http;
use mfkdf_wallet_core::PolicyDocument;

fn server(static_dir: Option<&std::path::Path>) -> (http::ServerHandle, Client, Arc<mfkdf_wallet::world::World>) {
    let w = world(4);
    let (svc, _) = service(&w, 1, 40);
    let h = http::spawn(Arc::new(svc), "127.0.0.1:0", static_dir).unwrap();
    let c = Client::new(&h.url());
    (h, c, w)
}

fn api_code<T: std::fmt::Debug>(r: Result<T, ClientError>) -> (u16, String) {
    match r.unwrap_err() {
        ClientError::Api { status, code, .. } => (status, code),
        other => panic!("expected an API error, got {other:?}"),
    }
}

#[test]
fn full_flow_over_http() {
    let (_h, c, _w) = server(None);
    assert_eq!(c.health().unwrap().status, "ok");

    let r = c
        .signup(&SignupRequest {
            identifier: Some("gina@example.com".into()),
            password: Some(PASSWORD.into()),
            factors: None,
            threshold: None,
            kdf_profile: None,
        })
        .unwrap();
    let bytes = c.policy("gina@example.com").unwrap();
    assert_eq!(bytes, c.policy(&r.wallet_address).unwrap());
    let doc = PolicyDocument::parse(&bytes).unwrap();
    mfkdf_wallet_core::check_attestation(&doc).unwrap();
    assert_eq!(doc.to_canonical_bytes(), bytes, "served bytes are canonical");

    let resp = token_response(&doc, "hmac_token", r.token_secret.as_deref().unwrap());
    let s = c
        .login(&LoginRequest {
            identifier: "gina@example.com".into(),
            witnesses: witnesses(&[("password", PASSWORD), ("hmac_token", &resp)]),
        })
        .unwrap();
    assert_eq!(c.session(&s.session_id).unwrap().policy_version, 2);

    c.faucet(&FaucetRequest { address: r.wallet_address.clone(), amount: 3_000_000 }).unwrap();
    let to = mfkdf_wallet_core::Address([7; 20]).to_hex();
    let t = c.send(&s.session_id, &r.wallet_address, &TransferRequest { to: to.clone(), amount: 1_000_000 }).unwrap();
    assert_eq!(t.sender_balance, 2_000_000);
    assert_eq!(c.balance(&to).unwrap().balance, 1_000_000);

    let rr = c
        .recover_factor(&s.session_id, &r.wallet_address, "password", &FactorSpecInput::password("fresh"))
        .unwrap();
    assert_eq!(rr.policy_version, 3);
    c.logout(&s.session_id).unwrap();
    assert_eq!(api_code(c.session(&s.session_id)), (401, "session_required".into()));
}

#[test]
fn error_statuses() {
    let (h, c, _w) = server(None);
    let r = c
        .signup(&SignupRequest {
            identifier: None,
            password: Some(PASSWORD.into()),
            factors: None,
            threshold: None,
            kdf_profile: None,
        })
        .unwrap();
    let one = LoginRequest {
        identifier: r.wallet_address.clone(),
        witnesses: witnesses(&[("password", PASSWORD)]),
    };
    assert_eq!(api_code(c.login(&one)), (401, "threshold_not_met".into()));
    let bad = LoginRequest {
        identifier: r.wallet_address.clone(),
        witnesses: witnesses(&[("password", "no"), ("recovery_code", "no")]),
    };
    assert_eq!(api_code(c.login(&bad)), (401, "invalid_credentials".into()));
    assert_eq!(api_code(c.policy("nobody@example.com")), (404, "not_found".into()));
    assert_eq!(api_code(c.inbox("nobody@example.com")), (404, "not_found".into()));
    assert_eq!(
        api_code(c.send("nosuch", &r.wallet_address, &TransferRequest { to: r.wallet_address.clone(), amount: 1 })),
        (401, "session_required".into())
    );

    // malformed JSON and missing bearer tokens
    let agent = ureq::Agent::new_with_config(ureq::Agent::config_builder().http_status_as_error(false).build());
    let resp = agent
        .post(format!("{}/sessions", h.url()))
        .header("content-type", "application/json")
        .send("{not json")
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
    let body: ErrorBody = serde_json::from_slice(&resp.into_body().read_to_vec().unwrap()).unwrap();
    assert_eq!(body.code, "invalid_request");
    let resp = agent
        .post(format!("{}/wallets/{}/transfers", h.url(), r.wallet_address))
        .send_json(serde_json::json!({"to": r.wallet_address, "amount": 1}))
        .unwrap();
    assert_eq!(resp.status().as_u16(), 401);
    let resp = agent.get(format!("{}/no/such/route", h.url())).call().unwrap();
    assert_eq!(resp.status().as_u16(), 404);
}

#[test]
fn static_route_serves_the_web_build() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<!doctype html><title>wallet</title>").unwrap();
    std::fs::create_dir(dir.path().join("assets")).unwrap();
    std::fs::write(dir.path().join("assets/app.js"), "console.log(1)").unwrap();
    let (h, c, _w) = server(Some(dir.path()));
    let agent = ureq::Agent::new_with_config(ureq::Agent::config_builder().http_status_as_error(false).build());
    let mut resp = agent.get(format!("{}/", h.url())).call().unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    assert!(resp.body_mut().read_to_string().unwrap().contains("<title>wallet</title>"));
    let mut resp = agent.get(format!("{}/assets/app.js", h.url())).call().unwrap();
    assert_eq!(resp.body_mut().read_to_string().unwrap(), "console.log(1)");
    // API routes still win over the static tree
    assert_eq!(c.health().unwrap().peer, 1);
}

#[test]
fn unreachable_service_is_a_transport_error() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let c = Client::new(&format!("http://127.0.0.1:{port}"));
    assert!(matches!(c.health(), Err(ClientError::Transport(_))));
}
