//! Blocking HTTP client for the wallet service API.

use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::http::Response;
use ureq::{Agent, Body};

use crate::api::*;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach the wallet service: {0}")]
    Transport(String),
    #[error("{message}")]
    Api {
        status: u16,
        code: String,
        message: String,
    },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    /// The service's error code, when the service answered.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            _ => None,
        }
    }
}

pub type ClientResult<T> = Result<T, ClientError>;

pub struct Client {
    base: String,
    agent: Agent,
}

fn transport(e: ureq::Error) -> ClientError {
    ClientError::Transport(e.to_string())
}

impl Client {
    pub fn new(base_url: &str) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Client {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn bytes(resp: Response<Body>) -> ClientResult<Vec<u8>> {
        let status = resp.status().as_u16();
        let mut body = resp.into_body();
        let bytes = body
            .with_config()
            .limit(16 << 20)
            .read_to_vec()
            .map_err(|e| ClientError::Decode(e.to_string()))?;
        if (200..300).contains(&status) {
            return Ok(bytes);
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(e) => Err(ClientError::Api {
                status,
                code: e.code,
                message: e.message,
            }),
            Err(_) => Err(ClientError::Api {
                status,
                code: "http_error".into(),
                message: format!("HTTP {status}: {}", String::from_utf8_lossy(&bytes)),
            }),
        }
    }

    fn json<T: DeserializeOwned>(resp: Response<Body>) -> ClientResult<T> {
        let bytes = Self::bytes(resp)?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn get_json<T: DeserializeOwned>(&self, path: &str) -> ClientResult<T> {
        Self::json(self.agent.get(self.url(path)).call().map_err(transport)?)
    }

    fn post_json<B: Serialize, T: DeserializeOwned>(&self, path: &str, session: Option<&str>, body: &B) -> ClientResult<T> {
        let mut req = self.agent.post(self.url(path));
        if let Some(s) = session {
            req = req.header("Authorization", format!("Bearer {s}"));
        }
        Self::json(req.send_json(body).map_err(transport)?)
    }

    pub fn signup(&self, req: &SignupRequest) -> ClientResult<SignupResponse> {
        self.post_json("/accounts", None, req)
    }

    pub fn login(&self, req: &LoginRequest) -> ClientResult<SessionInfo> {
        self.post_json("/sessions", None, req)
    }

    pub fn session(&self, session_id: &str) -> ClientResult<SessionInfo> {
        self.get_json(&format!("/sessions/{session_id}"))
    }

    pub fn logout(&self, session_id: &str) -> ClientResult<()> {
        let resp = self
            .agent
            .delete(self.url(&format!("/sessions/{session_id}")))
            .call()
            .map_err(transport)?;
        Self::bytes(resp).map(|_| ())
    }

    pub fn recover_factor(
        &self,
        session_id: &str,
        address: &str,
        factor_id: &str,
        spec: &FactorSpecInput,
    ) -> ClientResult<RecoverResponse> {
        self.post_json(&format!("/wallets/{address}/factors/{factor_id}"), Some(session_id), spec)
    }

    pub fn balance(&self, address: &str) -> ClientResult<BalanceResponse> {
        self.get_json(&format!("/wallets/{address}/balance"))
    }

    pub fn send(&self, session_id: &str, from: &str, req: &TransferRequest) -> ClientResult<TransferResponse> {
        self.post_json(&format!("/wallets/{from}/transfers"), Some(session_id), req)
    }

    /// Raw canonical document bytes.
    pub fn policy(&self, address_or_email: &str) -> ClientResult<Vec<u8>> {
        Self::bytes(
            self.agent
                .get(self.url(&format!("/policies/{address_or_email}")))
                .call()
                .map_err(transport)?,
        )
    }

    pub fn inbox(&self, email: &str) -> ClientResult<InboxResponse> {
        self.get_json(&format!("/dev/inbox/{email}"))
    }

    pub fn faucet(&self, req: &FaucetRequest) -> ClientResult<BalanceResponse> {
        self.post_json("/dev/faucet", None, req)
    }

    pub fn health(&self) -> ClientResult<HealthResponse> {
        self.get_json("/healthz")
    }
}
