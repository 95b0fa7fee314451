use std::fmt;

use mfkdf_wallet_core::ledger::{FaucetError, TransferRejection};
use mfkdf_wallet_core::store::StoreError;
use mfkdf_wallet_core::MfkdfError;

/// Stable error codes carried in `{code, message}` bodies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    InvalidRequest,
    InvalidCredentials,
    ThresholdNotMet,
    StaleTotpWindow,
    SessionRequired,
    Forbidden,
    NotFound,
    StoreRejected,
    IdentifierTaken,
    BadSignature,
    BadNonce,
    InsufficientFunds,
    InvalidAmount,
    Overflow,
    FaucetDisabled,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 16] = [
        ErrorCode::InvalidRequest,
        ErrorCode::InvalidCredentials,
        ErrorCode::ThresholdNotMet,
        ErrorCode::StaleTotpWindow,
        ErrorCode::SessionRequired,
        ErrorCode::Forbidden,
        ErrorCode::NotFound,
        ErrorCode::StoreRejected,
        ErrorCode::IdentifierTaken,
        ErrorCode::BadSignature,
        ErrorCode::BadNonce,
        ErrorCode::InsufficientFunds,
        ErrorCode::InvalidAmount,
        ErrorCode::Overflow,
        ErrorCode::FaucetDisabled,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::InvalidRequest => "invalid_request",
            ErrorCode::InvalidCredentials => "invalid_credentials",
            ErrorCode::ThresholdNotMet => "threshold_not_met",
            ErrorCode::StaleTotpWindow => "stale_totp_window",
            ErrorCode::SessionRequired => "session_required",
            ErrorCode::Forbidden => "forbidden",
            ErrorCode::NotFound => "not_found",
            ErrorCode::StoreRejected => "store_rejected",
            ErrorCode::IdentifierTaken => "identifier_taken",
            ErrorCode::BadSignature => "bad_signature",
            ErrorCode::BadNonce => "bad_nonce",
            ErrorCode::InsufficientFunds => "insufficient_funds",
            ErrorCode::InvalidAmount => "invalid_amount",
            ErrorCode::Overflow => "overflow",
            ErrorCode::FaucetDisabled => "faucet_disabled",
            ErrorCode::Internal => "internal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::InvalidRequest => 400,
            ErrorCode::InvalidCredentials
            | ErrorCode::ThresholdNotMet
            | ErrorCode::StaleTotpWindow
            | ErrorCode::SessionRequired => 401,
            ErrorCode::Forbidden | ErrorCode::FaucetDisabled => 403,
            ErrorCode::NotFound => 404,
            ErrorCode::StoreRejected | ErrorCode::IdentifierTaken => 409,
            ErrorCode::BadSignature
            | ErrorCode::BadNonce
            | ErrorCode::InsufficientFunds
            | ErrorCode::InvalidAmount
            | ErrorCode::Overflow => 422,
            ErrorCode::Internal => 500,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ServiceError {
    pub code: ErrorCode,
    pub message: String,
}

impl ServiceError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ServiceError {
            code,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidRequest, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn session_required() -> Self {
        Self::new(ErrorCode::SessionRequired, "a valid session is required")
    }

    pub fn credentials() -> Self {
        Self::new(ErrorCode::InvalidCredentials, "invalid credentials")
    }
}

impl From<MfkdfError> for ServiceError {
    fn from(e: MfkdfError) -> Self {
        match e {
            MfkdfError::InvalidCredentials | MfkdfError::WrongKey => Self::credentials(),
            MfkdfError::InsufficientWitnesses { .. } => {
                Self::new(ErrorCode::ThresholdNotMet, "threshold not met")
            }
            MfkdfError::StaleTotpWindow(inner) => {
                Self::new(ErrorCode::StaleTotpWindow, inner.to_string())
            }
            MfkdfError::ThresholdOutOfRange { .. }
            | MfkdfError::DuplicateFactor(_)
            | MfkdfError::UnknownFactor(_)
            | MfkdfError::FactorSetup { .. } => Self::invalid(e.to_string()),
            other => Self::new(ErrorCode::Internal, other.to_string()),
        }
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound => Self::not_found("no such policy"),
            StoreError::BindingConflict => Self::new(ErrorCode::IdentifierTaken, e.to_string()),
            other => Self::new(ErrorCode::StoreRejected, other.to_string()),
        }
    }
}

impl From<TransferRejection> for ServiceError {
    fn from(e: TransferRejection) -> Self {
        let code = ErrorCode::parse(e.code()).unwrap_or(ErrorCode::Internal);
        Self::new(code, e.to_string())
    }
}

impl From<FaucetError> for ServiceError {
    fn from(e: FaucetError) -> Self {
        match e {
            FaucetError::Disabled => Self::new(ErrorCode::FaucetDisabled, e.to_string()),
            FaucetError::Overflow => Self::new(ErrorCode::Overflow, e.to_string()),
        }
    }
}

pub type ServiceResult<T> = Result<T, ServiceError>;
