//! The `wallet` command line.
//!
//! Secrets never come from arguments: they are read from `WALLET_*`
//! environment variables or prompted for on the terminal.

use std::collections::BTreeMap;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use mfkdf_wallet_core::factor::{FactorParams, FactorType, SimulatedToken, TOKEN_SECRET_LEN};
use mfkdf_wallet_core::ledger::UNITS_PER_COIN;
use mfkdf_wallet_core::{check_attestation, policy_entropy, PolicyDocument};
use serde_json::{json, Value};

use crate::api::*;
use crate::client::{Client, ClientError};
use crate::config::ServiceConfig;
use crate::scenario::{write_trace, Scenario};
use crate::service::WalletService;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_AUTH: i32 = 3;
pub const EXIT_NETWORK: i32 = 4;
pub const EXIT_STORE: i32 = 5;

pub const DEFAULT_SERVICE_URL: &str = "http://127.0.0.1:8420";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "wallet", version, about = "Multi-factor wallet client and service")]
pub struct Cli {
    #[arg(long, global = true, env = "WALLET_SERVICE_URL", default_value = DEFAULT_SERVICE_URL)]
    pub service_url: String,
    #[arg(long, global = true, value_enum, env = "WALLET_FORMAT", default_value = "human")]
    pub format: OutputFormat,
    /// Never prompt; fail instead when something is missing.
    #[arg(long, global = true)]
    pub yes: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a wallet. The password comes from WALLET_PASSWORD or a prompt.
    Create {
        #[arg(long)]
        email: Option<String>,
        /// Comma-separated factor types; default password,hmac_token,recovery_code.
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<String>>,
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long)]
        kdf_profile: Option<String>,
    },
    /// Log in with factor witnesses and print a session id.
    Login { identifier: String },
    /// End the session in WALLET_SESSION.
    Logout,
    /// Show the session in WALLET_SESSION.
    Session,
    /// Balance of an address, or of the session's wallet.
    Balance { address: Option<String> },
    /// Send coins from the session's wallet.
    Send {
        to: String,
        /// Coins, up to six decimals.
        amount: String,
        /// Treat the amount as base units.
        #[arg(long)]
        units: bool,
    },
    /// Replace a factor of the session's wallet.
    Recover {
        factor_id: String,
        /// Type of the replacement; defaults to the current type.
        #[arg(long = "type")]
        factor_type: Option<String>,
        /// Destination for an ooba replacement.
        #[arg(long)]
        email: Option<String>,
    },
    /// Fetch a policy document and verify its attestation locally.
    InspectPolicy {
        /// Address or email identifier.
        key: Option<String>,
        /// Read the document from a file instead.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run a param-store scenario file and emit the round trace.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the wallet service.
    Serve {
        #[arg(long, env = "WALLET_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
    },
    /// Latest code in the development inbox.
    Inbox { email: String },
    /// Credit an address from the development faucet.
    Faucet {
        address: String,
        amount: String,
        #[arg(long)]
        units: bool,
    },
    /// Check that the service is up.
    Health,
}

#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn new(exit_code: i32, code: &str, message: impl Into<String>) -> Self {
        CliError {
            exit_code,
            code: code.into(),
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, "usage", message)
    }

    fn store(message: impl Into<String>) -> Self {
        Self::new(EXIT_STORE, "store_rejected", message)
    }
}

/// Exit code for a service error code.
pub fn exit_code_for(code: &str) -> i32 {
    match code {
        "invalid_credentials" | "threshold_not_met" | "stale_totp_window" | "session_required" | "forbidden" => {
            EXIT_AUTH
        }
        "store_rejected" | "not_found" | "identifier_taken" => EXIT_STORE,
        "invalid_request" => EXIT_USAGE,
        _ => EXIT_OTHER,
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match &e {
            ClientError::Transport(_) => Self::new(EXIT_NETWORK, "network", e.to_string()),
            ClientError::Api { code, message, .. } => Self::new(exit_code_for(code), code, message.clone()),
            ClientError::Decode(_) => Self::new(EXIT_OTHER, "decode", e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Where secrets and interactive answers come from. Swappable for tests.
pub trait Secrets {
    fn env(&self, name: &str) -> Option<String>;
    /// Prompts without echo; `None` when no terminal is attached.
    fn prompt(&self, label: &str) -> Option<String>;
    fn confirm(&self, question: &str) -> bool;
}

pub struct Terminal;

impl Secrets for Terminal {
    fn env(&self, name: &str) -> Option<String> {
        std::env::var(name).ok().filter(|v| !v.is_empty())
    }

    fn prompt(&self, label: &str) -> Option<String> {
        if !io::stdin().is_terminal() {
            return None;
        }
        rpassword::prompt_password(format!("{label}: ")).ok()
    }

    fn confirm(&self, question: &str) -> bool {
        if !io::stdin().is_terminal() {
            return false;
        }
        eprint!("{question} [y/N] ");
        let _ = io::stderr().flush();
        let mut line = String::new();
        io::stdin().lock().read_line(&mut line).is_ok() && matches!(line.trim(), "y" | "Y" | "yes")
    }
}

struct Ctx<'a> {
    client: Client,
    format: OutputFormat,
    yes: bool,
    secrets: &'a dyn Secrets,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn secret(&self, env: &str, label: &str) -> Option<String> {
        self.secrets.env(env).or_else(|| {
            if self.yes {
                None
            } else {
                self.secrets.prompt(label).filter(|s| !s.is_empty())
            }
        })
    }

    fn session(&self) -> CliResult<String> {
        self.secrets
            .env("WALLET_SESSION")
            .ok_or_else(|| CliError::new(EXIT_AUTH, "session_required", "set WALLET_SESSION to a session id from `wallet login`"))
    }

    /// Prints `value` as one JSON line in structured mode, or `human`.
    fn emit(&mut self, value: Value, human: impl FnOnce() -> String) -> CliResult<()> {
        let text = match self.format {
            OutputFormat::Structured => value.to_string(),
            OutputFormat::Human => human(),
        };
        writeln!(self.out, "{text}").map_err(|e| CliError::new(EXIT_OTHER, "io", e.to_string()))
    }
}

pub fn parse_amount(text: &str, units: bool) -> CliResult<u64> {
    let text = text.trim();
    let bad = || CliError::usage(format!("`{text}` is not a valid amount"));
    if units {
        return text.parse().map_err(|_| bad());
    }
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if whole.is_empty() && frac.is_empty() || frac.len() > 6 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
    let frac: u64 = format!("{frac:0<6}").parse().map_err(|_| bad())?;
    whole
        .checked_mul(UNITS_PER_COIN)
        .and_then(|w| w.checked_add(frac))
        .ok_or_else(bad)
}

pub fn format_amount(units: u64) -> String {
    format!("{}.{:06}", units / UNITS_PER_COIN, units % UNITS_PER_COIN)
}

/// Environment variable carrying the witness for a factor id.
pub fn witness_env_name(factor_id: &str) -> String {
    let id: String = factor_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("WALLET_WITNESS_{id}")
}

fn fetch_policy(ctx: &Ctx, key: &str) -> CliResult<PolicyDocument> {
    let bytes = ctx.client.policy(key)?;
    PolicyDocument::parse(&bytes).map_err(|e| CliError::store(format!("malformed policy: {e}")))
}

/// Collects witnesses in policy factor order, stopping once the threshold
/// is covered.
fn gather_witnesses(ctx: &Ctx, doc: &PolicyDocument) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for f in &doc.factors {
        if out.len() >= doc.threshold {
            break;
        }
        let ty = f.factor_type();
        let mut value = ctx.secrets.env(&witness_env_name(&f.factor_id));
        if value.is_none() {
            value = match ty {
                FactorType::Password => ctx.secrets.env("WALLET_PASSWORD"),
                FactorType::RecoveryCode => ctx.secrets.env("WALLET_RECOVERY_CODE"),
                FactorType::HmacToken => match ctx.secrets.env("WALLET_TOKEN_RESPONSE") {
                    Some(r) => Some(r),
                    None => token_response(ctx.secrets.env("WALLET_TOKEN_SECRET"), &f.params)?,
                },
                _ => None,
            };
        }
        if value.is_none() && !ctx.yes {
            let label = match ty {
                FactorType::HmacToken => {
                    let FactorParams::HmacToken(p) = &f.params else { unreachable!() };
                    format!("{} response to challenge {} (hex, empty to skip)", f.factor_id, hex::encode(p.challenge))
                }
                _ => format!("{} ({ty}, empty to skip)", f.factor_id),
            };
            value = ctx.secrets.prompt(&label).filter(|v| !v.trim().is_empty());
        }
        if let Some(v) = value {
            out.insert(f.factor_id.clone(), v);
        }
    }
    Ok(out)
}

fn token_response(
    secret_hex: Option<String>,
    params: &FactorParams,
) -> CliResult<Option<String>> {
    let (Some(secret_hex), FactorParams::HmacToken(p)) = (secret_hex, params) else {
        return Ok(None);
    };
    let secret: [u8; TOKEN_SECRET_LEN] = hex::decode(secret_hex.trim())
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| CliError::usage("WALLET_TOKEN_SECRET must be 20 bytes of hex"))?;
    Ok(Some(hex::encode(SimulatedToken::new(secret).respond(&p.challenge))))
}

fn describe_policy(doc: &PolicyDocument, size: usize) -> (Value, String) {
    let verdict = match check_attestation(doc) {
        Ok(()) => "verified".to_string(),
        Err(e) => format!("invalid: {e}"),
    };
    let entropy = policy_entropy(doc);
    let factors: Vec<Value> = doc
        .factors
        .iter()
        .map(|f| {
            json!({
                "factor_id": f.factor_id,
                "factor_type": f.factor_type().as_str(),
                "share_index": f.share_index,
                "entropy_millibits": f.entropy.millibits(),
            })
        })
        .collect();
    let value = json!({
        "wallet_address": doc.wallet_address.to_hex(),
        "version": doc.version,
        "threshold": doc.threshold,
        "factor_count": doc.factors.len(),
        "factors": factors,
        "entropy_millibits": entropy.millibits(),
        "identifier_hash": doc.identifier_hash.map(hex::encode),
        "kdf_profile": doc.kdf.profile.as_str(),
        "size_bytes": size,
        "attestation": verdict,
    });
    let mut human = format!(
        "wallet       {}\nversion      {}\nthreshold    {} of {}\nentropy      {} (weakest {} factors)\nsize         {} bytes\nkdf          {}\nattestation  {}\nfactors:",
        doc.wallet_address,
        doc.version,
        doc.threshold,
        doc.factors.len(),
        entropy,
        doc.threshold,
        size,
        doc.kdf.profile.as_str(),
        verdict
    );
    for f in &doc.factors {
        human.push_str(&format!(
            "\n  {:<16} {:<14} share {:<3} {}",
            f.factor_id,
            f.factor_type().as_str(),
            f.share_index,
            f.entropy
        ));
    }
    (value, human)
}

fn run_command(ctx: &mut Ctx, command: Command) -> CliResult<()> {
    match command {
        Command::Create { email, factors, threshold, kdf_profile } => {
            let types = factors.unwrap_or_else(|| vec!["password".into(), "hmac_token".into(), "recovery_code".into()]);
            let mut specs = Vec::new();
            for t in &types {
                let mut spec = FactorSpecInput::of_type(t.trim());
                if t.trim() == "password" {
                    let pw = ctx
                        .secret("WALLET_PASSWORD", "new wallet password")
                        .ok_or_else(|| CliError::usage("a password is required (WALLET_PASSWORD)"))?;
                    spec.password = Some(pw);
                }
                specs.push(spec);
            }
            let threshold = threshold.or(if types.len() >= 2 { Some(2) } else { Some(1) });
            let req = SignupRequest {
                identifier: email,
                password: None,
                factors: Some(specs),
                threshold,
                kdf_profile,
            };
            let r = ctx.client.signup(&req)?;
            let value = serde_json::to_value(&r).expect("serializable");
            ctx.emit(value, || {
                let mut s = format!("wallet address  {}\npolicy version  {}", r.wallet_address, r.policy_version);
                if let Some(id) = &r.identifier {
                    s.push_str(&format!("\nidentifier      {id}"));
                }
                for (id, secret) in &r.secrets {
                    s.push_str(&format!("\nsecret {id:<9} {secret}"));
                }
                s.push_str("\nStore these secrets now. They are shown only once.");
                s
            })
        }
        Command::Login { identifier } => {
            let doc = fetch_policy(ctx, &identifier)?;
            let witnesses = gather_witnesses(ctx, &doc)?;
            let s = ctx.client.login(&LoginRequest {
                identifier,
                witnesses,
            })?;
            let value = serde_json::to_value(&s).expect("serializable");
            ctx.emit(value, || {
                format!(
                    "logged in to {} (policy v{})\nexport WALLET_SESSION={}",
                    s.wallet_address, s.policy_version, s.session_id
                )
            })
        }
        Command::Logout => {
            let session = ctx.session()?;
            ctx.client.logout(&session)?;
            ctx.emit(json!({"logged_out": true}), || "logged out".into())
        }
        Command::Session => {
            let session = ctx.session()?;
            let s = ctx.client.session(&session)?;
            let value = serde_json::to_value(&s).expect("serializable");
            ctx.emit(value, || format!("{} (policy v{}), expires at {}", s.wallet_address, s.policy_version, s.expires_at))
        }
        Command::Balance { address } => {
            let address = match address {
                Some(a) => a,
                None => ctx.client.session(&ctx.session()?)?.wallet_address,
            };
            let b = ctx.client.balance(&address)?;
            let value = serde_json::to_value(&b).expect("serializable");
            ctx.emit(value, || format!("{} {}", b.wallet_address, format_amount(b.balance)))
        }
        Command::Send { to, amount, units } => {
            let amount = parse_amount(&amount, units)?;
            let session = ctx.session()?;
            let from = ctx.client.session(&session)?.wallet_address;
            if !ctx.yes && !ctx.secrets.confirm(&format!("send {} to {to}?", format_amount(amount))) {
                return Err(CliError::usage("not confirmed (pass --yes to skip the prompt)"));
            }
            let r = ctx.client.send(&session, &from, &TransferRequest { to, amount })?;
            let value = serde_json::to_value(&r).expect("serializable");
            ctx.emit(value, || {
                format!(
                    "sent {} to {} (nonce {}); balance {}",
                    format_amount(r.amount),
                    r.to,
                    r.nonce,
                    format_amount(r.sender_balance)
                )
            })
        }
        Command::Recover { factor_id, factor_type, email } => {
            let session = ctx.session()?;
            let info = ctx.client.session(&session)?;
            let factor_type = match factor_type {
                Some(t) => t,
                None => {
                    let doc = fetch_policy(ctx, &info.wallet_address)?;
                    doc.factor(&factor_id)
                        .map(|f| f.factor_type().as_str().to_string())
                        .ok_or_else(|| CliError::usage(format!("no factor `{factor_id}` in this policy")))?
                }
            };
            let mut spec = FactorSpecInput::of_type(&factor_type);
            spec.address = email;
            if factor_type == "password" {
                spec.password = Some(
                    ctx.secret("WALLET_NEW_PASSWORD", "new password")
                        .ok_or_else(|| CliError::usage("a new password is required (WALLET_NEW_PASSWORD)"))?,
                );
            }
            let r = ctx.client.recover_factor(&session, &info.wallet_address, &factor_id, &spec)?;
            let value = serde_json::to_value(&r).expect("serializable");
            ctx.emit(value, || {
                let mut s = format!("replaced {} (policy v{})", r.factor_id, r.policy_version);
                if let Some(secret) = &r.secret {
                    s.push_str(&format!("\nnew secret {secret}\nStore it now. It is shown only once."));
                }
                s
            })
        }
        Command::InspectPolicy { key, file } => {
            let bytes = match (key, file) {
                (_, Some(path)) => std::fs::read(&path)
                    .map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?,
                (Some(key), None) => ctx.client.policy(&key)?,
                (None, None) => return Err(CliError::usage("give an address, an email or --file")),
            };
            let doc = PolicyDocument::parse(&bytes).map_err(|e| CliError::store(format!("malformed policy: {e}")))?;
            let (value, human) = describe_policy(&doc, bytes.len());
            ctx.emit(value, || human)?;
            check_attestation(&doc).map_err(|e| CliError::store(format!("attestation check failed: {e}")))
        }
        Command::Simulate { scenario, out } => {
            let s = Scenario::load(&scenario).map_err(|e| CliError::usage(format!("{e:#}")))?;
            let (net, trace) = s.run();
            let io_err = |e: io::Error| CliError::new(EXIT_OTHER, "io", e.to_string());
            if let Some(path) = out {
                let mut f = io::BufWriter::new(std::fs::File::create(&path).map_err(io_err)?);
                write_trace(&mut f, &trace).map_err(io_err)?;
                f.flush().map_err(io_err)?;
            }
            match ctx.format {
                OutputFormat::Structured => write_trace(ctx.out, &trace).map_err(io_err),
                OutputFormat::Human => {
                    for r in &trace {
                        let stored = r.deliveries.iter().filter(|d| d.outcome.stored()).count();
                        let evicted: usize = r.evictions.iter().map(|e| e.eviction.evicted.len()).sum();
                        writeln!(
                            ctx.out,
                            "round {:>3}: {} actions, {} deliveries ({} stored), {} deferred, {} evicted, records {:?}",
                            r.round,
                            r.actions.len(),
                            r.deliveries.len(),
                            stored,
                            r.deferred,
                            evicted,
                            r.records
                        )
                        .map_err(io_err)?;
                    }
                    writeln!(ctx.out, "finished after round {}", net.round()).map_err(io_err)
                }
            }
        }
        Command::Serve { .. } => unreachable!("handled before the client is built"),
        Command::Inbox { email } => {
            let r = ctx.client.inbox(&email)?;
            let value = serde_json::to_value(&r).expect("serializable");
            ctx.emit(value, || format!("{} {}", r.address, r.code))
        }
        Command::Faucet { address, amount, units } => {
            let amount = parse_amount(&amount, units)?;
            let b = ctx.client.faucet(&FaucetRequest { address, amount })?;
            let value = serde_json::to_value(&b).expect("serializable");
            ctx.emit(value, || format!("{} {}", b.wallet_address, format_amount(b.balance)))
        }
        Command::Health => {
            let h = ctx.client.health()?;
            let value = serde_json::to_value(&h).expect("serializable");
            ctx.emit(value, || {
                format!("{} (peer {} of {}, round {}, kdf {})", h.status, h.peer, h.peer_count, h.round, h.kdf_profile)
            })
        }
    }
}

fn serve(config: Option<PathBuf>, bind: Option<String>) -> CliResult<()> {
    let mut cfg = ServiceConfig::load(config.as_deref()).map_err(|e| CliError::usage(format!("{e:#}")))?;
    if let Some(b) = bind {
        cfg.bind = b;
    }
    let (_world, service) = WalletService::from_config(&cfg).map_err(|e| CliError::usage(format!("{e:#}")))?;
    let service = Arc::new(service);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new(EXIT_OTHER, "io", e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&cfg.bind)
            .await
            .map_err(|e| CliError::new(EXIT_NETWORK, "network", format!("binding {}: {e}", cfg.bind)))?;
        let addr = listener.local_addr().map_err(|e| CliError::new(EXIT_NETWORK, "network", e.to_string()))?;
        log::info!(
            "listening on http://{addr} (peer {} of {}, kdf {}, dev {})",
            cfg.peer,
            cfg.network.peer_count,
            cfg.kdf_profile,
            cfg.dev
        );
        println!("listening on http://{addr}");
        let app = crate::http::router(service, cfg.static_dir.as_deref());
        crate::http::serve(listener, app, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::new(EXIT_NETWORK, "network", e.to_string()))
    })
}

/// Runs the CLI with the given arguments and IO; returns the exit code.
pub fn run(args: impl IntoIterator<Item = String>, secrets: &dyn Secrets, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let format = cli.format;
    let result = match cli.command {
        Command::Serve { config, bind } => serve(config, bind),
        command => {
            let mut ctx = Ctx {
                client: Client::new(&cli.service_url),
                format,
                yes: cli.yes,
                secrets,
                out: &mut *out,
            };
            run_command(&mut ctx, command)
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match format {
                OutputFormat::Structured => {
                    let _ = writeln!(out, "{}", json!({"error": {"code": e.code, "message": e.message}}));
                }
                OutputFormat::Human => {
                    let _ = writeln!(err, "error: {}", e.message);
                }
            }
            e.exit_code
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args(), &Terminal, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amounts() {
        assert_eq!(parse_amount("1", false).unwrap(), 1_000_000);
        assert_eq!(parse_amount("0.05", false).unwrap(), 50_000);
        assert_eq!(parse_amount(".5", false).unwrap(), 500_000);
        assert_eq!(parse_amount("12", true).unwrap(), 12);
        for bad in ["", ".", "1.2345678", "-1", "1e3", "x"] {
            assert!(parse_amount(bad, false).is_err(), "{bad}");
        }
        assert_eq!(format_amount(1_500_000), "1.500000");
    }

    #[test]
    fn witness_env_names() {
        assert_eq!(witness_env_name("password"), "WALLET_WITNESS_PASSWORD");
        assert_eq!(witness_env_name("hmac-token.2"), "WALLET_WITNESS_HMAC_TOKEN_2");
    }

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(exit_code_for("threshold_not_met"), EXIT_AUTH);
        assert_eq!(exit_code_for("invalid_credentials"), EXIT_AUTH);
        assert_eq!(exit_code_for("store_rejected"), EXIT_STORE);
        assert_eq!(exit_code_for("invalid_request"), EXIT_USAGE);
        assert_eq!(exit_code_for("insufficient_funds"), EXIT_OTHER);
        let e: CliError = ClientError::Transport("refused".into()).into();
        assert_eq!(e.exit_code, EXIT_NETWORK);
    }
}
