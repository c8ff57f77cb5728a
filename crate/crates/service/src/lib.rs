//! HTTP API over the assessment, knowledge-base and evaluation modules, with a
//! directory-backed document store.
//!
//! Endpoints:
//!
//! | method | path | purpose |
//! |---|---|---|
//! | POST | `/sessions` | start an assessment session |
//! | GET | `/sessions/{id}/question` | session snapshot with the next question |
//! | POST | `/sessions/{id}/answers` | answer the current question (`{index, value}`) |
//! | POST | `/sessions/{id}/finalize` | fit and store the profile |
//! | GET, POST | `/profiles` | list or upload profiles |
//! | GET | `/profiles/{id}` | stored profile document |
//! | GET, POST | `/kbs` | list or upload knowledge bases |
//! | GET | `/kbs/{id}` | knowledge base bytes as uploaded |
//! | POST | `/evaluate` | integrated ranking or mode comparison |
//! | POST | `/fit-beta` | fit a beta estimate and sample its density |
//!
//! Errors are JSON documents `{code, message, field?, details?}`; unknown ids
//! give 404, stale or premature session operations 409, and validation
//! failures 422.

pub mod documents;
pub mod error;
pub mod routes;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use error::ApiError;
pub use routes::router;
pub use store::Store;

pub const ADDR_ENV: &str = "MAUD_ADDR";
pub const DATA_DIR_ENV: &str = "MAUD_DATA_DIR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_DATA_DIR: &str = "maud-data";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
}

impl ServiceConfig {
    /// Reads `MAUD_ADDR` and `MAUD_DATA_DIR`, falling back to the defaults.
    pub fn from_env() -> Result<Self, std::net::AddrParseError> {
        let addr = std::env::var(ADDR_ENV).unwrap_or_else(|_| DEFAULT_ADDR.to_string());
        let data_dir = std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR));
        Ok(ServiceConfig {
            addr: addr.parse()?,
            data_dir,
        })
    }
}

/// Opens the store and serves until the listener fails.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let store = Arc::new(Store::open(&config.data_dir)?);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!(
        addr = %listener.local_addr()?,
        data_dir = %config.data_dir.display(),
        "serving"
    );
    axum::serve(listener, router(store)).await
}
