//! HTTP API over the template, sketch and generation pipelines, plus paint
//! sessions, persisted in a plain directory tree (see [`store`]).

use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use artvista_genai::BackendConfig;

mod api;
mod error;
pub mod session;
pub mod store;

pub use api::{
    parse_fill_request, parse_generate_request, parse_session_request, parse_template_query, router, AppState,
    MAX_UPLOAD_BYTES,
};
pub use error::{Result, ServiceError};
pub use session::{Fill, PaintSession};
pub use store::Store;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_DATA_DIR: &str = "artvista-data";
pub const ENV_PORT: &str = "ARTVISTA_PORT";
pub const ENV_DATA_DIR: &str = "ARTVISTA_DATA_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub genai: BackendConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            data_dir: PathBuf::from(DEFAULT_DATA_DIR),
            genai: BackendConfig::default(),
        }
    }
}

/// Binds `0.0.0.0:port` and serves until Ctrl-C.
pub async fn serve(cfg: ServiceConfig) -> std::io::Result<()> {
    let store = Store::open(&cfg.data_dir)?;
    let app = router(AppState::new(store, cfg.genai));
    let listener = tokio::net::TcpListener::bind(SocketAddr::from((Ipv4Addr::UNSPECIFIED, cfg.port))).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %cfg.data_dir.display(), "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
