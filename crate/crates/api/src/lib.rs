//! HTTP/JSON gateway to the rental ledger.
//!
//! Every route under `/api/{party}` acts as that party. Each party gets a
//! live [`ContractStore`](rental_core::store::ContractStore) the first time
//! it is addressed; contracts are referred to by the store's external ids.
//! Commands are synchronous: the response is sent once the commit is
//! reflected in the caller's store. `GET /api/{party}/events` streams store
//! events as server-sent events.

pub mod error;
mod routes;
pub mod state;

use std::future::IntoFuture;
use std::net::SocketAddr;

pub use error::{status_for, ApiError, ApiResult};
pub use routes::router;
pub use state::{AppState, ClockMode, ServerConfig};

/// Serves `state` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server on an ephemeral local port, for tests and embedding. Open
/// event streams keep a graceful shutdown waiting, so stopping aborts.
pub struct Running {
    pub addr: SocketAddr,
    pub state: AppState,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Running {
    pub async fn start(state: AppState) -> std::io::Result<Self> {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let task = tokio::spawn(axum::serve(listener, router(state.clone())).into_future());
        Ok(Running { addr, state, task })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        self.task.abort();
    }
}
