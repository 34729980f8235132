//! HTTP/JSON facade over the engine with a server-sent-events stream of
//! live state changes.
//!
//! Sessions are dev-mode only: `POST /sessions {"account": "member1"}` returns
//! a session id that later requests carry in the `x-session-id` header.

pub mod error;
pub mod routes;
pub mod state;

use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

pub use error::ApiError;
pub use routes::SESSION_HEADER;
pub use state::{ApiSession, AppState, EventEnvelope, Role, DEFAULT_EVENT_BUFFER};

pub fn router(state: AppState) -> Router {
    use routes::*;
    Router::new()
        .route("/sessions", post(open_session))
        .route("/session", get(current_session))
        .route("/blocks", get(blocks))
        .route("/accounts/{addr}", get(account))
        .route("/token/balances", get(token_balances))
        .route("/governor/proposals", get(proposals))
        .route("/governor/proposals/{id}", get(proposal))
        .route("/governor/propose", post(propose))
        .route("/governor/{id}/vote", post(vote))
        .route("/governor/{id}/queue", post(queue))
        .route("/governor/{id}/execute", post(execute))
        .route("/reservations", get(reservations))
        .route("/reserve", post(reserve))
        .route("/cancel", post(cancel))
        .route("/thresholds", get(thresholds))
        .route("/twin/environment", get(environment))
        .route("/twin/rooms", get(rooms))
        .route("/agent/decisions", get(decisions))
        .route("/assistant/message", post(assistant_message))
        .route("/assistant/sign", post(assistant_sign))
        .route("/sim/tick", post(sim_tick))
        .route("/sim/occupancy", post(sim_occupancy))
        .route("/chain/advance", post(chain_advance))
        .route("/events", get(events))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves the API on an already-bound listener until the task is dropped.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
