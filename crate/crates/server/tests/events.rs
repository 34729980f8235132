mod common;

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::*;
use dab_server::{router, AppState, EventEnvelope};
use http_body_util::BodyExt;
use serde_json::json;
use tower::ServiceExt;

/// An open SSE response, parsed frame by frame.
struct Stream {
    body: Body,
    pending: String,
}

impl Stream {
    async fn open(app: &Router, uri: &str, last_event_id: Option<u64>) -> Result<Self, (StatusCode, serde_json::Value)> {
        let mut req = Request::get(uri);
        if let Some(id) = last_event_id {
            req = req.header("last-event-id", id.to_string());
        }
        let resp = app.clone().oneshot(req.body(Body::empty()).unwrap()).await.unwrap();
        if resp.status() != StatusCode::OK {
            let status = resp.status();
            let bytes = resp.into_body().collect().await.unwrap().to_bytes();
            return Err((status, serde_json::from_slice(&bytes).unwrap()));
        }
        assert_eq!(resp.headers()["content-type"], "text/event-stream");
        Ok(Self { body: resp.into_body(), pending: String::new() })
    }

    /// Next event, checking that the SSE id matches the envelope sequence.
    async fn next(&mut self) -> EventEnvelope {
        loop {
            if let Some(end) = self.pending.find("\n\n") {
                let frame: String = self.pending.drain(..end + 2).collect();
                let mut id = None;
                let mut data = String::new();
                for line in frame.lines() {
                    if let Some(v) = line.strip_prefix("id:") {
                        id = Some(v.trim().parse::<u64>().unwrap());
                    } else if let Some(v) = line.strip_prefix("data:") {
                        data.push_str(v.trim_start());
                    }
                }
                if data.is_empty() {
                    continue; // keep-alive comment
                }
                let env: EventEnvelope = serde_json::from_str(&data).unwrap();
                assert_eq!(id, Some(env.sequence));
                return env;
            }
            let frame = tokio::time::timeout(Duration::from_secs(5), self.body.frame())
                .await
                .expect("event within 5 s")
                .expect("stream still open")
                .unwrap();
            if let Ok(bytes) = frame.into_data() {
                self.pending.push_str(std::str::from_utf8(&bytes).unwrap());
            }
        }
    }

    async fn take(&mut self, n: usize) -> Vec<EventEnvelope> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.next().await);
        }
        out
    }
}

fn next_sequence(state: &AppState) -> u64 {
    state.read().events.next_sequence()
}

async fn busy_history(app: &Router) {
    let s = session(app, "occupant").await;
    for (i, room) in ["BFH-201", "BFH-202", "BFH-203"].iter().enumerate() {
        let (status, _) = post(app, "/reserve", Some(&s), json!({ "room": room, "slot": format!("2024-09-1{i}T10:00") })).await;
        assert_eq!(status, StatusCode::OK);
    }
    post(app, "/sim/occupancy", None, json!({ "count": 8 })).await;
    let (status, _) = post(app, "/sim/tick", None, json!({ "seconds": 1200, "agent": true })).await;
    assert_eq!(status, StatusCode::OK);
    post(app, "/chain/advance", None, json!({ "blocks": 4 })).await;
}

#[tokio::test]
async fn replay_is_gap_free_and_resume_has_no_duplicates() {
    let (state, app) = app();
    busy_history(&app).await;
    let n = (next_sequence(&state) - 1) as usize;
    assert!(n > 10, "{n} events");
    let mut all = Stream::open(&app, "/events?from=1", None).await.unwrap();
    let events = all.take(n).await;
    let seqs: Vec<u64> = events.iter().map(|e| e.sequence).collect();
    assert_eq!(seqs, (1..=n as u64).collect::<Vec<_>>());
    for kind in ["block", "booking", "env_tick", "agent_decision"] {
        assert!(events.iter().any(|e| e.kind == kind), "no {kind} event");
    }
    // Every sealed block, genesis included, appears exactly once.
    let blocks = events.iter().filter(|e| e.kind == "block").count();
    assert_eq!(blocks, state.read().engine.chain().blocks().len());

    // Reconnect after seeing sequence 7.
    let mut resumed = Stream::open(&app, "/events", Some(7)).await.unwrap();
    let rest = resumed.take(n - 7).await;
    assert_eq!(rest.first().unwrap().sequence, 8);
    assert_eq!(rest, events[7..].to_vec());

    // Live events continue the same numbering.
    post(&app, "/chain/advance", None, json!({ "blocks": 1 })).await;
    let live = resumed.next().await;
    assert_eq!((live.sequence, live.kind.as_str()), (n as u64 + 1, "block"));
    assert_eq!(all.next().await, live);
}

#[tokio::test]
async fn a_vote_is_announced_within_its_block() {
    let (state, app) = app();
    let m1 = session(&app, "member1").await;
    let candidate = state.read().engine.account("candidate").unwrap();
    let (status, body) = post(
        &app,
        "/governor/propose",
        Some(&m1),
        json!({ "actions": [{ "kind": "add_member", "addr": candidate, "token_grant": "100" }], "description": "add" }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let id = body["proposal"].as_str().unwrap().to_string();
    post(&app, "/chain/advance", None, json!({ "blocks": 1 })).await;

    let mut live = Stream::open(&app, "/events", None).await.unwrap();
    let (status, body) = post(&app, &format!("/governor/{id}/vote"), Some(&m1), json!({ "support": "for" })).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let block_number = body["receipt"]["block_number"].as_u64().unwrap();
    let mut seen_state = false;
    loop {
        let e = live.next().await;
        match e.kind.as_str() {
            "proposal_state" => {
                assert_eq!(e.payload, serde_json::from_value(json!({ "kind": "proposal_state", "id": id, "state": "active" })).unwrap());
                seen_state = true;
            }
            "block" => {
                assert!(seen_state, "block sealed before the vote was announced");
                let number = serde_json::to_value(&e.payload).unwrap()["number"].as_u64().unwrap();
                assert_eq!(number, block_number);
                break;
            }
            other => panic!("unexpected {other}"),
        }
    }
    let view = get(&app, &format!("/governor/proposals/{id}")).await;
    assert_eq!(view["tally"]["for_votes"], "10000");
    assert_eq!(view["state"], "active");
}

#[tokio::test]
async fn a_lagging_subscriber_catches_up_from_the_buffer() {
    let (state, app) = app();
    let mut s = Stream::open(&app, "/events?from=1", None).await.unwrap();
    // Far more events than the live channel holds, while nobody reads.
    post(&app, "/chain/advance", None, json!({ "blocks": 3000 })).await;
    let n = next_sequence(&state) - 1;
    let events = s.take(n as usize).await;
    assert!(events.windows(2).all(|w| w[1].sequence == w[0].sequence + 1));
    assert_eq!(events.last().unwrap().sequence, n);
}

#[tokio::test]
async fn evicted_sequences_are_too_old() {
    let state = AppState::with_event_buffer(engine(), 5);
    let app = router(state.clone());
    post(&app, "/chain/advance", None, json!({ "blocks": 12 })).await;
    let next = next_sequence(&state);
    // Genesis plus twelve blocks; only 9..=13 are retained.
    assert_eq!(next, 14);
    let Err((status, body)) = Stream::open(&app, "/events?from=1", None).await else { panic!("accepted an evicted sequence") };
    assert_eq!((status, error_code(&body)), (StatusCode::GONE, "SequenceTooOld"));
    // The oldest retained event is still replayable.
    let mut ok = Stream::open(&app, "/events?from=9", None).await.unwrap();
    assert_eq!(ok.take(5).await.iter().map(|e| e.sequence).collect::<Vec<_>>(), vec![9, 10, 11, 12, 13]);
    let Err((status, body)) = Stream::open(&app, "/events?from=40", None).await else { panic!("accepted a future sequence") };
    assert_eq!((status, error_code(&body)), (StatusCode::BAD_REQUEST, "FutureSequence"));
}

#[test]
fn default_buffer_holds_ten_thousand_events() {
    assert_eq!(dab_server::DEFAULT_EVENT_BUFFER, 10_000);
    let state = AppState::new(engine());
    state.write(|e| e.advance_blocks(10_050)).unwrap();
    let inner = state.read();
    assert_eq!(inner.events.next_sequence(), 10_052);
    assert!(inner.events.replay_from(51).is_err());
    assert_eq!(inner.events.replay_from(52).unwrap().len(), 10_000);
}
