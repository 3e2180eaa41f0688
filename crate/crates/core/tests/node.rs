mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::Duration;

use chunkchain::chat::{ClassroomKey, UNREADABLE};
use chunkchain::ledger::{mine, BlockHeader, ChainState, Digest};
use chunkchain::missions::default_pack;
use chunkchain::node::{run_until, ConnId, NodeConfig, NodeCore, Output, Target, MANUAL_DIFFICULTY};
use chunkchain::p2p::NodeId;
use common::client::{free_port, http_get, Client};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

fn core_with(id: &str, passphrase: &str, seed: u64) -> NodeCore {
    let chain = ChainState::new("demo", 4).unwrap();
    let key = ClassroomKey::derive("demo", passphrase);
    NodeCore::new(NodeId::from(id), chain, default_pack(), key, ChaCha20Rng::seed_from_u64(seed))
}

fn core() -> NodeCore {
    core_with("10.0.0.1:40124", "secret123", 1)
}

fn send(core: &mut NodeCore, conn: ConnId, kind: &str, body: Value, now: u64) -> (Value, Output) {
    let frame = json!({ "req_id": 7, "type": kind, "body": body });
    let out = core.client_text(conn, &frame.to_string(), now);
    let (target, first) = &out.frames[0];
    assert_eq!(*target, Target::Conn(conn));
    let reply = serde_json::to_value(first).unwrap();
    (reply, out)
}

fn join(core: &mut NodeCore, conn: ConnId, nick: &str) -> String {
    let (reply, _) = send(core, conn, "join", json!({ "nickname": nick }), 0);
    reply["body"]["token"].as_str().unwrap().to_owned()
}

fn events(out: &Output) -> Vec<(Target, Value)> {
    out.frames[1..]
        .iter()
        .map(|(t, f)| (*t, serde_json::to_value(f).unwrap()))
        .collect()
}

/// Answers every level-1 quiz correctly.
fn reach_level_two(core: &mut NodeCore, conn: ConnId, token: &str) -> Output {
    let pack = default_pack();
    let mut last = Output::default();
    for m in pack.missions_at(1) {
        let answer = m.quiz.as_ref().unwrap().correct_index;
        let body = json!({ "token": token, "mission_id": m.id, "answer_index": answer });
        last = send(core, conn, "quiz_answer", body, 100).1;
    }
    last
}

#[test]
fn join_deduplicates_and_starts_at_level_one() {
    let mut c = core();
    let (a, _) = send(&mut c, 1, "join", json!({ "nickname": "alice" }), 0);
    let (b, _) = send(&mut c, 2, "join", json!({ "nickname": "alice" }), 0);
    assert_eq!(a["req_id"], 7);
    assert_eq!(a["type"], "join");
    assert_eq!(a["body"]["nickname"], "alice");
    assert_eq!(b["body"]["nickname"], "alice-2");
    assert_eq!(a["body"]["level"], 1);
    let missions = a["body"]["missions"]["missions"].as_array().unwrap();
    assert_eq!(missions.len(), 4, "only level-1 missions are listed");
    assert!(missions.iter().all(|m| m.get("correct_index").is_none() && m["quiz"].is_null()));
    let (err, _) = send(&mut c, 3, "join", json!({ "nickname": "  " }), 0);
    assert_eq!(err["type"], "error");
}

#[test]
fn get_block_from_level_one_is_locked() {
    let mut c = core();
    let token = join(&mut c, 1, "bob");
    for (kind, extra) in [
        ("get_block", json!({ "index": 0 })),
        ("get_tx", json!({ "tx_id": Digest::ZERO })),
        ("get_chain_summary", json!({})),
        ("get_peers", json!({})),
    ] {
        let mut body = extra;
        body["token"] = json!(token);
        let (reply, out) = send(&mut c, 1, kind, body, 0);
        assert_eq!(reply["type"], "error", "{kind}");
        assert_eq!(reply["body"]["code"], "locked");
        assert_eq!(reply["body"]["required_level"], 2);
        assert_eq!(out.frames.len(), 1);
    }
}

#[test]
fn level_two_unlocks_explorer_and_announces_achievement() {
    let mut c = core();
    let token = join(&mut c, 1, "carol");
    let out = reach_level_two(&mut c, 1, &token);
    let ev = events(&out);
    let kinds: Vec<&str> = ev.iter().map(|(_, v)| v["type"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"mission_completed"));
    assert!(kinds.contains(&"level_up"));
    assert!(kinds.contains(&"leaderboard_changed"));
    let level_up = ev.iter().find(|(_, v)| v["type"] == "level_up").unwrap();
    assert_eq!(level_up.0, Target::Conn(1));
    assert_eq!(level_up.1["body"]["level"], 2);
    assert!(level_up.1.get("req_id").is_none());

    let (reply, _) = send(&mut c, 1, "get_block", json!({ "token": token, "index": 0 }), 200);
    assert_eq!(reply["type"], "get_block");
    assert_eq!(reply["body"]["prev_hash"], Digest::ZERO.to_hex());
    let (reply, _) = send(&mut c, 1, "get_block", json!({ "token": token, "index": 1 }), 200);
    assert_eq!(reply["body"]["code"], "not_found");
    let (board, _) = send(&mut c, 1, "get_leaderboard", json!({ "token": token }), 200);
    assert_eq!(board["body"]["entries"], json!([{ "nickname": "carol", "level": 2 }]));
}

#[test]
fn post_broadcasts_new_message_to_every_client() {
    let mut c = core();
    let token = join(&mut c, 1, "dave");
    join(&mut c, 2, "erin");
    let (reply, out) = send(&mut c, 1, "post", json!({ "token": token, "text": "hello class" }), 1_000);
    assert_eq!(reply["type"], "post");
    assert_eq!(reply["body"]["message"]["status"]["state"], "pending");
    let new_messages: Vec<_> = events(&out).into_iter().filter(|(_, v)| v["type"] == "new_message").collect();
    assert_eq!(new_messages.len(), 1);
    assert_eq!(new_messages[0].0, Target::All);
    assert_eq!(new_messages[0].1["body"]["plaintext"], "hello class");

    let (again, _) = send(&mut c, 1, "post", json!({ "token": token, "text": "too soon" }), 1_100);
    assert_eq!(again["body"]["code"], "rate_limited");
    assert_eq!(again["body"]["retry_after_ms"], 400);
    let long = "x".repeat(513);
    let (too_long, _) = send(&mut c, 1, "post", json!({ "token": token, "text": long }), 5_000);
    assert_eq!(too_long["body"]["code"], "rejected");
}

#[test]
fn invalid_token_and_malformed_requests() {
    let mut c = core();
    let (r, _) = send(&mut c, 1, "get_feed", json!({ "token": "nope" }), 0);
    assert_eq!(r["body"]["code"], "invalid_token");
    let (r, _) = send(&mut c, 1, "get_feed", json!({}), 0);
    assert_eq!(r["body"]["code"], "malformed_request");
    let (r, _) = send(&mut c, 1, "launch_rockets", json!({}), 0);
    assert_eq!(r["body"]["code"], "unknown_request");
    let out = c.client_text(1, "{not json", 0);
    let r = serde_json::to_value(&out.frames[0].1).unwrap();
    assert_eq!(r["type"], "error");
    assert_eq!(r["body"]["code"], "malformed_request");
}

#[test]
fn node_recorded_events_cannot_be_forged() {
    let mut c = core();
    let token = join(&mut c, 1, "fay");
    reach_level_two(&mut c, 1, &token);
    for event in ["posted_message", "manual_nonce_found"] {
        let (r, _) = send(&mut c, 1, "action_event", json!({ "token": token, "event": event }), 0);
        assert_eq!(r["body"]["code"], "rejected", "{event}");
    }
    let (r, _) = send(&mut c, 1, "action_event", json!({ "token": token, "event": "viewed_peers" }), 0);
    assert_eq!(r["type"], "action_event");
}

fn header_of(template: &Value) -> BlockHeader {
    BlockHeader {
        index: template["index"].as_u64().unwrap(),
        prev_hash: template["prev_hash"].as_str().unwrap().parse().unwrap(),
        tx_root: template["tx_root"].as_str().unwrap().parse().unwrap(),
        timestamp: template["timestamp"].as_u64().unwrap(),
        difficulty: template["difficulty"].as_u64().unwrap() as u32,
        nonce: 0,
        miner_nick: template["miner_nick"].as_str().unwrap().to_owned(),
    }
}

#[test]
fn qualifying_nonce_completes_manual_mining() {
    let mut c = core();
    let token = join(&mut c, 1, "gus");
    reach_level_two(&mut c, 1, &token);
    let (probe, out) = send(&mut c, 1, "try_nonce", json!({ "token": token, "nonce": 0 }), 500);
    assert_eq!(probe["body"]["template"]["difficulty"], MANUAL_DIFFICULTY);
    let header = header_of(&probe["body"]["template"]);
    let found = mine(&header, 0, 1 << 24).unwrap();
    if found.nonce == 0 {
        assert_eq!(probe["body"]["meets"], true);
        return;
    }
    assert_eq!(probe["body"]["meets"], false);
    assert_eq!(out.frames.len(), 1);
    let (hit, out) = send(&mut c, 1, "try_nonce", json!({ "token": token, "nonce": found.nonce }), 500);
    assert_eq!(hit["body"]["meets"], true);
    assert_eq!(hit["body"]["digest"], found.digest.to_hex());
    assert!(hit["body"]["digest"].as_str().unwrap().starts_with("00"));
    let completed: Vec<_> = events(&out)
        .into_iter()
        .filter(|(_, v)| v["type"] == "mission_completed")
        .map(|(_, v)| v["body"]["mission_id"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(completed, vec!["mine-by-hand".to_owned()]);
}

#[test]
fn closing_the_connection_ends_its_sessions() {
    let mut c = core();
    let token = join(&mut c, 9, "hal");
    assert_eq!(c.session_count(), 1);
    c.client_closed(9);
    assert_eq!(c.session_count(), 0);
    let (r, _) = send(&mut c, 9, "get_feed", json!({ "token": token }), 0);
    assert_eq!(r["body"]["code"], "invalid_token");
}

/// Delivers peer traffic between in-memory cores until none is left.
fn pump(cores: &mut [NodeCore], mut pending: Vec<chunkchain::p2p::Outbound>, now: u64) {
    while let Some(ob) = pending.pop() {
        let Some(dest) = cores.iter_mut().find(|c| *c.id() == ob.to) else {
            continue;
        };
        pending.extend(dest.peer_message(ob.msg, now).peers);
    }
}

#[test]
fn wrong_passphrase_peer_sees_unreadable_messages() {
    let mut cores = vec![
        core_with("10.0.0.1:40124", "secret123", 1),
        core_with("10.0.0.2:40124", "different-pass", 2),
    ];
    let hello = cores[0].connect(NodeId::from("10.0.0.2:40124"), 0).peers;
    pump(&mut cores, hello, 0);
    assert_eq!(cores[0].status().peers, 1);
    assert_eq!(cores[1].status().peers, 1);

    let token = join(&mut cores[0], 1, "ida");
    let (_, out) = send(&mut cores[0], 1, "post", json!({ "token": token, "text": "can you read this?" }), 10);
    pump(&mut cores, out.peers, 10);

    let other = join(&mut cores[1], 1, "jon");
    let (feed, _) = send(&mut cores[1], 1, "get_feed", json!({ "token": other }), 20);
    let messages = feed["body"]["messages"].as_array().unwrap();
    assert_eq!(messages.len(), 1);
    assert_eq!(messages[0]["plaintext"], UNREADABLE);
    assert_eq!(messages[0]["nickname"], "ida");
    let (own, _) = send(&mut cores[0], 1, "get_feed", json!({ "token": token }), 20);
    assert_eq!(own["body"]["messages"][0]["plaintext"], "can you read this?");
}

#[test]
fn mined_block_confirms_and_notifies() {
    let mut c = core();
    let token = join(&mut c, 1, "kim");
    send(&mut c, 1, "post", json!({ "token": token, "text": "to be mined" }), 50);
    let template = c.mining_template(60).unwrap();
    let found = mine(&template.header, 0, u64::MAX).unwrap();
    let out = c.mined(template.with_nonce(found.nonce));
    let ev: Vec<(Target, Value)> = out
        .frames
        .iter()
        .map(|(t, f)| (*t, serde_json::to_value(f).unwrap()))
        .collect();
    let mined = ev.iter().find(|(_, v)| v["type"] == "block_mined").unwrap();
    assert_eq!(mined.0, Target::All);
    assert_eq!(mined.1["body"]["index"], 1);
    let (feed, _) = send(&mut c, 1, "get_feed", json!({ "token": token }), 70);
    assert_eq!(feed["body"]["messages"][0]["status"], json!({ "state": "confirmed", "block_index": 1 }));
    assert!(c.mining_template(80).is_none());
}

#[derive(Debug, Clone)]
enum Op {
    Quiz(usize, usize),
    Event(usize),
    Nonce(u64),
    Explore(usize),
    Post,
    Missions,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..8, 0usize..5).prop_map(|(m, a)| Op::Quiz(m, a)),
        (0usize..3).prop_map(Op::Event),
        any::<u64>().prop_map(Op::Nonce),
        (0usize..4).prop_map(Op::Explore),
        Just(Op::Post),
        Just(Op::Missions),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn no_locked_response_reaches_an_underleveled_session(ops in proptest::collection::vec(op(), 1..60)) {
        let mut c = core();
        let token = join(&mut c, 1, "prop");
        let ids: Vec<String> = default_pack().missions.iter().map(|m| m.id.clone()).collect();
        let mut level = 1u64;
        let mut now = 0u64;
        for op in ops {
            now += 600;
            let (kind, body) = match op {
                Op::Quiz(m, a) => ("quiz_answer", json!({ "mission_id": ids[m], "answer_index": a })),
                Op::Event(e) => {
                    let event = ["viewed_block", "viewed_transaction", "viewed_peers"][e];
                    ("action_event", json!({ "event": event }))
                }
                Op::Nonce(n) => ("try_nonce", json!({ "nonce": n })),
                Op::Explore(i) => (
                    ["get_block", "get_tx", "get_chain_summary", "get_peers"][i],
                    json!({ "index": 0, "tx_id": Digest::ZERO }),
                ),
                Op::Post => ("post", json!({ "text": "hi" })),
                Op::Missions => ("get_missions", json!({})),
            };
            let mut body = body;
            body["token"] = json!(token);
            let (reply, out) = send(&mut c, 1, kind, body, now);
            let explorer = kind.starts_with("get_") && !matches!(kind, "get_missions" | "get_feed" | "get_leaderboard");
            if explorer && level < 2 {
                prop_assert_eq!(&reply["body"]["code"], "locked");
            }
            if explorer && level >= 2 {
                prop_assert_ne!(&reply["body"]["code"], "locked");
            }
            if kind == "get_missions" {
                let listed = reply["body"]["missions"].as_array().unwrap();
                prop_assert!(listed.iter().all(|m| m["level"].as_u64().unwrap() <= level));
            }
            for (_, ev) in events(&out) {
                if ev["type"] == "level_up" {
                    let new_level = ev["body"]["level"].as_u64().unwrap();
                    prop_assert!(new_level > level);
                    level = new_level;
                }
            }
        }
    }
}

fn node_config(tcp: u16, api: u16, peers: Vec<String>) -> NodeConfig {
    NodeConfig {
        classroom_name: "demo".into(),
        classroom_passphrase: "secret123".into(),
        bind_host: "127.0.0.1".into(),
        advertise_host: Some("127.0.0.1".into()),
        listen_tcp: tcp,
        client_api: api,
        discovery: false,
        static_peers: peers,
        difficulty: 6,
        auto_mine_interval_ms: 500,
        ..NodeConfig::default()
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_broadcast_and_confirmation() {
    let (tcp, api) = (free_port(), free_port());
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let node = tokio::spawn(run_until(node_config(tcp, api, vec![]), async {
        let _ = stopped.await;
    }));

    let mut alice = Client::connect(api).await;
    let mut bob = Client::connect(api).await;
    let (code, body) = http_get(api, "/healthz").await;
    assert_eq!((code, body.as_str()), (200, "ok"));
    let (code, body) = http_get(api, "/").await;
    assert_eq!(code, 200);
    assert!(body.contains("<html"));
    let (code, body) = http_get(api, "/status").await;
    assert_eq!(code, 200);
    let status: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(status["tip_index"], 0);
    assert_eq!(status["peers"], 0);

    alice.join("alice").await;
    bob.join("bob").await;
    let reply = alice.request("post", json!({ "text": "over the wire" })).await;
    assert_eq!(reply["type"], "post");
    let tx_id = reply["body"]["message"]["tx_id"].clone();
    for client in [&mut alice, &mut bob] {
        let ev = client
            .wait_event("new_message", Duration::from_secs(5), |b| b["tx_id"] == tx_id)
            .await
            .expect("new_message pushed");
        assert_eq!(ev["body"]["plaintext"], "over the wire");
        let mined = client
            .wait_event("block_mined", Duration::from_secs(10), |b| {
                b["transactions"].as_array().unwrap().contains(&tx_id)
            })
            .await
            .expect("block_mined pushed");
        assert_eq!(mined["body"]["index"], 1);
    }
    let err = bob.request("get_chain_summary", json!({})).await;
    assert_eq!(err["body"]["code"], "locked");

    alice.close().await;
    bob.close().await;
    stop.send(()).unwrap();
    node.await.unwrap().unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn two_nodes_share_messages_over_tcp() {
    let (tcp_a, api_a, tcp_b, api_b) = (free_port(), free_port(), free_port(), free_port());
    let (stop_a, rx_a) = tokio::sync::oneshot::channel::<()>();
    let (stop_b, rx_b) = tokio::sync::oneshot::channel::<()>();
    let mut cfg_a = node_config(tcp_a, api_a, vec![]);
    cfg_a.auto_mine_interval_ms = 0;
    let cfg_b = node_config(tcp_b, api_b, vec![format!("127.0.0.1:{tcp_a}")]);
    let a = tokio::spawn(run_until(cfg_a, async {
        let _ = rx_a.await;
    }));
    let b = tokio::spawn(run_until(cfg_b, async {
        let _ = rx_b.await;
    }));

    let mut on_a = Client::connect(api_a).await;
    let mut on_b = Client::connect(api_b).await;
    on_a.join("ann").await;
    on_b.join("ben").await;
    let mut peered = false;
    for _ in 0..100 {
        let (_, body) = http_get(api_a, "/status").await;
        let status: Value = serde_json::from_str(&body).unwrap();
        if status["peers"] == 1 {
            peered = true;
            break;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    assert!(peered, "nodes did not peer");

    let reply = on_a.request("post", json!({ "text": "from node a" })).await;
    let tx_id = reply["body"]["message"]["tx_id"].clone();
    let seen = on_b
        .wait_event("new_message", Duration::from_secs(10), |b| b["tx_id"] == tx_id)
        .await
        .expect("gossiped message reaches the other node");
    assert_eq!(seen["body"]["plaintext"], "from node a");
    // Only node b mines; node a learns the block by gossip.
    on_a.wait_event("block_mined", Duration::from_secs(10), |b| {
        b["transactions"].as_array().unwrap().contains(&tx_id)
    })
    .await
    .expect("block from node b reaches node a");

    stop_a.send(()).unwrap();
    stop_b.send(()).unwrap();
    a.await.unwrap().unwrap();
    b.await.unwrap().unwrap();
}

async fn peer_count(api: u16) -> u64 {
    let (_, body) = http_get(api, "/status").await;
    serde_json::from_str::<Value>(&body).unwrap()["peers"].as_u64().unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn beacons_peer_two_nodes_within_ten_seconds() {
    let discovery_port = {
        let probe = std::net::UdpSocket::bind("0.0.0.0:0").unwrap();
        probe.local_addr().unwrap().port()
    };
    let mut stops = Vec::new();
    let mut nodes = Vec::new();
    let mut apis = Vec::new();
    for _ in 0..2 {
        let api = free_port();
        let mut cfg = node_config(free_port(), api, vec![]);
        cfg.discovery = true;
        cfg.discovery_port = discovery_port;
        let (stop, rx) = tokio::sync::oneshot::channel::<()>();
        nodes.push(tokio::spawn(run_until(cfg, async {
            let _ = rx.await;
        })));
        stops.push(stop);
        apis.push(api);
    }
    let started = std::time::Instant::now();
    let mut peered = false;
    while started.elapsed() < Duration::from_secs(10) {
        tokio::time::sleep(Duration::from_millis(200)).await;
        if peer_count(apis[0]).await == 1 && peer_count(apis[1]).await == 1 {
            peered = true;
            break;
        }
    }
    for stop in stops {
        stop.send(()).unwrap();
    }
    for node in nodes {
        node.await.unwrap().unwrap();
    }
    assert!(peered, "no peering after {:?}", started.elapsed());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn occupied_port_is_reported() {
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let taken = holder.local_addr().unwrap().port();
    let err = run_until(node_config(taken, free_port(), vec![]), async {}).await.unwrap_err();
    assert!(err.to_string().contains(&format!("port {taken} is already in use")), "{err}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chunkchain"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(name)
}

#[test]
fn cli_unknown_flag_exits_two() {
    let out = bin().args(["node", "start", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn cli_packs_validate() {
    let ok = bin().args(["packs", "validate"]).arg(data("packs/default.json")).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("8 missions over 2 levels"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"version":1,"title":"t","missions":[
  {"id":"a","level":1,"kind":"action","prompt":"p","action_event":"viewed_block"},
  {"id":"a","level":3,"kind":"action","prompt":"p","action_event":"viewed_peers"}
]}"#,
    )
    .unwrap();
    let out = bin().args(["packs", "validate"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("violation"), "{text}");
    assert!(text.contains("levels must be contiguous"), "{text}");
}

#[test]
fn cli_analytics_hits_prints_two_sorted_columns() {
    let out = bin().args(["analytics", "hits"]).arg(data("examples-data/topics.csv")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Score (h_p)") && text.contains("Score (a_p)"));

    let out = bin()
        .args(["analytics", "hits", "--json"])
        .arg(data("examples-data/topics.csv"))
        .output()
        .unwrap();
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for column in ["hubs", "authorities"] {
        let scores: Vec<f64> = report[column]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["score"].as_f64().unwrap())
            .collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]), "{column} sorted");
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn cli_analytics_assess_reports_and_errors() {
    for test in ["t", "ancova", "cor"] {
        let out = bin()
            .args(["analytics", "assess", "--json", "--test", test])
            .arg(data("examples-data/records.csv"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{test}: {}", String::from_utf8_lossy(&out.stderr));
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        let p = report["results"][0]["report"]["p"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    let dir = tempfile::tempdir().unwrap();
    let no_group = dir.path().join("no_group.csv");
    std::fs::write(&no_group, "student_id,cohort,pretest,posttest,grade\ns1,last,10,20,2\n").unwrap();
    let out = bin().args(["analytics", "assess", "--test", "t"]).arg(&no_group).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("group"));

    let no_grades = dir.path().join("no_grades.csv");
    std::fs::write(
        &no_grades,
        "student_id,group,cohort,pretest,posttest,grade\ns1,A,last,10,20,\ns2,P,last,12,22,\ns3,B,last,11,25,\n",
    )
    .unwrap();
    let out = bin().args(["analytics", "assess", "--test", "cor"]).arg(&no_grades).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grade"));

    let bad_row = dir.path().join("bad_row.csv");
    std::fs::write(
        &bad_row,
        "student_id,group,cohort,pretest,posttest,grade\ns1,A,last,10,20,1\ns2,Q,last,12,22,2\n",
    )
    .unwrap();
    let out = bin().args(["analytics", "assess", "--test", "t"]).arg(&bad_row).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn cli_node_status_against_fresh_node() {
    let (tcp, api) = (free_port(), free_port());
    let mut child = bin()
        .args(["node", "start", "--classroom", "demo", "--passphrase", "secret123", "--discovery", "false"])
        .args(["--bind", "127.0.0.1", "--tcp-port", &tcp.to_string(), "--api-port", &api.to_string()])
        .spawn()
        .unwrap();
    let mut status = None;
    for _ in 0..100 {
        let out = bin()
            .args(["node", "status", "--json", "--api", &format!("127.0.0.1:{api}")])
            .output()
            .unwrap();
        if out.status.success() {
            status = Some(serde_json::from_slice::<Value>(&out.stdout).unwrap());
            break;
        }
        std::thread::sleep(Duration::from_millis(100));
    }
    unsafe { libc::kill(child.id() as i32, libc::SIGINT) };
    let exit = child.wait().unwrap();
    let status = status.expect("node answered status");
    assert_eq!(status["tip_index"], 0);
    assert_eq!(status["peers"], 0);
    assert_eq!(status["sessions"], 0);
    assert_eq!(status["mempool"], 0);
    assert_eq!(exit.code(), Some(0));

    let out = bin().args(["node", "status", "--api", "127.0.0.1:1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
