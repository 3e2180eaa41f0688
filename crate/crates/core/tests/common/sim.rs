//! Simulator scenarios shared by the gossip tests and the acceptance run.

use chunkchain::ledger::ChainState;
use chunkchain::p2p::sim::{simulate, Action, NetworkModel, Scheduled, SimOutcome};
use chunkchain::p2p::{NodeId, ProtocolNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::chat_tx;

fn id(s: &str) -> NodeId {
    NodeId::from(s)
}

fn node(name: &str, chain: ChainState) -> ProtocolNode {
    ProtocolNode::new(id(name), chain)
}

pub fn mesh(names: &[String]) -> Vec<Scheduled> {
    let mut schedule = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            schedule.push(Scheduled::new(0, Action::Connect { node: id(a), peer: id(b) }));
        }
    }
    schedule
}

/// Five nodes, twenty transactions at random nodes, random mining.
pub fn gossip_run(seed: u64, model: &NetworkModel) -> SimOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain = ChainState::new("conv", 4).unwrap();
    let names: Vec<String> = (0..5).map(|i| format!("10.0.0.{i}:40124")).collect();
    let nodes = names.iter().map(|s| node(s, chain.clone())).collect();
    let mut schedule = mesh(&names);
    for t in 0..20u64 {
        let at = rng.gen_range(500..5_000);
        let who = &names[rng.gen_range(0..5)];
        let tx = chat_tx(t as u8 + 1, "s", format!("msg {t}").as_bytes(), at);
        schedule.push(Scheduled::new(at, Action::SubmitTx { node: id(who), tx }));
    }
    for _ in 0..4 {
        let at = rng.gen_range(1_000..6_000);
        schedule.push(Scheduled::new(at, Action::Mine { node: id(&names[rng.gen_range(0..5)]) }));
    }
    schedule.push(Scheduled::new(10_000, Action::Mine { node: id(&names[0]) }));
    simulate(nodes, schedule, model, seed).unwrap()
}

/// Two nodes each mining 15 blocks at random times.
pub fn mining_race(seed: u64) -> SimOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain = ChainState::new("race", 4).unwrap();
    let names = vec!["a:1".to_string(), "b:1".to_string()];
    let nodes = names.iter().map(|s| node(s, chain.clone())).collect();
    let mut schedule = mesh(&names);
    for name in &names {
        let mut at = 100;
        for _ in 0..15 {
            at += rng.gen_range(50..1_500);
            schedule.push(Scheduled::new(at, Action::Mine { node: id(name) }));
        }
    }
    let model = NetworkModel { min_latency_ms: 10, max_latency_ms: 120, drop_probability: 0.0 };
    simulate(nodes, schedule, &model, seed).unwrap()
}

