mod common;

use chunkchain::ledger::{
    make_genesis, mine, select_chain, try_nonce, validate_block, validate_chain, Block, ChainState,
    Digest, Transaction,
};
use common::{build_chain, chat_tx, seal};
use proptest::prelude::*;

#[test]
fn genesis_validates_without_predecessor() {
    let g = make_genesis("demo", 8).unwrap();
    assert_eq!(validate_block(&g, None), Ok(()));
}

#[test]
fn wrong_prev_hash_is_named() {
    let chain = build_chain(4, 2, 1);
    let mut block = chain.block(2).unwrap().clone();
    block.header.prev_hash = Digest::of(b"elsewhere");
    let err = validate_block(&block, chain.block(1)).unwrap_err();
    assert_eq!(err.rule(), "prev-hash-mismatch");
}

#[test]
fn too_many_transactions_rejected() {
    let chain = ChainState::new("cap", 0).unwrap();
    let txs: Vec<Transaction> = (0..65).map(|i| chat_tx(1, "a", &[i as u8], i)).collect();
    let block = seal(Block::template(chain.tip(), txs, 1, 0, "m"));
    assert_eq!(
        validate_block(&block, Some(chain.tip())).unwrap_err().rule(),
        "too-many-transactions"
    );
}

#[test]
fn insufficient_work_rejected() {
    let chain = ChainState::new("work", 12).unwrap();
    let template = chain.block_template("m", 5);
    // Pick a nonce that fails the target.
    let nonce = (0..).find(|&n| !try_nonce(&template.header, n).meets).unwrap();
    let block = template.with_nonce(nonce);
    assert_eq!(
        validate_block(&block, Some(chain.tip())).unwrap_err().rule(),
        "insufficient-work"
    );
}

#[test]
fn clock_skew_allowance() {
    let mut chain = ChainState::new("skew", 0).unwrap();
    chain.extend(seal(chain.block_template("m", 500_000))).unwrap();
    let ok = seal(chain.block_template("m", 500_000 - 120_000));
    assert_eq!(validate_block(&ok, Some(chain.tip())), Ok(()));
    let late = seal(chain.block_template("m", 500_000 - 120_001));
    assert_eq!(
        validate_block(&late, Some(chain.tip())).unwrap_err().rule(),
        "timestamp-too-early"
    );
}

#[test]
fn every_payload_byte_mutation_is_caught() {
    let chain = build_chain(8, 1, 3);
    let block = chain.block(1).unwrap();
    let prev = chain.block(0).unwrap();
    for (t, tx) in block.transactions.iter().enumerate() {
        for i in 0..tx.payload.len() {
            let mut tampered = block.clone();
            tampered.transactions[t].payload[i] ^= 0x01;
            let err = validate_block(&tampered, Some(prev)).unwrap_err();
            assert!(
                matches!(err.rule(), "tx-root-mismatch" | "invalid-transaction"),
                "tx {t} byte {i}: {err}"
            );
        }
    }
}

#[test]
fn mutations_in_other_transaction_fields_are_caught() {
    let chain = build_chain(8, 1, 2);
    let block = chain.block(1).unwrap();
    let prev = chain.block(0).unwrap();
    let mut cases: Vec<Block> = Vec::new();
    for i in 0..32 {
        let mut b = block.clone();
        b.transactions[0].author[i] ^= 0x80;
        cases.push(b);
        let mut b = block.clone();
        let mut id = *b.transactions[0].id.as_bytes();
        id[i] ^= 1;
        b.transactions[0].id = Digest::from_bytes(id);
        cases.push(b);
    }
    for i in 0..64 {
        let mut b = block.clone();
        b.transactions[1].signature[i] ^= 0x04;
        cases.push(b);
    }
    let mut b = block.clone();
    b.transactions[1].timestamp += 1;
    cases.push(b);
    let mut b = block.clone();
    b.transactions[1].author_nick.push('x');
    cases.push(b);
    for tampered in cases {
        assert!(validate_block(&tampered, Some(prev)).is_err());
    }
}

#[test]
fn longer_valid_candidate_is_adopted() {
    let local = build_chain(4, 5, 1);
    assert_eq!(local.blocks().len(), 6);
    let mut longer = local.clone();
    longer.extend(seal(longer.block_template("other", 99_000))).unwrap();
    let sel = select_chain(&local, &longer.blocks()[6..]).unwrap();
    assert!(sel.adopted);
    assert_eq!(sel.state.tip_hash(), longer.tip_hash());
}

#[test]
fn equal_length_tie_breaks_on_smaller_tip() {
    let base = build_chain(4, 2, 0);
    let mut a = base.clone();
    a.extend(seal(a.block_template("alice", 50_000))).unwrap();
    let mut b = base.clone();
    b.extend(seal(b.block_template("bob", 50_000))).unwrap();
    let (small, large) = if a.tip_hash() < b.tip_hash() { (a, b) } else { (b, a) };
    let fork = &small.blocks()[3..];
    let sel = select_chain(&large, fork).unwrap();
    assert!(sel.adopted);
    assert_eq!(sel.state.tip_hash(), small.tip_hash());
    assert_eq!(sel.abandoned.len(), 1);
    let sel = select_chain(&small, &large.blocks()[3..]).unwrap();
    assert!(!sel.adopted);
    assert_eq!(sel.state, small);
}

#[test]
fn candidate_with_invalid_block_is_rejected() {
    let local = build_chain(4, 5, 1);
    let mut longer = local.clone();
    longer.extend(seal(longer.block_template("x", 90_000))).unwrap();
    longer.extend(seal(longer.block_template("x", 91_000))).unwrap();
    let mut candidate = longer.blocks()[6..].to_vec();
    candidate[0].header.nonce ^= 0xdead_beef;
    assert!(select_chain(&local, &candidate).is_err());
}

#[test]
fn reorg_returns_abandoned_transactions_to_mempool() {
    let base = build_chain(4, 1, 0);
    let mut a = base.clone();
    let orphaned = chat_tx(3, "carol", b"only on fork a", 7);
    a.mempool_add(orphaned.clone()).unwrap();
    a.extend(seal(a.block_template("a", 20_000))).unwrap();
    assert_eq!(a.mempool_len(), 0);

    let mut b = base.clone();
    b.extend(seal(b.block_template("b", 20_000))).unwrap();
    b.extend(seal(b.block_template("b", 21_000))).unwrap();

    let sel = select_chain(&a, &b.blocks()[2..]).unwrap();
    assert!(sel.adopted);
    assert_eq!(sel.abandoned.len(), 1);
    assert!(sel.state.mempool_get(&orphaned.id).is_some());
    assert!(sel.state.locate(&orphaned.id).is_none());
}

#[test]
fn mempool_is_idempotent_ordered_and_capped() {
    let mut chain = ChainState::new("pool", 0).unwrap();
    let tx = chat_tx(1, "a", b"x", 5);
    assert!(chain.mempool_add(tx.clone()).unwrap());
    assert!(!chain.mempool_add(tx).unwrap());
    assert_eq!(chain.mempool_len(), 1);

    let mut chain = ChainState::new("pool", 0).unwrap();
    for ts in [3, 1, 2] {
        chain.mempool_add(chat_tx(1, "a", &[ts as u8], ts)).unwrap();
    }
    let order: Vec<u64> = chain.drain_for_block(64).iter().map(|t| t.timestamp).collect();
    assert_eq!(order, vec![1, 2, 3]);

    let mut chain = ChainState::new("pool", 0).unwrap();
    for i in 0..70u64 {
        chain.mempool_add(chat_tx(2, "b", &i.to_be_bytes(), i)).unwrap();
    }
    assert_eq!(chain.drain_for_block(64).len(), 64);
    assert_eq!(chain.mempool_len(), 6);
}

#[test]
fn mempool_rejects_unverifiable_and_confirmed() {
    let mut chain = build_chain(0, 1, 1);
    let confirmed = chain.block(1).unwrap().transactions[0].clone();
    assert!(!chain.mempool_add(confirmed).unwrap());
    let mut bad = chat_tx(1, "a", b"x", 1);
    bad.payload[0] = b'y';
    assert!(chain.mempool_add(bad).is_err());
}

#[test]
fn fork_choice_is_deterministic() {
    let base = build_chain(4, 2, 1);
    let mut other = base.clone();
    other.extend(seal(other.block_template("z", 77_000))).unwrap();
    let a = select_chain(&base, &other.blocks()[3..]).unwrap();
    let b = select_chain(&base.clone(), &other.blocks()[3..]).unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.adopted, b.adopted);
}

#[test]
fn accepted_chains_satisfy_pow_and_disjointness() {
    let chain = build_chain(6, 4, 2);
    assert!(validate_chain(chain.blocks()).is_ok());
    for b in &chain.blocks()[1..] {
        assert!(b.hash().leading_zero_bits() >= 6);
        for tx in &b.transactions {
            assert!(chain.mempool_get(&tx.id).is_none());
        }
    }
}

#[test]
fn mining_mean_attempts_at_difficulty_eight() {
    // Geometric with p = 2^-8: mean 256, sd of a 200-sample mean ~18.
    let mut total = 0u64;
    for i in 0..200u64 {
        let mut template = make_genesis("stats", 8).unwrap().header;
        template.index = 1;
        template.timestamp = i;
        let found = mine(&template, 0, 1 << 24).unwrap();
        assert_eq!(found.digest.as_bytes()[0], 0);
        total += found.attempts;
    }
    let mean = total as f64 / 200.0;
    assert!((180.0..=360.0).contains(&mean), "mean attempts {mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_bytes_round_trip(
        n_tx in 0usize..5,
        nonce in any::<u64>(),
        ts in any::<u64>(),
        nick in "[a-z]{0,12}",
        payload in proptest::collection::vec(any::<u8>(), 0..64),
    ) {
        let txs: Vec<Transaction> = (0..n_tx)
            .map(|i| chat_tx(i as u8 + 1, &nick, &payload, ts.wrapping_add(i as u64)))
            .collect();
        let genesis = make_genesis("rt", 3).unwrap();
        let block = Block::template(&genesis, txs, ts, 3, nick.clone()).with_nonce(nonce);
        let bytes = block.to_bytes();
        prop_assert_eq!(Block::from_bytes(&bytes).unwrap(), block);
    }

    #[test]
    fn block_json_round_trip(seed in 1u8..50, ts in 0u64..1_000_000) {
        let genesis = make_genesis("rt", 0).unwrap();
        let block = Block::template(&genesis, vec![chat_tx(seed, "n", b"p", ts)], ts, 0, "m");
        let json = serde_json::to_string(&block).unwrap();
        prop_assert_eq!(serde_json::from_str::<Block>(&json).unwrap(), block);
    }
}
