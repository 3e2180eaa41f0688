use std::collections::{BTreeMap, HashMap};

use super::{
    make_genesis, validate_block, Block, Digest, LedgerError, Transaction, Violation,
    MAX_BLOCK_TRANSACTIONS,
};

/// Position of a confirmed transaction: block index and offset inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxLocation {
    pub block_index: u64,
    pub position: usize,
}

/// The hash-linked chain plus pending transactions.
///
/// Blocks only enter through [`select_chain`] (or [`ChainState::extend`]),
/// so every stored block has passed validation and the mempool is always
/// disjoint from the confirmed set.
#[derive(Debug, Clone)]
pub struct ChainState {
    blocks: Vec<Block>,
    mempool: BTreeMap<Digest, Transaction>,
    difficulty: u32,
    confirmed: HashMap<Digest, TxLocation>,
}

/// Outcome of a fork-choice evaluation.
#[derive(Debug, Clone)]
pub struct Selection {
    pub state: ChainState,
    pub adopted: bool,
    /// Local blocks replaced by the candidate (empty on a plain extension).
    pub abandoned: Vec<Block>,
}

impl PartialEq for ChainState {
    fn eq(&self, other: &Self) -> bool {
        self.difficulty == other.difficulty
            && self.blocks == other.blocks
            && self.mempool == other.mempool
    }
}

impl Eq for ChainState {}

impl ChainState {
    pub fn new(classroom_name: &str, difficulty: u32) -> Result<Self, LedgerError> {
        Ok(Self::from_genesis(make_genesis(classroom_name, difficulty)?))
    }

    fn from_genesis(genesis: Block) -> Self {
        Self {
            difficulty: genesis.header.difficulty,
            blocks: vec![genesis],
            mempool: BTreeMap::new(),
            confirmed: HashMap::new(),
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn genesis(&self) -> &Block {
        &self.blocks[0]
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn tip_index(&self) -> u64 {
        self.tip().header.index
    }

    pub fn tip_hash(&self) -> Digest {
        self.tip().hash()
    }

    pub fn difficulty(&self) -> u32 {
        self.difficulty
    }

    pub fn block(&self, index: u64) -> Option<&Block> {
        usize::try_from(index).ok().and_then(|i| self.blocks.get(i))
    }

    pub fn mempool(&self) -> impl Iterator<Item = &Transaction> {
        self.mempool.values()
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    pub fn mempool_get(&self, id: &Digest) -> Option<&Transaction> {
        self.mempool.get(id)
    }

    pub fn locate(&self, id: &Digest) -> Option<TxLocation> {
        self.confirmed.get(id).copied()
    }

    pub fn confirmed_tx(&self, id: &Digest) -> Option<(&Transaction, TxLocation)> {
        let loc = self.locate(id)?;
        Some((&self.blocks[loc.block_index as usize].transactions[loc.position], loc))
    }

    pub fn knows_tx(&self, id: &Digest) -> bool {
        self.mempool.contains_key(id) || self.confirmed.contains_key(id)
    }

    /// Adds a verified transaction to the mempool. Returns `Ok(false)` when
    /// the id is already pending or confirmed.
    pub fn mempool_add(&mut self, tx: Transaction) -> Result<bool, LedgerError> {
        if self.knows_tx(&tx.id) {
            return Ok(false);
        }
        tx.check().map_err(LedgerError::InvalidTransaction)?;
        self.mempool.insert(tx.id, tx);
        Ok(true)
    }

    /// All pending transactions ordered by (timestamp, id).
    pub fn pending_sorted(&self) -> Vec<&Transaction> {
        let mut pending: Vec<&Transaction> = self.mempool.values().collect();
        pending.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.id.cmp(&b.id)));
        pending
    }

    /// Pending transactions in block order (timestamp, then id), capped at
    /// `max_tx`. The mempool is left untouched.
    pub fn pending_for_block(&self, max_tx: usize) -> Vec<Transaction> {
        self.pending_sorted()
            .into_iter()
            .take(max_tx.min(MAX_BLOCK_TRANSACTIONS))
            .cloned()
            .collect()
    }

    /// Removes and returns the next block's worth of transactions.
    pub fn drain_for_block(&mut self, max_tx: usize) -> Vec<Transaction> {
        let batch = self.pending_for_block(max_tx);
        for tx in &batch {
            self.mempool.remove(&tx.id);
        }
        batch
    }

    /// A template on top of the current tip carrying up to 64 pending
    /// transactions. The nonce is zero.
    pub fn block_template(&self, miner_nick: &str, timestamp: u64) -> Block {
        Block::template(
            self.tip(),
            self.pending_for_block(MAX_BLOCK_TRANSACTIONS),
            timestamp,
            self.difficulty,
            miner_nick,
        )
    }

    /// Appends a block directly on the tip.
    pub fn extend(&mut self, block: Block) -> Result<(), Violation> {
        let selection = select_chain(self, std::slice::from_ref(&block))?;
        if !selection.adopted {
            return Err(Violation::IndexMismatch {
                expected: self.tip_index() + 1,
                found: block.index(),
            });
        }
        *self = selection.state;
        Ok(())
    }

    fn rebuild_index(&mut self) {
        self.confirmed.clear();
        for block in &self.blocks {
            for (position, tx) in block.transactions.iter().enumerate() {
                self.confirmed.insert(
                    tx.id,
                    TxLocation {
                        block_index: block.header.index,
                        position,
                    },
                );
            }
        }
    }
}

/// Longest-chain fork choice with a smallest-tip-digest tie-break.
///
/// `candidate` must be an ascending run of blocks whose first element
/// attaches to a block in `local` (or is a genesis). The candidate is
/// validated in full before comparison; an invalid candidate is an error
/// and `local` is untouched. Pure: the result depends only on the inputs.
pub fn select_chain(local: &ChainState, candidate: &[Block]) -> Result<Selection, Violation> {
    let first = candidate.first().ok_or(Violation::EmptyCandidate)?;
    let fork_at = first.header.index;

    let base: &[Block] = if fork_at == 0 {
        validate_block(first, None)?;
        if first.hash() != local.genesis().hash() {
            return Err(Violation::UnknownParent);
        }
        &[]
    } else {
        let parent = local.block(fork_at - 1).ok_or(Violation::UnknownParent)?;
        if parent.hash() != first.header.prev_hash {
            return Err(Violation::UnknownParent);
        }
        &local.blocks[..fork_at as usize]
    };

    // Validate the candidate against the retained prefix.
    let mut seen: HashMap<Digest, ()> = base
        .iter()
        .flat_map(|b| b.transactions.iter().map(|tx| (tx.id, ())))
        .collect();
    let mut prev = base.last();
    for block in candidate {
        if block.header.index == 0 {
            if prev.is_some() {
                return Err(Violation::IndexMismatch {
                    expected: prev.map_or(0, |p| p.index() + 1),
                    found: 0,
                });
            }
        } else {
            validate_block(block, prev)?;
        }
        for tx in &block.transactions {
            if seen.insert(tx.id, ()).is_some() {
                return Err(Violation::DuplicateTransaction(tx.id));
            }
        }
        prev = Some(block);
    }

    let new_len = base.len() + candidate.len();
    let new_tip = candidate.last().unwrap().hash();
    let adopt = new_len > local.blocks.len()
        || (new_len == local.blocks.len() && new_tip < local.tip_hash());
    if !adopt {
        return Ok(Selection {
            state: local.clone(),
            adopted: false,
            abandoned: Vec::new(),
        });
    }

    let abandoned: Vec<Block> = local.blocks[base.len()..].to_vec();
    let mut blocks = base.to_vec();
    blocks.extend_from_slice(candidate);

    let mut state = ChainState {
        blocks,
        mempool: local.mempool.clone(),
        difficulty: local.difficulty,
        confirmed: HashMap::new(),
    };
    state.rebuild_index();
    for tx in abandoned.iter().flat_map(|b| b.transactions.iter()) {
        state.mempool.entry(tx.id).or_insert_with(|| tx.clone());
    }
    let confirmed = &state.confirmed;
    state.mempool.retain(|id, _| !confirmed.contains_key(id));

    Ok(Selection {
        state,
        adopted: true,
        abandoned,
    })
}
