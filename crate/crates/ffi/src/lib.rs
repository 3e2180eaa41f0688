//! C ABI over the chunkchain ledger, proof-of-work probe and teacher
//! analytics.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free`. Every fallible call returns a [`CcStatus`]; on failure the
//! message is available from [`cc_last_error`] on the same thread. Strings
//! returned through `out` parameters are released with [`cc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chunkchain::analytics::{self, AnalyticsError, GroupSample, TestReport, TopicGraph};
use chunkchain::ledger::{self, BlockHeader, ChainState, Transaction, TxDraft, TxKind};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NotFound = 4,
    Rejected = 5,
    NoConvergence = 6,
    Panic = 99,
}

/// Summary of one hypothesis test. `df_denominator` is NaN for t tests.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcTestResult {
    pub statistic: f64,
    pub df: f64,
    pub df_denominator: f64,
    pub p: f64,
}

/// A local chain with its mempool.
pub struct CcChain {
    inner: ChainState,
}

/// A prerequisite graph under construction.
pub struct CcTopicGraph {
    edges: Vec<(String, String)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CcStatus, String);

impl Failure {
    fn null(name: &str) -> Self {
        Failure(CcStatus::NullArgument, format!("{name} is null"))
    }
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(CcStatus::InvalidArgument, msg.into())
    }
}

impl From<AnalyticsError> for Failure {
    fn from(e: AnalyticsError) -> Self {
        let status = match e {
            AnalyticsError::NoConvergence(_) => CcStatus::NoConvergence,
            _ => CcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_owned());
            CcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CcStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure::invalid("string contains NUL"))?;
    write_out(out, c.into_raw(), "out")
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string(value).map_err(|e| Failure::invalid(e.to_string()))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::invalid(format!("{what}: {e}")))
}

unsafe fn chain_ref<'a>(chain: *const CcChain) -> Result<&'a CcChain, Failure> {
    chain.as_ref().ok_or_else(|| Failure::null("chain"))
}

unsafe fn chain_mut<'a>(chain: *mut CcChain) -> Result<&'a mut CcChain, Failure> {
    chain.as_mut().ok_or_else(|| Failure::null("chain"))
}

fn report(r: TestReport) -> CcTestResult {
    CcTestResult {
        statistic: r.statistic,
        df: r.df,
        df_denominator: r.df_denominator.unwrap_or(f64::NAN),
        p: r.p,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a chain holding only the genesis block for `classroom`.
///
/// # Safety
/// `classroom` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_new(classroom: *const c_char, difficulty: u32, out: *mut *mut CcChain) -> CcStatus {
    guard(|| {
        let name = str_arg(classroom, "classroom")?;
        let inner = ChainState::new(name, difficulty).map_err(|e| Failure::invalid(e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(CcChain { inner })), "out")
    })
}

/// Frees a chain. NULL is ignored.
///
/// # Safety
/// `chain` must come from [`cc_chain_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_free(chain: *mut CcChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_tip_index(chain: *const CcChain, out: *mut u64) -> CcStatus {
    guard(|| write_out(out, chain_ref(chain)?.inner.tip_index(), "out"))
}

/// Writes the tip digest as 64 lowercase hex characters.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_tip_hash(chain: *const CcChain, out: *mut *mut c_char) -> CcStatus {
    guard(|| write_string(out, chain_ref(chain)?.inner.tip_hash().to_hex()))
}

/// Writes the number of pending transactions.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_mempool_len(chain: *const CcChain, out: *mut usize) -> CcStatus {
    guard(|| write_out(out, chain_ref(chain)?.inner.mempool_len(), "out"))
}

/// Adds a signed transaction (JSON) to the mempool. `out_added`, if not
/// NULL, receives false when the transaction was already known.
///
/// # Safety
/// `chain` must be a live handle, `tx_json` a NUL-terminated string and
/// `out_added` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_add_transaction(
    chain: *mut CcChain,
    tx_json: *const c_char,
    out_added: *mut bool,
) -> CcStatus {
    guard(|| {
        let chain = chain_mut(chain)?;
        let tx: Transaction = from_json(str_arg(tx_json, "tx_json")?, "transaction")?;
        let added = chain
            .inner
            .mempool_add(tx)
            .map_err(|e| Failure(CcStatus::Rejected, e.to_string()))?;
        if !out_added.is_null() {
            out_added.write(added);
        }
        Ok(())
    })
}

/// Mines pending transactions into a new tip block. `out_attempts`, if not
/// NULL, receives the number of hashes computed.
///
/// # Safety
/// `chain` must be a live handle, `miner_nick` a NUL-terminated string and
/// `out_attempts` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_mine_block(
    chain: *mut CcChain,
    miner_nick: *const c_char,
    timestamp: u64,
    out_attempts: *mut u64,
) -> CcStatus {
    guard(|| {
        let chain = chain_mut(chain)?;
        let nick = str_arg(miner_nick, "miner_nick")?;
        let template = chain.inner.block_template(nick, timestamp);
        let mined = ledger::mine(&template.header, 0, u64::MAX).map_err(|e| Failure(CcStatus::Rejected, e.to_string()))?;
        chain
            .inner
            .extend(template.with_nonce(mined.nonce))
            .map_err(|v| Failure(CcStatus::Rejected, v.to_string()))?;
        if !out_attempts.is_null() {
            out_attempts.write(mined.attempts);
        }
        Ok(())
    })
}

/// Writes block `index` as JSON.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_block_json(chain: *const CcChain, index: u64, out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let block = chain_ref(chain)?
            .inner
            .block(index)
            .ok_or_else(|| Failure(CcStatus::NotFound, format!("no block at index {index}")))?;
        write_string(out, to_json(block)?)
    })
}

/// Writes every block of the chain as a JSON array.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_blocks_json(chain: *const CcChain, out: *mut *mut c_char) -> CcStatus {
    guard(|| write_string(out, to_json(&chain_ref(chain)?.inner.blocks())?))
}

/// Validates a JSON array of blocks starting at genesis. Returns
/// `CC_STATUS_REJECTED` with the failing block and rule in the last error.
///
/// # Safety
/// `blocks_json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cc_validate_blocks_json(blocks_json: *const c_char) -> CcStatus {
    guard(|| {
        let blocks: Vec<ledger::Block> = from_json(str_arg(blocks_json, "blocks_json")?, "blocks")?;
        ledger::validate_chain(&blocks)
            .map_err(|(index, v)| Failure(CcStatus::Rejected, format!("block {index}: {} ({v})", v.rule())))
    })
}

/// Signs a transaction and writes it as JSON. `kind` is 0 chat,
/// 1 achievement, 2 system; `secret_key` points to 32 bytes.
///
/// # Safety
/// `author_nick` must be a NUL-terminated string, `payload` readable for
/// `payload_len` bytes, `secret_key` readable for 32 bytes and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cc_transaction_sign(
    kind: u8,
    author_nick: *const c_char,
    payload: *const u8,
    payload_len: usize,
    timestamp: u64,
    secret_key: *const u8,
    out: *mut *mut c_char,
) -> CcStatus {
    guard(|| {
        let kind = TxKind::from_tag(kind).ok_or_else(|| Failure::invalid(format!("unknown kind {kind}")))?;
        let nick = str_arg(author_nick, "author_nick")?;
        let payload = slice_arg(payload, payload_len, "payload")?.to_vec();
        let key = slice_arg(secret_key, 32, "secret_key")?;
        let tx = ledger::sign_transaction(TxDraft::new(kind, nick, payload, timestamp), key)
            .map_err(|e| Failure::invalid(e.to_string()))?;
        write_string(out, to_json(&tx)?)
    })
}

/// Checks id, limits and signature of a JSON transaction.
///
/// # Safety
/// `tx_json` must be a NUL-terminated string and `out_valid` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_transaction_verify(tx_json: *const c_char, out_valid: *mut bool) -> CcStatus {
    guard(|| {
        let tx: Transaction = from_json(str_arg(tx_json, "tx_json")?, "transaction")?;
        write_out(out_valid, ledger::verify_transaction(&tx), "out_valid")
    })
}

/// Hashes a JSON block header with `nonce`. Writes the 32-byte digest and
/// whether it meets the header's difficulty.
///
/// # Safety
/// `header_json` must be a NUL-terminated string, `out_digest` writable for
/// 32 bytes and `out_meets` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_try_nonce(
    header_json: *const c_char,
    nonce: u64,
    out_digest: *mut u8,
    out_meets: *mut bool,
) -> CcStatus {
    guard(|| {
        let header: BlockHeader = from_json(str_arg(header_json, "header_json")?, "header")?;
        if out_digest.is_null() {
            return Err(Failure::null("out_digest"));
        }
        let probe = ledger::try_nonce(&header, nonce);
        ptr::copy_nonoverlapping(probe.digest.as_bytes().as_ptr(), out_digest, 32);
        write_out(out_meets, probe.meets, "out_meets")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_topic_graph_new(out: *mut *mut CcTopicGraph) -> CcStatus {
    guard(|| write_out(out, Box::into_raw(Box::new(CcTopicGraph { edges: Vec::new() })), "out"))
}

/// Frees a topic graph. NULL is ignored.
///
/// # Safety
/// `graph` must come from [`cc_topic_graph_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cc_topic_graph_free(graph: *mut CcTopicGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Records that `content` lists `prerequisite`.
///
/// # Safety
/// `graph` must be a live handle and both labels NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn cc_topic_graph_add_edge(
    graph: *mut CcTopicGraph,
    content: *const c_char,
    prerequisite: *const c_char,
) -> CcStatus {
    guard(|| {
        let graph = graph.as_mut().ok_or_else(|| Failure::null("graph"))?;
        let content = str_arg(content, "content")?;
        let prerequisite = str_arg(prerequisite, "prerequisite")?;
        graph.edges.push((content.to_owned(), prerequisite.to_owned()));
        Ok(())
    })
}

/// Runs HITS and writes `{scores: [{label, hub, authority}], iterations}`.
/// Pass 0 for `max_iter` to use the default limit.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_hits(graph: *const CcTopicGraph, tol: f64, max_iter: usize, out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let graph = graph.as_ref().ok_or_else(|| Failure::null("graph"))?;
        let topics = TopicGraph::from_edges(graph.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())))?;
        let max_iter = if max_iter == 0 { analytics::DEFAULT_MAX_ITER } else { max_iter };
        let result = analytics::hits(&topics, tol, max_iter)?;
        write_string(out, to_json(&result)?)
    })
}

/// Pooled-variance two-sample t test.
///
/// # Safety
/// `a` and `b` must be readable for `na` and `nb` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_two_sample_t(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut CcTestResult,
) -> CcStatus {
    guard(|| {
        let r = analytics::two_sample_t(slice_arg(a, na, "a")?, slice_arg(b, nb, "b")?)?;
        write_out(out, report(r), "out")
    })
}

/// Pearson correlation t test on paired values.
///
/// # Safety
/// `x` and `y` must be readable for `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_correlation_t(x: *const f64, y: *const f64, n: usize, out: *mut CcTestResult) -> CcStatus {
    guard(|| {
        let r = analytics::correlation_t(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        write_out(out, report(r), "out")
    })
}

/// ANCOVA over groups given as JSON
/// `[{"label": .., "covariate": [..], "response": [..]}, ..]`.
///
/// # Safety
/// `groups_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_ancova(groups_json: *const c_char, out: *mut CcTestResult) -> CcStatus {
    guard(|| {
        let value: serde_json::Value = from_json(str_arg(groups_json, "groups_json")?, "groups")?;
        let groups = parse_groups(&value)?;
        write_out(out, report(analytics::ancova(&groups)?), "out")
    })
}

fn parse_groups(value: &serde_json::Value) -> Result<Vec<GroupSample>, Failure> {
    let numbers = |v: &serde_json::Value, field: &str| -> Result<Vec<f64>, Failure> {
        v.get(field)
            .and_then(|a| a.as_array())
            .ok_or_else(|| Failure::invalid(format!("group is missing {field}")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Failure::invalid(format!("{field} holds a non-number"))))
            .collect()
    };
    value
        .as_array()
        .ok_or_else(|| Failure::invalid("groups must be an array"))?
        .iter()
        .map(|g| {
            let label = g.get("label").and_then(|l| l.as_str()).unwrap_or_default();
            Ok(GroupSample::new(label, numbers(g, "covariate")?, numbers(g, "response")?))
        })
        .collect()
}
