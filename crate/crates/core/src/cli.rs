//! Command-line front end: the teacher's node commands, pack validation and
//! the analytics reports.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytics::{
    ancova, correlation_t, group_samples, hits, posttest_grade_pairs, read_edges_csv, read_records_csv,
    two_sample_t, AnalyticsError, AssessmentRecord, Cohort, Effect, TestReport, TopicGraph,
    DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};
use crate::missions::load_mission_pack;
use crate::node::{self, NodeConfig, NodeStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chunkchain", version, about = "Classroom blockchain chat node and teacher tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run or query a classroom node.
    #[command(subcommand)]
    Node(NodeCommand),
    /// Mission pack tools.
    #[command(subcommand)]
    Packs(PacksCommand),
    /// Topic weighting and assessment statistics.
    #[command(subcommand)]
    Analytics(AnalyticsCommand),
}

#[derive(Debug, Subcommand)]
enum NodeCommand {
    /// Start a node in the foreground. Stops cleanly on Ctrl-C.
    Start(StartArgs),
    /// Print tip index, peer count, session count and mempool size.
    Status(StatusArgs),
}

#[derive(Debug, Args)]
struct StartArgs {
    /// JSON config file; defaults to $CHUNKCHAIN_CONFIG when set.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    classroom: Option<String>,
    #[arg(long)]
    passphrase: Option<String>,
    /// Interface to bind the peer and client listeners to.
    #[arg(long)]
    bind: Option<String>,
    /// Host announced to peers (default: detected LAN address).
    #[arg(long)]
    advertise: Option<String>,
    /// Peer transport TCP port.
    #[arg(long)]
    tcp_port: Option<u16>,
    /// Client API (WebSocket and HTTP) port.
    #[arg(long)]
    api_port: Option<u16>,
    /// Enable or disable UDP beacons.
    #[arg(long)]
    discovery: Option<bool>,
    #[arg(long)]
    discovery_port: Option<u16>,
    /// Static peer `host:port`; repeatable.
    #[arg(long = "peer")]
    peers: Vec<String>,
    #[arg(long)]
    difficulty: Option<u32>,
    /// Auto-miner interval in milliseconds, 0 disables.
    #[arg(long)]
    auto_mine_ms: Option<u64>,
    #[arg(long)]
    mission_pack: Option<PathBuf>,
    /// Directory of browser client assets to serve at `/`.
    #[arg(long)]
    serve_ui: Option<PathBuf>,
    /// `off`, `error`, `warn`, `info`, `debug` or `trace`. Logs go to stderr.
    #[arg(long)]
    log_level: Option<String>,
}

#[derive(Debug, Args)]
struct StatusArgs {
    /// Client API address of the node.
    #[arg(long)]
    api: Option<String>,
    /// Config file used to find the client API port.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum PacksCommand {
    /// Check a mission pack and list every violation.
    Validate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
enum AnalyticsCommand {
    /// HITS hub and authority scores for a `content,prerequisite` edge list.
    Hits {
        edges: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Rows to print per column (all when omitted).
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Pretest/posttest statistics over a records CSV.
    Assess {
        records: PathBuf,
        #[arg(long = "test", value_enum)]
        test: AssessTest,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum AssessTest {
    /// Posttest, placebo vs. treatment groups, overall and per cohort.
    T,
    /// Posttest by group with pretest as covariate.
    Ancova,
    /// Posttest vs. grade.
    Cor,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Node(NodeCommand::Start(args)) => node_start(args),
        Command::Node(NodeCommand::Status(args)) => node_status(args),
        Command::Packs(PacksCommand::Validate { file, json }) => packs_validate(&file, json),
        Command::Analytics(AnalyticsCommand::Hits {
            edges,
            tol,
            max_iter,
            top,
            json,
        }) => analytics_hits(&edges, tol, max_iter, top, json),
        Command::Analytics(AnalyticsCommand::Assess { records, test, json }) => analytics_assess(&records, test, json),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_RUNTIME
        }
    }
}

fn node_config(args: StartArgs) -> Result<NodeConfig, String> {
    let mut c = NodeConfig::load_or_default(args.config.as_deref()).map_err(|e| e.to_string())?;
    if let Some(v) = args.classroom {
        c.classroom_name = v;
    }
    if let Some(v) = args.passphrase {
        c.classroom_passphrase = v;
    }
    if let Some(v) = args.bind {
        c.bind_host = v;
    }
    if let Some(v) = args.advertise {
        c.advertise_host = Some(v);
    }
    if let Some(v) = args.tcp_port {
        c.listen_tcp = v;
    }
    if let Some(v) = args.api_port {
        c.client_api = v;
    }
    if let Some(v) = args.discovery {
        c.discovery = v;
    }
    if let Some(v) = args.discovery_port {
        c.discovery_port = v;
    }
    if !args.peers.is_empty() {
        c.static_peers = args.peers;
    }
    if let Some(v) = args.difficulty {
        c.difficulty = v;
    }
    if let Some(v) = args.auto_mine_ms {
        c.auto_mine_interval_ms = v;
    }
    if let Some(v) = args.mission_pack {
        c.mission_pack_path = Some(v);
    }
    if let Some(v) = args.serve_ui {
        c.serve_ui_path = Some(v);
    }
    if let Some(v) = args.log_level {
        c.log_level = v;
    }
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn node_start(args: StartArgs) -> Result<i32, String> {
    let config = node_config(args)?;
    let _ = env_logger::Builder::new()
        .parse_filters(&config.log_level)
        .target(env_logger::Target::Stderr)
        .try_init();
    node::run(config).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

fn node_status(args: StatusArgs) -> Result<i32, String> {
    let api = match args.api {
        Some(a) => a,
        None => {
            let c = NodeConfig::load_or_default(args.config.as_deref()).map_err(|e| e.to_string())?;
            format!("127.0.0.1:{}", c.client_api)
        }
    };
    let config = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(5)))
        .build();
    let agent = ureq::Agent::new_with_config(config);
    let url = format!("http://{api}/status");
    let body = agent
        .get(&url)
        .call()
        .and_then(|mut r| r.body_mut().read_to_string())
        .map_err(|e| format!("cannot reach node at {api}: {e}"))?;
    let status: NodeStatus = serde_json::from_str(&body).map_err(|e| format!("unexpected status reply: {e}"))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&status).expect("status serializes"));
    } else {
        println!("node      {}", status.node_id);
        println!("classroom {}", status.classroom);
        println!("tip       {} ({})", status.tip_index, status.tip_hash);
        println!("peers     {}", status.peers);
        println!("sessions  {}", status.sessions);
        println!("mempool   {}", status.mempool);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PackReport {
    valid: bool,
    missions: usize,
    levels: u32,
    violations: Vec<ViolationRow>,
}

#[derive(Serialize)]
struct ViolationRow {
    line: Option<usize>,
    message: String,
}

fn packs_validate(file: &Path, json: bool) -> Result<i32, String> {
    let text = std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let report = match load_mission_pack(&text) {
        Ok(pack) => PackReport {
            valid: true,
            missions: pack.missions.len(),
            levels: pack.max_level(),
            violations: Vec::new(),
        },
        Err(err) => PackReport {
            valid: false,
            missions: 0,
            levels: 0,
            violations: err
                .0
                .into_iter()
                .map(|v| ViolationRow {
                    line: v.line,
                    message: v.message,
                })
                .collect(),
        },
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else if report.valid {
        println!("{}: ok, {} missions over {} levels", file.display(), report.missions, report.levels);
    } else {
        println!("{}: {} violation(s)", file.display(), report.violations.len());
        for v in &report.violations {
            match v.line {
                Some(line) => println!("  line {line}: {}", v.message),
                None => println!("  {}", v.message),
            }
        }
    }
    Ok(if report.valid { EXIT_OK } else { EXIT_RUNTIME })
}

fn open(path: &Path) -> Result<File, String> {
    File::open(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn located(path: &Path, e: AnalyticsError) -> String {
    format!("{}: {e}", path.display())
}

#[derive(Serialize)]
struct HitsReport {
    nodes: usize,
    edges: usize,
    iterations: usize,
    hubs: Vec<RankedScore>,
    authorities: Vec<RankedScore>,
}

#[derive(Serialize)]
struct RankedScore {
    topic: String,
    score: f64,
}

fn analytics_hits(path: &Path, tol: f64, max_iter: usize, top: Option<usize>, json: bool) -> Result<i32, String> {
    let edges = read_edges_csv(open(path)?).map_err(|e| located(path, e))?;
    let graph = TopicGraph::from_edges(edges).map_err(|e| located(path, e))?;
    let result = hits(&graph, tol, max_iter).map_err(|e| located(path, e))?;
    let ranked = |rows: Vec<(&str, f64)>| -> Vec<RankedScore> {
        rows.into_iter()
            .map(|(t, s)| RankedScore {
                topic: t.to_owned(),
                score: s,
            })
            .collect()
    };
    let report = HitsReport {
        nodes: graph.len(),
        edges: graph.edge_count(),
        iterations: result.iterations,
        hubs: ranked(result.hub_ranking()),
        authorities: ranked(result.authority_ranking()),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", hits_table(&report, top.unwrap_or(usize::MAX)));
    }
    Ok(EXIT_OK)
}

fn hits_table(report: &HitsReport, top: usize) -> String {
    let rows = report.hubs.len().min(top);
    let width = report
        .hubs
        .iter()
        .take(rows)
        .map(|r| r.topic.chars().count())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} topics, {} edges, {} iterations",
        report.nodes, report.edges, report.iterations
    );
    let _ = writeln!(out, "{:<width$}  {:>11}  |  {:<width$}  {:>11}", "Topic", "Score (h_p)", "Topic", "Score (a_p)");
    for (h, a) in report.hubs.iter().zip(&report.authorities).take(rows) {
        let _ = writeln!(
            out,
            "{:<width$}  {:>11.9}  |  {:<width$}  {:>11.9}",
            h.topic, h.score, a.topic, a.score
        );
    }
    out
}

#[derive(Serialize)]
struct AssessReport {
    test: AssessTest,
    records: usize,
    results: Vec<ScopedResult>,
}

#[derive(Serialize)]
struct ScopedResult {
    scope: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<TestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl ScopedResult {
    fn new(scope: &str, result: Result<TestReport, AnalyticsError>) -> Self {
        let (report, error) = match result {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            scope: scope.to_owned(),
            report,
            error,
        }
    }
}

fn t_test(records: &[AssessmentRecord]) -> Result<TestReport, AnalyticsError> {
    let (placebo, treatment) = crate::analytics::treatment_vs_placebo(records);
    two_sample_t(&placebo, &treatment)
}

fn analytics_assess(path: &Path, test: AssessTest, json: bool) -> Result<i32, String> {
    let records = read_records_csv(open(path)?).map_err(|e| located(path, e))?;
    let results = match test {
        AssessTest::T => {
            let mut results = vec![ScopedResult::new("all", t_test(&records))];
            for (cohort, name) in [
                (Cohort::Last, "last"),
                (Cohort::Prelast, "prelast"),
                (Cohort::ThirdLast, "third_last"),
            ] {
                let subset: Vec<AssessmentRecord> = records.iter().filter(|r| r.cohort == cohort).cloned().collect();
                if !subset.is_empty() {
                    results.push(ScopedResult::new(name, t_test(&subset)));
                }
            }
            results
        }
        AssessTest::Ancova => {
            let report = ancova(&group_samples(&records)).map_err(|e| located(path, e))?;
            vec![ScopedResult::new("all", Ok(report))]
        }
        AssessTest::Cor => {
            let (post, grade) = posttest_grade_pairs(&records).map_err(|e| located(path, e))?;
            let report = correlation_t(&post, &grade).map_err(|e| located(path, e))?;
            vec![ScopedResult::new("all", Ok(report))]
        }
    };
    if test == AssessTest::T && results[0].report.is_none() {
        return Err(located(path, t_test(&records).unwrap_err()));
    }
    let report = AssessReport {
        test,
        records: records.len(),
        results,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", assess_table(&report));
    }
    Ok(EXIT_OK)
}

fn assess_table(report: &AssessReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} records", report.records);
    for r in &report.results {
        match (&r.report, &r.error) {
            (Some(t), _) => {
                let df = match t.df_denominator {
                    Some(d2) => format!("({}, {})", t.df, d2),
                    None => format!("{}", t.df),
                };
                let _ = writeln!(
                    out,
                    "{:<10}  {} = {:>9.4}  df = {:<10}  p = {:.4}",
                    r.scope, t.statistic_name, t.statistic, df, t.p
                );
                effect_lines(&mut out, &t.effect);
            }
            (None, Some(e)) => {
                let _ = writeln!(out, "{:<10}  not computed: {e}", r.scope);
            }
            (None, None) => {}
        }
    }
    out
}

fn effect_lines(out: &mut String, effect: &Effect) {
    match effect {
        Effect::MeanDifference {
            n1,
            n2,
            mean1,
            mean2,
            difference,
        } => {
            let _ = writeln!(
                out,
                "            placebo n={n1} mean={mean1:.3}  treatment n={n2} mean={mean2:.3}  difference={difference:.3}"
            );
        }
        Effect::AdjustedMeans {
            covariate_slope,
            groups,
        } => {
            let _ = writeln!(out, "            pretest slope = {covariate_slope:.4}");
            let _ = writeln!(
                out,
                "            {:<6} {:>4} {:>10} {:>10} {:>10}",
                "group", "n", "raw", "pretest", "adjusted"
            );
            for g in groups {
                let _ = writeln!(
                    out,
                    "            {:<6} {:>4} {:>10.3} {:>10.3} {:>10.3}",
                    g.group, g.n, g.raw_mean, g.covariate_mean, g.adjusted_mean
                );
            }
        }
        Effect::GroupMeans { groups } => {
            for (label, n, m) in groups {
                let _ = writeln!(out, "            {label:<6} n={n} mean={m:.3}");
            }
        }
        Effect::Correlation { n, r, perfect } => {
            let note = if *perfect { "  (perfect correlation)" } else { "" };
            let _ = writeln!(out, "            n = {n}  cor = {r:.4}{note}");
        }
    }
}
