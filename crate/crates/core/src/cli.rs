//! Scenario runner: builds a network from a preset or topology file, keys
//! the two endpoints, drives one stream through it and turns the result into
//! report rows. `sweep` repeats the ten standard cells over several seeds.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::crypto::{self, AuthAlgorithm, CipherAlgorithm};
use crate::ipsec::{self, setkey::REFERENCE_CONF, ProtocolFilter, SecurityDatabases, SetkeyError};
use crate::metrics::{self, DelaySampling, DelaySeries, ReportRow, SAMPLE_COUNT, SAMPLE_SPACING};
use crate::olsr::SECOND_US;
use crate::simnet::{Action, DelayModel, NodeId, SimConfig, SimError, SimResult, Simulator, Topology};
use crate::traffic::{StreamConfig, DEFAULT_DURATION_US, DEFAULT_PAYLOAD_BYTES, DEFAULT_RATE_PPS};

/// Routing warm-up before the stream starts; comfortably above the
/// three-TC-plus-two-HELLO convergence bound.
pub const WARMUP_US: u64 = 20 * SECOND_US;
/// Quiet time after the last emission so nothing is left in flight.
pub const DRAIN_US: u64 = SECOND_US;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Setkey { path: String, source: SetkeyError },
    #[error(transparent)]
    Sim(SimError),
    #[error("invariant failed: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    /// 1 for a failed invariant, 2 for anything the user can fix in the
    /// configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) | CliError::Sim(SimError::Invariant(_)) => 1,
            _ => 2,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invariant(m) => CliError::Invariant(m),
            e => CliError::Sim(e),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scenario {
    SingleHop,
    MultiHop,
    Custom(PathBuf),
}

impl Scenario {
    pub fn name(&self) -> &str {
        match self {
            Scenario::SingleHop => "single-hop",
            Scenario::MultiHop => "multi-hop",
            Scenario::Custom(_) => "custom",
        }
    }

    pub fn topology(&self) -> Result<Topology, CliError> {
        match self {
            Scenario::SingleHop => Ok(Topology::single_hop()),
            Scenario::MultiHop => Ok(Topology::multi_hop()),
            Scenario::Custom(p) => {
                let text = fs::read_to_string(p).map_err(io_err(p))?;
                Topology::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single-hop" | "single_hop" => Ok(Scenario::SingleHop),
            "multi-hop" | "multi_hop" => Ok(Scenario::MultiHop),
            "custom" => Ok(Scenario::Custom(PathBuf::new())),
            _ => Err(format!("unknown scenario '{s}' (single-hop, multi-hop, custom)")),
        }
    }
}

pub fn parse_esp(s: &str) -> Result<Option<CipherAlgorithm>, String> {
    match s.to_ascii_lowercase().as_str() {
        "none" => Ok(None),
        "aes" => Ok(Some(CipherAlgorithm::AesCbc)),
        "3des" => Ok(Some(CipherAlgorithm::TdesCbc)),
        _ => Err(format!("unknown ESP cipher '{s}' (none, aes, 3des)")),
    }
}

pub fn parse_ah(s: &str) -> Result<Option<AuthAlgorithm>, String> {
    match s.to_ascii_lowercase().as_str() {
        "none" => Ok(None),
        "md5" => Ok(Some(AuthAlgorithm::HmacMd5)),
        "sha1" => Ok(Some(AuthAlgorithm::HmacSha1)),
        _ => Err(format!("unknown AH algorithm '{s}' (none, md5, sha1)")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheme {
    pub esp: Option<CipherAlgorithm>,
    pub ah: Option<AuthAlgorithm>,
}

impl Scheme {
    pub const PLAIN: Scheme = Scheme { esp: None, ah: None };

    /// Plain baseline followed by the four cipher × hash combinations.
    pub fn standard() -> [Scheme; 5] {
        use AuthAlgorithm::*;
        use CipherAlgorithm::*;
        [
            Scheme::PLAIN,
            Scheme::new(AesCbc, HmacMd5),
            Scheme::new(AesCbc, HmacSha1),
            Scheme::new(TdesCbc, HmacMd5),
            Scheme::new(TdesCbc, HmacSha1),
        ]
    }

    pub fn new(esp: CipherAlgorithm, ah: AuthAlgorithm) -> Self {
        Scheme {
            esp: Some(esp),
            ah: Some(ah),
        }
    }

    pub fn is_plain(&self) -> bool {
        self.esp.is_none() && self.ah.is_none()
    }

    pub fn uses_aes(&self) -> bool {
        self.esp == Some(CipherAlgorithm::AesCbc)
    }

    pub fn uses_tdes(&self) -> bool {
        self.esp == Some(CipherAlgorithm::TdesCbc)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let esp = self.esp.map(|c| match c {
            CipherAlgorithm::AesCbc => "aes",
            CipherAlgorithm::TdesCbc => "3des",
        });
        let ah = self.ah.map(|a| match a {
            AuthAlgorithm::HmacMd5 => "md5",
            AuthAlgorithm::HmacSha1 => "sha1",
        });
        match (esp, ah) {
            (None, None) => f.write_str("plain"),
            (Some(e), None) => f.write_str(e),
            (None, Some(a)) => f.write_str(a),
            (Some(e), Some(a)) => write!(f, "{e}-{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub scheme: Scheme,
    pub delay: DelayModel,
    pub seed: u64,
    pub duration_us: u64,
    pub rate_pps: u32,
    pub payload_bytes: usize,
    pub output_dir: Option<PathBuf>,
    /// Replace a node's generated databases with a setkey file.
    pub setkey: Vec<(NodeId, PathBuf)>,
    /// Per-node protocol filters; unlisted nodes accept everything.
    pub filters: Vec<(NodeId, ProtocolFilter)>,
    /// Key the endpoints with the bundled reference configuration.
    pub reference_keys: bool,
    pub dump_routes: bool,
    pub capture_hex: bool,
}

impl RunSpec {
    pub fn new(scenario: Scenario, scheme: Scheme, seed: u64) -> Self {
        RunSpec {
            scenario,
            scheme,
            delay: DelayModel::default(),
            seed,
            duration_us: DEFAULT_DURATION_US,
            rate_pps: DEFAULT_RATE_PPS,
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
            output_dir: None,
            setkey: Vec::new(),
            filters: Vec::new(),
            reference_keys: false,
            dump_routes: false,
            capture_hex: false,
        }
    }
}

/// Everything one run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scheme: Scheme,
    pub scenario: String,
    pub topology: Topology,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub result: SimResult,
    pub sampling: DelaySampling,
    pub avg_delay_us: Option<f64>,
    pub rows: Vec<ReportRow>,
    pub series: DelaySeries,
    /// Rendered setkey file for each keyed node.
    pub setkey_files: Vec<(NodeId, String)>,
}

impl RunOutcome {
    /// Bytes of every transmission in the network.
    pub fn bytes_on_wire(&self) -> u64 {
        self.result.counters.values().map(|c| c.tx_bytes).sum()
    }

    pub fn packets_on_wire(&self) -> u64 {
        self.result.counters.values().map(|c| c.tx_packets).sum()
    }

    pub fn avg_packet_size(&self) -> f64 {
        match self.packets_on_wire() {
            0 => 0.0,
            n => self.bytes_on_wire() as f64 / n as f64,
        }
    }

    /// Mean wire size of the stream's own transmissions.
    pub fn stream_packet_size(&self) -> f64 {
        let (n, b) = self
            .result
            .trace
            .iter()
            .filter(|e| e.action == Action::Tx && e.stamp.is_some())
            .fold((0u64, 0u64), |(n, b), e| (n + 1, b + e.bytes as u64));
        if n == 0 {
            0.0
        } else {
            b as f64 / n as f64
        }
    }
}

fn role(id: NodeId, sender: NodeId, receiver: NodeId, forwarders: usize) -> String {
    if id == sender {
        "sender".into()
    } else if id == receiver {
        "receiver".into()
    } else if forwarders == 1 {
        "forwarder".into()
    } else {
        format!("node{id}")
    }
}

fn endpoint_keys(
    scheme: Scheme,
    sender: crate::wire::Address,
    receiver: crate::wire::Address,
    seed: u64,
) -> Result<SecurityDatabases, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let mut key = |bits: usize| crypto::random_key(bits, &mut rng).map_err(|e| CliError::Config(e.to_string()));
    let esp = match scheme.esp {
        Some(c) => {
            let bits = c.default_key_len() * 8;
            Some((c, key(bits)?, key(bits)?))
        }
        None => None,
    };
    let ah = match scheme.ah {
        Some(a) => {
            let bits = a.key_len() * 8;
            Some((a, key(bits)?, key(bits)?))
        }
        None => None,
    };
    SecurityDatabases::host_to_host(sender, receiver, esp, ah).map_err(|e| CliError::Config(e.to_string()))
}

/// Runs one simulation. Nothing is written to disk; see [`write_outputs`].
pub fn run(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let topology = spec.scenario.topology()?;
    let (sender, receiver) = match (topology.nodes.first(), topology.nodes.last()) {
        (Some(a), Some(b)) if a.0 != b.0 => (*a, *b),
        _ => return Err(CliError::Config("topology needs at least two nodes".into())),
    };
    let mut stream = StreamConfig::new(sender.1, receiver.1);
    stream.payload_bytes = spec.payload_bytes;
    stream.rate_pps = spec.rate_pps;
    stream.duration_us = spec.duration_us;
    stream.start_us = WARMUP_US;
    stream.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let mut sim_cfg = SimConfig::new(spec.seed);
    sim_cfg.delay = spec.delay;
    sim_cfg.capture_hex = spec.capture_hex;
    let mut sim = Simulator::new(topology.clone(), sim_cfg)?;

    let mut keyed: BTreeMap<NodeId, SecurityDatabases> = BTreeMap::new();
    if spec.reference_keys {
        let dbs = ipsec::parse_setkey(REFERENCE_CONF).map_err(|source| CliError::Setkey {
            path: "reference".into(),
            source,
        })?;
        let covers = |a, b| dbs.sad.iter().any(|sa| sa.src == a && sa.dst == b);
        if !covers(sender.1, receiver.1) || !covers(receiver.1, sender.1) {
            return Err(CliError::Config(format!(
                "reference keys are for 192.168.2.12 <-> 192.168.2.22, not {} <-> {}",
                sender.1, receiver.1
            )));
        }
        keyed.insert(receiver.0, dbs.mirrored());
        keyed.insert(sender.0, dbs);
    } else if !spec.scheme.is_plain() {
        let dbs = endpoint_keys(spec.scheme, sender.1, receiver.1, spec.seed)?;
        keyed.insert(receiver.0, dbs.mirrored());
        keyed.insert(sender.0, dbs);
    }
    for (node, path) in &spec.setkey {
        if topology.address(*node).is_none() {
            return Err(CliError::Config(format!("--setkey names unknown node {node}")));
        }
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let dbs = ipsec::parse_setkey(&text).map_err(|source| CliError::Setkey {
            path: path.display().to_string(),
            source,
        })?;
        keyed.insert(*node, dbs);
    }

    let mut setkey_files = Vec::new();
    for (node, dbs) in &keyed {
        let text = ipsec::render_setkey(dbs);
        let back = ipsec::parse_setkey(&text)
            .map_err(|e| CliError::Invariant(format!("generated setkey file for node {node} does not parse: {e}")))?;
        if back.sad != dbs.sad || back.spd != dbs.spd {
            return Err(CliError::Invariant(format!(
                "generated setkey file for node {node} does not round-trip"
            )));
        }
        setkey_files.push((*node, text));
        sim.set_security(*node, dbs.clone())?;
    }
    for (node, f) in &spec.filters {
        sim.set_filter(*node, *f)?;
    }
    let stream_id = sim.add_stream(stream)?;
    sim.run_until(WARMUP_US + spec.duration_us + DRAIN_US);
    let result = sim.finish();
    result.check_invariants()?;

    let (send, recv) = result.stream_times(stream_id);
    let sampling = metrics::sample_delays(&send, &recv, SAMPLE_COUNT, SAMPLE_SPACING);
    let avg_delay_us = metrics::average_delay(&sampling.samples).ok();
    let summary = metrics::summarize(&result.trace, spec.duration_us).map_err(|e| CliError::Config(e.to_string()))?;
    let forwarders = topology.nodes.len().saturating_sub(2);
    let scheme_name = spec.scheme.to_string();
    let rows = topology
        .nodes
        .iter()
        .map(|(id, _)| {
            let s = summary.get(id).copied().unwrap_or_default();
            ReportRow {
                scheme: scheme_name.clone(),
                scenario: spec.scenario.name().to_string(),
                node_role: role(*id, sender.0, receiver.0, forwarders),
                tx_packets: s.tx_packets,
                rx_packets: s.rx_packets,
                fwd_packets: s.fwd_packets,
                avg_packet_size_bytes: s.avg_packet_size,
                bit_rate_bps: s.bit_rate,
                packet_rate_pps: s.packet_rate,
                avg_delay_us: if *id == receiver.0 { avg_delay_us } else { None },
            }
        })
        .collect();
    let mut points: Vec<(u64, u64)> = result
        .deliveries
        .iter()
        .filter(|d| d.stamp.stream_id == stream_id)
        .map(|d| (d.stamp.packet_id, d.delay_us()))
        .collect();
    points.sort_unstable();
    let series = DelaySeries {
        scheme: scheme_name,
        scenario: spec.scenario.name().to_string(),
        points,
    };
    Ok(RunOutcome {
        scheme: spec.scheme,
        scenario: spec.scenario.name().to_string(),
        topology,
        sender: sender.0,
        receiver: receiver.0,
        result,
        sampling,
        avg_delay_us,
        rows,
        series,
        setkey_files,
    })
}

/// Writes the report, the delay series, the setkey files and the trace
/// hash into `dir`; returns the paths written.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path, dump_routes: bool) -> Result<Vec<PathBuf>, CliError> {
    let mut written =
        metrics::emit_report(dir, &outcome.rows, std::slice::from_ref(&outcome.series)).map_err(io_err(dir))?;
    let mut put = |name: String, text: &str| -> Result<(), CliError> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(io_err(&p))?;
        written.push(p);
        Ok(())
    };
    for (node, text) in &outcome.setkey_files {
        put(format!("setkey-node{node}.conf"), text)?;
    }
    put("trace.sha256".into(), &format!("{}\n", outcome.result.trace_hash))?;
    if dump_routes {
        put("routes.txt".into(), &outcome.result.dump_routes())?;
    }
    if !outcome.result.hex.is_empty() {
        let hex: String = outcome.result.hex.iter().map(|l| format!("{l}\n")).collect();
        put("capture.hex".into(), &hex)?;
    }
    Ok(written)
}

/// Reduced per-run results kept by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub seed: u64,
    pub scenario: String,
    pub scheme: Scheme,
    pub rows: Vec<ReportRow>,
    pub avg_delay_us: Option<f64>,
    pub bytes_on_wire: u64,
    pub avg_packet_size: f64,
    pub series: DelaySeries,
    pub trace_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<Cell>,
    /// Per (scenario, scheme, role) medians across seeds.
    pub medians: Vec<ReportRow>,
    pub checks: Vec<Check>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn cell(&self, seed: u64, scenario: &str, scheme: Scheme) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.seed == seed && c.scenario == scenario && c.scheme == scheme)
    }
}

/// Runs the single-hop and multi-hop presets under every standard scheme
/// for each seed. Cells run on as many threads as the machine offers.
pub fn sweep(base: &RunSpec, seeds: &[u64]) -> Result<SweepReport, CliError> {
    let mut jobs = Vec::new();
    for &seed in seeds {
        for scenario in [Scenario::SingleHop, Scenario::MultiHop] {
            for scheme in Scheme::standard() {
                let mut spec = base.clone();
                spec.seed = seed;
                spec.scenario = scenario.clone();
                spec.scheme = scheme;
                spec.setkey.clear();
                spec.reference_keys = false;
                jobs.push(spec);
            }
        }
    }
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
    let chunks: Vec<Vec<(usize, RunSpec)>> = (0..workers)
        .map(|w| jobs.iter().cloned().enumerate().skip(w).step_by(workers).collect())
        .collect();
    let mut results: Vec<Option<Result<Cell, CliError>>> = (0..jobs.len()).map(|_| None).collect();
    thread::scope(|s| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                s.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|(i, spec)| (i, run(&spec).map(|o| reduce(&spec, o))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    let cells = results
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let medians = medians(&cells);
    let checks = ordering_checks(&cells, seeds, base.delay.is_measured());
    Ok(SweepReport { cells, medians, checks })
}

fn reduce(spec: &RunSpec, o: RunOutcome) -> Cell {
    Cell {
        seed: spec.seed,
        scenario: o.scenario.clone(),
        scheme: o.scheme,
        avg_delay_us: o.avg_delay_us,
        bytes_on_wire: o.bytes_on_wire(),
        avg_packet_size: o.avg_packet_size(),
        trace_hash: o.result.trace_hash.clone(),
        rows: o.rows,
        series: o.series,
    }
}

fn medians(cells: &[Cell]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<(String, String, String), Vec<&ReportRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for c in cells {
        for r in &c.rows {
            let k = (r.scenario.clone(), r.scheme.clone(), r.node_role.clone());
            if !groups.contains_key(&k) {
                order.push(k.clone());
            }
            groups.entry(k).or_default().push(r);
        }
    }
    let med = |rows: &[&ReportRow], f: &dyn Fn(&ReportRow) -> f64| {
        metrics::median(&rows.iter().map(|r| f(r)).collect::<Vec<_>>()).unwrap_or(0.0)
    };
    order
        .into_iter()
        .map(|k| {
            let rows = &groups[&k];
            let delays: Vec<f64> = rows.iter().filter_map(|r| r.avg_delay_us).collect();
            ReportRow {
                scheme: k.1.clone(),
                scenario: k.0.clone(),
                node_role: k.2.clone(),
                tx_packets: med(rows, &|r| r.tx_packets as f64).round() as u64,
                rx_packets: med(rows, &|r| r.rx_packets as f64).round() as u64,
                fwd_packets: med(rows, &|r| r.fwd_packets as f64).round() as u64,
                avg_packet_size_bytes: med(rows, &|r| r.avg_packet_size_bytes),
                bit_rate_bps: med(rows, &|r| r.bit_rate_bps),
                packet_rate_pps: med(rows, &|r| r.packet_rate_pps),
                avg_delay_us: metrics::median(&delays),
            }
        })
        .collect()
}

/// Secured traffic is larger than plain in every cell; with measured
/// delays, every AES scheme is faster than every 3DES scheme.
fn ordering_checks(cells: &[Cell], seeds: &[u64], measured: bool) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut size_fail = Vec::new();
    let mut delay_fail = Vec::new();
    for &seed in seeds {
        for scenario in ["single-hop", "multi-hop"] {
            let group: Vec<&Cell> = cells
                .iter()
                .filter(|c| c.seed == seed && c.scenario == scenario)
                .collect();
            let Some(plain) = group.iter().find(|c| c.scheme.is_plain()) else {
                continue;
            };
            for c in group.iter().filter(|c| !c.scheme.is_plain()) {
                if !(c.bytes_on_wire > plain.bytes_on_wire && c.avg_packet_size > plain.avg_packet_size) {
                    size_fail.push(format!("seed {seed} {scenario} {}", c.scheme));
                }
            }
            let delays = |pred: fn(&Scheme) -> bool| -> Vec<f64> {
                group
                    .iter()
                    .filter(|c| pred(&c.scheme))
                    .map(|c| c.avg_delay_us.unwrap_or(f64::NAN))
                    .collect()
            };
            let aes = delays(Scheme::uses_aes);
            let tdes = delays(Scheme::uses_tdes);
            let worst_aes = aes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let best_tdes = tdes.iter().copied().fold(f64::INFINITY, f64::min);
            if !(worst_aes < best_tdes) {
                delay_fail.push(format!(
                    "seed {seed} {scenario}: slowest AES {worst_aes:.1} us vs fastest 3DES {best_tdes:.1} us"
                ));
            }
        }
    }
    checks.push(Check {
        name: "secured bytes and packet size exceed plain".into(),
        passed: size_fail.is_empty(),
        detail: size_fail.join("; "),
    });
    if measured {
        checks.push(Check {
            name: "AES schemes faster than 3DES schemes".into(),
            passed: delay_fail.is_empty(),
            detail: delay_fail.join("; "),
        });
    }
    checks
}

/// Writes per-seed reports, the median report, the first seed's delay
/// series and the check results.
pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut seeds: Vec<u64> = report.cells.iter().map(|c| c.seed).collect();
    seeds.dedup();
    for seed in &seeds {
        let rows: Vec<ReportRow> = report
            .cells
            .iter()
            .filter(|c| c.seed == *seed)
            .flat_map(|c| c.rows.clone())
            .collect();
        let p = dir.join(format!("report-seed{seed}.csv"));
        fs::write(&p, metrics::render_csv(&rows)).map_err(io_err(&p))?;
        written.push(p);
    }
    let p = dir.join("report-median.csv");
    fs::write(&p, metrics::render_csv(&report.medians)).map_err(io_err(&p))?;
    written.push(p);
    if let Some(first) = seeds.first() {
        for c in report.cells.iter().filter(|c| c.seed == *first) {
            let p = dir.join(c.series.file_name());
            fs::write(&p, c.series.render()).map_err(io_err(&p))?;
            written.push(p);
        }
    }
    let mut text = String::new();
    for c in &report.checks {
        text.push_str(&format!(
            "{} {}{}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            if c.detail.is_empty() {
                String::new()
            } else {
                format!(": {}", c.detail)
            }
        ));
    }
    let p = dir.join("checks.txt");
    fs::write(&p, text).map_err(io_err(&p))?;
    written.push(p);
    Ok(written)
}
