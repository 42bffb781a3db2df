//! Per-node traffic totals, rates, sampled end-to-end delay and the CSV report.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ipsec::Reject;
use crate::simnet::{Action, NodeId, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropCause {
    NoRoute,
    Filtered,
    TtlExpired,
    Security(Reject),
    OutOfRange,
    Loss,
    OutboundError,
    Malformed,
}

impl fmt::Display for DropCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropCause::NoRoute => f.write_str("no_route"),
            DropCause::Filtered => f.write_str("filtered"),
            DropCause::TtlExpired => f.write_str("ttl_expired"),
            DropCause::Security(r) => write!(f, "security_{r}"),
            DropCause::OutOfRange => f.write_str("out_of_range"),
            DropCause::Loss => f.write_str("loss"),
            DropCause::OutboundError => f.write_str("outbound_error"),
            DropCause::Malformed => f.write_str("malformed"),
        }
    }
}

/// `tx_*` counts every transmission, forwarded ones included; `fwd_*` is the
/// forwarded subset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub tx_packets: u64,
    pub rx_packets: u64,
    pub fwd_packets: u64,
    pub tx_bytes: u64,
    pub rx_bytes: u64,
    pub fwd_bytes: u64,
    pub drops: BTreeMap<DropCause, u64>,
}

impl NodeCounters {
    pub fn dropped(&self) -> u64 {
        self.drops.values().sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeSummary {
    pub tx_packets: u64,
    pub rx_packets: u64,
    pub fwd_packets: u64,
    pub tx_bytes: u64,
    pub avg_packet_size: f64,
    pub bit_rate: f64,
    pub packet_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no delay samples")]
    NoSamples,
    #[error("rate window must be positive")]
    ZeroWindow,
}

/// Sizes and rates over each node's transmissions. Rates use `window_us`,
/// not the span between first and last packet.
pub fn summarize(trace: &[TraceEntry], window_us: u64) -> Result<BTreeMap<NodeId, NodeSummary>, MetricsError> {
    if window_us == 0 {
        return Err(MetricsError::ZeroWindow);
    }
    let mut out: BTreeMap<NodeId, NodeSummary> = BTreeMap::new();
    for e in trace {
        let s = out.entry(e.node).or_default();
        match e.action {
            Action::Tx => {
                s.tx_packets += 1;
                s.tx_bytes += e.bytes as u64;
            }
            Action::Rx => s.rx_packets += 1,
            Action::Fwd => s.fwd_packets += 1,
            _ => {}
        }
    }
    let secs = window_us as f64 / 1e6;
    for s in out.values_mut() {
        if s.tx_packets > 0 {
            s.avg_packet_size = s.tx_bytes as f64 / s.tx_packets as f64;
        }
        s.bit_rate = 8.0 * s.tx_bytes as f64 / secs;
        s.packet_rate = s.tx_packets as f64 / secs;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelaySample {
    pub packet_id: u64,
    pub send_us: u64,
    pub recv_us: u64,
}

impl DelaySample {
    pub fn delay_us(&self) -> u64 {
        self.recv_us - self.send_us
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DelaySampling {
    pub samples: Vec<DelaySample>,
    /// (wanted id, id used instead) for every lost pick.
    pub substitutions: Vec<(u64, u64)>,
    /// Fewer than `count` strides were available.
    pub short: bool,
}

pub const SAMPLE_COUNT: usize = 20;
pub const SAMPLE_SPACING: usize = 10;

/// Picks the packets at send indices 0, spacing, 2×spacing, … and pairs
/// them with their receipt. A lost pick is replaced by the next later
/// packet that was delivered and not already sampled.
pub fn sample_delays(send: &[(u64, u64)], recv: &[(u64, u64)], count: usize, spacing: usize) -> DelaySampling {
    let spacing = spacing.max(1);
    let received: HashMap<u64, u64> = recv.iter().copied().collect();
    let strides = (send.len() / spacing).min(count);
    let mut out = DelaySampling {
        short: strides < count,
        ..Default::default()
    };
    let mut used = std::collections::HashSet::new();
    for k in 0..strides {
        let wanted = send[k * spacing].0;
        let pick = send[k * spacing..]
            .iter()
            .find(|(id, _)| received.contains_key(id) && !used.contains(id));
        let Some(&(id, sent)) = pick else {
            continue;
        };
        if id != wanted {
            out.substitutions.push((wanted, id));
        }
        used.insert(id);
        out.samples.push(DelaySample {
            packet_id: id,
            send_us: sent,
            recv_us: received[&id],
        });
    }
    out
}

/// Arithmetic mean in microseconds.
pub fn average_delay(samples: &[DelaySample]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::NoSamples);
    }
    let sum: u128 = samples.iter().map(|s| s.delay_us() as u128).sum();
    Ok(sum as f64 / samples.len() as f64)
}

pub const CSV_HEADER: &str = "scheme,scenario,node_role,tx_packets,rx_packets,fwd_packets,avg_packet_size_bytes,bit_rate_bps,packet_rate_pps,avg_delay_us";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scheme: String,
    pub scenario: String,
    pub node_role: String,
    pub tx_packets: u64,
    pub rx_packets: u64,
    pub fwd_packets: u64,
    pub avg_packet_size_bytes: f64,
    pub bit_rate_bps: f64,
    pub packet_rate_pps: f64,
    pub avg_delay_us: Option<f64>,
}

impl ReportRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3},{:.3},{:.3},{}",
            self.scheme,
            self.scenario,
            self.node_role,
            self.tx_packets,
            self.rx_packets,
            self.fwd_packets,
            self.avg_packet_size_bytes,
            self.bit_rate_bps,
            self.packet_rate_pps,
            self.avg_delay_us.map(|d| format!("{d:.3}")).unwrap_or_default()
        )
    }
}

/// Per-packet delays of one run: (packet id, delay µs) in id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelaySeries {
    pub scheme: String,
    pub scenario: String,
    pub points: Vec<(u64, u64)>,
}

impl DelaySeries {
    pub fn file_name(&self) -> String {
        format!("delay_{}_{}.tsv", self.scenario, self.scheme)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("packet_index\tdelay_us\n");
        for (id, d) in &self.points {
            out.push_str(&format!("{id}\t{d}\n"));
        }
        out
    }
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

/// Writes `report.csv` and one delay series file per entry; returns the
/// paths written.
pub fn emit_report(dir: &Path, rows: &[ReportRow], series: &[DelaySeries]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(series.len() + 1);
    let csv = dir.join("report.csv");
    fs::write(&csv, render_csv(rows))?;
    written.push(csv);
    for s in series {
        let p = dir.join(s.file_name());
        fs::write(&p, s.render())?;
        written.push(p);
    }
    Ok(written)
}

/// Median of a non-empty list; mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::Protocol;

    fn tx(node: NodeId, bytes: usize) -> TraceEntry {
        TraceEntry {
            time_us: 0,
            node,
            action: Action::Tx,
            protocol: Protocol::Udp,
            bytes,
            stamp: None,
        }
    }

    #[test]
    fn summary_arithmetic() {
        let trace: Vec<_> = (0..10).map(|_| tx(1, 100)).collect();
        let s = summarize(&trace, 5_000_000).unwrap()[&1];
        assert_eq!(s.avg_packet_size, 100.0);
        assert_eq!(s.bit_rate, 1600.0);
        assert_eq!(s.packet_rate, 2.0);
        assert!(summarize(&[], 1).unwrap().is_empty());
        assert_eq!(summarize(&[], 0), Err(MetricsError::ZeroWindow));
    }

    #[test]
    fn constant_delay() {
        let send: Vec<_> = (0..300).map(|i| (i, i * 40_000)).collect();
        let recv: Vec<_> = send.iter().map(|&(i, t)| (i, t + 3_000)).collect();
        let s = sample_delays(&send, &recv, SAMPLE_COUNT, SAMPLE_SPACING);
        assert_eq!(s.samples.len(), 20);
        assert!(!s.short);
        assert!(s.samples.iter().all(|x| x.delay_us() == 3_000));
        assert_eq!(average_delay(&s.samples), Ok(3_000.0));
        assert_eq!(average_delay(&[]), Err(MetricsError::NoSamples));
    }

    #[test]
    fn lost_pick_is_substituted() {
        let send: Vec<_> = (0..50).map(|i| (i, i * 10)).collect();
        let recv: Vec<_> = send.iter().filter(|(i, _)| *i != 10).map(|&(i, t)| (i, t + 7)).collect();
        let s = sample_delays(&send, &recv, 20, 10);
        assert!(s.short);
        assert_eq!(s.samples.len(), 5);
        assert_eq!(s.substitutions, vec![(10, 11)]);
        assert_eq!(s.samples[1].packet_id, 11);
    }

    #[test]
    fn median_matches_sorted_middle() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn csv_header_columns() {
        let cols: Vec<_> = CSV_HEADER.split(',').collect();
        assert_eq!(cols.len(), 10);
        let row = ReportRow {
            scheme: "plain".into(),
            scenario: "single-hop".into(),
            node_role: "sender".into(),
            tx_packets: 1,
            rx_packets: 2,
            fwd_packets: 0,
            avg_packet_size_bytes: 1.0,
            bit_rate_bps: 8.0,
            packet_rate_pps: 1.0,
            avg_delay_us: None,
        };
        assert_eq!(row.csv().split(',').count(), 10);
    }
}
