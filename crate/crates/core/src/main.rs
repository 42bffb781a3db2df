use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use manet_seclab::cli::{self, CliError, RunSpec, Scenario, Scheme};
use manet_seclab::crypto::{AuthAlgorithm, CipherAlgorithm};
use manet_seclab::ipsec::{ProtocolFilter, ProtocolSet};
use manet_seclab::metrics;
use manet_seclab::simnet::{DelayModel, NodeId};

#[derive(Parser)]
#[command(name = "manet-seclab", version, about = "Simulated MANET with OLSR routing and AH/ESP overhead measurement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario under one security scheme.
    Run(RunArgs),
    /// Run both presets under all five standard schemes for each seed.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DelayArg {
    Parametric,
    Measured,
}

#[derive(Clone, Copy, ValueEnum)]
enum EspArg {
    None,
    Aes,
    #[value(name = "3des")]
    Tdes,
}

#[derive(Clone, Copy, ValueEnum)]
enum AhArg {
    None,
    Md5,
    Sha1,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "parametric")]
    delay_mode: DelayArg,
    #[arg(long, default_value_t = 300.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 25)]
    rate_pps: u32,
    #[arg(long, default_value_t = 1316)]
    payload_bytes: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "single-hop", value_parser = |s: &str| s.parse::<Scenario>())]
    scenario: Scenario,
    /// Topology file; implies `--scenario custom`.
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    esp: EspArg,
    #[arg(long, value_enum, default_value = "none")]
    ah: AhArg,
    #[arg(long, env = "MANET_SECLAB_SEED", default_value_t = 1)]
    seed: u64,
    /// NODE=PATH; replaces the generated keys of NODE.
    #[arg(long, value_parser = node_path)]
    setkey: Vec<(NodeId, PathBuf)>,
    /// NODE=PROTOCOLS, e.g. 2=udp,olsr; the node drops anything else.
    #[arg(long, value_parser = node_filter)]
    filter: Vec<(NodeId, ProtocolFilter)>,
    /// Key the endpoints with the bundled reference setkey configuration.
    #[arg(long)]
    fig2: bool,
    #[arg(long)]
    dump_routes: bool,
    /// Also write a hex dump of every frame.
    #[arg(long)]
    capture_hex: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    seeds: Vec<u64>,
    #[command(flatten)]
    common: Common,
}

fn node_path(s: &str) -> Result<(NodeId, PathBuf), String> {
    let (n, p) = s.split_once('=').ok_or("expected NODE=PATH")?;
    Ok((n.parse().map_err(|_| format!("bad node id '{n}'"))?, PathBuf::from(p)))
}

fn node_filter(s: &str) -> Result<(NodeId, ProtocolFilter), String> {
    let (n, set) = s.split_once('=').ok_or("expected NODE=PROTOCOLS")?;
    let set: ProtocolSet = set.parse().map_err(|e| format!("{e}"))?;
    Ok((n.parse().map_err(|_| format!("bad node id '{n}'"))?, ProtocolFilter::allow(set)))
}

fn base_spec(c: &Common) -> Result<RunSpec, CliError> {
    if !(c.duration_s.is_finite() && c.duration_s > 0.0) {
        return Err(CliError::Config("--duration-s must be positive".into()));
    }
    let mut spec = RunSpec::new(Scenario::SingleHop, Scheme::PLAIN, 0);
    spec.delay = match c.delay_mode {
        DelayArg::Parametric => DelayModel::default(),
        DelayArg::Measured => DelayModel::measured(),
    };
    spec.duration_us = (c.duration_s * 1e6).round() as u64;
    spec.rate_pps = c.rate_pps;
    spec.payload_bytes = c.payload_bytes;
    spec.output_dir = Some(c.out.clone());
    Ok(spec)
}

fn run(a: RunArgs) -> Result<bool, CliError> {
    let mut spec = base_spec(&a.common)?;
    spec.scenario = match (a.topology, a.scenario) {
        (Some(p), Scenario::SingleHop | Scenario::Custom(_)) => Scenario::Custom(p),
        (Some(_), _) => return Err(CliError::Config("--topology only applies to the custom scenario".into())),
        (None, Scenario::Custom(_)) => return Err(CliError::Config("custom scenario needs --topology".into())),
        (None, s) => s,
    };
    spec.scheme = Scheme {
        esp: match a.esp {
            EspArg::None => None,
            EspArg::Aes => Some(CipherAlgorithm::AesCbc),
            EspArg::Tdes => Some(CipherAlgorithm::TdesCbc),
        },
        ah: match a.ah {
            AhArg::None => None,
            AhArg::Md5 => Some(AuthAlgorithm::HmacMd5),
            AhArg::Sha1 => Some(AuthAlgorithm::HmacSha1),
        },
    };
    if a.fig2 && !spec.scheme.is_plain() {
        return Err(CliError::Config("--fig2 supplies its own keys; drop --esp/--ah".into()));
    }
    spec.seed = a.seed;
    spec.setkey = a.setkey;
    spec.filters = a.filter;
    spec.reference_keys = a.fig2;
    spec.dump_routes = a.dump_routes;
    spec.capture_hex = a.capture_hex;
    let outcome = cli::run(&spec)?;
    let written = cli::write_outputs(&outcome, &a.common.out, spec.dump_routes)?;
    print!("{}", metrics::render_csv(&outcome.rows));
    let s = &outcome.result.streams[0];
    println!(
        "stream: sent {} received {} dropped {} in flight {}",
        s.sent,
        s.received,
        s.dropped(),
        s.in_flight
    );
    for (cause, n) in &s.drops {
        println!("  drop {cause}: {n}");
    }
    if !outcome.sampling.substitutions.is_empty() || outcome.sampling.short {
        println!(
            "delay sampling: {} samples, {} substitutions{}",
            outcome.sampling.samples.len(),
            outcome.sampling.substitutions.len(),
            if outcome.sampling.short { ", short" } else { "" }
        );
    }
    if spec.dump_routes {
        print!("{}", outcome.result.dump_routes());
    }
    println!("trace {}", outcome.result.trace_hash);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(true)
}

fn sweep(a: SweepArgs) -> Result<bool, CliError> {
    if a.seeds.is_empty() {
        return Err(CliError::Config("--seeds is empty".into()));
    }
    let base = base_spec(&a.common)?;
    let report = cli::sweep(&base, &a.seeds)?;
    let written = cli::write_sweep(&report, &a.common.out)?;
    print!("{}", metrics::render_csv(&report.medians));
    for c in &report.checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
        if !c.detail.is_empty() {
            println!("  {}", c.detail);
        }
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
