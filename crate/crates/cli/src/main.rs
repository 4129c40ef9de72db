//! Command-line frontend: seeded, reproducible protocol sessions, attack
//! scenarios, figure sweeps, and the cross-oracle validation suite.
//!
//! Exit codes: 0 ok, 2 usage error, 3 security alarm, 4 I/O failure,
//! 5 validation failure.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use tmss_core::attacks::AttackScenario;
use tmss_core::experiments::{
    headline_check, run_sweep, EtaGrid, McParams, SweepOutput, SweepSpec,
};
use tmss_core::gaussian::SqueezeParams;
use tmss_core::protocol::{
    random_payload_bits, run_session, ChannelModel, ProtocolConfig, SessionKind,
    SessionTranscript, ThresholdMode,
};
use tmss_core::validate::{run_validation, ValidationOptions};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 2;
const EXIT_ALARM: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_VALIDATION: u8 = 5;

/// Environment variable supplying the default output directory.
const OUT_DIR_ENV: &str = "TMSS_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "tmss",
    version,
    about = "Two-mode squeezed state secure communication simulator",
    long_about = "Simulates deterministic secure communication over the squeezing phase of a \
                  two-mode squeezed state: seeded protocol sessions under eavesdropping attacks, \
                  loss sweeps of the squeezing degree and SNR, and cross-validation of the \
                  Gaussian engine against a truncated Fock-space oracle."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a key-distribution session and write the transcript.
    Keygen(SessionArgs),
    /// Transmit a message with interleaved check bits; the message disclosure
    /// is withheld on alarm.
    Message(SessionArgs),
    /// Emit squeezing-degree / SNR sweep data as CSV.
    Sweep(SweepArgs),
    /// Cross-validate the Gaussian engine, the Fock oracle, and the
    /// closed-form variance laws.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct SessionArgs {
    /// Squeezing magnitude s.
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    /// Squeezing phase theta in radians.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Honest-channel transmissivity for the mode sent to Bob.
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Explicit payload bits, e.g. 0101 (keygen only).
    #[arg(long, value_name = "BITS")]
    bits: Option<String>,
    /// Draw this many random payload bits from the session seed (keygen only).
    #[arg(long, value_name = "N", conflicts_with = "bits")]
    random_bits: Option<usize>,
    /// Message payload as hex, e.g. a1ff (message only).
    #[arg(long, value_name = "HEX")]
    message: Option<String>,
    /// Homodyne samples per time slot.
    #[arg(long)]
    samples_per_slot: Option<usize>,
    /// Fraction of slots carrying check bits, in (0, 1).
    #[arg(long)]
    check_fraction: Option<f64>,
    /// Attack scenario: none, intercept-resend[:s_eve], tap:eta[:measure],
    /// noise:epsilon[:phi].
    #[arg(long, value_name = "SPEC")]
    attack: Option<String>,
    /// Master seed; drawn from the OS and recorded in the manifest if absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Decision rule between the two variance levels.
    #[arg(long, value_enum)]
    threshold: Option<ThresholdArg>,
    /// Randomize the squeezing phase per slot (hardening mode).
    #[arg(long)]
    theta_modulation: bool,
    /// Alarm tolerance on the squeezing-degree rise, dB.
    #[arg(long)]
    tol_d: Option<f64>,
    /// Alarm tolerance on the SNR drop, dB.
    #[arg(long)]
    tol_snr: Option<f64>,
    /// Include private records (LO phases, ground truth) in the transcript.
    #[arg(long)]
    include_private: bool,
    /// Output directory (default: $TMSS_OUT_DIR or the working directory).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// key=value file supplying defaults for the flags above.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ThresholdArg {
    GeometricMean,
    LikelihoodRatio,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Which figure data to emit.
    #[arg(long, value_enum, default_value = "both")]
    kind: SweepKind,
    /// Squeezing magnitudes (repeatable).
    #[arg(long = "s", value_name = "S")]
    s_values: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    eta_start: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_stop: f64,
    #[arg(long, default_value_t = 0.01)]
    eta_step: f64,
    /// Also emit Monte-Carlo estimate rows.
    #[arg(long)]
    mc: bool,
    /// Monte-Carlo slots per grid cell.
    #[arg(long, default_value_t = 100)]
    slots: usize,
    /// Monte-Carlo samples per slot.
    #[arg(long, default_value_t = 200)]
    samples_per_slot: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Degree,
    Snr,
    Both,
}

#[derive(Args, Clone)]
struct ValidateArgs {
    /// Negative control: corrupt the squeezer sign so the suite must fail.
    #[arg(long)]
    negative_control: bool,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {err}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Keygen(args) => run_session_cmd(args, SessionKind::Key),
        Command::Message(args) => run_session_cmd(args, SessionKind::Message),
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Validate(args) => run_validate_cmd(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

/// Flat key=value defaults file; '#' starts a comment.
fn load_config_file(path: &Path) -> Result<HashMap<String, String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), lineno + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn file_value<T: std::str::FromStr>(
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, Failure> {
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| usage(format!("config file: cannot parse {key}={raw}"))),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn parse_bits(text: &str) -> Result<Vec<u8>, Failure> {
    if text.is_empty() {
        return Err(usage("bit string must be non-empty"));
    }
    text.chars()
        .map(|c| match c {
            '0' => Ok(0u8),
            '1' => Ok(1u8),
            other => Err(usage(format!("bit strings contain only 0 and 1, got '{other}'"))),
        })
        .collect()
}

fn hex_to_bits(text: &str) -> Result<Vec<u8>, Failure> {
    if text.is_empty() || text.len() % 2 != 0 {
        return Err(usage("message hex must be non-empty with an even digit count"));
    }
    let mut bits = Vec::with_capacity(text.len() * 4);
    for c in text.chars() {
        let nibble = c
            .to_digit(16)
            .ok_or_else(|| usage(format!("invalid hex digit '{c}'")))? as u8;
        for k in (0..4).rev() {
            bits.push((nibble >> k) & 1);
        }
    }
    Ok(bits)
}

fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|chunk| {
            let mut nibble = 0u8;
            for (i, b) in chunk.iter().enumerate() {
                nibble |= b << (3 - i);
            }
            char::from_digit(nibble as u32, 16).unwrap()
        })
        .collect()
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    config: serde_json::Value,
    seed: u64,
    artifacts: Vec<String>,
    tool_version: &'a str,
    timestamp_unix: u64,
}

fn write_manifest(
    dir: &Path,
    subcommand: &str,
    config: serde_json::Value,
    seed: u64,
    artifacts: &[PathBuf],
) -> Result<PathBuf, Failure> {
    let manifest = RunManifest {
        subcommand,
        config,
        seed,
        artifacts: artifacts
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| io_failure(&path, e))?;
    Ok(path)
}

fn draw_seed(flag: Option<u64>) -> u64 {
    flag.unwrap_or_else(|| rand::rng().random())
}

fn resolve_session_config(
    args: &SessionArgs,
    kind: SessionKind,
) -> Result<(ProtocolConfig, ChannelModel, AttackScenario, Vec<u8>, u64), Failure> {
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => HashMap::new(),
    };
    let s = args
        .s
        .or(file_value(&file, "s")?)
        .unwrap_or(1.0);
    let theta = args.theta.or(file_value(&file, "theta")?).unwrap_or(0.0);
    let eta = args.eta.or(file_value(&file, "eta")?).unwrap_or(1.0);
    let samples = args
        .samples_per_slot
        .or(file_value(&file, "samples_per_slot")?)
        .unwrap_or(tmss_core::protocol::DEFAULT_SAMPLES_PER_SLOT);
    let fraction = args
        .check_fraction
        .or(file_value(&file, "check_fraction")?)
        .unwrap_or(tmss_core::protocol::DEFAULT_CHECK_BIT_FRACTION);
    let attack_spec = args
        .attack
        .clone()
        .or(file_value(&file, "attack")?)
        .unwrap_or_else(|| "none".to_string());
    let seed = draw_seed(args.seed.or(file_value(&file, "seed")?));

    let squeeze =
        SqueezeParams::new(s, theta).map_err(|e| usage(e.to_string()))?;
    let mut config = ProtocolConfig::new(squeeze, seed);
    config.samples_per_slot = samples;
    config.check_bit_fraction = fraction;
    if args.theta_modulation || file.get("theta_modulation").map(|v| v == "true").unwrap_or(false)
    {
        config.theta_modulation = true;
    }
    if let Some(mode) = &args.threshold {
        config.decision_threshold_mode = match mode {
            ThresholdArg::GeometricMean => ThresholdMode::GeometricMean,
            ThresholdArg::LikelihoodRatio => ThresholdMode::LikelihoodRatio,
        };
    }
    if let Some(tol) = args.tol_d.or(file_value(&file, "tol_d")?) {
        config.verdict_tolerances.tol_d_db = tol;
    }
    if let Some(tol) = args.tol_snr.or(file_value(&file, "tol_snr")?) {
        config.verdict_tolerances.tol_snr_db = tol;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;

    let channel = ChannelModel { eta };
    channel.validate().map_err(|e| usage(e.to_string()))?;
    let attack: AttackScenario = attack_spec
        .parse()
        .map_err(|e: tmss_core::Error| usage(e.to_string()))?;

    let payload = match kind {
        SessionKind::Key => match (&args.bits, args.random_bits) {
            (Some(text), _) => parse_bits(text)?,
            (None, Some(n)) if n > 0 => random_payload_bits(&config, n),
            (None, Some(_)) => return Err(usage("--random-bits must be positive")),
            (None, None) => random_payload_bits(&config, 128),
        },
        SessionKind::Message => match &args.message {
            Some(hex) => hex_to_bits(hex)?,
            None => return Err(usage("message mode needs --message HEX")),
        },
    };
    Ok((config, channel, attack, payload, seed))
}

fn run_session_cmd(args: SessionArgs, kind: SessionKind) -> Result<u8, Failure> {
    if kind == SessionKind::Key && args.message.is_some() {
        return Err(usage("--message belongs to the message subcommand"));
    }
    if kind == SessionKind::Message && (args.bits.is_some() || args.random_bits.is_some()) {
        return Err(usage("--bits/--random-bits belong to the keygen subcommand"));
    }
    let (config, channel, attack, payload, seed) = resolve_session_config(&args, kind)?;
    let transcript = run_session(&config, kind, &payload, &channel, &attack)
        .map_err(|e| usage(e.to_string()))?;

    let dir = out_dir(args.out);
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let transcript_path = dir.join("transcript.json");
    fs::write(
        &transcript_path,
        transcript.to_json(args.include_private),
    )
    .map_err(|e| io_failure(&transcript_path, e))?;
    let report_path = dir.join("security_report.json");
    fs::write(
        &report_path,
        serde_json::to_string_pretty(&transcript.security).expect("report serializes"),
    )
    .map_err(|e| io_failure(&report_path, e))?;
    let config_json = serde_json::json!({
        "kind": kind,
        "protocol": config,
        "channel": channel,
        "attack": attack,
        "include_private": args.include_private,
    });
    let manifest_path = write_manifest(
        &dir,
        match kind {
            SessionKind::Key => "keygen",
            SessionKind::Message => "message",
        },
        config_json,
        seed,
        &[transcript_path.clone(), report_path.clone()],
    )?;

    print_session_summary(&transcript, kind);
    println!(
        "wrote {}, {}, {}",
        transcript_path.display(),
        report_path.display(),
        manifest_path.display()
    );
    Ok(if transcript.security.is_alarm() {
        EXIT_ALARM
    } else {
        EXIT_OK
    })
}

fn print_session_summary(transcript: &SessionTranscript, kind: SessionKind) {
    let sec = &transcript.security;
    println!(
        "verdict: {} (D: {:.3} dB vs baseline {:.3} dB over {} check slots)",
        if sec.is_alarm() { "ALARM" } else { "secure" },
        sec.measured_d_db,
        sec.baseline_d_db,
        sec.n_check_slots
    );
    match (&transcript.decoded_payload, kind) {
        (Some(bits), SessionKind::Key) => {
            let shown = if bits.len() <= 128 {
                bits_to_string(bits)
            } else {
                format!("{}... ({} bits)", bits_to_string(&bits[..128]), bits.len())
            };
            println!("decoded key: {shown}");
        }
        (Some(bits), SessionKind::Message) => {
            println!("decoded message: {}", bits_to_hex(bits));
        }
        (None, _) => println!("payload withheld: channel compromised, use a different channel"),
    }
}

fn run_sweep_cmd(args: SweepArgs) -> Result<u8, Failure> {
    let seed = draw_seed(args.seed);
    let spec = SweepSpec {
        s_values: if args.s_values.is_empty() {
            vec![0.2, 0.5, 1.0]
        } else {
            args.s_values.clone()
        },
        eta_grid: EtaGrid {
            start: args.eta_start,
            stop: args.eta_stop,
            step: args.eta_step,
        },
        output: if args.mc {
            SweepOutput::Both
        } else {
            SweepOutput::Analytic
        },
        mc: args.mc.then_some(McParams {
            samples_per_slot: args.samples_per_slot,
            slots: args.slots,
            seed,
        }),
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;

    let dir = out_dir(args.out);
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let mut artifacts = Vec::new();
    let result = run_sweep(&spec).map_err(|e| usage(e.to_string()))?;
    let csv = result.to_csv();
    if matches!(args.kind, SweepKind::Degree | SweepKind::Both) {
        let path = dir.join("degree_sweep.csv");
        fs::write(&path, &csv).map_err(|e| io_failure(&path, e))?;
        artifacts.push(path);
    }
    if matches!(args.kind, SweepKind::Snr | SweepKind::Both) {
        let path = dir.join("snr_sweep.csv");
        fs::write(&path, &csv).map_err(|e| io_failure(&path, e))?;
        artifacts.push(path);
    }

    // headline summary whenever the grid covers the 7%-interception story
    let etas = spec.eta_grid.points();
    let covers = spec.s_values.iter().any(|s| (*s - 1.0).abs() < 1e-12)
        && etas.iter().any(|e| (*e - 1.0).abs() < 1e-12)
        && etas.iter().any(|e| (*e - 0.93).abs() < 1e-12);
    if covers {
        println!("{}", headline_check().summary());
    }

    let config_json = serde_json::to_value(&spec).expect("spec serializes");
    let manifest_path = write_manifest(&dir, "sweep", config_json, seed, &artifacts)?;
    for p in &artifacts {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", manifest_path.display());
    Ok(EXIT_OK)
}

fn run_validate_cmd(args: ValidateArgs) -> Result<u8, Failure> {
    let report = run_validation(&ValidationOptions {
        flip_squeezer_sign: args.negative_control,
    })
    .map_err(|e| usage(e.to_string()))?;
    println!("{report}");
    Ok(if report.pass() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}
