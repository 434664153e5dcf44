//! Commands behind the `crystal-tc0` binary.
//!
//! Each command returns a [`Report`]: a deterministic `payload`, run
//! `metadata` kept apart from it (timestamps live only there), and the exit
//! code. The binary prints the envelope; tests call the commands directly.
//!
//! Exit codes: [`exit::OK`], [`exit::FAILED`] when a check does not pass,
//! [`exit::SCHEMA`] for malformed or unsupported inputs and
//! [`exit::DOMAIN`] for inputs that parse but violate value constraints.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crystal_tc0::circuit::{macro_depth, MacroCircuit};
use crystal_tc0::compiler::{
    check_bounds, lower_egnn, lower_fourier, lower_layer, lower_matmul, lower_message, lower_mlp, lower_trig,
    scaling_csv, size_scaling, Aggregation, DepthTable, LoweringError, LoweringOptions, ScalingError, ScalingRegime,
    ScalingRow,
};
use crystal_tc0::crystal::{load_crystal_json, CrystalError, FracUnitCell};
use crystal_tc0::egnn::{egnn_forward, EgnnConfig, EgnnError, EvalOptions, HiddenState, Mode, Params};
use crystal_tc0::fpn::{ArithOp, Precision};
use crystal_tc0::synth::{synthesize, verify, SynthError, SynthSpec, VerifyMode};

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const SCHEMA: i32 = 2;
    pub const DOMAIN: i32 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "crystal-tc0", version, about = "Reference EGNN, depth accounting and FP circuit synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the network on a crystal.
    Eval(EvalArgs),
    /// Lower one construct to a macro circuit.
    Compile(CompileArgs),
    /// Compare measured depths against the depth table.
    CheckBounds(BoundsArgs),
    /// Build and verify a threshold circuit for one FP operation.
    Synth(SynthArgs),
    /// Macro-circuit size as `n` grows, as CSV.
    Scaling(ScalingArgs),
    /// Quick end-to-end checks on built-in examples.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Real,
    Fpn,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Real => Mode::Real,
            ModeArg::Fpn => Mode::Fpn,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub crystal: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Weights blob; generated from the seed when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub p: Option<u32>,
    /// Worker threads; the global pool when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Construct {
    Trig,
    Fourier,
    Mlp,
    Matmul,
    Message,
    Layer,
    Egnn,
}

#[derive(Debug, Clone, Args)]
pub struct CompileArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "egnn")]
    pub construct: Construct,
    /// Lower the neighbour sum as its own stage.
    #[arg(long)]
    pub separate_aggregation: bool,
    /// Evaluate sin and cos one after the other.
    #[arg(long)]
    pub serialize_trig: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Replacement depth table JSON.
    #[arg(long)]
    pub depth_table: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    pub n_list: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = parse_op)]
    pub op: ArithOp,
    #[arg(long)]
    pub p: u32,
    /// Verify on this many random pairs instead of all of them.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the circuit JSON.
    #[arg(long)]
    pub circuit_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Proportional,
    Fixed,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    pub n_list: Vec<usize>,
    #[arg(long, value_enum, default_value = "proportional")]
    pub regime: RegimeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_op(s: &str) -> Result<ArithOp, String> {
    s.parse()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn schema(message: impl Into<String>) -> Self {
        CliError { code: exit::SCHEMA, message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        CliError { code: exit::DOMAIN, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CrystalError> for CliError {
    fn from(e: CrystalError) -> Self {
        if e.is_schema() {
            CliError::schema(format!("crystal: {e}"))
        } else {
            CliError::domain(format!("crystal: {e}"))
        }
    }
}

impl From<EgnnError> for CliError {
    fn from(e: EgnnError) -> Self {
        if e.is_domain() {
            CliError::domain(e.to_string())
        } else {
            CliError::schema(e.to_string())
        }
    }
}

impl From<LoweringError> for CliError {
    fn from(e: LoweringError) -> Self {
        CliError::schema(e.to_string())
    }
}

impl From<ScalingError> for CliError {
    fn from(e: ScalingError) -> Self {
        CliError::schema(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::schema(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub unix_time: u64,
    pub elapsed_ms: u128,
}

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub code: i32,
    pub command: &'static str,
    pub payload: Value,
    pub metadata: Metadata,
    /// Plain-text rendering for commands whose primary output is not JSON.
    pub text: Option<String>,
}

impl Report {
    fn new(command: &'static str, code: i32, payload: Value, started: Instant) -> Self {
        let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Report {
            code,
            command,
            payload,
            metadata: Metadata {
                tool: "crystal-tc0",
                version: env!("CARGO_PKG_VERSION"),
                command,
                unix_time,
                elapsed_ms: started.elapsed().as_millis(),
            },
            text: None,
        }
    }

    /// Canonical bytes of the payload, for comparing runs.
    pub fn payload_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.payload).expect("payload serializes")
    }

    pub fn envelope(&self) -> Value {
        json!({
            "schema_version": OUTPUT_SCHEMA_VERSION,
            "payload": self.payload,
            "metadata": self.metadata,
        })
    }

    /// What the binary writes: the text form if there is one, else the envelope.
    pub fn render(&self) -> String {
        match &self.text {
            Some(t) => t.clone(),
            None => serde_json::to_string_pretty(&self.envelope()).expect("envelope serializes") + "\n",
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

/// The configuration used when a command is run without `--model`.
pub fn default_model() -> EgnnConfig {
    EgnnConfig::new(4, 3, 8, 4, 2, Mode::Real, 24, 0)
}

fn load_model(path: Option<&Path>) -> Result<EgnnConfig, CliError> {
    match path {
        None => Ok(default_model()),
        Some(p) => Ok(EgnnConfig::from_json(&read(p)?)?),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn output_checksum(h: &HiddenState) -> String {
    let mut hasher = Sha256::new();
    for v in h.values.iter() {
        hasher.update(v.to_le_bytes());
    }
    if let Some(exact) = &h.exact {
        for x in exact {
            hasher.update(x.sig().to_le_bytes());
            hasher.update(x.exp().to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

fn columns(h: &HiddenState) -> Vec<Vec<f64>> {
    h.values.column_iter().map(|c| c.iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
struct EvalPayload {
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<u32>,
    n: usize,
    d: usize,
    q: usize,
    seed: u64,
    weights_checksum: String,
    /// `H_q` by column: entry `i` is `h_i`.
    output: Vec<Vec<f64>>,
    output_checksum: String,
    /// Largest entrywise gap to the same network evaluated in real mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_deviation_from_real: Option<f64>,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Report, CliError> {
    let started = Instant::now();
    let cell: FracUnitCell = load_crystal_json(&read(&args.crystal)?)?;
    let mut cfg = EgnnConfig::from_json(&read(&args.model)?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode.into();
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    cfg.validate()?;
    let params = match &args.weights {
        None => Params::from_config(&cfg),
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
            let (params, _) = Params::from_blob(&bytes)?;
            params.check_shapes(&cfg)?;
            params
        }
    };
    let opts = EvalOptions { threads: args.threads };
    let out = egnn_forward(&cfg, &params, &cell, opts)?;
    let deviation = if cfg.mode == Mode::Fpn {
        let real = egnn_forward(&EgnnConfig { mode: Mode::Real, ..cfg.clone() }, &params, &cell, opts)?;
        Some(real.values.iter().zip(out.values.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    } else {
        None
    };
    let payload = EvalPayload {
        mode: cfg.mode,
        p: (cfg.mode == Mode::Fpn).then_some(cfg.p),
        n: cfg.n,
        d: cfg.d,
        q: cfg.q,
        seed: cfg.seed,
        weights_checksum: params.checksum(),
        output: columns(&out),
        output_checksum: output_checksum(&out),
        max_abs_deviation_from_real: deviation,
    };
    Ok(Report::new("eval", exit::OK, to_value(&payload), started))
}

fn lower(cfg: &EgnnConfig, construct: Construct, opts: &LoweringOptions) -> Result<MacroCircuit, CliError> {
    Ok(match construct {
        Construct::Trig => lower_trig(),
        Construct::Fourier => lower_fourier(cfg.k, opts),
        Construct::Mlp => lower_mlp(&cfg.phi_msg_widths(), cfg.activation),
        Construct::Matmul => lower_matmul(),
        Construct::Message => lower_message(cfg, opts)?,
        Construct::Layer => lower_layer(cfg, opts)?,
        Construct::Egnn => lower_egnn(cfg, opts)?,
    })
}

pub fn cmd_compile(args: &CompileArgs) -> Result<Report, CliError> {
    let started = Instant::now();
    let cfg = load_model(args.model.as_deref())?;
    let opts = LoweringOptions {
        aggregation: if args.separate_aggregation { Aggregation::Separate } else { Aggregation::Fused },
        serialize_trig: args.serialize_trig,
        ..LoweringOptions::default()
    };
    let c = lower(&cfg, args.construct, &opts)?;
    let d = macro_depth(&c).map_err(|e| CliError::schema(e.to_string()))?;
    let payload = json!({
        "construct": args.construct,
        "depth": d.depth,
        "flagged_joins": d.flagged,
        "output_join_flagged": d.output_join_flagged,
        "size": c.size(),
        "nodes": c.nodes.len(),
        "circuit": c,
    });
    Ok(Report::new("compile", exit::OK, payload, started))
}

pub fn cmd_check_bounds(args: &BoundsArgs) -> Result<Report, CliError> {
    let started = Instant::now();
    let cfg = load_model(args.model.as_deref())?;
    let table = match &args.depth_table {
        None => DepthTable::published(),
        Some(p) => DepthTable::from_json(&read(p)?).map_err(|e| CliError::schema(format!("depth table: {e}")))?,
    };
    let outcome = check_bounds(&cfg, &table, &LoweringOptions::default())?;
    let proportional = size_scaling(&cfg, &args.n_list, ScalingRegime::Proportional)?;
    let fixed = size_scaling(&cfg, &args.n_list, ScalingRegime::Fixed)?;
    let passed = outcome.passed();
    let payload = json!({
        "passed": passed,
        "depth_table": table,
        "bounds": outcome,
        "scaling": {
            "proportional": proportional,
            "fixed": fixed,
            "max_slope_proportional": max_slope(&proportional),
            "max_slope_fixed": max_slope(&fixed),
        },
    });
    let code = if passed { exit::OK } else { exit::FAILED };
    Ok(Report::new("check-bounds", code, payload, started))
}

pub fn max_slope(rows: &[ScalingRow]) -> Option<f64> {
    rows.iter().filter_map(|r| r.slope).reduce(f64::max)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<Report, CliError> {
    let started = Instant::now();
    let prec = Precision::new(args.p).map_err(|e| CliError::schema(e.to_string()))?;
    let spec = SynthSpec::new(args.op, prec)?;
    let circuit = synthesize(&spec);
    let mode = match args.samples {
        None => VerifyMode::Exhaustive,
        Some(samples) => VerifyMode::Sampled { samples, seed: args.seed },
    };
    let report = verify(&spec, &circuit, mode);
    if let Some(path) = &args.circuit_out {
        write(path, &circuit.to_json())?;
    }
    let code = if report.mismatches == 0 { exit::OK } else { exit::FAILED };
    Ok(Report::new("synth", code, to_value(&report), started))
}

pub fn cmd_scaling(args: &ScalingArgs) -> Result<Report, CliError> {
    let started = Instant::now();
    let cfg = load_model(args.model.as_deref())?;
    let regime = match args.regime {
        RegimeArg::Proportional => ScalingRegime::Proportional,
        RegimeArg::Fixed => ScalingRegime::Fixed,
    };
    let rows = size_scaling(&cfg, &args.n_list, regime)?;
    let mut report = Report::new("scaling", exit::OK, json!({ "regime": regime, "rows": rows }), started);
    report.text = Some(scaling_csv(&rows));
    Ok(report)
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn selftest_checks() -> Vec<Check> {
    use crystal_tc0::fpn::{fp_add, fp_mul, round_p, slash_div, ExactRational, Fpn};

    let mut checks = Vec::new();
    let mut check = |name: &'static str, passed: bool, detail: String| checks.push(Check { name, passed, detail });
    let p2 = Precision::new(2).expect("p = 2 is valid");
    let v = |s, e| Fpn::new(s, e, p2).expect("valid literal");

    let r5 = round_p(&ExactRational::from_integer(5), p2);
    check("round 5 at p=2 ties to 4", r5 == v(2, 1), format!("{r5}"));
    let q = slash_div(1, 3).map(|q| q.to_string()).unwrap_or_default();
    check("1 // 3 = 11/24", q == "11/24", q);
    let s = fp_add(v(2, 0), v(3, 0), p2).map(|x| x.to_string()).unwrap_or_default();
    check("2 + 3 at p=2 gives 4", s == v(2, 1).to_string(), s);
    let m = fp_mul(v(3, 0), v(3, 0), p2).map(|x| x.to_string()).unwrap_or_default();
    check("3 * 3 at p=2 gives 8", m == v(2, 2).to_string(), m);

    for op in ArithOp::ALL {
        let spec = SynthSpec::new(op, p2).expect("p = 2 is supported");
        let r = verify(&spec, &synthesize(&spec), VerifyMode::Exhaustive);
        check(
            match op {
                ArithOp::Add => "synth add p=2",
                ArithOp::Mul => "synth mul p=2",
                ArithOp::Div => "synth div p=2",
                ArithOp::Leq => "synth leq p=2",
            },
            r.mismatches == 0 && r.depth == 3,
            format!("{} cases, {} mismatches, depth {}", r.cases, r.mismatches, r.depth),
        );
    }

    let table = DepthTable::published();
    let consistent = table.consistency().iter().all(|c| c.holds);
    check("depth table composes", consistent, String::new());
    match check_bounds(&default_model(), &table, &LoweringOptions::default()) {
        Ok(o) => check("default model within bounds", o.passed(), format!("{} constructs", o.reports.len())),
        Err(e) => check("default model within bounds", false, e.to_string()),
    }
    checks
}

pub fn cmd_selftest(_args: &SelftestArgs) -> Result<Report, CliError> {
    let started = Instant::now();
    let checks = selftest_checks();
    let passed = checks.iter().all(|c| c.passed);
    let code = if passed { exit::OK } else { exit::FAILED };
    Ok(Report::new("selftest", code, json!({ "passed": passed, "checks": checks }), started))
}

fn out_path(cmd: &Command) -> Option<&Path> {
    match cmd {
        Command::Eval(a) => a.out.as_deref(),
        Command::Compile(a) => a.out.as_deref(),
        Command::CheckBounds(a) => a.out.as_deref(),
        Command::Synth(a) => a.out.as_deref(),
        Command::Scaling(a) => a.out.as_deref(),
        Command::Selftest(a) => a.out.as_deref(),
    }
}

pub fn run(cmd: &Command) -> Result<Report, CliError> {
    match cmd {
        Command::Eval(a) => cmd_eval(a),
        Command::Compile(a) => cmd_compile(a),
        Command::CheckBounds(a) => cmd_check_bounds(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

/// Runs `cmd`, writes its output to `--out` or stdout, and returns the exit code.
pub fn main_with(cmd: &Command) -> i32 {
    match run(cmd) {
        Ok(report) => {
            let rendered = report.render();
            match out_path(cmd) {
                Some(path) => {
                    if let Err(e) = write(path, &rendered) {
                        eprintln!("error: {e}");
                        return e.code;
                    }
                }
                None => print!("{rendered}"),
            }
            report.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
