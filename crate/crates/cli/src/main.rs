use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use xoq_core::effective::{
    effective_couplings, energy_differences, estimate_gate_time, gate_time_ns, jmax_for_time,
    DeviceParameters, EnergyDifferences, HubbardParameters,
};
use xoq_core::format::{SequenceFile, WrappersFile};
use xoq_core::metrics::{
    encoded_block, export_matrix_heatmap, makhlin_invariants, nearest_unitary, ObjectiveReport,
};
use xoq_core::synth::{search_cnot, SearchConfig};
use xoq_core::{
    CompositionMode, Configuration, Layout, PulseSequence, SectorPropagators, Simulator64,
};

/// Outcome classes mapped onto the process exit status.
#[derive(Debug)]
enum Failure {
    /// The computation ran but missed its quality threshold.
    Threshold(String),
    /// Unreadable, malformed or physically invalid input.
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<xoq_core::Error> for Failure {
    fn from(e: xoq_core::Error) -> Self {
        Failure::Input(e.into())
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "xoq",
    version,
    about = "Exchange-only two-qubit CNOT sequences: verify, search, couplings, timing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Sequential,
    Simultaneous,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<CompositionMode> {
        match self {
            ModeArg::Sequential => vec![CompositionMode::Sequential],
            ModeArg::Simultaneous => vec![CompositionMode::Simultaneous],
            ModeArg::Both => vec![CompositionMode::Sequential, CompositionMode::Simultaneous],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SingleMode {
    Sequential,
    Simultaneous,
}

impl From<SingleMode> for CompositionMode {
    fn from(m: SingleMode) -> Self {
        match m {
            SingleMode::Sequential => CompositionMode::Sequential,
            SingleMode::Simultaneous => CompositionMode::Simultaneous,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a sequence and score it against CNOT.
    Verify {
        /// Sequence JSON file, or builtin:<name>.
        #[arg(long)]
        sequence: String,
        #[arg(long, value_enum, default_value = "sequential")]
        mode: ModeArg,
        /// Also require matching phases in the two spin sectors.
        #[arg(long)]
        strict_phase: bool,
        /// Allowed sector phase mismatch in radians under --strict-phase.
        #[arg(long, default_value_t = 0.01)]
        phase_tolerance: f64,
        /// Largest f_joint that counts as success.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        /// Single-qubit wrapper sequences applied before and after.
        #[arg(long)]
        wrappers: Option<String>,
    },
    /// Run the genetic/simplex search for a CNOT sequence.
    Search {
        #[arg(long)]
        config: Layout,
        /// SearchConfig JSON; omitted fields take their defaults.
        #[arg(long)]
        search_params: Option<PathBuf>,
        /// Where to write the best sequence.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the search report (stdout if absent).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Overrides the seed from the params file and XOQ_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Every pair tunable, no always-on couplings.
        #[arg(long)]
        all_controllable: bool,
    },
    /// Effective Heisenberg couplings from Hubbard parameters.
    Couplings {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        config: Layout,
    },
    /// Physical gate time of a sequence.
    Estimate {
        /// Tunneling rate in µeV.
        #[arg(long, requires = "dest")]
        tr: Option<f64>,
        /// Singlet-triplet splitting in µeV.
        #[arg(long, requires = "tr")]
        dest: Option<f64>,
        /// Back-solve Jmax so the sequence takes this many ns.
        #[arg(long, conflicts_with_all = ["tr", "dest"])]
        target_ns: Option<f64>,
        #[arg(long)]
        sequence: String,
        #[arg(long, value_enum, default_value = "sequential")]
        mode: SingleMode,
    },
    /// Write modulus/phase CSV of a sector propagator.
    Export {
        #[arg(long)]
        sequence: String,
        /// Sector dimension: 5 (S=0) or 9 (S=1).
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["5", "9"]))]
        sector: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "sequential")]
        mode: SingleMode,
    },
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn load_sequence(source: &str) -> anyhow::Result<PulseSequence<f64>> {
    let file = SequenceFile::load(source).with_context(|| format!("reading sequence {source}"))?;
    file.to_sequence()
        .with_context(|| format!("invalid sequence {source}"))
}

fn mode_name(mode: CompositionMode) -> &'static str {
    match mode {
        CompositionMode::Sequential => "sequential",
        CompositionMode::Simultaneous => "simultaneous",
    }
}

fn verify_one(
    sim: &Simulator64,
    seq: &PulseSequence<f64>,
    wrappers: Option<&(PulseSequence<f64>, PulseSequence<f64>)>,
    mode: CompositionMode,
) -> anyhow::Result<(ObjectiveReport, serde_json::Value)> {
    let mut u: SectorPropagators<f64> = sim.sequence_propagator(seq, mode)?;
    if let Some((before, after)) = wrappers {
        u = sim.wrap_with_local_ops(&u, before, after, mode)?;
    }
    let report = ObjectiveReport::new(&u)?;
    let mut makhlin = serde_json::Map::new();
    for (name, m) in [("s0", &u.s0.entries), ("s1", &u.s1.entries)] {
        let block = encoded_block(m)?;
        let inv = makhlin_invariants(&nearest_unitary(&block.block))?;
        makhlin.insert(
            name.into(),
            json!({"g1": [inv.g1.re, inv.g1.im], "g2": inv.g2}),
        );
    }
    let value = json!({
        "mode": mode_name(mode),
        "f9": report.f9,
        "f_joint": report.f_joint,
        "leakage": report.leakage,
        "phase_mismatch": report.phase_mismatch(),
        "sectors": {
            "s0": {"leakage": report.s0.leakage, "phase": report.s0.phase.arg(), "cnot_deviation": report.s0.cnot_deviation},
            "s1": {"leakage": report.s1.leakage, "phase": report.s1.phase.arg(), "cnot_deviation": report.s1.cnot_deviation},
        },
        "makhlin": makhlin,
        "total_duration": seq.total_duration(mode),
    });
    Ok((report, value))
}

fn cmd_verify(
    sequence: &str,
    mode: ModeArg,
    strict_phase: bool,
    phase_tolerance: f64,
    threshold: f64,
    wrappers: Option<&str>,
) -> CmdResult {
    let seq = load_sequence(sequence)?;
    let wrappers = match wrappers {
        Some(src) => {
            let w = WrappersFile::load(src).with_context(|| format!("reading wrappers {src}"))?;
            Some((
                w.before.to_sequence::<f64>()?,
                w.after.to_sequence::<f64>()?,
            ))
        }
        None => None,
    };
    let sim = Simulator64::new();
    let mut results = Vec::new();
    let mut passed = Vec::new();
    for m in mode.modes() {
        let (report, value) = verify_one(&sim, &seq, wrappers.as_ref(), m)?;
        let ok = report.f_joint <= threshold
            && (!strict_phase || report.strict_phase_ok(phase_tolerance));
        passed.push(ok);
        let mut value = value;
        value["pass"] = json!(ok);
        results.push(value);
    }
    let any = passed.iter().any(|&p| p);
    print_json(&json!({
        "sequence": sequence,
        "threshold": threshold,
        "strict_phase": strict_phase,
        "results": results,
        "pass": any,
    }))?;
    if any {
        Ok(())
    } else {
        Err(Failure::Threshold(format!(
            "f_joint above {threshold} in every requested mode"
        )))
    }
}

fn seed_override(flag: Option<u64>) -> anyhow::Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("XOQ_SEED") {
        Ok(s) => {
            Ok(Some(s.trim().parse().with_context(|| {
                format!("XOQ_SEED={s:?} is not an integer")
            })?))
        }
        Err(_) => Ok(None),
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_search(
    layout: Layout,
    params: Option<&Path>,
    out: &Path,
    report_path: Option<&Path>,
    seed: Option<u64>,
    all_controllable: bool,
) -> CmdResult {
    let mut config = match params {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<SearchConfig>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => SearchConfig::default(),
    };
    if let Some(s) = seed_override(seed)? {
        config.seed = s;
    }
    config.validate()?;
    let configuration = if all_controllable {
        Configuration::fully_controllable(layout)
    } else {
        Configuration::new(layout)
    };
    let report = search_cnot(&config, configuration)?;
    let best = report
        .best_sequence
        .as_ref()
        .ok_or_else(|| anyhow!("search produced no sequence"))?;
    write_text(out, &best.to_json())?;
    let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    match report_path {
        Some(p) => write_text(p, &text)?,
        None => writeln!(std::io::stdout().lock(), "{text}").map_err(anyhow::Error::from)?,
    }
    eprintln!(
        "best f = {:.6} after {} generations ({} evaluations, {:.1} s)",
        report.best_f, report.generations, report.evaluations, report.wall_time_seconds
    );
    if report.reached_target {
        Ok(())
    } else {
        Err(Failure::Threshold(format!(
            "target {} not reached",
            config.target_f
        )))
    }
}

fn cmd_couplings(params: &Path, layout: Layout) -> CmdResult {
    let text =
        std::fs::read_to_string(params).with_context(|| format!("reading {}", params.display()))?;
    let p: HubbardParameters<f64> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", params.display()))?;
    let de: EnergyDifferences<f64> = energy_differences(&p, layout)?;
    let j = effective_couplings(&p, layout)?;
    let scale = p.max_off_diagonal();
    if scale > 0.0 && de.min() <= 10.0 * scale {
        eprintln!(
            "warning: smallest energy difference {} is within 10x of the largest hopping/exchange parameter {}; \
             second-order couplings may be inaccurate",
            de.min(),
            scale
        );
    }
    print_json(&json!({
        "configuration": layout.to_string(),
        "couplings": j.j,
        "energy_differences": de,
    }))?;
    Ok(())
}

fn cmd_estimate(
    tr: Option<f64>,
    dest: Option<f64>,
    target_ns: Option<f64>,
    sequence: &str,
    mode: CompositionMode,
) -> CmdResult {
    let seq = load_sequence(sequence)?;
    let t = seq.total_duration(mode);
    let (jmax, time) = match (tr, dest, target_ns) {
        (Some(tr), Some(de), None) => {
            let est = estimate_gate_time(&DeviceParameters::new(tr, de), &seq, mode)?;
            (est.jmax_uev, est.time_ns)
        }
        (None, None, Some(target)) => {
            let jmax = jmax_for_time(t, target)?;
            let time = if t == 0.0 {
                0.0
            } else {
                gate_time_ns(t, jmax)?
            };
            (jmax, time)
        }
        _ => {
            return Err(Failure::Input(anyhow!(
                "give either --tr and --dest, or --target-ns"
            )))
        }
    };
    print_json(&json!({
        "mode": mode_name(mode),
        "jmax_uev": jmax,
        "dimensionless_time": t,
        "time_ns": time,
    }))?;
    Ok(())
}

fn cmd_export(sequence: &str, sector: &str, out: &Path, mode: CompositionMode) -> CmdResult {
    let seq = load_sequence(sequence)?;
    let u = Simulator64::new().sequence_propagator(&seq, mode)?;
    let m = if sector == "5" { &u.s0 } else { &u.s1 };
    export_matrix_heatmap(m, out).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Verify {
            sequence,
            mode,
            strict_phase,
            phase_tolerance,
            threshold,
            wrappers,
        } => cmd_verify(
            &sequence,
            mode,
            strict_phase,
            phase_tolerance,
            threshold,
            wrappers.as_deref(),
        ),
        Command::Search {
            config,
            search_params,
            out,
            report,
            seed,
            all_controllable,
        } => cmd_search(
            config,
            search_params.as_deref(),
            &out,
            report.as_deref(),
            seed,
            all_controllable,
        ),
        Command::Couplings { params, config } => cmd_couplings(&params, config),
        Command::Estimate {
            tr,
            dest,
            target_ns,
            sequence,
            mode,
        } => cmd_estimate(tr, dest, target_ns, &sequence, mode.into()),
        Command::Export {
            sequence,
            sector,
            out,
            mode,
        } => cmd_export(&sequence, &sector, &out, mode.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Threshold(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
