//! Command-line driver: build, search, schedule and write artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{lift_scalar, make_kernel, make_predx, KernelSpec, PredXSpec};
use crate::dot::{group_dot, scalar_dot, schedule_dot, vector_dot};
use crate::error::{KernelError, SearchError, VectorError};
use crate::grouping::build_group_graph;
use crate::kernel::parse_kernel;
use crate::scalar::{build_graph, interpret_scalar, GraphJson, MemoryImage, Opcode, ScalarCensus, ScalarGraph};
use crate::search::{prospect, Pins, PipelineConfig, SearchLimits, REDUCTION_TOLERANCE};
use crate::splitting::Strategy;
use crate::vector::{
    emit_intrinsics, function_name, id_order, interpret_vector_with_order, schedule, simulate_stack_accesses,
    to_vector_ir, Target, VectorCensus,
};

/// Overrides the default output directory.
pub const OUT_DIR_ENV: &str = "GRAPHVEC_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "graphvec-out";

#[derive(Parser, Debug)]
#[command(name = "graphvec", version, about = "Vectorize static scalar kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Vectorize one kernel and write the requested artifacts.
    Run(RunArgs),
}

#[derive(Args, Debug, Clone)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["kernel", "kernel_file", "predx"])))]
pub struct RunArgs {
    /// Built-in kernel: NN_N, NN_1, N1_N, N1_1, RN_N, NN_RN, RN_1, R1_N, R1_1, SS_N, KA or KB.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Kernel description file.
    #[arg(long)]
    pub kernel_file: Option<PathBuf>,
    /// Random PredX graph with at most this many predecessors per variable.
    #[arg(long)]
    pub predx: Option<usize>,
    /// Problem size for --kernel and --predx.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 8, value_parser = clap::builder::PossibleValuesParser::new(["2", "4", "8", "16"]).map(|s| s.parse::<usize>().unwrap()))]
    pub vec_size: usize,
    #[arg(long, value_enum, default_value_t = OpArg::Add)]
    pub op: OpArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Most load/store layouts tried per reduction setting.
    #[arg(long, default_value_t = 4096)]
    pub c_max: usize,
    /// Vector registers for the stack-traffic estimate.
    #[arg(long, default_value_t = 32)]
    pub registers: usize,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    pub reduction: Option<Toggle>,
    #[arg(long)]
    pub split_choice: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "stats")]
    pub emit: Vec<Emit>,
    /// Also write the scalar graphs as JSON.
    #[arg(long)]
    pub dump_graphs: bool,
    /// Also write the score matrix of every heuristically split group as CSV.
    #[arg(long)]
    pub dump_scores: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpArg {
    Add,
    Mul,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyArg {
    Identity,
    Partitioning,
    Clustering,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Toggle {
    On,
    Off,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Emit {
    VectorIr,
    Intrinsics,
    Dot,
    Stats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Kernel(KernelSpec),
    File(PathBuf),
    PredX(PredXSpec),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub source: Source,
    pub vec_size: usize,
    pub seed: u64,
    pub c_max: usize,
    pub registers: usize,
    pub pins: Pins,
    pub emit: Vec<Emit>,
    pub dump_graphs: bool,
    pub dump_scores: bool,
    pub out_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    NoValidConfig(SearchError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) | CliError::Kernel(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Mismatch(_) | CliError::NoValidConfig(_) => 4,
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Unsupported(m) => CliError::Unsupported(m),
            e @ SearchError::NoValidConfig { .. } => CliError::NoValidConfig(e),
            other => CliError::Mismatch(other.to_string()),
        }
    }
}

impl From<VectorError> for CliError {
    fn from(e: VectorError) -> Self {
        match e {
            VectorError::UnsupportedTarget { .. } | VectorError::TooFewRegisters { .. } => {
                CliError::Unsupported(e.to_string())
            }
            other => CliError::Mismatch(other.to_string()),
        }
    }
}

impl RunArgs {
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let op = match self.op {
            OpArg::Add => Opcode::Add,
            OpArg::Mul => Opcode::Mul,
        };
        let size = || self.size.ok_or_else(|| CliError::Usage("--size is required".into()));
        let source = if let Some(name) = &self.kernel {
            Source::Kernel(KernelSpec::named(name, size()?, op)?)
        } else if let Some(x) = self.predx {
            if x == 0 || size()? == 0 {
                return Err(CliError::Usage("--predx and --size must be at least 1".into()));
            }
            Source::PredX(PredXSpec {
                x,
                size: size()?,
                seed: self.seed,
            })
        } else {
            if self.size.is_some() {
                return Err(CliError::Usage("--size conflicts with --kernel-file".into()));
            }
            Source::File(self.kernel_file.clone().expect("clap requires a source"))
        };
        let mut emit = self.emit.clone();
        emit.sort();
        emit.dedup();
        let out_dir = self
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(RunConfig {
            source,
            vec_size: self.vec_size,
            seed: self.seed,
            c_max: self.c_max,
            registers: self.registers,
            pins: Pins {
                reduction: self.reduction.map(|t| t == Toggle::On),
                split_choice: self.split_choice,
                strategy: self.strategy.map(|s| match s {
                    StrategyArg::Identity => Strategy::Identity,
                    StrategyArg::Partitioning => Strategy::Partitioning,
                    StrategyArg::Clustering => Strategy::Clustering,
                }),
            },
            emit,
            dump_graphs: self.dump_graphs,
            dump_scores: self.dump_scores,
            out_dir,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StackStats {
    pub registers: usize,
    pub id_order: usize,
    pub scheduled: usize,
}

/// Contents of the stats JSON file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub kernel: String,
    pub vec_size: usize,
    pub seed: u64,
    pub scalar: ScalarCensus,
    pub vector: VectorCensus,
    /// Absent for PredX graphs, which are lifted without a search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winner: Option<PipelineConfig>,
    pub configs_evaluated: usize,
    pub stack_accesses: StackStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub stats: Stats,
    /// Files written, in write order.
    pub files: Vec<PathBuf>,
    /// Text printed for `--emit stats`.
    pub report: String,
}

fn load_source(config: &RunConfig) -> Result<ScalarGraph, CliError> {
    match &config.source {
        Source::Kernel(spec) => Ok(make_kernel(spec)?),
        Source::PredX(spec) => Ok(make_predx(spec)),
        Source::File(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(build_graph(&parse_kernel(&text)?)?)
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    stem: String,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn write(&mut self, suffix: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(format!("{}{suffix}", self.stem));
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }
}

fn census_row(out: &mut String, label: &str, cells: [usize; 5]) {
    write!(out, "{label:<8}").unwrap();
    for c in cells {
        write!(out, "{c:>8}").unwrap();
    }
    out.push('\n');
}

fn format_report(stats: &Stats) -> String {
    let mut out = format!("kernel {}  vec {}  seed {}\n", stats.kernel, stats.vec_size, stats.seed);
    if let Some(w) = &stats.winner {
        writeln!(
            out,
            "winner reduction={} split={} strategy={}  ({} configs)",
            if w.use_reduction { "on" } else { "off" },
            w.split_choice,
            w.strategy.name(),
            stats.configs_evaluated
        )
        .unwrap();
    }
    writeln!(
        out,
        "{:<8}{:>8}{:>8}{:>8}{:>8}{:>8}",
        "", "loads", "stores", "ops", "moves", "total"
    )
    .unwrap();
    let s = &stats.scalar;
    census_row(
        &mut out,
        "scalar",
        [s.loads + s.sets, s.stores, s.operations + s.reductions, 0, s.total()],
    );
    let v = &stats.vector;
    census_row(
        &mut out,
        "vector",
        [v.loads, v.stores, v.operations, v.data_transformations, v.total()],
    );
    let st = &stats.stack_accesses;
    writeln!(
        out,
        "stack accesses with {} registers: id order {}, scheduled {}",
        st.registers, st.id_order, st.scheduled
    )
    .unwrap();
    out
}

/// Runs the whole pipeline for one configuration.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    if ![2, 4, 8, 16].contains(&config.vec_size) {
        return Err(CliError::Unsupported(format!("vector size {}", config.vec_size)));
    }
    let scalar = load_source(config)?;
    let mem = MemoryImage::random(scalar.arrays(), config.seed, 1.0, 2.0);
    let expected = interpret_scalar(&scalar, &mem).map_err(|e| CliError::Mismatch(e.to_string()))?;

    let (vg, lowered_scalar, groups, outcome) = match &config.source {
        Source::PredX(_) => {
            let vg = lift_scalar(&scalar, config.vec_size);
            let groups = build_group_graph(&scalar);
            (vg, scalar.clone(), groups, None)
        }
        _ => {
            let limits = SearchLimits {
                c_max: config.c_max,
                seed: config.seed,
                pins: config.pins,
            };
            let out = prospect(&scalar, config.vec_size, &limits)?;
            (out.vector.clone(), out.scalar.clone(), out.groups.clone(), Some(out))
        }
    };

    let ids = id_order(&vg);
    let order = schedule(&vg);
    let stack_accesses = StackStats {
        registers: config.registers,
        id_order: simulate_stack_accesses(&vg, &ids, config.registers)?,
        scheduled: simulate_stack_accesses(&vg, &order, config.registers)?,
    };

    // The emitted order must still compute what the scalar kernel does.
    if outcome.is_some() {
        let reduced = outcome.as_ref().is_some_and(|o| o.report.winner.use_reduction);
        let got = interpret_vector_with_order(&vg, &mem, &order)?;
        let ok = if reduced {
            expected.max_rel_diff(&got) <= REDUCTION_TOLERANCE
        } else {
            expected.bit_eq(&got)
        };
        if !ok {
            return Err(CliError::Mismatch(
                "scheduled vector graph disagrees with the scalar oracle".into(),
            ));
        }
    }

    let stats = Stats {
        kernel: scalar.name.clone(),
        vec_size: config.vec_size,
        seed: config.seed,
        scalar: scalar.census(),
        vector: vg.census(),
        winner: outcome.as_ref().map(|o| o.report.winner),
        configs_evaluated: outcome.as_ref().map_or(0, |o| o.report.evaluated),
        stack_accesses,
    };

    fs::create_dir_all(&config.out_dir).map_err(|source| CliError::Io {
        path: config.out_dir.clone(),
        source,
    })?;
    let mut w = Writer {
        dir: &config.out_dir,
        stem: function_name(&vg),
        files: Vec::new(),
    };
    let mut report = String::new();
    for e in &config.emit {
        match e {
            Emit::VectorIr => w.write(".vir", &to_vector_ir(&vg))?,
            Emit::Intrinsics => {
                let c = emit_intrinsics(&vg, &order, Target::for_vec_size(vg.vec_size))?;
                w.write(".c", &c)?;
            }
            Emit::Dot => {
                w.write(".scalar.dot", &scalar_dot(&lowered_scalar))?;
                w.write(".groups.dot", &group_dot(&lowered_scalar, &groups))?;
                w.write(".vector.dot", &vector_dot(&vg))?;
                w.write(".schedule.dot", &schedule_dot(&vg, &order))?;
            }
            Emit::Stats => {
                let json = serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n";
                w.write(".stats.json", &json)?;
                report = format_report(&stats);
            }
        }
    }
    if config.dump_graphs {
        w.write(".input.json", &GraphJson::from_graph(&scalar).to_string_pretty())?;
        w.write(
            ".scalar.json",
            &GraphJson::from_graph(&lowered_scalar).to_string_pretty(),
        )?;
    }
    if config.dump_scores {
        if let Some(o) = &outcome {
            for (gid, m) in &o.lowered.scores {
                w.write(&format!(".scores.g{gid}.csv"), &m.to_csv())?;
            }
        }
    }
    Ok(RunOutput {
        stats,
        files: w.files,
        report,
    })
}
