use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qmap", version, about = "Hierarchical mapper for HF-QASM programs on reconfigurable multi-core processors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a program.
    Check {
        input: PathBuf,
    },
    /// Map a program and write a report.
    Map {
        input: PathBuf,
        /// Number of cores.
        #[arg(long)]
        k: Option<u32>,
        /// QRCR physical ancilla budget.
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        arch: ArchArgs,
        /// Also write the fully expanded program here (MCL bodies go to `<path>.mcl`).
        #[arg(long)]
        final_program: Option<PathBuf>,
    },
    /// Map a program for every (k, budget) pair.
    Sweep {
        input: PathBuf,
        /// Core counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        k: Vec<u32>,
        /// QRCR budgets, comma separated.
        #[arg(long, value_delimiter = ',')]
        budget: Vec<u64>,
        #[command(flatten)]
        arch: ArchArgs,
    },
    /// Generate a benchmark program.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Output file; standard output when absent.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
        #[arg(long, global = true, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// The three-Toffoli Fredkin example.
    Fredkin,
    /// N Toffoli calls along a register.
    ToffoliChain {
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// Random modular program.
    ModularSynthetic {
        #[arg(long, default_value_t = 3)]
        modules: u32,
        #[arg(long, default_value_t = 20)]
        gates: u32,
        #[arg(long, default_value_t = 8)]
        qubits: u32,
        #[arg(long, default_value_t = 2)]
        ancilla: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Options shared by `map` and `sweep`. Flags override the config file.
#[derive(Debug, Args, Clone, Default)]
pub struct ArchArgs {
    /// Inter-core channel width in cells.
    #[arg(long)]
    pub alpha_int: Option<u32>,
    /// Per-cell move delay in µs.
    #[arg(long)]
    pub beta_pmd: Option<String>,
    /// L2 cache access factor.
    #[arg(long)]
    pub gamma_l2: Option<String>,
    /// Built-in QEC profile name or path to a profile file.
    #[arg(long)]
    pub qec: Option<String>,
    /// Gate latency table (`GATE = µs`).
    #[arg(long)]
    pub latency_table: Option<PathBuf>,
    /// Gate template file.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Partition balance tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Binder time limit per module, seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}
