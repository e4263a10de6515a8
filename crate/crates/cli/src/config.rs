//! Experiment configuration: a flat TOML file plus command-line overrides.
//! Flags win over file values, which win over the defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use gossipcalc_core::comp::FKind;
use gossipcalc_core::graph::{
    build_complete, build_grid, build_path, build_random_regular, build_ring, load_edge_list,
    Graph,
};
use gossipcalc_core::{Capacity, MinimaPath, SyncSemantics, TimeModel};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Complete,
    Ring,
    Path,
    Grid,
    /// Random regular graph (pairing model).
    Regular,
    /// Edge-list file given by `edge_list`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FKindName {
    Identity,
    ConstantOne,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub n: Option<usize>,
    pub grid_d: usize,
    pub grid_c: Option<usize>,
    pub deg: usize,
    pub graph_seed: u64,
    pub edge_list: Option<PathBuf>,
    pub time_model: TimeModel,
    pub sync_semantics: SyncSemantics,
    pub epsilon: f64,
    pub delta: f64,
    pub r: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub capacity: Capacity,
    pub minima_path: MinimaPath,
    pub f_kind: FKindName,
    /// Raw node values `x_i`.
    pub inputs: Option<Vec<f64>>,
    /// `(x, y)` pairs for `f_kind = "table"`.
    pub table: Option<Vec<(f64, f64)>>,
    /// Network sizes for `sweep`.
    pub sizes: Option<Vec<usize>>,
    /// Multiplicative band around order-of-growth predictions.
    pub band: f64,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub trace: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: Topology::Complete,
            n: None,
            grid_d: 2,
            grid_c: None,
            deg: 3,
            graph_seed: 0,
            edge_list: None,
            time_model: TimeModel::Async,
            sync_semantics: SyncSemantics::Serialized,
            epsilon: 0.2,
            delta: 0.1,
            r: None,
            trials: 100,
            seed: 0,
            capacity: Capacity::Infinite,
            minima_path: MinimaPath::Spread,
            f_kind: FKindName::ConstantOne,
            inputs: None,
            table: None,
            sizes: None,
            band: 4.0,
            out: None,
            csv: None,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeModelArg {
    Sync,
    Async,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Serialized,
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapacityArg {
    Infinite,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MinimaPathArg {
    Oracle,
    Spread,
}

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub topology: Option<Topology>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub grid_d: Option<usize>,
    #[arg(long)]
    pub grid_c: Option<usize>,
    /// Degree for `--topology regular`.
    #[arg(long)]
    pub deg: Option<usize>,
    /// Seed for random graph generation.
    #[arg(long)]
    pub graph_seed: Option<u64>,
    #[arg(long)]
    pub edge_list: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub time_model: Option<TimeModelArg>,
    #[arg(long, value_enum)]
    pub sync_semantics: Option<SemanticsArg>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Repetitions per node; defaults to ⌈12 ε⁻² ln(4/δ)⌉.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub capacity: Option<CapacityArg>,
    #[arg(long, value_enum)]
    pub minima_path: Option<MinimaPathArg>,
    #[arg(long, value_enum)]
    pub f_kind: Option<FKindName>,
    /// File of raw node values, whitespace separated.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// File of `x y` lines for `--f-kind table`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Comma-separated network sizes for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub band: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metrics CSV output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print one `k t i u |M_i|` line per contact of trial 0 to stderr.
    #[arg(long)]
    pub trace: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_numbers(text: &str, what: &Path) -> Result<Vec<f64>, CliError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| CliError::Config(format!("{}: not a number: {tok:?}", what.display())))
        })
        .collect()
}

impl Flags {
    /// Resolves defaults, the config file and the flags into one config.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => toml::from_str::<ExperimentConfig>(&read(path)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { c.$field = v.into(); } )* };
        }
        take!(topology, grid_d, deg, graph_seed, epsilon, delta, trials, seed, f_kind, band);
        macro_rules! take_opt {
            ($($field:ident),*) => { $( if self.$field.is_some() { c.$field = self.$field.clone(); } )* };
        }
        take_opt!(n, grid_c, edge_list, r, sizes, out, csv);
        if let Some(m) = self.time_model {
            c.time_model = match m {
                TimeModelArg::Sync => TimeModel::Sync,
                TimeModelArg::Async => TimeModel::Async,
            };
        }
        if let Some(s) = self.sync_semantics {
            c.sync_semantics = match s {
                SemanticsArg::Serialized => SyncSemantics::Serialized,
                SemanticsArg::Snapshot => SyncSemantics::Snapshot,
            };
        }
        if let Some(cap) = self.capacity {
            c.capacity = match cap {
                CapacityArg::Infinite => Capacity::Infinite,
                CapacityArg::Unit => Capacity::Unit,
            };
        }
        if let Some(p) = self.minima_path {
            c.minima_path = match p {
                MinimaPathArg::Oracle => MinimaPath::Oracle,
                MinimaPathArg::Spread => MinimaPath::Spread,
            };
        }
        if let Some(path) = &self.inputs {
            c.inputs = Some(parse_numbers(&read(path)?, path)?);
        }
        if let Some(path) = &self.table {
            let nums = parse_numbers(&read(path)?, path)?;
            if nums.len() % 2 != 0 {
                return Err(CliError::Config(format!("{}: table needs `x y` pairs", path.display())));
            }
            c.table = Some(nums.chunks_exact(2).map(|p| (p[0], p[1])).collect());
        }
        c.trace |= self.trace;
        Ok(c)
    }
}

/// One failed configuration constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    /// Node count implied by the topology, when it is known without
    /// reading a file.
    pub fn declared_n(&self) -> Option<usize> {
        match self.topology {
            Topology::Grid => self
                .grid_c
                .and_then(|c| u32::try_from(self.grid_d).ok().and_then(|d| c.checked_pow(d))),
            Topology::File => None,
            _ => self.n,
        }
    }

    pub fn f_kind(&self) -> FKind {
        match self.f_kind {
            FKindName::Identity => FKind::Identity,
            FKindName::ConstantOne => FKind::ConstantOne,
            FKindName::Table => FKind::Table(self.table.clone().unwrap_or_default()),
        }
    }

    /// Raw node values for a graph on `n` nodes.
    pub fn raw_inputs(&self, n: usize) -> Vec<f64> {
        match self.f_kind {
            FKindName::ConstantOne => vec![1.0; n],
            _ => self.inputs.clone().unwrap_or_default(),
        }
    }

    pub fn build_graph(&self) -> Result<Graph, CliError> {
        self.build(self.n, self.grid_c)
    }

    /// Builds the configured topology resized to `n` nodes; grids take
    /// side `n^(1/d)`.
    pub fn build_graph_sized(&self, n: usize) -> Result<Graph, CliError> {
        let side = match self.topology {
            Topology::Grid => Some(grid_side(n, self.grid_d).ok_or_else(|| {
                CliError::Config(format!("n = {n} is not a perfect power of dimension {}", self.grid_d))
            })?),
            _ => None,
        };
        self.build(Some(n), side)
    }

    fn build(&self, n: Option<usize>, side: Option<usize>) -> Result<Graph, CliError> {
        let need_n = || n.ok_or_else(|| CliError::Config("n is required for this topology".into()));
        let g = match self.topology {
            Topology::Complete => build_complete(need_n()?),
            Topology::Ring => build_ring(need_n()?),
            Topology::Path => build_path(need_n()?),
            Topology::Regular => build_random_regular(need_n()?, self.deg, self.graph_seed),
            Topology::Grid => {
                let c = side.ok_or_else(|| CliError::Config("grid_c is required for topology grid".into()))?;
                build_grid(self.grid_d, c)
            }
            Topology::File => {
                let path = self
                    .edge_list
                    .as_ref()
                    .ok_or_else(|| CliError::Config("edge_list is required for topology file".into()))?;
                load_edge_list(&read(path)?)
            }
        };
        Ok(g?)
    }

    /// Short descriptor recorded with every trial.
    pub fn topology_label(&self, g: &Graph) -> String {
        match self.topology {
            Topology::Complete => format!("complete-{}", g.n()),
            Topology::Ring => format!("ring-{}", g.n()),
            Topology::Path => format!("path-{}", g.n()),
            Topology::Grid => {
                let c = grid_side(g.n(), self.grid_d).unwrap_or(0);
                format!("grid-{}d-{c}", self.grid_d)
            }
            Topology::Regular => format!("regular-{}-{}-seed{}", g.n(), self.deg, self.graph_seed),
            Topology::File => format!(
                "file-{}",
                self.edge_list
                    .as_deref()
                    .and_then(Path::file_name)
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            ),
        }
    }
}

/// `c` with `c^d = n`, if it exists.
pub fn grid_side(n: usize, d: usize) -> Option<usize> {
    if d == 0 {
        return None;
    }
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&c| u32::try_from(d).ok().and_then(|d| c.checked_pow(d)) == Some(n))
}

/// Every violated constraint, empty iff the config is runnable.
pub fn validate_config(c: &ExperimentConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut push = |field: &'static str, message: String| v.push(Violation { field, message });

    if !(c.delta > 0.0 && c.delta < 1.0) {
        push("delta", "delta must lie in (0,1)".into());
    }
    if !(c.epsilon > 0.0 && c.epsilon < 1.0) {
        push("epsilon", "epsilon must lie in (0,1)".into());
    }
    if c.trials == 0 {
        push("trials", "trials must be >= 1".into());
    }
    if c.r == Some(0) {
        push("r", "r must be >= 1".into());
    }
    if !(c.band.is_finite() && c.band > 1.0) {
        push("band", "band must be a finite factor > 1".into());
    }

    let min_n = match c.topology {
        Topology::Complete | Topology::Path => 2,
        Topology::Ring => 3,
        Topology::Regular => c.deg + 1,
        Topology::Grid | Topology::File => 0,
    };
    if min_n > 0 && c.sizes.is_none() {
        match c.n {
            None => push("n", format!("n is required for topology {:?}", c.topology).to_lowercase()),
            Some(n) if n < min_n => push("n", format!("n must be >= {min_n}, got {n}")),
            _ => {}
        }
    }
    match c.topology {
        Topology::Grid => {
            if c.grid_d < 1 {
                push("grid_d", "d ≥ 1".into());
            }
            match c.grid_c {
                Some(cc) if cc < 2 => push("grid_c", "c ≥ 2".into()),
                None if c.sizes.is_none() => push("grid_c", "grid_c is required for topology grid".into()),
                _ => {}
            }
        }
        Topology::Regular => {
            if c.deg < 3 {
                push("deg", "deg must be >= 3".into());
            }
            if let Some(n) = c.n {
                if !(n * c.deg).is_multiple_of(2) {
                    push("deg", "n * deg must be even".into());
                }
            }
        }
        Topology::File if c.edge_list.is_none() => {
            push("edge_list", "edge_list is required for topology file".into());
        }
        _ => {}
    }

    if let Some(sizes) = &c.sizes {
        if sizes.len() < 3 {
            push("sizes", "sweep needs at least 3 sizes".into());
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            push("sizes", "sizes must be strictly increasing".into());
        }
        if c.topology == Topology::Grid {
            if let Some(bad) = sizes.iter().find(|&&n| grid_side(n, c.grid_d).is_none_or(|s| s < 2)) {
                push("sizes", format!("{bad} is not c^{} for an integer c >= 2", c.grid_d));
            }
        }
        if c.topology == Topology::File {
            push("sizes", "sweep cannot resize an edge-list topology".into());
        }
    }

    match c.f_kind {
        FKindName::ConstantOne => {}
        FKindName::Identity | FKindName::Table => {
            if c.inputs.is_none() {
                push("inputs", "inputs are required unless f_kind = constant-one".into());
            }
            if c.f_kind == FKindName::Table && c.table.is_none() {
                push("table", "table is required for f_kind = table".into());
            }
        }
    }
    if let Some(x) = &c.inputs {
        if let Some(n) = c.declared_n() {
            if c.f_kind != FKindName::ConstantOne && x.len() != n {
                push("inputs", format!("expected {n} values, got {}", x.len()));
            }
        }
        match c.f_kind().apply(x) {
            Ok(y) => {
                if c.f_kind != FKindName::ConstantOne {
                    for (i, yi) in y.iter().enumerate() {
                        if !(yi.is_finite() && *yi >= 1.0) {
                            push("inputs", format!("node {i} has y = {yi}, violating f_i(x) ≥ 1"));
                        }
                    }
                }
            }
            Err(e) => push("table", e.to_string()),
        }
    }
    v
}
