use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use contain_core::engine::DEFAULT_MAX_ROUNDS;
use contain_core::experiments::{
    analysis_table, compare_broadcast, compare_memory, compare_unit_disc_memory, AnalysisRow, CompareRow, UnitDiscRow,
};
use contain_core::graph::generate;
use contain_core::GraphSpec;

use crate::output::{csv_document, emit};
use crate::CliError;

const UNIT_DISC_N: usize = 200;
const UNIT_DISC_RADIUS: f64 = 0.08;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Largest degree in the table.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    d_max: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let rows = analysis_table(args.d_max as usize)?;
    emit(args.out.as_deref(), &csv_document(AnalysisRow::CSV_HEADER, rows.iter().map(AnalysisRow::csv_line)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompareFamily {
    /// Worst-case broadcast at the center of star(d) against the message chain.
    Broadcast,
    /// Worst memory corruption of the center of star(d) against the memory bound.
    Memory,
    /// Memory sweep over every node of unit_disc(200, 0.08) instances.
    UnitDiscMemory,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_enum)]
    scenario: CompareFamily,
    /// Degrees to compare, `a..b` (inclusive).
    #[arg(long, value_parser = parse_range, default_value = "1..20")]
    d_range: RangeInclusive<u64>,
    /// Instance seeds for `unit-disc-memory`, `a..b` (inclusive).
    #[arg(long, value_parser = parse_range, default_value = "1..10")]
    instances: RangeInclusive<u64>,
    /// Trials per degree (per scenario for the sweeps).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    max_rounds: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `a..b` or `a..=b`, both inclusive.
fn parse_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected `a..b`, got `{s}`"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: u64 = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
    if a > b {
        return Err(format!("empty range `{s}`"));
    }
    Ok(a..=b)
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let ds = || -> Result<RangeInclusive<usize>, CliError> {
        if *args.d_range.start() == 0 {
            return Err(CliError::Usage("--d-range must start at 1 or later".into()));
        }
        Ok(*args.d_range.start() as usize..=*args.d_range.end() as usize)
    };
    let (doc, failures) = match args.scenario {
        CompareFamily::Broadcast | CompareFamily::Memory => {
            let rows = if args.scenario == CompareFamily::Broadcast {
                compare_broadcast(ds()?, args.trials, args.seed, args.max_rounds)?
            } else {
                compare_memory(ds()?, args.trials, args.seed, args.max_rounds)?
            };
            let failures: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| format!("d={}", r.d)).collect();
            (csv_document(CompareRow::CSV_HEADER, rows.iter().map(CompareRow::csv_line)), failures)
        }
        CompareFamily::UnitDiscMemory => {
            let rows = compare_unit_disc_memory(
                args.instances.clone(),
                UNIT_DISC_N,
                UNIT_DISC_RADIUS,
                args.trials,
                args.seed,
                args.max_rounds,
            )?;
            let failures = rows.iter().filter(|r| !r.pass).map(|r| format!("instance {}", r.instance_seed)).collect();
            (csv_document(UnitDiscRow::CSV_HEADER, rows.iter().map(UnitDiscRow::csv_line)), failures)
        }
    };
    emit(args.out.as_deref(), &doc)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violation(format!("comparison failed for {}", failures.join(", "))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Star,
    Path,
    Complete,
    Gnp,
    UnitDisc,
    CascadePath,
}

#[derive(Debug, Args)]
pub struct GraphgenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: Option<usize>,
    /// Number of leaves (star).
    #[arg(long)]
    d: Option<usize>,
    /// Edge probability (gnp).
    #[arg(long)]
    p: Option<f64>,
    /// Connection radius (unit-disc).
    #[arg(long)]
    radius: Option<f64>,
    /// Generator seed (gnp, unit-disc).
    #[arg(long)]
    seed: Option<u64>,
    /// Spine length and maximum degree (cascade-path).
    #[arg(long)]
    delta: Option<usize>,
    /// Add a hub node adjacent to every generated node.
    #[arg(long)]
    hub: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn required<T: Copy>(value: Option<T>, flag: &str, family: Family) -> Result<T, CliError> {
    value.ok_or_else(|| {
        let name = family.to_possible_value().expect("no skipped variants").get_name().to_string();
        CliError::Usage(format!("--{flag} is required for family {name}"))
    })
}

impl GraphgenArgs {
    fn spec(&self) -> Result<GraphSpec, CliError> {
        let f = self.family;
        let spec = match f {
            Family::Star => GraphSpec::Star { d: required(self.d, "d", f)? },
            Family::Path => GraphSpec::Path { n: required(self.n, "n", f)? },
            Family::Complete => GraphSpec::Complete { n: required(self.n, "n", f)? },
            Family::Gnp => GraphSpec::Gnp {
                n: required(self.n, "n", f)?,
                p: required(self.p, "p", f)?,
                seed: required(self.seed, "seed", f)?,
            },
            Family::UnitDisc => GraphSpec::UnitDisc {
                n: required(self.n, "n", f)?,
                radius: required(self.radius, "radius", f)?,
                seed: required(self.seed, "seed", f)?,
            },
            Family::CascadePath => GraphSpec::CascadePath { delta: required(self.delta, "delta", f)? },
        };
        Ok(if self.hub { GraphSpec::HubOverH { h: Box::new(spec) } } else { spec })
    }
}

pub fn graphgen(args: &GraphgenArgs) -> Result<(), CliError> {
    let g = generate(&args.spec()?)?;
    let mut buf = Vec::new();
    g.write_edge_list(&mut buf).expect("writing to memory");
    emit(args.out.as_deref(), &String::from_utf8(buf).expect("edge lists are ASCII"))
}
