use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use stackel_core::exact::rational::format_q;
use stackel_core::game::Game;
use stackel_core::harness::experiment::{
    default_bits, plan_game, run_experiment, ExperimentConfig, ExperimentReport, Outcome,
};
use stackel_core::harness::{full_info_baseline, generate_family, verify_report, Family};
use stackel_core::oracle::{OracleMode, OracleSession};
use stackel_core::planner::{plan_manipulation, PlannerConfig};
use stackel_core::calibration::SecondPairPath;

#[derive(Parser)]
#[command(name = "stackel", version, about = "Learn an optimal follower misreport from SSE queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random game as JSON.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        denom: i64,
        #[arg(long, value_enum, default_value_t = FamilyArg::Random)]
        family: FamilyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan a single game (`--game`) or run a seeded experiment.
    Run(RunArgs),
    /// Full-information optimum of a game file.
    Baseline {
        game: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay every plan in a report; exits nonzero on any failure.
    Verify {
        report: PathBuf,
        #[arg(long)]
        summary: bool,
    },
    /// Time a small experiment and print per-instance costs.
    Bench {
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leader action count, `K` or `LO..HI`.
    #[arg(long, default_value = "1..4")]
    m: String,
    /// Follower action count, `K` or `LO..HI`.
    #[arg(long, default_value = "1..4")]
    n: String,
    #[arg(long, default_value_t = 6)]
    denom: i64,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Payoff)]
    mode: ModeArg,
    /// Bit budget for searches; defaults to the input size plus 64.
    #[arg(long)]
    bits: Option<u64>,
    /// Cycle through the structured families as well as plain random games.
    #[arg(long)]
    structured: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Plan this game file instead of generating instances.
    #[arg(long)]
    game: Option<PathBuf>,
    /// With `--game`: write the query transcript as JSONL.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a human-readable table.
    #[arg(long)]
    summary: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Payoff,
    Brc,
}

impl From<ModeArg> for OracleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Payoff => OracleMode::PayoffOnly,
            ModeArg::Brc => OracleMode::BrCorrespondence,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Random,
    MaximinTight,
    DuplicateMaxRows,
    ConstantColumn,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Random => Family::Random,
            FamilyArg::MaximinTight => Family::MaximinTight,
            FamilyArg::DuplicateMaxRows => Family::DuplicateMaxRows,
            FamilyArg::ConstantColumn => Family::ConstantColumn,
        }
    }
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo.trim().parse()?, hi.trim().parse()?),
        None => {
            let k = s.trim().parse()?;
            (k, k)
        }
    };
    Ok((lo, hi))
}

impl GridArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let config = ExperimentConfig {
            seed: self.seed,
            m: parse_range(&self.m).with_context(|| format!("--m {}", self.m))?,
            n: parse_range(&self.n).with_context(|| format!("--n {}", self.n))?,
            denom: self.denom,
            count: self.count,
            mode: self.mode.into(),
            bits: self.bits,
            families: if self.structured { Family::ALL.to_vec() } else { vec![Family::Random] },
        };
        config.validate()?;
        Ok(config)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read_game(path: &Path) -> Result<Game> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Game::from_json(&text)?)
}

fn print_table(report: &ExperimentReport) {
    println!("{:>4} {:>8} {:>5} {:>12} {:>12} {:>6} {:>8} {:>8}", "id", "size", "col", "plan", "baseline", "match", "queries", "ms");
    for r in &report.instances {
        let size = format!("{}x{}", r.game.m, r.game.n);
        match &r.outcome {
            Outcome::Planned(p) => println!(
                "{:>4} {:>8} {:>5} {:>12} {:>12} {:>6} {:>8} {:>8}",
                r.id,
                size,
                p.chosen,
                format_q(&p.value),
                format_q(&r.baseline_value),
                if p.exact_match { "yes" } else { "NO" },
                p.queries.total,
                p.runtime_ms
            ),
            Outcome::Failed { error } => println!("{:>4} {:>8} failed: {error}", r.id, size),
        }
    }
    let s = &report.summary;
    println!(
        "planned {}/{}, matches {}, confirmed {}, match rate {}",
        s.planned,
        s.instances,
        s.matches,
        s.confirmed,
        format_q(&s.match_rate)
    );
    if let Some(q) = &s.queries {
        println!("queries: min {} median {} max {} mean {}", q.min, q.median, q.max, format_q(&q.mean));
    }
}

fn run(args: RunArgs) -> Result<bool> {
    if let Some(path) = &args.game {
        let game = read_game(path)?;
        let bits = args.grid.bits.unwrap_or_else(|| default_bits(&game));
        let mode: OracleMode = args.grid.mode.into();
        let plan = match &args.transcript {
            None => plan_game(&game, mode, bits)?,
            Some(t) => {
                let mut session = OracleSession::new(game.clone(), mode)?.with_payloads(true);
                let path = match mode {
                    OracleMode::PayoffOnly => SecondPairPath::Payoff,
                    OracleMode::BrCorrespondence => SecondPairPath::BrCorrespondence,
                };
                let plan = plan_manipulation(&mut session, &game.follower, &PlannerConfig { bits, path });
                fs::write(t, session.transcript_jsonl())?;
                plan?
            }
        };
        let baseline = full_info_baseline(&game)?;
        if args.summary {
            println!(
                "column {} value {} baseline {} confirmed {} queries {}",
                plan.chosen,
                format_q(&plan.value),
                format_q(&baseline.value),
                plan.confirmed,
                plan.ledger.total
            );
        }
        if args.out.is_some() || !args.summary {
            emit(args.out.as_deref(), &serde_json::to_string_pretty(&plan)?)?;
        }
        return Ok(plan.value == baseline.value && plan.confirmed);
    }
    let report = run_experiment(&args.grid.config()?)?;
    if args.summary {
        print_table(&report);
    }
    if args.out.is_some() || !args.summary {
        emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    }
    let s = &report.summary;
    Ok(s.failed == 0 && s.matches == s.planned && s.confirmed == s.planned)
}

fn main() -> ExitCode {
    env_logger::init();
    let result = match Cli::parse().command {
        Command::Gen { seed, m, n, denom, family, out } => (|| {
            if m == 0 || n == 0 || denom < 1 {
                bail!("--m, --n and --denom must be positive");
            }
            emit(out.as_deref(), &generate_family(seed, m, n, denom, family.into()).to_json())?;
            Ok(true)
        })(),
        Command::Run(args) => run(args),
        Command::Baseline { game, out } => (|| {
            let b = full_info_baseline(&read_game(&game)?)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&b)?)?;
            Ok(true)
        })(),
        Command::Verify { report, summary } => (|| {
            let s = verify_report(&report)?;
            if summary {
                for f in &s.failures {
                    match f.id {
                        Some(id) => println!("instance {id}: {}", f.reason),
                        None => println!("report: {}", f.reason),
                    }
                }
                println!("checked {}, failures {}", s.checked, s.failures.len());
            } else {
                println!("{}", serde_json::to_string_pretty(&s)?);
            }
            Ok(s.passed())
        })(),
        Command::Bench { grid } => (|| {
            let started = Instant::now();
            let report = run_experiment(&grid.config()?)?;
            print_table(&report);
            println!("wall time {} ms", started.elapsed().as_millis());
            let s = &report.summary;
            Ok(s.failed == 0 && s.matches == s.planned)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
