use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::json;

use po_energy::fgh::{self, Budget, FghError, RewriteState, Rule};
use po_energy::fullobs;
use po_energy::game::{self, Game};
use po_energy::minsky::{self, MinskyMachine, RunOutcome};
use po_energy::reductions::{self, ReductionError};
use po_energy::solver::{self, Limits, SolveReport, Verdict};
use po_energy::strategy::{self, Adversary, MealyStrategy, StrategyFile};

const WIN: u8 = 0;
const LOSE: u8 = 1;
const USAGE: u8 = 2;
const RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "po-energy", version, about = "Energy games with partial observation")]
struct Cli {
    /// Node budget for the belief tree; 0 disables it.
    #[arg(long, global = true, default_value_t = Limits::DEFAULT_MAX_NODES)]
    limits_nodes: usize,
    /// Wall-clock budget in seconds for the belief tree; 0 disables it.
    #[arg(long, global = true, default_value_t = Limits::DEFAULT_MAX_TIME.as_secs())]
    limits_time: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for the random adversary.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Include wall-clock timings in reports. Off by default so identical
    /// runs print identical bytes.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether Eve wins with the given initial credit.
    Solve(Solve),
    /// Write a finite-memory winning controller.
    Strategy {
        #[command(flatten)]
        solve: Solve,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the controller as a DOT graph.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Play a stored controller against an adversary.
    Simulate {
        #[command(flatten)]
        solve: Solve,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long, value_enum, default_value_t = Adam::Random)]
        adam: Adam,
        /// Rounds to play; the search depth for the exhaustive adversary.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Least initial credit per state of a full-observation game.
    Oracle {
        game: String,
        /// Also decide the game for this credit.
        #[arg(long)]
        credit: Option<u64>,
    },
    /// Generate hardness games.
    #[command(subcommand)]
    Gen(Gen),
    /// Two-counter machines.
    #[command(subcommand)]
    Minsky(MinskyCmd),
    /// The fast-growing hierarchy and its rewrite calculus.
    #[command(subcommand)]
    Fgh(FghCmd),
    /// Validate a game file.
    Check { game: String },
}

#[derive(Args)]
struct Solve {
    /// Game file, or `-` for standard input.
    game: String,
    #[arg(long)]
    credit: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Adam {
    Random,
    Greedy,
    Exhaustive,
}

#[derive(Subcommand)]
enum Gen {
    /// The blind game simulating a machine.
    Minsky {
        #[arg(long)]
        machine: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The pumping game for `m`.
    Pump {
        #[arg(long)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Two pumping games feeding the machine simulation.
    Full {
        #[arg(long)]
        machine: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MinskyCmd {
    /// Run a machine with both counters bounded.
    Run {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        bound: u64,
        /// Step limit; defaults to |M| * bound^2.
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Args, Clone, Copy)]
struct BudgetArgs {
    /// Largest bit length of any intermediate value.
    #[arg(long, default_value_t = Budget::default().max_bits)]
    max_bits: u64,
    /// Largest number of unit steps.
    #[arg(long, default_value_t = Budget::default().max_steps)]
    max_steps: u64,
}

impl From<BudgetArgs> for Budget {
    fn from(b: BudgetArgs) -> Self {
        Budget {
            max_bits: b.max_bits,
            max_steps: b.max_steps,
        }
    }
}

#[derive(Subcommand)]
enum FghCmd {
    /// F_i(x).
    Eval {
        #[arg(long)]
        i: u64,
        #[arg(long)]
        x: BigUint,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Phi(a_k,...,a_0; x).
    Phi {
        /// Components outermost first, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        x: BigUint,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Apply rewrite rules, the canonical proper ones by default.
    Rewrite {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        x: BigUint,
        /// Comma separated rules such as `N1_1,N2,N0`.
        #[arg(long)]
        rules: Option<String>,
        /// Print every intermediate state, one per line.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    let budget = e.chain().any(|c| {
        matches!(c.downcast_ref::<FghError>(), Some(FghError::BudgetExceeded(_)))
            || matches!(
                c.downcast_ref::<ReductionError>(),
                Some(ReductionError::Rewrite(FghError::BudgetExceeded(_)))
            )
    });
    if budget {
        RESOURCE
    } else {
        USAGE
    }
}

impl Cli {
    fn limits(&self) -> Limits {
        Limits {
            max_nodes: (self.limits_nodes > 0).then_some(self.limits_nodes),
            max_time: (self.limits_time > 0).then(|| Duration::from_secs(self.limits_time)),
        }
    }

    fn json(&self) -> bool {
        self.format == Format::Json
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve(s) => solve(cli, s),
        Command::Strategy { solve, output, dot } => write_strategy(cli, solve, output.as_deref(), dot.as_deref()),
        Command::Simulate {
            solve,
            strategy,
            adam,
            steps,
        } => simulate(cli, solve, strategy, *adam, *steps),
        Command::Oracle { game, credit } => oracle(cli, game, *credit),
        Command::Gen(g) => generate(g),
        Command::Minsky(MinskyCmd::Run { machine, bound, steps }) => run_machine(cli, machine, *bound, *steps),
        Command::Fgh(f) => fgh_cmd(cli, f),
        Command::Check { game } => check(cli, game),
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading standard input")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn load_game(path: &str) -> Result<Game> {
    let text = read_input(path)?;
    game::parse_game(&text).with_context(|| format!("parsing {path}"))
}

fn load_machine(path: &Path) -> Result<MinskyMachine> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MinskyMachine::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes()).context("writing standard output")?;
            Ok(())
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Win => WIN,
        Verdict::Lose => LOSE,
        Verdict::ResourceLimit => RESOURCE,
    }
}

fn report_json(cli: &Cli, r: &SolveReport) -> serde_json::Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    if !cli.timings {
        v.as_object_mut().expect("object").remove("elapsed_ms");
    }
    v
}

fn print_report(cli: &Cli, r: &SolveReport) {
    if cli.json() {
        println!("{}", report_json(cli, r));
        return;
    }
    println!("{}", r.verdict);
    println!("nodes built: {}", r.nodes_built);
    println!("max depth: {}", r.max_depth);
    println!("control parameter: {}", r.control_parameter);
    if cli.timings {
        println!("elapsed: {} ms", r.elapsed.as_millis());
    }
}

fn solve(cli: &Cli, s: &Solve) -> Result<u8> {
    let g = load_game(&s.game)?;
    let r = solver::decide(&g, s.credit, cli.limits())?;
    print_report(cli, &r);
    Ok(verdict_code(r.verdict))
}

fn write_strategy(cli: &Cli, s: &Solve, output: Option<&Path>, dot: Option<&Path>) -> Result<u8> {
    let g = load_game(&s.game)?;
    let h = match solver::build_for_strategy(&g, s.credit, cli.limits()) {
        Ok(h) => h,
        Err(e @ solver::SolveError::ResourceLimit { .. }) => {
            eprintln!("{e}");
            return Ok(RESOURCE);
        }
        Err(e) => return Err(e.into()),
    };
    let winning = solver::solve_safety(&h);
    if !winning.contains(h.root()) {
        eprintln!("{}", Verdict::Lose);
        return Ok(LOSE);
    }
    let strat = strategy::extract_strategy(&g, &h, &winning)?;
    let text = serde_json::to_string_pretty(&strat.to_file(&g))? + "\n";
    write_output(output, &text)?;
    if let Some(p) = dot {
        fs::write(p, strat.to_dot(&g)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(WIN)
}

fn simulate(cli: &Cli, s: &Solve, path: &Path, adam: Adam, steps: usize) -> Result<u8> {
    let g = load_game(&s.game)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: StrategyFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let strat = MealyStrategy::from_file(&file, &g).with_context(|| format!("loading {}", path.display()))?;
    let adversary = match adam {
        Adam::Random => Adversary::Random { seed: cli.seed },
        Adam::Greedy => Adversary::Greedy,
        Adam::Exhaustive => Adversary::Exhaustive { depth: steps },
    };
    let r = strategy::simulate(&g, s.credit, &strat, adversary, steps)?;
    if cli.json() {
        println!("{}", serde_json::to_string(&r)?);
    } else {
        println!("violated: {}", r.violated);
        println!("steps: {}", r.steps);
        println!("least energy: {}", i128::from(s.credit) + r.min_energy_seen);
        if let Some(round) = r.first_violation {
            println!("first violation after round {round}");
        }
    }
    Ok(if r.violated { LOSE } else { WIN })
}

fn oracle(cli: &Cli, path: &str, credit: Option<u64>) -> Result<u8> {
    let g = load_game(path)?;
    let table = fullobs::min_credit(&g)?;
    let verdict = credit.map(|c| match table.value(g.initial()) {
        Some(v) if v <= c => Verdict::Win,
        _ => Verdict::Lose,
    });
    if cli.json() {
        let mut out = json!({ "credits": table.to_json(&g) });
        if let Some(v) = verdict {
            out["verdict"] = json!(v);
        }
        println!("{out}");
    } else {
        if let Some(v) = verdict {
            println!("{v}");
        }
        println!("{}", serde_json::to_string_pretty(&table.to_json(&g))?);
    }
    Ok(verdict.map_or(WIN, verdict_code))
}

fn generate(cmd: &Gen) -> Result<u8> {
    let (g, output) = match cmd {
        Gen::Minsky { machine, output } => (reductions::gen_g_m(&load_machine(machine)?)?, output),
        Gen::Pump { m, output } => (reductions::gen_pump(*m)?, output),
        Gen::Full { machine, output } => (reductions::gen_full(&load_machine(machine)?)?, output),
    };
    write_output(output.as_deref(), &(game::serialize_game(&g) + "\n"))?;
    Ok(WIN)
}

fn run_machine(cli: &Cli, path: &Path, bound: u64, steps: Option<usize>) -> Result<u8> {
    let m = load_machine(path)?;
    let run = minsky::run_bounded(&m, bound, steps)?;
    if cli.json() {
        println!("{}", serde_json::to_string(&run)?);
    } else {
        for (i, c) in run.trace.iter().enumerate() {
            println!("{i}: {} ({}, {})", c.state, c.counters[0], c.counters[1]);
        }
        println!("{}", run.outcome);
    }
    Ok(if run.outcome == RunOutcome::Halted { WIN } else { LOSE })
}

fn rewrite_start(a: &str, x: &BigUint) -> Result<RewriteState> {
    Ok(RewriteState {
        a: fgh::parse_vector(a)?,
        x: x.clone(),
    })
}

fn fgh_cmd(cli: &Cli, cmd: &FghCmd) -> Result<u8> {
    match cmd {
        FghCmd::Eval { i, x, budget } => {
            let v = fgh::f_eval(*i, x, (*budget).into())?;
            print_value(cli, &v);
        }
        FghCmd::Phi { a, x, budget } => {
            let v = fgh::phi_eval(&rewrite_start(a, x)?, (*budget).into())?;
            print_value(cli, &v);
        }
        FghCmd::Rewrite {
            a,
            x,
            rules,
            trace,
            budget,
        } => {
            let start = rewrite_start(a, x)?;
            let rules: Vec<Rule> = match rules {
                Some(text) => text
                    .split(',')
                    .map(|r| r.trim().parse::<Rule>())
                    .collect::<Result<_, _>>()?,
                None => fgh::proper_sequence(&start, (*budget).into())?,
            };
            let t = fgh::replay(&start, &rules)?;
            if cli.json() {
                let states: Vec<String> = t.states.iter().map(|s| s.to_string()).collect();
                let rules: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
                let mut out = json!({ "rules": rules, "value": t.value.as_ref().map(|v| v.to_string()) });
                if *trace {
                    out["states"] = json!(states);
                }
                println!("{out}");
            } else {
                if *trace {
                    for (i, s) in t.states.iter().enumerate() {
                        match rules.get(i) {
                            Some(r) => println!("{s} {r}"),
                            None => println!("{s}"),
                        }
                    }
                }
                match &t.value {
                    Some(v) => println!("{v}"),
                    None => println!("{}", t.states.last().expect("nonempty")),
                }
            }
        }
    }
    Ok(WIN)
}

fn print_value(cli: &Cli, v: &BigUint) {
    if cli.json() {
        println!("{}", json!({ "value": v.to_string() }));
    } else {
        println!("{v}");
    }
}

fn check(cli: &Cli, path: &str) -> Result<u8> {
    let text = read_input(path)?;
    let (ok, message) = match game::parse_game(&text) {
        Ok(g) => (true, format!("valid {:?} game, {} states", g.kind(), g.num_states())),
        Err(e) => (false, e.to_string()),
    };
    if cli.json() {
        println!("{}", json!({ "valid": ok, "message": message }));
    } else {
        println!("{message}");
    }
    Ok(if ok { WIN } else { LOSE })
}
