use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use geobots_core::grid::{Difficulty, GridLevel, MapTheme};
use geobots_core::pcg::{
    fingerprint_hex, generate_level, level_fingerprint, validate_level, ProfileSet,
};
use geobots_core::repair::{generate_problem, grade, RepairBank, RepairProblem, RepairSubmission};
use geobots_core::robot::{
    build_complete, compute_stats, purchase, BuildFile, Catalog, Inventory, RobotBuild, Wallet,
};
use geobots_core::sim::{replay, ReplayFile, SimStatus};
use geobots_core::solver::plan;

const PROFILE_ENV: &str = "GEOBOTS_PROFILE";

#[derive(Parser)]
#[command(
    name = "geobots",
    version,
    about = "Level generation, simulation and repair puzzles for GeoBots"
)]
struct Cli {
    /// Pretty-print JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate one level or a seed range.
    Gen(GenArgs),
    /// Check a level for solvability and profile conformance.
    Validate { level: PathBuf },
    /// Print a level's fingerprint.
    Fingerprint { level: PathBuf },
    /// Plan a level for a build and replay the plan.
    Solve(SolveArgs),
    /// Replay a command file against a level.
    Replay { level: PathBuf, replay: PathBuf },
    /// Compute stats for a build file.
    Stats {
        build: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Generate, inspect and grade repair problems.
    #[command(subcommand)]
    Repair(RepairCmd),
    /// Manage a wallet file.
    #[command(subcommand)]
    Wallet(WalletCmd),
    /// Generate, validate and optionally solve many levels.
    Sweep(SweepArgs),
    /// Run the HTTP session service.
    #[cfg(feature = "server")]
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, conflicts_with = "seeds", required_unless_present = "seeds")]
    seed: Option<u64>,
    /// Inclusive range such as `0..999`.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<SeedRange>,
    #[arg(long, value_parser = parse_name::<MapTheme>)]
    theme: MapTheme,
    #[arg(long, value_parser = parse_name::<Difficulty>)]
    difficulty: Difficulty,
    /// Output file for a single seed; stdout when omitted.
    #[arg(short, long, conflicts_with = "seeds")]
    out: Option<PathBuf>,
    /// Output directory for a seed range.
    #[arg(long, requires = "seeds")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    level: PathBuf,
    build: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Also write the plan as a replay file.
    #[arg(long)]
    replay_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RepairCmd {
    /// Generate a problem as the client sees it.
    Gen(ProblemArgs),
    /// Print the answer key as a submission document.
    Key(ProblemArgs),
    /// Grade a submission.
    Grade {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        submission: PathBuf,
    },
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = parse_name::<Difficulty>)]
    difficulty: Difficulty,
    /// Print the full problem including the answer key.
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand)]
enum WalletCmd {
    /// Write a new wallet with the starter parts.
    New {
        #[arg(long, default_value_t = 500)]
        balance: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Buy a component, updating the wallet file in place.
    Buy {
        wallet: PathBuf,
        component: String,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_seeds)]
    seeds: SeedRange,
    /// Themes to sweep; all nine when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_name::<MapTheme>)]
    theme: Vec<MapTheme>,
    /// Difficulties to sweep; all three when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_name::<Difficulty>)]
    difficulty: Vec<Difficulty>,
    /// Solve each level with a uniform build of this tier.
    #[arg(long)]
    tier: Option<u8>,
    /// Only print the summary line.
    #[arg(long)]
    summary: bool,
    #[arg(long)]
    jobs: Option<usize>,
}

#[cfg(feature = "server")]
#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: std::net::SocketAddr,
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    #[arg(long)]
    repair_probability: Option<f64>,
    #[arg(long)]
    idle_minutes: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
struct SeedRange {
    first: u64,
    last: u64,
}

impl SeedRange {
    fn iter(self) -> impl Iterator<Item = u64> {
        self.first..=self.last
    }
}

fn parse_seeds(s: &str) -> Result<SeedRange, String> {
    let (a, b) = s.split_once("..").ok_or("expected FIRST..LAST")?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let first = a.trim().parse::<u64>().map_err(|e| e.to_string())?;
    let last = b.trim().parse::<u64>().map_err(|e| e.to_string())?;
    if last < first {
        return Err(format!("empty range {s}"));
    }
    Ok(SeedRange { first, last })
}

fn parse_name<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn infeasible(message: impl Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
    fn input(message: impl Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }
    fn internal(message: impl Display) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

struct Out {
    pretty: bool,
}

impl Out {
    fn emit<T: Serialize>(&self, value: &T) {
        let text = if self.pretty {
            serde_json::to_string_pretty(value)
        } else {
            serde_json::to_string(value)
        };
        let mut stdout = std::io::stdout().lock();
        if let Err(e) = writeln!(stdout, "{}", text.expect("output serialises")) {
            // A closed reader (`| head`) is not an error worth reporting.
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                eprintln!("error: writing output: {e}");
                std::process::exit(3);
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = Out { pretty: cli.pretty };
    match run(cli.command, &out) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd, out: &Out) -> Outcome {
    match cmd {
        Cmd::Gen(args) => cmd_gen(args, out),
        Cmd::Validate { level } => cmd_validate(&level, out),
        Cmd::Fingerprint { level } => {
            let level = read_level(&level)?;
            out.emit(&json!({ "fingerprint": fingerprint_hex(level_fingerprint(&level)) }));
            Ok(0)
        }
        Cmd::Solve(args) => cmd_solve(args, out),
        Cmd::Replay { level, replay } => cmd_replay(&level, &replay, out),
        Cmd::Stats { build, catalog } => {
            let catalog = load_catalog(catalog.as_deref())?;
            let build = read_build(&build, &catalog)?;
            out.emit(&json!({
                "stats": compute_stats(&build, &catalog),
                "complete": build_complete(&build),
                "filled_slots": build.filled_slots(),
            }));
            Ok(0)
        }
        Cmd::Repair(cmd) => cmd_repair(cmd, out),
        Cmd::Wallet(cmd) => cmd_wallet(cmd, out),
        Cmd::Sweep(args) => cmd_sweep(args, out),
        #[cfg(feature = "server")]
        Cmd::Serve(args) => cmd_serve(args),
    }
}

fn profiles() -> Result<ProfileSet, Failure> {
    match std::env::var_os(PROFILE_ENV) {
        None => Ok(ProfileSet::default()),
        Some(path) => {
            let text = read_text(Path::new(&path))?;
            ProfileSet::default()
                .with_overrides(&text)
                .map_err(|e| Failure::input(format!("{PROFILE_ENV}: {e}")))
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_level(path: &Path) -> Result<GridLevel, Failure> {
    GridLevel::from_json(&read_text(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_catalog(path: Option<&Path>) -> Result<Catalog, Failure> {
    match path {
        None => Ok(Catalog::shipped()),
        Some(p) => Catalog::from_json(&read_text(p)?)
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
    }
}

fn read_build(path: &Path, catalog: &Catalog) -> Result<RobotBuild, Failure> {
    let file: BuildFile = read_json(path)?;
    catalog
        .resolve_build(&file)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Writes via a temporary sibling and rename so readers never see partial files.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))
}

fn cmd_gen(args: GenArgs, out: &Out) -> Outcome {
    let profiles = profiles()?;
    let profile = profiles.get(args.difficulty);
    let generate = |seed| {
        generate_level(seed, args.theme, args.difficulty, profile)
            .map_err(|e| Failure::infeasible(format!("seed {seed}: {e}")))
    };
    if let Some(seed) = args.seed {
        let level = generate(seed)?;
        let fingerprint = fingerprint_hex(level_fingerprint(&level));
        match args.out {
            Some(path) => {
                write_atomic(&path, &level.to_canonical_json())?;
                out.emit(&json!({ "seed": seed, "fingerprint": fingerprint, "path": path }));
            }
            None => out.emit(&level.to_json_value()),
        }
        eprintln!("fingerprint {fingerprint}");
        return Ok(0);
    }
    let range = args.seeds.expect("clap requires seed or seeds");
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    for seed in range.iter() {
        let level = generate(seed)?;
        let fingerprint = fingerprint_hex(level_fingerprint(&level));
        let path = args
            .out_dir
            .as_ref()
            .map(|dir| dir.join(format!("{}-{}-{seed}.json", args.theme, args.difficulty)));
        if let Some(path) = &path {
            write_atomic(path, &level.to_canonical_json())?;
        }
        out.emit(&json!({ "seed": seed, "fingerprint": fingerprint, "path": path }));
    }
    Ok(0)
}

fn cmd_validate(path: &Path, out: &Out) -> Outcome {
    let level = read_level(path)?;
    let report = validate_level(&level);
    out.emit(&report);
    if report.solvable {
        Ok(0)
    } else {
        eprintln!("level is not solvable");
        Ok(1)
    }
}

fn cmd_solve(args: SolveArgs, out: &Out) -> Outcome {
    let level = read_level(&args.level)?;
    let catalog = load_catalog(args.catalog.as_deref())?;
    let build = read_build(&args.build, &catalog)?;
    if !build_complete(&build) {
        return Err(Failure::input("build is incomplete"));
    }
    let profiles = profiles()?;
    let profile = profiles.get(level.difficulty);
    let stats = compute_stats(&build, &catalog);
    let Some(plan) = plan(&level, &stats, profile) else {
        return Err(Failure::infeasible(
            "no plan completes this level with this build",
        ));
    };
    let run = replay(&level, &stats, profile, &plan.commands).map_err(Failure::internal)?;
    if let Some(path) = &args.replay_out {
        let file = ReplayFile {
            level_fingerprint: level_fingerprint(&level),
            stats,
            commands: plan.commands.clone(),
        };
        write_atomic(
            path,
            &serde_json::to_string(&file).expect("replay serialises"),
        )?;
    }
    out.emit(&json!({ "plan": plan, "result": run.result }));
    Ok(if run.result.is_some_and(|r| r.completed) {
        0
    } else {
        1
    })
}

fn cmd_replay(level: &Path, replay_path: &Path, out: &Out) -> Outcome {
    let level = read_level(level)?;
    let file: ReplayFile = read_json(replay_path)?;
    let actual = level_fingerprint(&level);
    if file.level_fingerprint != actual {
        return Err(Failure::input(format!(
            "replay is for level {}, not {}",
            fingerprint_hex(file.level_fingerprint),
            fingerprint_hex(actual)
        )));
    }
    let profiles = profiles()?;
    let run = replay(
        &level,
        &file.stats,
        profiles.get(level.difficulty),
        &file.commands,
    )
    .map_err(Failure::input)?;
    out.emit(&run);
    Ok(if run.state.status == SimStatus::Completed {
        0
    } else {
        1
    })
}

fn problem(args: &ProblemArgs) -> Result<RepairProblem, Failure> {
    generate_problem(args.seed, args.difficulty, &RepairBank::shipped()).map_err(Failure::internal)
}

fn cmd_repair(cmd: RepairCmd, out: &Out) -> Outcome {
    match cmd {
        RepairCmd::Gen(args) => {
            let p = problem(&args)?;
            if args.full {
                out.emit(&p);
            } else {
                out.emit(&p.client_view());
            }
            Ok(0)
        }
        RepairCmd::Key(args) => {
            out.emit(&problem(&args)?.answer_submission());
            Ok(0)
        }
        RepairCmd::Grade {
            problem: args,
            submission,
        } => {
            let p = problem(&args)?;
            let submission: RepairSubmission = read_json(&submission)?;
            let verdicts = grade(&p, &submission).map_err(Failure::input)?;
            let fixed = verdicts.fixed();
            out.emit(&json!({ "verdicts": verdicts, "fixed": fixed }));
            Ok(if fixed { 0 } else { 1 })
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WalletFile {
    wallet: Wallet,
    inventory: Inventory,
}

fn cmd_wallet(cmd: WalletCmd, out: &Out) -> Outcome {
    match cmd {
        WalletCmd::New { balance, out: path } => {
            let file = WalletFile {
                wallet: Wallet::new(balance),
                inventory: Catalog::shipped().starter_inventory(),
            };
            write_atomic(
                &path,
                &serde_json::to_string_pretty(&file).expect("wallet serialises"),
            )?;
            out.emit(&file);
            Ok(0)
        }
        WalletCmd::Buy {
            wallet: path,
            component,
            catalog,
        } => {
            let catalog = load_catalog(catalog.as_deref())?;
            let file: WalletFile = read_json(&path)?;
            let spec = catalog.get(&component).map_err(Failure::input)?;
            match purchase(file.wallet, spec, &file.inventory) {
                Ok((wallet, inventory)) => {
                    let next = WalletFile { wallet, inventory };
                    write_atomic(
                        &path,
                        &serde_json::to_string_pretty(&next).expect("wallet serialises"),
                    )?;
                    out.emit(&next);
                    Ok(0)
                }
                Err(e) => {
                    out.emit(&file);
                    Err(Failure::infeasible(e))
                }
            }
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    seed: u64,
    theme: MapTheme,
    difficulty: Difficulty,
    fingerprint: Option<String>,
    error: Option<String>,
    solvable: bool,
    illegal_fraction: f64,
    violations: usize,
    completed: Option<bool>,
    restarts: Option<u32>,
}

fn sweep_one(
    seed: u64,
    theme: MapTheme,
    difficulty: Difficulty,
    profiles: &ProfileSet,
    tier: Option<u8>,
) -> SweepRow {
    let mut row = SweepRow {
        seed,
        theme,
        difficulty,
        fingerprint: None,
        error: None,
        solvable: false,
        illegal_fraction: 0.0,
        violations: 0,
        completed: None,
        restarts: None,
    };
    let profile = profiles.get(difficulty);
    let level = match generate_level(seed, theme, difficulty, profile) {
        Ok(level) => level,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let report = validate_level(&level);
    row.fingerprint = Some(fingerprint_hex(level_fingerprint(&level)));
    row.solvable = report.solvable;
    row.illegal_fraction = report.illegal_fraction;
    row.violations = report.violations.len();
    if let Some(tier) = tier {
        let catalog = Catalog::shipped();
        let stats = compute_stats(&catalog.uniform_build(tier), &catalog);
        let run = plan(&level, &stats, profile)
            .and_then(|p| replay(&level, &stats, profile, &p.commands).ok());
        row.completed = Some(
            run.as_ref()
                .is_some_and(|r| r.result.is_some_and(|x| x.completed)),
        );
        row.restarts = run.map(|r| r.state.restarts);
    }
    row
}

fn cmd_sweep(args: SweepArgs, out: &Out) -> Outcome {
    if let Some(tier) = args.tier {
        if !(1..=3).contains(&tier) {
            return Err(Failure::input(format!("tier {tier} is not 1, 2 or 3")));
        }
    }
    let profiles = profiles()?;
    let themes = if args.theme.is_empty() {
        MapTheme::ALL.to_vec()
    } else {
        args.theme
    };
    let difficulties = if args.difficulty.is_empty() {
        Difficulty::ALL.to_vec()
    } else {
        args.difficulty
    };
    let mut jobs_list = Vec::new();
    for &theme in &themes {
        for &difficulty in &difficulties {
            for seed in args.seeds.iter() {
                jobs_list.push((seed, theme, difficulty));
            }
        }
    }
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, jobs_list.len().max(1));
    let chunk = jobs_list.len().div_ceil(jobs).max(1);
    let rows: Vec<SweepRow> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs_list
            .chunks(chunk)
            .map(|part| {
                let profiles = &profiles;
                s.spawn(move || {
                    part.iter()
                        .map(|&(seed, t, d)| sweep_one(seed, t, d, profiles, args.tier))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker"))
            .collect()
    });

    let mut unique = BTreeSet::new();
    let mut solvable = 0usize;
    let mut conforming = 0usize;
    let mut completed = 0usize;
    for row in &rows {
        if !args.summary {
            out.emit(row);
        }
        if let Some(f) = &row.fingerprint {
            unique.insert(f.clone());
        }
        solvable += usize::from(row.solvable);
        conforming += usize::from(row.solvable && row.violations == 0);
        completed += usize::from(row.completed == Some(true));
    }
    let total = rows.len();
    let mut summary = json!({
        "levels": total,
        "solvable": solvable,
        "conforming": conforming,
        "unique_fingerprints": unique.len(),
    });
    if args.tier.is_some() {
        summary["tier"] = Value::from(args.tier);
        summary["completed"] = Value::from(completed);
    }
    out.emit(&json!({ "summary": summary }));
    let ok = solvable == total && (args.tier.is_none() || completed == total);
    Ok(if ok { 0 } else { 1 })
}

#[cfg(feature = "server")]
fn cmd_serve(args: ServeArgs) -> Outcome {
    use geobots_core::server::{serve, AppState, ServerConfig};
    let mut config = ServerConfig {
        static_dir: args.static_dir,
        snapshot_dir: args.snapshot_dir,
        ..ServerConfig::default()
    };
    if let Some(p) = args.repair_probability {
        if !(0.0..=1.0).contains(&p) {
            return Err(Failure::input("repair probability must lie in [0, 1]"));
        }
        config.repair_probability = p;
    }
    if let Some(m) = args.idle_minutes {
        config.idle_timeout = std::time::Duration::from_secs(m * 60);
    }
    let app = AppState::new(config, profiles()?);
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::internal)?;
    eprintln!("listening on http://{}", args.addr);
    runtime
        .block_on(serve(args.addr, app))
        .map_err(Failure::internal)?;
    Ok(0)
}
