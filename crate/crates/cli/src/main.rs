use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regsat::par::Exec;
use regsat::pipeline::{run_path, Command, Overrides};
use regsat::scene::Scene;

/// Usage errors exit with this code (sysexits EX_USAGE).
const USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "regsat", version, about = "Local normal forms around regular submanifolds of Poisson manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Jacobi certification, regularity scan and classification.
    Analyze(RunArgs),
    /// Analyze, then build and check the local Poisson saturation.
    Saturate(RunArgs),
    /// Saturate, then build the local model.
    Model(RunArgs),
    /// Model, then compare it with the ambient structure.
    Verify(RunArgs),
    /// Every stage, plus the dual-pair, tubular and complement checks.
    All(RunArgs),
    /// Built-in scenes.
    Fixtures {
        #[command(subcommand)]
        action: FixtureCmd,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scene file (TOML).
    scene: PathBuf,
    /// RK4 steps for the spray flow (even).
    #[arg(long)]
    steps: Option<usize>,
    /// Relative rank tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory for report.json and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write point clouds as CSV.
    #[arg(long)]
    csv: bool,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum FixtureCmd {
    /// Print the names of the shipped fixtures.
    List,
    /// Print a fixture scene to stdout.
    Emit { name: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Analyze(a) => (Command::Analyze, a),
        Cmd::Saturate(a) => (Command::Saturate, a),
        Cmd::Model(a) => (Command::Model, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::All(a) => (Command::All, a),
        Cmd::Fixtures { action } => return fixtures(action),
    };
    let overrides = Overrides {
        steps: args.steps,
        rank_tol: args.tol,
    };
    let exec = if args.sequential { Exec::Sequential } else { Exec::default() };
    let out = run_path(&args.scene, command, &overrides, exec);
    let scene_output = Scene::load(&args.scene).ok().map(|s| s.output);
    let dir = args
        .out
        .or_else(|| scene_output.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from));
    let csv = args.csv || scene_output.is_some_and(|o| o.csv);
    match dir {
        Some(d) => {
            if let Err(e) = out.write(&d, csv) {
                eprintln!("regsat: {e}");
                return ExitCode::from(4);
            }
        }
        None => println!("{}", out.report.to_json()),
    }
    for st in &out.report.stages {
        match &st.message {
            Some(m) => eprintln!("{:<14} {:?}: {m}", st.name, st.status),
            None => eprintln!("{:<14} {:?}", st.name, st.status),
        }
    }
    ExitCode::from(out.exit_code() as u8)
}

fn fixtures(action: FixtureCmd) -> ExitCode {
    match action {
        FixtureCmd::List => {
            for name in regsat::fixtures::list() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        FixtureCmd::Emit { name } => match regsat::fixtures::emit(&name) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("regsat: {e}");
                ExitCode::from(USAGE)
            }
        },
    }
}
