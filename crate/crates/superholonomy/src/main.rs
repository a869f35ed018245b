use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use superholonomy::report::{error_code, load_model, run_command, Command, Options};

#[derive(Parser)]
#[command(name = "superholonomy", version, about = "Exact holonomy computations on supermanifold models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    lprime: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Add wall-clock timings (makes the report non-deterministic).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Cmd {
    Curvature(Common),
    Transport(Common),
    Holonomy(Common),
    Compare(Common),
    Twofold(Common),
    #[command(name = "derham-wu")]
    DerhamWu(Common),
    Fppf {
        #[command(subcommand)]
        action: Fppf,
    },
}

#[derive(Subcommand)]
enum Fppf {
    Audit(Common),
    Glue(Common),
}

fn fail(code: &str, msg: &str) -> ExitCode {
    eprintln!("{}", serde_json::json!({"error": code, "message": msg}));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Curvature(c) => (Command::Curvature, c),
        Cmd::Transport(c) => (Command::Transport, c),
        Cmd::Holonomy(c) => (Command::Holonomy, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::Twofold(c) => (Command::Twofold, c),
        Cmd::DerhamWu(c) => (Command::DeRhamWu, c),
        Cmd::Fppf { action: Fppf::Audit(c) } => (Command::FppfAudit, c),
        Cmd::Fppf { action: Fppf::Glue(c) } => (Command::FppfGlue, c),
    };
    let text = match std::fs::read_to_string(&common.model) {
        Ok(t) => t,
        Err(e) => return fail("io_error", &format!("{}: {e}", common.model.display())),
    };
    let opts = Options { kmax: common.kmax, lprime: common.lprime, seed: common.seed };
    let start = std::time::Instant::now();
    let result = load_model(&text, &opts).and_then(|m| run_command(cmd, &m, &opts));
    let mut report = match result {
        Ok(r) => r,
        Err(e) => return fail(error_code(&e), &e.to_string()),
    };
    report["model"] = serde_json::json!(common.model.display().to_string());
    if common.timings {
        report["timings"] = serde_json::json!({"seconds": start.elapsed().as_secs_f64()});
    }
    let pass = report["pass"].as_bool() == Some(true);
    let body = serde_json::to_string_pretty(&report).expect("json values serialize") + "\n";
    if let Err(e) = std::fs::write(&common.out, body) {
        return fail("io_error", &format!("{}: {e}", common.out.display()));
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
