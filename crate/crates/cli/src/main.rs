use std::path::PathBuf;
use std::process::ExitCode;

use alertgame::experiment::{list_recipes, recipe, run_recipe, Scale};
use alertgame::exec::with_jobs;
use alertgame::Error;
use clap::{Args, Parser, Subcommand};

/// Adversarial alert-inspection game: run experiment recipes.
#[derive(Parser)]
#[command(name = "alertgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in recipes.
    List,
    /// Print the resolved settings of a recipe without running it.
    Show(Target),
    /// Run a recipe and write its report bundle.
    Run {
        #[command(flatten)]
        target: Target,
        /// Output directory (default: out/<recipe>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, short)]
        quiet: bool,
    },
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    recipe: String,
    /// `key = value` settings file applied over the recipe defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// paper or desk; each recipe has its own default.
    #[arg(long)]
    scale: Option<Scale>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn resolve(t: &Target) -> alertgame::Result<alertgame::experiment::ExperimentRecipe> {
    let mut r = recipe(&t.recipe, t.scale)?;
    if let Some(path) = &t.config {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
            _ => Error::Io(e),
        })?;
        r.settings.apply_text(&text)?;
    }
    if let Some(seed) = t.seed {
        r.settings.seed = seed;
    }
    if let Some(runs) = t.runs {
        r.settings.runs = runs;
    }
    for kv in &t.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected KEY=VALUE, got '{kv}'")))?;
        r.settings.set(k.trim(), v)?;
    }
    r.settings.validate()?;
    Ok(r)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Format(_) => 2,
        Error::MissingArtifact(_) | Error::ConfigHashMismatch { .. } => 3,
        Error::Numerical(_) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> alertgame::Result<()> {
    match cli.command {
        Command::List => {
            for r in list_recipes() {
                println!("{:<26} {:<6} {}", r.name, r.scale.to_string(), r.description);
            }
        }
        Command::Show(t) => print!("{}", resolve(&t)?.settings.render()),
        Command::Run { target, out, jobs, quiet } => {
            let r = resolve(&target)?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&r.name));
            let progress = |msg: &str| {
                if !quiet {
                    eprintln!("[{}] {msg}", r.name);
                }
            };
            let bundle = with_jobs(jobs, || run_recipe(&r, &out, &progress))?;
            for (label, s) in &bundle.stats {
                println!(
                    "{label}: mean sup cost {:.4} (+/- {:.4}), green {:.3} yellow {:.3} orange {:.3} red {:.3}",
                    s.mean_sup_cost,
                    s.sup_cost_half_width(),
                    s.proportions[0],
                    s.proportions[1],
                    s.proportions[2],
                    s.proportions[3]
                );
            }
            println!("wrote {} files to {}", bundle.files.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
