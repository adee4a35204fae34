//! `ces`: replay, synchronize, compare and check command event files.
//!
//! Exit codes: 0 success, 1 semantic failure (models differ, orders do not
//! commute, editors do not converge), 2 usage or input error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ces::domain::Domain;
use ces::editor::{Editor, LoadReport};
use ces::event::{decode, ClockState, Event, FixedClock, OverwriteStrategy};
use ces::graph::model_diff;
use ces::sync::{digest, Script};
use ces::verify::{check_ces_model, check_commutative, stamp_untimed, STAMP_BASE};

#[derive(Parser)]
#[command(name = "ces", version, about = "Commutative event sourcing toolkit")]
struct Cli {
    /// Overwrite strategy: last-edit-wins, first-edit-wins or highest-version-wins
    #[arg(long, global = true)]
    strategy: Option<OverwriteStrategy>,

    /// Comma-separated command types to exchange; replaces the domain default
    #[arg(long, global = true, value_delimiter = ',')]
    filter: Option<Vec<String>>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    domain: Domain,
    /// Event file (.ces)
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Replay an event file and print the model and a digest of the store
    Replay {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with = "permute")]
        reverse: bool,
        /// Replay in a random order drawn from this seed
        #[arg(long, value_name = "SEED")]
        permute: Option<u64>,
    },
    /// Replay into one metamodel, export, and load into another
    Sync {
        #[arg(long)]
        from_domain: Domain,
        #[arg(long)]
        to_domain: Domain,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the models built by two event files
    Diff {
        #[arg(long)]
        domain: Domain,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Replay in reverse and in random orders and compare the models
    CheckCommute {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check that parsing the replayed model gives back the active commands
    CheckCes {
        #[command(flatten)]
        input: Input,
    },
    /// Replay, parse the whole model, and print the resulting store
    Parse {
        #[command(flatten)]
        input: Input,
    },
    /// Run a multi-editor session script
    Simulate {
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(err: E) -> Self {
        Failure(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn read_events(path: &Path) -> Result<Vec<Event>, Failure> {
    decode(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn editor(cli: &Cli, domain: Domain) -> Editor {
    let mut editor = domain.editor_with_clock(ClockState::new(FixedClock(STAMP_BASE)));
    if let Some(strategy) = cli.strategy {
        editor.set_strategy(strategy);
    }
    if let Some(filter) = &cli.filter {
        editor.set_sync_filter(Some(filter.iter().cloned().collect::<BTreeSet<_>>()));
    }
    editor
}

fn check_report(report: LoadReport, path: &Path) -> Result<(), Failure> {
    match report.errors.first() {
        None => Ok(()),
        Some((index, err)) => Err(Failure(format!("{}: event {}: {err}", path.display(), index + 1))),
    }
}

fn replay_into(cli: &Cli, domain: Domain, events: Vec<Event>, path: &Path) -> Result<Editor, Failure> {
    let mut editor = editor(cli, domain);
    check_report(editor.execute_all(events), path)?;
    Ok(editor)
}

fn print_state(editor: &Editor) {
    print!("{}", editor.registry().dump());
    println!("active {} {}", editor.active_len(), digest(&editor.export_all()));
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    match &cli.command {
        Command::Replay { input, reverse, permute } => {
            let mut events = stamp_untimed(&read_events(&input.input)?, STAMP_BASE);
            if *reverse {
                events.reverse();
            }
            if let Some(seed) = permute {
                events.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            }
            let editor = replay_into(cli, input.domain, events, &input.input)?;
            print_state(&editor);
            Ok(true)
        }
        Command::Sync { from_domain, to_domain, input, out } => {
            let source = replay_into(cli, *from_domain, read_events(input)?, input)?;
            let mut target = editor(cli, *to_domain);
            let report = target.load_events(&source.export_active())?;
            check_report(report, input)?;
            fs::write(out, target.export_active()).map_err(|e| Failure(format!("{}: {e}", out.display())))?;
            print_state(&target);
            Ok(true)
        }
        Command::Diff { domain, a, b } => {
            let left = replay_into(cli, *domain, read_events(a)?, a)?;
            let right = replay_into(cli, *domain, read_events(b)?, b)?;
            let diff = model_diff(left.registry(), right.registry());
            for warning in &diff.warnings {
                println!("note: {warning}");
            }
            if diff.is_empty() {
                println!("models are equal");
            } else {
                print!("{diff}");
            }
            Ok(diff.is_empty())
        }
        Command::CheckCommute { input, trials, seed } => {
            let events = read_events(&input.input)?;
            let factory = || editor(cli, input.domain);
            let report = check_commutative(&factory, &events, *trials, *seed);
            println!("{report}");
            Ok(report.passed())
        }
        Command::CheckCes { input } => {
            let editor = replay_into(cli, input.domain, read_events(&input.input)?, &input.input)?;
            let report = check_ces_model(&editor);
            println!("{report}");
            Ok(report.passed())
        }
        Command::Parse { input } => {
            let mut editor = replay_into(cli, input.domain, read_events(&input.input)?, &input.input)?;
            let changed = editor.parse_all()?;
            print!("{}", editor.export_all());
            println!("# parse changed {changed} commands");
            Ok(true)
        }
        Command::Simulate { script, seed } => {
            let script: Script = read(script)?.parse()?;
            let mut session = script.session(*seed);
            if let Some(strategy) = cli.strategy {
                session.set_strategy(strategy);
            }
            let report = session.run();
            print!("{}", report.to_text());
            Ok(report.converged())
        }
    }
}
