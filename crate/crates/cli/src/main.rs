use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use normkit::dsl::{parse_schema_with_warnings, ParseDiagnostic};
use normkit::model::Warning;
use normkit::{Error, RelationSchema};

mod commands;
mod json;

#[derive(Parser)]
#[command(name = "normkit", version, about = "Analyze, decompose and quiz relational schemas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closure of the key, candidate keys, dependency labels and normal form.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Decompose with the diagram or cookbook method.
    Decompose {
        #[arg(long, value_enum, default_value_t = Method::Diagram)]
        method: Method,
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write the dependency diagram as DOT.
    Diagram {
        file: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a decomposition for a lossless join and dependency preservation.
    Verify {
        file: PathBuf,
        /// Decomposition JSON as written by `decompose --json`; computed
        /// with `--method` when omitted.
        #[arg(long)]
        decomposition: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Diagram)]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        json: bool,
    },
    /// Generate or grade a quiz.
    Quiz {
        #[command(subcommand)]
        command: QuizCommand,
    },
    /// Mean, standard deviation and histogram of grade reports.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum QuizCommand {
    /// Write quiz.txt, quiz.gift and key.txt into a directory.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Grade an answers file against a quiz file.
    Grade {
        quiz: PathBuf,
        answers: PathBuf,
        /// Give fractional credit instead of exact-match scoring.
        #[arg(long)]
        partial: bool,
        /// State the expected answer in feedback on wrong answers.
        #[arg(long)]
        reveal: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Diagram,
    Cookbook,
}

/// Failure carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Parse(String),
    Analysis(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Analysis(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Parse(m) | Failure::Analysis(m) | Failure::Verification(m) => m,
        }
    }

    /// Classify an engine error raised while handling `file`.
    pub fn from_error(file: &Path, error: Error) -> Self {
        let located = |e: &dyn std::fmt::Display| format!("{}: error: {e}", file.display());
        match error {
            Error::Parse(d) => Failure::Parse(diagnostic(file, &d)),
            Error::UnknownOption { .. } | Error::QuizMismatch(_) | Error::InvalidArgument(_) => {
                Failure::Parse(located(&error))
            }
            Error::Coverage { .. } | Error::InvalidDecomposition(_) => Failure::Verification(located(&error)),
            Error::EmptyInput => Failure::Usage(located(&error)),
            other => Failure::Analysis(located(&other)),
        }
    }
}

pub fn diagnostic(file: &Path, d: &ParseDiagnostic) -> String {
    format!("{}:{d}", file.display())
}

pub fn read(file: &Path) -> Result<String, Failure> {
    fs::read_to_string(file).map_err(|e| Failure::Parse(diagnostic(file, &ParseDiagnostic::io(e.to_string()))))
}

pub fn write(file: &Path, text: &str) -> Result<(), Failure> {
    fs::write(file, text).map_err(|e| Failure::Parse(diagnostic(file, &ParseDiagnostic::io(e.to_string()))))
}

pub fn load_schema(file: &Path) -> Result<(RelationSchema, Vec<Warning>), Failure> {
    let text = read(file)?;
    parse_schema_with_warnings(&text).map_err(|e| Failure::from_error(file, e))
}

pub fn print_warnings(file: &Path, warnings: &[Warning]) {
    for w in warnings {
        match w.line {
            Some(line) => eprintln!("{}:{line}: warning: {}", file.display(), w.message),
            None => eprintln!("{}: warning: {}", file.display(), w.message),
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Analyze { file, json } => commands::analyze(&file, json),
        Command::Decompose { method, file, json } => commands::decompose(&file, method, json),
        Command::Diagram { file, output } => commands::diagram(&file, output.as_deref()),
        Command::Verify {
            file,
            decomposition,
            method,
            seed,
            trials,
            json,
        } => commands::verify(&file, decomposition.as_deref(), method, seed, trials, json),
        Command::Quiz { command } => match command {
            QuizCommand::Gen { seed, file, output } => commands::quiz_gen(&file, seed, &output),
            QuizCommand::Grade {
                quiz,
                answers,
                partial,
                reveal,
            } => commands::quiz_grade(&quiz, &answers, partial, reveal),
        },
        Command::Report { files, json } => commands::report(&files, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
