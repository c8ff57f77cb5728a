//! The `maud` command line: scripted assessment, beta fitting, evaluation,
//! mode comparison and the HTTP service.
//!
//! Every command is a function of its input files. Results go to stdout;
//! failures are reported as a `{code, message, field?}` JSON document on
//! stderr with a nonzero exit status.

pub mod error;
pub mod render;
pub mod script;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use maud_core::error::parse_document;
use maud_core::evaluation::{compare_modes, evaluate};
use maud_core::fixtures;
use maud_core::rules::{load_knowledge_base, FactSet, KnowledgeBase};
use maud_core::{AttributeSpec, UserProfile};
use maud_service::documents::FitBetaRequest;
use maud_service::ServiceConfig;

pub use error::CliError;
pub use script::{AnswerScript, ScriptedAnswer};

#[derive(Debug, Parser)]
#[command(
    name = "maud",
    version,
    about = "Design evaluation with utility analysis and a rule-based expert system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a profile from an answer script.
    Assess(AssessArgs),
    /// Fit a four-parameter beta estimate from bounds, one shape and one target.
    FitBeta(FitBetaArgs),
    /// Rank the feasible alternatives for a design.
    Evaluate(EvaluateArgs),
    /// Compare the conventional rule pick with the utility-ranked pick.
    Compare(CompareArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Write the bundled knowledge base, facts, attributes and profiles.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    /// Attribute list (JSON array).
    #[arg(long)]
    pub attributes: PathBuf,
    /// Answer script (JSON).
    #[arg(long)]
    pub answers: PathBuf,
    /// Where to write the profile.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("shape").required(true).args(["p", "q"])))]
#[command(group(ArgGroup::new("target").required(true).args(["mode", "mean"])))]
pub struct FitBetaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lower: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub upper: f64,
    /// Known shape on the lower side.
    #[arg(long)]
    pub p: Option<f64>,
    /// Known shape on the upper side.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mode: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    /// Density sample count in JSON output.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct DesignInputs {
    /// Knowledge base; the bundled bumper knowledge base when omitted.
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// Design facts; the bundled truck facts when omitted.
    #[arg(long)]
    pub facts: Option<PathBuf>,
    /// Profile document, bare or as stored by the service.
    #[arg(
        long,
        conflicts_with = "bundled_profile",
        required_unless_present = "bundled_profile"
    )]
    pub profile: Option<PathBuf>,
    /// Use a bundled profile instead of a file.
    #[arg(long, value_enum)]
    pub bundled_profile: Option<BundledProfile>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub inputs: DesignInputs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub inputs: DesignInputs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = maud_service::ADDR_ENV, default_value = maud_service::DEFAULT_ADDR)]
    pub addr: String,
    #[arg(long, env = maud_service::DATA_DIR_ENV, default_value = maud_service::DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BundledProfile {
    Typical,
    Atypical,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Accepts a bare profile or a stored document carrying it under `profile`.
pub fn load_profile(bytes: &[u8]) -> Result<UserProfile, CliError> {
    let value: serde_json::Value = parse_document(bytes)?;
    match value.get("profile") {
        Some(inner) => {
            let inner = serde_json::to_vec(inner).expect("values serialize");
            parse_document(&inner).map_err(|source| CliError::Located {
                field: format!("profile.{}", source.field().unwrap_or_default()),
                source,
            })
        }
        None => Ok(parse_document(bytes)?),
    }
}

impl DesignInputs {
    fn load(&self) -> Result<(KnowledgeBase, FactSet, UserProfile), CliError> {
        let kb = match &self.kb {
            Some(path) => load_knowledge_base(&read(path)?)?,
            None => fixtures::bumper_kb(),
        };
        let facts = match &self.facts {
            Some(path) => FactSet::from_json(&read(path)?)?,
            None => fixtures::truck_facts(),
        };
        let profile = match (&self.profile, self.bundled_profile) {
            (Some(path), _) => load_profile(&read(path)?)?,
            (None, Some(BundledProfile::Atypical)) => fixtures::atypical_profile(),
            (None, _) => fixtures::typical_profile(),
        };
        Ok((kb, facts, profile))
    }
}

/// Runs a scripted assessment and writes the profile; returns it.
pub fn assess(args: &AssessArgs) -> Result<UserProfile, CliError> {
    let attributes: Vec<AttributeSpec> = parse_document(&read(&args.attributes)?)?;
    let script: AnswerScript = parse_document(&read(&args.answers)?)?;
    let profile = script.profile(attributes)?;
    write_file(&args.out, render::json(&profile).as_bytes())?;
    Ok(profile)
}

/// Executes one command, writing its result to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Assess(args) => {
            let profile = assess(&args)?;
            writeln!(out, "profile written to {}", args.out.display())?;
            writeln!(out, "fingerprint {}", profile.fingerprint())?;
        }
        Command::FitBeta(args) => {
            let report = FitBetaRequest {
                lower: args.lower,
                upper: args.upper,
                p: args.p,
                q: args.q,
                mode: args.mode,
                mean: args.mean,
                samples: args.samples,
            }
            .run()?;
            match args.format {
                Format::Json => out.write_all(render::json(&report).as_bytes())?,
                Format::Table | Format::Csv => {
                    out.write_all(render::fit_table(&report).as_bytes())?
                }
            }
        }
        Command::Evaluate(args) => {
            let (kb, facts, profile) = args.inputs.load()?;
            let result = evaluate(&kb, &facts, &profile)?;
            let text = match args.format {
                Format::Table => render::evaluation_table(&result),
                Format::Json => render::json(&result),
                Format::Csv => render::evaluation_csv(&result)?,
            };
            out.write_all(text.as_bytes())?;
        }
        Command::Compare(args) => {
            let (kb, facts, profile) = args.inputs.load()?;
            let report = compare_modes(&kb, &facts, &profile)?;
            let text = match args.format {
                Format::Json => render::json(&report),
                Format::Table | Format::Csv => render::comparison_table(&report),
            };
            out.write_all(text.as_bytes())?;
        }
        Command::Serve(args) => {
            let config = ServiceConfig {
                addr: args
                    .addr
                    .parse()
                    .map_err(|_| CliError::Address(args.addr.clone()))?,
                data_dir: args.data_dir,
            };
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(CliError::Serve)?
                .block_on(maud_service::serve(config))
                .map_err(CliError::Serve)?;
        }
        Command::Fixtures(args) => {
            std::fs::create_dir_all(&args.out).map_err(|source| CliError::Write {
                path: args.out.clone(),
                source,
            })?;
            for (name, contents) in fixtures::bundled_documents() {
                let path = args.out.join(name);
                write_file(&path, contents.as_bytes())?;
                writeln!(out, "{}", path.display())?;
            }
        }
    }
    Ok(())
}
