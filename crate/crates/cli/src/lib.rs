//! Command-line interface of `crashlens`: argument types and command execution.

use std::fs::File;
use std::io::{BufReader, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crashlens::classify::ConfigRulebook;
use crashlens::ingest::{parse_records, write_records, Format, IngestError};
use crashlens::model::CrashRecord;
use crashlens::report::{analyze, render, verify, write_files, ReportFormat};
use crashlens::skills::{SkillRulebook, Thresholds};
use crashlens::synth::{generate_with, MarginalProfile};

#[derive(Parser)]
#[command(name = "crashlens", version, about = "Crash-configuration analysis of powered-two-wheeler crash records")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Validate a record file and write the accepted records.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: InputFormat,
        /// Fail on the first file with any rejected row instead of skipping it.
        #[arg(long)]
        strict: bool,
        /// Output file; `.jsonl` writes JSON lines, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full analysis and write the report tables.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        /// Input format; guessed from the extension when omitted.
        #[arg(long, value_enum)]
        format: Option<InputFormat>,
        /// Configuration rulebook, which must keep the built-in preimage sizes;
        /// the built-in grouping when omitted.
        #[arg(long)]
        rulebook: Option<PathBuf>,
        /// Skill rules; the built-in rules when omitted.
        #[arg(long)]
        skills: Option<PathBuf>,
        #[arg(long)]
        report_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        report_format: OutputFormat,
    },
    /// Generate a synthetic dataset from a marginal profile.
    Synth {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Rescale the profile to this study-population size.
        #[arg(long)]
        total: Option<usize>,
        #[arg(long)]
        rulebook: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a dataset against the marginal profile it should reproduce.
    Verify {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        expect: PathBuf,
        #[arg(long, value_enum)]
        format: Option<InputFormat>,
        #[arg(long)]
        rulebook: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl From<InputFormat> for Format {
    fn from(f: InputFormat) -> Format {
        match f {
            InputFormat::Csv => Format::Csv,
            InputFormat::Jsonl => Format::JsonLines,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Md,
    Json,
}

impl From<OutputFormat> for ReportFormat {
    fn from(f: OutputFormat) -> ReportFormat {
        match f {
            OutputFormat::Csv => ReportFormat::Csv,
            OutputFormat::Md => ReportFormat::Markdown,
            OutputFormat::Json => ReportFormat::Json,
        }
    }
}

/// Colour is off when `CRASHLENS_NO_COLOR` is set.
pub fn color_allowed() -> bool {
    std::env::var_os("CRASHLENS_NO_COLOR").is_none()
}

/// Whether PASS/FAIL markers on standard output should be coloured.
pub fn stdout_color() -> bool {
    color_allowed() && std::io::stdout().is_terminal()
}

fn status_line(color: bool, passed: bool, line: &str) -> String {
    if !color {
        return line.to_string();
    }
    let code = if passed { "32" } else { "31" };
    match line.split_once(' ') {
        Some((head, rest)) => format!("\x1b[{code}m{head}\x1b[0m {rest}"),
        None => line.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_rulebook(path: Option<&Path>) -> Result<ConfigRulebook> {
    match path {
        Some(p) => ConfigRulebook::parse_strict(&read_text(p)?).with_context(|| format!("invalid rulebook {}", p.display())),
        None => Ok(ConfigRulebook::table_a1()),
    }
}

fn load_skills(path: Option<&Path>) -> Result<SkillRulebook> {
    match path {
        Some(p) => SkillRulebook::parse(&read_text(p)?).with_context(|| format!("invalid skill rules {}", p.display())),
        None => Ok(SkillRulebook::default_rules()),
    }
}

fn load_profile(path: &Path) -> Result<MarginalProfile> {
    MarginalProfile::parse(&read_text(path)?).with_context(|| format!("invalid profile {}", path.display()))
}

fn read_strict(path: &Path, format: Option<InputFormat>) -> Result<Vec<CrashRecord>> {
    let format = format.map_or_else(|| Format::from_path(path), Format::from);
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let outcome = parse_records(BufReader::new(file), format).with_context(|| format!("cannot parse {}", path.display()))?;
    outcome.strict().with_context(|| format!("{} failed validation", path.display()))
}

fn write_dataset(path: &Path, records: &[CrashRecord]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut sink = BufWriter::new(file);
    write_records(records, Format::from_path(path), &mut sink)
        .and_then(|()| sink.flush().map_err(IngestError::from))
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Executes one command, writing its report lines to `out`. Row diagnostics
/// go to standard error. `Ok(false)` means the command ran but found failures.
pub fn run(command: Command, out: &mut dyn Write, color: bool) -> Result<bool> {
    match command {
        Command::Ingest {
            input,
            format,
            strict,
            out: dest,
        } => {
            let file = File::open(&input).with_context(|| format!("cannot open {}", input.display()))?;
            let outcome = parse_records(BufReader::new(file), format.into())
                .with_context(|| format!("cannot parse {}", input.display()))?;
            if strict && !outcome.rejects.is_empty() {
                for r in &outcome.rejects {
                    eprintln!("{r}");
                }
                bail!("{} row(s) rejected in {}", outcome.rejects.len(), input.display());
            }
            for r in &outcome.rejects {
                eprintln!("skipped {r}");
            }
            write_dataset(&dest, &outcome.records)?;
            writeln!(
                out,
                "wrote {} records to {} ({} rejected)",
                outcome.records.len(),
                dest.display(),
                outcome.rejects.len()
            )?;
            Ok(true)
        }
        Command::Analyze {
            records,
            format,
            rulebook,
            skills,
            report_dir,
            report_format,
        } => {
            let rulebook = load_rulebook(rulebook.as_deref())?;
            let skills = load_skills(skills.as_deref())?;
            let data = read_strict(&records, format)?;
            let bundle = analyze(data, &rulebook, &skills, &Thresholds::default());
            let files = render(&bundle, report_format.into());
            write_files(&report_dir, &files)?;
            let f = &bundle.filter;
            writeln!(
                out,
                "{} records, {} in the study population ({} selected, {} other); wrote {} file(s) to {}",
                f.n_input,
                f.n_study_population,
                f.n_selected_configs,
                f.n_other_bucket,
                files.len(),
                report_dir.display()
            )?;
            Ok(true)
        }
        Command::Synth {
            profile,
            seed,
            total,
            rulebook,
            out: dest,
        } => {
            let mut marginal = load_profile(&profile)?;
            if let Some(n) = total {
                marginal = marginal.scaled(n).context("cannot rescale the profile")?;
            }
            let rulebook = load_rulebook(rulebook.as_deref())?;
            let records = generate_with(&marginal, &rulebook, seed).context("cannot generate records")?;
            write_dataset(&dest, &records)?;
            writeln!(out, "wrote {} synthetic records to {}", records.len(), dest.display())?;
            Ok(true)
        }
        Command::Verify {
            records,
            expect,
            format,
            rulebook,
        } => {
            let profile = load_profile(&expect)?;
            let rulebook = load_rulebook(rulebook.as_deref())?;
            let data = read_strict(&records, format)?;
            let report = verify(data, &profile, &rulebook);
            for check in &report.checks {
                writeln!(out, "{}", status_line(color, check.passed, &check.to_string()))?;
            }
            let failed = report.failures().count();
            writeln!(out, "{} checks, {} failed", report.checks.len(), failed)?;
            Ok(failed == 0)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I, out: &mut dyn Write) -> Result<bool>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(cli.command, out, false)
}
