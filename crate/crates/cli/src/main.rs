use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcadams_core::anonymizer::UtteranceStatus;
use mcadams_core::eval::{analyze_frame, evaluate, load_utterances, scores_csv, Scenario};
use mcadams_core::io::{load_config, load_manifest, load_trials, read_wav, write_wav};
use mcadams_core::{
    anonymise_corpus, anonymise_utterance, sample_alpha, AlphaMode, AnonymisationConfig, CorpusOptions, Error,
    McAdamsCoefficient, SplitConfigs,
};

/// Environment variable holding the secret seed; overrides `--seed` and
/// config-file seeds.
const SEED_ENV: &str = "MCADAMS_SEED";

#[derive(Debug, Parser)]
#[command(name = "mcadams", version, about = "Speech pseudonymisation by McAdams pole-angle warping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Anonymise a single 16 kHz mono PCM16 WAV file.
    Anonymise(AnonymiseArgs),
    /// Anonymise every utterance of a manifest into an output directory.
    Batch(BatchArgs),
    /// Dump pole positions and spectral envelopes of one analysis frame.
    Analyze(AnalyzeArgs),
    /// Score a trial list with the proxy speaker verifier.
    Eval(EvalArgs),
    /// Print the coefficient drawn for each speaker.
    SampleAlpha(SampleAlphaArgs),
}

#[derive(Debug, Args)]
struct AnonymiseArgs {
    input: PathBuf,
    output: PathBuf,
    /// Fixed McAdams coefficient in (0, 1]. Default 0.8.
    #[arg(long, value_parser = parse_alpha, conflicts_with_all = ["alpha_min", "alpha_max"])]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_alpha, requires = "alpha_max")]
    alpha_min: Option<f64>,
    #[arg(long, value_parser = parse_alpha, requires = "alpha_min")]
    alpha_max: Option<f64>,
    /// Speaker id used for the keyed coefficient draw.
    #[arg(long, default_value = "")]
    speaker: String,
    #[arg(long, default_value = "")]
    split: String,
    /// Secret seed (MCADAMS_SEED takes precedence).
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, default_value_t = 20)]
    order: usize,
    #[arg(long, default_value_t = 20.0)]
    frame_ms: f64,
    #[arg(long, default_value_t = 10.0)]
    hop_ms: f64,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Config file; repeat once per split label.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    outdir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write drawn coefficients into the reports instead of "redacted".
    #[arg(long)]
    reveal_alpha: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[arg(long)]
    frame: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "0.9,0.7,0.5")]
    alphas: Vec<f64>,
    #[arg(long)]
    outdir: PathBuf,
    /// Number of envelope points between 0 Hz and Nyquist.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Analysis settings (order, frame geometry); defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    trials: PathBuf,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Scenario,
    /// Config applied to test utterances (and enrolment, unless --enrol-config).
    #[arg(long)]
    config: PathBuf,
    /// Config applied to enrolment utterances in the a-a scenario.
    #[arg(long)]
    enrol_config: Option<PathBuf>,
    #[arg(long)]
    outdir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct SampleAlphaArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's split label.
    #[arg(long)]
    split: Option<String>,
    #[arg(required = true)]
    speakers: Vec<String>,
    /// Required: acknowledges that the printed coefficients are secret.
    #[arg(long)]
    reveal_alpha: bool,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    McAdamsCoefficient::new(a).map(|c| c.value()).map_err(|e| e.to_string())
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Decode(_) | Error::UnsupportedFormat(_) | Error::Parse { .. } => 2,
            Error::Structural(_) | Error::Numeric(_) | Error::Input(_) => 3,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Anonymise(a) => cmd_anonymise(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Eval(a) => cmd_eval(a),
        Command::SampleAlpha(a) => cmd_sample_alpha(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mcadams: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn env_seed() -> Option<Vec<u8>> {
    std::env::var_os(SEED_ENV).map(|s| s.to_string_lossy().into_owned().into_bytes())
}

fn config_from_file(path: &Path) -> Result<AnonymisationConfig, Failure> {
    let mut config = load_config(path)?;
    if let Some(seed) = env_seed() {
        config.secret_seed = seed;
    }
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure {
        code: 2,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn create_outdir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 2,
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn cmd_anonymise(args: AnonymiseArgs) -> CmdResult {
    let mode = match (args.alpha, args.alpha_min, args.alpha_max) {
        (Some(a), None, None) => AlphaMode::fixed(a)?,
        (None, Some(lo), Some(hi)) => AlphaMode::uniform(lo, hi)?,
        (None, None, None) => AlphaMode::Fixed(McAdamsCoefficient::BASELINE),
        _ => return Err(Failure::usage("give either --alpha or both --alpha-min and --alpha-max")),
    };
    let config = AnonymisationConfig {
        mode,
        lpc_order: args.order,
        frame_ms: args.frame_ms,
        hop_ms: args.hop_ms,
        secret_seed: env_seed().unwrap_or_else(|| args.seed.unwrap_or_default().into_bytes()),
        split: args.split,
    };
    config.validate()?;
    let ctx = sample_alpha(&config, &args.speaker)?;
    let audio = read_wav(&args.input)?;
    let out = anonymise_utterance(&audio, &ctx, &config)?;
    write_wav(&args.output, &out)?;
    Ok(())
}

fn cmd_batch(args: BatchArgs) -> CmdResult {
    let configs = args
        .configs
        .iter()
        .map(|p| config_from_file(p))
        .collect::<Result<Vec<_>, _>>()?;
    let configs = SplitConfigs::new(configs)?;
    let manifest = load_manifest(&args.manifest)?;
    create_outdir(&args.outdir)?;
    let report = anonymise_corpus(&manifest, &configs, &args.outdir, CorpusOptions { jobs: args.jobs })?;
    write_file(&args.outdir.join("report.csv"), &report.to_csv(args.reveal_alpha))?;
    write_file(&args.outdir.join("speakers.csv"), &report.speakers_csv(args.reveal_alpha))?;

    let failed = report.utterances.iter().filter(|u| u.status != UtteranceStatus::Ok).count();
    eprintln!("mcadams: {} utterances, {failed} failed", report.utterances.len());
    if report.all_ok() {
        Ok(())
    } else {
        Err(Failure {
            code: if report.any_io_failure() { 2 } else { 3 },
            message: format!("{failed} utterances failed; see report.csv"),
        })
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> CmdResult {
    let config = match &args.config {
        Some(p) => config_from_file(p)?,
        None => AnonymisationConfig::default(),
    };
    let alphas = args
        .alphas
        .iter()
        .map(|&a| McAdamsCoefficient::new(a))
        .collect::<Result<Vec<_>, _>>()?;
    let audio = read_wav(&args.input)?;
    let analysis = analyze_frame(&audio, args.frame, &config, &alphas, args.grid)?;
    create_outdir(&args.outdir)?;
    write_file(&args.outdir.join("poles.csv"), &analysis.poles.to_csv())?;
    write_file(&args.outdir.join("envelope_original.csv"), &analysis.original.to_csv())?;
    for (alpha, curve) in &analysis.warped {
        write_file(&args.outdir.join(format!("envelope_alpha_{alpha}.csv")), &curve.to_csv())?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let test_config = config_from_file(&args.config)?;
    let enrol_config = match &args.enrol_config {
        Some(p) => config_from_file(p)?,
        None => test_config.clone(),
    };
    let manifest = load_manifest(&args.manifest)?;
    let trials = load_trials(&args.trials, &manifest)?;
    let utterances = load_utterances(&manifest, &trials)?;
    let outcome = evaluate(&utterances, &trials, args.scenario, &enrol_config, &test_config, args.jobs)?;
    create_outdir(&args.outdir)?;
    write_file(&args.outdir.join("scores.csv"), &scores_csv(&outcome.scores))?;
    write_file(&args.outdir.join("summary.csv"), &outcome.summary_csv())?;
    eprintln!(
        "mcadams: {} trials, eer {:.4} (original {:.4})",
        outcome.scores.len(),
        outcome.eer,
        outcome.eer_original
    );
    Ok(())
}

fn cmd_sample_alpha(args: SampleAlphaArgs) -> CmdResult {
    if !args.reveal_alpha {
        return Err(Failure::usage(
            "coefficients are secret; pass --reveal-alpha to print them",
        ));
    }
    let mut config = config_from_file(&args.config)?;
    if let Some(split) = args.split {
        config.split = split;
    }
    let mut out = String::from("speaker_id,split,alpha\n");
    for speaker in &args.speakers {
        let ctx = sample_alpha(&config, speaker)?;
        out.push_str(&format!("{speaker},{},{}\n", config.split, ctx.alpha));
    }
    print!("{out}");
    Ok(())
}
