//! `greenroom`: batch access to every part of the toolkit.
//!
//! Exit status is 0 on success, 1 when an operation fails and 2 on bad
//! arguments.

use std::collections::BTreeSet;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use greenroom::analytics::{self, ArcDataset, CurveRecord, ShowRecord, Thresholds};
use greenroom::compose::{self, ComposerModels, GenerateRequest, RuleSet};
use greenroom::flow::{self, StyleConfig, Zone};
use greenroom::ideation::{self, IdeateOptions, RankingContext};
use greenroom::lyrics::{self, CharLm, Creativity, SongType};
use greenroom::plot;
use greenroom::sheet::{self, ControlTargets, Key, Meter, PitchClass};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "greenroom", version, about = "Co-writing tools for musical theatre")]
struct Cli {
    /// Seed for every random choice; required by stochastic subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Suppress warnings.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Instantiate what-if templates over a knowledge base.
    Ideate {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value = "learned_how")]
        template: String,
        #[arg(long)]
        theme: Option<String>,
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Generate a plot line from an annotated plot corpus.
    Plot {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        length: usize,
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = plot::DEFAULT_SMOOTHING)]
        smoothing: f64,
    },
    /// Compose a new lead sheet.
    Compose {
        #[arg(long)]
        melody_corpus: PathBuf,
        #[arg(long)]
        chord_corpus: PathBuf,
        #[arg(long)]
        bars: usize,
        /// Lyric text file whose scansion sets the rhythm.
        #[arg(long)]
        lyric: Option<PathBuf>,
        #[arg(long, default_value = "C")]
        key: String,
        #[arg(long, default_value = "major")]
        mode: String,
        #[arg(long, default_value = "4/4")]
        meter: String,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Also write a MIDI file.
        #[arg(long)]
        midi: Option<PathBuf>,
    },
    /// Regenerate a zone of a lead sheet in the style of a corpus.
    Flow {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        sheet: PathBuf,
        /// Like b2.0-b6.0, optionally suffixed :melody or :chords.
        #[arg(long)]
        zone: String,
        /// Control targets as inline JSON or a JSON file.
        #[arg(long)]
        controls: Option<String>,
        #[arg(long, default_value_t = 1)]
        candidates: usize,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Transposed copies added to the corpus, as semitone offsets.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        transpose: Option<Vec<i32>>,
    },
    /// Generate lyrics with the character model.
    Lyrics {
        /// A model saved with --save-model.
        #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
        model: Option<PathBuf>,
        /// A lyric corpus directory with manifest.json.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        save_model: Option<PathBuf>,
        #[arg(long, default_value_t = lyrics::DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = 0.7)]
        creativity: f64,
        #[arg(long, default_value_t = 2000)]
        max_chars: usize,
        #[arg(long)]
        seed_text: Option<String>,
    },
    /// Word cloud of one song type.
    Cloud {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long = "type")]
        song_type: String,
    },
    /// Show-success analytics.
    Analyze {
        #[command(subcommand)]
        report: Report,
    },
    /// Lead-sheet utilities.
    Sheet {
        #[command(subcommand)]
        action: SheetAction,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, env = "GREENROOM_DATA_ROOT", default_value = "data")]
        data_root: PathBuf,
        #[arg(long, env = "GREENROOM_STATE_DIR", default_value = "sessions")]
        state_dir: PathBuf,
        #[arg(long, env = "GREENROOM_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Seconds allowed per generation request.
        #[arg(long, env = "GREENROOM_BUDGET", default_value_t = 30.0)]
        budget: f64,
    },
}

#[derive(Subcommand)]
enum Report {
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    Propensity {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Defaults to every boolean factor.
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<String>>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    Curves {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    Arcs {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 500)]
    commercial: u64,
    #[arg(long, default_value_t = 1)]
    critical: u64,
}

impl ThresholdArgs {
    fn get(&self) -> Thresholds {
        Thresholds { commercial: self.commercial, critical: self.critical }
    }
}

#[derive(Subcommand)]
enum SheetAction {
    Transpose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        semitones: i32,
    },
    /// The five control measures.
    Measure {
        #[arg(long)]
        input: PathBuf,
    },
    /// Chord functions and subdominant statistics.
    Harmony {
        #[arg(long)]
        input: PathBuf,
    },
    Export {
        #[arg(long)]
        input: PathBuf,
    },
}

struct Output {
    path: Option<PathBuf>,
}

impl Output {
    fn bytes(&self, bytes: &[u8]) -> Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    fn text(&self, text: &str) -> Result<()> {
        let mut t = text.to_string();
        if !t.ends_with('\n') {
            t.push('\n');
        }
        self.bytes(t.as_bytes())
    }

    fn json(&self, value: &impl Serialize) -> Result<()> {
        self.text(&serde_json::to_string_pretty(value)?)
    }
}

fn require_seed(seed: Option<u64>, subcommand: &str) -> u64 {
    match seed {
        Some(s) => s,
        None => Cli::command()
            .error(clap::error::ErrorKind::MissingRequiredArgument, format!("`{}` requires --seed <N>", subcommand))
            .exit(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn parse_key(name: &str, mode: &str) -> Result<Key> {
    let tonic = PitchClass::from_name(name).with_context(|| format!("unknown key {:?}", name))?;
    match mode {
        "major" => Ok(Key::major(tonic.value())),
        "minor" => Ok(Key::minor(tonic.value())),
        other => bail!("mode must be major or minor, got {:?}", other),
    }
}

fn parse_meter(text: &str) -> Result<Meter> {
    let (n, d) = text.split_once('/').with_context(|| format!("meter {:?} is not like 4/4", text))?;
    Ok(Meter::new(n.trim().parse()?, d.trim().parse()?)?)
}

fn run(cli: Cli) -> Result<()> {
    let out = Output { path: cli.out.clone() };
    match cli.command {
        Command::Ideate { kb, template, theme, limit } => {
            let kb = ideation::load_kb(&kb)?;
            let template = ideation::bundled_templates()
                .into_iter()
                .find(|t| t.id == template)
                .with_context(|| format!("unknown template {:?}", template))?;
            let options = IdeateOptions { theme, limit, ..IdeateOptions::default() };
            let ideas = ideation::ideate(&kb, &template, &options, &RankingContext::default())?;
            match cli.format {
                Format::Json => out.json(&ideas),
                _ => out.text(&ideas.iter().map(|i| i.text.as_str()).collect::<Vec<_>>().join("\n")),
            }
        }
        Command::Plot { corpus, length, start, smoothing } => {
            let seed = require_seed(cli.seed, "plot");
            let plots = plot::read_plot_corpus(&corpus)?;
            let model = plot::train_plot_model(&plots, plot::bundled_vocabulary(), smoothing)?;
            let line = plot::generate_plot(&model, length, start.as_deref(), seed)?;
            match cli.format {
                Format::Json => out.json(&json!({
                    "seed": seed,
                    "elements": line.elements,
                    "log_probability": line.log_probability,
                })),
                _ => out.text(&line.elements.join("\n")),
            }
        }
        Command::Compose { melody_corpus, chord_corpus, bars, lyric, key, mode, meter, order, midi } => {
            let seed = require_seed(cli.seed, "compose");
            let sheets = sheet::read_sheet_dir(&melody_corpus)?;
            let progressions = compose::read_chord_corpus(&chord_corpus)?;
            let models = ComposerModels::train(&sheets, &progressions, order)?;
            let lyric = lyric.map(|p| read(&p)).transpose()?;
            let request = GenerateRequest { bars, meter: parse_meter(&meter)?, key: parse_key(&key, &mode)?, lyric };
            let generated = compose::generate_leadsheet(&models, &RuleSet::default(), &request, seed)?;
            if let Some(path) = midi {
                sheet::export_midi(&generated, &path)?;
            }
            out.text(&sheet::serialize_leadsheet(&generated))
        }
        Command::Flow { corpus, sheet: sheet_path, zone, controls, candidates, order, transpose } => {
            let seed = require_seed(cli.seed, "flow");
            let zone: Zone = zone.parse()?;
            let current = sheet::read_leadsheet(&sheet_path)?;
            let targets: ControlTargets = match controls {
                None => ControlTargets::default(),
                Some(c) if c.trim_start().starts_with('{') => serde_json::from_str(&c).context("parsing --controls")?,
                Some(c) => read_json(Path::new(&c))?,
            };
            let mut config = StyleConfig { max_order: order, ..StyleConfig::default() };
            if let Some(t) = transpose {
                config.transpositions = t.into_iter().collect::<BTreeSet<i32>>();
            }
            let (model, _) = config.build(&sheet::read_sheet_dir(&corpus)?)?;
            let next = flow::regenerate_with_controls(&model, &current, &zone, &targets, candidates, seed)?;
            out.text(&sheet::serialize_leadsheet(&next))
        }
        Command::Lyrics { model, corpus, save_model, order, creativity, max_chars, seed_text } => {
            let seed = require_seed(cli.seed, "lyrics");
            let creativity = Creativity::new(creativity)?;
            let lm: CharLm = match (model, corpus) {
                (Some(path), _) => read_json(&path)?,
                (None, Some(dir)) => lyrics::train_char_lm(&lyrics::read_lyric_corpus(&dir)?.stages, order)?,
                (None, None) => unreachable!("clap requires one of --model and --corpus"),
            };
            if let Some(path) = save_model {
                std::fs::write(&path, serde_json::to_vec(&lm)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let generated = lyrics::generate_lyrics(&lm, creativity, max_chars, seed_text.as_deref(), seed)?;
            match cli.format {
                Format::Json => out.json(&json!({
                    "creativity": creativity.value(),
                    "seed": seed,
                    "text": generated.text,
                    "mean_entropy": generated.mean_entropy(),
                })),
                _ => out.text(&generated.text),
            }
        }
        Command::Cloud { corpus, song_type } => {
            let song_type: SongType = song_type.parse()?;
            let corpus = lyrics::read_lyric_corpus(&corpus)?;
            let cloud = lyrics::build_word_cloud(&corpus.typed, song_type)?;
            let ranked = cloud.ranked();
            match cli.format {
                Format::Json => out.json(&json!({
                    "song_type": song_type,
                    "words": ranked.iter().map(|(w, s)| json!({ "word": w, "weight": s })).collect::<Vec<_>>(),
                })),
                _ => out.text(&ranked.iter().map(|(w, s)| format!("{},{}", w, s)).collect::<Vec<_>>().join("\n")),
            }
        }
        Command::Analyze { report } => analyze(report, cli.format, &out),
        Command::Sheet { action } => match action {
            SheetAction::Transpose { input, semitones } => {
                out.text(&sheet::serialize_leadsheet(&sheet::read_leadsheet(&input)?.transpose(semitones)?))
            }
            SheetAction::Measure { input } => out.json(&sheet::measure_controls(&sheet::read_leadsheet(&input)?)?),
            SheetAction::Harmony { input } => {
                out.json(&sheet::harmonic_function_stats(&sheet::read_leadsheet(&input)?))
            }
            SheetAction::Export { input } => out.bytes(&sheet::write_midi(&sheet::read_leadsheet(&input)?)),
        },
        Command::Serve { data_root, state_dir, bind, budget } => {
            let config = greenroom_server::Config { state_dir, data_root, budget: Duration::from_secs_f64(budget) };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(greenroom_server::serve(config, bind))?;
            Ok(())
        }
    }
}

fn analyze(report: Report, format: Format, out: &Output) -> Result<()> {
    let write_svg = |path: Option<PathBuf>, svg: String| -> Result<()> {
        if let Some(p) = path {
            std::fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    };
    match report {
        Report::Classify { input, thresholds } => {
            let shows: Vec<ShowRecord> = read_json(&input)?;
            let rows = shows
                .iter()
                .map(|s| Ok((s.name.clone(), analytics::classify(s, thresholds.get())?)))
                .collect::<Result<Vec<_>>>()?;
            match format {
                Format::Json => {
                    out.json(&rows.iter().map(|(n, c)| json!({ "name": n, "category": c })).collect::<Vec<_>>())
                }
                _ => out.text(&rows.iter().map(|(n, c)| format!("{},{}", n, c)).collect::<Vec<_>>().join("\n")),
            }
        }
        Report::Propensity { input, thresholds, factors, svg } => {
            let shows: Vec<ShowRecord> = read_json(&input)?;
            let factors = factors.unwrap_or_else(|| analytics::boolean_factors(&shows));
            let rows = analytics::propensity_table(&shows, thresholds.get(), &factors)?;
            write_svg(svg, analytics::propensity_svg(&rows))?;
            match format {
                Format::Json => out.json(
                    &rows
                        .iter()
                        .map(|(f, p)| json!({ "factor": f, "hit_rate": p.hit_rate, "flop_rate": p.flop_rate }))
                        .collect::<Vec<_>>(),
                ),
                _ => out.text(&analytics::propensity_csv(&rows)?),
            }
        }
        Report::Curves { input, points, svg } => {
            let records: Vec<CurveRecord> = read_json(&input)?;
            let means = analytics::flop_curve_means(&records, points)?;
            write_svg(svg, analytics::curves_svg(&means))?;
            match format {
                Format::Json => out.json(&means),
                _ => out.text(&analytics::curves_csv(&means)?),
            }
        }
        Report::Arcs { input, points, svg } => {
            let data: ArcDataset = read_json(&input)?;
            let means = data.flop_means(points)?;
            write_svg(svg, analytics::curves_svg(&means))?;
            match format {
                Format::Json => out.json(&means),
                _ => out.text(&analytics::curves_csv(&means)?),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}
