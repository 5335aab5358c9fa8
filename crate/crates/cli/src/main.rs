//! `vpt`: batch entry point for the perspective-token toolkit.

mod error;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use error::CliError;
use vpt_core::actv::RawActivations;
use vpt_core::curriculum::{self, AnnotationPool, CurriculumConfig, StageCounts, TokenFamily};
use vpt_core::embodiment::{self, KeypointRecord, PoseSource};
use vpt_core::evalharness::{self, BenchmarkItem, ScoreReport, Transcript};
use vpt_core::jsonl;
use vpt_core::probe::{self, Contrast, StimulusMeta};
use vpt_core::rotation::{self, CategorySet, SceneAnnotation};
use vpt_core::scene::{self, Alignment, BenchmarkConfig};
use vpt_core::vocab::{TokenVocab, VocabVariant, DEFAULT_CATEGORIES};

#[derive(Parser)]
#[command(
    name = "vpt",
    version,
    about = "Perspective-token toolkit: scenes, token encoders, vocabularies, curricula, scoring and probing",
    after_help = "Data errors exit 1 and print `error[Class]: message` to stderr. Usage errors exit 2."
)]
struct Cli {
    /// Seed for every random choice. Overrides VPT_SEED; defaults to 0.
    #[arg(long, global = true, env = "VPT_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    GenScenes(GenScenesArgs),
    EncodeEmbodiment(EncodeEmbodimentArgs),
    EncodeRotation(EncodeRotationArgs),
    BuildVocab(BuildVocabArgs),
    GenCurriculum(GenCurriculumArgs),
    Eval(EvalArgs),
    Analyze(AnalyzeArgs),
}

/// Generate the synthetic perspective-taking benchmark as scene JSONL.
///
/// Output: one JSON object per line with keys id, reference_yaw_deg,
/// reference_pos, viewer_pos, objects, query, gold_viewer, gold_reference,
/// alignment. World frame is top-down; the viewer sits on the -y axis
/// looking toward +y and yaw 0 means the reference faces away from the viewer.
#[derive(Args)]
#[command(verbatim_doc_comment)]
struct GenScenesArgs {
    /// Output JSONL path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reference yaw angles in degrees, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0,30,60,90,120,150,180,210,240,270,300,330"
    )]
    angles: Vec<f64>,
    /// Target offset "X,Y" from the reference; repeat for more placements.
    /// Placements must be balanced left/right of the viewer axis. Default: -2,1 and 2,1.
    #[arg(long = "placement", value_name = "X,Y", allow_hyphen_values = true, value_parser = parse_pair)]
    placements: Vec<[f64; 2]>,
    /// Reference position "X,Y".
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true, value_parser = parse_pair, default_value = "0,0")]
    reference: [f64; 2],
    /// Viewer position "X,Y".
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true, value_parser = parse_pair, default_value = "0,-5")]
    viewer: [f64; 2],
    /// Collinearity tolerance on the facing-axis cross product.
    #[arg(long, default_value_t = scene::DEFAULT_EPSILON)]
    epsilon: f64,
}

/// Encode keypoint annotations as embodiment-token sequences.
///
/// Input JSONL: {"image_id", "r_shoulder":[x,y], "l_shoulder":[x,y],
/// "r_hip":[x,y], "l_hip":[x,y], "confidences"?: [4 reals]}. Coordinates are
/// integer pixels in 336x336 space unless --rescale-from is given.
/// Output JSONL: {"image_id", "tokens":[...], "theta_deg", "yaw_bin", "alignment"}.
#[derive(Args)]
#[command(verbatim_doc_comment)]
struct EncodeEmbodimentArgs {
    /// Keypoint annotation JSONL.
    #[arg(long)]
    input: PathBuf,
    /// Keypoint source: coco (18 tokens) or vitpose (22 tokens with CONF_j).
    #[arg(long, default_value = "coco")]
    source: PoseSource,
    /// Original image width and height; maps x' = round(x*336/W), y' = round(y*336/H).
    #[arg(long, num_args = 2, value_names = ["W", "H"])]
    rescale_from: Option<Vec<f64>>,
    /// Output JSONL path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Encode object annotations as rotation-token sequences.
///
/// Input JSONL: {"image_id", "objects":[{"category", "bbox":[x_min,y_min,x_max,y_max],
/// "azimuth_deg", "is_reference"}]} with exactly one reference per scene.
/// Output JSONL: {"image_id", "tokens":[...]}; the reference object comes first.
#[derive(Args)]
#[command(verbatim_doc_comment)]
struct EncodeRotationArgs {
    /// Object annotation JSONL.
    #[arg(long)]
    input: PathBuf,
    /// JSON array of exactly 18 category names (default set when omitted).
    #[arg(long)]
    categories: Option<PathBuf>,
    /// Output JSONL path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Write a spatial-token vocabulary as JSON.
///
/// Output: {"variant", "base_offset", "entries":[{"token","id"}]} in id order.
/// Sizes: emb_coco 692, emb_vitpose 702, rotation 702.
#[derive(Args)]
#[command(verbatim_doc_comment)]
struct BuildVocabArgs {
    /// emb_coco, emb_vitpose or rotation.
    #[arg(long)]
    variant: VocabVariant,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
    /// First id, normally the base tokenizer's size.
    #[arg(long, default_value_t = 0)]
    base_offset: u32,
    /// JSON array of exactly 18 category names (rotation only).
    #[arg(long)]
    categories: Option<PathBuf>,
}

/// Emit an annealed curriculum corpus and its per-epoch manifest.
///
/// Annotations: keypoint JSONL for emb_coco/emb_vitpose, object JSONL for rotation
/// (formats as in encode-embodiment / encode-rotation).
/// Corpus JSONL: {"id", "stage", "prompt", "response", "token_sequence",
/// "source_image_id", "query"?} sorted by id.
/// Manifest JSON: {"variant", "seed", "template_version", "counts", "sampling",
/// "epoch_size", "cot_share_pct", "epochs":[{"epoch", "p_token_gen", "p_cot",
/// "p_direct", "realized", "resampled", "example_ids"}]}.
#[derive(Args)]
#[command(verbatim_doc_comment)]
struct GenCurriculumArgs {
    /// emb_coco, emb_vitpose or rotation.
    #[arg(long)]
    variant: VocabVariant,
    /// Annotation JSONL.
    #[arg(long)]
    annotations: PathBuf,
    /// Corpus JSONL path.
    #[arg(long)]
    out: PathBuf,
    /// Manifest path (default: the corpus path with extension .manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Number of epochs in the manifest, 1 to 10.
    #[arg(long, default_value_t = curriculum::EPOCHS)]
    epochs: u32,
    /// Examples per epoch (default: corpus size).
    #[arg(long)]
    epoch_size: Option<usize>,
    /// Percent of the reasoning share given to CoT; the rest is direct.
    #[arg(long, default_value_t = 50)]
    cot_share: u32,
    /// Override corpus counts "TOKEN_GEN,COT,DIRECT" (default: 18000,200,200 or 20000,650,650).
    #[arg(long, value_name = "TG,COT,DIRECT", value_parser = parse_counts)]
    counts: Option<StageCounts>,
    /// Rescale keypoints from W H pixels (embodiment only).
    #[arg(long, num_args = 2, value_names = ["W", "H"])]
    rescale_from: Option<Vec<f64>>,
    /// JSON array of exactly 18 category names (rotation only).
    #[arg(long)]
    categories: Option<PathBuf>,
}

/// Score model transcripts by benchmark, prompting condition and alignment.
///
/// Items JSONL: {"id", "benchmark", "query", "gold", "alignment", "angle_deg"?};
/// benchmark is perspective_taking, isle_bricks_v2, coco_val or threedsr;
/// alignment is aligned, unaligned or n/a.
/// Transcripts JSONL: {"item_id", "condition" (direct|cot), "raw_text"}.
/// Report JSON holds per-benchmark direct/cot cells and their average; the
/// markdown table goes to --table or stdout.
#[derive(Args)]
#[command(verbatim_doc_comment)]
struct EvalArgs {
    /// Benchmark items JSONL.
    #[arg(long)]
    items: PathBuf,
    /// Transcripts JSONL.
    #[arg(long)]
    transcripts: PathBuf,
    /// Report JSON path.
    #[arg(long)]
    report: PathBuf,
    /// Markdown table path (stdout when omitted).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Base-model report JSON; adds per-benchmark deltas (treated avg minus base).
    #[arg(long)]
    baseline: Option<PathBuf>,
}

/// Find feature-selective units in an ACTV1 activation dump.
///
/// ACTV1: "ACTV", then u32 LE version=1, n_stimuli, seq_len, n_units, then
/// f32 LE values row-major (stimulus, position, unit). Sequences are mean-pooled.
/// Meta JSONL, one row per stimulus: {"stimulus_id", "alignment", "angle_deg", "cube_direction"}.
/// Report JSON: selection result and tuning curves; --curves writes CSV
/// series,angle_deg,mean,sem,n_units,n_stimuli.
#[derive(Args)]
#[command(verbatim_doc_comment)]
struct AnalyzeArgs {
    /// ACTV1 activation file.
    #[arg(long)]
    activations: PathBuf,
    /// Stimulus metadata JSONL.
    #[arg(long)]
    meta: PathBuf,
    /// alignment (aligned vs unaligned) or cube_direction (left vs right).
    #[arg(long, default_value = "alignment")]
    contrast: Contrast,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Two-sided significance threshold.
    #[arg(long, default_value_t = probe::DEFAULT_ALPHA)]
    alpha: f64,
    /// Layer label stored in the report.
    #[arg(long, default_value = "unnamed")]
    layer: String,
    /// Tuning-curve CSV path.
    #[arg(long)]
    curves: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected X,Y, got {s:?}"));
    }
    let p = |v: &str| v.parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([p(parts[0])?, p(parts[1])?])
}

fn parse_counts(s: &str) -> Result<StageCounts, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [token_gen, cot, direct] => Ok(StageCounts { token_gen, cot, direct }),
        _ => Err(format!("expected TG,COT,DIRECT, got {s:?}")),
    }
}

fn require_input(path: &Path, class: &'static str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new(class, format!("input file {} not found", path.display())))
    }
}

fn require_output(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::new(
            "IoError",
            format!("output directory {} does not exist", dir.display()),
        )),
        _ => Ok(()),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::new("IoError", format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn load_categories(path: Option<&Path>) -> Result<Vec<String>, CliError> {
    match path {
        None => Ok(DEFAULT_CATEGORIES.map(String::from).to_vec()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::new("IoError", format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::new("ParseError", format!("{}: {e}", p.display())))
        }
    }
}

fn rescale(v: &Option<Vec<f64>>) -> Result<Option<(f64, f64)>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[w, h]) if w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite() => Ok(Some((w, h))),
        Some(_) => Err(CliError::new("RangeError", "--rescale-from needs positive W and H")),
    }
}

fn gen_scenes(args: &GenScenesArgs, seed: u64) -> Result<(), CliError> {
    if let Some(out) = &args.out {
        require_output(out)?;
    }
    let defaults = BenchmarkConfig::default();
    let config = BenchmarkConfig {
        angles_deg: args.angles.clone(),
        placements: if args.placements.is_empty() {
            defaults.placements
        } else {
            args.placements.clone()
        },
        reference_pos: args.reference,
        viewer_pos: args.viewer,
        epsilon: args.epsilon,
        ..defaults
    };
    let scenes = scene::generate_benchmark(&config, seed)?;
    emit(args.out.as_deref(), &jsonl::to_string(&scenes))
}

#[derive(Serialize)]
struct EmbodimentRow {
    image_id: String,
    tokens: Vec<String>,
    theta_deg: f64,
    yaw_bin: u8,
    alignment: Alignment,
}

fn encode_embodiment(args: &EncodeEmbodimentArgs) -> Result<(), CliError> {
    require_input(&args.input, "MissingInputError")?;
    if let Some(out) = &args.out {
        require_output(out)?;
    }
    let rescale = rescale(&args.rescale_from)?;
    let records: Vec<KeypointRecord> = jsonl::read(&args.input)?;
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        let at = |e: embodiment::EmbodimentError| {
            let mut err = CliError::from(e);
            err.message = format!("{}: {}", r.image_id, err.message);
            err
        };
        let kp = r.to_keypoints(rescale).map_err(at)?;
        let seq = embodiment::encode_embodiment(&kp, args.source).map_err(at)?;
        let yaw = embodiment::torso_yaw(&kp).map_err(at)?;
        rows.push(EmbodimentRow {
            image_id: r.image_id.clone(),
            tokens: seq.tokens,
            theta_deg: yaw.theta_deg,
            yaw_bin: yaw.k,
            alignment: if yaw.is_aligned() {
                Alignment::Aligned
            } else {
                Alignment::Unaligned
            },
        });
    }
    emit(args.out.as_deref(), &jsonl::to_string(&rows))
}

#[derive(Serialize)]
struct RotationRow {
    image_id: String,
    tokens: Vec<String>,
}

fn encode_rotation(args: &EncodeRotationArgs) -> Result<(), CliError> {
    require_input(&args.input, "MissingInputError")?;
    if let Some(c) = &args.categories {
        require_input(c, "MissingInputError")?;
    }
    if let Some(out) = &args.out {
        require_output(out)?;
    }
    let categories = CategorySet::new(load_categories(args.categories.as_deref())?)?;
    let scenes: Vec<SceneAnnotation> = jsonl::read(&args.input)?;
    let mut rows = Vec::with_capacity(scenes.len());
    for s in &scenes {
        let seq = rotation::encode_rotation(&s.objects, &categories).map_err(|e| {
            let mut err = CliError::from(e);
            err.message = format!("{}: {}", s.image_id, err.message);
            err
        })?;
        rows.push(RotationRow {
            image_id: s.image_id.clone(),
            tokens: seq.tokens,
        });
    }
    emit(args.out.as_deref(), &jsonl::to_string(&rows))
}

fn build_vocab(args: &BuildVocabArgs) -> Result<(), CliError> {
    if let Some(c) = &args.categories {
        require_input(c, "MissingInputError")?;
        if args.variant != VocabVariant::Rotation {
            return Err(CliError::new(
                "VariantError",
                "--categories applies to the rotation vocabulary only",
            ));
        }
    }
    require_output(&args.out)?;
    let categories = load_categories(args.categories.as_deref())?;
    let vocab = TokenVocab::build_with(args.variant, args.base_offset, &categories)?;
    emit(Some(&args.out), &vocab.to_json())
}

fn gen_curriculum(args: &GenCurriculumArgs, seed: u64) -> Result<(), CliError> {
    require_input(&args.annotations, "MissingInputError")?;
    if let Some(c) = &args.categories {
        require_input(c, "MissingInputError")?;
    }
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| args.out.with_extension("manifest.json"));
    require_output(&args.out)?;
    require_output(&manifest_path)?;
    let family = TokenFamily::from(args.variant);
    let pool = match family {
        TokenFamily::Embodiment => {
            if args.categories.is_some() {
                return Err(CliError::new(
                    "VariantError",
                    "--categories applies to the rotation variant only",
                ));
            }
            let rescale = rescale(&args.rescale_from)?;
            let source = if args.variant == VocabVariant::EmbVitpose {
                PoseSource::Vitpose
            } else {
                PoseSource::Coco
            };
            let records: Vec<KeypointRecord> = jsonl::read(&args.annotations)?;
            let mut items = Vec::with_capacity(records.len());
            for r in records {
                let kp = r.to_keypoints(rescale).map_err(|e| {
                    let mut err = CliError::from(e);
                    err.message = format!("{}: {}", r.image_id, err.message);
                    err
                })?;
                items.push((r.image_id, kp));
            }
            AnnotationPool::Embodiment { source, items }
        }
        TokenFamily::Rotation => {
            if args.rescale_from.is_some() {
                return Err(CliError::new(
                    "VariantError",
                    "--rescale-from applies to embodiment variants only",
                ));
            }
            AnnotationPool::Rotation {
                categories: CategorySet::new(load_categories(args.categories.as_deref())?)?,
                items: jsonl::read(&args.annotations)?,
            }
        }
    };
    let mut config = CurriculumConfig::for_family(family);
    if let Some(c) = args.counts {
        config.counts = c;
    }
    config.epochs = args.epochs;
    config.epoch_size = args.epoch_size;
    config.cot_share_pct = args.cot_share;
    let corpus = curriculum::emit_corpus(args.variant, &pool, &config, seed)?;
    emit(Some(&args.out), &corpus.to_jsonl())?;
    emit(Some(&manifest_path), &corpus.manifest_json())
}

#[derive(Serialize)]
struct EvalReport {
    #[serde(flatten)]
    scores: ScoreReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    improvement: Option<BTreeMap<evalharness::Benchmark, evalharness::Deltas>>,
}

fn eval(args: &EvalArgs) -> Result<(), CliError> {
    require_input(&args.items, "MissingItemError")?;
    require_input(&args.transcripts, "MissingItemError")?;
    if let Some(b) = &args.baseline {
        require_input(b, "MissingItemError")?;
    }
    require_output(&args.report)?;
    if let Some(t) = &args.table {
        require_output(t)?;
    }
    let items: Vec<BenchmarkItem> = jsonl::read(&args.items)?;
    let transcripts: Vec<Transcript> = jsonl::read(&args.transcripts)?;
    let scores = evalharness::score(&items, &transcripts)?;
    let improvement = match &args.baseline {
        Some(b) => {
            let text =
                std::fs::read_to_string(b).map_err(|e| CliError::new("IoError", format!("{}: {e}", b.display())))?;
            let base: ScoreReport = serde_json::from_str(&text)
                .map_err(|e| CliError::new("ParseError", format!("{}: {e}", b.display())))?;
            Some(evalharness::improvement(&base, &scores)?)
        }
        None => None,
    };
    let table = evalharness::markdown_table(&scores);
    emit(Some(&args.report), &pretty(&EvalReport { scores, improvement })?)?;
    emit(args.table.as_deref(), &table)
}

fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    require_input(&args.activations, "MissingInputError")?;
    require_input(&args.meta, "MissingInputError")?;
    require_output(&args.out)?;
    if let Some(c) = &args.curves {
        require_output(c)?;
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::new(
            "RangeError",
            format!("alpha {} outside (0, 1)", args.alpha),
        ));
    }
    let raw = RawActivations::read(&args.activations)?;
    let meta: Vec<StimulusMeta> = jsonl::read(&args.meta)?;
    let m = probe::pool_sequence(&raw, &args.layer, meta)?;
    let report = probe::analyze(&m, args.contrast, args.alpha)?;
    emit(Some(&args.out), &pretty(&report)?)?;
    if let Some(c) = &args.curves {
        emit(Some(c), &probe::tuning_csv(&report))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::GenScenes(a) => gen_scenes(a, cli.seed),
        Command::EncodeEmbodiment(a) => encode_embodiment(a),
        Command::EncodeRotation(a) => encode_rotation(a),
        Command::BuildVocab(a) => build_vocab(a),
        Command::GenCurriculum(a) => gen_curriculum(a, cli.seed),
        Command::Eval(a) => eval(a),
        Command::Analyze(a) => analyze(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
