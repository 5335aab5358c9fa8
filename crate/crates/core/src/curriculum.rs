//! Annealed curriculum corpora: token generation, chain-of-thought and
//! direct-answer examples, plus a per-epoch mixing manifest.
//!
//! Epoch `e` (0-based, 10 epochs) draws `1 - 0.1e` of its examples from
//! token generation and splits the rest between CoT and direct answers
//! (evenly by default). Counts are apportioned by largest remainder so every
//! epoch sums exactly to its size.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embodiment::{self, EmbodimentError, Keypoints, PoseSource};
use crate::rotation::{self, CategorySet, RotationError, SceneAnnotation};
use crate::scene::{self, normalize_degrees, Alignment, Side};
use crate::vocab::{az_token, x_token, y_token, yaw_token, VocabVariant};

pub const EPOCHS: u32 = 10;
pub const TEMPLATE_VERSION: &str = "vpt-curriculum-v1";

/// Viewer position in the reference-centered world frame used for gold answers.
pub const VIEWER_POS: [f64; 2] = [0.0, -1000.0];

const QUERY_OBJECTS: [&str; 2] = ["cube", "sphere"];
/// Minimum horizontal pixel offset between a synthesized object and the person.
const MIN_LATERAL_PX: f64 = 8.0;
/// Synthesized objects stay at least this many degrees off the facing axis.
const MIN_AXIS_ANGLE_DEG: f64 = 5.0;

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("epoch {0} outside [0, {max}]", max = EPOCHS - 1)]
    Range(u32),
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error("cot share must be a percentage in [0, 100], got {0}")]
    Share(u32),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("cannot derive a gold answer: {0}")]
    Template(String),
    #[error("annotation {image_id}: {source}")]
    Embodiment {
        image_id: String,
        #[source]
        source: EmbodimentError,
    },
    #[error("annotation {image_id}: {source}")]
    Rotation {
        image_id: String,
        #[source]
        source: RotationError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenFamily {
    Embodiment,
    Rotation,
}

impl From<VocabVariant> for TokenFamily {
    fn from(v: VocabVariant) -> Self {
        match v {
            VocabVariant::EmbCoco | VocabVariant::EmbVitpose => TokenFamily::Embodiment,
            VocabVariant::Rotation => TokenFamily::Rotation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    TokenGen,
    Cot,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub token_gen: usize,
    pub cot: usize,
    pub direct: usize,
}

impl StageCounts {
    pub fn total(&self) -> usize {
        self.token_gen + self.cot + self.direct
    }

    fn get(&self, stage: Stage) -> usize {
        match stage {
            Stage::TokenGen => self.token_gen,
            Stage::Cot => self.cot,
            Stage::Direct => self.direct,
        }
    }
}

pub fn corpus_counts(family: TokenFamily) -> StageCounts {
    match family {
        TokenFamily::Embodiment => StageCounts {
            token_gen: 18_000,
            cot: 200,
            direct: 200,
        },
        TokenFamily::Rotation => StageCounts {
            token_gen: 20_000,
            cot: 650,
            direct: 650,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochPlan {
    pub epoch: u32,
    pub p_token_gen: f64,
    pub p_cot: f64,
    pub p_direct: f64,
}

/// Stage weights in thousandths: token-gen tenths times 100, the rest split by percent.
fn epoch_weights(epoch: u32, cot_share_pct: u32) -> Result<[u64; 3], CurriculumError> {
    if epoch >= EPOCHS {
        return Err(CurriculumError::Range(epoch));
    }
    if cot_share_pct > 100 {
        return Err(CurriculumError::Share(cot_share_pct));
    }
    let e = u64::from(epoch);
    let s = u64::from(cot_share_pct);
    Ok([(10 - e) * 100, e * s, e * (100 - s)])
}

pub fn epoch_plan(epoch: u32, cot_share_pct: u32) -> Result<EpochPlan, CurriculumError> {
    let w = epoch_weights(epoch, cot_share_pct)?;
    Ok(EpochPlan {
        epoch,
        p_token_gen: w[0] as f64 / 1000.0,
        p_cot: w[1] as f64 / 1000.0,
        p_direct: w[2] as f64 / 1000.0,
    })
}

/// Largest-remainder apportionment of `total` over integer weights.
/// Ties go to the earlier weight.
pub fn largest_remainder(weights: &[u64], total: usize) -> Vec<usize> {
    let denom: u64 = weights.iter().sum();
    assert!(denom > 0, "weights must not all be zero");
    let total = total as u64;
    let mut counts: Vec<u64> = weights.iter().map(|w| total * w / denom).collect();
    let mut rems: Vec<(u64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| (total * w % denom, i))
        .collect();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: u64 = counts.iter().sum();
    for &(_, i) in rems.iter().take((total - assigned) as usize) {
        counts[i] += 1;
    }
    counts.into_iter().map(|c| c as usize).collect()
}

/// Stage counts for one epoch batch with an even CoT/direct split.
pub fn epoch_mix(epoch: u32, batch_size: usize) -> Result<StageCounts, CurriculumError> {
    epoch_mix_with(epoch, batch_size, 50)
}

pub fn epoch_mix_with(epoch: u32, batch_size: usize, cot_share_pct: u32) -> Result<StageCounts, CurriculumError> {
    if batch_size == 0 {
        return Err(CurriculumError::EmptyBatch);
    }
    let c = largest_remainder(&epoch_weights(epoch, cot_share_pct)?, batch_size);
    Ok(StageCounts {
        token_gen: c[0],
        cot: c[1],
        direct: c[2],
    })
}

/// Geometry behind a reasoning example's gold answer, in a reference-centered
/// top-down frame (reference at the origin, viewer at [`VIEWER_POS`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryGeometry {
    pub target: String,
    pub reference_yaw_deg: f64,
    pub object_pos: [f64; 2],
    pub viewer_answer: Side,
    pub answer: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumExample {
    pub id: String,
    pub stage: Stage,
    pub prompt: String,
    pub response: String,
    pub token_sequence: Vec<String>,
    pub source_image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<QueryGeometry>,
}

/// Validated annotations for one token family.
#[derive(Debug, Clone)]
pub enum AnnotationPool {
    Embodiment {
        source: PoseSource,
        items: Vec<(String, Keypoints)>,
    },
    Rotation {
        categories: CategorySet,
        items: Vec<SceneAnnotation>,
    },
}

impl AnnotationPool {
    pub fn len(&self) -> usize {
        match self {
            AnnotationPool::Embodiment { items, .. } => items.len(),
            AnnotationPool::Rotation { items, .. } => items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn family(&self) -> TokenFamily {
        match self {
            AnnotationPool::Embodiment { .. } => TokenFamily::Embodiment,
            AnnotationPool::Rotation { .. } => TokenFamily::Rotation,
        }
    }

    fn image_id(&self, i: usize) -> &str {
        match self {
            AnnotationPool::Embodiment { items, .. } => &items[i].0,
            AnnotationPool::Rotation { items, .. } => &items[i].image_id,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurriculumConfig {
    pub counts: StageCounts,
    pub epochs: u32,
    /// Examples per epoch; defaults to the corpus size.
    pub epoch_size: Option<usize>,
    /// Percentage of the non-token-gen share that goes to CoT.
    pub cot_share_pct: u32,
}

impl CurriculumConfig {
    pub fn for_family(family: TokenFamily) -> Self {
        Self {
            counts: corpus_counts(family),
            epochs: EPOCHS,
            epoch_size: None,
            cot_share_pct: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingInfo {
    pub pool_size: usize,
    pub token_gen_with_replacement: bool,
    pub reasoning_with_replacement: bool,
    /// Sampled annotations with no usable left/right query (skipped for reasoning).
    pub skipped_degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochEntry {
    #[serde(flatten)]
    pub plan: EpochPlan,
    pub realized: StageCounts,
    /// Some stage needed more examples than it has and was re-sampled.
    pub resampled: bool,
    pub example_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub variant: VocabVariant,
    pub seed: u64,
    pub template_version: String,
    pub counts: StageCounts,
    pub sampling: SamplingInfo,
    pub epoch_size: usize,
    pub cot_share_pct: u32,
    pub epochs: Vec<EpochEntry>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub examples: Vec<CurriculumExample>,
    pub manifest: Manifest,
}

impl Corpus {
    pub fn to_jsonl(&self) -> String {
        crate::jsonl::to_string(&self.examples)
    }

    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Draw `k` indices from `0..n`: a shuffled prefix when `k <= n`, otherwise
/// repeated shuffled passes. Returns whether items repeat.
fn draw(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (Vec<usize>, bool) {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut pass: Vec<usize> = (0..n).collect();
        pass.shuffle(rng);
        out.extend(pass.into_iter().take(k - out.len()));
    }
    (out, k > n)
}

struct Reasoning {
    intro: String,
    question: String,
    cot_lines: Vec<String>,
    tokens: Vec<String>,
    geometry: QueryGeometry,
}

fn alignment_word(yaw_deg: f64) -> &'static str {
    Alignment::from_yaw(yaw_deg).as_str()
}

fn side_relation(viewer: Side, answer: Side) -> &'static str {
    if viewer == answer {
        "keeps"
    } else {
        "flips"
    }
}

/// Sine of the angle between the facing axis and the object direction.
fn axis_sine(yaw_deg: f64, d: [f64; 2]) -> f64 {
    let f = scene::facing_vector(yaw_deg);
    (f[0] * d[1] - f[1] * d[0]).abs() / d[0].hypot(d[1])
}

fn embodiment_reasoning(
    rng: &mut ChaCha8Rng,
    image_id: &str,
    kp: &Keypoints,
    source: PoseSource,
) -> Result<Reasoning, CurriculumError> {
    let wrap = |source| CurriculumError::Embodiment {
        image_id: image_id.to_string(),
        source,
    };
    let seq = embodiment::encode_embodiment(kp, source).map_err(wrap)?;
    let yaw = embodiment::torso_yaw(kp).map_err(wrap)?;
    // image yaw is counter-clockwise; world yaw turns clockwise from "facing away"
    let world_yaw = normalize_degrees(360.0 - yaw.theta_deg);
    let pts = kp.points();
    let cx = pts.iter().map(|p| f64::from(p[0])).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| f64::from(p[1])).sum::<f64>() / 4.0;
    let target = QUERY_OBJECTS[rng.gen_range(0..QUERY_OBJECTS.len())];
    let min_sine = MIN_AXIS_ANGLE_DEG.to_radians().sin();
    for _ in 0..1000 {
        let ox: u32 = rng.gen_range(0..=crate::MAX_PIXEL);
        let oy: u32 = rng.gen_range(0..=crate::MAX_PIXEL);
        let d = [f64::from(ox) - cx, cy - f64::from(oy)];
        if d[0].abs() < MIN_LATERAL_PX || d[0].hypot(d[1]) < 2.0 * MIN_LATERAL_PX || axis_sine(world_yaw, d) < min_sine
        {
            continue;
        }
        let viewer_answer =
            scene::judge_side(VIEWER_POS, 0.0, d).map_err(|e| CurriculumError::Template(e.to_string()))?;
        let answer =
            scene::judge_side([0.0, 0.0], world_yaw, d).map_err(|e| CurriculumError::Template(e.to_string()))?;
        let at = format!("{} {}", x_token(ox), y_token(oy));
        let joined = seq.tokens.join(" ");
        return Ok(Reasoning {
            intro: format!("The {target} is at {at}."),
            question: format!("From the person's perspective, is the {target} on their left or right?"),
            cot_lines: vec![
                format!("Keypoints and orientation: {joined}"),
                format!(
                    "The torso yaw is {}, which is {} with my viewpoint.",
                    yaw_token(yaw.k),
                    alignment_word(world_yaw)
                ),
                format!("From my viewpoint the {target} at {at} is on the {viewer_answer}."),
                format!(
                    "Taking the person's viewpoint {} the side.",
                    side_relation(viewer_answer, answer)
                ),
            ],
            tokens: seq.tokens,
            geometry: QueryGeometry {
                target: target.to_string(),
                reference_yaw_deg: world_yaw,
                object_pos: d,
                viewer_answer,
                answer,
            },
        });
    }
    Err(CurriculumError::Template(format!(
        "{image_id}: no off-axis object placement found"
    )))
}

/// Rotation scenes use an existing query object; `None` when every candidate is degenerate.
fn rotation_reasoning(
    rng: &mut ChaCha8Rng,
    ann: &SceneAnnotation,
    categories: &CategorySet,
) -> Result<Option<Reasoning>, CurriculumError> {
    let wrap = |source| CurriculumError::Rotation {
        image_id: ann.image_id.clone(),
        source,
    };
    let seq = rotation::encode_rotation(&ann.objects, categories).map_err(wrap)?;
    let ordered = rotation::canonical_order(&ann.objects).map_err(wrap)?;
    let reference = ordered[0];
    let ref_center = rotation::bbox_center(reference.bbox).map_err(wrap)?;
    let yaw = normalize_degrees(reference.azimuth_deg);
    let min_sine = MIN_AXIS_ANGLE_DEG.to_radians().sin();

    let mut candidates = Vec::new();
    for o in &ordered[1..] {
        let c = rotation::bbox_center(o.bbox).map_err(wrap)?;
        let d = [
            f64::from(c[0]) - f64::from(ref_center[0]),
            f64::from(ref_center[1]) - f64::from(c[1]),
        ];
        if d[0] == 0.0 || axis_sine(yaw, d) < min_sine {
            continue;
        }
        candidates.push((o, c, d));
    }
    if candidates.is_empty() {
        return Ok(None);
    }
    let (o, c, d) = candidates[rng.gen_range(0..candidates.len())];
    let viewer_answer = scene::judge_side(VIEWER_POS, 0.0, d).map_err(|e| CurriculumError::Template(e.to_string()))?;
    let answer = scene::judge_side([0.0, 0.0], yaw, d).map_err(|e| CurriculumError::Template(e.to_string()))?;
    let at = format!("{} {}", x_token(c[0]), y_token(c[1]));
    let target = format!("{} at {at}", o.category);
    let joined = seq.tokens.join(" ");
    Ok(Some(Reasoning {
        intro: format!("The reference is the {}.", reference.category),
        question: format!(
            "From the {}'s perspective, is the {target} on its left or right?",
            reference.category
        ),
        cot_lines: vec![
            format!("Objects: {joined}"),
            format!(
                "The reference faces {}, which is {} with my viewpoint.",
                az_token(rotation::azimuth_bin(yaw)),
                alignment_word(yaw)
            ),
            format!("From my viewpoint the {target} is on the {viewer_answer}."),
            format!(
                "Taking the {}'s viewpoint {} the side.",
                reference.category,
                side_relation(viewer_answer, answer)
            ),
        ],
        tokens: seq.tokens,
        geometry: QueryGeometry {
            target,
            reference_yaw_deg: yaw,
            object_pos: d,
            viewer_answer,
            answer,
        },
    }))
}

fn token_gen_example(
    pool: &AnnotationPool,
    i: usize,
    n: usize,
    prefix: &str,
) -> Result<CurriculumExample, CurriculumError> {
    let (prompt, tokens) = match pool {
        AnnotationPool::Embodiment { source, items } => {
            let (image_id, kp) = &items[i];
            let seq = embodiment::encode_embodiment(kp, *source).map_err(|source| CurriculumError::Embodiment {
                image_id: image_id.clone(),
                source,
            })?;
            (
                "<image>\nLocate the person's right and left shoulders and hips, then give their torso width and yaw as embodiment tokens.",
                seq.tokens,
            )
        }
        AnnotationPool::Rotation { categories, items } => {
            let ann = &items[i];
            let seq =
                rotation::encode_rotation(&ann.objects, categories).map_err(|source| CurriculumError::Rotation {
                    image_id: ann.image_id.clone(),
                    source,
                })?;
            (
                "<image>\nList the reference object first, then every other object, as rotation tokens with category, center and azimuth.",
                seq.tokens,
            )
        }
    };
    Ok(CurriculumExample {
        id: format!("{prefix}-tg-{n:05}"),
        stage: Stage::TokenGen,
        prompt: prompt.to_string(),
        response: tokens.join(" "),
        token_sequence: tokens,
        source_image_id: pool.image_id(i).to_string(),
        query: None,
    })
}

/// Build the corpus and its epoch manifest. Output depends only on the inputs and `seed`.
pub fn emit_corpus(
    variant: VocabVariant,
    pool: &AnnotationPool,
    config: &CurriculumConfig,
    seed: u64,
) -> Result<Corpus, CurriculumError> {
    if TokenFamily::from(variant) != pool.family() {
        return Err(CurriculumError::InsufficientData(format!(
            "{} corpus needs {:?} annotations",
            variant.as_str(),
            TokenFamily::from(variant)
        )));
    }
    if let AnnotationPool::Embodiment { source, .. } = pool {
        let expected = if variant == VocabVariant::EmbVitpose {
            PoseSource::Vitpose
        } else {
            PoseSource::Coco
        };
        if *source != expected {
            return Err(CurriculumError::InsufficientData(format!(
                "{} corpus needs {expected:?} keypoints",
                variant.as_str()
            )));
        }
    }
    if config.epochs == 0 || config.epochs > EPOCHS {
        return Err(CurriculumError::Range(config.epochs));
    }
    if pool.is_empty() {
        return Err(CurriculumError::InsufficientData("annotation pool is empty".into()));
    }
    let counts = config.counts;
    if counts.token_gen == 0 && counts.cot + counts.direct > 0 {
        return Err(CurriculumError::InsufficientData(
            "reasoning examples are drawn from token-generation images, which has none".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefix = variant.as_str();
    let (tg_indices, tg_repeat) = draw(&mut rng, pool.len(), counts.token_gen);
    let mut examples = Vec::with_capacity(counts.total());
    for (n, &i) in tg_indices.iter().enumerate() {
        examples.push(token_gen_example(pool, i, n, prefix)?);
    }

    // Reasoning scenes come from the token-generation images; each scene
    // yields a CoT example and a direct example with the same gold answer.
    let n_scenes = counts.cot.max(counts.direct);
    let mut distinct: Vec<usize> = tg_indices.clone();
    distinct.sort_unstable();
    distinct.dedup();
    distinct.shuffle(&mut rng);
    let mut scenes = Vec::with_capacity(n_scenes);
    let mut skipped = 0usize;
    let mut reasoning_repeat = false;
    let mut cursor = 0usize;
    let mut eligible_seen = 0usize;
    while scenes.len() < n_scenes {
        if cursor == distinct.len() {
            if eligible_seen == 0 {
                return Err(CurriculumError::Template(
                    "no sampled annotation has an off-axis query object".into(),
                ));
            }
            // reuse images with fresh query draws
            cursor = 0;
            eligible_seen = 0;
            reasoning_repeat = true;
            distinct.shuffle(&mut rng);
        }
        let i = distinct[cursor];
        cursor += 1;
        let r = match pool {
            AnnotationPool::Embodiment { source, items } => {
                Some(embodiment_reasoning(&mut rng, &items[i].0, &items[i].1, *source)?)
            }
            AnnotationPool::Rotation { categories, items } => rotation_reasoning(&mut rng, &items[i], categories)?,
        };
        match r {
            Some(r) => {
                eligible_seen += 1;
                scenes.push((i, r));
            }
            None => {
                if !reasoning_repeat {
                    skipped += 1;
                }
            }
        }
    }

    for (n, (i, r)) in scenes.iter().enumerate() {
        let image_id = pool.image_id(*i).to_string();
        if n < counts.cot {
            let mut response = r.cot_lines.join("\n");
            response.push_str(&format!("\nAnswer: {}", r.geometry.answer));
            examples.push(CurriculumExample {
                id: format!("{prefix}-cot-{n:05}"),
                stage: Stage::Cot,
                prompt: format!(
                    "<image>\n{} {} Reason step by step, then give the answer.",
                    r.intro, r.question
                ),
                response,
                token_sequence: r.tokens.clone(),
                source_image_id: image_id.clone(),
                query: Some(r.geometry.clone()),
            });
        }
        if n < counts.direct {
            examples.push(CurriculumExample {
                id: format!("{prefix}-direct-{n:05}"),
                stage: Stage::Direct,
                prompt: format!("<image>\n{} {} Answer with left or right.", r.intro, r.question),
                response: r.geometry.answer.to_string(),
                token_sequence: Vec::new(),
                source_image_id: image_id,
                query: Some(r.geometry.clone()),
            });
        }
    }
    examples.sort_by(|a, b| a.id.cmp(&b.id));

    let epoch_size = config.epoch_size.unwrap_or(counts.total());
    let ids_by_stage = |stage: Stage| -> Vec<&str> {
        examples
            .iter()
            .filter(|e| e.stage == stage)
            .map(|e| e.id.as_str())
            .collect()
    };
    let pools = [
        ids_by_stage(Stage::TokenGen),
        ids_by_stage(Stage::Cot),
        ids_by_stage(Stage::Direct),
    ];
    let mut epochs = Vec::with_capacity(config.epochs as usize);
    for epoch in 0..config.epochs {
        let plan = epoch_plan(epoch, config.cot_share_pct)?;
        let realized = if epoch_size == 0 {
            StageCounts {
                token_gen: 0,
                cot: 0,
                direct: 0,
            }
        } else {
            epoch_mix_with(epoch, epoch_size, config.cot_share_pct)?
        };
        let mut ids = Vec::with_capacity(epoch_size);
        let mut resampled = false;
        for (stage, ids_pool) in [Stage::TokenGen, Stage::Cot, Stage::Direct].into_iter().zip(&pools) {
            let k = realized.get(stage);
            if k == 0 {
                continue;
            }
            if ids_pool.is_empty() {
                return Err(CurriculumError::InsufficientData(format!(
                    "epoch {epoch} needs {k} {stage:?} examples but the corpus has none"
                )));
            }
            let (picked, repeat) = draw(&mut rng, ids_pool.len(), k);
            resampled |= repeat;
            ids.extend(picked.into_iter().map(|j| ids_pool[j].to_string()));
        }
        ids.shuffle(&mut rng);
        epochs.push(EpochEntry {
            plan,
            realized,
            resampled,
            example_ids: ids,
        });
    }

    Ok(Corpus {
        manifest: Manifest {
            variant,
            seed,
            template_version: TEMPLATE_VERSION.to_string(),
            counts,
            sampling: SamplingInfo {
                pool_size: pool.len(),
                token_gen_with_replacement: tg_repeat,
                reasoning_with_replacement: reasoning_repeat,
                skipped_degenerate: skipped,
            },
            epoch_size,
            cot_share_pct: config.cot_share_pct,
            epochs,
        },
        examples,
    })
}

/// Final answer of a CoT response: the side named on its last line.
pub fn cot_final_answer(response: &str) -> Option<Side> {
    let last = response.lines().last()?.trim();
    match last.strip_prefix("Answer: ")? {
        "left" => Some(Side::Left),
        "right" => Some(Side::Right),
        _ => None,
    }
}
