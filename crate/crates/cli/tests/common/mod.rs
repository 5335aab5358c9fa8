//! Fixture builders shared by the CLI and acceptance suites.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpt_core::actv::RawActivations;
use vpt_core::embodiment::KeypointRecord;
use vpt_core::evalharness::{Benchmark, BenchmarkItem, Condition, ItemAlignment, Transcript};
use vpt_core::jsonl;
use vpt_core::probe::StimulusMeta;
use vpt_core::rotation::{ObjectAnnotation, SceneAnnotation};
use vpt_core::scene::{self, Alignment, BenchmarkConfig, Side};

pub fn vpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpt"))
        .args(args)
        .env_remove("VPT_SEED")
        .output()
        .expect("spawn vpt")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Standard normal draw (Box-Muller).
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn keypoint_records(n: usize, seed: u64, with_confidences: bool) -> Vec<KeypointRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pt = |rng: &mut ChaCha8Rng, ys: std::ops::Range<u32>| {
        [f64::from(rng.gen_range(40..296u32)), f64::from(rng.gen_range(ys))]
    };
    (0..n)
        .map(|i| {
            let (r, l) = loop {
                let r = pt(&mut rng, 30..150);
                let l = pt(&mut rng, 30..150);
                if r != l {
                    break (r, l);
                }
            };
            KeypointRecord {
                image_id: format!("img{i:05}"),
                r_shoulder: r,
                l_shoulder: l,
                r_hip: pt(&mut rng, 170..320),
                l_hip: pt(&mut rng, 170..320),
                confidences: with_confidences.then(|| (0..4).map(|_| rng.gen_range(0.0..=1.0)).collect()),
            }
        })
        .collect()
}

pub fn rotation_scenes(n: usize, seed: u64) -> Vec<SceneAnnotation> {
    let cats = ["person", "animal", "furniture", "vehicle", "toy", "plant"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let k = rng.gen_range(2..5);
            let objects = (0..k)
                .map(|j| {
                    let x = rng.gen_range(0..270u32);
                    let y = rng.gen_range(0..270u32);
                    ObjectAnnotation {
                        category: cats[rng.gen_range(0..cats.len())].to_string(),
                        bbox: [
                            f64::from(x),
                            f64::from(y),
                            f64::from(x + rng.gen_range(8..65)),
                            f64::from(y + rng.gen_range(8..65)),
                        ],
                        azimuth_deg: rng.gen_range(0.0..360.0),
                        is_reference: j == 0,
                    }
                })
                .collect();
            SceneAnnotation {
                image_id: format!("rot{i:05}"),
                objects,
            }
        })
        .collect()
}

/// Twenty perspective-taking items, ten per alignment condition.
pub fn perspective_items() -> Vec<BenchmarkItem> {
    let config = BenchmarkConfig {
        angles_deg: vec![0.0, 30.0, 60.0, 330.0, 345.0, 90.0, 135.0, 180.0, 225.0, 270.0],
        ..BenchmarkConfig::default()
    };
    let scenes = scene::generate_benchmark(&config, 5).expect("valid config");
    scenes
        .iter()
        .map(|s| BenchmarkItem {
            id: s.id.clone(),
            benchmark: Benchmark::PerspectiveTaking,
            query: format!(
                "From the avatar's perspective, is the {} on its left or right?",
                s.query.target
            ),
            gold: s.gold_reference,
            alignment: match s.alignment {
                Alignment::Aligned => ItemAlignment::Aligned,
                Alignment::Unaligned => ItemAlignment::Unaligned,
            },
            angle_deg: Some(s.reference_yaw_deg),
        })
        .collect()
}

/// Transcripts answering `correct(item)` sides; wrong answers name the other side.
pub fn transcripts_for(
    items: &[BenchmarkItem],
    condition: Condition,
    mut correct: impl FnMut(usize, &BenchmarkItem) -> bool,
) -> Vec<Transcript> {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let side: Side = if correct(i, item) { item.gold } else { item.gold.flip() };
            let raw_text = match condition {
                Condition::Direct => format!("The object is on the {side}."),
                Condition::Cot => format!("Let me rotate into the avatar's frame.\nAnswer: {side}"),
            };
            Transcript {
                item_id: item.id.clone(),
                condition,
                raw_text,
            }
        })
        .collect()
}

pub struct ActvFixture {
    pub raw: RawActivations,
    pub meta: Vec<StimulusMeta>,
}

/// 48 stimuli over 12 angles, 3 positions, 40 units; unit 0 prefers unaligned.
pub fn actv_fixture(seed: u64) -> ActvFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (seq_len, n_units) = (3, 40);
    let mut meta = Vec::new();
    let mut data = Vec::new();
    for s in 0..48usize {
        let angle = (s % 12) as f64 * 30.0;
        let alignment = Alignment::from_yaw(angle);
        meta.push(StimulusMeta {
            stimulus_id: format!("stim{s:03}"),
            alignment,
            angle_deg: angle,
            cube_direction: if s % 2 == 0 { Side::Left } else { Side::Right },
        });
        for _ in 0..seq_len {
            for u in 0..n_units {
                let shift = if u == 0 && alignment == Alignment::Unaligned {
                    3.0
                } else {
                    0.0
                };
                data.push((normal(&mut rng) + shift) as f32);
            }
        }
    }
    ActvFixture {
        raw: RawActivations::new(48, seq_len, n_units, data).expect("shape"),
        meta,
    }
}

/// Write every input the CLI subcommands need into `dir`.
pub struct CliInputs {
    pub keypoints: PathBuf,
    pub vitpose: PathBuf,
    pub rotation: PathBuf,
    pub items: PathBuf,
    pub transcripts: PathBuf,
    pub actv: PathBuf,
    pub meta: PathBuf,
}

pub fn write_cli_inputs(dir: &Path) -> CliInputs {
    let inputs = CliInputs {
        keypoints: dir.join("kp.jsonl"),
        vitpose: dir.join("kp_vitpose.jsonl"),
        rotation: dir.join("objects.jsonl"),
        items: dir.join("items.jsonl"),
        transcripts: dir.join("transcripts.jsonl"),
        actv: dir.join("acts.actv"),
        meta: dir.join("meta.jsonl"),
    };
    jsonl::write(&inputs.keypoints, &keypoint_records(300, 1, false)).unwrap();
    jsonl::write(&inputs.vitpose, &keypoint_records(300, 2, true)).unwrap();
    jsonl::write(&inputs.rotation, &rotation_scenes(300, 3)).unwrap();
    let items = perspective_items();
    let mut transcripts = transcripts_for(&items, Condition::Direct, |_, it| {
        it.alignment == ItemAlignment::Aligned
    });
    transcripts.extend(transcripts_for(&items, Condition::Cot, |i, _| i % 10 != 3));
    jsonl::write(&inputs.items, &items).unwrap();
    jsonl::write(&inputs.transcripts, &transcripts).unwrap();
    let fx = actv_fixture(4);
    fx.raw.write(&inputs.actv).unwrap();
    jsonl::write(&inputs.meta, &fx.meta).unwrap();
    inputs
}
