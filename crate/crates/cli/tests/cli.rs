mod common;

use std::fs;
use std::process::Command;

use common::{path_str, vpt, write_cli_inputs};
use serde_json::Value;

const SUBCOMMANDS: [&str; 7] = [
    "gen-scenes",
    "encode-embodiment",
    "encode-rotation",
    "build-vocab",
    "gen-curriculum",
    "eval",
    "analyze",
];

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn build_vocab_writes_692_entries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let r = vpt(&["build-vocab", "--variant", "emb_coco", "--out", path_str(&out)]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 692);
    assert_eq!(v["variant"], "emb_coco");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let r = vpt(&["frobnicate"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("Usage"));
}

#[test]
fn bad_flag_value_is_usage_error() {
    let r = vpt(&["build-vocab", "--variant", "emb_nope", "--out", "x.json"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn eval_missing_transcripts_names_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_cli_inputs(dir.path());
    let missing = dir.path().join("absent.jsonl");
    let report = dir.path().join("report.json");
    let r = vpt(&[
        "eval",
        "--items",
        path_str(&inputs.items),
        "--transcripts",
        path_str(&missing),
        "--report",
        path_str(&report),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).starts_with("error[MissingItemError]"), "{}", stderr(&r));
    assert!(!report.exists());
}

#[test]
fn every_subcommand_help_documents_flags() {
    for sub in SUBCOMMANDS {
        let r = vpt(&[sub, "--help"]);
        assert_eq!(r.status.code(), Some(0), "{sub}");
        let text = String::from_utf8_lossy(&r.stdout);
        assert!(text.contains("--seed"), "{sub} help lacks --seed");
        assert!(
            text.contains("JSON") || text.contains("ACTV1"),
            "{sub} help lacks a format description"
        );
    }
    let eval = String::from_utf8_lossy(&vpt(&["eval", "--help"]).stdout).into_owned();
    for flag in ["--items", "--transcripts", "--report", "--table", "--baseline"] {
        assert!(eval.contains(flag));
    }
}

#[test]
fn seed_flag_overrides_env() {
    let bin = env!("CARGO_BIN_EXE_vpt");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(bin);
        c.env_remove("VPT_SEED");
        if let Some(v) = env {
            c.env("VPT_SEED", v);
        }
        c.arg("gen-scenes");
        if let Some(v) = flag {
            c.args(["--seed", v]);
        }
        c.output().unwrap().stdout
    };
    let default = run(None, None);
    assert_eq!(default, run(None, Some("0")));
    let env7 = run(Some("7"), None);
    assert_eq!(env7, run(None, Some("7")));
    assert_ne!(env7, default);
    assert_eq!(run(Some("7"), Some("0")), default);
}

#[test]
fn gen_scenes_rejects_unbalanced_placements() {
    let r = vpt(&["gen-scenes", "--placement", "1,0", "--placement", "2,1"]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).starts_with("error[ConfigError]"));
}

#[test]
fn encoders_produce_one_row_per_annotation() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_cli_inputs(dir.path());
    let emb = dir.path().join("emb.jsonl");
    let r = vpt(&[
        "encode-embodiment",
        "--input",
        path_str(&inputs.vitpose),
        "--source",
        "vitpose",
        "--out",
        path_str(&emb),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let text = fs::read_to_string(&emb).unwrap();
    assert_eq!(text.lines().count(), 300);
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["tokens"].as_array().unwrap().len(), 22);

    // coco source on vitpose annotations is a variant mismatch
    let r = vpt(&[
        "encode-embodiment",
        "--input",
        path_str(&inputs.vitpose),
        "--source",
        "coco",
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).starts_with("error[VariantError]"), "{}", stderr(&r));

    let r = vpt(&["encode-rotation", "--input", path_str(&inputs.rotation)]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let rows: Vec<Value> = String::from_utf8_lossy(&r.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 300);
    assert_eq!(rows[0]["tokens"][0], "OBJ_START");
}

#[test]
fn rescale_flag_maps_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("big.jsonl");
    fs::write(
        &input,
        "{\"image_id\":\"a\",\"r_shoulder\":[400,200],\"l_shoulder\":[200,200],\"r_hip\":[380,500],\"l_hip\":[220,500]}\n",
    )
    .unwrap();
    let r = vpt(&[
        "encode-embodiment",
        "--input",
        path_str(&input),
        "--rescale-from",
        "672",
        "672",
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let row: Value = serde_json::from_str(String::from_utf8_lossy(&r.stdout).trim()).unwrap();
    let tokens: Vec<&str> = row["tokens"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t.as_str().unwrap())
        .collect();
    assert_eq!(&tokens[1..4], &["KP_R_SHOULDER", "X_200", "Y_100"]);
    assert_eq!(row["alignment"], "aligned");

    let r = vpt(&["encode-embodiment", "--input", path_str(&input)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).starts_with("error[RangeError]"));
}

#[test]
fn curriculum_writes_corpus_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_cli_inputs(dir.path());
    let out = dir.path().join("corpus.jsonl");
    let r = vpt(&[
        "gen-curriculum",
        "--variant",
        "emb_coco",
        "--annotations",
        path_str(&inputs.keypoints),
        "--out",
        path_str(&out),
        "--counts",
        "500,20,20",
        "--epochs",
        "10",
        "--seed",
        "11",
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 540);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("corpus.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["epochs"].as_array().unwrap().len(), 10);
    assert_eq!(manifest["sampling"]["token_gen_with_replacement"], true);
    assert_eq!(manifest["epochs"][9]["realized"]["cot"], 243);

    let r = vpt(&[
        "gen-curriculum",
        "--variant",
        "rotation",
        "--annotations",
        path_str(&inputs.keypoints),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).starts_with("error[ParseError]"), "{}", stderr(&r));

    let r = vpt(&[
        "gen-curriculum",
        "--variant",
        "emb_coco",
        "--annotations",
        path_str(&inputs.keypoints),
        "--out",
        path_str(&dir.path().join("no/such/dir/c.jsonl")),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).starts_with("error[IoError]"));
}

#[test]
fn eval_reports_cells_and_baseline_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_cli_inputs(dir.path());
    let report = dir.path().join("report.json");
    let table = dir.path().join("table.md");
    let r = vpt(&[
        "eval",
        "--items",
        path_str(&inputs.items),
        "--transcripts",
        path_str(&inputs.transcripts),
        "--report",
        path_str(&report),
        "--table",
        path_str(&table),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let direct = &v["benchmarks"]["perspective_taking"]["direct"]["accuracy"];
    assert_eq!(direct["aligned"], 1.0);
    assert_eq!(direct["unaligned"], 0.0);
    assert_eq!(direct["total"], 0.5);
    assert!(fs::read_to_string(&table).unwrap().contains("Perspective"));

    let again = dir.path().join("again.json");
    let r = vpt(&[
        "eval",
        "--items",
        path_str(&inputs.items),
        "--transcripts",
        path_str(&inputs.transcripts),
        "--report",
        path_str(&again),
        "--baseline",
        path_str(&report),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let v: Value = serde_json::from_str(&fs::read_to_string(&again).unwrap()).unwrap();
    assert_eq!(v["improvement"]["perspective_taking"]["total"], 0.0);
}

#[test]
fn analyze_finds_planted_unit() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_cli_inputs(dir.path());
    let out = dir.path().join("analysis.json");
    let curves = dir.path().join("curves.csv");
    let r = vpt(&[
        "analyze",
        "--activations",
        path_str(&inputs.actv),
        "--meta",
        path_str(&inputs.meta),
        "--contrast",
        "alignment",
        "--layer",
        "model.mm_projector[2]",
        "--out",
        path_str(&out),
        "--curves",
        path_str(&curves),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["layer_name"], "model.mm_projector[2]");
    let units = v["selection"]["selective_units"].as_array().unwrap();
    let unit0 = units.iter().find(|u| u["unit"] == 0).expect("unit 0 selected");
    assert_eq!(unit0["direction"], "b_gt_a");
    let csv = fs::read_to_string(&curves).unwrap();
    assert!(csv.starts_with("series,angle_deg,mean,sem,n_units,n_stimuli\n"));
    assert!(csv.contains("unaligned_gt_aligned,0,"));

    let r = vpt(&[
        "analyze",
        "--activations",
        path_str(&inputs.meta),
        "--meta",
        path_str(&inputs.meta),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).starts_with("error[FormatError]"), "{}", stderr(&r));
}
