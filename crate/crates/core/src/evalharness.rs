//! Answer extraction and accuracy reports split by alignment and prompting condition.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    PerspectiveTaking,
    IsleBricksV2,
    CocoVal,
    Threedsr,
}

impl Benchmark {
    pub fn label(self) -> &'static str {
        match self {
            Benchmark::PerspectiveTaking => "Perspective-Taking",
            Benchmark::IsleBricksV2 => "Isle Bricks V2",
            Benchmark::CocoVal => "COCO 2017 Validation",
            Benchmark::Threedsr => "3DSRBench",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemAlignment {
    #[serde(rename = "aligned")]
    Aligned,
    #[serde(rename = "unaligned")]
    Unaligned,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub benchmark: Benchmark,
    pub query: String,
    pub gold: Side,
    pub alignment: ItemAlignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Direct,
    Cot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub item_id: String,
    pub condition: Condition,
    pub raw_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extracted {
    Side(Side),
    Unparsed,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("duplicate transcript for item {item_id} ({condition:?})")]
    DuplicateTranscript { item_id: String, condition: Condition },
    #[error("transcript references unknown item {0}")]
    MissingItem(String),
    #[error("duplicate benchmark item id {0}")]
    DuplicateItem(String),
    #[error("benchmark sets differ: base {base:?}, treated {treated:?}")]
    MismatchedBenchmarks {
        base: Vec<Benchmark>,
        treated: Vec<Benchmark>,
    },
}

fn side_word() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(left|right)\b").expect("static regex"))
}

fn answer_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)answer:").expect("static regex"))
}

fn to_side(word: &str) -> Side {
    if word.eq_ignore_ascii_case("left") {
        Side::Left
    } else {
        Side::Right
    }
}

fn last_side_word(text: &str) -> Extracted {
    side_word()
        .find_iter(text)
        .last()
        .map_or(Extracted::Unparsed, |m| Extracted::Side(to_side(m.as_str())))
}

/// Pull a left/right judgment out of a model response.
///
/// Direct: the last whole-word `left`/`right`. CoT: the first side word after
/// the last `answer:` marker, falling back to the direct rule.
pub fn extract_answer(raw_text: &str, condition: Condition) -> Extracted {
    if condition == Condition::Cot {
        if let Some(marker) = answer_marker().find_iter(raw_text).last() {
            if let Some(m) = side_word().find(&raw_text[marker.end()..]) {
                return Extracted::Side(to_side(m.as_str()));
            }
        }
    }
    last_side_word(raw_text)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub n: usize,
}

impl Tally {
    pub fn accuracy(&self) -> Option<f64> {
        (self.n > 0).then(|| self.correct as f64 / self.n as f64)
    }

    fn add(&mut self, correct: bool) {
        self.n += 1;
        self.correct += usize::from(correct);
    }
}

/// Accuracy triple for one table column; `None` where there were no items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracies {
    pub aligned: Option<f64>,
    pub unaligned: Option<f64>,
    pub total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScores {
    pub aligned: Tally,
    pub unaligned: Tally,
    pub total: Tally,
    pub unparsed: usize,
    pub accuracy: Accuracies,
}

impl CellScores {
    fn finish(aligned: Tally, unaligned: Tally, total: Tally, unparsed: usize) -> Self {
        Self {
            accuracy: Accuracies {
                aligned: aligned.accuracy(),
                unaligned: unaligned.accuracy(),
                total: total.accuracy(),
            },
            aligned,
            unaligned,
            total,
            unparsed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkScores {
    pub n_items: usize,
    pub direct: Option<CellScores>,
    pub cot: Option<CellScores>,
    /// Mean of direct and CoT, present only when both were scored.
    pub avg: Option<Accuracies>,
}

impl BenchmarkScores {
    /// The headline column: the average when both conditions exist, else the single one.
    pub fn headline(&self) -> Option<Accuracies> {
        match (&self.avg, &self.direct, &self.cot) {
            (Some(avg), _, _) => Some(*avg),
            (None, Some(c), None) | (None, None, Some(c)) => Some(c.accuracy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub benchmarks: BTreeMap<Benchmark, BenchmarkScores>,
}

fn mean_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some((a? + b?) / 2.0)
}

/// Score transcripts against gold answers.
pub fn score(items: &[BenchmarkItem], transcripts: &[Transcript]) -> Result<ScoreReport, EvalError> {
    let mut by_id: HashMap<&str, &BenchmarkItem> = HashMap::with_capacity(items.len());
    for item in items {
        if by_id.insert(item.id.as_str(), item).is_some() {
            return Err(EvalError::DuplicateItem(item.id.clone()));
        }
    }
    let mut seen = HashSet::new();
    // (benchmark, condition) -> (aligned, unaligned, total, unparsed)
    let mut cells: BTreeMap<(Benchmark, Condition), (Tally, Tally, Tally, usize)> = BTreeMap::new();
    for t in transcripts {
        let item = by_id
            .get(t.item_id.as_str())
            .ok_or_else(|| EvalError::MissingItem(t.item_id.clone()))?;
        if !seen.insert((t.item_id.as_str(), t.condition)) {
            return Err(EvalError::DuplicateTranscript {
                item_id: t.item_id.clone(),
                condition: t.condition,
            });
        }
        let extracted = extract_answer(&t.raw_text, t.condition);
        let correct = extracted == Extracted::Side(item.gold);
        let cell = cells.entry((item.benchmark, t.condition)).or_default();
        match item.alignment {
            ItemAlignment::Aligned => cell.0.add(correct),
            ItemAlignment::Unaligned => cell.1.add(correct),
            ItemAlignment::NotApplicable => {}
        }
        cell.2.add(correct);
        if extracted == Extracted::Unparsed {
            cell.3 += 1;
        }
    }

    let mut n_items: BTreeMap<Benchmark, usize> = BTreeMap::new();
    for item in items {
        *n_items.entry(item.benchmark).or_default() += 1;
    }
    let benchmarks = n_items
        .into_iter()
        .map(|(b, n)| {
            let cell = |c| {
                cells
                    .get(&(b, c))
                    .map(|&(al, un, tot, unp)| CellScores::finish(al, un, tot, unp))
            };
            let direct = cell(Condition::Direct);
            let cot = cell(Condition::Cot);
            let avg = match (&direct, &cot) {
                (Some(d), Some(c)) => Some(Accuracies {
                    aligned: mean_opt(d.accuracy.aligned, c.accuracy.aligned),
                    unaligned: mean_opt(d.accuracy.unaligned, c.accuracy.unaligned),
                    total: mean_opt(d.accuracy.total, c.accuracy.total),
                }),
                _ => None,
            };
            (
                b,
                BenchmarkScores {
                    n_items: n,
                    direct,
                    cot,
                    avg,
                },
            )
        })
        .collect();
    Ok(ScoreReport { benchmarks })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub aligned: Option<f64>,
    pub unaligned: Option<f64>,
    pub total: Option<f64>,
}

/// Treated headline minus base headline per benchmark, in accuracy units
/// (0.45 = 45 percentage points).
pub fn improvement(base: &ScoreReport, treated: &ScoreReport) -> Result<BTreeMap<Benchmark, Deltas>, EvalError> {
    let keys = |r: &ScoreReport| r.benchmarks.keys().copied().collect::<Vec<_>>();
    if keys(base) != keys(treated) {
        return Err(EvalError::MismatchedBenchmarks {
            base: keys(base),
            treated: keys(treated),
        });
    }
    let diff = |t: Option<f64>, b: Option<f64>| Some(t? - b?);
    Ok(base
        .benchmarks
        .iter()
        .map(|(k, b)| {
            let (bh, th) = (b.headline(), treated.benchmarks[k].headline());
            let d = match (bh, th) {
                (Some(b), Some(t)) => Deltas {
                    aligned: diff(t.aligned, b.aligned),
                    unaligned: diff(t.unaligned, b.unaligned),
                    total: diff(t.total, b.total),
                },
                _ => Deltas {
                    aligned: None,
                    unaligned: None,
                    total: None,
                },
            };
            (*k, d)
        })
        .collect())
}

fn fmt_acc(v: Option<f64>) -> String {
    v.map_or_else(|| "–".to_string(), |v| format!("{v:.2}"))
}

type Pick = fn(&Accuracies) -> Option<f64>;

/// Markdown table with Align./Unalign./Total rows and Direct/CoT/Avg columns.
pub fn markdown_table(report: &ScoreReport) -> String {
    let mut out = String::from("| Evaluation | | Direct | CoT | Avg | Unparsed (D/C) |\n|---|---|---|---|---|---|\n");
    for (b, s) in &report.benchmarks {
        let pick = |c: &Option<CellScores>, f: fn(&Accuracies) -> Option<f64>| c.as_ref().and_then(|c| f(&c.accuracy));
        let unparsed = format!(
            "{}/{}",
            s.direct.as_ref().map_or("–".into(), |c| c.unparsed.to_string()),
            s.cot.as_ref().map_or("–".into(), |c| c.unparsed.to_string())
        );
        let has_alignment = [&s.direct, &s.cot]
            .iter()
            .any(|c| c.as_ref().is_some_and(|c| c.aligned.n + c.unaligned.n > 0));
        let mut rows: Vec<(&str, Pick)> = Vec::new();
        if has_alignment {
            rows.push(("Align.", |a| a.aligned));
            rows.push(("Unalign.", |a| a.unaligned));
        }
        rows.push(("**Total**", |a| a.total));
        for (i, (label, f)) in rows.iter().enumerate() {
            let name = if i == 0 { b.label() } else { "" };
            let last = if i + 1 == rows.len() { unparsed.as_str() } else { "" };
            out.push_str(&format!(
                "| {name} | {label} | {} | {} | {} | {last} |\n",
                fmt_acc(pick(&s.direct, *f)),
                fmt_acc(pick(&s.cot, *f)),
                fmt_acc(s.avg.as_ref().and_then(f)),
            ));
        }
    }
    out
}
