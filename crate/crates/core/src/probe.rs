//! Feature-selectivity analysis of hidden-unit activations.
//!
//! Pipeline: average raw activations over the sequence axis, z-score every
//! unit across all stimuli, run a per-unit two-sided Welch test between two
//! stimulus conditions, and keep units with `p < alpha`. No multiple
//! comparison correction is applied. Tuning curves average the selected
//! units' z-scored activations per reference angle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actv::RawActivations;
use crate::scene::{Alignment, Side};
use crate::stats::{self, StatsError};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite activation at stimulus {stimulus}, unit {unit}")]
    NonFinite { stimulus: usize, unit: usize },
    #[error("condition {0} has fewer than 2 stimuli")]
    MissingCondition(String),
    #[error("unit set is empty")]
    EmptyUnitSet,
    #[error("unit {0} is not in the matrix")]
    UnknownUnit(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Per-stimulus condition labels, one JSONL row each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusMeta {
    pub stimulus_id: String,
    pub alignment: Alignment,
    pub angle_deg: f64,
    pub cube_direction: Side,
}

/// Stimuli × units matrix. Column `c` holds original unit `unit_ids[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    pub layer_name: String,
    pub n_stimuli: usize,
    pub unit_ids: Vec<usize>,
    values: Vec<f64>,
    pub meta: Vec<StimulusMeta>,
}

impl ActivationMatrix {
    pub fn new(
        layer_name: impl Into<String>,
        n_units: usize,
        values: Vec<f64>,
        meta: Vec<StimulusMeta>,
    ) -> Result<Self, ProbeError> {
        let n_stimuli = meta.len();
        if values.len() != n_stimuli * n_units {
            return Err(ProbeError::Shape(format!(
                "{} values for {n_stimuli} stimuli x {n_units} units",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ProbeError::NonFinite {
                stimulus: i / n_units.max(1),
                unit: i % n_units.max(1),
            });
        }
        Ok(Self {
            layer_name: layer_name.into(),
            n_stimuli,
            unit_ids: (0..n_units).collect(),
            values,
            meta,
        })
    }

    pub fn n_units(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn get(&self, stimulus: usize, column: usize) -> f64 {
        self.values[stimulus * self.n_units() + column]
    }

    pub fn column(&self, column: usize) -> Vec<f64> {
        (0..self.n_stimuli).map(|s| self.get(s, column)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn column_of(&self, unit: usize) -> Option<usize> {
        self.unit_ids.iter().position(|&u| u == unit)
    }

    /// Reorder stimulus rows; `order[i]` is the source row of new row `i`.
    pub fn permute_rows(&self, order: &[usize]) -> ActivationMatrix {
        let n = self.n_units();
        let mut values = Vec::with_capacity(self.values.len());
        for &src in order {
            values.extend_from_slice(&self.values[src * n..(src + 1) * n]);
        }
        ActivationMatrix {
            layer_name: self.layer_name.clone(),
            n_stimuli: order.len(),
            unit_ids: self.unit_ids.clone(),
            values,
            meta: order.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }
}

/// Mean over the sequence axis.
pub fn pool_sequence(
    raw: &RawActivations,
    layer_name: &str,
    meta: Vec<StimulusMeta>,
) -> Result<ActivationMatrix, ProbeError> {
    if raw.seq_len == 0 {
        return Err(ProbeError::Shape("seq_len must be at least 1".into()));
    }
    if meta.len() != raw.n_stimuli {
        return Err(ProbeError::Shape(format!(
            "{} metadata rows for {} stimuli",
            meta.len(),
            raw.n_stimuli
        )));
    }
    let mut values = vec![0.0f64; raw.n_stimuli * raw.n_units];
    for s in 0..raw.n_stimuli {
        let row = &mut values[s * raw.n_units..(s + 1) * raw.n_units];
        for p in 0..raw.seq_len {
            for (u, acc) in row.iter_mut().enumerate() {
                *acc += f64::from(raw.get(s, p, u));
            }
        }
        for acc in row.iter_mut() {
            *acc /= raw.seq_len as f64;
        }
    }
    ActivationMatrix::new(layer_name, raw.n_units, values, meta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub matrix: ActivationMatrix,
    /// Original ids of units dropped for having zero variance.
    pub excluded_units: Vec<usize>,
}

/// Z-score each unit across stimuli (sample std); constant units are dropped.
pub fn standardize(m: &ActivationMatrix) -> Standardized {
    let mut keep = Vec::new();
    let mut excluded_units = Vec::new();
    let mut columns = Vec::new();
    for c in 0..m.n_units() {
        let col = m.column(c);
        let (mu, sd) = if col.len() >= 2 {
            (stats::mean(&col), stats::sample_variance(&col).sqrt())
        } else {
            (0.0, 0.0)
        };
        if sd <= 1e-12 * mu.abs().max(1.0) {
            excluded_units.push(m.unit_ids[c]);
            continue;
        }
        keep.push(m.unit_ids[c]);
        columns.push(col.into_iter().map(|v| (v - mu) / sd).collect::<Vec<_>>());
    }
    let n = keep.len();
    let mut values = vec![0.0; m.n_stimuli * n];
    for (c, col) in columns.iter().enumerate() {
        for (s, v) in col.iter().enumerate() {
            values[s * n + c] = *v;
        }
    }
    Standardized {
        matrix: ActivationMatrix {
            layer_name: m.layer_name.clone(),
            n_stimuli: m.n_stimuli,
            unit_ids: keep,
            values,
            meta: m.meta.clone(),
        },
        excluded_units,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contrast {
    Alignment,
    CubeDirection,
}

impl Contrast {
    /// Condition labels `(a, b)`; `a_gt_b` units prefer the first.
    pub fn conditions(self) -> (&'static str, &'static str) {
        match self {
            Contrast::Alignment => ("aligned", "unaligned"),
            Contrast::CubeDirection => ("left", "right"),
        }
    }

    fn in_a(self, meta: &StimulusMeta) -> bool {
        match self {
            Contrast::Alignment => meta.alignment == Alignment::Aligned,
            Contrast::CubeDirection => meta.cube_direction == Side::Left,
        }
    }
}

impl std::str::FromStr for Contrast {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alignment" => Ok(Contrast::Alignment),
            "cube_direction" => Ok(Contrast::CubeDirection),
            other => Err(format!(
                "unknown contrast {other:?} (expected alignment or cube_direction)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AGtB,
    BGtA,
}

/// Serializes infinite t statistics (perfect separation) as strings.
mod signed_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad t statistic {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedUnit {
    pub unit: usize,
    #[serde(with = "signed_inf")]
    pub t_stat: f64,
    pub dof: f64,
    pub p_value: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionCounts {
    pub a_gt_b: usize,
    pub b_gt_a: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectivityResult {
    pub contrast: Contrast,
    pub condition_a: String,
    pub condition_b: String,
    pub alpha: f64,
    pub tested_units: usize,
    pub excluded_units: Vec<usize>,
    pub selective_units: Vec<SelectedUnit>,
    pub counts: DirectionCounts,
}

impl SelectivityResult {
    pub fn units(&self, direction: Direction) -> Vec<usize> {
        self.selective_units
            .iter()
            .filter(|u| u.direction == direction)
            .map(|u| u.unit)
            .collect()
    }
}

/// Welch test for one unit; both groups constant but different counts as
/// perfect separation (`t = ±inf`, `p = 0`).
fn test_unit(a: &[f64], b: &[f64]) -> Result<stats::WelchResult, StatsError> {
    // z-scoring leaves rounding noise in groups that were constant
    let scale = 1.0f64.max(stats::mean(a).abs()).max(stats::mean(b).abs());
    let flat = |xs: &[f64]| xs.len() >= 2 && stats::sample_variance(xs).sqrt() <= 1e-12 * scale;
    let result = if flat(a) && flat(b) {
        Err(StatsError::ZeroVariance)
    } else {
        stats::welch_test(a, b)
    };
    match result {
        Err(StatsError::ZeroVariance) => {
            let diff = stats::mean(a) - stats::mean(b);
            let dof = (a.len() + b.len() - 2) as f64;
            if diff == 0.0 {
                Ok(stats::WelchResult { t: 0.0, dof, p: 1.0 })
            } else {
                Ok(stats::WelchResult {
                    t: diff.signum() * f64::INFINITY,
                    dof,
                    p: 0.0,
                })
            }
        }
        other => other,
    }
}

/// Per-unit Welch tests on z-scored activations.
pub fn select_units(m: &ActivationMatrix, contrast: Contrast, alpha: f64) -> Result<SelectivityResult, ProbeError> {
    let (name_a, name_b) = contrast.conditions();
    let rows_a: Vec<usize> = (0..m.n_stimuli).filter(|&s| contrast.in_a(&m.meta[s])).collect();
    let rows_b: Vec<usize> = (0..m.n_stimuli).filter(|&s| !contrast.in_a(&m.meta[s])).collect();
    if rows_a.len() < 2 {
        return Err(ProbeError::MissingCondition(name_a.into()));
    }
    if rows_b.len() < 2 {
        return Err(ProbeError::MissingCondition(name_b.into()));
    }
    let z = standardize(m);
    let zm = &z.matrix;
    let mut selective_units = Vec::new();
    let mut counts = DirectionCounts { a_gt_b: 0, b_gt_a: 0 };
    for c in 0..zm.n_units() {
        let a: Vec<f64> = rows_a.iter().map(|&s| zm.get(s, c)).collect();
        let b: Vec<f64> = rows_b.iter().map(|&s| zm.get(s, c)).collect();
        let r = test_unit(&a, &b)?;
        if r.p < alpha && r.t != 0.0 {
            let direction = if r.t > 0.0 {
                counts.a_gt_b += 1;
                Direction::AGtB
            } else {
                counts.b_gt_a += 1;
                Direction::BGtA
            };
            selective_units.push(SelectedUnit {
                unit: zm.unit_ids[c],
                t_stat: r.t,
                dof: r.dof,
                p_value: r.p,
                direction,
            });
        }
    }
    Ok(SelectivityResult {
        contrast,
        condition_a: name_a.into(),
        condition_b: name_b.into(),
        alpha,
        tested_units: zm.n_units(),
        excluded_units: z.excluded_units,
        selective_units,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint {
    pub angle_deg: f64,
    pub mean: f64,
    /// Standard error across units; absent for a single unit.
    pub sem: Option<f64>,
    pub n_units: usize,
    pub n_stimuli: usize,
}

/// Per-angle response of a unit set: each unit is averaged over the stimuli
/// at that angle, then mean and SEM are taken across units.
pub fn tuning_curve(m: &ActivationMatrix, units: &[usize]) -> Result<Vec<TuningPoint>, ProbeError> {
    if units.is_empty() {
        return Err(ProbeError::EmptyUnitSet);
    }
    let columns: Vec<usize> = units
        .iter()
        .map(|&u| m.column_of(u).ok_or(ProbeError::UnknownUnit(u)))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<usize> = (0..m.n_stimuli).collect();
    rows.sort_by(|&a, &b| m.meta[a].angle_deg.total_cmp(&m.meta[b].angle_deg).then(a.cmp(&b)));

    let mut curve = Vec::new();
    for group in rows.chunk_by(|&a, &b| m.meta[a].angle_deg == m.meta[b].angle_deg) {
        let unit_means: Vec<f64> = columns
            .iter()
            .map(|&c| group.iter().map(|&s| m.get(s, c)).sum::<f64>() / group.len() as f64)
            .collect();
        let mean = stats::mean(&unit_means);
        let sem =
            (unit_means.len() >= 2).then(|| (stats::sample_variance(&unit_means) / unit_means.len() as f64).sqrt());
        curve.push(TuningPoint {
            angle_deg: m.meta[group[0]].angle_deg,
            mean,
            sem,
            n_units: columns.len(),
            n_stimuli: group.len(),
        });
    }
    Ok(curve)
}

/// Mean activation of a unit set over the stimuli of each contrast condition.
pub fn condition_means(m: &ActivationMatrix, units: &[usize], contrast: Contrast) -> Result<(f64, f64), ProbeError> {
    if units.is_empty() {
        return Err(ProbeError::EmptyUnitSet);
    }
    let columns: Vec<usize> = units
        .iter()
        .map(|&u| m.column_of(u).ok_or(ProbeError::UnknownUnit(u)))
        .collect::<Result<_, _>>()?;
    let (mut sa, mut na, mut sb, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for s in 0..m.n_stimuli {
        let v: f64 = columns.iter().map(|&c| m.get(s, c)).sum::<f64>() / columns.len() as f64;
        if contrast.in_a(&m.meta[s]) {
            sa += v;
            na += 1;
        } else {
            sb += v;
            nb += 1;
        }
    }
    if na == 0 {
        return Err(ProbeError::MissingCondition(contrast.conditions().0.into()));
    }
    if nb == 0 {
        return Err(ProbeError::MissingCondition(contrast.conditions().1.into()));
    }
    Ok((sa / na as f64, sb / nb as f64))
}

/// Full report written by the `analyze` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub layer_name: String,
    pub n_stimuli: usize,
    pub n_units: usize,
    pub selection: SelectivityResult,
    pub tuning_a_gt_b: Option<Vec<TuningPoint>>,
    pub tuning_b_gt_a: Option<Vec<TuningPoint>>,
}

pub fn analyze(m: &ActivationMatrix, contrast: Contrast, alpha: f64) -> Result<AnalysisReport, ProbeError> {
    let selection = select_units(m, contrast, alpha)?;
    let z = standardize(m).matrix;
    let curve = |d| {
        let units = selection.units(d);
        if units.is_empty() {
            Ok(None)
        } else {
            tuning_curve(&z, &units).map(Some)
        }
    };
    Ok(AnalysisReport {
        layer_name: m.layer_name.clone(),
        n_stimuli: m.n_stimuli,
        n_units: m.n_units(),
        tuning_a_gt_b: curve(Direction::AGtB)?,
        tuning_b_gt_a: curve(Direction::BGtA)?,
        selection,
    })
}

/// Tuning curves as CSV: `series,angle_deg,mean,sem,n_units,n_stimuli`.
pub fn tuning_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("series,angle_deg,mean,sem,n_units,n_stimuli\n");
    let (a, b) = (&report.selection.condition_a, &report.selection.condition_b);
    for (name, curve) in [
        (format!("{a}_gt_{b}"), &report.tuning_a_gt_b),
        (format!("{b}_gt_{a}"), &report.tuning_b_gt_a),
    ] {
        for p in curve.iter().flatten() {
            let sem = p.sem.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{name},{},{},{sem},{},{}\n",
                p.angle_deg, p.mean, p.n_units, p.n_stimuli
            ));
        }
    }
    out
}
