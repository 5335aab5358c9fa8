//! Synthetic top-down perspective-taking scenes and their left/right oracle.
//!
//! World frame: x to the viewer's right, y away from the viewer. The viewer
//! sits on the negative y axis looking toward +y. A yaw of 0° faces the same
//! way as the viewer (away from them); yaw increases clockwise seen from
//! above, so the facing vector is `(sin yaw, cos yaw)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embodiment::YawBin;

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Aligned,
    Unaligned,
}

impl Alignment {
    /// Alignment of a reference facing `yaw_deg`, by its yaw bin.
    pub fn from_yaw(yaw_deg: f64) -> Alignment {
        if YawBin::from_degrees(yaw_deg).is_aligned() {
            Alignment::Aligned
        } else {
            Alignment::Unaligned
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Alignment::Aligned => "aligned",
            Alignment::Unaligned => "unaligned",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("object lies on the agent's facing axis (cross product {cross:e}); left/right is undefined")]
    Collinear { cross: f64 },
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error("invalid scene {id}: {reason}")]
    Invalid { id: String, reason: String },
}

/// Wrap an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid rounds tiny negative inputs up to exactly 360.0
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Unit facing vector for a yaw in degrees.
pub fn facing_vector(yaw_deg: f64) -> [f64; 2] {
    let t = yaw_deg.to_radians();
    [t.sin(), t.cos()]
}

/// Which side of an agent an object falls on, from the agent's own frame.
pub fn judge_side(agent_pos: [f64; 2], agent_facing_deg: f64, object_pos: [f64; 2]) -> Result<Side, SceneError> {
    judge_side_eps(agent_pos, agent_facing_deg, object_pos, DEFAULT_EPSILON)
}

pub fn judge_side_eps(
    agent_pos: [f64; 2],
    agent_facing_deg: f64,
    object_pos: [f64; 2],
    epsilon: f64,
) -> Result<Side, SceneError> {
    let f = facing_vector(agent_facing_deg);
    let d = [object_pos[0] - agent_pos[0], object_pos[1] - agent_pos[1]];
    let cross = f[0] * d[1] - f[1] * d[0];
    if cross.abs() <= epsilon {
        return Err(SceneError::Collinear { cross });
    }
    Ok(if cross > 0.0 { Side::Left } else { Side::Right })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub name: String,
    pub pos: [f64; 2],
    pub azimuth_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LeftRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Viewer,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub target: String,
    pub relation: Relation,
    pub frame: Frame,
}

/// One schematic perspective-taking item. Field order is the JSONL key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub reference_yaw_deg: f64,
    pub reference_pos: [f64; 2],
    pub viewer_pos: [f64; 2],
    pub objects: Vec<SceneObject>,
    pub query: Query,
    pub gold_viewer: Side,
    pub gold_reference: Side,
    pub alignment: Alignment,
}

impl Scene {
    pub fn target(&self) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name == self.query.target)
    }

    /// Gold answer for the frame named in the query.
    pub fn gold(&self) -> Side {
        match self.query.frame {
            Frame::Viewer => self.gold_viewer,
            Frame::Reference => self.gold_reference,
        }
    }

    /// Check every structural invariant and that the gold answers match the oracle.
    pub fn validate(&self) -> Result<(), SceneError> {
        let invalid = |reason: String| SceneError::Invalid {
            id: self.id.clone(),
            reason,
        };
        if !(0.0..360.0).contains(&self.reference_yaw_deg) {
            return Err(invalid(format!(
                "reference_yaw_deg {} outside [0, 360)",
                self.reference_yaw_deg
            )));
        }
        if self.objects.is_empty() {
            return Err(invalid("scene has no objects".into()));
        }
        for o in &self.objects {
            if o.pos == self.reference_pos {
                return Err(invalid(format!("object {} sits on the reference", o.name)));
            }
        }
        let target = self
            .target()
            .ok_or_else(|| invalid(format!("query target {} not in scene", self.query.target)))?;
        let viewer = judge_side(self.viewer_pos, 0.0, target.pos)?;
        let reference = judge_side(self.reference_pos, self.reference_yaw_deg, target.pos)?;
        if viewer != self.gold_viewer || reference != self.gold_reference {
            return Err(invalid("gold answers disagree with the geometry".into()));
        }
        if Alignment::from_yaw(self.reference_yaw_deg) != self.alignment {
            return Err(invalid("alignment disagrees with the yaw bin".into()));
        }
        Ok(())
    }
}

/// Layout knobs for [`generate_benchmark`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub angles_deg: Vec<f64>,
    /// Target offsets from the reference. The companion object is mirrored across the viewer axis.
    pub placements: Vec<[f64; 2]>,
    pub reference_pos: [f64; 2],
    pub viewer_pos: [f64; 2],
    pub object_names: [String; 2],
    pub epsilon: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            angles_deg: default_angles(),
            placements: vec![[-2.0, 1.0], [2.0, 1.0]],
            reference_pos: [0.0, 0.0],
            viewer_pos: [0.0, -5.0],
            object_names: ["cube".to_string(), "sphere".to_string()],
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// 0°, 30°, ..., 330°.
pub fn default_angles() -> Vec<f64> {
    (0..12).map(|i| f64::from(i) * 30.0).collect()
}

/// One scene per (angle, placement) pair, ordered and identified by index.
///
/// The seed only decides which of the two objects is queried in each scene.
pub fn generate_benchmark(config: &BenchmarkConfig, seed: u64) -> Result<Vec<Scene>, SceneError> {
    if config.angles_deg.is_empty() {
        return Err(SceneError::Config("no reference angles given".into()));
    }
    if config.placements.is_empty() {
        return Err(SceneError::Config("no object placements given".into()));
    }
    if config
        .angles_deg
        .iter()
        .chain(config.placements.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(SceneError::Config("angles and placements must be finite".into()));
    }
    if config.placements.iter().any(|p| p[0] == 0.0) {
        return Err(SceneError::Config(
            "placement on the viewer axis has no left/right answer".into(),
        ));
    }
    let lefts = config.placements.iter().filter(|p| p[0] < 0.0).count();
    if lefts * 2 != config.placements.len() {
        return Err(SceneError::Config(format!(
            "placements are unbalanced: {lefts} left of the viewer axis, {} right",
            config.placements.len() - lefts
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [rx, ry] = config.reference_pos;
    let mut scenes = Vec::with_capacity(config.angles_deg.len() * config.placements.len());
    for (ai, &angle) in config.angles_deg.iter().enumerate() {
        let yaw = normalize_degrees(angle);
        for (pi, p) in config.placements.iter().enumerate() {
            let target_first = rng.gen_bool(0.5);
            let (target_name, companion_name) = if target_first {
                (&config.object_names[0], &config.object_names[1])
            } else {
                (&config.object_names[1], &config.object_names[0])
            };
            let target_pos = [rx + p[0], ry + p[1]];
            let companion_pos = [rx - p[0], ry + p[1]];
            let gold_viewer = judge_side_eps(config.viewer_pos, 0.0, target_pos, config.epsilon)?;
            let gold_reference = judge_side_eps(config.reference_pos, yaw, target_pos, config.epsilon)?;
            scenes.push(Scene {
                id: format!("pt-a{ai:03}-p{pi:03}"),
                reference_yaw_deg: yaw,
                reference_pos: config.reference_pos,
                viewer_pos: config.viewer_pos,
                objects: vec![
                    SceneObject {
                        name: target_name.clone(),
                        pos: target_pos,
                        azimuth_deg: 0.0,
                    },
                    SceneObject {
                        name: companion_name.clone(),
                        pos: companion_pos,
                        azimuth_deg: 0.0,
                    },
                ],
                query: Query {
                    target: target_name.clone(),
                    relation: Relation::LeftRight,
                    frame: Frame::Reference,
                },
                gold_viewer,
                gold_reference,
                alignment: Alignment::from_yaw(yaw),
            });
        }
    }
    Ok(scenes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Rotate the offset into the agent frame and read the sign of local x.
    fn rotation_oracle(agent: [f64; 2], yaw_deg: f64, obj: [f64; 2]) -> Side {
        let t = yaw_deg.to_radians();
        let (dx, dy) = (obj[0] - agent[0], obj[1] - agent[1]);
        // rotation that takes the facing vector onto +y
        let local_x = t.cos() * dx - t.sin() * dy;
        if local_x < 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    #[test]
    fn viewer_frame_left_is_negative_x() {
        assert_eq!(judge_side([0.0, 0.0], 0.0, [-1.0, 0.0]), Ok(Side::Left));
    }

    #[test]
    fn reversed_agent_swaps_sides() {
        assert_eq!(judge_side([0.0, 0.0], 180.0, [-1.0, 0.0]), Ok(Side::Right));
    }

    #[test]
    fn quarter_turn_matches_rotation_oracle() {
        assert_eq!(rotation_oracle([0.0, 0.0], 90.0, [1.0, 1.0]), Side::Left);
        assert_eq!(judge_side([0.0, 0.0], 90.0, [1.0, 1.0]), Ok(Side::Left));
    }

    #[test]
    fn on_axis_object_is_collinear() {
        assert!(matches!(
            judge_side([0.0, 0.0], 0.0, [0.0, 3.0]),
            Err(SceneError::Collinear { .. })
        ));
        assert!(matches!(
            judge_side([0.0, 0.0], 90.0, [-2.0, 0.0]),
            Err(SceneError::Collinear { .. })
        ));
    }

    #[test]
    fn flip_is_an_involution() {
        for s in [Side::Left, Side::Right] {
            assert_ne!(s.flip(), s);
            assert_eq!(s.flip().flip(), s);
        }
    }

    #[test]
    fn two_by_two_benchmark() {
        let config = BenchmarkConfig {
            angles_deg: vec![0.0, 180.0],
            placements: vec![[-1.0, 0.0], [1.0, 0.0]],
            ..BenchmarkConfig::default()
        };
        let scenes = generate_benchmark(&config, 7).unwrap();
        assert_eq!(scenes.len(), 4);
        for s in &scenes {
            s.validate().unwrap();
            if s.reference_yaw_deg == 180.0 {
                assert_eq!(s.gold_reference, s.gold_viewer.flip());
                assert_eq!(s.alignment, Alignment::Unaligned);
            } else {
                assert_eq!(s.gold_reference, s.gold_viewer);
                assert_eq!(s.alignment, Alignment::Aligned);
            }
        }
    }

    #[test]
    fn default_benchmark_has_24_sorted_scenes() {
        let scenes = generate_benchmark(&BenchmarkConfig::default(), 0).unwrap();
        assert_eq!(scenes.len(), 24);
        let ids: Vec<_> = scenes.iter().map(|s| s.id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        let aligned = scenes.iter().filter(|s| s.alignment == Alignment::Aligned).count();
        // 0, 30, 60 and 330 fall in aligned bins
        assert_eq!(aligned, 8);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = crate::jsonl::to_string(&generate_benchmark(&BenchmarkConfig::default(), 3).unwrap());
        let b = crate::jsonl::to_string(&generate_benchmark(&BenchmarkConfig::default(), 3).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn jsonl_key_order_is_fixed() {
        let scenes = generate_benchmark(&BenchmarkConfig::default(), 0).unwrap();
        let line = serde_json::to_string(&scenes[0]).unwrap();
        let keys = [
            "\"id\"",
            "\"reference_yaw_deg\"",
            "\"reference_pos\"",
            "\"viewer_pos\"",
            "\"objects\"",
            "\"query\"",
            "\"gold_viewer\"",
            "\"gold_reference\"",
            "\"alignment\"",
        ];
        let positions: Vec<_> = keys.iter().map(|k| line.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{line}");
    }

    #[test]
    fn rejects_bad_configs() {
        let empty = BenchmarkConfig {
            angles_deg: vec![],
            ..BenchmarkConfig::default()
        };
        assert!(matches!(generate_benchmark(&empty, 0), Err(SceneError::Config(_))));
        let no_places = BenchmarkConfig {
            placements: vec![],
            ..BenchmarkConfig::default()
        };
        assert!(matches!(generate_benchmark(&no_places, 0), Err(SceneError::Config(_))));
        let lopsided = BenchmarkConfig {
            placements: vec![[-1.0, 1.0], [-2.0, 1.0]],
            ..BenchmarkConfig::default()
        };
        assert!(matches!(generate_benchmark(&lopsided, 0), Err(SceneError::Config(_))));
    }

    #[test]
    fn collinear_custom_layout_is_refused() {
        let config = BenchmarkConfig {
            angles_deg: vec![90.0],
            placements: vec![[-1.0, 0.0], [1.0, 0.0]],
            ..BenchmarkConfig::default()
        };
        assert!(matches!(
            generate_benchmark(&config, 0),
            Err(SceneError::Collinear { .. })
        ));
    }

    #[test]
    fn normalize_handles_negative_and_tiny_inputs() {
        assert_eq!(normalize_degrees(-30.0), 330.0);
        assert_eq!(normalize_degrees(720.0), 0.0);
        assert_eq!(normalize_degrees(-1e-20), 0.0);
    }

    fn off_axis() -> impl Strategy<Value = ([f64; 2], f64, [f64; 2])> {
        (
            -50.0..50.0f64,
            -50.0..50.0f64,
            0.0..360.0f64,
            -50.0..50.0f64,
            -50.0..50.0f64,
        )
            .prop_map(|(ax, ay, yaw, ox, oy)| ([ax, ay], yaw, [ox, oy]))
            .prop_filter("off the facing axis", |(a, yaw, o)| {
                let f = facing_vector(*yaw);
                let d = [o[0] - a[0], o[1] - a[1]];
                (f[0] * d[1] - f[1] * d[0]).abs() > 1e-6
            })
    }

    proptest! {
        #[test]
        fn agrees_with_rotation_oracle((agent, yaw, obj) in off_axis()) {
            prop_assert_eq!(judge_side(agent, yaw, obj).unwrap(), rotation_oracle(agent, yaw, obj));
        }

        #[test]
        fn half_turn_flips((agent, yaw, obj) in off_axis()) {
            let a = judge_side(agent, yaw, obj).unwrap();
            let b = judge_side(agent, yaw + 180.0, obj).unwrap();
            prop_assert_eq!(b, a.flip());
        }

        #[test]
        fn mirroring_across_facing_axis_flips((agent, yaw, obj) in off_axis()) {
            let f = facing_vector(yaw);
            let d = [obj[0] - agent[0], obj[1] - agent[1]];
            let along = d[0] * f[0] + d[1] * f[1];
            let mirrored = [
                agent[0] + 2.0 * along * f[0] - d[0],
                agent[1] + 2.0 * along * f[1] - d[1],
            ];
            let a = judge_side(agent, yaw, obj).unwrap();
            prop_assert_eq!(judge_side(agent, yaw, mirrored).unwrap(), a.flip());
        }

        #[test]
        fn zero_yaw_at_viewer_is_viewer_frame(x in -50.0..50.0f64, y in -50.0..50.0f64) {
            prop_assume!(x.abs() > 1e-6);
            let viewer = [0.0, -5.0];
            let expected = if x < 0.0 { Side::Left } else { Side::Right };
            prop_assert_eq!(judge_side(viewer, 0.0, [x, y]).unwrap(), expected);
        }
    }
}
