//! Torso yaw from shoulder keypoints, and embodiment-token sequences.
//!
//! Sequence layout (COCO):
//!
//! ```text
//! POSE_START
//!   KP_R_SHOULDER X_i Y_j   KP_L_SHOULDER X_i Y_j
//!   KP_R_HIP X_i Y_j        KP_L_HIP X_i Y_j
//! POSE_END ORIENT_START TORSO_w YAW_k ORIENT_END
//! ```
//!
//! The ViTPose variant adds a `CONF_c` token after each keypoint triplet.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{
    conf_token, parse_indexed, torso_token, x_token, y_token, yaw_token, CONF_BINS, KEYPOINT_MARKERS, ORIENT_END,
    ORIENT_START, POSE_END, POSE_START, TORSO_BINS, YAW_BINS,
};
use crate::{IMAGE_SIZE, MAX_PIXEL};

/// Yaw bins that count as aligned with the viewer.
pub const ALIGNED_BINS: [u8; 3] = [0, 1, 7];

/// Pixel span of one torso-width bin.
pub const TORSO_BIN_WIDTH: u32 = 84;

#[derive(Debug, Error, PartialEq)]
pub enum EmbodimentError {
    #[error("shoulders coincide; torso yaw is undefined")]
    Degenerate,
    #[error("coordinate {value} of {field} outside [0, {MAX_PIXEL}]")]
    Range { field: String, value: f64 },
    #[error("variant mismatch: {0}")]
    Variant(String),
    #[error("malformed embodiment sequence at token {index}: {reason}")]
    Decode { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseSource {
    Coco,
    Vitpose,
}

impl std::str::FromStr for PoseSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coco" => Ok(PoseSource::Coco),
            "vitpose" => Ok(PoseSource::Vitpose),
            other => Err(format!("unknown pose source {other:?}")),
        }
    }
}

/// Shoulder and hip keypoints in the 336×336 pixel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoints {
    pub r_shoulder: [u32; 2],
    pub l_shoulder: [u32; 2],
    pub r_hip: [u32; 2],
    pub l_hip: [u32; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidences: Option<[f64; 4]>,
}

impl Keypoints {
    /// Points in sequence order: R-shoulder, L-shoulder, R-hip, L-hip.
    pub fn points(&self) -> [[u32; 2]; 4] {
        [self.r_shoulder, self.l_shoulder, self.r_hip, self.l_hip]
    }

    pub fn validate(&self) -> Result<(), EmbodimentError> {
        const NAMES: [&str; 4] = ["r_shoulder", "l_shoulder", "r_hip", "l_hip"];
        for (name, p) in NAMES.iter().zip(self.points()) {
            for v in p {
                if v > MAX_PIXEL {
                    return Err(EmbodimentError::Range {
                        field: (*name).to_string(),
                        value: f64::from(v),
                    });
                }
            }
        }
        if let Some(cs) = self.confidences {
            for c in cs {
                if !(0.0..=1.0).contains(&c) {
                    return Err(EmbodimentError::Range {
                        field: "confidences".into(),
                        value: c,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A discretized torso yaw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YawBin {
    pub k: u8,
    pub theta_deg: f64,
}

impl YawBin {
    pub fn from_degrees(theta_deg: f64) -> YawBin {
        let theta_deg = crate::scene::normalize_degrees(theta_deg);
        let width = 360.0 / f64::from(YAW_BINS);
        let k = ((theta_deg / width).floor() as u8).min(YAW_BINS as u8 - 1);
        YawBin { k, theta_deg }
    }

    pub fn is_aligned(&self) -> bool {
        ALIGNED_BINS.contains(&self.k)
    }
}

/// Yaw in degrees from the right-minus-left shoulder offset in image coordinates.
pub fn yaw_degrees(dx: f64, dy: f64) -> f64 {
    // image y grows downward, hence -dy
    ((-dy).atan2(dx).to_degrees() + 360.0) % 360.0
}

pub fn torso_yaw(kp: &Keypoints) -> Result<YawBin, EmbodimentError> {
    let dx = i64::from(kp.r_shoulder[0]) - i64::from(kp.l_shoulder[0]);
    let dy = i64::from(kp.r_shoulder[1]) - i64::from(kp.l_shoulder[1]);
    if dx == 0 && dy == 0 {
        return Err(EmbodimentError::Degenerate);
    }
    Ok(YawBin::from_degrees(yaw_degrees(dx as f64, dy as f64)))
}

/// Shoulder span binned into four uniform 84-pixel bins.
pub fn torso_width_bin(kp: &Keypoints) -> u8 {
    let w = kp.r_shoulder[0].abs_diff(kp.l_shoulder[0]);
    (w / TORSO_BIN_WIDTH).min(TORSO_BINS - 1) as u8
}

/// Decile bin of a keypoint confidence in `[0, 1]`.
pub fn confidence_bin(c: f64) -> u8 {
    ((c * f64::from(CONF_BINS)).floor().max(0.0) as u32).min(CONF_BINS - 1) as u8
}

/// Mean Euclidean distance between corresponding keypoints.
pub fn keypoint_discrepancy(a: &Keypoints, b: &Keypoints) -> f64 {
    let total: f64 = a
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| {
            let dx = f64::from(p[0]) - f64::from(q[0]);
            let dy = f64::from(p[1]) - f64::from(q[1]);
            dx.hypot(dy)
        })
        .sum();
    total / 4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbodimentSequence {
    pub source: PoseSource,
    pub tokens: Vec<String>,
}

pub fn encode_embodiment(kp: &Keypoints, source: PoseSource) -> Result<EmbodimentSequence, EmbodimentError> {
    kp.validate()?;
    let confs = match (source, kp.confidences) {
        (PoseSource::Coco, None) => None,
        (PoseSource::Vitpose, Some(c)) => Some(c),
        (PoseSource::Coco, Some(_)) => {
            return Err(EmbodimentError::Variant(
                "COCO keypoints must not carry confidences".into(),
            ))
        }
        (PoseSource::Vitpose, None) => {
            return Err(EmbodimentError::Variant(
                "ViTPose keypoints require four confidences".into(),
            ))
        }
    };
    let yaw = torso_yaw(kp)?;
    let mut tokens = Vec::with_capacity(22);
    tokens.push(POSE_START.to_string());
    for (i, (marker, p)) in KEYPOINT_MARKERS.iter().zip(kp.points()).enumerate() {
        tokens.push((*marker).to_string());
        tokens.push(x_token(p[0]));
        tokens.push(y_token(p[1]));
        if let Some(cs) = confs {
            tokens.push(conf_token(confidence_bin(cs[i])));
        }
    }
    tokens.push(POSE_END.to_string());
    tokens.push(ORIENT_START.to_string());
    tokens.push(torso_token(torso_width_bin(kp)));
    tokens.push(yaw_token(yaw.k));
    tokens.push(ORIENT_END.to_string());
    Ok(EmbodimentSequence { source, tokens })
}

/// What can be recovered from an embodiment sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedEmbodiment {
    pub source: PoseSource,
    pub points: [[u32; 2]; 4],
    pub confidence_bins: Option<[u8; 4]>,
    pub torso_bin: u8,
    pub yaw_bin: u8,
}

pub fn decode_embodiment<S: AsRef<str>>(tokens: &[S]) -> Result<DecodedEmbodiment, EmbodimentError> {
    let source = match tokens.len() {
        18 => PoseSource::Coco,
        22 => PoseSource::Vitpose,
        n => {
            return Err(EmbodimentError::Decode {
                index: 0,
                reason: format!("sequence length {n} is neither 18 nor 22"),
            })
        }
    };
    let mut cursor = Cursor { tokens, pos: 0 };
    cursor.expect(POSE_START)?;
    let mut points = [[0u32; 2]; 4];
    let mut confs = [0u8; 4];
    for (i, marker) in KEYPOINT_MARKERS.iter().enumerate() {
        cursor.expect(marker)?;
        points[i] = [cursor.indexed("X", IMAGE_SIZE)?, cursor.indexed("Y", IMAGE_SIZE)?];
        if source == PoseSource::Vitpose {
            confs[i] = cursor.indexed("CONF", CONF_BINS)? as u8;
        }
    }
    cursor.expect(POSE_END)?;
    cursor.expect(ORIENT_START)?;
    let torso_bin = cursor.indexed("TORSO", TORSO_BINS)? as u8;
    let yaw_bin = cursor.indexed("YAW", YAW_BINS)? as u8;
    cursor.expect(ORIENT_END)?;
    Ok(DecodedEmbodiment {
        source,
        points,
        confidence_bins: (source == PoseSource::Vitpose).then_some(confs),
        torso_bin,
        yaw_bin,
    })
}

pub(crate) struct Cursor<'a, S> {
    pub tokens: &'a [S],
    pub pos: usize,
}

impl<S: AsRef<str>> Cursor<'_, S> {
    fn next(&mut self) -> Result<&str, EmbodimentError> {
        let t = self.tokens.get(self.pos).ok_or(EmbodimentError::Decode {
            index: self.pos,
            reason: "sequence ends early".into(),
        })?;
        self.pos += 1;
        Ok(t.as_ref())
    }

    fn expect(&mut self, want: &str) -> Result<(), EmbodimentError> {
        let index = self.pos;
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(EmbodimentError::Decode {
                index,
                reason: format!("expected {want}, found {got}"),
            })
        }
    }

    fn indexed(&mut self, tag: &str, limit: u32) -> Result<u32, EmbodimentError> {
        let index = self.pos;
        let got = self.next()?;
        parse_indexed(got, tag, limit).ok_or_else(|| EmbodimentError::Decode {
            index,
            reason: format!("expected {tag}_<0..{limit}>, found {got}"),
        })
    }
}

/// One line of a keypoint annotation file, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointRecord {
    pub image_id: String,
    pub r_shoulder: [f64; 2],
    pub l_shoulder: [f64; 2],
    pub r_hip: [f64; 2],
    pub l_hip: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidences: Option<Vec<f64>>,
}

impl KeypointRecord {
    /// Convert to grid keypoints. With `rescale_from = Some((w, h))` each
    /// coordinate maps as `round(v * 336 / size)`, clamped to the last pixel.
    pub fn to_keypoints(&self, rescale_from: Option<(f64, f64)>) -> Result<Keypoints, EmbodimentError> {
        let map = |field: &str, p: [f64; 2]| -> Result<[u32; 2], EmbodimentError> {
            let mut out = [0u32; 2];
            for (axis, v) in p.iter().enumerate() {
                let range_err = || EmbodimentError::Range {
                    field: field.to_string(),
                    value: *v,
                };
                if !v.is_finite() {
                    return Err(range_err());
                }
                let mapped = match rescale_from {
                    Some((w, h)) => {
                        let size = if axis == 0 { w } else { h };
                        if *v < 0.0 || *v > size {
                            return Err(range_err());
                        }
                        (v * f64::from(IMAGE_SIZE) / size).round().min(f64::from(MAX_PIXEL))
                    }
                    None => {
                        if v.fract() != 0.0 || *v < 0.0 || *v > f64::from(MAX_PIXEL) {
                            return Err(range_err());
                        }
                        *v
                    }
                };
                out[axis] = mapped as u32;
            }
            Ok(out)
        };
        let confidences = match &self.confidences {
            None => None,
            Some(c) if c.len() == 4 => Some([c[0], c[1], c[2], c[3]]),
            Some(c) => {
                return Err(EmbodimentError::Variant(format!(
                    "{}: expected 4 confidences, got {}",
                    self.image_id,
                    c.len()
                )))
            }
        };
        let kp = Keypoints {
            r_shoulder: map("r_shoulder", self.r_shoulder)?,
            l_shoulder: map("l_shoulder", self.l_shoulder)?,
            r_hip: map("r_hip", self.r_hip)?,
            l_hip: map("l_hip", self.l_hip)?,
            confidences,
        };
        kp.validate()?;
        Ok(kp)
    }
}
