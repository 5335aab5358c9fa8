//! Rotation tokens: per-object center, semantic category and azimuth bin.
//!
//! Each object becomes `OBJ_START CAT_c X_i Y_j AZ_m OBJ_END`; the reference
//! object always comes first, query objects follow in input order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{
    az_token, cat_token, parse_indexed, validate_categories, x_token, y_token, VocabError, AZIMUTH_BINS,
    DEFAULT_CATEGORIES, OBJ_END, OBJ_START,
};
use crate::{IMAGE_SIZE, MAX_PIXEL};

pub const AZIMUTH_BIN_WIDTH: f64 = 36.0;
pub const TOKENS_PER_OBJECT: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum RotationError {
    #[error("bounding box {bbox:?} invalid: {reason}")]
    Range { bbox: [f64; 4], reason: String },
    #[error("unknown category {0:?}")]
    Category(String),
    #[error("expected exactly one reference object, found {0}")]
    Reference(usize),
    #[error("azimuth {0} is not finite")]
    Azimuth(f64),
    #[error(transparent)]
    Categories(#[from] VocabError),
    #[error("malformed rotation sequence at token {index}: {reason}")]
    Decode { index: usize, reason: String },
}

/// Round-half-up to the nearest integer.
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

fn check_bbox(bbox: [f64; 4]) -> Result<(), RotationError> {
    let err = |reason: &str| RotationError::Range {
        bbox,
        reason: reason.to_string(),
    };
    if bbox.iter().any(|v| !v.is_finite()) {
        return Err(err("non-finite coordinate"));
    }
    if bbox.iter().any(|&v| v < 0.0 || v > f64::from(MAX_PIXEL)) {
        return Err(err("coordinate outside the 336x336 image"));
    }
    if bbox[0] >= bbox[2] || bbox[1] >= bbox[3] {
        return Err(err("min corner must be strictly below max corner"));
    }
    Ok(())
}

/// Integer center of an `(x_min, y_min, x_max, y_max)` box.
pub fn bbox_center(bbox: [f64; 4]) -> Result<[u32; 2], RotationError> {
    check_bbox(bbox)?;
    let cx = round_half_up((bbox[0] + bbox[2]) / 2.0);
    let cy = round_half_up((bbox[1] + bbox[3]) / 2.0);
    Ok([cx as u32, cy as u32])
}

/// 36° azimuth bin of any finite angle, periodic in 360°.
pub fn azimuth_bin(azimuth_deg: f64) -> u8 {
    debug_assert!(azimuth_deg.is_finite());
    let a = crate::scene::normalize_degrees(azimuth_deg);
    ((a / AZIMUTH_BIN_WIDTH).floor() as u32).min(AZIMUTH_BINS - 1) as u8
}

/// The configured set of 18 semantic object groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySet {
    names: Vec<String>,
}

impl Default for CategorySet {
    fn default() -> Self {
        Self {
            names: DEFAULT_CATEGORIES.map(String::from).to_vec(),
        }
    }
}

impl CategorySet {
    pub fn new(names: Vec<String>) -> Result<CategorySet, RotationError> {
        validate_categories(&names)?;
        Ok(CategorySet { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAnnotation {
    pub category: String,
    pub bbox: [f64; 4],
    pub azimuth_deg: f64,
    #[serde(default)]
    pub is_reference: bool,
}

/// One line of a rotation annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneAnnotation {
    pub image_id: String,
    pub objects: Vec<ObjectAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSequence {
    pub tokens: Vec<String>,
}

/// Reference first, then query objects in their input order.
pub fn canonical_order(objects: &[ObjectAnnotation]) -> Result<Vec<&ObjectAnnotation>, RotationError> {
    let refs = objects.iter().filter(|o| o.is_reference).count();
    if refs != 1 {
        return Err(RotationError::Reference(refs));
    }
    let mut out: Vec<&ObjectAnnotation> = objects.iter().filter(|o| o.is_reference).collect();
    out.extend(objects.iter().filter(|o| !o.is_reference));
    Ok(out)
}

pub fn encode_rotation(
    objects: &[ObjectAnnotation],
    categories: &CategorySet,
) -> Result<RotationSequence, RotationError> {
    let ordered = canonical_order(objects)?;
    let mut tokens = Vec::with_capacity(ordered.len() * TOKENS_PER_OBJECT);
    for o in ordered {
        if !categories.contains(&o.category) {
            return Err(RotationError::Category(o.category.clone()));
        }
        if !o.azimuth_deg.is_finite() {
            return Err(RotationError::Azimuth(o.azimuth_deg));
        }
        let [x, y] = bbox_center(o.bbox)?;
        tokens.push(OBJ_START.to_string());
        tokens.push(cat_token(&o.category));
        tokens.push(x_token(x));
        tokens.push(y_token(y));
        tokens.push(az_token(azimuth_bin(o.azimuth_deg)));
        tokens.push(OBJ_END.to_string());
    }
    Ok(RotationSequence { tokens })
}

/// One decoded object block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedObject {
    pub category: String,
    pub center: [u32; 2],
    pub azimuth_bin: u8,
}

/// Decode object blocks; the first block is the reference.
pub fn decode_rotation<S: AsRef<str>>(
    tokens: &[S],
    categories: &CategorySet,
) -> Result<Vec<DecodedObject>, RotationError> {
    if tokens.is_empty() || !tokens.len().is_multiple_of(TOKENS_PER_OBJECT) {
        return Err(RotationError::Decode {
            index: tokens.len(),
            reason: format!(
                "length {} is not a positive multiple of {TOKENS_PER_OBJECT}",
                tokens.len()
            ),
        });
    }
    tokens
        .chunks(TOKENS_PER_OBJECT)
        .enumerate()
        .map(|(b, block)| {
            let at = |i: usize, reason: String| RotationError::Decode {
                index: b * TOKENS_PER_OBJECT + i,
                reason,
            };
            let t: Vec<&str> = block.iter().map(AsRef::as_ref).collect();
            if t[0] != OBJ_START {
                return Err(at(0, format!("expected {OBJ_START}, found {}", t[0])));
            }
            if t[5] != OBJ_END {
                return Err(at(5, format!("expected {OBJ_END}, found {}", t[5])));
            }
            let category = t[1]
                .strip_prefix("CAT_")
                .filter(|c| categories.contains(c))
                .ok_or_else(|| at(1, format!("unknown category token {}", t[1])))?;
            let x = parse_indexed(t[2], "X", IMAGE_SIZE).ok_or_else(|| at(2, format!("bad x token {}", t[2])))?;
            let y = parse_indexed(t[3], "Y", IMAGE_SIZE).ok_or_else(|| at(3, format!("bad y token {}", t[3])))?;
            let m =
                parse_indexed(t[4], "AZ", AZIMUTH_BINS).ok_or_else(|| at(4, format!("bad azimuth token {}", t[4])))?;
            Ok(DecodedObject {
                category: category.to_string(),
                center: [x, y],
                azimuth_bin: m as u8,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obj(category: &str, bbox: [f64; 4], az: f64, is_reference: bool) -> ObjectAnnotation {
        ObjectAnnotation {
            category: category.into(),
            bbox,
            azimuth_deg: az,
            is_reference,
        }
    }

    #[test]
    fn full_frame_center_rounds_up() {
        assert_eq!(bbox_center([0.0, 0.0, 335.0, 335.0]).unwrap(), [168, 168]);
    }

    #[test]
    fn simple_center() {
        // (10+30)/2 = 20, (20+60)/2 = 40
        assert_eq!(bbox_center([10.0, 20.0, 30.0, 60.0]).unwrap(), [20, 40]);
    }

    #[test]
    fn degenerate_and_out_of_range_boxes() {
        assert!(matches!(
            bbox_center([100.0, 100.0, 100.0, 150.0]),
            Err(RotationError::Range { .. })
        ));
        assert!(matches!(
            bbox_center([10.0, 10.0, 336.0, 20.0]),
            Err(RotationError::Range { .. })
        ));
        assert!(matches!(
            bbox_center([-1.0, 10.0, 30.0, 20.0]),
            Err(RotationError::Range { .. })
        ));
    }

    #[test]
    fn azimuth_edges() {
        assert_eq!(azimuth_bin(0.0), 0);
        assert_eq!(azimuth_bin(359.9), 9);
        assert_eq!(azimuth_bin(-36.0), 9);
        assert_eq!(azimuth_bin(36.0), 1);
        assert_eq!(azimuth_bin(-1e-20), 0);
    }

    #[test]
    fn azimuth_sweep_matches_integer_oracle() {
        // whole degrees in [-720, 720]: bin = ((d mod 360) div 36)
        for d in -720i32..=720 {
            let expected = (d.rem_euclid(360) / 36) as u8;
            assert_eq!(azimuth_bin(f64::from(d)), expected, "{d}");
        }
    }

    #[test]
    fn person_and_chair_fixture() {
        let objects = vec![
            obj("furniture", [200.0, 100.0, 300.0, 200.0], 10.0, false),
            obj("person", [50.0, 50.0, 150.0, 250.0], 190.0, true),
        ];
        let seq = encode_rotation(&objects, &CategorySet::default()).unwrap();
        assert_eq!(
            seq.tokens,
            [
                "OBJ_START",
                "CAT_person",
                "X_100",
                "Y_150",
                "AZ_5",
                "OBJ_END",
                "OBJ_START",
                "CAT_furniture",
                "X_250",
                "Y_150",
                "AZ_0",
                "OBJ_END",
            ]
        );
    }

    #[test]
    fn reference_and_category_errors() {
        let cats = CategorySet::default();
        let none = vec![obj("person", [0.0, 0.0, 10.0, 10.0], 0.0, false)];
        assert_eq!(encode_rotation(&none, &cats), Err(RotationError::Reference(0)));
        let two = vec![
            obj("person", [0.0, 0.0, 10.0, 10.0], 0.0, true),
            obj("animal", [0.0, 0.0, 10.0, 10.0], 0.0, true),
        ];
        assert_eq!(encode_rotation(&two, &cats), Err(RotationError::Reference(2)));
        let unknown = vec![obj("dragon", [0.0, 0.0, 10.0, 10.0], 0.0, true)];
        assert_eq!(
            encode_rotation(&unknown, &cats),
            Err(RotationError::Category("dragon".into()))
        );
    }

    #[test]
    fn query_permutation_permutes_blocks() {
        let cats = CategorySet::default();
        let r = obj("person", [50.0, 50.0, 150.0, 250.0], 190.0, true);
        let a = obj("toy", [10.0, 10.0, 20.0, 20.0], 40.0, false);
        let b = obj("plant", [200.0, 10.0, 300.0, 90.0], 300.0, false);
        let s1 = encode_rotation(&[a.clone(), r.clone(), b.clone()], &cats)
            .unwrap()
            .tokens;
        let s2 = encode_rotation(&[b, a, r], &cats).unwrap().tokens;
        assert_eq!(&s1[..6], &s2[..6]);
        assert_eq!(&s1[6..12], &s2[12..18]);
        assert_eq!(&s1[12..18], &s2[6..12]);
    }

    fn any_object() -> impl Strategy<Value = ObjectAnnotation> {
        (
            0usize..18,
            0u32..335,
            0u32..335,
            1u32..100,
            1u32..100,
            -1000.0..1000.0f64,
        )
            .prop_map(|(c, x0, y0, w, h, az)| ObjectAnnotation {
                category: DEFAULT_CATEGORIES[c].to_string(),
                bbox: [
                    f64::from(x0),
                    f64::from(y0),
                    f64::from((x0 + w).min(335).max(x0 + 1)),
                    f64::from((y0 + h).min(335).max(y0 + 1)),
                ],
                azimuth_deg: az,
                is_reference: false,
            })
    }

    proptest! {
        #[test]
        fn azimuth_is_periodic(a in -1e4..1e4f64, turns in -5i32..5) {
            let shifted = a + 360.0 * f64::from(turns);
            // skip inputs within float noise of a bin edge
            let frac = (a.rem_euclid(36.0) / 36.0).min(1.0 - a.rem_euclid(36.0) / 36.0);
            prop_assume!(frac > 1e-9);
            prop_assert_eq!(azimuth_bin(a), azimuth_bin(shifted));
        }

        #[test]
        fn round_trip_and_reference_first(
            mut objects in prop::collection::vec(any_object(), 1..6),
            ref_idx in 0usize..6,
        ) {
            let ref_idx = ref_idx % objects.len();
            objects[ref_idx].is_reference = true;
            let cats = CategorySet::default();
            let seq = encode_rotation(&objects, &cats).unwrap();
            prop_assert_eq!(seq.tokens.len(), objects.len() * TOKENS_PER_OBJECT);
            let decoded = decode_rotation(&seq.tokens, &cats).unwrap();
            let ordered = canonical_order(&objects).unwrap();
            prop_assert_eq!(&ordered[0].category, &objects[ref_idx].category);
            for (d, o) in decoded.iter().zip(ordered) {
                prop_assert_eq!(&d.category, &o.category);
                prop_assert_eq!(d.center, bbox_center(o.bbox).unwrap());
                prop_assert_eq!(d.azimuth_bin, azimuth_bin(o.azimuth_deg));
            }
        }
    }
}
