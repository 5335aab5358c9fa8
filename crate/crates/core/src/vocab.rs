//! Expanded spatial-token vocabularies.
//!
//! Token strings follow one grammar: an upper-case tag, an underscore and an
//! index or name (`X_17`, `YAW_3`, `CAT_person`, `CONF_9`). Sequence markers
//! are bare upper-case words.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::IMAGE_SIZE;

pub const POSE_START: &str = "POSE_START";
pub const POSE_END: &str = "POSE_END";
pub const ORIENT_START: &str = "ORIENT_START";
pub const ORIENT_END: &str = "ORIENT_END";
pub const OBJ_START: &str = "OBJ_START";
pub const OBJ_END: &str = "OBJ_END";

/// Keypoint markers in sequence order.
pub const KEYPOINT_MARKERS: [&str; 4] = ["KP_R_SHOULDER", "KP_L_SHOULDER", "KP_R_HIP", "KP_L_HIP"];

pub const YAW_BINS: u32 = 8;
pub const TORSO_BINS: u32 = 4;
pub const CONF_BINS: u32 = 10;
pub const AZIMUTH_BINS: u32 = 10;
pub const CATEGORY_COUNT: usize = 18;

pub const DEFAULT_CATEGORIES: [&str; CATEGORY_COUNT] = [
    "person",
    "animal",
    "furniture",
    "vehicle",
    "appliance",
    "electronics",
    "sports",
    "food",
    "kitchenware",
    "accessory",
    "outdoor",
    "indoor",
    "tool",
    "toy",
    "plant",
    "container",
    "sign",
    "other",
];

pub fn x_token(i: u32) -> String {
    format!("X_{i}")
}

pub fn y_token(j: u32) -> String {
    format!("Y_{j}")
}

pub fn yaw_token(k: u8) -> String {
    format!("YAW_{k}")
}

pub fn torso_token(w: u8) -> String {
    format!("TORSO_{w}")
}

pub fn conf_token(c: u8) -> String {
    format!("CONF_{c}")
}

pub fn az_token(m: u8) -> String {
    format!("AZ_{m}")
}

pub fn cat_token(name: &str) -> String {
    format!("CAT_{name}")
}

/// Parse `<tag>_<n>` into `n`, requiring it to be below `limit`.
pub fn parse_indexed(token: &str, tag: &str, limit: u32) -> Option<u32> {
    let rest = token.strip_prefix(tag)?.strip_prefix('_')?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) || (rest.len() > 1 && rest.starts_with('0')) {
        return None;
    }
    rest.parse().ok().filter(|&n| n < limit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabVariant {
    EmbCoco,
    EmbVitpose,
    Rotation,
}

impl VocabVariant {
    pub fn expected_len(self) -> usize {
        match self {
            VocabVariant::EmbCoco => 692,
            VocabVariant::EmbVitpose | VocabVariant::Rotation => 702,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VocabVariant::EmbCoco => "emb_coco",
            VocabVariant::EmbVitpose => "emb_vitpose",
            VocabVariant::Rotation => "rotation",
        }
    }
}

impl std::str::FromStr for VocabVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "emb_coco" => Ok(VocabVariant::EmbCoco),
            "emb_vitpose" => Ok(VocabVariant::EmbVitpose),
            "rotation" => Ok(VocabVariant::Rotation),
            other => Err(format!("unknown vocabulary variant {other:?}")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("unknown token id {0}")]
    UnknownId(u32),
    #[error("category set must hold {CATEGORY_COUNT} distinct names: {0}")]
    Categories(String),
    #[error("malformed vocabulary: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub token: String,
    pub id: u32,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    variant: VocabVariant,
    base_offset: u32,
    entries: Vec<VocabEntry>,
}

/// An immutable token vocabulary with contiguous ids starting at `base_offset`.
#[derive(Debug, Clone)]
pub struct TokenVocab {
    variant: VocabVariant,
    base_offset: u32,
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

/// Validate a user category list: exactly 18 distinct tokenizable names.
pub fn validate_categories<S: AsRef<str>>(names: &[S]) -> Result<(), VocabError> {
    if names.len() != CATEGORY_COUNT {
        return Err(VocabError::Categories(format!("got {}", names.len())));
    }
    let mut seen = std::collections::HashSet::new();
    for n in names {
        let n = n.as_ref();
        if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(VocabError::Categories(format!("invalid name {n:?}")));
        }
        if !seen.insert(n) {
            return Err(VocabError::Categories(format!("duplicate name {n:?}")));
        }
    }
    Ok(())
}

fn group_tokens(variant: VocabVariant, categories: &[String]) -> Vec<String> {
    let mut out: Vec<String> = (0..IMAGE_SIZE).map(x_token).collect();
    out.extend((0..IMAGE_SIZE).map(y_token));
    match variant {
        VocabVariant::EmbCoco | VocabVariant::EmbVitpose => {
            out.extend((0..YAW_BINS as u8).map(yaw_token));
            out.extend((0..TORSO_BINS as u8).map(torso_token));
            out.extend([POSE_START, POSE_END, ORIENT_START, ORIENT_END].map(String::from));
            out.extend(KEYPOINT_MARKERS.map(String::from));
            if variant == VocabVariant::EmbVitpose {
                out.extend((0..CONF_BINS as u8).map(conf_token));
            }
        }
        VocabVariant::Rotation => {
            out.extend(categories.iter().map(|c| cat_token(c)));
            out.extend((0..AZIMUTH_BINS as u8).map(az_token));
            out.extend([OBJ_START, OBJ_END].map(String::from));
        }
    }
    out
}

impl TokenVocab {
    /// Build a vocabulary with the default categories and ids from 0.
    pub fn build(variant: VocabVariant) -> TokenVocab {
        Self::build_with(variant, 0, &DEFAULT_CATEGORIES.map(String::from)).expect("default categories are valid")
    }

    pub fn build_with(
        variant: VocabVariant,
        base_offset: u32,
        categories: &[String],
    ) -> Result<TokenVocab, VocabError> {
        validate_categories(categories)?;
        Self::from_tokens(variant, base_offset, group_tokens(variant, categories))
    }

    fn from_tokens(variant: VocabVariant, base_offset: u32, tokens: Vec<String>) -> Result<TokenVocab, VocabError> {
        if tokens.len() != variant.expected_len() {
            return Err(VocabError::Malformed(format!(
                "{} vocabulary has {} tokens, expected {}",
                variant.as_str(),
                tokens.len(),
                variant.expected_len()
            )));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            let id = base_offset
                .checked_add(i as u32)
                .ok_or_else(|| VocabError::Malformed("id overflow".into()))?;
            if ids.insert(t.clone(), id).is_some() {
                return Err(VocabError::Malformed(format!("duplicate token {t:?}")));
            }
        }
        Ok(TokenVocab {
            variant,
            base_offset,
            tokens,
            ids,
        })
    }

    pub fn variant(&self) -> VocabVariant {
        self.variant
    }

    pub fn base_offset(&self) -> u32 {
        self.base_offset
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        let idx = id.checked_sub(self.base_offset)? as usize;
        self.tokens.get(idx).map(String::as_str)
    }

    /// Category names carried by a rotation vocabulary, in id order.
    pub fn categories(&self) -> Vec<&str> {
        self.tokens.iter().filter_map(|t| t.strip_prefix("CAT_")).collect()
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>, VocabError> {
        tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| VocabError::UnknownToken(t.as_ref().to_string()))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>, VocabError> {
        ids.iter()
            .map(|&id| self.token(id).map(String::from).ok_or(VocabError::UnknownId(id)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            variant: self.variant,
            base_offset: self.base_offset,
            entries: self
                .tokens
                .iter()
                .enumerate()
                .map(|(i, t)| VocabEntry {
                    token: t.clone(),
                    id: self.base_offset + i as u32,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("vocab serializes");
        s.push('\n');
        s
    }

    /// Parse and re-validate a vocabulary file: id contiguity, sizes and group layout.
    pub fn from_json(text: &str) -> Result<TokenVocab, VocabError> {
        let file: VocabFile = serde_json::from_str(text).map_err(|e| VocabError::Malformed(e.to_string()))?;
        for (i, e) in file.entries.iter().enumerate() {
            if u64::from(e.id) != u64::from(file.base_offset) + i as u64 {
                return Err(VocabError::Malformed(format!(
                    "entry {i} ({:?}) has id {}, expected {}",
                    e.token,
                    e.id,
                    u64::from(file.base_offset) + i as u64
                )));
            }
        }
        let tokens: Vec<String> = file.entries.into_iter().map(|e| e.token).collect();
        let categories: Vec<String> = tokens
            .iter()
            .filter_map(|t| t.strip_prefix("CAT_").map(String::from))
            .collect();
        let cats = if file.variant == VocabVariant::Rotation {
            categories
        } else {
            DEFAULT_CATEGORIES.map(String::from).to_vec()
        };
        let expected = Self::build_with(file.variant, file.base_offset, &cats)?;
        if expected.tokens != tokens {
            return Err(VocabError::Malformed(format!(
                "token groups do not match the {} layout",
                file.variant.as_str()
            )));
        }
        Ok(expected)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
