//! Toolkit for visual perspective-taking data.
//!
//! Builds embodiment and rotation token sequences, the expanded token
//! vocabularies, annealed curriculum corpora and synthetic left/right
//! benchmarks with exact allocentric ground truth. Also scores model
//! transcripts by alignment condition and runs the hidden-unit
//! feature-selectivity analysis over dumped activations.

pub mod actv;
pub mod curriculum;
pub mod embodiment;
pub mod evalharness;
pub mod jsonl;
pub mod probe;
pub mod rotation;
pub mod scene;
pub mod stats;
pub mod vocab;

pub use scene::{Alignment, Side};

/// Side length of the square image space all pixel coordinates live in.
pub const IMAGE_SIZE: u32 = 336;

/// Largest valid pixel coordinate.
pub const MAX_PIXEL: u32 = IMAGE_SIZE - 1;
