use std::fmt;

use vpt_core::actv::ActvError;
use vpt_core::curriculum::CurriculumError;
use vpt_core::embodiment::EmbodimentError;
use vpt_core::evalharness::EvalError;
use vpt_core::jsonl::JsonlError;
use vpt_core::probe::ProbeError;
use vpt_core::rotation::RotationError;
use vpt_core::scene::SceneError;
use vpt_core::stats::StatsError;
use vpt_core::vocab::VocabError;

/// A data error: printed as `error[Class]: message`, exit status 1.
#[derive(Debug)]
pub struct CliError {
    pub class: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(class: &'static str, message: impl Into<String>) -> Self {
        Self {
            class,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.class, self.message)
    }
}

macro_rules! classify {
    ($ty:ty, |$e:ident| $body:expr) => {
        impl From<$ty> for CliError {
            fn from(owned: $ty) -> Self {
                let class = {
                    #[allow(unused_variables)]
                    let $e = &owned;
                    $body
                };
                CliError::new(class, owned.to_string())
            }
        }
    };
}

classify!(std::io::Error, |e| "IoError");
classify!(serde_json::Error, |e| "ParseError");

classify!(JsonlError, |e| match e {
    JsonlError::Io { .. } => "IoError",
    JsonlError::Parse { .. } => "ParseError",
});

classify!(SceneError, |e| match e {
    SceneError::Collinear { .. } => "CollinearError",
    SceneError::Config(_) => "ConfigError",
    SceneError::Invalid { .. } => "SceneError",
});

classify!(EmbodimentError, |e| embodiment_class(e));

fn embodiment_class(e: &EmbodimentError) -> &'static str {
    match e {
        EmbodimentError::Degenerate => "DegenerateError",
        EmbodimentError::Range { .. } => "RangeError",
        EmbodimentError::Variant(_) => "VariantError",
        EmbodimentError::Decode { .. } => "DecodeError",
    }
}

classify!(VocabError, |e| match e {
    VocabError::UnknownToken(_) | VocabError::UnknownId(_) => "UnknownTokenError",
    VocabError::Categories(_) => "CategoryError",
    VocabError::Malformed(_) => "VocabFormatError",
});

classify!(RotationError, |e| rotation_class(e));

fn rotation_class(e: &RotationError) -> &'static str {
    match e {
        RotationError::Range { .. } | RotationError::Azimuth(_) => "RangeError",
        RotationError::Category(_) | RotationError::Categories(_) => "CategoryError",
        RotationError::Reference(_) => "ReferenceError",
        RotationError::Decode { .. } => "DecodeError",
    }
}

classify!(CurriculumError, |e| match e {
    CurriculumError::Range(_) | CurriculumError::Share(_) | CurriculumError::EmptyBatch => "RangeError",
    CurriculumError::InsufficientData(_) => "InsufficientDataError",
    CurriculumError::Template(_) => "TemplateError",
    CurriculumError::Embodiment { source, .. } => embodiment_class(source),
    CurriculumError::Rotation { source, .. } => rotation_class(source),
});

classify!(EvalError, |e| match e {
    EvalError::DuplicateTranscript { .. } => "DuplicateTranscriptError",
    EvalError::MissingItem(_) => "MissingItemError",
    EvalError::DuplicateItem(_) => "DuplicateItemError",
    EvalError::MismatchedBenchmarks { .. } => "MismatchedBenchmarksError",
});

classify!(ActvError, |e| match e {
    ActvError::Io(_) => "IoError",
    ActvError::BadMagic(_) | ActvError::Version(_) | ActvError::Length { .. } => "FormatError",
    ActvError::Shape { .. } => "ShapeError",
});

classify!(ProbeError, |e| match e {
    ProbeError::Shape(_) => "ShapeError",
    ProbeError::NonFinite { .. } => "NonFiniteError",
    ProbeError::MissingCondition(_) => "MissingConditionError",
    ProbeError::EmptyUnitSet => "EmptyUnitSetError",
    ProbeError::UnknownUnit(_) => "UnknownUnitError",
    ProbeError::Stats(s) => stats_class(s),
});

fn stats_class(e: &StatsError) -> &'static str {
    match e {
        StatsError::InsufficientSamples(..) => "InsufficientSamplesError",
        StatsError::ZeroVariance => "ZeroVarianceError",
        StatsError::NonFinite => "NonFiniteError",
    }
}
