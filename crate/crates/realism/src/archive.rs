//! Versioned, self-describing JSON model archives.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use realism_core::features::FeatureFamily;
use realism_core::generators::GeneratorModel;
use realism_core::learn::ClassifierModel;

use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_json};

pub const FORMAT: &str = "realism-archive";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchiveKind {
    Generator,
    Detector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archive<T> {
    pub format: String,
    pub version: u32,
    pub kind: ArchiveKind,
    /// Library version that produced the payload.
    pub core_version: String,
    pub payload: T,
}

/// A trained classifier together with the feature family it consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedDetector {
    pub name: String,
    pub family: FeatureFamily,
    pub model: ClassifierModel,
}

pub trait Archivable: Serialize + DeserializeOwned {
    const KIND: ArchiveKind;
}

impl Archivable for GeneratorModel {
    const KIND: ArchiveKind = ArchiveKind::Generator;
}

impl Archivable for TrainedDetector {
    const KIND: ArchiveKind = ArchiveKind::Detector;
}

pub fn save<T: Archivable>(path: &Path, payload: &T) -> CliResult<()> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        format: &'static str,
        version: u32,
        kind: ArchiveKind,
        core_version: &'static str,
        payload: &'a T,
    }
    write_json(
        path,
        &Borrowed {
            format: FORMAT,
            version: VERSION,
            kind: T::KIND,
            core_version: realism_core::VERSION,
            payload,
        },
    )
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
    kind: ArchiveKind,
}

/// Checks the header before decoding the payload so a wrong file type or
/// version gets a clear message.
pub fn load<T: Archivable>(path: &Path) -> CliResult<T> {
    let value: serde_json::Value = read_json(path)?;
    let header: Header = serde_json::from_value(value.clone())
        .map_err(|e| CliError::validation(format!("{}: not a model archive: {e}", path.display())))?;
    if header.format != FORMAT {
        return Err(CliError::validation(format!(
            "{}: unknown archive format `{}`",
            path.display(),
            header.format
        )));
    }
    if header.version != VERSION {
        return Err(CliError::validation(format!(
            "{}: archive version {} is not supported (expected {VERSION})",
            path.display(),
            header.version
        )));
    }
    if header.kind != T::KIND {
        return Err(CliError::validation(format!(
            "{}: archive holds a {:?} model, expected {:?}",
            path.display(),
            header.kind,
            T::KIND
        )));
    }
    let archive: Archive<T> =
        serde_json::from_value(value).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok(archive.payload)
}
