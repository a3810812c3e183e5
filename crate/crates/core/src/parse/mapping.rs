//! Folder and file mapping documents.
//!
//! `.vp-folder` lists one feature per line and maps the containing folder.
//! `.vp-files` rows read `file<TAB>FEATURE[,FEATURE..]` and map sibling files.

use crate::error::{Error, Result};
use crate::model::{is_valid_asset_name, is_valid_feature_name};

pub const FEATURE_MODEL_EXT: &str = ".vp-project";
pub const FOLDER_MAPPING_EXT: &str = ".vp-folder";
pub const FILES_MAPPING_EXT: &str = ".vp-files";

/// Platform meta files recognised by file name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetaFile {
    FeatureModel,
    FolderMapping,
    FilesMapping,
}

pub fn meta_file_kind(file_name: &str) -> Option<MetaFile> {
    if file_name.ends_with(FEATURE_MODEL_EXT) {
        Some(MetaFile::FeatureModel)
    } else if file_name.ends_with(FOLDER_MAPPING_EXT) {
        Some(MetaFile::FolderMapping)
    } else if file_name.ends_with(FILES_MAPPING_EXT) {
        Some(MetaFile::FilesMapping)
    } else {
        None
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn feature(name: &str, line: usize) -> Result<String> {
    let name = name.trim();
    if is_valid_feature_name(name) {
        Ok(name.to_string())
    } else {
        Err(Error::Malformed {
            line,
            reason: format!("invalid feature name `{name}`"),
        })
    }
}

pub fn parse_folder_mapping(text: &str) -> Result<Vec<String>> {
    let features = content_lines(text)
        .map(|(n, l)| feature(l, n))
        .collect::<Result<Vec<_>>>()?;
    if features.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(features)
}

pub fn parse_files_mapping(text: &str) -> Result<Vec<(String, Vec<String>)>> {
    let mut rows = Vec::new();
    for (n, line) in content_lines(text) {
        let Some((file, features)) = line.split_once('\t') else {
            return Err(Error::Malformed {
                line: n,
                reason: "expected `file<TAB>features`".into(),
            });
        };
        if !is_valid_asset_name(file) || file.contains('\t') {
            return Err(Error::Malformed {
                line: n,
                reason: format!("invalid file name `{file}`"),
            });
        }
        let features = features
            .split(',')
            .map(|f| feature(f, n))
            .collect::<Result<Vec<_>>>()?;
        rows.push((file.to_string(), features));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(rows)
}

pub fn serialize_folder_mapping(features: &[String]) -> String {
    features.iter().map(|f| format!("{f}\n")).collect()
}

pub fn serialize_files_mapping(rows: &[(String, Vec<String>)]) -> String {
    rows.iter().map(|(file, fs)| format!("{file}\t{}\n", fs.join(","))).collect()
}
