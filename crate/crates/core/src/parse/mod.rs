//! Readers and writers for the on-disk formats: feature model files, mapping
//! files and in-source annotations.

pub mod annotations;
pub mod feature_model;
pub mod mapping;
pub mod structure;

pub use annotations::{parse_annotations, AnnotationSpan, SpanKind};
pub use feature_model::{parse_feature_model, serialize_feature_model};
pub use mapping::{
    meta_file_kind, parse_files_mapping, parse_folder_mapping, serialize_files_mapping,
    serialize_folder_mapping, MetaFile,
};
pub use structure::build_file_structure;
