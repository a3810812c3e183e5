//! Asset tree and feature model data types.

mod asset;
mod feature;

pub use asset::{containable, Asset, AssetId, AssetKind, AssetPath, NewAsset};
pub use feature::{
    Feature, FeatureId, FeatureModel, FeaturePath, GroupKind, FeatureShape, UNASSIGNED,
};

const RESERVED_FEATURE_WORDS: [&str; 5] = ["true", "false", "or", "xor", "and"];

/// Lexical rule for feature names surfaced by any parser: non-empty, no
/// whitespace, no brackets, separators or formula operators.
pub fn is_valid_feature_name(name: &str) -> bool {
    !name.is_empty()
        && !RESERVED_FEATURE_WORDS.contains(&name)
        && name
            .chars()
            .all(|c| !c.is_whitespace() && !c.is_control() && !"[](),|&!?/#".contains(c))
}

/// Asset names must be usable as path segments and as TSV cells.
pub fn is_valid_asset_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains('/')
        && !name.chars().any(|c| c.is_control())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_name_lexical_rule() {
        for ok in ["DIV", "Graph_View", "num-type", "ä"] {
            assert!(is_valid_feature_name(ok), "{ok}");
        }
        for bad in ["", "a b", "a\tb", "x[1]", "a,b", "true", "xor", "a|b", "a/b"] {
            assert!(!is_valid_feature_name(bad), "{bad:?}");
        }
    }

    #[test]
    fn asset_name_rule() {
        assert!(is_valid_asset_name("Operators.js"));
        assert!(is_valid_asset_name("DIV#1"));
        assert!(!is_valid_asset_name("a/b"));
        assert!(!is_valid_asset_name(".."));
        assert!(!is_valid_asset_name("tab\there"));
    }
}
