mod common;

use common::gen::ops;
use common::props;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn operators_preserve_tree_invariants(ops in ops(16)) {
        props::tree_invariants(&ops)?;
    }

    #[test]
    fn versions_are_monotone_and_stamp_touched_assets(ops in ops(16)) {
        props::version_audit(&ops)?;
    }

    #[test]
    fn traces_account_for_every_clone(ops in ops(12), asset in any::<usize>(), target in any::<usize>()) {
        props::trace_accounting(&ops, asset, target)?;
    }

    #[test]
    fn move_asset_equals_clone_then_remove(ops in ops(12), asset in any::<usize>(), target in any::<usize>()) {
        props::move_asset_is_clone_remove(&ops, asset, target)?;
    }

    #[test]
    fn move_feature_equals_clone_then_remove(ops in ops(12), f in any::<usize>(), target in any::<usize>()) {
        props::move_feature_is_clone_remove(&ops, f, target)?;
    }

    #[test]
    fn second_propagation_is_a_no_op(ops in ops(12), t in any::<usize>(), ft in any::<usize>()) {
        props::propagation_idempotent(&ops, t, ft)?;
    }

    #[test]
    fn removals_cascade_exactly(ops in ops(12), asset in any::<usize>(), f in any::<usize>()) {
        props::cascades(&ops, asset, f)?;
    }
}
