//! Semantic properties checked on randomized small datasets: sugar
//! equivalence, modifier folding, plain-SQL passthrough, expansion
//! fixpoints, and grain preservation under join fanout.

mod common;

use common::gen;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn aggregate_sugar_equals_visible(
        orders in gen::orders(),
        customers in gen::customers(),
        formula in gen::measure_formula(),
        keys in gen::group_keys(),
        filter in gen::where_clause(),
        rollup in any::<bool>(),
    ) {
        let catalog = common::catalog_from(gen::DDL);
        let db = common::db_with(orders, customers);
        common::check_aggregate_is_visible(&catalog, &db, formula, keys, &filter, rollup);
    }

    #[test]
    fn modifier_lists_fold_like_nested_applications(
        orders in gen::orders(),
        customers in gen::customers(),
        formula in gen::measure_formula(),
        m1 in gen::modifier(),
        m2 in gen::modifier(),
        keys in gen::group_keys(),
        filter in gen::where_clause(),
    ) {
        let catalog = common::catalog_from(gen::DDL);
        let db = common::db_with(orders, customers);
        common::check_modifier_fold(&catalog, &db, formula, &m1, &m2, keys, &filter);
    }

    #[test]
    fn plain_sql_passes_through_the_pipeline(
        orders in gen::orders(),
        customers in gen::customers(),
        sql in gen::plain_query(),
    ) {
        let catalog = common::catalog_from(gen::DDL);
        let db = common::db_with(orders, customers);
        common::check_plain_passthrough(&catalog, &db, &sql);
    }

    #[test]
    fn expansion_is_extension_free_and_idempotent(
        formula in gen::measure_formula(),
        m1 in gen::modifier(),
        m2 in gen::modifier(),
        keys in gen::group_keys(),
        filter in gen::where_clause(),
    ) {
        let catalog = common::catalog_from(gen::DDL);
        let source = format!("(SELECT *, {formula} AS MEASURE m FROM Orders) AS o");
        for sql in [
            format!("SELECT {keys}, AGGREGATE(m) AS v FROM {source} {filter} GROUP BY {keys}"),
            format!("SELECT {keys}, m AT ({m1} {m2}) AS v FROM {source} {filter} GROUP BY {keys}"),
        ] {
            common::check_expansion_fixpoint(&catalog, &sql);
        }
    }

    #[test]
    fn join_fanout_preserves_measure_grain(
        orders in gen::orders(),
        customers in gen::customers(),
        copies in proptest::collection::vec(1usize..4, 1..50),
    ) {
        let catalog = common::catalog_from(gen::DDL);
        common::check_grain_preservation(&catalog, &orders, &customers, &copies);
    }
}
