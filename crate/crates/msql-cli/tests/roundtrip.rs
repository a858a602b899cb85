//! parse ∘ print is the identity on ASTs: the fixture corpus and randomly
//! generated trees all survive a print/reparse cycle unchanged.

mod common;

use common::gen;
use msql::syntax::{parse_query, parse_script, print_query, print_statement};
use proptest::prelude::*;

#[test]
fn fixture_queries_roundtrip() {
    for name in common::QUERY_FIXTURES {
        let query = parse_query(&common::fixture_query(name)).expect(name);
        let printed = print_query(&query);
        let reparsed = parse_query(&printed).unwrap_or_else(|e| panic!("reparse {name}: {e}"));
        assert_eq!(reparsed, query, "{name} printed as:\n{printed}");
    }
}

#[test]
fn schema_statements_roundtrip() {
    let ddl = std::fs::read_to_string(common::fixture("schema.sql")).unwrap();
    for stmt in parse_script(&ddl).unwrap() {
        let printed = print_statement(&stmt);
        let reparsed = parse_script(&printed).unwrap();
        assert_eq!(reparsed, vec![stmt], "printed as:\n{printed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn random_asts_roundtrip(query in gen::arb_query()) {
        let printed = print_query(&query);
        let reparsed = match parse_query(&printed) {
            Ok(q) => q,
            Err(e) => return Err(TestCaseError::fail(format!("reparse `{printed}`: {e}"))),
        };
        prop_assert_eq!(&reparsed, &query, "printed form:\n{}", printed);
    }
}
