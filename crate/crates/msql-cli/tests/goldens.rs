//! Transpilation goldens: expanded queries compare equal, as ASTs, to
//! hand-written expansions, plain SQL passes through untouched, and
//! expansion is a fixpoint that leaves no extension syntax behind.

mod common;

use msql::rewrite::uses_extensions;
use msql::syntax::{parse_query, print_query, Query};

fn transpiled(name: &str) -> Query {
    let catalog = common::fixture_catalog();
    msql::transpile(&common::fixture_query(name), &catalog).expect(name)
}

fn handwritten(name: &str) -> Query {
    let text =
        std::fs::read_to_string(common::fixture(&format!("expected/{name}.sql"))).expect(name);
    parse_query(&text).expect(name)
}

#[test]
fn profit_margin_expansion_matches_handwritten() {
    let got = transpiled("profit_margin_by_product");
    let want = handwritten("profit_margin_by_product");
    assert_eq!(got, want, "expanded to:\n{}", print_query(&got));
}

#[test]
fn year_over_year_expansion_matches_handwritten() {
    let got = transpiled("year_over_year_ratio");
    let want = handwritten("year_over_year_ratio");
    assert_eq!(got, want, "expanded to:\n{}", print_query(&got));
}

#[test]
fn plain_queries_pass_through_unchanged() {
    for name in [
        "above_average_subquery",
        "above_average_self_join",
        "above_average_window",
    ] {
        let original = parse_query(&common::fixture_query(name)).unwrap();
        assert_eq!(transpiled(name), original, "{name} should be untouched");
    }
}

#[test]
fn expansion_is_a_fixpoint_without_extension_syntax() {
    let catalog = common::fixture_catalog();
    for name in common::QUERY_FIXTURES {
        let expanded = transpiled(name);
        assert!(
            !uses_extensions(&expanded),
            "{name} kept extension syntax:\n{}",
            print_query(&expanded)
        );
        let again = msql::transpile(&print_query(&expanded), &catalog).expect(name);
        assert_eq!(again, expanded, "{name} not a fixpoint");
    }
}
