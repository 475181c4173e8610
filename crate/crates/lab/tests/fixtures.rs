use std::path::Path;

#[test]
fn frozen_fixtures_match() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let outcomes = gaplab::fixtures::check(&dir, 2, &[]).expect("fixtures run");
    assert!(!outcomes.is_empty());
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed()).collect();
    assert!(failed.is_empty(), "{:#?}", failed);
}
