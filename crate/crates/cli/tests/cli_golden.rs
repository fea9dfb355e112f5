mod common;

use common::{check, INVOCATIONS};

#[test]
fn invocations_match_golden_files() {
    let failures: Vec<String> = INVOCATIONS.iter().filter_map(|inv| check(inv).err()).collect();
    assert!(failures.is_empty(), "{}", failures.join("\n\n"));
}

#[test]
fn every_exit_code_is_covered() {
    for code in 0..=2 {
        assert!(INVOCATIONS.iter().any(|inv| inv.exit == code), "no invocation exits {code}");
    }
}
