#[path = "support/sch_oracle.rs"]
mod support;

use std::collections::BTreeSet;

use oppsim_core::Thresholds;

#[test]
fn sch_filter_matches_trace_oracle() {
    support::check_equivalence(10_000, 42).unwrap();
}

#[test]
fn oracle_reproduces_hand_trace() {
    // levels a:0, b:1, c:1, d:1 in group 0; O = 2 -> {a} plus one of {b,c,d}
    let tables = support::Tables {
        item_levels: vec![vec![Some(vec![0, 1, 1, 1])]],
        channel_levels: vec![vec![Some(vec![5])]],
    };
    let s: BTreeSet<u32> = [0, 1, 2, 3].into();
    let trace = support::oracle(&s, 2, 0, &[0; 4], &tables, Thresholds { channel: 3, item: 3 });
    assert_eq!(trace.fixed, [0].into());
    assert_eq!(trace.pool, [1, 2, 3].into());
    assert_eq!(trace.random_slots, 1);
}
